export { Checkpoint, CheckpointError, loadCheckpoint } from "./checkpoint.js";
export type { CheckpointConfig, TokenizerSpec } from "./checkpoint.js";
export { EngineError, pruneWithEngine } from "./engine.js";
export type { PruneFlags, PruneOutcome } from "./engine.js";
export { buildBundle, extractBundle } from "./extract.js";
export type { ExtractionManifest, ExtractionSummary } from "./extract.js";
export { FrontendError, encodeAudio, frameFeatures, strideReduce } from "./frontend.js";
export { makeCheckpoint, makeWav, rng } from "./fixture.js";
export { SafetensorsError, readSafetensors, writeSafetensors } from "./safetensors.js";
export type { Tensor } from "./safetensors.js";
export {
  SpbError,
  decodeBundle,
  encodeBundle,
  readBundle,
  validateBundle,
  writeBundle,
} from "./spb.js";
export type { SpbBundle, SpbMatrix } from "./spb.js";
export { TokenizerError, embedTokens, tokenize } from "./tokenizer.js";
export type { TokenSpan } from "./tokenizer.js";
export { WavError, readWav, writeWavPcm16 } from "./wav.js";
export type { AudioClip } from "./wav.js";
