/**
 * Bundle extraction: checkpoint + audio + text query -> .spb file.
 */

import { Checkpoint, loadCheckpoint } from "./checkpoint.js";
import { encodeAudio } from "./frontend.js";
import { embedTokens, tokenize } from "./tokenizer.js";
import { SpbBundle, writeBundle } from "./spb.js";
import { readWav } from "./wav.js";

export interface ExtractionManifest {
  checkpoint: string; // checkpoint directory
  audio: string;      // WAV file path
  query: string;      // user text query (no prompt scaffolding)
  layer?: number;     // transformer layer for Q/K export, default 0
  output: string;     // destination .spb path
}

export interface ExtractionSummary {
  output: string;
  nTokens: number;
  nTextTokens: number;
  tokensPerSecond: number;
  embedDim: number;
  projDim: number;
  layer: number;
  bytes: number;
}

export function buildBundle(
  checkpoint: Checkpoint,
  manifest: Pick<ExtractionManifest, "audio" | "query" | "layer">,
): SpbBundle {
  const layer = manifest.layer ?? 0;
  const clip = readWav(manifest.audio);
  const speech = encodeAudio(clip, checkpoint);

  const spans = tokenize(checkpoint.tokenizer, manifest.query);
  const text = embedTokens(checkpoint.tensor("embed_tokens.weight"),
                           spans.map((s) => s.id));

  const { wq, wk } = checkpoint.attentionProjections(layer);
  return {
    speech: { rows: speech.rows, cols: speech.cols, data: speech.data },
    text: { rows: text.rows, cols: text.cols, data: text.data },
    wq: { rows: wq.shape[0], cols: wq.shape[1], data: wq.data },
    wk: { rows: wk.shape[0], cols: wk.shape[1], data: wk.data },
    tokensPerSecond: checkpoint.tokensPerSecond(),
    extraMetadata: {
      model: checkpoint.config.model_type,
      layer,
      query: manifest.query,
    },
  };
}

export function extractBundle(manifest: ExtractionManifest): ExtractionSummary {
  const checkpoint = loadCheckpoint(manifest.checkpoint);
  const bundle = buildBundle(checkpoint, manifest);
  const bytes = writeBundle(manifest.output, bundle);
  return {
    output: manifest.output,
    nTokens: bundle.speech.rows,
    nTextTokens: bundle.text.rows,
    tokensPerSecond: bundle.tokensPerSecond,
    embedDim: bundle.speech.cols,
    projDim: bundle.wq.cols,
    layer: manifest.layer ?? 0,
    bytes,
  };
}
