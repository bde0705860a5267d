/**
 * Audio front-end: windowed band-energy features followed by two stride-2
 * reductions and a linear projection into the embedding space.
 *
 * Geometry mirrors the usual speech-encoder chain: 25 ms windows at a
 * 10 ms hop give 100 feature frames per second; a stride-2 convolution
 * stage and a stride-2 pooling stage leave one embedding per 40 ms, i.e.
 * 25 embeddings per second of audio.
 */

import { AudioClip } from "./wav.js";
import { Checkpoint, CheckpointError } from "./checkpoint.js";

export class FrontendError extends Error {}

/** Log band-energy features, one row per hop. */
export function frameFeatures(
  clip: AudioClip,
  frameMs: number,
  hopMs: number,
  nMels: number,
): Float64Array[] {
  const win = Math.round((clip.sampleRate * frameMs) / 1000);
  const hop = Math.round((clip.sampleRate * hopMs) / 1000);
  if (win < nMels) {
    throw new FrontendError(`window of ${win} samples cannot fill ${nMels} bands`);
  }
  if (clip.samples.length < win) {
    throw new FrontendError(
      `audio too short: ${clip.samples.length} samples < one ${win}-sample window`,
    );
  }
  const nFrames = Math.floor((clip.samples.length - win) / hop) + 1;
  const frames: Float64Array[] = [];
  for (let f = 0; f < nFrames; f++) {
    const start = f * hop;
    const feat = new Float64Array(nMels);
    for (let m = 0; m < nMels; m++) {
      const lo = start + Math.floor((m * win) / nMels);
      const hi = start + Math.floor(((m + 1) * win) / nMels);
      let energy = 0;
      for (let i = lo; i < hi; i++) energy += clip.samples[i] * clip.samples[i];
      feat[m] = Math.log(1e-8 + energy / Math.max(1, hi - lo));
    }
    frames.push(feat);
  }
  return frames;
}

/** Average consecutive groups of `stride` rows (stride-s mean reduction). */
export function strideReduce(frames: Float64Array[], stride: number): Float64Array[] {
  const out: Float64Array[] = [];
  for (let i = 0; i + stride <= frames.length; i += stride) {
    const acc = new Float64Array(frames[0].length);
    for (let s = 0; s < stride; s++) {
      for (let d = 0; d < acc.length; d++) acc[d] += frames[i + s][d];
    }
    for (let d = 0; d < acc.length; d++) acc[d] /= stride;
    out.push(acc);
  }
  return out;
}

/**
 * Full encoder chain: features -> stride-2 conv stage -> stride-2 pooling
 * -> projection. Returns row-major [nTokens, embedDim] float32 data.
 */
export function encodeAudio(
  clip: AudioClip,
  checkpoint: Checkpoint,
): { data: Float32Array; rows: number; cols: number } {
  const cfg = checkpoint.config;
  let frames = frameFeatures(clip, cfg.frame_ms, cfg.hop_ms, cfg.n_mels);
  frames = strideReduce(frames, cfg.conv_stride);
  frames = strideReduce(frames, cfg.pool_stride);
  if (frames.length === 0) {
    throw new FrontendError("audio too short to produce any encoder output");
  }
  const proj = checkpoint.tensor("audio_frontend.proj.weight");
  if (proj.shape[0] !== cfg.n_mels) {
    throw new CheckpointError("projection rows do not match n_mels");
  }
  const d = cfg.embed_dim;
  const out = new Float32Array(frames.length * d);
  for (let t = 0; t < frames.length; t++) {
    for (let j = 0; j < d; j++) {
      let acc = 0;
      for (let m = 0; m < cfg.n_mels; m++) {
        acc += frames[t][m] * proj.data[m * d + j];
      }
      out[t * d + j] = Math.fround(acc);
    }
  }
  return { data: out, rows: frames.length, cols: d };
}
