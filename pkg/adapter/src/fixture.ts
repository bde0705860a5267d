/**
 * Deterministic demo fixtures: a small checkpoint directory in the real
 * on-disk layout (config.json, tokenizer.json, model.safetensors) and
 * synthetic WAV audio. Used by the tests and by `make-fixture` for local
 * experimentation without real model weights.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { Tensor, writeSafetensors } from "./safetensors.js";
import { writeWavPcm16 } from "./wav.js";

/** mulberry32: tiny deterministic PRNG, uniform in [0, 1). */
export function rng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function gaussian(uniform: () => number): () => number {
  return () => {
    const u = Math.max(uniform(), 1e-12);
    const v = uniform();
    return Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * v);
  };
}

function randomTensor(shape: number[], gen: () => number, scale = 1.0): Tensor {
  const count = shape.reduce((a, b) => a * b, 1);
  const data = new Float32Array(count);
  for (let i = 0; i < count; i++) data[i] = Math.fround(gen() * scale);
  return { shape, data };
}

const WORDS = (
  "the a an and of to in is was for on with at by from up about into over " +
  "meeting schedule time when where what who how project report next monday " +
  "please note down call room three at noon budget review team plan deadline " +
  "question answer detail remember number phone email send confirm"
).split(/\s+/);

export interface FixtureOptions {
  seed?: number;
  embedDim?: number;
  projDim?: number;
  nLayers?: number;
  nMels?: number;
}

export function makeCheckpoint(dir: string, options: FixtureOptions = {}): string {
  const seed = options.seed ?? 1234;
  const embedDim = options.embedDim ?? 64;
  const projDim = options.projDim ?? 32;
  const nLayers = options.nLayers ?? 2;
  const nMels = options.nMels ?? 32;
  fs.mkdirSync(dir, { recursive: true });

  const config = {
    model_type: "demo-speech-lm",
    embed_dim: embedDim,
    proj_dim: projDim,
    n_layers: nLayers,
    n_mels: nMels,
    frame_ms: 25,
    hop_ms: 10,
    conv_stride: 2,
    pool_stride: 2,
  };
  fs.writeFileSync(path.join(dir, "config.json"), JSON.stringify(config, null, 2));

  const special = { "<s>": 0, "</s>": 1, "<pad>": 2, "<audio>": 3 };
  const vocab: Record<string, number> = { ...special, "<unk>": 4 };
  WORDS.forEach((word, i) => {
    if (!(word in vocab)) vocab[word] = 5 + i;
  });
  fs.writeFileSync(
    path.join(dir, "tokenizer.json"),
    JSON.stringify({ vocab, special_tokens: special, unk_token: "<unk>" }, null, 2),
  );

  const gen = gaussian(rng(seed));
  const vocabSize = Object.keys(vocab).length;
  const tensors = new Map<string, Tensor>();
  tensors.set("audio_frontend.proj.weight", randomTensor([nMels, embedDim], gen, 0.3));
  tensors.set("embed_tokens.weight", randomTensor([vocabSize, embedDim], gen));
  for (let layer = 0; layer < nLayers; layer++) {
    tensors.set(
      `layers.${layer}.self_attn.q_proj.weight`,
      randomTensor([embedDim, projDim], gen),
    );
    tensors.set(
      `layers.${layer}.self_attn.k_proj.weight`,
      randomTensor([embedDim, projDim], gen),
    );
  }
  writeSafetensors(path.join(dir, "model.safetensors"), tensors);
  return dir;
}

/** Synthetic speech-ish audio: drifting tones plus noise bursts. */
export function makeWav(
  filePath: string,
  seconds: number,
  sampleRate = 16000,
  seed = 99,
): string {
  const uniform = rng(seed);
  const n = Math.round(seconds * sampleRate);
  const samples = new Float64Array(n);
  let phase = 0;
  for (let i = 0; i < n; i++) {
    const t = i / sampleRate;
    const freq = 120 + 80 * Math.sin(2 * Math.PI * 0.31 * t) + 40 * Math.sin(2 * Math.PI * 1.7 * t);
    phase += (2 * Math.PI * freq) / sampleRate;
    const burst = Math.sin(2 * Math.PI * 0.5 * t) > 0.2 ? 1.0 : 0.25;
    samples[i] = 0.45 * burst * Math.sin(phase) + 0.1 * (uniform() * 2 - 1);
  }
  fs.mkdirSync(path.dirname(filePath), { recursive: true });
  writeWavPcm16(filePath, samples, sampleRate);
  return filePath;
}
