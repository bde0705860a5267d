/**
 * Checkpoint directory loader. A checkpoint is a directory containing:
 *
 *   config.json        model hyperparameters (widths, frontend geometry)
 *   tokenizer.json     word vocabulary and special tokens
 *   model.safetensors  weights, F32:
 *       audio_frontend.proj.weight          [n_mels, embed_dim]
 *       embed_tokens.weight                 [vocab_size, embed_dim]
 *       layers.{i}.self_attn.q_proj.weight  [embed_dim, proj_dim]
 *       layers.{i}.self_attn.k_proj.weight  [embed_dim, proj_dim]
 *
 * Q/K projections are stored head-flattened: one [embed_dim, proj_dim]
 * matrix per layer, proj_dim being the concatenated width of all heads.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { readSafetensors, Tensor } from "./safetensors.js";

export interface CheckpointConfig {
  model_type: string;
  embed_dim: number;
  proj_dim: number;
  n_layers: number;
  n_mels: number;
  frame_ms: number;
  hop_ms: number;
  conv_stride: number;
  pool_stride: number;
}

export interface TokenizerSpec {
  vocab: Record<string, number>;
  special_tokens: Record<string, number>;
  unk_token: string;
}

export class CheckpointError extends Error {}

export class Checkpoint {
  constructor(
    readonly config: CheckpointConfig,
    readonly tokenizer: TokenizerSpec,
    readonly tensors: Map<string, Tensor>,
  ) {}

  /** Output embeddings per second of audio after the full encoder chain. */
  tokensPerSecond(): number {
    const { hop_ms, conv_stride, pool_stride } = this.config;
    const tps = 1000 / (hop_ms * conv_stride * pool_stride);
    if (!Number.isInteger(tps)) {
      throw new CheckpointError(
        `frontend geometry yields a non-integer token rate (${tps}/s)`,
      );
    }
    return tps;
  }

  tensor(name: string): Tensor {
    const t = this.tensors.get(name);
    if (!t) throw new CheckpointError(`checkpoint is missing tensor ${name}`);
    return t;
  }

  /** Q and K projections of one layer, shape [embed_dim, proj_dim] each. */
  attentionProjections(layer: number): { wq: Tensor; wk: Tensor } {
    if (!Number.isInteger(layer) || layer < 0 || layer >= this.config.n_layers) {
      throw new CheckpointError(
        `layer index ${layer} out of range for ${this.config.n_layers} layers`,
      );
    }
    const wq = this.tensor(`layers.${layer}.self_attn.q_proj.weight`);
    const wk = this.tensor(`layers.${layer}.self_attn.k_proj.weight`);
    for (const [name, t] of [["q_proj", wq], ["k_proj", wk]] as const) {
      if (t.shape.length !== 2 || t.shape[0] !== this.config.embed_dim ||
          t.shape[1] !== this.config.proj_dim) {
        throw new CheckpointError(
          `layers.${layer}.self_attn.${name}.weight has shape [${t.shape}], ` +
          `expected [${this.config.embed_dim}, ${this.config.proj_dim}]`,
        );
      }
    }
    return { wq, wk };
  }
}

export function loadCheckpoint(dir: string): Checkpoint {
  if (!fs.existsSync(dir)) {
    throw new CheckpointError(`checkpoint directory does not exist: ${dir}`);
  }
  const config = readJson<CheckpointConfig>(path.join(dir, "config.json"));
  for (const key of ["embed_dim", "proj_dim", "n_layers", "n_mels",
                     "frame_ms", "hop_ms", "conv_stride", "pool_stride"] as const) {
    const value = config[key];
    if (typeof value !== "number" || value < 1) {
      throw new CheckpointError(`config.json: ${key} must be a positive number`);
    }
  }
  const tokenizer = readJson<TokenizerSpec>(path.join(dir, "tokenizer.json"));
  if (!tokenizer.vocab || !tokenizer.special_tokens || !tokenizer.unk_token) {
    throw new CheckpointError(
      "tokenizer.json must define vocab, special_tokens and unk_token",
    );
  }
  const tensors = readSafetensors(path.join(dir, "model.safetensors"));
  const ckpt = new Checkpoint(config, tokenizer, tensors);

  const proj = ckpt.tensor("audio_frontend.proj.weight");
  if (proj.shape[0] !== config.n_mels || proj.shape[1] !== config.embed_dim) {
    throw new CheckpointError(
      `audio_frontend.proj.weight has shape [${proj.shape}], ` +
      `expected [${config.n_mels}, ${config.embed_dim}]`,
    );
  }
  const embed = ckpt.tensor("embed_tokens.weight");
  if (embed.shape[1] !== config.embed_dim) {
    throw new CheckpointError(
      `embed_tokens.weight width ${embed.shape[1]} != embed_dim ${config.embed_dim}`,
    );
  }
  return ckpt;
}

function readJson<T>(file: string): T {
  let text: string;
  try {
    text = fs.readFileSync(file, "utf-8");
  } catch (err) {
    throw new CheckpointError(`cannot read ${file}: ${String(err)}`);
  }
  try {
    return JSON.parse(text) as T;
  } catch (err) {
    throw new CheckpointError(`${file} is not valid JSON: ${String(err)}`);
  }
}
