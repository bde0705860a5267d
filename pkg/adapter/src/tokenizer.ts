/**
 * Word-level tokenizer over the checkpoint vocabulary. Produces token ids
 * with character offsets; special tokens can never appear in the output,
 * so the text embeddings handed to the engine cover exactly the user
 * query, with no prompt scaffolding.
 */

import { TokenizerSpec } from "./checkpoint.js";

export interface TokenSpan {
  id: number;
  text: string;
  start: number;
  end: number;
}

export class TokenizerError extends Error {}

export function tokenize(spec: TokenizerSpec, text: string): TokenSpan[] {
  const unkId = spec.vocab[spec.unk_token];
  if (unkId === undefined) {
    throw new TokenizerError(`vocab does not contain unk token ${spec.unk_token}`);
  }
  const specialIds = new Set(Object.values(spec.special_tokens));
  const spans: TokenSpan[] = [];
  const pattern = /[a-z0-9']+/g;
  let match: RegExpExecArray | null;
  const lowered = text.toLowerCase();
  while ((match = pattern.exec(lowered)) !== null) {
    const word = match[0];
    let id = spec.vocab[word];
    if (id === undefined || specialIds.has(id)) id = unkId;
    spans.push({ id, text: word, start: match.index, end: match.index + word.length });
  }
  if (spans.length === 0) {
    throw new TokenizerError("query contains no tokenizable words");
  }
  for (const span of spans) {
    if (specialIds.has(span.id)) {
      throw new TokenizerError(`special token id ${span.id} leaked into the query`);
    }
  }
  return spans;
}

/** Embed token ids as rows of the embedding table: [n, embedDim] float32. */
export function embedTokens(
  table: { shape: number[]; data: Float32Array },
  ids: number[],
): { data: Float32Array; rows: number; cols: number } {
  const [vocabSize, dim] = table.shape;
  const out = new Float32Array(ids.length * dim);
  ids.forEach((id, row) => {
    if (id < 0 || id >= vocabSize) {
      throw new TokenizerError(`token id ${id} outside embedding table (${vocabSize})`);
    }
    out.set(table.data.subarray(id * dim, (id + 1) * dim), row * dim);
  });
  return { data: out, rows: ids.length, cols: dim };
}
