/**
 * SPB1 bundle container, bit-compatible with the engine's reader.
 *
 * Layout (little-endian): magic "SPB1"; u32 version = 1; u32 matrix count;
 * per matrix u16 name length, UTF-8 name, u32 rows, u32 cols, rows*cols
 * float32 row-major; u32 metadata length; UTF-8 JSON object. Required
 * matrices: speech, text, wq, wk. Required metadata: integer
 * tokens_per_second; optional needle_start/needle_length and label;
 * unknown keys are preserved by the engine.
 */

import * as fs from "node:fs";

const MAGIC = "SPB1";
const VERSION = 1;
const REQUIRED = ["speech", "text", "wq", "wk"] as const;

export interface SpbMatrix {
  rows: number;
  cols: number;
  data: Float32Array; // length rows*cols, row-major
}

export interface SpbBundle {
  speech: SpbMatrix;
  text: SpbMatrix;
  wq: SpbMatrix;
  wk: SpbMatrix;
  tokensPerSecond: number;
  needle?: { start: number; length: number };
  label?: string;
  extraMetadata?: Record<string, unknown>;
}

export class SpbError extends Error {
  constructor(readonly kind: string, message: string) {
    super(`${kind}: ${message}`);
  }
}

export function validateBundle(b: SpbBundle): void {
  for (const name of REQUIRED) {
    const m = b[name];
    if (m.data.length !== m.rows * m.cols) {
      throw new SpbError("invalid-shape", `${name} data length != rows*cols`);
    }
  }
  const d = b.speech.cols;
  if (b.speech.rows < 1 || b.text.rows < 1 || d < 1) {
    throw new SpbError("invalid-shape", "speech and text must be non-empty");
  }
  if (b.text.cols !== d || b.wq.rows !== d || b.wk.rows !== d) {
    throw new SpbError("shape-mismatch", "embedding widths are inconsistent");
  }
  if (b.wq.cols !== b.wk.cols || b.wq.cols < 1) {
    throw new SpbError("shape-mismatch", "wq/wk projection widths differ");
  }
  if (!Number.isInteger(b.tokensPerSecond) || b.tokensPerSecond < 1) {
    throw new SpbError("bad-metadata", `tokens_per_second ${b.tokensPerSecond}`);
  }
  if (b.needle) {
    const { start, length } = b.needle;
    if (length < 1 || start < 0 || start + length > b.speech.rows) {
      throw new SpbError("needle-out-of-range", `[${start}, ${start + length})`);
    }
  }
}

export function encodeBundle(b: SpbBundle): Buffer {
  validateBundle(b);
  const parts: Buffer[] = [];
  parts.push(Buffer.from(MAGIC, "ascii"));
  parts.push(u32(VERSION));
  parts.push(u32(REQUIRED.length));
  for (const name of REQUIRED) {
    const m = b[name];
    const nameBuf = Buffer.from(name, "utf-8");
    const head = Buffer.alloc(2 + nameBuf.length + 8);
    head.writeUInt16LE(nameBuf.length, 0);
    nameBuf.copy(head, 2);
    head.writeUInt32LE(m.rows, 2 + nameBuf.length);
    head.writeUInt32LE(m.cols, 6 + nameBuf.length);
    const payload = Buffer.alloc(m.data.length * 4);
    for (let i = 0; i < m.data.length; i++) payload.writeFloatLE(m.data[i], i * 4);
    parts.push(head, payload);
  }
  const meta: Record<string, unknown> = { tokens_per_second: b.tokensPerSecond };
  if (b.needle) {
    meta.needle_start = b.needle.start;
    meta.needle_length = b.needle.length;
  }
  if (b.label !== undefined) meta.label = b.label;
  Object.assign(meta, b.extraMetadata ?? {});
  const sorted = Object.fromEntries(Object.entries(meta).sort(([a], [b2]) => (a < b2 ? -1 : 1)));
  const metaBuf = Buffer.from(JSON.stringify(sorted), "utf-8");
  parts.push(u32(metaBuf.length), metaBuf);
  return Buffer.concat(parts);
}

export function writeBundle(path: string, b: SpbBundle): number {
  const blob = encodeBundle(b);
  fs.writeFileSync(path, blob);
  return blob.length;
}

export function decodeBundle(buf: Buffer): SpbBundle {
  const cur = new Cursor(buf);
  if (cur.take(4, "magic").toString("ascii") !== MAGIC) {
    throw new SpbError("bad-magic", "missing SPB1 magic");
  }
  const version = cur.u32("version");
  if (version !== VERSION) {
    throw new SpbError("unsupported-version", `version ${version}`);
  }
  const count = cur.u32("matrix count");
  const matrices = new Map<string, SpbMatrix>();
  for (let i = 0; i < count; i++) {
    const nameLen = cur.u16("name length");
    const name = cur.take(nameLen, "name").toString("utf-8");
    if (matrices.has(name)) throw new SpbError("duplicate-matrix", name);
    const rows = cur.u32(`${name} rows`);
    const cols = cur.u32(`${name} cols`);
    const payload = cur.take(rows * cols * 4, `${name} payload`);
    const data = new Float32Array(rows * cols);
    for (let j = 0; j < data.length; j++) data[j] = payload.readFloatLE(j * 4);
    matrices.set(name, { rows, cols, data });
  }
  const metaLen = cur.u32("metadata length");
  const metaBuf = cur.take(metaLen, "metadata");
  if (!cur.done()) throw new SpbError("trailing-bytes", "data after metadata");
  let meta: Record<string, unknown>;
  try {
    meta = JSON.parse(metaBuf.toString("utf-8"));
  } catch (err) {
    throw new SpbError("bad-metadata", String(err));
  }
  for (const name of REQUIRED) {
    if (!matrices.has(name)) throw new SpbError("missing-matrix", name);
  }
  const tps = meta.tokens_per_second;
  if (typeof tps !== "number" || !Number.isInteger(tps)) {
    throw new SpbError("bad-metadata", "tokens_per_second must be an integer");
  }
  const hasStart = "needle_start" in meta;
  const hasLength = "needle_length" in meta;
  if (hasStart !== hasLength) {
    throw new SpbError("bad-metadata", "needle fields must appear together");
  }
  const bundle: SpbBundle = {
    speech: matrices.get("speech")!,
    text: matrices.get("text")!,
    wq: matrices.get("wq")!,
    wk: matrices.get("wk")!,
    tokensPerSecond: tps,
    needle: hasStart
      ? { start: meta.needle_start as number, length: meta.needle_length as number }
      : undefined,
    label: typeof meta.label === "string" ? meta.label : undefined,
    extraMetadata: Object.fromEntries(
      Object.entries(meta).filter(
        ([k]) => !["tokens_per_second", "needle_start", "needle_length", "label"].includes(k),
      ),
    ),
  };
  validateBundle(bundle);
  return bundle;
}

export function readBundle(path: string): SpbBundle {
  return decodeBundle(fs.readFileSync(path));
}

function u32(value: number): Buffer {
  const buf = Buffer.alloc(4);
  buf.writeUInt32LE(value, 0);
  return buf;
}

class Cursor {
  private pos = 0;
  constructor(private buf: Buffer) {}

  take(n: number, what: string): Buffer {
    if (this.pos + n > this.buf.length) {
      throw new SpbError("truncated", `expected ${n} bytes for ${what} at ${this.pos}`);
    }
    const out = this.buf.subarray(this.pos, this.pos + n);
    this.pos += n;
    return out;
  }

  u16(what: string): number {
    return this.take(2, what).readUInt16LE(0);
  }

  u32(what: string): number {
    return this.take(4, what).readUInt32LE(0);
  }

  done(): boolean {
    return this.pos === this.buf.length;
  }
}
