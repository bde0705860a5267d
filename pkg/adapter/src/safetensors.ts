/**
 * Minimal safetensors container support: little-endian u64 header length,
 * JSON header mapping tensor names to dtype/shape/data_offsets, then the
 * raw tensor payload. Only F32 tensors are handled; that is all the
 * checkpoints used here contain.
 */

import * as fs from "node:fs";

export interface TensorInfo {
  dtype: string;
  shape: number[];
  data_offsets: [number, number];
}

export interface Tensor {
  shape: number[];
  data: Float32Array;
}

export class SafetensorsError extends Error {}

export function readSafetensors(path: string): Map<string, Tensor> {
  const buf = fs.readFileSync(path);
  if (buf.length < 8) {
    throw new SafetensorsError(`file too short for a safetensors header: ${path}`);
  }
  const headerLen = Number(buf.readBigUInt64LE(0));
  if (8 + headerLen > buf.length) {
    throw new SafetensorsError(`declared header length ${headerLen} exceeds file size`);
  }
  let header: Record<string, TensorInfo>;
  try {
    header = JSON.parse(buf.subarray(8, 8 + headerLen).toString("utf-8"));
  } catch (err) {
    throw new SafetensorsError(`header is not valid JSON: ${String(err)}`);
  }
  const dataStart = 8 + headerLen;
  const tensors = new Map<string, Tensor>();
  for (const [name, info] of Object.entries(header)) {
    if (name === "__metadata__") continue;
    if (info.dtype !== "F32") {
      throw new SafetensorsError(`tensor ${name}: unsupported dtype ${info.dtype}`);
    }
    const [begin, end] = info.data_offsets;
    const count = info.shape.reduce((a, b) => a * b, 1);
    if (end - begin !== count * 4) {
      throw new SafetensorsError(
        `tensor ${name}: payload ${end - begin} bytes does not match shape [${info.shape}]`,
      );
    }
    if (dataStart + end > buf.length) {
      throw new SafetensorsError(`tensor ${name}: data extends past end of file`);
    }
    // Copy out so the view is aligned and detached from the file buffer.
    const bytes = buf.subarray(dataStart + begin, dataStart + end);
    const data = new Float32Array(count);
    for (let i = 0; i < count; i++) data[i] = bytes.readFloatLE(i * 4);
    tensors.set(name, { shape: info.shape.slice(), data });
  }
  return tensors;
}

export function writeSafetensors(path: string, tensors: Map<string, Tensor>): void {
  const header: Record<string, TensorInfo> = {};
  let offset = 0;
  const payloads: Buffer[] = [];
  for (const [name, tensor] of tensors) {
    const count = tensor.shape.reduce((a, b) => a * b, 1);
    if (count !== tensor.data.length) {
      throw new SafetensorsError(`tensor ${name}: shape/data length mismatch`);
    }
    const bytes = Buffer.alloc(count * 4);
    for (let i = 0; i < count; i++) bytes.writeFloatLE(tensor.data[i], i * 4);
    header[name] = {
      dtype: "F32",
      shape: tensor.shape.slice(),
      data_offsets: [offset, offset + bytes.length],
    };
    payloads.push(bytes);
    offset += bytes.length;
  }
  const headerJson = Buffer.from(JSON.stringify(header), "utf-8");
  const lenBuf = Buffer.alloc(8);
  lenBuf.writeBigUInt64LE(BigInt(headerJson.length), 0);
  fs.writeFileSync(path, Buffer.concat([lenBuf, headerJson, ...payloads]));
}
