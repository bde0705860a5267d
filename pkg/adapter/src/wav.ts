/**
 * WAV (RIFF) reader for PCM16 and IEEE-float32 audio. Multi-channel input
 * is downmixed to mono by averaging.
 */

import * as fs from "node:fs";

export interface AudioClip {
  samples: Float64Array; // mono, in [-1, 1]
  sampleRate: number;
}

export class WavError extends Error {}

export function readWav(path: string): AudioClip {
  const buf = fs.readFileSync(path);
  if (buf.length < 12 || buf.toString("ascii", 0, 4) !== "RIFF" ||
      buf.toString("ascii", 8, 12) !== "WAVE") {
    throw new WavError(`not a RIFF/WAVE file: ${path}`);
  }
  let pos = 12;
  let format = 0;
  let channels = 0;
  let sampleRate = 0;
  let bitsPerSample = 0;
  let data: Buffer | null = null;
  while (pos + 8 <= buf.length) {
    const id = buf.toString("ascii", pos, pos + 4);
    const size = buf.readUInt32LE(pos + 4);
    const body = buf.subarray(pos + 8, pos + 8 + size);
    if (id === "fmt ") {
      if (body.length < 16) throw new WavError("fmt chunk too short");
      format = body.readUInt16LE(0);
      channels = body.readUInt16LE(2);
      sampleRate = body.readUInt32LE(4);
      bitsPerSample = body.readUInt16LE(14);
    } else if (id === "data") {
      data = body;
    }
    pos += 8 + size + (size % 2); // chunks are word-aligned
  }
  if (!sampleRate || !channels) throw new WavError("missing fmt chunk");
  if (!data) throw new WavError("missing data chunk");

  let decode: (frame: number, channel: number) => number;
  let bytesPerSample: number;
  if (format === 1 && bitsPerSample === 16) {
    bytesPerSample = 2;
    decode = (f, c) => data!.readInt16LE((f * channels + c) * 2) / 32768;
  } else if (format === 3 && bitsPerSample === 32) {
    bytesPerSample = 4;
    decode = (f, c) => data!.readFloatLE((f * channels + c) * 4);
  } else {
    throw new WavError(
      `unsupported encoding: format=${format} bits=${bitsPerSample} (PCM16 or float32 required)`,
    );
  }
  const nFrames = Math.floor(data.length / (bytesPerSample * channels));
  const samples = new Float64Array(nFrames);
  for (let f = 0; f < nFrames; f++) {
    let acc = 0;
    for (let c = 0; c < channels; c++) acc += decode(f, c);
    samples[f] = acc / channels;
  }
  return { samples, sampleRate };
}

export function writeWavPcm16(path: string, samples: Float64Array, sampleRate: number): void {
  const data = Buffer.alloc(samples.length * 2);
  for (let i = 0; i < samples.length; i++) {
    const clamped = Math.max(-1, Math.min(1, samples[i]));
    data.writeInt16LE(Math.round(clamped * 32767), i * 2);
  }
  const header = Buffer.alloc(44);
  header.write("RIFF", 0, "ascii");
  header.writeUInt32LE(36 + data.length, 4);
  header.write("WAVE", 8, "ascii");
  header.write("fmt ", 12, "ascii");
  header.writeUInt32LE(16, 16);
  header.writeUInt16LE(1, 20); // PCM
  header.writeUInt16LE(1, 22); // mono
  header.writeUInt32LE(sampleRate, 24);
  header.writeUInt32LE(sampleRate * 2, 28);
  header.writeUInt16LE(2, 32);
  header.writeUInt16LE(16, 34);
  header.write("data", 36, "ascii");
  header.writeUInt32LE(data.length, 40);
  fs.writeFileSync(path, Buffer.concat([header, data]));
}
