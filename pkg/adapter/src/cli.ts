#!/usr/bin/env node
/**
 * Adapter command line.
 *
 *   extract       checkpoint + audio + query -> .spb bundle
 *   prune         extract, then run the engine CLI on the bundle
 *   make-fixture  generate a demo checkpoint and WAV for local use
 */

import * as fs from "node:fs";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

import { extractBundle } from "./extract.js";
import { pruneWithEngine, PruneFlags } from "./engine.js";
import { makeCheckpoint, makeWav } from "./fixture.js";

const USAGE = `usage:
  speechprune-adapter extract --checkpoint DIR --audio FILE.wav --query TEXT \\
      --output OUT.spb [--layer N]
  speechprune-adapter prune --checkpoint DIR --audio FILE.wav --query TEXT \\
      --output OUT.spb --rate R [--mode M] [--intermediate-target N] \\
      [--frame-size F] [--trace] [--engine BIN]
  speechprune-adapter make-fixture --output DIR [--seconds S] [--seed N]
`;

function parseFlags(argv: string[]): Map<string, string | boolean> {
  const flags = new Map<string, string | boolean>();
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (!arg.startsWith("--")) throw new UsageError(`unexpected argument: ${arg}`);
    const name = arg.slice(2);
    if (name === "trace") {
      flags.set(name, true);
    } else {
      const value = argv[++i];
      if (value === undefined) throw new UsageError(`flag --${name} needs a value`);
      flags.set(name, value);
    }
  }
  return flags;
}

class UsageError extends Error {}

function need(flags: Map<string, string | boolean>, name: string): string {
  const value = flags.get(name);
  if (typeof value !== "string") throw new UsageError(`missing required flag --${name}`);
  return value;
}

function optNumber(flags: Map<string, string | boolean>, name: string): number | undefined {
  const value = flags.get(name);
  if (value === undefined) return undefined;
  const parsed = Number(value);
  if (!Number.isFinite(parsed)) throw new UsageError(`--${name} must be a number`);
  return parsed;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    if (command === "extract") {
      const flags = parseFlags(rest);
      const summary = extractBundle({
        checkpoint: need(flags, "checkpoint"),
        audio: need(flags, "audio"),
        query: need(flags, "query"),
        layer: optNumber(flags, "layer"),
        output: need(flags, "output"),
      });
      process.stdout.write(JSON.stringify(summary, null, 2) + "\n");
      return 0;
    }
    if (command === "prune") {
      const flags = parseFlags(rest);
      const summary = extractBundle({
        checkpoint: need(flags, "checkpoint"),
        audio: need(flags, "audio"),
        query: need(flags, "query"),
        layer: optNumber(flags, "layer"),
        output: need(flags, "output"),
      });
      const pruneFlags: PruneFlags = {
        rate: Number(need(flags, "rate")),
        mode: flags.get("mode") as PruneFlags["mode"],
        intermediateTarget: optNumber(flags, "intermediate-target"),
        frameSize: optNumber(flags, "frame-size"),
        trace: flags.get("trace") === true,
      };
      const engine = (flags.get("engine") as string) ?? "speechprune";
      const outcome = pruneWithEngine(summary.output, pruneFlags, engine);
      process.stdout.write(
        JSON.stringify({ extraction: summary, result: outcome }, null, 2) + "\n",
      );
      return 0;
    }
    if (command === "make-fixture") {
      const flags = parseFlags(rest);
      const dir = need(flags, "output");
      const seconds = optNumber(flags, "seconds") ?? 30;
      const seed = optNumber(flags, "seed") ?? 1234;
      const checkpoint = makeCheckpoint(path.join(dir, "checkpoint"), { seed });
      const wav = makeWav(path.join(dir, `audio-${seconds}s.wav`), seconds, 16000, seed);
      process.stdout.write(JSON.stringify({ checkpoint, wav }, null, 2) + "\n");
      return 0;
    }
    throw new UsageError(`unknown command: ${command ?? "(none)"}`);
  } catch (err) {
    if (err instanceof UsageError) {
      process.stderr.write(`error: ${err.message}\n${USAGE}`);
      return 2;
    }
    process.stderr.write(`error: ${err instanceof Error ? err.message : String(err)}\n`);
    return 1;
  }
}

// Run when executed directly, including through the npm bin symlink.
const invoked = process.argv[1] ? fs.realpathSync(process.argv[1]) : "";
if (invoked === fileURLToPath(import.meta.url)) {
  process.exit(main(process.argv.slice(2)));
}
