/**
 * Engine invocation: spawn the speechprune CLI on a bundle and parse its
 * JSON result. The adapter talks to the engine only through the .spb file
 * format and this subprocess boundary.
 */

import { spawnSync } from "node:child_process";

export interface PruneFlags {
  rate: number;
  mode?: "both" | "phase1_only" | "phase2_only";
  intermediateTarget?: number;
  frameSize?: number;
  trace?: boolean;
}

export interface PruneOutcome {
  schema_version: string;
  n_tokens: number;
  phase1_kept: number | null;
  kept_count: number;
  kept: number[];
  method: string;
  [key: string]: unknown;
}

export class EngineError extends Error {
  constructor(message: string, readonly exitCode: number | null = null,
              readonly stderr = "") {
    super(message);
  }
}

export function pruneWithEngine(
  bundlePath: string,
  flags: PruneFlags,
  engine = "speechprune",
): PruneOutcome {
  const args = ["prune", bundlePath, "--rate", String(flags.rate)];
  if (flags.mode) args.push("--mode", flags.mode);
  if (flags.intermediateTarget !== undefined) {
    args.push("--intermediate-target", String(flags.intermediateTarget));
  }
  if (flags.frameSize !== undefined) args.push("--frame-size", String(flags.frameSize));
  if (flags.trace) args.push("--trace");

  const result = spawnSync(engine, args, {
    encoding: "utf-8",
    maxBuffer: 64 * 1024 * 1024,
  });
  if (result.error) {
    const code = (result.error as NodeJS.ErrnoException).code;
    if (code === "ENOENT") {
      throw new EngineError(`engine executable not found: ${engine}`);
    }
    throw new EngineError(`failed to spawn ${engine}: ${result.error.message}`);
  }
  if (result.status !== 0) {
    throw new EngineError(
      `${engine} exited with code ${result.status}: ${result.stderr.trim()}`,
      result.status,
      result.stderr,
    );
  }
  try {
    return JSON.parse(result.stdout) as PruneOutcome;
  } catch (err) {
    throw new EngineError(`engine produced unparseable output: ${String(err)}`);
  }
}
