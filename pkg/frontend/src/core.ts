/**
 * Process boundary to the core package: every binding call shells out to the
 * `batseg` CLI and exchanges data through rawvol files in a scratch
 * directory. Set BATSEG_CLI to override the command (default
 * `python3 -m batseg`).
 */

import { spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

export function cliCommand(): string[] {
  const override = process.env.BATSEG_CLI;
  if (override && override.trim()) {
    return override.trim().split(/\s+/);
  }
  return ["python3", "-m", "batseg"];
}

export class CoreError extends Error {}

export function runCore(args: string[]): string {
  const [cmd, ...prefix] = cliCommand();
  const proc = spawnSync(cmd, [...prefix, ...args], {
    encoding: "utf-8",
    maxBuffer: 1 << 28,
  });
  if (proc.error) {
    throw new CoreError(`failed to launch core CLI (${cmd}): ${proc.error.message}`);
  }
  if (proc.status !== 0) {
    throw new CoreError(
      `core CLI exited with ${proc.status}: ${proc.stderr.trim() || proc.stdout.trim()}`,
    );
  }
  return proc.stdout;
}

export function coreVersion(): string {
  const out = runCore(["--version"]).trim();
  const parts = out.split(/\s+/);
  return parts[parts.length - 1];
}

export function withScratchDir<T>(fn: (dir: string) => T): T {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), "batseg-bind-"));
  try {
    return fn(dir);
  } finally {
    fs.rmSync(dir, { recursive: true, force: true });
  }
}
