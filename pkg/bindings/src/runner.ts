/** Subprocess plumbing: run the morigeo CLI inside a throwaway work dir. */

import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export class CliFailure extends Error {
  constructor(
    message: string,
    public readonly exitCode: number | null,
    public readonly stderr: string,
  ) {
    super(message);
  }
}

/** CLI binary; override with MORIGEO_BIN when it is not on PATH. */
export function cliBinary(): string {
  return process.env.MORIGEO_BIN ?? "morigeo";
}

export function runCli(args: string[], cwd?: string): string {
  const proc = spawnSync(cliBinary(), args, { cwd, encoding: "utf8" });
  if (proc.error) {
    throw new CliFailure(
      `failed to launch ${cliBinary()}: ${proc.error.message}`,
      null,
      "",
    );
  }
  if (proc.status !== 0) {
    throw new CliFailure(
      `${cliBinary()} ${args[0]} exited with ${proc.status}: ${proc.stderr.trim()}`,
      proc.status,
      proc.stderr,
    );
  }
  return proc.stdout;
}

/** Run `fn` with a fresh temp dir that is removed afterwards. */
export function withWorkDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "morigeo-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

export function writeFile(dir: string, name: string, bytes: Uint8Array): string {
  const path = join(dir, name);
  writeFileSync(path, bytes);
  return path;
}

export function readFile(path: string): Uint8Array {
  return new Uint8Array(readFileSync(path));
}
