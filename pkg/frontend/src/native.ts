/**
 * Process boundary to the native core: every call shells out to the
 * `textmaps` CLI inside a throwaway temp directory, so calls share no state
 * and can run concurrently. Native failures surface as Error objects
 * carrying the CLI's stderr text.
 */

import { execFile } from "node:child_process";
import { mkdtemp, rm } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { promisify } from "node:util";

const execFileAsync = promisify(execFile);

/** Interpreter used to launch the native core; override for virtualenvs. */
export const PYTHON = process.env.TEXTMAPS_PYTHON ?? "python3";

export class NativeError extends Error {
  constructor(
    public readonly command: string,
    public readonly exitCode: number,
    stderr: string,
  ) {
    super(`textmaps ${command} failed (exit ${exitCode}): ${stderr.trim()}`);
    this.name = "NativeError";
  }
}

export async function runCli(args: string[]): Promise<string> {
  try {
    const { stdout } = await execFileAsync(PYTHON, ["-m", "textmaps", ...args], {
      maxBuffer: 64 * 1024 * 1024,
    });
    return stdout;
  } catch (error) {
    const e = error as { code?: number; stderr?: string; message?: string };
    if (typeof e.code === "number") {
      throw new NativeError(args[0] ?? "", e.code, e.stderr ?? e.message ?? "");
    }
    throw error;
  }
}

export async function withTempDir<T>(fn: (dir: string) => Promise<T>): Promise<T> {
  const dir = await mkdtemp(join(tmpdir(), "textmaps-"));
  try {
    return await fn(dir);
  } finally {
    await rm(dir, { recursive: true, force: true });
  }
}
