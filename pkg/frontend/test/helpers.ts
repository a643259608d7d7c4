import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { fileURLToPath } from "node:url";

/** Repo root: the primary toolkit (CLI + shared fixtures) lives one level up. */
export const REPO_ROOT = resolve(fileURLToPath(new URL(".", import.meta.url)), "..", "..");
export const FIXTURES = join(REPO_ROOT, "fixtures", "bindings");

/** Run the primary toolkit's CLI and return stdout. */
export function runCli(args: string[]): string {
  return execFileSync("python3", ["-m", "obbkit.cli", ...args], {
    cwd: REPO_ROOT,
    encoding: "utf8",
  });
}

export function fixtureLines(name: string): string[] {
  return readFileSync(join(FIXTURES, name), "utf8")
    .split("\n")
    .filter((l) => l.trim().length > 0);
}

export function parseNumbers(line: string): number[] {
  return line.trim().split(/\s+/).map(Number);
}

/** Flatten whitespace-separated numeric lines into a Float64Array. */
export function linesToArray(lines: string[]): Float64Array {
  return Float64Array.from(lines.flatMap(parseNumbers));
}

export function tmpFile(name: string, content: string): string {
  const dir = mkdtempSync(join(tmpdir(), "obbkit-batch-"));
  const path = join(dir, name);
  writeFileSync(path, content);
  return path;
}

export function maxAbsDiff(a: ArrayLike<number>, b: ArrayLike<number>): number {
  if (a.length !== b.length) throw new Error(`length mismatch: ${a.length} vs ${b.length}`);
  let worst = 0;
  for (let i = 0; i < a.length; i++) {
    worst = Math.max(worst, Math.abs(a[i] - b[i]));
  }
  return worst;
}
