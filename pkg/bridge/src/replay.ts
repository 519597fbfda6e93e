/**
 * File-backed replay tables.
 *
 * A replay file is newline-delimited JSON, one {"kind", "input", "output"}
 * object per line, as written by the tracker's gold-replay recorder. The
 * table is keyed by the request kind plus the SHA-256 of the input text, so
 * lookups are order-independent and the two request kinds can never
 * collide. A request whose key is missing from the table gets an empty
 * output and a diagnostic on standard error; the session keeps going, since
 * the client may be probing rather than replaying a recorded run.
 */

import { createHash } from "node:crypto";
import { readFileSync } from "node:fs";
import type { RequestFrame } from "./frames.js";

/** A replay file that cannot be loaded as a table. */
export class ReplayError extends Error {}

/** Hex SHA-256 of the input's UTF-8 bytes. */
export function inputDigest(input: string): string {
  return createHash("sha256").update(input, "utf8").digest("hex");
}

export function replayKey(kind: string, input: string): string {
  return `${kind}:${inputDigest(input)}`;
}

export class ReplayTable {
  private entries: Map<string, string>;

  constructor(entries: Map<string, string>) {
    this.entries = entries;
  }

  get size(): number {
    return this.entries.size;
  }

  lookup(kind: string, input: string): string | undefined {
    return this.entries.get(replayKey(kind, input));
  }
}

const ROW_KEYS = new Set(["kind", "input", "output"]);

/**
 * Load a replay table, validating every row.
 *
 * Identical duplicate rows are tolerated (two turns can encode the same
 * request); duplicates that disagree on output would make replay depend on
 * line order, so they are rejected.
 */
export function loadReplayTable(path: string): ReplayTable {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch (error) {
    const reason = error instanceof Error ? error.message : String(error);
    throw new ReplayError(`cannot read replay file: ${reason}`);
  }
  const entries = new Map<string, string>();
  const lines = text.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = (lines[i] ?? "").trim();
    if (line === "") {
      continue;
    }
    const where = `${path}:${i + 1}`;
    let raw: unknown;
    try {
      raw = JSON.parse(line);
    } catch {
      throw new ReplayError(`${where}: row is not JSON`);
    }
    if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
      throw new ReplayError(`${where}: row is not a JSON object`);
    }
    const row = raw as Record<string, unknown>;
    for (const key of Object.keys(row)) {
      if (!ROW_KEYS.has(key)) {
        throw new ReplayError(`${where}: row has unknown field "${key}"`);
      }
    }
    const { kind, input, output } = row;
    if (kind !== "lev" && kind !== "response") {
      throw new ReplayError(`${where}: row kind must be "lev" or "response"`);
    }
    if (typeof input !== "string" || typeof output !== "string") {
      throw new ReplayError(`${where}: row input and output must be text`);
    }
    const key = replayKey(kind, input);
    const prior = entries.get(key);
    if (prior !== undefined && prior !== output) {
      throw new ReplayError(`${where}: conflicting output for a repeated ${kind} input`);
    }
    entries.set(key, output);
  }
  return new ReplayTable(entries);
}

/**
 * Build the reply function for replay mode.
 *
 * Unknown keys answer with an empty output, reported through `warn` so the
 * operator can tell a probe from a table recorded against the wrong corpus.
 */
export function replayReply(
  table: ReplayTable,
  warn: (message: string) => void
): (frame: RequestFrame) => string {
  return (frame) => {
    const output = table.lookup(frame.kind, frame.input);
    if (output === undefined) {
      const digest = inputDigest(frame.input).slice(0, 12);
      warn(`no recorded ${frame.kind} output for request ${frame.id} (input sha256 ${digest})`);
      return "";
    }
    return output;
  };
}
