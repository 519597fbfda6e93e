import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, test } from "vitest";
import {
  ReplayError,
  inputDigest,
  loadReplayTable,
  replayKey,
  replayReply,
} from "../src/replay.js";

function tableFile(lines: string[]): string {
  const dir = mkdtempSync(join(tmpdir(), "bridge-replay-"));
  const path = join(dir, "table.jsonl");
  writeFileSync(path, lines.join("\n") + "\n", "utf8");
  return path;
}

const ROWS = [
  '{"kind": "lev", "input": "u1 <EOU>", "output": "<SOB> [hotel] people 10 <EOB>"}',
  '{"kind": "response", "input": "u1 <EOU>", "output": "booked . reference [value_id] ."}',
  '{"kind": "lev", "input": "u2 <EOU>", "output": "<SOB> <EOB>"}',
];

describe("inputDigest", () => {
  test("is the hex sha-256 of the utf-8 bytes", () => {
    // Fixed vectors, so the keying scheme cannot drift silently.
    expect(inputDigest("abc")).toBe(
      "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    );
    expect(inputDigest("")).toBe(
      "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    );
  });

  test("keys carry the kind so the request kinds cannot collide", () => {
    expect(replayKey("lev", "x")).not.toBe(replayKey("response", "x"));
    expect(replayKey("lev", "x")).toMatch(/^lev:[0-9a-f]{64}$/);
  });
});

describe("loadReplayTable", () => {
  test("loads newline-delimited rows and answers both kinds", () => {
    const table = loadReplayTable(tableFile(ROWS));
    expect(table.size).toBe(3);
    expect(table.lookup("lev", "u1 <EOU>")).toBe("<SOB> [hotel] people 10 <EOB>");
    expect(table.lookup("response", "u1 <EOU>")).toBe("booked . reference [value_id] .");
    expect(table.lookup("lev", "u2 <EOU>")).toBe("<SOB> <EOB>");
  });

  test("misses return undefined", () => {
    const table = loadReplayTable(tableFile(ROWS));
    expect(table.lookup("lev", "never recorded")).toBeUndefined();
    expect(table.lookup("response", "u2 <EOU>")).toBeUndefined();
  });

  test("tolerates blank lines", () => {
    const table = loadReplayTable(tableFile(["", ROWS[0]!, "", ROWS[1]!, ""]));
    expect(table.size).toBe(2);
  });

  test("tolerates identical duplicate rows", () => {
    const table = loadReplayTable(tableFile([ROWS[0]!, ROWS[0]!]));
    expect(table.size).toBe(1);
  });

  test("rejects duplicates that disagree on output", () => {
    const conflicting = '{"kind": "lev", "input": "u1 <EOU>", "output": "different"}';
    expect(() => loadReplayTable(tableFile([ROWS[0]!, conflicting]))).toThrowError(
      /table\.jsonl:2: conflicting output/
    );
  });

  test("missing file reports the path", () => {
    expect(() => loadReplayTable("/nonexistent/table.jsonl")).toThrowError(ReplayError);
    expect(() => loadReplayTable("/nonexistent/table.jsonl")).toThrowError(
      /cannot read replay file/
    );
  });

  const badRows: Array<[string, string, RegExp]> = [
    ["non-json rows", "not json at all", /:1: row is not JSON/],
    ["array rows", "[1, 2]", /:1: row is not a JSON object/],
    ["unknown fields", '{"kind": "lev", "input": "x", "output": "y", "note": "z"}', /unknown field "note"/],
    ["bad kind", '{"kind": "full", "input": "x", "output": "y"}', /row kind must be/],
    ["missing output", '{"kind": "lev", "input": "x"}', /input and output must be text/],
    ["non-string input", '{"kind": "lev", "input": 1, "output": "y"}', /input and output must be text/],
  ];

  test.each(badRows)("rejects %s", (_name, row, message) => {
    expect(() => loadReplayTable(tableFile([row]))).toThrowError(ReplayError);
    expect(() => loadReplayTable(tableFile([row]))).toThrowError(message);
  });

  test("error messages carry the line number", () => {
    expect(() => loadReplayTable(tableFile([ROWS[0]!, "", "broken"]))).toThrowError(/:3: /);
  });
});

describe("replayReply", () => {
  test("answers recorded requests without warning", () => {
    const warnings: string[] = [];
    const reply = replayReply(loadReplayTable(tableFile(ROWS)), (m) => warnings.push(m));
    const output = reply({ id: 1, kind: "lev", input: "u1 <EOU>" });
    expect(output).toBe("<SOB> [hotel] people 10 <EOB>");
    expect(warnings).toEqual([]);
  });

  test("unknown keys answer empty and warn once", () => {
    const warnings: string[] = [];
    const reply = replayReply(loadReplayTable(tableFile(ROWS)), (m) => warnings.push(m));
    const output = reply({ id: 9, kind: "response", input: "probe", kb_state: "KB1" });
    expect(output).toBe("");
    expect(warnings).toHaveLength(1);
    expect(warnings[0]).toContain("no recorded response output for request 9");
    expect(warnings[0]).toContain(inputDigest("probe").slice(0, 12));
  });
});
