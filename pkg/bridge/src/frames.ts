/**
 * Wire frames for the tracker protocol.
 *
 * One JSON object per line, UTF-8. The client sends request frames:
 *
 *   {"id": 3, "kind": "lev", "input": "... <EOU>"}
 *   {"id": 4, "kind": "response", "input": "... <EOU>", "kb_state": "KB8"}
 *
 * and reads back exactly one reply frame per request, in order:
 *
 *   {"id": 4, "output": "i am sorry , the booking was unsuccessful ."}
 *
 * "lev" requests ask for a state edit span, "response" requests ask for a
 * delexicalized system response and carry the knowledge-base state token
 * (KB1..KB15) that conditions it. Request ids are strictly increasing
 * within a session; the increasing check itself lives in the serve loop
 * because it is per-session state, not per-frame.
 */

export type RequestKind = "lev" | "response";

export interface RequestFrame {
  id: number;
  kind: RequestKind;
  input: string;
  kb_state?: string;
}

/** A request line this bridge cannot answer: bad JSON or bad fields. */
export class FrameError extends Error {}

const KB_STATE = /^KB(1[0-5]|[1-9])$/;
const REQUEST_KEYS = new Set(["id", "kind", "input", "kb_state"]);

/** Trim long payloads out of error messages. */
function clip(line: string): string {
  return line.length > 120 ? `${line.slice(0, 120)}...` : line;
}

/**
 * Parse and validate one request line.
 *
 * Strict by design: this is a reference peer, and an off-protocol client
 * is a bug worth surfacing loudly rather than guessing around.
 */
export function parseRequestLine(line: string): RequestFrame {
  let raw: unknown;
  try {
    raw = JSON.parse(line);
  } catch {
    throw new FrameError(`request is not JSON: ${clip(line)}`);
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new FrameError(`request is not a JSON object: ${clip(line)}`);
  }
  const frame = raw as Record<string, unknown>;
  for (const key of Object.keys(frame)) {
    if (!REQUEST_KEYS.has(key)) {
      throw new FrameError(`request has unknown field "${key}"`);
    }
  }
  const { id, kind, input, kb_state } = frame;
  if (typeof id !== "number" || !Number.isInteger(id) || id < 1) {
    throw new FrameError(`request id must be a positive integer, got ${JSON.stringify(id)}`);
  }
  if (kind !== "lev" && kind !== "response") {
    throw new FrameError(`request kind must be "lev" or "response", got ${JSON.stringify(kind)}`);
  }
  if (typeof input !== "string") {
    throw new FrameError(`request ${id} input must be text`);
  }
  if (kind === "response") {
    if (typeof kb_state !== "string" || !KB_STATE.test(kb_state)) {
      throw new FrameError(
        `response request ${id} needs a kb_state of KB1..KB15, got ${JSON.stringify(kb_state)}`
      );
    }
  } else if (kb_state !== undefined) {
    throw new FrameError(`lev request ${id} must not carry kb_state`);
  }
  return kind === "response" ? { id, kind, input, kb_state } : { id, kind, input };
}

/** Serialize one reply frame, newline included. */
export function formatReply(id: number, output: string): string {
  return JSON.stringify({ id, output }) + "\n";
}
