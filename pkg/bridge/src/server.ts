/**
 * Single-threaded request loop over the wire protocol.
 *
 * Reads one request frame per line, answers each with exactly one reply
 * frame carrying the same id, and returns once the input stream ends. The
 * protocol allows one request in flight, so strict lockstep is both
 * sufficient and required: each reply is written before the next line is
 * parsed. Malformed frames and non-increasing ids abort the session; a
 * frame without a trustworthy id has nothing valid to reply to, and
 * answering it anyway would desynchronize the stream.
 */

import { once } from "node:events";
import { createInterface } from "node:readline";
import type { Readable, Writable } from "node:stream";
import { FrameError, formatReply, parseRequestLine, type RequestFrame } from "./frames.js";

export type ReplyFn = (frame: RequestFrame) => Promise<string> | string;

/**
 * Serve the protocol until end-of-stream.
 *
 * Blank lines are skipped. Throws FrameError on protocol violations and
 * whatever `reply` throws on handler failures; the caller owns exit codes.
 */
export async function serve(input: Readable, output: Writable, reply: ReplyFn): Promise<void> {
  const lines = createInterface({ input, crlfDelay: Infinity });
  let lastId = 0;
  for await (const line of lines) {
    if (line.trim() === "") {
      continue;
    }
    const frame = parseRequestLine(line);
    if (frame.id <= lastId) {
      throw new FrameError(`request id ${frame.id} does not increase past ${lastId}`);
    }
    lastId = frame.id;
    const text = await reply(frame);
    // One in flight keeps the buffer to a single reply, but respect
    // backpressure anyway so a slow reader cannot grow it.
    if (!output.write(formatReply(frame.id, text))) {
      await once(output, "drain");
    }
  }
}
