#!/usr/bin/env node
/**
 * Generator bridge command line.
 *
 * Serves the tracker wire protocol on stdio (default) or one TCP session,
 * answering from a recorded replay table or a wrapped text-to-text model:
 *
 *   node dist/cli.js --mode replay --replay-file gold.jsonl
 *   node dist/cli.js --mode model --model echo --max-length 64
 *   node dist/cli.js --mode replay --replay-file gold.jsonl --tcp-port 0
 *
 * Exactly one mode is active per run; the table or model is loaded before
 * the first frame is read, so a broken one exits nonzero without serving.
 * Exit status: 0 once the peer closes the stream, 1 when loading fails or
 * the peer breaks protocol, 2 for bad usage.
 */

import { once } from "node:events";
import { createServer, type Socket } from "node:net";
import type { AddressInfo } from "node:net";
import { pathToFileURL } from "node:url";
import { loadModel, modelReply } from "./model.js";
import { loadReplayTable, replayReply } from "./replay.js";
import { serve, type ReplyFn } from "./server.js";

export interface BridgeConfig {
  mode: "replay" | "model";
  replayFile?: string;
  modelId?: string;
  maxLength: number;
  device: string;
}

export interface CliOptions {
  config: BridgeConfig;
  tcpPort?: number;
}

export class UsageError extends Error {}

export const USAGE = `usage: bridge --mode replay --replay-file PATH [--tcp-port N]
       bridge --mode model --model ID [--max-length N] [--device NAME] [--tcp-port N]`;

export function parseArgs(argv: string[]): CliOptions {
  let mode: "replay" | "model" | undefined;
  let replayFile: string | undefined;
  let modelId: string | undefined;
  let maxLength = 256;
  let device = "cpu";
  let tcpPort: number | undefined;

  let i = 0;
  const value = (flag: string): string => {
    const next = argv[++i];
    if (next === undefined) {
      throw new UsageError(`${flag} needs a value`);
    }
    return next;
  };
  for (; i < argv.length; i++) {
    const flag = argv[i];
    switch (flag) {
      case "--mode": {
        const got = value(flag);
        if (got !== "replay" && got !== "model") {
          throw new UsageError(`--mode must be "replay" or "model", got "${got}"`);
        }
        mode = got;
        break;
      }
      case "--replay-file":
        replayFile = value(flag);
        break;
      case "--model":
        modelId = value(flag);
        break;
      case "--device":
        device = value(flag);
        break;
      case "--max-length": {
        const got = Number(value(flag));
        if (!Number.isInteger(got) || got < 1) {
          throw new UsageError("--max-length must be a positive integer");
        }
        maxLength = got;
        break;
      }
      case "--tcp-port": {
        const got = Number(value(flag));
        if (!Number.isInteger(got) || got < 0 || got > 65535) {
          throw new UsageError("--tcp-port must be an integer in 0..65535");
        }
        tcpPort = got;
        break;
      }
      default:
        throw new UsageError(`unknown flag "${flag}"`);
    }
  }

  if (mode === undefined) {
    throw new UsageError("--mode is required");
  }
  if (mode === "replay") {
    if (replayFile === undefined) {
      throw new UsageError("replay mode needs --replay-file");
    }
    if (modelId !== undefined) {
      throw new UsageError("--model conflicts with --mode replay");
    }
  } else {
    if (modelId === undefined) {
      throw new UsageError("model mode needs --model");
    }
    if (replayFile !== undefined) {
      throw new UsageError("--replay-file conflicts with --mode model");
    }
  }
  return { config: { mode, replayFile, modelId, maxLength, device }, tcpPort };
}

/** Load whatever the mode needs and return the reply function. Throws before serving. */
export async function buildReply(
  config: BridgeConfig,
  warn: (message: string) => void
): Promise<ReplyFn> {
  if (config.mode === "replay") {
    const table = loadReplayTable(config.replayFile as string);
    return replayReply(table, warn);
  }
  const model = await loadModel({
    identifier: config.modelId as string,
    maxLength: config.maxLength,
    device: config.device,
  });
  return modelReply(model, config.maxLength);
}

/** Serve on stdio until the peer closes its end. */
async function serveStdio(reply: ReplyFn): Promise<void> {
  try {
    await serve(process.stdin, process.stdout, reply);
  } finally {
    // A protocol error leaves stdin open mid-stream; release it so the
    // process can exit instead of waiting on a peer that will never close.
    process.stdin.destroy();
  }
}

/** Serve exactly one TCP session on 127.0.0.1 and return when it ends. */
async function serveTcp(port: number, reply: ReplyFn): Promise<void> {
  const server = createServer();
  server.listen(port, "127.0.0.1");
  await once(server, "listening");
  const bound = (server.address() as AddressInfo).port;
  process.stdout.write(`listening on ${bound}\n`);
  const [socket] = (await once(server, "connection")) as [Socket];
  server.close();
  try {
    await serve(socket, socket, reply);
    socket.end();
  } catch (error) {
    // Protocol broken: no reply is owed, so cut the connection rather
    // than wait for a misbehaving peer to hang up.
    socket.destroy();
    throw error;
  }
}

export async function main(argv: string[]): Promise<void> {
  let options: CliOptions;
  try {
    options = parseArgs(argv);
  } catch (error) {
    if (error instanceof UsageError) {
      process.stderr.write(`bridge: ${error.message}\n${USAGE}\n`);
      process.exitCode = 2;
      return;
    }
    throw error;
  }

  const warn = (message: string) => process.stderr.write(`bridge: ${message}\n`);
  let reply: ReplyFn;
  try {
    reply = await buildReply(options.config, warn);
  } catch (error) {
    warn(error instanceof Error ? error.message : String(error));
    process.exitCode = 1;
    return;
  }

  try {
    if (options.tcpPort !== undefined) {
      await serveTcp(options.tcpPort, reply);
    } else {
      await serveStdio(reply);
    }
  } catch (error) {
    warn(error instanceof Error ? error.message : String(error));
    process.exitCode = 1;
  }
}

// Run only when invoked as a program, not when imported by tests.
const invokedAs = process.argv[1] ? pathToFileURL(process.argv[1]).href : "";
if (import.meta.url === invokedAs) {
  // Don't call process.exit; let stdout drain before the loop empties.
  main(process.argv.slice(2)).catch((error) => {
    process.stderr.write(`bridge: ${error instanceof Error ? error.message : String(error)}\n`);
    process.exitCode = 1;
  });
}
