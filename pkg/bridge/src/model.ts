/**
 * Text-to-text model adapters for model mode.
 *
 * The bridge ships no inference runtime of its own; it loads an adapter by
 * identifier and feeds it one input string per request, single-threaded and
 * greedy. Identifiers:
 *
 *   echo             builtin; returns the input unchanged (wiring checks)
 *   module:<path>    import a module whose default export is a factory
 *                    (settings) => TextModel, sync or async
 *
 * A "response" request is conditioned on the knowledge-base state by
 * prefixing the input text with its token before the model sees it, e.g.
 * "<KB2> ...". Generated text longer than the configured budget is cut at
 * whole whitespace tokens. The device hint is passed through to the adapter
 * untouched; the builtin ignores it.
 */

import { resolve } from "node:path";
import { pathToFileURL } from "node:url";
import type { RequestFrame } from "./frames.js";

export interface TextModel {
  generate(input: string): Promise<string> | string;
}

export interface ModelSettings {
  identifier: string;
  maxLength: number;
  device: string;
}

/** A model that cannot be loaded or does not satisfy the adapter shape. */
export class ModelError extends Error {}

class EchoModel implements TextModel {
  generate(input: string): string {
    return input;
  }
}

export async function loadModel(settings: ModelSettings): Promise<TextModel> {
  const id = settings.identifier;
  if (id === "echo") {
    return new EchoModel();
  }
  if (id.startsWith("module:")) {
    const spec = id.slice("module:".length);
    if (spec === "") {
      throw new ModelError("module model needs a path, e.g. module:./adapter.mjs");
    }
    let loaded: Record<string, unknown>;
    try {
      loaded = await import(pathToFileURL(resolve(spec)).href);
    } catch (error) {
      const reason = error instanceof Error ? error.message : String(error);
      throw new ModelError(`cannot load model module ${spec}: ${reason}`);
    }
    const factory = loaded["default"];
    if (typeof factory !== "function") {
      throw new ModelError(`model module ${spec} must default-export a factory function`);
    }
    const model: unknown = await factory(settings);
    if (
      typeof model !== "object" ||
      model === null ||
      typeof (model as TextModel).generate !== "function"
    ) {
      throw new ModelError(`model module ${spec} factory did not return a generate() object`);
    }
    return model as TextModel;
  }
  throw new ModelError(`unknown model identifier "${id}" (expected "echo" or "module:<path>")`);
}

/** The text the wrapped model actually sees for a request. */
export function modelInput(frame: RequestFrame): string {
  if (frame.kind === "response") {
    return `<${frame.kb_state}> ${frame.input}`;
  }
  return frame.input;
}

/** Cut text to at most `maxTokens` whitespace tokens; shorter text passes through untouched. */
export function clipTokens(text: string, maxTokens: number): string {
  const tokens = text.split(/\s+/).filter((token) => token !== "");
  if (tokens.length <= maxTokens) {
    return text;
  }
  return tokens.slice(0, maxTokens).join(" ");
}

/** Build the reply function for model mode. */
export function modelReply(
  model: TextModel,
  maxLength: number
): (frame: RequestFrame) => Promise<string> {
  return async (frame) => {
    const generated = await model.generate(modelInput(frame));
    return clipTokens(generated, maxLength);
  };
}
