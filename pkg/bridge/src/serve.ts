#!/usr/bin/env node
// Bridge server: expose a small causal LM as a token source over
// NDJSON stdio.  Strictly serial request/reply; the process never sees
// key material, only token ids and bias sets.
//
//   node dist/serve.js --model tiny:512 --seed 1 [--temperature 1.0]
//                      [--record FILE | --replay FILE]
//
// --record logs every exchange (including the handshake) as JSONL for
// offline conformance replay; --replay serves a recorded transcript
// and reports any deviation instead of touching a model.

import * as fs from "node:fs";
import * as readline from "node:readline";

import { TinyCausalLM, parseModelId } from "./model.js";
import { Rand } from "./rng.js";
import { sampleToken } from "./sampling.js";
import {
  ProtocolError,
  errorReply,
  parseRequest,
  ready,
  token,
} from "./protocol.js";

interface Args {
  model: string;
  temperature: number;
  seed: number;
  record?: string;
  replay?: string;
}

function parseArgs(argv: string[]): Args {
  const args: Args = { model: "tiny", temperature: 1.0, seed: 0 };
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    const need = (): string => {
      const v = argv[++i];
      if (v === undefined) throw new Error(`missing value for ${a}`);
      return v;
    };
    if (a === "--model") args.model = need();
    else if (a === "--temperature") args.temperature = parseFloat(need());
    else if (a === "--seed") args.seed = parseInt(need(), 10);
    else if (a === "--record") args.record = need();
    else if (a === "--replay") args.replay = need();
    else throw new Error(`unknown flag ${a}`);
  }
  if (!(args.temperature > 0)) throw new Error("--temperature must be positive");
  if (!Number.isFinite(args.seed)) throw new Error("--seed must be an integer");
  return args;
}

function deepEqual(a: unknown, b: unknown): boolean {
  if (a === b) return true;
  if (Array.isArray(a) && Array.isArray(b)) {
    return a.length === b.length && a.every((v, i) => deepEqual(v, b[i]));
  }
  if (
    typeof a === "object" && a !== null &&
    typeof b === "object" && b !== null &&
    !Array.isArray(a) && !Array.isArray(b)
  ) {
    const ka = Object.keys(a).sort();
    const kb = Object.keys(b).sort();
    return (
      ka.length === kb.length &&
      ka.every((k, i) => k === kb[i] &&
        deepEqual((a as Record<string, unknown>)[k], (b as Record<string, unknown>)[k]))
    );
  }
  return false;
}

interface Exchange {
  request: unknown;
  reply: unknown;
}

function loadTranscript(path: string): Exchange[] {
  const lines = fs.readFileSync(path, "utf-8").split("\n").filter((l) => l.trim());
  return lines.map((l, i) => {
    const obj = JSON.parse(l);
    if (typeof obj !== "object" || obj === null || !("request" in obj) || !("reply" in obj)) {
      throw new Error(`transcript line ${i + 1} is not a request/reply pair`);
    }
    return obj as Exchange;
  });
}

export function main(): void {
  let args: Args;
  try {
    args = parseArgs(process.argv.slice(2));
  } catch (e) {
    process.stderr.write(`${(e as Error).message}\n`);
    process.exit(1);
  }

  const out = (line: string): void => {
    process.stdout.write(line + "\n");
  };

  if (args.replay) {
    const transcript = loadTranscript(args.replay);
    let cursor = 0;
    const rl = readline.createInterface({ input: process.stdin });
    rl.on("line", (line) => {
      if (!line.trim()) return;
      let incoming: unknown;
      try {
        incoming = JSON.parse(line);
      } catch {
        out(errorReply("request is not valid JSON"));
        return;
      }
      if (cursor >= transcript.length) {
        out(errorReply(`transcript exhausted after ${transcript.length} exchanges`));
        return;
      }
      const expected = transcript[cursor];
      if (!deepEqual(incoming, expected.request)) {
        out(errorReply(`transcript mismatch at exchange ${cursor}`));
        return;
      }
      cursor += 1;
      out(JSON.stringify(expected.reply));
    });
    return;
  }

  let model: TinyCausalLM;
  try {
    model = new TinyCausalLM(parseModelId(args.model, args.seed));
  } catch (e) {
    out(errorReply(`model load failure: ${(e as Error).message}`));
    process.exit(1);
  }

  const record = (request: unknown, replyLine: string): void => {
    if (args.record) {
      fs.appendFileSync(
        args.record,
        JSON.stringify({ request, reply: JSON.parse(replyLine) }) + "\n",
      );
    }
  };

  let effectiveVocab = 0;
  const rl = readline.createInterface({ input: process.stdin });
  rl.on("line", (line) => {
    if (!line.trim()) return;
    let raw: unknown = null;
    let reply: string;
    try {
      raw = JSON.parse(line);
    } catch {
      // leave raw null; parseRequest reports the JSON error below
    }
    try {
      const req = parseRequest(line);
      if (req.type === "init") {
        if (req.vocab_size > model.vocabSize) {
          throw new ProtocolError(
            `model vocabulary is ${model.vocabSize}, cannot serve ${req.vocab_size}`,
          );
        }
        effectiveVocab = req.vocab_size;
        reply = ready();
      } else {
        if (effectiveVocab === 0) {
          throw new ProtocolError("init must precede next");
        }
        if (req.context.some((t) => t >= effectiveVocab)) {
          throw new ProtocolError("context token outside the agreed vocabulary");
        }
        if (req.bias_ids.some((t) => t >= effectiveVocab)) {
          throw new ProtocolError("bias id outside the agreed vocabulary");
        }
        const logits = model.logits(req.context).subarray(0, effectiveVocab);
        const rand = new Rand(args.seed, req.context.length, 0x5eed);
        const tok = sampleToken(
          logits,
          req.bias_ids,
          req.delta,
          args.temperature,
          rand,
        );
        reply = token(tok);
      }
    } catch (e) {
      if (e instanceof ProtocolError || e instanceof Error) {
        reply = errorReply((e as Error).message);
      } else {
        reply = errorReply("internal error");
      }
    }
    out(reply);
    record(raw, reply);
  });
}

main();
