// Wire protocol: newline-delimited JSON objects on stdio.
//
//   client -> {"type":"init","vocab_size":V}        server -> {"type":"ready"}
//   client -> {"type":"next","context":[int],
//              "bias_ids":[int],"delta":float|"inf"} server -> {"type":"token","id":t}
//
// Errors are replied as {"type":"error","message":...} and the
// connection stays up.  Replies arrive strictly in request order.

export interface InitRequest {
  type: "init";
  vocab_size: number;
}

export interface NextRequest {
  type: "next";
  context: number[];
  bias_ids: number[];
  delta: number; // Infinity when the wire carries "inf"
}

export type Request = InitRequest | NextRequest;

export class ProtocolError extends Error {}

function isIntArray(v: unknown): v is number[] {
  return Array.isArray(v) && v.every((x) => Number.isInteger(x) && x >= 0);
}

export function parseRequest(line: string): Request {
  let obj: unknown;
  try {
    obj = JSON.parse(line);
  } catch {
    throw new ProtocolError("request is not valid JSON");
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new ProtocolError("request must be a JSON object");
  }
  const msg = obj as Record<string, unknown>;
  if (msg.type === "init") {
    if (!Number.isInteger(msg.vocab_size) || (msg.vocab_size as number) < 2) {
      throw new ProtocolError("init needs an integer vocab_size >= 2");
    }
    return { type: "init", vocab_size: msg.vocab_size as number };
  }
  if (msg.type === "next") {
    if (!isIntArray(msg.context)) {
      throw new ProtocolError("next.context must be a list of token ids");
    }
    if (!isIntArray(msg.bias_ids)) {
      throw new ProtocolError("next.bias_ids must be a list of token ids");
    }
    let delta: number;
    if (msg.delta === "inf") {
      delta = Infinity;
    } else if (typeof msg.delta === "number" && Number.isFinite(msg.delta)) {
      delta = msg.delta;
    } else {
      throw new ProtocolError('next.delta must be a finite number or "inf"');
    }
    return { type: "next", context: msg.context, bias_ids: msg.bias_ids, delta };
  }
  throw new ProtocolError(`unknown request type ${JSON.stringify(msg.type)}`);
}

export function ready(): string {
  return JSON.stringify({ type: "ready" });
}

export function token(id: number): string {
  return JSON.stringify({ type: "token", id });
}

export function errorReply(message: string): string {
  return JSON.stringify({ type: "error", message });
}
