import { describe, expect, it } from "vitest";

import { ProtocolError, parseRequest } from "../src/protocol.js";

describe("parseRequest", () => {
  it("accepts the handshake", () => {
    expect(parseRequest('{"type":"init","vocab_size":512}')).toEqual({
      type: "init",
      vocab_size: 512,
    });
  });

  it("accepts next requests and maps inf", () => {
    const req = parseRequest(
      '{"type":"next","context":[1,2],"bias_ids":[5],"delta":"inf"}',
    );
    expect(req).toEqual({ type: "next", context: [1, 2], bias_ids: [5], delta: Infinity });
    const finite = parseRequest(
      '{"type":"next","context":[],"bias_ids":[],"delta":2.5}',
    );
    expect(finite).toMatchObject({ delta: 2.5 });
  });

  it("rejects malformed requests", () => {
    const bad = [
      "not json",
      "[1,2]",
      '{"type":"fly"}',
      '{"type":"init","vocab_size":1}',
      '{"type":"init","vocab_size":"big"}',
      '{"type":"next","context":[-1],"bias_ids":[],"delta":1}',
      '{"type":"next","context":[1],"bias_ids":[1.5],"delta":1}',
      '{"type":"next","context":[1],"bias_ids":[1],"delta":"huge"}',
      '{"type":"next","context":[1],"bias_ids":[1]}',
    ];
    for (const line of bad) {
      expect(() => parseRequest(line), line).toThrow(ProtocolError);
    }
  });
});
