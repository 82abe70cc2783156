import { describe, expect, it } from "vitest";

import {
  MessageDecoder,
  encodeMessage,
  unpackArray,
} from "../src/protocol.js";

describe("message framing", () => {
  it("round-trips messages split across arbitrary chunks", () => {
    const messages = [
      { type: "health" },
      { type: "create", experiment: "lorenz", params: { r: 28 } },
      { big: "x".repeat(5000) },
    ];
    const blob = Buffer.concat(
      messages.map((m) => Buffer.from(encodeMessage(m))),
    );
    const decoder = new MessageDecoder();
    const out: object[] = [];
    for (let i = 0; i < blob.length; i += 3) {
      out.push(...decoder.feed(new Uint8Array(blob.subarray(i, i + 3))));
    }
    expect(out).toEqual(messages);
  });

  it("uses a 4-byte big-endian length prefix", () => {
    const framed = encodeMessage({ a: 1 });
    const body = JSON.stringify({ a: 1 });
    expect(framed.length).toBe(4 + body.length);
    const view = new DataView(framed.buffer);
    expect(view.getUint32(0, false)).toBe(body.length);
  });
});

describe("payload packing", () => {
  it("decodes base64 little-endian f32 row-major arrays", () => {
    const values = new Float32Array([1.5, -2.25, 3, 4, 5.5, 0]);
    const data = Buffer.from(values.buffer).toString("base64");
    const out = unpackArray({ dtype: "f32le", shape: [2, 3], data });
    expect(out.shape).toEqual([2, 3]);
    expect(Array.from(out.values)).toEqual([1.5, -2.25, 3, 4, 5.5, 0]);
  });

  it("rejects unknown dtypes", () => {
    expect(() =>
      unpackArray({ dtype: "f64le" as never, shape: [1], data: "" }),
    ).toThrow(/unsupported/);
  });
});
