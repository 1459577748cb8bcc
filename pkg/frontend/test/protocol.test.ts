import { describe, expect, it } from "vitest";

import { edgeKey, encodeControl, parseServerMessage } from "../src/protocol.js";

describe("message parsing", () => {
  it("accepts the documented message types", () => {
    expect(parseServerMessage('{"type":"hello","version":1}')!.type).toBe("hello");
    expect(parseServerMessage('{"type":"heartbeat","backlog":0,"pending":3}')!.type)
      .toBe("heartbeat");
    expect(parseServerMessage('{"type":"notice","text":"Paused at 1200"}')!.type)
      .toBe("notice");
    const stage = parseServerMessage(
      '{"type":"stage","stage_id":0,"cause":"time_threshold",' +
      '"timing":{"t_d":450,"t_m":600,"t_a":450,"t_p":500,"T_an":2000},' +
      '"deletions":[],"additions":["a",["a","b"]],"moves":[],"ephemeral":[],"lag":[]}',
    );
    expect(stage!.type).toBe("stage");
  });

  it("rejects junk and unknown types", () => {
    expect(parseServerMessage("not json")).toBeNull();
    expect(parseServerMessage('{"type":"mystery"}')).toBeNull();
    expect(parseServerMessage('{"type":"stage","stage_id":"x"}')).toBeNull();
    expect(parseServerMessage('{"type":"stage","stage_id":1}')).toBeNull();
  });

  it("canonicalizes edge keys", () => {
    expect(edgeKey(["b", "a"])).toBe(edgeKey(["a", "b"]));
  });

  it("encodes control messages with the wire envelope", () => {
    const raw = encodeControl({ command: "set_thresholds", args: { t_i: 3000 } });
    expect(JSON.parse(raw)).toEqual({
      type: "control",
      command: "set_thresholds",
      args: { t_i: 3000 },
    });
  });
});
