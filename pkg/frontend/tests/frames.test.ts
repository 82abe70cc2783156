import { describe, expect, it } from "vitest";

import { FrameSequencer } from "../src/frames.js";
import type { FrameMsg } from "../src/protocol.js";

function frame(step: number, keyframe = false, session = "s1"): FrameMsg {
  return {
    type: "frame",
    session,
    step,
    kind: "series-append",
    param_epoch: 0,
    keyframe,
    payload: {},
  };
}

describe("FrameSequencer", () => {
  it("applies frames in strictly increasing step order", () => {
    const applied: number[] = [];
    const seq = new FrameSequencer((f) => applied.push(f.step));
    for (const step of [1, 2, 3, 4]) seq.push(frame(step));
    expect(applied).toEqual([1, 2, 3, 4]);
  });

  it("never lets out-of-order or duplicate delivery corrupt state", () => {
    // Shuffled and duplicated delivery: the applied sequence must still be
    // strictly increasing, so the newest applied state is never overwritten.
    const applied: number[] = [];
    const seq = new FrameSequencer((f) => applied.push(f.step));
    const steps = [5, 1, 3, 3, 2, 8, 6, 8, 9, 4, 10];
    for (const step of steps) seq.push(frame(step));
    for (let i = 1; i < applied.length; i++) {
      expect(applied[i]).toBeGreaterThan(applied[i - 1]);
    }
    expect(applied[applied.length - 1]).toBe(10);
    expect(seq.dropped).toBeGreaterThan(0);
  });

  it("tracks sessions and kinds independently", () => {
    const applied: string[] = [];
    const seq = new FrameSequencer((f) => applied.push(`${f.session}:${f.step}`));
    seq.push(frame(5, false, "a"));
    seq.push(frame(1, false, "b"));
    expect(applied).toEqual(["a:5", "b:1"]);
  });

  it("restarts the stream on a keyframe", () => {
    const applied: Array<[number, boolean]> = [];
    const seq = new FrameSequencer((f) => applied.push([f.step, f.keyframe]));
    seq.push(frame(10));
    seq.push(frame(4, true)); // keyframe may rewind the step counter
    seq.push(frame(5));
    expect(applied).toEqual([
      [10, false],
      [4, true],
      [5, false],
    ]);
  });

  it("reset forgets a session", () => {
    const applied: number[] = [];
    const seq = new FrameSequencer((f) => applied.push(f.step));
    seq.push(frame(7));
    seq.reset("s1");
    seq.push(frame(2));
    expect(applied).toEqual([7, 2]);
  });
});
