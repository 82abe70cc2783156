// Strict step-order application. The transport is ordered in practice, but
// the canvas must survive reordered or duplicated delivery: a frame is
// applied only if it advances the per-(session, kind) step, so a stale or
// repeated frame can never overwrite newer state. Keyframes restart the
// stream at their own step.

import type { FrameMsg } from "./protocol.js";

export class FrameSequencer {
  private lastStep = new Map<string, number>();
  dropped = 0;

  constructor(private deliver: (frame: FrameMsg) => void) {}

  private key(frame: FrameMsg): string {
    return `${frame.session}/${frame.kind}`;
  }

  /** Forget a session (before a fresh subscribe). */
  reset(session: string): void {
    for (const key of [...this.lastStep.keys()]) {
      if (key.startsWith(`${session}/`)) this.lastStep.delete(key);
    }
  }

  push(frame: FrameMsg): void {
    const key = this.key(frame);
    const last = this.lastStep.get(key) ?? -Infinity;
    if (!frame.keyframe && frame.step <= last) {
      this.dropped += 1;
      return;
    }
    this.lastStep.set(key, frame.step);
    this.deliver(frame);
  }

  lastAppliedStep(session: string, kind: string): number | undefined {
    return this.lastStep.get(`${session}/${kind}`);
  }
}
