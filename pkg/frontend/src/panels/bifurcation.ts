// Bifurcation diagram panel. The cloud is produced by steering the live
// logistic session across the r-window column by column (patch r, discard a
// transient, record the streamed iterates), so every plotted point came from
// the server. Rectangle zoom re-runs the sweep over the new window; the
// r-slider drives a cobweb overlay fed by the same orbit stream.

import type { LabClient } from "../client.js";
import type { FrameMsg, Registry } from "../protocol.js";
import { unpackArray } from "../protocol.js";
import { PanelState, ViewTransform } from "../state.js";

export const INITIAL_WINDOW = { rMin: 2.4, rMax: 4.0 };

interface Collector {
  epoch: number;
  fromIndex: number;
  values: number[];
  want: number;
  resolve: () => void;
}

export class BifurcationPanel {
  readonly state: PanelState;
  view: ViewTransform;
  cloud: Array<[number, number]> = []; // (r, x) points
  orbitTail: number[] = [];            // recent iterates for the cobweb
  private sessionId: string | null = null;
  private collector: Collector | null = null;
  private orbitIndex = 0;

  constructor(
    private client: LabClient,
    registry: Registry,
    readonly screenWidth = 400,
    readonly screenHeight = 300,
  ) {
    this.state = new PanelState("logistic", registry);
    this.state.bind("slider", "r");
    this.view = this.initialView();
  }

  private initialView(): ViewTransform {
    return new ViewTransform(
      INITIAL_WINDOW.rMin,
      0,
      INITIAL_WINDOW.rMax - INITIAL_WINDOW.rMin,
      1,
      this.screenWidth,
      this.screenHeight,
    );
  }

  async start(): Promise<string> {
    const session = await this.client.createSession(
      "logistic",
      { r: 3.6, x0: 0.5 },
      { steps_per_frame: 16 },
    );
    this.sessionId = session.id;
    this.state.sessionId = session.id;
    await this.client.subscribe(session.id, (frame) => this.applyFrame(frame));
    return session.id;
  }

  applyFrame(frame: FrameMsg): void {
    if (frame.kind !== "series-append") return;
    const values = unpackArray(frame.payload.values).values;
    const start = frame.payload.start_index as number;
    this.orbitIndex = start + values.length;
    for (const v of values) {
      this.orbitTail.push(v);
    }
    if (this.orbitTail.length > 64) {
      this.orbitTail.splice(0, this.orbitTail.length - 64);
    }
    const col = this.collector;
    if (col && frame.param_epoch === col.epoch) {
      for (let i = 0; i < values.length; i++) {
        if (start + i >= col.fromIndex && col.values.length < col.want) {
          col.values.push(values[i]);
        }
      }
      if (col.values.length >= col.want) {
        this.collector = null;
        col.resolve();
      }
    }
  }

  /** Slider moved: patch r on the live session. */
  async setR(r: number): Promise<number> {
    if (!this.sessionId) throw new Error("panel not started");
    const epoch = await this.client.updateParams(this.sessionId, { r });
    this.state.paramEpoch = epoch;
    return epoch;
  }

  /** Advance the live orbit so the cobweb overlay refreshes. */
  async advanceOrbit(n = 48): Promise<void> {
    if (!this.sessionId) throw new Error("panel not started");
    await this.client.control(this.sessionId, "step", n);
  }

  /** Collect `samples` post-transient iterates at one r. */
  private async column(
    r: number,
    transient: number,
    samples: number,
  ): Promise<number[]> {
    if (!this.sessionId) throw new Error("panel not started");
    const epoch = await this.setR(r);
    const snap = await this.client.control(this.sessionId, "pause");
    const values: number[] = [];
    const done = new Promise<void>((resolve) => {
      this.collector = {
        epoch,
        fromIndex: snap.step_count + transient,
        values,
        want: samples,
        resolve,
      };
    });
    await this.client.control(this.sessionId, "step", transient + samples);
    await done;
    return values;
  }

  /** Re-render the cloud over the current window, column by column. */
  async sweep(nR: number, transient = 60, samples = 12): Promise<void> {
    const { worldX, worldWidth } = this.view;
    const cloud: Array<[number, number]> = [];
    for (let i = 0; i < nR; i++) {
      const r = worldX + ((i + 0.5) / nR) * worldWidth;
      const clamped = Math.min(Math.max(r, 1e-9), 4.0);
      const xs = await this.column(clamped, transient, samples);
      for (const x of xs) cloud.push([clamped, x]);
    }
    this.cloud = cloud;
  }

  /**
   * Rectangle zoom in screen coordinates; a degenerate (zero-area)
   * rectangle is ignored and reports false.
   */
  zoomTo(sx0: number, sy0: number, sx1: number, sy1: number): boolean {
    const next = this.view.zoomTo(sx0, sy0, sx1, sy1);
    if (next === null) return false;
    this.view = next;
    return true;
  }

  reset(): void {
    this.view = this.initialView();
  }

  /**
   * Cobweb polyline for the current orbit tail in world coordinates:
   * (x_n, x_n) -> (x_n, x_{n+1}) -> (x_{n+1}, x_{n+1}) -> ...
   */
  cobweb(): Array<[number, number]> {
    const xs = this.orbitTail;
    const out: Array<[number, number]> = [];
    for (let i = 0; i + 1 < xs.length; i++) {
      out.push([xs[i], xs[i]]);
      out.push([xs[i], xs[i + 1]]);
    }
    if (xs.length > 0) {
      out.push([xs[xs.length - 1], xs[xs.length - 1]]);
    }
    return out;
  }
}
