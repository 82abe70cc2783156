// Field panel: play/pause/step for a streamed experiment, hot-parameter
// sliders, a click-to-perturb action, and the latest field or point batch
// kept ready for drawing. Every visible change comes from a received frame;
// the panel never simulates anything locally.

import { LabClient, ServerError } from "../client.js";
import type { FrameMsg, Registry } from "../protocol.js";
import { unpackArray } from "../protocol.js";
import { RasterBuffer, fieldColor } from "../render.js";
import { PanelState } from "../state.js";

export interface FieldLike {
  values: Float32Array;
  shape: number[];
}

export class FieldPanel {
  readonly state: PanelState;
  field: FieldLike | null = null;
  points: Array<[number, number]> = [];
  epochBadge = 0;
  stepCounter = 0;
  private sessionId: string | null = null;
  private frameWaiters: Array<(frame: FrameMsg) => void> = [];

  constructor(
    private client: LabClient,
    registry: Registry,
    readonly experiment: string,
    sliderParams: string[],
    readonly maxPoints = 20_000,
  ) {
    this.state = new PanelState(experiment, registry);
    for (const param of sliderParams) {
      this.state.bind("slider", param);
    }
  }

  async start(
    params: Record<string, unknown> = {},
    options: { seed?: number; steps_per_frame?: number } = {},
  ): Promise<string> {
    const session = await this.client.createSession(
      this.experiment,
      params,
      options,
    );
    this.sessionId = session.id;
    this.state.sessionId = session.id;
    this.stepCounter = session.step_count;
    await this.client.subscribe(session.id, (frame) => this.applyFrame(frame));
    return session.id;
  }

  applyFrame(frame: FrameMsg): void {
    this.epochBadge = frame.param_epoch;
    this.stepCounter = frame.step;
    if (frame.payload.field) {
      const unpacked = unpackArray(frame.payload.field);
      this.field = { values: unpacked.values, shape: unpacked.shape };
    } else if (frame.payload.points) {
      const { shape, values } = unpackArray(frame.payload.points);
      for (let i = 0; i < shape[0]; i++) {
        this.points.push([values[2 * i], values[2 * i + 1]]);
      }
    } else if (frame.payload.states) {
      const { shape, values } = unpackArray(frame.payload.states);
      const dim = shape[1];
      for (let i = 0; i < shape[0]; i++) {
        this.points.push([values[dim * i], values[dim * i + 1]]);
      }
    }
    if (this.points.length > this.maxPoints) {
      this.points.splice(0, this.points.length - this.maxPoints);
    }
    const waiters = this.frameWaiters;
    this.frameWaiters = [];
    for (const waiter of waiters) waiter(frame);
  }

  nextFrame(timeoutMs = 10_000): Promise<FrameMsg> {
    return new Promise((resolve, reject) => {
      const timer = setTimeout(
        () => reject(new Error("no frame before timeout")),
        timeoutMs,
      );
      this.frameWaiters.push((frame) => {
        clearTimeout(timer);
        resolve(frame);
      });
    });
  }

  private session(): string {
    if (!this.sessionId) throw new Error("panel not started");
    if (!this.state.controlsEnabled) throw new Error("controls disabled");
    return this.sessionId;
  }

  async play(): Promise<void> {
    await this.client.control(this.session(), "run");
  }

  async pause(): Promise<number> {
    const snap = await this.client.control(this.session(), "pause");
    return snap.step_count;
  }

  async step(n: number): Promise<number> {
    const snap = await this.client.control(this.session(), "step", n);
    return snap.step_count;
  }

  /**
   * Slider/drag mutation. Validation errors propagate; a restart-required
   * answer (cold key) opens the restart dialog instead of throwing.
   */
  async setParam(key: string, value: unknown): Promise<number | null> {
    try {
      const epoch = await this.client.updateParams(this.session(), {
        [key]: value,
      });
      this.state.paramEpoch = epoch;
      return epoch;
    } catch (err) {
      if (err instanceof ServerError && err.code === "restart-required") {
        this.state.restartRequired = err.message;
        return null;
      }
      throw err;
    }
  }

  /** Click on the grid: one-shot local bump (activator-inhibitor panel). */
  async perturb(
    row: number,
    col: number,
    amplitude: number,
    radius: number,
  ): Promise<number | null> {
    return this.setParam("perturb", [row, col, amplitude, radius]);
  }

  drawField(buffer: RasterBuffer): void {
    if (!this.field || this.field.shape.length !== 2) return;
    const [rows, cols] = this.field.shape;
    let lo = Infinity;
    let hi = -Infinity;
    for (const v of this.field.values) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
    for (let y = 0; y < Math.min(rows, buffer.height); y++) {
      for (let x = 0; x < Math.min(cols, buffer.width); x++) {
        const [r, g, b] = fieldColor(this.field.values[y * cols + x], lo, hi);
        buffer.setPixel(x, y, r, g, b);
      }
    }
  }

  setConnectionState(connected: boolean): void {
    this.state.controlsEnabled = connected;
  }
}
