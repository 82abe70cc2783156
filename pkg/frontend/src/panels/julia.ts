// Julia explorer: a marker dragged over a parameter-plane mini-map patches c
// on the live session; the main canvas assembles escape tiles, and a tile
// from a superseded epoch can never overwrite newer pixels.

import type { LabClient } from "../client.js";
import type { FrameMsg, Registry } from "../protocol.js";
import { unpackArray } from "../protocol.js";
import { RasterBuffer, escapeColor } from "../render.js";
import { PanelState } from "../state.js";

export interface JuliaPanelOptions {
  pixelCols: number;
  pixelRows: number;
  maxIter: number;
  width: number;
  tileSize?: number;
}

export class JuliaPanel {
  readonly state: PanelState;
  counts: Float32Array;
  epoch = 0;
  coveredPixels = 0;
  private sessionId: string | null = null;
  private onComplete: (() => void) | null = null;

  constructor(
    private client: LabClient,
    registry: Registry,
    readonly options: JuliaPanelOptions,
  ) {
    this.state = new PanelState("julia", registry);
    this.state.bind("drag", "c_re");
    this.state.bind("drag", "c_im");
    this.counts = new Float32Array(options.pixelCols * options.pixelRows);
  }

  async start(cRe: number, cIm: number): Promise<string> {
    const { pixelCols, pixelRows, maxIter, width, tileSize } = this.options;
    const session = await this.client.createSession("julia", {
      c_re: cRe,
      c_im: cIm,
      pixel_cols: pixelCols,
      pixel_rows: pixelRows,
      max_iter: maxIter,
      width,
      tile_size: tileSize ?? 16,
      smooth: false,
    });
    this.sessionId = session.id;
    this.state.sessionId = session.id;
    await this.client.subscribe(session.id, (frame) => this.applyFrame(frame));
    return session.id;
  }

  /** Marker drag: patch c; the ack's epoch marks the render pass we await. */
  async dragMarker(cRe: number, cIm: number): Promise<number> {
    if (!this.sessionId || !this.state.controlsEnabled) {
      throw new Error("panel not connected");
    }
    const epoch = await this.client.updateParams(this.sessionId, {
      c_re: cRe,
      c_im: cIm,
    });
    this.state.paramEpoch = epoch;
    return epoch;
  }

  applyFrame(frame: FrameMsg): void {
    if (frame.kind !== "escape-tile") return;
    if (frame.payload.restart) return; // keyframe marker, no pixels
    if (frame.param_epoch < this.epoch) return; // stale tile: drop
    if (frame.param_epoch > this.epoch) {
      // Newer render pass: restart assembly.
      this.epoch = frame.param_epoch;
      this.counts.fill(-1);
      this.coveredPixels = 0;
    }
    const { row0, col0, rows, cols } = frame.payload;
    const tile = unpackArray(frame.payload.counts).values;
    const frameCols = this.options.pixelCols;
    for (let r = 0; r < rows; r++) {
      for (let c = 0; c < cols; c++) {
        this.counts[(row0 + r) * frameCols + (col0 + c)] = tile[r * cols + c];
      }
    }
    this.coveredPixels += rows * cols;
    if (this.isComplete() && this.onComplete) {
      const fn = this.onComplete;
      this.onComplete = null;
      fn();
    }
  }

  isComplete(): boolean {
    return (
      this.coveredPixels >= this.options.pixelCols * this.options.pixelRows
    );
  }

  /** Resolve when the given epoch (default: latest requested) is fully
   * assembled. */
  waitForCompleteEpoch(epoch: number, timeoutMs = 15000): Promise<void> {
    return new Promise((resolve, reject) => {
      const timer = setTimeout(
        () => reject(new Error(`epoch ${epoch} incomplete after timeout`)),
        timeoutMs,
      );
      const check = () => {
        if (this.epoch === epoch && this.isComplete()) {
          clearTimeout(timer);
          resolve();
        } else {
          this.onComplete = check;
        }
      };
      check();
    });
  }

  draw(buffer: RasterBuffer): void {
    const { pixelCols, pixelRows, maxIter } = this.options;
    for (let y = 0; y < Math.min(pixelRows, buffer.height); y++) {
      for (let x = 0; x < Math.min(pixelCols, buffer.width); x++) {
        const count = this.counts[y * pixelCols + x];
        const [r, g, b] =
          count < 0 ? [8, 8, 8] : escapeColor(count, maxIter);
        buffer.setPixel(x, y, r, g, b);
      }
    }
  }

  setConnectionState(connected: boolean): void {
    this.state.controlsEnabled = connected;
  }
}
