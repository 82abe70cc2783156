// Panel state: control bindings validated against the server registry, and
// the invertible view transform used by plane-based panels.

import type { Registry } from "./protocol.js";

export interface ControlBinding {
  control: "slider" | "drag" | "click";
  param: string;
}

export class PanelState {
  readonly bindings: ControlBinding[] = [];
  sessionId: string | null = null;
  paramEpoch = 0;
  restartRequired: string | null = null; // message for the restart dialog
  controlsEnabled = true;

  constructor(
    readonly experiment: string,
    private registry: Registry,
  ) {
    if (!(experiment in registry)) {
      throw new Error(`experiment ${experiment} not in server registry`);
    }
  }

  /** Bind a control to a parameter; only hot server-known keys qualify. */
  bind(control: ControlBinding["control"], param: string): void {
    const info = this.registry[this.experiment].params[param];
    if (!info) {
      throw new Error(
        `cannot bind ${control} to unknown parameter ${param}`,
      );
    }
    if (!info.hot) {
      throw new Error(
        `cannot bind ${control} to cold parameter ${param}`,
      );
    }
    this.bindings.push({ control, param });
  }
}

/**
 * Affine world<->screen transform with invertibility guaranteed by
 * construction (zero scales are rejected).
 */
export class ViewTransform {
  constructor(
    readonly worldX: number,
    readonly worldY: number,
    readonly worldWidth: number,
    readonly worldHeight: number,
    readonly screenWidth: number,
    readonly screenHeight: number,
  ) {
    if (worldWidth === 0 || worldHeight === 0) {
      throw new Error("degenerate world window");
    }
    if (screenWidth <= 0 || screenHeight <= 0) {
      throw new Error("degenerate screen size");
    }
  }

  toScreen(x: number, y: number): [number, number] {
    return [
      ((x - this.worldX) / this.worldWidth) * this.screenWidth,
      // screen y grows downward
      (1 - (y - this.worldY) / this.worldHeight) * this.screenHeight,
    ];
  }

  toWorld(sx: number, sy: number): [number, number] {
    return [
      this.worldX + (sx / this.screenWidth) * this.worldWidth,
      this.worldY + (1 - sy / this.screenHeight) * this.worldHeight,
    ];
  }

  /** New transform for a screen-space rectangle; null if degenerate. */
  zoomTo(
    sx0: number,
    sy0: number,
    sx1: number,
    sy1: number,
  ): ViewTransform | null {
    if (sx0 === sx1 || sy0 === sy1) return null; // zero-area drag: ignore
    const [wx0, wy0] = this.toWorld(Math.min(sx0, sx1), Math.max(sy0, sy1));
    const [wx1, wy1] = this.toWorld(Math.max(sx0, sx1), Math.min(sy0, sy1));
    return new ViewTransform(
      wx0,
      wy0,
      wx1 - wx0,
      wy1 - wy0,
      this.screenWidth,
      this.screenHeight,
    );
  }
}
