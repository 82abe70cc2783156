import { describe, expect, it } from "vitest";

import { RasterBuffer, drawPolyline, escapeColor, fieldColor }
  from "../src/render.js";

describe("RasterBuffer", () => {
  it("sets and reads pixels, clipping out-of-range writes", () => {
    const buffer = new RasterBuffer(8, 4);
    buffer.clear(1, 2, 3);
    expect(buffer.getPixel(0, 0)).toEqual([1, 2, 3]);
    buffer.setPixel(7, 3, 200, 100, 50);
    expect(buffer.getPixel(7, 3)).toEqual([200, 100, 50]);
    buffer.setPixel(-1, 0, 9, 9, 9);
    buffer.setPixel(8, 0, 9, 9, 9);
    expect(buffer.getPixel(0, 0)).toEqual([1, 2, 3]);
  });

  it("draws connected polylines", () => {
    const buffer = new RasterBuffer(16, 16);
    buffer.clear();
    drawPolyline(
      buffer,
      [
        [0, 0],
        [15, 0],
        [15, 15],
      ],
      [255, 255, 255],
    );
    expect(buffer.getPixel(7, 0)).toEqual([255, 255, 255]);
    expect(buffer.getPixel(15, 9)).toEqual([255, 255, 255]);
    expect(buffer.getPixel(3, 9)).toEqual([0, 0, 0]);
  });
});

describe("color maps", () => {
  it("keeps non-escaped pixels black", () => {
    expect(escapeColor(100, 100)).toEqual([0, 0, 0]);
    const [r, g, b] = escapeColor(10, 100);
    expect(r + g + b).toBeGreaterThan(0);
  });

  it("spans the field ramp between lo and hi", () => {
    const lo = fieldColor(0, 0, 1);
    const hi = fieldColor(1, 0, 1);
    expect(lo[2]).toBeGreaterThan(hi[2]);
    expect(hi[0]).toBeGreaterThan(lo[0]);
    expect(fieldColor(5, 5, 5)).toEqual(fieldColor(0.5, 0, 1));
  });
});
