// Canvas-independent drawing into RGBA pixel buffers. Panels draw into a
// RasterBuffer; the browser entry blits it to a <canvas> via ImageData.

export class RasterBuffer {
  readonly data: Uint8ClampedArray;

  constructor(
    readonly width: number,
    readonly height: number,
  ) {
    this.data = new Uint8ClampedArray(width * height * 4);
  }

  clear(r = 0, g = 0, b = 0): void {
    for (let i = 0; i < this.data.length; i += 4) {
      this.data[i] = r;
      this.data[i + 1] = g;
      this.data[i + 2] = b;
      this.data[i + 3] = 255;
    }
  }

  setPixel(x: number, y: number, r: number, g: number, b: number): void {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) return;
    const i = (y * this.width + x) * 4;
    this.data[i] = r;
    this.data[i + 1] = g;
    this.data[i + 2] = b;
    this.data[i + 3] = 255;
  }

  getPixel(x: number, y: number): [number, number, number] {
    const i = (y * this.width + x) * 4;
    return [this.data[i], this.data[i + 1], this.data[i + 2]];
  }
}

/** Map escape counts to a blue-amber ramp; interior pixels stay black. */
export function escapeColor(
  count: number,
  maxIter: number,
): [number, number, number] {
  if (count >= maxIter) return [0, 0, 0];
  const t = Math.pow(Math.log1p(count) / Math.log1p(maxIter), 0.8);
  return [
    Math.round(255 * Math.min(1, 3 * t - 0.3 > 0 ? 3 * t - 0.3 : 0.2 * t)),
    Math.round(255 * Math.min(1, 2.0 * t * t + 0.1 * t)),
    Math.round(255 * Math.min(1, 0.4 + 1.6 * t * (1 - t))),
  ];
}

/** Diverging color map for scalar fields around a center value. */
export function fieldColor(
  value: number,
  lo: number,
  hi: number,
): [number, number, number] {
  const t = hi > lo ? (value - lo) / (hi - lo) : 0.5;
  const c = Math.max(0, Math.min(1, t));
  return [
    Math.round(255 * c),
    Math.round(64 + 128 * (1 - Math.abs(2 * c - 1))),
    Math.round(255 * (1 - c)),
  ];
}

export function drawPolyline(
  buffer: RasterBuffer,
  points: Array<[number, number]>,
  color: [number, number, number],
): void {
  for (let i = 1; i < points.length; i++) {
    drawLine(buffer, points[i - 1], points[i], color);
  }
}

function drawLine(
  buffer: RasterBuffer,
  [x0, y0]: [number, number],
  [x1, y1]: [number, number],
  [r, g, b]: [number, number, number],
): void {
  // Integer Bresenham; endpoints rounded.
  let ax = Math.round(x0);
  let ay = Math.round(y0);
  const bx = Math.round(x1);
  const by = Math.round(y1);
  const dx = Math.abs(bx - ax);
  const dy = -Math.abs(by - ay);
  const sx = ax < bx ? 1 : -1;
  const sy = ay < by ? 1 : -1;
  let err = dx + dy;
  for (;;) {
    buffer.setPixel(ax, ay, r, g, b);
    if (ax === bx && ay === by) break;
    const e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      ax += sx;
    }
    if (e2 <= dx) {
      err += dx;
      ay += sy;
    }
  }
}
