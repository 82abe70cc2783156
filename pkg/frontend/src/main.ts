// Browser entry: one connection, three live panels. Configuration is just
// the server URL (?server=ws://host:port), served through a byte-level
// TCP<->WebSocket relay.

import { LabClient } from "./client.js";
import { JuliaPanel } from "./panels/julia.js";
import { BifurcationPanel } from "./panels/bifurcation.js";
import { FieldPanel } from "./panels/field.js";
import { RasterBuffer, drawPolyline } from "./render.js";
import { WebSocketTransport } from "./transport.js";

function canvasFor(id: string, width: number, height: number): HTMLCanvasElement {
  const canvas = document.createElement("canvas");
  canvas.id = id;
  canvas.width = width;
  canvas.height = height;
  document.body.appendChild(canvas);
  return canvas;
}

function blit(canvas: HTMLCanvasElement, buffer: RasterBuffer): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const pixels = new Uint8ClampedArray(buffer.data);
  ctx.putImageData(new ImageData(pixels, buffer.width, buffer.height), 0, 0);
}

async function boot(): Promise<void> {
  const url =
    new URLSearchParams(location.search).get("server") ??
    "ws://127.0.0.1:8766";
  const client = new LabClient(() => WebSocketTransport.connect(url));
  await client.connect();
  const registry = await client.schema();

  const banner = document.createElement("div");
  banner.id = "connection";
  document.body.appendChild(banner);

  // Julia panel with a draggable marker.
  const julia = new JuliaPanel(client, registry, {
    pixelCols: 256,
    pixelRows: 256,
    maxIter: 256,
    width: 4.0,
  });
  const juliaCanvas = canvasFor("julia", 256, 256);
  const juliaBuffer = new RasterBuffer(256, 256);
  await julia.start(-0.8, 0.156);
  juliaCanvas.addEventListener("pointermove", (ev) => {
    if (ev.buttons !== 1 || !julia.state.controlsEnabled) return;
    const rect = juliaCanvas.getBoundingClientRect();
    const cRe = ((ev.clientX - rect.left) / rect.width - 0.5) * 4.0;
    const cIm = (0.5 - (ev.clientY - rect.top) / rect.height) * 4.0;
    void julia.dragMarker(cRe, cIm);
  });

  // Bifurcation panel with zoom rectangle and r slider.
  const bifurcation = new BifurcationPanel(client, registry);
  const bifCanvas = canvasFor("bifurcation", 400, 300);
  const bifBuffer = new RasterBuffer(400, 300);
  await bifurcation.start();
  const slider = document.createElement("input");
  slider.type = "range";
  slider.min = "0.01";
  slider.max = "4";
  slider.step = "0.01";
  slider.addEventListener("input", () => {
    void bifurcation
      .setR(Number(slider.value))
      .then(() => bifurcation.advanceOrbit());
  });
  document.body.appendChild(slider);

  // Activator-inhibitor field panel with click-to-perturb.
  const field = new FieldPanel(client, registry, "turing", ["A", "B"]);
  const fieldCanvas = canvasFor("field", 256, 256);
  const fieldBuffer = new RasterBuffer(256, 256);
  await field.start({ nx: 64, ny: 64 });
  await field.play();
  fieldCanvas.addEventListener("click", (ev) => {
    const rect = fieldCanvas.getBoundingClientRect();
    const col = Math.floor(((ev.clientX - rect.left) / rect.width) * 64);
    const row = Math.floor(((ev.clientY - rect.top) / rect.height) * 64);
    void field.perturb(row, col, 4.0, 3.0);
  });

  client.onStateChange = (state) => {
    banner.textContent = state === "connected" ? "" : state;
    const connected = state === "connected";
    julia.setConnectionState(connected);
    field.setConnectionState(connected);
  };

  function redraw(): void {
    julia.draw(juliaBuffer);
    blit(juliaCanvas, juliaBuffer);

    bifBuffer.clear(10, 10, 14);
    for (const [r, x] of bifurcation.cloud) {
      const [sx, sy] = bifurcation.view.toScreen(r, x);
      bifBuffer.setPixel(Math.round(sx), Math.round(sy), 220, 220, 160);
    }
    const cobweb = bifurcation
      .cobweb()
      .map(([x, y]) => {
        // Cobweb lives in the unit square; map through the x-axis range.
        const sx = (x * bifBuffer.width);
        const sy = (1 - y) * bifBuffer.height;
        return [sx, sy] as [number, number];
      });
    drawPolyline(bifBuffer, cobweb, [120, 200, 255]);
    blit(bifCanvas, bifBuffer);

    field.drawField(fieldBuffer);
    blit(fieldCanvas, fieldBuffer);

    requestAnimationFrame(redraw);
  }
  requestAnimationFrame(redraw);

  void bifurcation.sweep(120);
}

if (typeof document !== "undefined") {
  boot().catch((err) => {
    document.body.textContent = `failed to start: ${err}`;
  });
}
