// Wire protocol for the lab server: length-prefixed JSON messages over one
// bidirectional byte stream, bulk numerics as base64 little-endian f32.

export const PROTO_VERSION = 1;

export interface PackedArray {
  dtype: "f32le";
  shape: number[];
  data: string; // base64
}

export type FrameKind =
  | "trajectory-batch"
  | "field-snapshot"
  | "escape-tile"
  | "series-append";

export interface SessionInfo {
  id: string;
  experiment: string;
  params: Record<string, unknown>;
  status: "running" | "paused" | "failed" | "closed";
  step_count: number;
  param_epoch: number;
}

export interface FrameMsg {
  type: "frame";
  session: string;
  step: number;
  kind: FrameKind;
  param_epoch: number;
  keyframe: boolean;
  payload: Record<string, any>;
}

export type ServerMsg =
  | FrameMsg
  | { type: "created"; reply_to: number; session: SessionInfo }
  | { type: "ack"; reply_to: number; param_epoch: number }
  | { type: "status"; reply_to: number; session: SessionInfo }
  | { type: "subscribed"; reply_to: number; session: SessionInfo }
  | { type: "closed"; reply_to: number }
  | { type: "health"; reply_to: number; sessions: number }
  | { type: "schema"; reply_to: number; experiments: Registry }
  | {
      type: "error";
      reply_to: number;
      code: "validation" | "restart-required" | "retry-after" | "failed";
      message: string;
      field?: string | null;
    };

export type ClientMsg =
  | { type: "create"; experiment: string; params?: Record<string, unknown>;
      seed?: number; steps_per_frame?: number }
  | { type: "update"; session: string; patch: Record<string, unknown> }
  | { type: "control"; session: string; action: "run" | "pause" | "step";
      n?: number }
  | { type: "subscribe"; session: string; from_step?: number }
  | { type: "close"; session: string }
  | { type: "health" }
  | { type: "schema" };

export interface ParamInfo {
  kind: "float" | "int" | "bool" | "str" | "json";
  default: unknown;
  hot: boolean;
  doc: string;
  minimum: number | null;
  maximum: number | null;
  choices: string[] | null;
}

export type Registry = Record<
  string,
  {
    doc: string;
    frame_kind: FrameKind;
    output_kinds: string[];
    params: Record<string, ParamInfo>;
  }
>;

const encoder = new TextEncoder();
const decoder = new TextDecoder();

/** Frame one JSON message with a 4-byte big-endian length prefix. */
export function encodeMessage(message: object): Uint8Array {
  const body = encoder.encode(JSON.stringify(message));
  const out = new Uint8Array(4 + body.length);
  new DataView(out.buffer).setUint32(0, body.length, false);
  out.set(body, 4);
  return out;
}

/** Incremental stream decoder; feed raw chunks, collect whole messages. */
export class MessageDecoder {
  private buffer = new Uint8Array(0);

  feed(chunk: Uint8Array): object[] {
    const merged = new Uint8Array(this.buffer.length + chunk.length);
    merged.set(this.buffer, 0);
    merged.set(chunk, this.buffer.length);
    this.buffer = merged;

    const out: object[] = [];
    for (;;) {
      if (this.buffer.length < 4) break;
      const view = new DataView(this.buffer.buffer, this.buffer.byteOffset);
      const length = view.getUint32(0, false);
      if (this.buffer.length < 4 + length) break;
      const body = this.buffer.subarray(4, 4 + length);
      out.push(JSON.parse(decoder.decode(body)));
      this.buffer = this.buffer.subarray(4 + length);
    }
    return out;
  }
}

/** Decode a packed row-major little-endian f32 array. */
export function unpackArray(packed: PackedArray): {
  shape: number[];
  values: Float32Array;
} {
  if (packed.dtype !== "f32le") {
    throw new Error(`unsupported dtype ${packed.dtype}`);
  }
  const raw = base64Decode(packed.data);
  // Copy to guarantee alignment regardless of the source buffer.
  const bytes = new Uint8Array(raw.length);
  bytes.set(raw);
  return { shape: packed.shape, values: new Float32Array(bytes.buffer) };
}

function base64Decode(data: string): Uint8Array {
  if (typeof atob === "function") {
    const bin = atob(data);
    const out = new Uint8Array(bin.length);
    for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
    return out;
  }
  // Node fallback (tests).
  return Uint8Array.from(Buffer.from(data, "base64"));
}
