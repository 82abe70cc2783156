// Multiplexed client for the lab server: one connection, many sessions.
// Request/reply correlation by id; frames dispatched through a
// FrameSequencer per subscriber; reconnect resumes each subscription from
// its last applied step so panels see no gaps and no duplicates.

import { FrameSequencer } from "./frames.js";
import {
  ClientMsg,
  FrameMsg,
  MessageDecoder,
  Registry,
  ServerMsg,
  SessionInfo,
  encodeMessage,
} from "./protocol.js";
import type { Transport, TransportFactory } from "./transport.js";

export class ServerError extends Error {
  constructor(
    message: string,
    readonly code: string,
    readonly field?: string | null,
  ) {
    super(message);
  }
}

export type ConnectionState = "connected" | "reconnecting" | "closed";

interface Pending {
  resolve: (msg: ServerMsg) => void;
  reject: (err: Error) => void;
}

export class LabClient {
  private transport: Transport | null = null;
  private decoder = new MessageDecoder();
  private nextId = 0;
  private pending = new Map<number, Pending>();
  private frameHandlers = new Map<string, (frame: FrameMsg) => void>();
  private sequencer: FrameSequencer;
  private subscriptions = new Set<string>();
  state: ConnectionState = "reconnecting";
  onStateChange: (state: ConnectionState) => void = () => {};
  private closing = false;

  constructor(private factory: TransportFactory) {
    this.sequencer = new FrameSequencer((frame) => {
      this.frameHandlers.get(frame.session)?.(frame);
    });
  }

  async connect(): Promise<void> {
    const transport = await this.factory();
    transport.onData((chunk) => {
      for (const message of this.decoder.feed(chunk) as ServerMsg[]) {
        this.dispatch(message);
      }
    });
    transport.onClose(() => this.handleDisconnect());
    this.transport = transport;
    this.setState("connected");
  }

  private setState(state: ConnectionState): void {
    if (this.state !== state) {
      this.state = state;
      this.onStateChange(state);
    }
  }

  private handleDisconnect(): void {
    if (this.closing) return;
    this.transport = null;
    this.decoder = new MessageDecoder();
    for (const { reject } of this.pending.values()) {
      reject(new ServerError("connection lost", "disconnected"));
    }
    this.pending.clear();
    this.setState("reconnecting");
    void this.reconnectLoop();
  }

  private async reconnectLoop(): Promise<void> {
    for (let attempt = 0; attempt < 60 && !this.closing; attempt++) {
      await sleep(Math.min(100 * 2 ** attempt, 2000));
      try {
        await this.connect();
        // Resume every live subscription from its last applied step.
        for (const session of this.subscriptions) {
          const from = this.sequencer.lastAppliedStep(session, kindsOf(session, this.lastKinds));
          await this.request({
            type: "subscribe",
            session,
            ...(from !== undefined ? { from_step: from } : {}),
          });
        }
        return;
      } catch {
        // next attempt
      }
    }
  }

  private lastKinds = new Map<string, string>();

  private dispatch(message: ServerMsg): void {
    if (message.type === "frame") {
      this.lastKinds.set(message.session, message.kind);
      this.sequencer.push(message);
      return;
    }
    const pending = this.pending.get((message as { reply_to: number }).reply_to);
    if (!pending) return;
    this.pending.delete((message as { reply_to: number }).reply_to);
    if (message.type === "error") {
      pending.reject(new ServerError(message.message, message.code,
        message.field));
    } else {
      pending.resolve(message);
    }
  }

  request(message: ClientMsg): Promise<ServerMsg> {
    const transport = this.transport;
    if (!transport) {
      return Promise.reject(new ServerError("not connected", "disconnected"));
    }
    const id = ++this.nextId;
    const framed = encodeMessage({ ...message, id });
    return new Promise((resolve, reject) => {
      this.pending.set(id, { resolve, reject });
      transport.send(framed);
    });
  }

  async createSession(
    experiment: string,
    params: Record<string, unknown> = {},
    options: { seed?: number; steps_per_frame?: number } = {},
  ): Promise<SessionInfo> {
    const reply = await this.request({
      type: "create",
      experiment,
      params,
      ...options,
    });
    return (reply as { session: SessionInfo }).session;
  }

  async updateParams(
    session: string,
    patch: Record<string, unknown>,
  ): Promise<number> {
    const reply = await this.request({ type: "update", session, patch });
    return (reply as { param_epoch: number }).param_epoch;
  }

  async control(
    session: string,
    action: "run" | "pause" | "step",
    n?: number,
  ): Promise<SessionInfo> {
    const reply = await this.request({ type: "control", session, action, n });
    return (reply as { session: SessionInfo }).session;
  }

  async subscribe(
    session: string,
    onFrame: (frame: FrameMsg) => void,
    fromStep?: number,
  ): Promise<SessionInfo> {
    this.frameHandlers.set(session, onFrame);
    this.subscriptions.add(session);
    const reply = await this.request({
      type: "subscribe",
      session,
      ...(fromStep !== undefined ? { from_step: fromStep } : {}),
    });
    return (reply as { session: SessionInfo }).session;
  }

  async closeSession(session: string): Promise<void> {
    this.subscriptions.delete(session);
    this.frameHandlers.delete(session);
    this.sequencer.reset(session);
    await this.request({ type: "close", session });
  }

  async schema(): Promise<Registry> {
    const reply = await this.request({ type: "schema" });
    return (reply as { experiments: Registry }).experiments;
  }

  close(): void {
    this.closing = true;
    this.transport?.close();
    this.setState("closed");
  }
}

function kindsOf(session: string, kinds: Map<string, string>): string {
  return kinds.get(session) ?? "";
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
