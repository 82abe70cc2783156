// Node-only TCP transport, used by the test-suite to speak to the real
// server process without a WebSocket relay.

import * as net from "node:net";

import type { Transport } from "./transport.js";

export class TcpTransport implements Transport {
  private dataHandler: ((chunk: Uint8Array) => void) | null = null;
  private closeHandler: (() => void) | null = null;

  private constructor(private socket: net.Socket) {
    socket.on("data", (chunk) => this.dataHandler?.(new Uint8Array(chunk)));
    socket.on("close", () => this.closeHandler?.());
    socket.on("error", () => this.closeHandler?.());
  }

  static connect(host: string, port: number): Promise<TcpTransport> {
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({ host, port });
      socket.once("connect", () => resolve(new TcpTransport(socket)));
      socket.once("error", reject);
    });
  }

  send(bytes: Uint8Array): void {
    this.socket.write(bytes);
  }

  close(): void {
    this.socket.destroy();
  }

  onData(handler: (chunk: Uint8Array) => void): void {
    this.dataHandler = handler;
  }

  onClose(handler: () => void): void {
    this.closeHandler = handler;
  }
}
