// Byte-stream transports. The browser build uses a WebSocket carrying the
// same length-prefixed frames as the raw TCP stream (a trivial TCP<->WS relay
// bridges to the server); tests use the node TCP transport from node.ts.

export interface Transport {
  send(bytes: Uint8Array): void;
  close(): void;
  onData(handler: (chunk: Uint8Array) => void): void;
  onClose(handler: () => void): void;
}

export type TransportFactory = () => Promise<Transport>;

export class WebSocketTransport implements Transport {
  private dataHandler: ((chunk: Uint8Array) => void) | null = null;
  private closeHandler: (() => void) | null = null;

  private constructor(private ws: WebSocket) {
    ws.binaryType = "arraybuffer";
    ws.onmessage = (ev) => {
      if (this.dataHandler && ev.data instanceof ArrayBuffer) {
        this.dataHandler(new Uint8Array(ev.data));
      }
    };
    ws.onclose = () => this.closeHandler?.();
    ws.onerror = () => this.closeHandler?.();
  }

  static connect(url: string): Promise<WebSocketTransport> {
    return new Promise((resolve, reject) => {
      const ws = new WebSocket(url);
      ws.onopen = () => resolve(new WebSocketTransport(ws));
      ws.onerror = (err) => reject(err);
    });
  }

  send(bytes: Uint8Array): void {
    this.ws.send(bytes);
  }

  close(): void {
    this.ws.close();
  }

  onData(handler: (chunk: Uint8Array) => void): void {
    this.dataHandler = handler;
  }

  onClose(handler: () => void): void {
    this.closeHandler = handler;
  }
}
