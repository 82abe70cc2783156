// Test helpers: spawn the real steering server and connect over TCP.

import { spawn, ChildProcess } from "node:child_process";

import { LabClient } from "../src/client.js";
import { TcpTransport } from "../src/node.js";

export interface ServerProc {
  host: string;
  port: number;
  kill(): void;
}

export function spawnServer(): Promise<ServerProc> {
  return new Promise((resolve, reject) => {
    const proc: ChildProcess = spawn(
      "python3",
      ["-m", "dynlab.server", "--port", "0"],
      { stdio: ["ignore", "pipe", "pipe"] },
    );
    let buffer = "";
    const timer = setTimeout(
      () => reject(new Error("server did not report its port")),
      15000,
    );
    proc.stdout?.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = buffer.match(/listening (\S+) (\d+)/);
      if (match) {
        clearTimeout(timer);
        resolve({
          host: match[1],
          port: Number(match[2]),
          kill: () => proc.kill(),
        });
      }
    });
    proc.on("error", reject);
    proc.on("exit", (code) => {
      if (code !== null && code !== 0) {
        reject(new Error(`server exited with ${code}: ${buffer}`));
      }
    });
  });
}

export async function connectClient(server: ServerProc): Promise<LabClient> {
  const client = new LabClient(() =>
    TcpTransport.connect(server.host, server.port),
  );
  await client.connect();
  return client;
}

export function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
