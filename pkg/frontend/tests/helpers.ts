// Shared test plumbing for driving a real gencnippet server over HTTP.
// Uses node:http directly so requests bypass the DOM emulation layer.

import { spawn } from "node:child_process";
import type { ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { request } from "node:http";
import { tmpdir } from "node:os";
import { join } from "node:path";

import type { FetchLike } from "../src/api.js";
import type { ChromeStorageArea } from "../src/settings.js";

/** In-memory stand-in for chrome.storage.local. */
export function fakeChromeArea(): ChromeStorageArea & { items: Record<string, unknown> } {
  const items: Record<string, unknown> = {};
  return {
    items,
    async get(keys) {
      const found: Record<string, unknown> = {};
      for (const key of keys) {
        if (key in items) found[key] = items[key];
      }
      return found;
    },
    async set(values) {
      Object.assign(items, values);
    },
    async remove(keys) {
      for (const key of keys) delete items[key];
    },
  };
}

export const nodeFetch: FetchLike = (input, init) =>
  new Promise((resolve, reject) => {
    const url = new URL(input);
    const headers: Record<string, string> = {};
    if (init?.headers) {
      for (const [key, value] of Object.entries(init.headers as Record<string, string>)) {
        headers[key] = value;
      }
    }
    const req = request(
      {
        hostname: url.hostname,
        port: url.port,
        path: `${url.pathname}${url.search}`,
        method: init?.method ?? "GET",
        headers,
      },
      (res) => {
        const chunks: Buffer[] = [];
        res.on("data", (chunk: Buffer) => chunks.push(chunk));
        res.on("end", () => {
          resolve(
            new Response(Buffer.concat(chunks).toString("utf8"), {
              status: res.statusCode ?? 0,
              headers: {
                "Content-Type": res.headers["content-type"] ?? "application/json",
              },
            }),
          );
        });
      },
    );
    req.on("error", reject);
    init?.signal?.addEventListener("abort", () => {
      req.destroy(new Error("aborted"));
      reject(new Error("aborted"));
    });
    if (init?.body !== undefined && init.body !== null) {
      req.write(init.body);
    }
    req.end();
  });

export interface RunningServer {
  baseUrl: string;
  child: ChildProcess;
}

const PORT_LINE = /Uvicorn running on https?:\/\/127\.0\.0\.1:(\d+)/;

/** Starts the Python generation server on an ephemeral port and waits for /health. */
export async function startServer(): Promise<RunningServer> {
  const dir = mkdtempSync(join(tmpdir(), "gencnippet-e2e-"));
  const configPath = join(dir, "config.json");
  writeFileSync(
    configPath,
    JSON.stringify({
      server: { port: 0, rate_limit_per_minute: 0 },
      backend: { kind: "mock", model_id: "mock-model" },
    }),
  );

  const child = spawn("python3", ["-m", "gencnippet.cli", "serve", "--config", configPath], {
    stdio: ["ignore", "pipe", "pipe"],
  });

  const port = await new Promise<number>((resolve, reject) => {
    let logged = "";
    const onData = (chunk: Buffer) => {
      logged += chunk.toString("utf8");
      const match = PORT_LINE.exec(logged);
      if (match) {
        resolve(Number(match[1]));
      }
    };
    child.stdout?.on("data", onData);
    child.stderr?.on("data", onData);
    child.on("exit", (code) => {
      reject(new Error(`server exited early with code ${code}:\n${logged}`));
    });
    setTimeout(() => reject(new Error(`server did not start in time:\n${logged}`)), 30000);
  });

  const baseUrl = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 30000;
  for (;;) {
    try {
      const response = await nodeFetch(`${baseUrl}/health`);
      if (response.status === 200) break;
    } catch {
      // Not accepting connections yet.
    }
    if (Date.now() > deadline) {
      throw new Error("server never became healthy");
    }
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
  return { baseUrl, child };
}

export async function stopServer(server: RunningServer): Promise<void> {
  const exited = new Promise<void>((resolve) => {
    server.child.on("exit", () => resolve());
  });
  server.child.kill("SIGTERM");
  const timeout = new Promise<void>((resolve) =>
    setTimeout(() => {
      server.child.kill("SIGKILL");
      resolve();
    }, 5000),
  );
  await Promise.race([exited, timeout]);
}
