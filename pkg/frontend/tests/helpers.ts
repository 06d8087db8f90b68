/**
 * Shared test plumbing: a real backend server per suite, a fetch gate that
 * simulates going offline, an in-memory cache with the service worker's
 * cache contract, and QR rendering for the scan tests.
 */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import net from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import QRCode from "qrcode";

import { ApiClient, type FetchLike } from "../src/api.js";
import type { CacheLike } from "../src/sw.js";
import type { Frame } from "../src/scanner.js";

export const ADMIN_USER = "admin";
export const ADMIN_PASSWORD = "correct horse battery staple";

export interface TestServer {
  baseUrl: string;
  dataDir: string;
  stop(): Promise<void>;
}

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = net.createServer();
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address() as net.AddressInfo;
      probe.close(() => resolve(address.port));
    });
    probe.on("error", reject);
  });
}

/** Provision an admin account, then boot the backend and wait for health. */
export async function startServer(): Promise<TestServer> {
  const dataDir = mkdtempSync(join(tmpdir(), "ims-client-test-"));
  const env = { ...process.env, IMS_DATA_DIR: dataDir };

  const add = spawnSync(
    "python3",
    ["-m", "ims", "user", "add", ADMIN_USER, "--role", "ADMIN", "--password", ADMIN_PASSWORD],
    { env, encoding: "utf-8" },
  );
  if (add.status !== 0) {
    throw new Error(`user add failed: ${add.stderr}`);
  }

  const port = await freePort();
  const child: ChildProcess = spawn(
    "python3",
    ["-m", "ims", "serve", "--listen", `127.0.0.1:${port}`],
    { env, stdio: ["ignore", "pipe", "pipe"] },
  );
  let serverOutput = "";
  child.stdout?.on("data", (chunk: Buffer) => (serverOutput += chunk.toString()));
  child.stderr?.on("data", (chunk: Buffer) => (serverOutput += chunk.toString()));

  const baseUrl = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 15_000;
  for (;;) {
    try {
      const response = await fetch(`${baseUrl}/api/v1/health`);
      if (response.ok) break;
    } catch {
      // not up yet
    }
    if (child.exitCode !== null) {
      throw new Error(`server exited early (${child.exitCode}): ${serverOutput}`);
    }
    if (Date.now() > deadline) {
      throw new Error(`server did not come up: ${serverOutput}`);
    }
    await sleep(50);
  }

  return {
    baseUrl,
    dataDir,
    stop: () =>
      new Promise<void>((resolve) => {
        child.once("exit", () => {
          rmSync(dataDir, { recursive: true, force: true });
          resolve();
        });
        child.kill("SIGTERM");
      }),
  };
}

export function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

/**
 * Switchable network: while offline every call rejects with a TypeError,
 * the same failure mode browsers produce, without touching the wire.
 */
export class FetchGate {
  online = true;

  readonly fetch: FetchLike = (url, init) => {
    if (!this.online) {
      return Promise.reject(new TypeError("fetch failed (network disabled)"));
    }
    return fetch(url, init);
  };
}

/** Log in and return a client whose requests carry the token. */
export async function loginAdmin(
  baseUrl: string,
  fetchFn?: FetchLike,
): Promise<{ api: ApiClient; token: string }> {
  const anonymous = new ApiClient({ baseUrl, ...(fetchFn ? { fetchFn } : {}) });
  const { token } = await anonymous.login(ADMIN_USER, ADMIN_PASSWORD);
  const api = new ApiClient({ baseUrl, ...(fetchFn ? { fetchFn } : {}), getToken: () => token });
  return { api, token };
}

/** Create one warehouse and one item through the HTTP API. */
export async function seedCatalog(
  baseUrl: string,
  token: string,
  names: { warehouse?: string; item?: string; sku?: string } = {},
): Promise<{ warehouseId: string; itemId: string }> {
  const post = async (path: string, body: unknown): Promise<{ id: string }> => {
    const response = await fetch(`${baseUrl}/api/v1${path}`, {
      method: "POST",
      headers: { "content-type": "application/json", authorization: `Bearer ${token}` },
      body: JSON.stringify(body),
    });
    if (response.status !== 201) {
      throw new Error(`${path} -> ${response.status}: ${await response.text()}`);
    }
    return (await response.json()) as { id: string };
  };
  const itemName = names.item ?? "Hex bolt";
  const warehouse = await post("/warehouses", {
    name: names.warehouse ?? "Central",
    address: "1 Dock Rd",
    location: { latitudeDeg: 52.2297, longitudeDeg: 21.0122 },
  });
  const item = await post("/items", {
    name: itemName,
    sku: names.sku ?? `SKU-${itemName.replace(/[^A-Za-z0-9]+/g, "-").toUpperCase()}`,
    ean13: null,
    categoryId: null,
  });
  return { warehouseId: warehouse.id, itemId: item.id };
}

/** In-memory cache with the subset of the Cache API the worker uses. */
export class MemoryCache implements CacheLike {
  private readonly entries = new Map<string, { status: number; headers: [string, string][]; body: Buffer }>();

  private key(url: string): string {
    return new URL(url, "http://cache.invalid").pathname;
  }

  async match(url: string): Promise<Response | undefined> {
    const entry = this.entries.get(this.key(url));
    if (entry === undefined) return undefined;
    return new Response(new Uint8Array(entry.body), { status: entry.status, headers: entry.headers });
  }

  async put(url: string, response: Response): Promise<void> {
    const body = Buffer.from(await response.clone().arrayBuffer());
    this.entries.set(this.key(url), {
      status: response.status,
      headers: [...response.headers.entries()],
      body,
    });
  }

  size(): number {
    return this.entries.size;
  }
}

/**
 * Render payload text as a QR symbol and rasterize it to an RGBA frame,
 * the same pixel format a camera capture hands the decoder.
 */
export function qrToFrame(text: string, scale = 8, quietModules = 4): Frame {
  const code = QRCode.create(text, { errorCorrectionLevel: "M" });
  const size = code.modules.size;
  const total = (size + quietModules * 2) * scale;
  const data = new Uint8ClampedArray(total * total * 4).fill(255);
  for (let row = 0; row < size; row++) {
    for (let col = 0; col < size; col++) {
      if (!code.modules.get(row, col)) continue;
      for (let dy = 0; dy < scale; dy++) {
        for (let dx = 0; dx < scale; dx++) {
          const x = (col + quietModules) * scale + dx;
          const y = (row + quietModules) * scale + dy;
          const offset = (y * total + x) * 4;
          data[offset] = 0;
          data[offset + 1] = 0;
          data[offset + 2] = 0;
        }
      }
    }
  }
  return { data, width: total, height: total };
}
