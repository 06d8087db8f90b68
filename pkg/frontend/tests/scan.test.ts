import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiError } from "../src/api.js";
import { OfflineQueue } from "../src/queue.js";
import { ConfirmationSheet, ScanError, resolveOffline, resolveScan } from "../src/scan.js";
import { decodeQrFrame, scanUntilDecoded, type Frame } from "../src/scanner.js";
import { applyEvent, emptyState, type CachedState } from "../src/state.js";
import { MemoryStorage } from "../src/storage.js";
import { SyncManager } from "../src/sync.js";
import type { EventRecord } from "../src/types.js";

import { FetchGate, loginAdmin, qrToFrame, seedCatalog, startServer, type TestServer } from "./helpers.js";

const W = "11111111-2222-4333-8444-555555555555";
const I = "aaaaaaaa-bbbb-4ccc-8ddd-eeeeeeeeeeee";
const GHOST = "99999999-9999-4999-8999-999999999999";
const EAN = "4006381333931";

let server: TestServer;

beforeAll(async () => {
  server = await startServer();
}, 30000);

afterAll(() => {
  server.stop();
});

function record(seq: number, kind: string, body: Record<string, unknown>): EventRecord {
  return { seq, opId: crypto.randomUUID(), actor: "t", ts: "2024-01-01T00:00:00Z", kind, body };
}

function seededState(): CachedState {
  const state = emptyState();
  applyEvent(
    state,
    record(1, "WAREHOUSE_CREATED", {
      id: W,
      name: "Cache Depot",
      location: { latitudeDeg: 0, longitudeDeg: 0 },
      address: "",
      version: 1,
      deleted: false,
    }),
  );
  applyEvent(
    state,
    record(2, "ITEM_CREATED", {
      id: I,
      name: "Cached bolt",
      sku: "CB-1",
      ean13: EAN,
      categoryId: null,
      version: 1,
      deleted: false,
    }),
  );
  applyEvent(state, record(3, "RECEIVE", { warehouseId: W, itemId: I, quantity: 4 }));
  return state;
}

describe("resolveOffline", () => {
  it("turns an item label into the cached item with stock", () => {
    const cached = seededState();
    const resolution = resolveOffline(`IMS1;ITEM;${I}`, cached);
    expect(resolution.type).toBe("ITEM");
    if (resolution.type === "ITEM") {
      expect(resolution.item.sku).toBe("CB-1");
      expect(resolution.stockLevels[0]?.quantity).toBe(4);
    }
  });

  it("turns an op label into a prefilled proposal", () => {
    const resolution = resolveOffline(`IMS1;OP;RECEIVE;${W};${I};5`, seededState());
    expect(resolution).toEqual({
      type: "PREFILLED_OP",
      proposal: { kind: "RECEIVE", warehouseId: W, itemId: I, quantity: 5 },
    });
  });

  it("rejects op labels pointing at unknown references", () => {
    const cached = seededState();
    expect(() => resolveOffline(`IMS1;OP;ISSUE;${GHOST};${I};1`, cached)).toThrowError(
      expect.objectContaining({ code: "UNKNOWN_REFERENCE" }),
    );
    expect(() => resolveOffline(`IMS1;OP;ISSUE;${W};${GHOST};1`, cached)).toThrowError(
      expect.objectContaining({ code: "UNKNOWN_REFERENCE" }),
    );
  });

  it("rejects item labels for items missing from the cache", () => {
    expect(() => resolveOffline(`IMS1;ITEM;${GHOST}`, seededState())).toThrowError(
      expect.objectContaining({ code: "UNKNOWN_ITEM" }),
    );
  });

  it("matches a bare barcode against the cached catalog", () => {
    const hit = resolveOffline(EAN, seededState());
    expect(hit.type).toBe("ITEM");
    expect(() => resolveOffline("9638507843649", seededState())).toThrowError(
      expect.objectContaining({ code: "UNKNOWN_ITEM" }),
    );
  });

  it("flags text that is neither label nor barcode", () => {
    expect(() => resolveOffline("hello world", seededState())).toThrowError(
      expect.objectContaining({ code: "UNRECOGNIZED_PAYLOAD" }),
    );
  });
});

describe("resolveScan", () => {
  it("asks the server when online", async () => {
    const { api, token } = await loginAdmin(server.baseUrl);
    const { warehouseId, itemId } = await seedCatalog(server.baseUrl, token, {
      warehouse: "Scan Online",
      item: "SCAN-ON",
    });
    const resolution = await resolveScan(`IMS1;OP;RECEIVE;${warehouseId};${itemId};2`, {
      api,
      cached: emptyState(),
    });
    expect(resolution.type).toBe("PREFILLED_OP");
  });

  it("propagates server rejections unchanged", async () => {
    const { api } = await loginAdmin(server.baseUrl);
    await expect(resolveScan("garbage", { api, cached: emptyState() })).rejects.toSatisfy(
      (error) => error instanceof ApiError && error.code === "UNRECOGNIZED_PAYLOAD",
    );
  });

  it("falls back to the cache when the network is down", async () => {
    const gate = new FetchGate();
    const { api } = await loginAdmin(server.baseUrl, gate.fetch);
    gate.online = false;
    const resolution = await resolveScan(`IMS1;ITEM;${I}`, { api, cached: seededState() });
    expect(resolution.type).toBe("ITEM");
  });
});

describe("ConfirmationSheet", () => {
  it("submits the movement when online", async () => {
    const { api, token } = await loginAdmin(server.baseUrl);
    const { warehouseId, itemId } = await seedCatalog(server.baseUrl, token, {
      warehouse: "Sheet Online",
      item: "SHEET-ON",
    });
    const sheet = new ConfirmationSheet(
      { kind: "RECEIVE", warehouseId, itemId, quantity: 5 },
      { api, queue: new OfflineQueue(new MemoryStorage()), cached: emptyState() },
    );
    const outcome = await sheet.confirm();
    expect(outcome.mode).toBe("submitted");
    if (outcome.mode === "submitted") {
      expect(outcome.result.status).toBe("APPLIED");
    }
    const rows = await api.stock({ itemId });
    expect(rows[0]?.quantity).toBe(5);
  });

  it("queues the movement when offline, then one flush applies it once", async () => {
    const gate = new FetchGate();
    const { api, token } = await loginAdmin(server.baseUrl, gate.fetch);
    const { warehouseId, itemId } = await seedCatalog(server.baseUrl, token, {
      warehouse: "Sheet Offline",
      item: "SHEET-OFF",
    });
    const storage = new MemoryStorage();
    const queue = new OfflineQueue(storage);
    gate.online = false;

    const sheet = new ConfirmationSheet(
      { kind: "RECEIVE", warehouseId, itemId, quantity: 3 },
      { api, queue, cached: emptyState() },
    );
    const outcome = await sheet.confirm();
    expect(outcome.mode).toBe("queued");
    expect(queue.pending()).toHaveLength(1);

    gate.online = true;
    const manager = new SyncManager(api, queue, storage);
    const first = await manager.flush();
    expect(first.applied).toBe(1);
    const second = await manager.flush();
    expect(second.pushed).toBe(0);
    const rows = await api.stock({ itemId });
    expect(rows[0]?.quantity).toBe(3);
  });

  it("lets the user edit the quantity but not to junk", async () => {
    const { api } = await loginAdmin(server.baseUrl);
    const sheet = new ConfirmationSheet(
      { kind: "ISSUE", warehouseId: W, itemId: I, quantity: 5 },
      { api, queue: new OfflineQueue(new MemoryStorage()), cached: emptyState() },
    );
    sheet.setQuantity(2);
    expect(sheet.proposal.quantity).toBe(2);
    for (const bad of [0, -3, 2.5, Number.NaN]) {
      expect(() => sheet.setQuantity(bad)).toThrowError(ScanError);
    }
  });
});

describe("QR decoding", () => {
  it("round trips a rendered op label through the decoder", () => {
    const payload = `IMS1;OP;RECEIVE;${W};${I};5`;
    expect(decodeQrFrame(qrToFrame(payload))).toBe(payload);
  });

  it("scans frames until one decodes", async () => {
    const payload = `IMS1;ITEM;${I}`;
    const good = qrToFrame(payload);
    const blank: Frame = {
      data: new Uint8ClampedArray(good.data.length).fill(255),
      width: good.width,
      height: good.height,
    };
    const frames = [blank, blank, good];
    let cursor = 0;
    const source = async (): Promise<Frame | null> => frames[cursor++] ?? null;
    await expect(scanUntilDecoded(source)).resolves.toBe(payload);
  });

  it("gives up after the frame budget", async () => {
    let calls = 0;
    const blank: Frame = { data: new Uint8ClampedArray(16 * 16 * 4).fill(255), width: 16, height: 16 };
    const source = async (): Promise<Frame | null> => {
      calls++;
      return blank;
    };
    await expect(scanUntilDecoded(source, { maxFrames: 3 })).resolves.toBeNull();
    expect(calls).toBe(3);
  });

  it("stops immediately when the source reports no camera", async () => {
    const source = async (): Promise<Frame | null> => null;
    await expect(scanUntilDecoded(source)).resolves.toBeNull();
  });
});
