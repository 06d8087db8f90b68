/**
 * Durable offline operation queue. Each enqueued op gets its id once, at
 * enqueue time, and keeps it across page reloads, so a retried push after
 * a crash or an interrupted flush can only ever produce DUPLICATE results
 * on the server, never a second application.
 */

import type { CachedState } from "./state.js";
import { stockKey } from "./state.js";
import type { MovementDraft, MovementKind, PendingOp, RejectedOp } from "./types.js";
import type { KeyValueStorage } from "./storage.js";
import { STORAGE_KEYS } from "./storage.js";

interface QueueDocument {
  pending: PendingOp[];
  rejected: RejectedOp[];
}

export interface EnqueueOutcome {
  op: PendingOp;
  /** Set when the cached view says the op would underflow; the server decides. */
  warning: string | null;
}

function newOpId(): string {
  if (typeof crypto !== "undefined" && typeof crypto.randomUUID === "function") {
    return crypto.randomUUID();
  }
  // fallback for very old runtimes; RFC 4122 version 4 shape
  let id = "";
  for (let i = 0; i < 36; i++) {
    if (i === 8 || i === 13 || i === 18 || i === 23) id += "-";
    else if (i === 14) id += "4";
    else if (i === 19) id += ((Math.random() * 4) | 8).toString(16);
    else id += ((Math.random() * 16) | 0).toString(16);
  }
  return id;
}

export class OfflineQueue {
  private readonly storage: KeyValueStorage;
  private readonly key: string;
  private doc: QueueDocument;

  constructor(storage: KeyValueStorage, key: string = STORAGE_KEYS.queue) {
    this.storage = storage;
    this.key = key;
    this.doc = this.load();
  }

  private load(): QueueDocument {
    const raw = this.storage.getItem(this.key);
    if (raw === null) return { pending: [], rejected: [] };
    const parsed = JSON.parse(raw) as Partial<QueueDocument>;
    return { pending: parsed.pending ?? [], rejected: parsed.rejected ?? [] };
  }

  private save(): void {
    this.storage.setItem(this.key, JSON.stringify(this.doc));
  }

  pending(): readonly PendingOp[] {
    return this.doc.pending;
  }

  rejected(): readonly RejectedOp[] {
    return this.doc.rejected;
  }

  /**
   * Append a draft with a fresh durable opId. The optional cached state is
   * only consulted to warn about an optimistic underflow; queueing is still
   * allowed because the server has newer information.
   */
  enqueue(draft: MovementDraft, cached?: CachedState): EnqueueOutcome {
    const op: PendingOp = {
      opId: newOpId(),
      kind: draft.kind,
      body: draft.body,
      queuedAt: new Date().toISOString(),
    };
    this.doc.pending.push(op);
    this.save();
    return { op, warning: cached ? underflowWarning(draft, cached, this.doc.pending) : null };
  }

  /** Drop a pending op the server has settled (APPLIED or DUPLICATE). */
  settle(opId: string): void {
    this.doc.pending = this.doc.pending.filter((op) => op.opId !== opId);
    this.save();
  }

  /** Move a pending op to the rejected list for user review. */
  reject(opId: string, violation: string, details: string[]): void {
    const op = this.doc.pending.find((p) => p.opId === opId);
    if (op === undefined) return;
    this.doc.pending = this.doc.pending.filter((p) => p.opId !== opId);
    this.doc.rejected.push({ ...op, violation, details });
    this.save();
  }

  /** Discard a rejected op once the user has seen it. */
  dismissRejected(opId: string): void {
    this.doc.rejected = this.doc.rejected.filter((op) => op.opId !== opId);
    this.save();
  }

  /**
   * Stock view with all pending ops applied on top of the cached state,
   * so the UI reflects queued work immediately.
   */
  optimisticStock(cached: CachedState): Record<string, number> {
    const stock: Record<string, number> = { ...cached.stock };
    for (const op of this.doc.pending) {
      applyOptimistic(stock, op.kind, op.body);
    }
    return stock;
  }
}

function applyOptimistic(
  stock: Record<string, number>,
  kind: MovementKind,
  body: Record<string, unknown>,
): void {
  const qty = body["quantity"] as number;
  switch (kind) {
    case "RECEIVE":
      add(stock, stockKey(body["warehouseId"] as string, body["itemId"] as string), qty);
      break;
    case "ISSUE":
      add(stock, stockKey(body["warehouseId"] as string, body["itemId"] as string), -qty);
      break;
    case "TRANSFER":
      add(stock, stockKey(body["fromWarehouseId"] as string, body["itemId"] as string), -qty);
      add(stock, stockKey(body["toWarehouseId"] as string, body["itemId"] as string), qty);
      break;
    case "ADJUST":
      stock[stockKey(body["warehouseId"] as string, body["itemId"] as string)] = body[
        "newQuantity"
      ] as number;
      break;
  }
}

function add(stock: Record<string, number>, key: string, delta: number): void {
  const next = (stock[key] ?? 0) + delta;
  if (next === 0) delete stock[key];
  else stock[key] = next;
}

function underflowWarning(
  draft: MovementDraft,
  cached: CachedState,
  pending: PendingOp[],
): string | null {
  // replays the whole queue on top of the cache; a negative level anywhere
  // after this draft means the server will likely reject it
  const stock: Record<string, number> = { ...cached.stock };
  for (const op of pending) {
    applyOptimistic(stock, op.kind, op.body);
  }
  const negative = Object.entries(stock).find(([, qty]) => qty < 0);
  if (negative === undefined) return null;
  return `queued ${draft.kind} would leave stock negative (${negative[0]}: ${negative[1]}); the server may reject it`;
}
