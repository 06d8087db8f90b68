/**
 * Scan resolution and the confirmation flow. Image-to-text decoding is the
 * scanner component's job (see scanner.ts); this module takes decoded text
 * and turns it into an item view or a prefilled movement, asking the server
 * when online and falling back to the cached state when not.
 */

import type { ApiClient } from "./api.js";
import { NetworkError } from "./api.js";
import { PayloadError, decodePayload, isValidEan13 } from "./codec.js";
import type { OfflineQueue } from "./queue.js";
import type { CachedState } from "./state.js";
import { stockLevels } from "./state.js";
import type { OpProposal, OpResult, ScanResolution } from "./types.js";

export class ScanError extends Error {
  readonly code: string;

  constructor(message: string, code: string) {
    super(message);
    this.code = code;
  }
}

export interface ScanContext {
  api: ApiClient;
  cached: CachedState;
}

/**
 * Resolve decoded scan text. Prefers the server; a network failure falls
 * back to the cached state so scanning keeps working offline.
 */
export async function resolveScan(text: string, context: ScanContext): Promise<ScanResolution> {
  try {
    return await context.api.scan(text);
  } catch (error) {
    if (error instanceof NetworkError) {
      return resolveOffline(text, context.cached);
    }
    throw error;
  }
}

/** Same contract as the server's scan endpoint, over the cached state. */
export function resolveOffline(text: string, cached: CachedState): ScanResolution {
  let label;
  try {
    label = decodePayload(text);
  } catch (error) {
    if (!(error instanceof PayloadError)) throw error;
    label = null;
  }
  if (label !== null && label.type === "ITEM") {
    const item = cached.items[label.itemId];
    if (item === undefined || item.deleted) {
      throw new ScanError("unknown item", "UNKNOWN_ITEM");
    }
    return { type: "ITEM", item, stockLevels: stockLevels(cached, { itemId: item.id }) };
  }
  if (label !== null && label.type === "OP") {
    const warehouse = cached.warehouses[label.proposal.warehouseId];
    if (warehouse === undefined || warehouse.deleted) {
      throw new ScanError("unknown warehouse in payload", "UNKNOWN_REFERENCE");
    }
    const item = cached.items[label.proposal.itemId];
    if (item === undefined || item.deleted) {
      throw new ScanError("unknown item in payload", "UNKNOWN_REFERENCE");
    }
    return { type: "PREFILLED_OP", proposal: label.proposal };
  }
  if (isValidEan13(text)) {
    const matches = Object.values(cached.items)
      .filter((i) => i.ean13 === text && !i.deleted)
      .sort((a, b) => (a.id < b.id ? -1 : 1));
    if (matches.length === 0) {
      throw new ScanError("no item carries this barcode", "UNKNOWN_ITEM");
    }
    const item = matches[0]!;
    return { type: "ITEM", item, stockLevels: stockLevels(cached, { itemId: item.id }) };
  }
  throw new ScanError(
    "payload is neither a known label grammar nor a valid EAN-13",
    "UNRECOGNIZED_PAYLOAD",
  );
}

export type ConfirmOutcome =
  | { mode: "submitted"; result: OpResult }
  | { mode: "queued"; opId: string; warning: string | null };

/**
 * The confirmation sheet behind a scanned op label: shows the prefilled
 * movement and, on confirm, submits it online or enqueues it offline.
 * The quantity may be edited before confirming; ids may not.
 */
export class ConfirmationSheet {
  readonly proposal: OpProposal;
  private readonly api: ApiClient;
  private readonly queue: OfflineQueue;
  private readonly cached: CachedState;

  constructor(proposal: OpProposal, deps: { api: ApiClient; queue: OfflineQueue; cached: CachedState }) {
    this.proposal = { ...proposal };
    this.api = deps.api;
    this.queue = deps.queue;
    this.cached = deps.cached;
  }

  setQuantity(quantity: number): void {
    if (!Number.isInteger(quantity) || quantity < 1) {
      throw new ScanError(`quantity must be a positive integer, got ${quantity}`, "BAD_QUANTITY");
    }
    this.proposal.quantity = quantity;
  }

  /** Submit now; if the network is down, queue for the next flush. */
  async confirm(): Promise<ConfirmOutcome> {
    const body = {
      warehouseId: this.proposal.warehouseId,
      itemId: this.proposal.itemId,
      quantity: this.proposal.quantity,
    };
    const draft = { kind: this.proposal.kind, body };
    try {
      const result = await this.api.movement({
        opId: crypto.randomUUID(),
        kind: this.proposal.kind,
        ...body,
      });
      return { mode: "submitted", result };
    } catch (error) {
      if (error instanceof NetworkError) {
        const { op, warning } = this.queue.enqueue(draft, this.cached);
        return { mode: "queued", opId: op.opId, warning };
      }
      throw error;
    }
  }
}
