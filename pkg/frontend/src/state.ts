/**
 * Cached server state on the client: the fold of pulled events, mirroring
 * the server's own merge semantics so both sides agree on every state.
 * Pulled events were already accepted by the server, so this fold applies
 * them without re-running the server's validation.
 */

import type {
  Category,
  EventRecord,
  Item,
  PullPage,
  StockLevel,
  Warehouse,
} from "./types.js";

export class GapError extends Error {
  readonly code = "GAP_DETECTED";
}

export interface CachedState {
  seq: number;
  warehouses: Record<string, Warehouse>;
  items: Record<string, Item>;
  categories: Record<string, Category>;
  /** Keyed "<warehouseId>|<itemId>"; zero rows are dropped. */
  stock: Record<string, number>;
}

export function emptyState(): CachedState {
  return { seq: 0, warehouses: {}, items: {}, categories: {}, stock: {} };
}

export function stockKey(warehouseId: string, itemId: string): string {
  return `${warehouseId}|${itemId}`;
}

function bump(stock: Record<string, number>, key: string, delta: number): void {
  const next = (stock[key] ?? 0) + delta;
  if (next === 0) {
    delete stock[key];
  } else {
    stock[key] = next;
  }
}

function str(body: Record<string, unknown>, key: string): string {
  return body[key] as string;
}

function num(body: Record<string, unknown>, key: string): number {
  return body[key] as number;
}

/** Apply one accepted event in place; seq must be contiguous. */
export function applyEvent(state: CachedState, event: EventRecord): void {
  if (event.seq !== state.seq + 1) {
    throw new GapError(`event seq ${event.seq} does not follow ${state.seq}`);
  }
  const body = event.body;
  switch (event.kind) {
    case "RECEIVE":
      bump(state.stock, stockKey(str(body, "warehouseId"), str(body, "itemId")), num(body, "quantity"));
      break;
    case "ISSUE":
      bump(state.stock, stockKey(str(body, "warehouseId"), str(body, "itemId")), -num(body, "quantity"));
      break;
    case "TRANSFER":
      bump(state.stock, stockKey(str(body, "fromWarehouseId"), str(body, "itemId")), -num(body, "quantity"));
      bump(state.stock, stockKey(str(body, "toWarehouseId"), str(body, "itemId")), num(body, "quantity"));
      break;
    case "ADJUST": {
      const key = stockKey(str(body, "warehouseId"), str(body, "itemId"));
      const qty = num(body, "newQuantity");
      if (qty === 0) {
        delete state.stock[key];
      } else {
        state.stock[key] = qty;
      }
      break;
    }
    case "WAREHOUSE_CREATED":
    case "WAREHOUSE_UPDATED":
      state.warehouses[str(body, "id")] = sansExpected(body) as unknown as Warehouse;
      break;
    case "WAREHOUSE_DELETED":
      markDeleted(state.warehouses, str(body, "id"));
      break;
    case "ITEM_CREATED":
    case "ITEM_UPDATED":
      state.items[str(body, "id")] = sansExpected(body) as unknown as Item;
      break;
    case "ITEM_DELETED":
      markDeleted(state.items, str(body, "id"));
      break;
    case "CATEGORY_CREATED":
    case "CATEGORY_UPDATED":
      state.categories[str(body, "id")] = sansExpected(body) as unknown as Category;
      break;
    case "CATEGORY_DELETED": {
      const categoryId = str(body, "id");
      markDeleted(state.categories, categoryId);
      for (const item of Object.values(state.items)) {
        if (item.categoryId === categoryId && !item.deleted) {
          state.items[item.id] = { ...item, categoryId: null, version: item.version + 1 };
        }
      }
      break;
    }
    default:
      // user events and future kinds do not affect the cached views
      break;
  }
  state.seq = event.seq;
}

/** Update events carry expectedVersion alongside the entity; drop it. */
function sansExpected(body: Record<string, unknown>): Record<string, unknown> {
  const { expectedVersion: _ignored, ...entity } = body;
  return entity;
}

function markDeleted<T extends { deleted: boolean; version: number }>(
  table: Record<string, T>,
  id: string,
): void {
  const current = table[id];
  if (current !== undefined) {
    table[id] = { ...current, deleted: true, version: current.version + 1 };
  }
}

/**
 * Fold a pulled page into the state. A page that does not start right
 * after the local cursor means missed events; the caller must resync
 * from scratch rather than guess.
 */
export function clientMerge(state: CachedState, page: PullPage): void {
  if (page.events.length === 0) return;
  if (page.events[0]!.seq !== state.seq + 1) {
    throw new GapError(`page starts at seq ${page.events[0]!.seq}, expected ${state.seq + 1}`);
  }
  for (const event of page.events) {
    applyEvent(state, event);
  }
}

/** Active items sorted by name, for the list view. */
export function listItems(state: CachedState): Item[] {
  return Object.values(state.items)
    .filter((i) => !i.deleted)
    .sort((a, b) => (a.name < b.name ? -1 : a.name > b.name ? 1 : 0));
}

/** Active warehouses sorted by name. */
export function listWarehouses(state: CachedState): Warehouse[] {
  return Object.values(state.warehouses)
    .filter((w) => !w.deleted)
    .sort((a, b) => (a.name < b.name ? -1 : a.name > b.name ? 1 : 0));
}

/** Stock rows, optionally filtered, sorted by warehouse then item. */
export function stockLevels(
  state: CachedState,
  filter: { warehouseId?: string; itemId?: string } = {},
): StockLevel[] {
  const rows: StockLevel[] = [];
  for (const [key, quantity] of Object.entries(state.stock)) {
    const [warehouseId, itemId] = key.split("|") as [string, string];
    if (filter.warehouseId !== undefined && warehouseId !== filter.warehouseId) continue;
    if (filter.itemId !== undefined && itemId !== filter.itemId) continue;
    rows.push({ warehouseId, itemId, quantity });
  }
  rows.sort((a, b) =>
    a.warehouseId === b.warehouseId
      ? a.itemId < b.itemId
        ? -1
        : 1
      : a.warehouseId < b.warehouseId
        ? -1
        : 1,
  );
  return rows;
}

/** Serialize for durable storage. */
export function stateToJson(state: CachedState): string {
  return JSON.stringify(state);
}

export function stateFromJson(text: string): CachedState {
  const parsed = JSON.parse(text) as CachedState;
  return {
    seq: parsed.seq ?? 0,
    warehouses: parsed.warehouses ?? {},
    items: parsed.items ?? {},
    categories: parsed.categories ?? {},
    stock: parsed.stock ?? {},
  };
}
