/** Wire types shared with the HTTP API. */

export interface GeoPoint {
  latitudeDeg: number;
  longitudeDeg: number;
}

export interface Warehouse {
  id: string;
  name: string;
  location: GeoPoint;
  address: string;
  version: number;
  deleted: boolean;
}

export interface Item {
  id: string;
  name: string;
  sku: string;
  ean13: string | null;
  categoryId: string | null;
  version: number;
  deleted: boolean;
}

export interface Category {
  id: string;
  name: string;
  version: number;
  deleted: boolean;
}

export interface PublicUser {
  id: string;
  username: string;
  displayName: string;
  role: "ADMIN" | "EMPLOYEE";
  active: boolean;
  version: number;
}

export interface StockLevel {
  warehouseId: string;
  itemId: string;
  quantity: number;
}

export type MovementKind = "RECEIVE" | "ISSUE" | "TRANSFER" | "ADJUST";

/** One event from the server log, in wire order. */
export interface EventRecord {
  seq: number;
  opId: string;
  actor: string;
  ts: string;
  kind: string;
  body: Record<string, unknown>;
}

export interface OpResult {
  status: "APPLIED" | "DUPLICATE" | "REJECTED";
  seq?: number;
  violation?: string;
  details?: string[];
}

export interface PullPage {
  events: EventRecord[];
  nextCursor: number;
  hasMore: boolean;
}

export interface PushOutcome {
  results: OpResult[];
  cursor: number;
}

/** Fields a movement needs before it gets an opId. */
export interface MovementDraft {
  kind: MovementKind;
  body: Record<string, unknown>;
}

/** A queued, durable operation awaiting sync. */
export interface PendingOp {
  opId: string;
  kind: MovementKind;
  body: Record<string, unknown>;
  queuedAt: string;
}

/** A pushed op the server refused; kept for user review. */
export interface RejectedOp extends PendingOp {
  violation: string;
  details: string[];
}

export type ScanResolution =
  | { type: "ITEM"; item: Item; stockLevels: StockLevel[] }
  | { type: "PREFILLED_OP"; proposal: OpProposal };

export interface OpProposal {
  kind: "RECEIVE" | "ISSUE";
  warehouseId: string;
  itemId: string;
  quantity: number;
}

export interface NearestResult {
  warehouse: Warehouse | null;
  distanceM?: number;
}

export interface ErrorEnvelope {
  code: string;
  message: string;
  details: string[];
}
