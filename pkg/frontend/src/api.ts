/**
 * Thin typed client for the inventory HTTP API. All network access in the
 * app funnels through here so tests and the offline path can substitute
 * the fetch implementation.
 */

import type {
  ErrorEnvelope,
  Item,
  MovementKind,
  NearestResult,
  OpResult,
  PullPage,
  PublicUser,
  PushOutcome,
  ScanResolution,
  StockLevel,
  Warehouse,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** The server refused the request; carries the error envelope. */
export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly details: string[];

  constructor(status: number, envelope: ErrorEnvelope) {
    super(envelope.message);
    this.status = status;
    this.code = envelope.code;
    this.details = envelope.details ?? [];
  }
}

/** The request never reached the server (offline, DNS, aborted). */
export class NetworkError extends Error {
  constructor(cause: unknown) {
    super(`network unavailable: ${String(cause)}`);
  }
}

export interface ApiClientOptions {
  baseUrl: string;
  fetchFn?: FetchLike;
  getToken?: () => string | null;
}

export class ApiClient {
  private readonly baseUrl: string;
  private readonly fetchFn: FetchLike;
  private readonly getToken: () => string | null;

  constructor(options: ApiClientOptions) {
    this.baseUrl = options.baseUrl.replace(/\/$/, "");
    this.fetchFn = options.fetchFn ?? ((url, init) => fetch(url, init));
    this.getToken = options.getToken ?? (() => null);
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    const token = this.getToken();
    if (token !== null) headers["authorization"] = `Bearer ${token}`;
    let payload: string | undefined;
    if (body !== undefined) {
      headers["content-type"] = "application/json";
      payload = JSON.stringify(body);
    }
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}/api/v1${path}`, {
        method,
        headers,
        body: payload,
      });
    } catch (cause) {
      throw new NetworkError(cause);
    }
    const text = await response.text();
    const parsed: unknown = text.length > 0 ? JSON.parse(text) : null;
    if (!response.ok) {
      throw new ApiError(response.status, parsed as ErrorEnvelope);
    }
    return parsed as T;
  }

  health(): Promise<{ status: string; seq: number }> {
    return this.request("GET", "/health");
  }

  login(username: string, password: string): Promise<{ token: string; user: PublicUser }> {
    return this.request("POST", "/auth/login", { username, password });
  }

  listItems(): Promise<Item[]> {
    return this.request("GET", "/items");
  }

  listWarehouses(): Promise<Warehouse[]> {
    return this.request("GET", "/warehouses");
  }

  stock(filter: { warehouseId?: string; itemId?: string } = {}): Promise<StockLevel[]> {
    const params = new URLSearchParams();
    if (filter.warehouseId !== undefined) params.set("warehouseId", filter.warehouseId);
    if (filter.itemId !== undefined) params.set("itemId", filter.itemId);
    const query = params.toString();
    return this.request("GET", `/stock${query ? `?${query}` : ""}`);
  }

  nearest(latitudeDeg: number, longitudeDeg: number, radiusM?: number): Promise<NearestResult> {
    const params = new URLSearchParams({
      lat: String(latitudeDeg),
      lon: String(longitudeDeg),
    });
    if (radiusM !== undefined) params.set("radiusM", String(radiusM));
    return this.request("GET", `/warehouses/nearest?${params.toString()}`);
  }

  scan(payload: string): Promise<ScanResolution> {
    return this.request("POST", "/scan", { payload });
  }

  /** Label payload text for an item, or for a prefilled movement on it. */
  label(
    itemId: string,
    op?: { opKind: "RECEIVE" | "ISSUE"; warehouseId: string; quantity: number },
  ): Promise<{ payload: string }> {
    if (op === undefined) {
      return this.request("GET", `/items/${itemId}/label`);
    }
    const params = new URLSearchParams({
      kind: "OP",
      opKind: op.opKind,
      warehouseId: op.warehouseId,
      quantity: String(op.quantity),
    });
    return this.request("GET", `/items/${itemId}/label?${params.toString()}`);
  }

  movement(op: {
    opId: string;
    kind: MovementKind;
    [field: string]: unknown;
  }): Promise<OpResult> {
    return this.request("POST", "/stock/movements", op);
  }

  push(clientId: string, ops: { opId: string; kind: string; body: unknown }[]): Promise<PushOutcome> {
    return this.request("POST", "/sync/push", { clientId, ops });
  }

  pull(cursor: number, limit?: number): Promise<PullPage> {
    const params = new URLSearchParams({ cursor: String(cursor) });
    if (limit !== undefined) params.set("limit", String(limit));
    return this.request("GET", `/sync/pull?${params.toString()}`);
  }
}
