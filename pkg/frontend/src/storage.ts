/**
 * Minimal durable key-value contract. The browser passes localStorage;
 * tests pass an in-memory map. Everything the app must survive a reload
 * with (token, queue, cached state, last warehouse) goes through this.
 */

export interface KeyValueStorage {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export const STORAGE_KEYS = {
  token: "ims.token",
  clientId: "ims.clientId",
  queue: "ims.queue.v1",
  state: "ims.state.v1",
  lastWarehouse: "ims.lastWarehouse",
} as const;

/** In-memory stand-in with the same contract, for tests and private tabs. */
export class MemoryStorage implements KeyValueStorage {
  private readonly map = new Map<string, string>();

  getItem(key: string): string | null {
    return this.map.has(key) ? this.map.get(key)! : null;
  }

  setItem(key: string, value: string): void {
    this.map.set(key, value);
  }

  removeItem(key: string): void {
    this.map.delete(key);
  }
}
