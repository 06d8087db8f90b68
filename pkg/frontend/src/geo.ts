/**
 * Warehouse preselection from device position. The suggestion is a
 * convenience only: the user can always override, and every failure mode
 * (permission denied, no position, nothing in range, offline) falls back
 * to the last warehouse they used.
 */

import type { ApiClient } from "./api.js";
import type { KeyValueStorage } from "./storage.js";
import { STORAGE_KEYS } from "./storage.js";

export interface DevicePosition {
  latitudeDeg: number;
  longitudeDeg: number;
}

/** Resolves to null when permission is denied or no fix is available. */
export type PositionSource = () => Promise<DevicePosition | null>;

export interface WarehouseSuggestion {
  warehouseId: string | null;
  source: "nearest" | "last-used" | "none";
}

export async function suggestWarehouse(deps: {
  api: ApiClient;
  storage: KeyValueStorage;
  position: PositionSource;
  radiusM?: number;
}): Promise<WarehouseSuggestion> {
  const lastUsed = deps.storage.getItem(STORAGE_KEYS.lastWarehouse);
  const fallback: WarehouseSuggestion =
    lastUsed !== null
      ? { warehouseId: lastUsed, source: "last-used" }
      : { warehouseId: null, source: "none" };

  let position: DevicePosition | null;
  try {
    position = await deps.position();
  } catch {
    position = null;
  }
  if (position === null) return fallback;

  try {
    const result = await deps.api.nearest(position.latitudeDeg, position.longitudeDeg, deps.radiusM);
    if (result.warehouse === null) return { warehouseId: null, source: "none" };
    return { warehouseId: result.warehouse.id, source: "nearest" };
  } catch {
    return fallback;
  }
}

/** Remember the warehouse a movement was booked against. */
export function rememberWarehouse(storage: KeyValueStorage, warehouseId: string): void {
  storage.setItem(STORAGE_KEYS.lastWarehouse, warehouseId);
}

/** Browser geolocation as a PositionSource; null on denial or timeout. */
export function browserPosition(timeoutMs = 5000): PositionSource {
  return () =>
    new Promise((resolve) => {
      if (typeof navigator === "undefined" || navigator.geolocation === undefined) {
        resolve(null);
        return;
      }
      navigator.geolocation.getCurrentPosition(
        (pos) => resolve({ latitudeDeg: pos.coords.latitude, longitudeDeg: pos.coords.longitude }),
        () => resolve(null),
        { timeout: timeoutMs },
      );
    });
}
