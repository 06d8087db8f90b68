/**
 * Browser entry point: wires storage, the API client, the offline queue
 * and the sync manager to the DOM, registers the service worker, and
 * flushes the queue whenever connectivity returns.
 */

import { ApiClient } from "./api.js";
import { API_BASE_URL } from "./config.js";
import { rememberWarehouse, browserPosition, suggestWarehouse } from "./geo.js";
import { OfflineQueue } from "./queue.js";
import { confirmationSheetHtml, escapeHtml, itemListHtml, rejectedListHtml } from "./render.js";
import { ConfirmationSheet, resolveScan } from "./scan.js";
import { cameraFrameSource, scanUntilDecoded } from "./scanner.js";
import { listItems, listWarehouses } from "./state.js";
import { STORAGE_KEYS } from "./storage.js";
import { SyncManager, flushWithBackoff } from "./sync.js";

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing #${id}`);
  return node as T;
}

async function boot(): Promise<void> {
  if ("serviceWorker" in navigator) {
    try {
      await navigator.serviceWorker.register("/sw.js");
    } catch {
      // the app still works as a plain page
    }
  }

  const storage = window.localStorage;
  const api = new ApiClient({
    baseUrl: API_BASE_URL || window.location.origin,
    getToken: () => storage.getItem(STORAGE_KEYS.token),
  });
  const queue = new OfflineQueue(storage);
  const sync = new SyncManager(api, queue, storage);

  const status = byId<HTMLElement>("status");
  const list = byId<HTMLElement>("item-list");
  const sheet = byId<HTMLElement>("sheet");
  const warehousePicker = byId<HTMLSelectElement>("move-warehouse");
  const itemPicker = byId<HTMLSelectElement>("move-item");

  function renderPicker(picker: HTMLSelectElement, rows: { id: string; name: string }[]): void {
    const current = picker.value;
    picker.innerHTML =
      `<option value="" disabled>choose</option>` +
      rows.map((row) => `<option value="${escapeHtml(row.id)}">${escapeHtml(row.name)}</option>`).join("");
    picker.value = rows.some((row) => row.id === current) ? current : "";
  }

  function renderList(): void {
    list.innerHTML =
      itemListHtml(sync.state, queue.optimisticStock(sync.state), queue.pending()) +
      rejectedListHtml(queue.rejected());
    renderPicker(warehousePicker, listWarehouses(sync.state));
    renderPicker(itemPicker, listItems(sync.state));
  }

  /** Nearest warehouse wins; last-used covers a denied position; otherwise
      the picker stays on its placeholder. The user can always override. */
  async function preselectWarehouse(): Promise<void> {
    if (warehousePicker.value !== "") return;
    const suggestion = await suggestWarehouse({ api, storage, position: browserPosition() });
    if (suggestion.warehouseId !== null && sync.state.warehouses[suggestion.warehouseId] !== undefined) {
      warehousePicker.value = suggestion.warehouseId;
    }
  }

  async function flush(): Promise<void> {
    status.textContent = "syncing";
    const report = await flushWithBackoff(sync, { maxAttempts: 3 });
    status.textContent = report.offline
      ? "offline, queued work kept"
      : `synced (applied ${report.applied}, duplicate ${report.duplicate}, rejected ${report.rejected.length})`;
    renderList();
    await preselectWarehouse();
  }

  const loginForm = byId<HTMLFormElement>("login-form");
  loginForm.addEventListener("submit", (event) => {
    event.preventDefault();
    const username = byId<HTMLInputElement>("login-user").value;
    const password = byId<HTMLInputElement>("login-pass").value;
    api
      .login(username, password)
      .then(({ token }) => {
        storage.setItem(STORAGE_KEYS.token, token);
        status.textContent = "signed in";
        return flush();
      })
      .catch((error: Error) => {
        status.textContent = `sign-in failed: ${error.message}`;
      });
  });

  byId<HTMLButtonElement>("scan-button").addEventListener("click", async () => {
    const video = byId<HTMLVideoElement>("viewfinder");
    const source = await cameraFrameSource(video);
    const text =
      source !== null
        ? await scanUntilDecoded(source)
        : window.prompt("camera unavailable, enter the code text:");
    if (text === null || text === "") return;
    try {
      const resolution = await resolveScan(text, { api, cached: sync.state });
      if (resolution.type === "ITEM") {
        status.textContent = `item ${resolution.item.name}`;
        return;
      }
      sheet.innerHTML = confirmationSheetHtml(resolution.proposal, sync.state);
      const confirmation = new ConfirmationSheet(resolution.proposal, {
        api,
        queue,
        cached: sync.state,
      });
      sheet.querySelector("form")!.addEventListener("submit", async (event) => {
        event.preventDefault();
        const qty = Number((sheet.querySelector(".op-qty") as HTMLInputElement).value);
        confirmation.setQuantity(qty);
        const outcome = await confirmation.confirm();
        rememberWarehouse(storage, confirmation.proposal.warehouseId);
        status.textContent =
          outcome.mode === "submitted"
            ? `booked (${outcome.result.status})`
            : `queued offline${outcome.warning !== null ? `: ${outcome.warning}` : ""}`;
        sheet.innerHTML = "";
        renderList();
      });
    } catch (error) {
      status.textContent = (error as Error).message;
    }
  });

  byId<HTMLFormElement>("movement-form").addEventListener("submit", async (event) => {
    event.preventDefault();
    const kind: "RECEIVE" | "ISSUE" =
      byId<HTMLSelectElement>("move-kind").value === "ISSUE" ? "ISSUE" : "RECEIVE";
    const warehouseId = warehousePicker.value;
    const itemId = itemPicker.value;
    const quantity = Number(byId<HTMLInputElement>("move-qty").value);
    if (warehouseId === "" || itemId === "" || !Number.isInteger(quantity) || quantity < 1) {
      status.textContent = "pick a warehouse, an item and a positive quantity";
      return;
    }
    const booking = new ConfirmationSheet({ kind, warehouseId, itemId, quantity }, { api, queue, cached: sync.state });
    const outcome = await booking.confirm();
    rememberWarehouse(storage, warehouseId);
    status.textContent =
      outcome.mode === "submitted"
        ? `booked (${outcome.result.status})`
        : `queued offline${outcome.warning !== null ? `: ${outcome.warning}` : ""}`;
    renderList();
  });

  window.addEventListener("online", () => {
    void flush();
  });

  renderList();
  if (navigator.onLine) await flush();
  else await preselectWarehouse();
}

void boot();
