/**
 * Pure HTML builders for the main views. Keeping these as functions from
 * state to markup lets tests assert on rendered output without a browser;
 * main.ts owns the DOM wiring.
 */

import type { CachedState } from "./state.js";
import { listItems, listWarehouses } from "./state.js";
import { stockKey } from "./state.js";
import type { OpProposal, PendingOp, RejectedOp } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

/**
 * The item list with one row per active item: total stock across
 * warehouses from the optimistic view, and a pending badge when queued
 * ops touch the item.
 */
export function itemListHtml(
  state: CachedState,
  optimisticStock: Record<string, number>,
  pending: readonly PendingOp[],
): string {
  const pendingItems = new Set(pending.map((op) => op.body["itemId"] as string));
  const rows = listItems(state).map((item) => {
    let total = 0;
    for (const warehouse of listWarehouses(state)) {
      total += optimisticStock[stockKey(warehouse.id, item.id)] ?? 0;
    }
    const badge = pendingItems.has(item.id) ? ' <span class="badge">pending sync</span>' : "";
    return (
      `<li class="item" data-id="${escapeHtml(item.id)}">` +
      `<span class="sku">${escapeHtml(item.sku)}</span> ` +
      `<span class="name">${escapeHtml(item.name)}</span> ` +
      `<span class="qty">${total}</span>${badge}</li>`
    );
  });
  return `<ul class="items">${rows.join("")}</ul>`;
}

/** The confirmation sheet for a scanned op label. */
export function confirmationSheetHtml(proposal: OpProposal, state: CachedState): string {
  const item = state.items[proposal.itemId];
  const warehouse = state.warehouses[proposal.warehouseId];
  return (
    '<form class="confirm-sheet">' +
    `<p class="op-kind">${escapeHtml(proposal.kind)}</p>` +
    `<p class="op-item">${escapeHtml(item?.name ?? proposal.itemId)}</p>` +
    `<p class="op-warehouse">${escapeHtml(warehouse?.name ?? proposal.warehouseId)}</p>` +
    `<input class="op-qty" type="number" min="1" value="${proposal.quantity}">` +
    '<button type="submit">Confirm</button>' +
    "</form>"
  );
}

/** Rejected ops awaiting user review, with their violation codes. */
export function rejectedListHtml(rejected: readonly RejectedOp[]): string {
  if (rejected.length === 0) return "";
  const rows = rejected.map(
    (op) =>
      `<li class="rejected" data-op-id="${escapeHtml(op.opId)}">` +
      `${escapeHtml(op.kind)} refused: <code>${escapeHtml(op.violation)}</code></li>`,
  );
  return `<ul class="rejected-ops">${rows.join("")}</ul>`;
}
