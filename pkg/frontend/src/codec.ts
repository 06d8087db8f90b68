/**
 * Client-side mirror of the label payload grammar and EAN-13 check math,
 * used to resolve scans against the cached state while offline. Online,
 * the server's scan endpoint stays the authority.
 *
 * Payloads are ASCII and semicolon separated:
 *
 *     IMS1;ITEM;<uuid>
 *     IMS1;OP;RECEIVE;<warehouse-uuid>;<item-uuid>;<qty>
 *     IMS1;OP;ISSUE;<warehouse-uuid>;<item-uuid>;<qty>
 */

import type { OpProposal } from "./types.js";

export const PAYLOAD_VERSION = "IMS1";

const UUID_RE = /^[0-9a-f]{8}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{12}$/;
const QTY_RE = /^[1-9][0-9]*$/;

export class PayloadError extends Error {
  readonly code: string;

  constructor(message: string, code: string) {
    super(message);
    this.code = code;
  }
}

export type DecodedLabel =
  | { type: "ITEM"; itemId: string }
  | { type: "OP"; proposal: OpProposal };

/** Mod-10 check digit for a 12-digit prefix, weights 1,3,1,3,... */
export function ean13CheckDigit(prefix: string): number {
  if (!/^[0-9]{12}$/.test(prefix)) {
    throw new PayloadError(`expected 12 decimal digits, got ${prefix}`, "MALFORMED_INPUT");
  }
  let total = 0;
  for (let i = 0; i < 12; i++) {
    total += Number(prefix[i]) * (i % 2 === 0 ? 1 : 3);
  }
  return (10 - (total % 10)) % 10;
}

/** True when the text is a well-formed EAN-13 with a correct check digit. */
export function isValidEan13(code: string): boolean {
  if (!/^[0-9]{13}$/.test(code)) return false;
  return Number(code[12]) === ean13CheckDigit(code.slice(0, 12));
}

/** Parse canonical payload text; throws PayloadError on anything else. */
export function decodePayload(text: string): DecodedLabel {
  const fields = text.split(";");
  if (fields[0] !== PAYLOAD_VERSION) {
    throw new PayloadError(`unsupported payload version ${fields[0]}`, "UNSUPPORTED_VERSION");
  }
  const kind = fields[1] ?? "";
  if (kind === "ITEM") {
    if (fields.length !== 3) {
      throw new PayloadError("ITEM payload takes exactly one field", "BAD_FIELD_COUNT");
    }
    const itemId = fields[2]!;
    if (!UUID_RE.test(itemId)) {
      throw new PayloadError(`bad uuid ${itemId}`, "BAD_UUID");
    }
    return { type: "ITEM", itemId };
  }
  if (kind === "OP") {
    if (fields.length !== 6) {
      throw new PayloadError("OP payload takes exactly four fields", "BAD_FIELD_COUNT");
    }
    const [opKind, warehouseId, itemId, qty] = [fields[2]!, fields[3]!, fields[4]!, fields[5]!];
    if (opKind !== "RECEIVE" && opKind !== "ISSUE") {
      throw new PayloadError(`unknown op kind ${opKind}`, "UNKNOWN_KIND");
    }
    for (const value of [warehouseId, itemId]) {
      if (!UUID_RE.test(value)) {
        throw new PayloadError(`bad uuid ${value}`, "BAD_UUID");
      }
    }
    if (!QTY_RE.test(qty)) {
      throw new PayloadError(`bad quantity ${qty}`, "BAD_QUANTITY");
    }
    return {
      type: "OP",
      proposal: { kind: opKind, warehouseId, itemId, quantity: Number(qty) },
    };
  }
  throw new PayloadError(`unknown label kind ${kind}`, "UNKNOWN_KIND");
}

/** Canonical encoding; the inverse of decodePayload. */
export function encodePayload(label: DecodedLabel): string {
  if (label.type === "ITEM") {
    if (!UUID_RE.test(label.itemId)) {
      throw new PayloadError(`bad uuid ${label.itemId}`, "INVALID_PAYLOAD");
    }
    return `${PAYLOAD_VERSION};ITEM;${label.itemId}`;
  }
  const p = label.proposal;
  if (p.kind !== "RECEIVE" && p.kind !== "ISSUE") {
    throw new PayloadError(`unknown op kind ${p.kind}`, "INVALID_PAYLOAD");
  }
  if (!UUID_RE.test(p.warehouseId) || !UUID_RE.test(p.itemId)) {
    throw new PayloadError("bad uuid", "INVALID_PAYLOAD");
  }
  if (!Number.isInteger(p.quantity) || p.quantity < 1) {
    throw new PayloadError(`quantity must be >= 1, got ${p.quantity}`, "INVALID_PAYLOAD");
  }
  return `${PAYLOAD_VERSION};OP;${p.kind};${p.warehouseId};${p.itemId};${p.quantity}`;
}
