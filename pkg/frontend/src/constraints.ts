/** Catalog-driven selection constraints.
 *
 * The selectable value space is exactly the set of keys the catalog
 * advertises, so the UI can never assemble a request for a combination that
 * is invalid or unstored. After any field change, `repairSelection` walks
 * the remaining fields in a fixed cascade and snaps each one to a value that
 * keeps at least one catalog key reachable.
 */
import type { DatasetKey } from "./types.js";

export type KeyField = keyof DatasetKey;

export const KEY_FIELDS: KeyField[] = [
  "variable", "source", "frequency", "level", "weighting", "base_year",
];

export function sameKey(a: DatasetKey, b: DatasetKey): boolean {
  return KEY_FIELDS.every((f) => a[f] === b[f]);
}

function matches(key: DatasetKey, field: KeyField, value: unknown): boolean {
  return key[field] === value;
}

/** Distinct values available for one field, holding every other field fixed. */
export function optionsFor(
  catalog: DatasetKey[], selection: DatasetKey, field: KeyField,
): unknown[] {
  const others = KEY_FIELDS.filter((f) => f !== field);
  const pool = catalog.filter((k) => others.every((f) => matches(k, f, selection[f])));
  const seen: unknown[] = [];
  for (const key of pool) {
    if (!seen.includes(key[field])) seen.push(key[field]);
  }
  return seen;
}

/** Snap a selection back onto the catalog after `changed` was set.
 *
 * The changed field wins; every other field keeps its value when some
 * catalog key still allows it and otherwise takes the first value that
 * does. The result always equals one advertised key.
 */
export function repairSelection(
  catalog: DatasetKey[], selection: DatasetKey, changed: KeyField,
): DatasetKey {
  if (catalog.length === 0) throw new Error("empty catalog");
  const order = [changed, ...KEY_FIELDS.filter((f) => f !== changed)];
  let remaining = catalog;
  const repaired = { ...selection };
  for (const field of order) {
    let narrowed = remaining.filter((k) => matches(k, field, repaired[field]));
    if (narrowed.length === 0) {
      (repaired as Record<KeyField, unknown>)[field] = remaining[0][field];
      narrowed = remaining.filter((k) => matches(k, field, repaired[field]));
    }
    remaining = narrowed;
  }
  return repaired;
}

export function inCatalog(catalog: DatasetKey[], key: DatasetKey): boolean {
  return catalog.some((k) => sameKey(k, key));
}
