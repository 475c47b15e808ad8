/** Preview table rendering: rows come from /preview verbatim. */
import type { PreviewPayload } from "./types.js";

export interface TableModel {
  columns: string[];
  rows: (string | number | null)[][];
}

export function buildTableModel(payload: PreviewPayload): TableModel {
  if (payload.records.length === 0) return { columns: [], rows: [] };
  const columns = Object.keys(payload.records[0]);
  const rows = payload.records.map((record) =>
    columns.map((c) => record[c] as string | number | null));
  return { columns, rows };
}

function escapeHtml(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderTableHtml(model: TableModel): string {
  if (model.columns.length === 0) {
    return `<p class="empty">no records in preview</p>`;
  }
  const head = model.columns.map((c) => `<th>${escapeHtml(c)}</th>`).join("");
  const body = model.rows.map((row) =>
    `<tr>${row.map((cell) =>
      `<td>${cell === null ? "&mdash;" : escapeHtml(String(cell))}</td>`).join("")}</tr>`)
    .join("");
  return `<table><thead><tr>${head}</tr></thead><tbody>${body}</tbody></table>`;
}
