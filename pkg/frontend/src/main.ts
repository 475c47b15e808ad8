/** Dashboard wiring: sidebar selections drive the chart, map and download
 * panels. Every displayed number comes verbatim from an API payload. */
import { Client, ApiError } from "./api.js";
import { buildChartModel, renderChartSvg } from "./chart.js";
import { renderChoroplethSvg } from "./choropleth.js";
import { optionsFor, KEY_FIELDS, type KeyField } from "./constraints.js";
import {
  applyKeyField, applyMapTime, applyMode, applyPlot, applyPreviewN,
  applyRegions, applyShapeFormat, applyThreshold, applyYears, buildRequest,
  downloadRequest, initialState, type SelectionState,
} from "./state.js";
import { buildTableModel, renderTableHtml } from "./table.js";
import type { DatasetKey, FeatureCollection, ThresholdSelection } from "./types.js";

const API_BASE = (window as { ZONALCLIM_API?: string }).ZONALCLIM_API
  ?? "http://127.0.0.1:8000";
const client = new Client(API_BASE);

let catalog: DatasetKey[] = [];
let state: SelectionState;
const boundariesCache = new Map<string, FeatureCollection>();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function banner(message: string | null): void {
  const box = el<HTMLDivElement>("banner");
  if (message === null) {
    box.hidden = true;
    return;
  }
  box.hidden = false;
  box.innerHTML = "";
  const text = document.createElement("span");
  text.textContent = message;
  const dismiss = document.createElement("button");
  dismiss.textContent = "dismiss";
  dismiss.onclick = () => banner(null);
  box.append(text, dismiss);
}

function fillSelect(id: string, values: unknown[], current: unknown): void {
  const select = el<HTMLSelectElement>(id);
  select.innerHTML = "";
  for (const value of values) {
    const option = document.createElement("option");
    option.value = String(value);
    option.textContent = value === null ? "(none)" : String(value);
    option.selected = value === current;
    select.append(option);
  }
  select.disabled = values.length <= 1;
}

function renderSidebar(): void {
  for (const field of KEY_FIELDS) {
    fillSelect(`sel-${field}`, optionsFor(catalog, state.key, field), state.key[field]);
  }
  const daily = state.key.frequency === "daily";
  el<HTMLFieldSetElement>("threshold-controls").disabled = !daily;
  el<HTMLInputElement>("threshold-on").checked = state.threshold !== null;
  el<HTMLDivElement>("panel-visualize").hidden = state.mode !== "visualize";
  el<HTMLDivElement>("panel-download").hidden = state.mode !== "download";
  el<HTMLSelectElement>("sel-plot").value = state.plot;
  el<HTMLDivElement>("map-time-row").hidden = state.plot !== "choropleth";
}

function readThreshold(): ThresholdSelection | null {
  if (!el<HTMLInputElement>("threshold-on").checked) return null;
  return {
    mode: el<HTMLSelectElement>("threshold-mode").value as "absolute" | "quantile",
    value: Number(el<HTMLInputElement>("threshold-value").value),
    period: el<HTMLSelectElement>("threshold-period").value as "month" | "year",
  };
}

async function loadBoundaries(level: string): Promise<FeatureCollection> {
  const cached = boundariesCache.get(level);
  if (cached) return cached;
  const fc = await client.boundaries(level);
  boundariesCache.set(level, fc);
  return fc;
}

async function refresh(): Promise<void> {
  const token = state.token;
  banner(null);
  try {
    if (state.mode === "download") {
      const request = buildRequest(catalog, state);
      const preview = await client.preview(request.params);
      if (state.token !== token) return; // a newer selection superseded this one
      el<HTMLDivElement>("preview-box").innerHTML =
        renderTableHtml(buildTableModel(preview));
      el<HTMLSpanElement>("preview-count").textContent =
        `${preview.records.length} of ${preview.meta.total_records} records`;
      const dl = downloadRequest(catalog, state);
      el<HTMLAnchorElement>("download-link").href = client.url(dl.endpoint, dl.params);
      return;
    }
    const request = buildRequest(catalog, state);
    if (request.endpoint === "/map") {
      const [payload, fc] = await Promise.all([
        client.map(request.params), loadBoundaries(state.key.level)]);
      if (state.token !== token) return;
      el<HTMLDivElement>("plot-box").innerHTML =
        renderChoroplethSvg(fc, payload, state.key.variable);
      return;
    }
    const records = request.endpoint === "/extremes"
      ? await client.extremes(request.params)
      : await client.series(request.params);
    if (state.token !== token) return;
    if (state.plot === "choropleth") {
      // choropleth without a chosen timestamp: offer the available times
      const times = [...new Set(records.map((r) => r.time))].sort();
      fillSelect("sel-map-time", times, state.mapTime ?? times[0]);
      if (state.mapTime === null && times.length > 0) {
        state = applyMapTime(state, times[0]);
        await refresh();
        return;
      }
    }
    el<HTMLDivElement>("plot-box").innerHTML = renderChartSvg(buildChartModel(records));
  } catch (error) {
    if (state.token !== token) return;
    if (error instanceof ApiError) {
      banner(`${error.body.code}: ${error.body.message}`);
    } else {
      banner(String(error));
    }
  }
}

function wire(): void {
  for (const field of KEY_FIELDS) {
    el<HTMLSelectElement>(`sel-${field}`).onchange = (event) => {
      const raw = (event.target as HTMLSelectElement).value;
      const value: unknown = field === "base_year"
        ? (raw === "null" || raw === "(none)" || raw === "" ? null : Number(raw))
        : raw;
      state = applyKeyField(catalog, state, field as KeyField, value);
      renderSidebar();
      void refresh();
    };
  }
  el<HTMLSelectElement>("sel-mode").onchange = (event) => {
    state = applyMode(state, (event.target as HTMLSelectElement).value as "visualize" | "download");
    renderSidebar();
    void refresh();
  };
  el<HTMLSelectElement>("sel-plot").onchange = (event) => {
    state = applyPlot(state, (event.target as HTMLSelectElement).value as "timeseries" | "choropleth");
    renderSidebar();
    void refresh();
  };
  for (const id of ["threshold-on", "threshold-mode", "threshold-value", "threshold-period"]) {
    el<HTMLElement>(id).onchange = () => {
      state = applyThreshold(state, readThreshold());
      void refresh();
    };
  }
  el<HTMLButtonElement>("apply-years").onclick = () => {
    const start = el<HTMLInputElement>("year-start").value;
    const end = el<HTMLInputElement>("year-end").value;
    state = applyYears(state, start === "" ? null : Number(start),
                       end === "" ? null : Number(end));
    void refresh();
  };
  el<HTMLInputElement>("region-ids").onchange = (event) => {
    const raw = (event.target as HTMLInputElement).value.trim();
    state = applyRegions(state, raw === "" ? [] : raw.split(",").map((s) => s.trim()));
    void refresh();
  };
  el<HTMLSelectElement>("sel-map-time").onchange = (event) => {
    state = applyMapTime(state, (event.target as HTMLSelectElement).value);
    void refresh();
  };
  for (const id of ["sel-shape", "sel-format"]) {
    el<HTMLSelectElement>(id).onchange = () => {
      state = applyShapeFormat(
        state,
        el<HTMLSelectElement>("sel-shape").value as "wide" | "long",
        el<HTMLSelectElement>("sel-format").value as "csv" | "json");
      void refresh();
    };
  }
  el<HTMLInputElement>("preview-n").onchange = (event) => {
    state = applyPreviewN(state, Number((event.target as HTMLInputElement).value));
    void refresh();
  };
}

async function start(): Promise<void> {
  try {
    const entries = await client.catalog();
    catalog = entries.map((entry) => entry.key);
    if (catalog.length === 0) {
      banner("the catalog is empty; build and store datasets first");
      return;
    }
    state = initialState(catalog);
    wire();
    renderSidebar();
    await refresh();
  } catch (error) {
    banner(`cannot reach the API at ${API_BASE}: ${String(error)}`);
  }
}

void start();
