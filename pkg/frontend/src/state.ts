/** Selection state and the requests it is allowed to produce.
 *
 * All interaction goes through `apply*` methods; each one re-validates the
 * key against the catalog and clears anything the new key no longer
 * supports (threshold controls exist only for daily data). Responses are
 * matched to the selection that issued them through a monotonically
 * increasing token so a stale response can never overwrite a newer one.
 */
import { inCatalog, KEY_FIELDS, repairSelection, type KeyField } from "./constraints.js";
import type {
  DatasetKey, Format, Shape, ThresholdSelection,
} from "./types.js";

export type Mode = "visualize" | "download";
export type PlotKind = "timeseries" | "choropleth";

export interface SelectionState {
  mode: Mode;
  plot: PlotKind;
  key: DatasetKey;
  threshold: ThresholdSelection | null;
  yearStart: number | null;
  yearEnd: number | null;
  regionIds: string[];
  mapTime: string | null;
  shape: Shape;
  format: Format;
  previewN: number;
  token: number;
}

export interface ApiRequest {
  endpoint: "/series" | "/map" | "/extremes" | "/download" | "/preview";
  params: Record<string, string>;
}

export function initialState(catalog: DatasetKey[]): SelectionState {
  if (catalog.length === 0) throw new Error("empty catalog");
  return {
    mode: "visualize",
    plot: "timeseries",
    key: { ...catalog[0] },
    threshold: null,
    yearStart: null,
    yearEnd: null,
    regionIds: [],
    mapTime: null,
    shape: "long",
    format: "csv",
    previewN: 10,
    token: 0,
  };
}

function bump(state: SelectionState): SelectionState {
  return { ...state, token: state.token + 1 };
}

export function applyKeyField(
  catalog: DatasetKey[], state: SelectionState, field: KeyField, value: unknown,
): SelectionState {
  const key = repairSelection(
    catalog, { ...state.key, [field]: value } as DatasetKey, field);
  const threshold = key.frequency === "daily" ? state.threshold : null;
  const mapTime = KEY_FIELDS.some((f) => f !== field && key[f] !== state.key[f])
    || key[field] !== state.key[field] ? null : state.mapTime;
  return bump({ ...state, key, threshold, mapTime });
}

export function applyThreshold(
  state: SelectionState, threshold: ThresholdSelection | null,
): SelectionState {
  if (threshold !== null && state.key.frequency !== "daily") {
    return state; // control is disabled for non-daily keys
  }
  return bump({ ...state, threshold });
}

export function applyYears(
  state: SelectionState, yearStart: number | null, yearEnd: number | null,
): SelectionState {
  if (yearStart !== null && yearEnd !== null && yearStart > yearEnd) {
    [yearStart, yearEnd] = [yearEnd, yearStart];
  }
  return bump({ ...state, yearStart, yearEnd });
}

export function applyRegions(state: SelectionState, regionIds: string[]): SelectionState {
  return bump({ ...state, regionIds: [...regionIds].sort() });
}

export function applyMode(state: SelectionState, mode: Mode): SelectionState {
  return bump({ ...state, mode });
}

export function applyPlot(state: SelectionState, plot: PlotKind): SelectionState {
  return bump({ ...state, plot });
}

export function applyShapeFormat(
  state: SelectionState, shape: Shape, format: Format,
): SelectionState {
  return bump({ ...state, shape, format });
}

export function applyMapTime(state: SelectionState, mapTime: string | null): SelectionState {
  return bump({ ...state, mapTime });
}

export function applyPreviewN(state: SelectionState, n: number): SelectionState {
  return bump({ ...state, previewN: Math.max(0, Math.floor(n)) });
}

function keyParams(key: DatasetKey): Record<string, string> {
  return {
    source: key.source,
    variable: key.variable,
    level: key.level,
    weighting: key.weighting,
    base_year: key.base_year === null ? "none" : String(key.base_year),
    frequency: key.frequency,
  };
}

function filterParams(state: SelectionState): Record<string, string> {
  const params: Record<string, string> = {};
  if (state.yearStart !== null) params.year_start = String(state.yearStart);
  if (state.yearEnd !== null) params.year_end = String(state.yearEnd);
  if (state.regionIds.length > 0) params.region_ids = state.regionIds.join(",");
  return params;
}

function thresholdParams(state: SelectionState): Record<string, string> {
  if (state.threshold === null) return {};
  return {
    mode: state.threshold.mode,
    value: String(state.threshold.value),
    period: state.threshold.period,
  };
}

/** The data request the current selection stands for. */
export function buildRequest(catalog: DatasetKey[], state: SelectionState): ApiRequest {
  if (!inCatalog(catalog, state.key)) {
    throw new Error("selection drifted off the catalog"); // must be unreachable
  }
  const params = { ...keyParams(state.key), ...filterParams(state) };
  if (state.mode === "download") {
    const endpoint = state.previewN > 0 ? "/preview" : "/download";
    if (endpoint === "/preview") params.n = String(state.previewN);
    else {
      params.shape = state.shape;
      params.format = state.format;
    }
    return { endpoint, params: { ...params, ...thresholdParams(state) } };
  }
  if (state.threshold !== null) {
    return { endpoint: "/extremes", params: { ...params, ...thresholdParams(state) } };
  }
  if (state.plot === "choropleth" && state.mapTime !== null) {
    return { endpoint: "/map", params: { ...params, time: state.mapTime } };
  }
  return { endpoint: "/series", params };
}

export function downloadRequest(catalog: DatasetKey[], state: SelectionState): ApiRequest {
  if (!inCatalog(catalog, state.key)) {
    throw new Error("selection drifted off the catalog");
  }
  return {
    endpoint: "/download",
    params: {
      ...keyParams(state.key),
      ...filterParams(state),
      ...thresholdParams(state),
      shape: state.shape,
      format: state.format,
    },
  };
}
