/** Shared payload and selection types mirrored from the API contract. */

export type Level = "L0" | "L1";
export type Weighting = "unweighted" | "population" | "nightlight";
export type Frequency = "daily" | "monthly" | "annual";
export type ThresholdMode = "absolute" | "quantile";
export type ThresholdPeriod = "month" | "year";
export type Shape = "wide" | "long";
export type Format = "csv" | "json";

export interface DatasetKey {
  source: string;
  variable: string;
  level: Level;
  weighting: Weighting;
  base_year: number | null;
  frequency: Frequency;
}

export interface CatalogEntry {
  key: DatasetKey;
  source_version: string;
  period: [string, string];
  built_at: string;
  checksum: string;
}

export interface LongRecord {
  region_id: string;
  time: string;
  value: number | null;
}

export type MapPayload = Record<string, number | null>;

export interface PreviewPayload {
  meta: {
    key: DatasetKey;
    shape: Shape;
    total_records: number;
    variable: string;
    units: string;
    frequency: string;
  };
  records: Record<string, unknown>[];
}

export interface ThresholdSelection {
  mode: ThresholdMode;
  value: number;
  period: ThresholdPeriod;
}

export interface ApiErrorBody {
  code: string;
  message: string;
}

export interface GeoFeature {
  type: "Feature";
  properties: { region_id: string; name: string; level: number | string };
  geometry: {
    type: "Polygon" | "MultiPolygon";
    coordinates: number[][][] | number[][][][];
  };
}

export interface FeatureCollection {
  type: "FeatureCollection";
  features: GeoFeature[];
}
