/** Thin typed client over the aggregation service. */
import type {
  ApiErrorBody, CatalogEntry, FeatureCollection, LongRecord, MapPayload,
  PreviewPayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(readonly status: number, readonly body: ApiErrorBody) {
    super(`${body.code}: ${body.message}`);
  }
}

export class Client {
  constructor(readonly baseUrl: string) {}

  url(path: string, params: Record<string, string> = {}): string {
    const u = new URL(path, this.baseUrl);
    for (const [k, v] of Object.entries(params)) u.searchParams.set(k, v);
    return u.toString();
  }

  private async getJson<T>(path: string, params: Record<string, string> = {}): Promise<T> {
    const response = await fetch(this.url(path, params));
    if (!response.ok) {
      const body = (await response.json()) as ApiErrorBody;
      throw new ApiError(response.status, body);
    }
    return (await response.json()) as T;
  }

  catalog(): Promise<CatalogEntry[]> {
    return this.getJson<CatalogEntry[]>("/catalog");
  }

  series(params: Record<string, string>): Promise<LongRecord[]> {
    return this.getJson<LongRecord[]>("/series", params);
  }

  map(params: Record<string, string>): Promise<MapPayload> {
    return this.getJson<MapPayload>("/map", params);
  }

  extremes(params: Record<string, string>): Promise<LongRecord[]> {
    return this.getJson<LongRecord[]>("/extremes", params);
  }

  preview(params: Record<string, string>): Promise<PreviewPayload> {
    return this.getJson<PreviewPayload>("/preview", params);
  }

  boundaries(level: string): Promise<FeatureCollection> {
    return this.getJson<FeatureCollection>("/boundaries", { level });
  }

  async downloadBytes(params: Record<string, string>): Promise<Uint8Array> {
    const response = await fetch(this.url("/download", params));
    if (!response.ok) {
      const body = (await response.json()) as ApiErrorBody;
      throw new ApiError(response.status, body);
    }
    return new Uint8Array(await response.arrayBuffer());
  }
}
