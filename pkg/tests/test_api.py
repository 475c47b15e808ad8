import json

import pytest
from fastapi.testclient import TestClient

from zonalclim.api import create_app
from zonalclim.catalog import DatasetKey, DatasetMeta, Store, export
from zonalclim.temporal import ThresholdSpec, count_exceedance_days


MONTHLY_KEY = {"source": "custom", "variable": "temperature", "level": "L0",
               "weighting": "unweighted", "base_year": "none",
               "frequency": "monthly"}
DAILY_KEY = {"source": "ERA5", "variable": "temperature", "level": "L0",
             "weighting": "unweighted", "base_year": "none",
             "frequency": "daily"}


@pytest.fixture(scope="module")
def client(world_store):
    store, _tables = world_store
    return TestClient(create_app(store))


@pytest.fixture(scope="module")
def tables(world_store):
    return world_store[1]


def normalized(data: bytes) -> bytes:
    return json.dumps(json.loads(data), separators=(",", ":")).encode()


class TestCatalog:
    def test_empty_store_gives_empty_list(self, tmp_path):
        empty = TestClient(create_app(Store(tmp_path)))
        assert empty.get("/catalog").json() == []

    def test_entries_parse_back_with_checksums(self, client):
        entries = client.get("/catalog").json()
        assert len(entries) == 8
        for raw in entries:
            meta = DatasetMeta.from_dict(raw)
            assert len(meta.checksum) == 64
            assert isinstance(meta.key, DatasetKey)


class TestSeries:
    def test_filter_region_and_years(self, client):
        r = client.get("/series", params={**MONTHLY_KEY, "region_ids": "AAA",
                                          "year_start": "2001",
                                          "year_end": "2001"})
        records = r.json()
        assert len(records) == 12
        assert all(rec["region_id"] == "AAA" for rec in records)
        assert all(rec["time"].startswith("2001") for rec in records)

    def test_year_start_after_year_end_is_400(self, client):
        r = client.get("/series", params={**MONTHLY_KEY, "year_start": "2002",
                                          "year_end": "2000"})
        assert r.status_code == 400
        body = r.json()
        assert set(body) == {"code", "message"}

    def test_full_range_equals_long_json_export(self, client, tables):
        r = client.get("/series", params=MONTHLY_KEY)
        exported = export(tables["custom_temperature_L0_unweighted_none_monthly"],
                          "long", "json")
        assert normalized(r.content) == normalized(exported)

    def test_pagination_slices_canonical_order(self, client):
        full = client.get("/series", params=MONTHLY_KEY).json()
        page = client.get("/series", params={**MONTHLY_KEY, "offset": "5",
                                             "limit": "7"}).json()
        assert page == full[5:12]

    def test_unknown_key_is_404(self, client):
        r = client.get("/series", params={**MONTHLY_KEY, "level": "L1",
                                          "frequency": "annual"})
        assert r.status_code == 404
        assert r.json()["code"] == "not_found"

    def test_invalid_enum_is_400(self, client):
        r = client.get("/series", params={**MONTHLY_KEY, "weighting": "money"})
        assert r.status_code == 400
        assert r.json()["code"] == "invalid_key"


class TestMap:
    def test_values_match_series_at_timestamp(self, client):
        t = "2001-07"
        payload = client.get("/map", params={**MONTHLY_KEY, "time": t}).json()
        series = client.get("/series", params=MONTHLY_KEY).json()
        expected = {rec["region_id"]: rec["value"]
                    for rec in series if rec["time"] == t}
        assert payload == expected
        assert set(payload) == {"AAA", "BBB"}

    def test_never_omits_regions_with_missing_values(self, world_store):
        store, _ = world_store
        client = TestClient(create_app(store))
        payload = client.get("/map", params={**MONTHLY_KEY, "time": "2000-06"}).json()
        assert set(payload) == {"AAA", "BBB"}

    def test_timestamp_outside_coverage_is_404(self, client):
        r = client.get("/map", params={**MONTHLY_KEY, "time": "1999-01"})
        assert r.status_code == 404
        assert r.json()["code"] == "time_out_of_coverage"


class TestExtremes:
    def test_quantile_one_counts_zero(self, client):
        r = client.get("/extremes", params={**DAILY_KEY, "mode": "quantile",
                                            "value": "1.0", "period": "month"})
        assert r.status_code == 200
        assert all(rec["value"] == 0 for rec in r.json())

    def test_absolute_below_minimum_counts_every_day(self, client):
        r = client.get("/extremes", params={**DAILY_KEY, "mode": "absolute",
                                            "value": "-1000", "period": "month"})
        counts = {(rec["region_id"], rec["time"]): rec["value"]
                  for rec in r.json()}
        assert counts[("AAA", "2003-01")] == 31
        assert counts[("AAA", "2003-02")] == 28

    def test_equals_direct_module_invocation(self, client, tables):
        r = client.get("/extremes", params={**DAILY_KEY, "mode": "absolute",
                                            "value": "14.0", "period": "year"})
        direct = count_exceedance_days(
            tables["ERA5_temperature_L0_unweighted_none_daily"],
            ThresholdSpec("absolute", 14.0, "year"))
        expected = [{"region_id": rid, "time": ts, "value": v}
                    for rid, ts, v in direct.rows]
        assert r.json() == expected

    def test_non_daily_key_is_400(self, client):
        r = client.get("/extremes", params={**MONTHLY_KEY, "mode": "absolute",
                                            "value": "10", "period": "month"})
        assert r.status_code == 400
        assert r.json()["code"] == "not_daily"

    def test_missing_threshold_is_400(self, client):
        r = client.get("/extremes", params=DAILY_KEY)
        assert r.status_code == 400


class TestDownloadPreview:
    @pytest.mark.parametrize("shape", ["long", "wide"])
    @pytest.mark.parametrize("format", ["csv", "json"])
    def test_download_equals_export(self, client, tables, shape, format):
        r = client.get("/download", params={**MONTHLY_KEY, "shape": shape,
                                            "format": format})
        table = tables["custom_temperature_L0_unweighted_none_monthly"]
        assert r.content == export(table, shape, format)
        assert "attachment" in r.headers["content-disposition"]

    def test_download_applies_filters(self, client, tables):
        r = client.get("/download", params={**MONTHLY_KEY, "shape": "long",
                                            "format": "csv",
                                            "region_ids": "BBB",
                                            "year_start": "2000",
                                            "year_end": "2000"})
        lines = r.content.decode().splitlines()
        assert len(lines) == 13  # header + 12 months of one region
        assert all(line.startswith("BBB,2000") for line in lines[1:])

    def test_preview_zero_gives_metadata_only(self, client):
        r = client.get("/preview", params={**MONTHLY_KEY, "n": "0"})
        body = r.json()
        assert body["records"] == []
        assert body["meta"]["total_records"] == 48
        assert body["meta"]["key"]["source"] == "custom"

    @pytest.mark.parametrize("n", [1, 5, 48, 100])
    def test_preview_is_prefix_of_download(self, client, n):
        preview = client.get("/preview", params={**MONTHLY_KEY, "n": str(n)}).json()
        download = client.get("/download", params={**MONTHLY_KEY, "shape": "long",
                                                   "format": "json"}).json()
        assert preview["records"] == download[:n]

    def test_threshold_download_counts_table(self, client, tables):
        params = {**DAILY_KEY, "mode": "absolute", "value": "14.0",
                  "period": "month", "shape": "long", "format": "csv"}
        r = client.get("/download", params=params)
        direct = count_exceedance_days(
            tables["ERA5_temperature_L0_unweighted_none_daily"],
            ThresholdSpec("absolute", 14.0, "month"))
        assert r.content == export(direct, "long", "csv")

    def test_threshold_on_monthly_download_is_400(self, client):
        params = {**MONTHLY_KEY, "mode": "absolute", "value": "14.0",
                  "period": "month"}
        assert client.get("/download", params=params).status_code == 400


class TestBoundaries:
    def test_geojson_served_per_level(self, client):
        r = client.get("/boundaries", params={"level": "L0"})
        doc = r.json()
        assert doc["type"] == "FeatureCollection"
        ids = {f["properties"]["region_id"] for f in doc["features"]}
        assert ids == {"AAA", "BBB"}

    def test_unknown_level_is_400(self, client):
        assert client.get("/boundaries", params={"level": "L9"}).status_code == 400
