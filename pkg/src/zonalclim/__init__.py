"""zonalclim: gridded climate variables aggregated to administrative regions
with socio-economic weight grids, plus a queryable catalog and HTTP service."""

__version__ = "0.1.0"
