"""
Dataset ingestion and seeded synthetic generation for the placement
analysis. Real county/PoP/CDN data is ingested from CSV; the synthetic
generator builds population-weighted clustered instances inside a
bounding box so tests and demos never need downloads.
"""
import csv
import os
import random

from .placement import County, SiteKind, SitePoint

COUNTY_HEADER = ["fips", "name", "lat", "lon", "population"]
SITE_HEADER = ["id", "lat", "lon"]

# roughly the continental US
DEFAULT_BBOX = (25.0, -124.0, 49.0, -67.0)  # lat_min, lon_min, lat_max, lon_max


class IngestError(Exception):
    pass


def _read_rows(path, header):
    if not os.path.exists(path):
        raise IngestError(f"missing dataset file: {path}")
    with open(path, newline="") as f:
        reader = csv.reader(row for row in f if not row.startswith("#"))
        rows = list(reader)
    if not rows or rows[0] != header:
        raise IngestError(f"{path}: expected header {','.join(header)}")
    return rows[1:]


def load_counties(path):
    counties = []
    for lineno, row in enumerate(_read_rows(path, COUNTY_HEADER), start=2):
        try:
            fips, name, lat, lon, pop = row
            counties.append(County(fips=fips, name=name, lat=float(lat),
                                   lon=float(lon), population=int(pop)))
        except (ValueError, TypeError) as exc:
            raise IngestError(f"{path}: line {lineno}: {exc}") from exc
    return counties


def load_sites(path, kind):
    sites = []
    for lineno, row in enumerate(_read_rows(path, SITE_HEADER), start=2):
        try:
            sid, lat, lon = row
            sites.append(SitePoint(id=sid, kind=kind,
                                   lat=float(lat), lon=float(lon)))
        except (ValueError, TypeError) as exc:
            raise IngestError(f"{path}: line {lineno}: {exc}") from exc
    return sites


def generate_synthetic(seed, n_counties=40, n_pops=8, n_cdns=4,
                       n_clusters=5, bbox=DEFAULT_BBOX):
    """Clustered synthetic instance: population centers with counties
    scattered around them, PoPs and CDNs biased toward the centers."""
    rng = random.Random(seed)
    lat_min, lon_min, lat_max, lon_max = bbox
    centers = [(rng.uniform(lat_min, lat_max), rng.uniform(lon_min, lon_max))
               for _ in range(n_clusters)]
    weights = [rng.uniform(0.5, 2.0) for _ in range(n_clusters)]

    def near(center, spread):
        lat = min(lat_max, max(lat_min, rng.gauss(center[0], spread)))
        lon = min(lon_max, max(lon_min, rng.gauss(center[1], 2 * spread)))
        return lat, lon

    counties = []
    for i in range(n_counties):
        ci = rng.choices(range(n_clusters), weights=weights)[0]
        lat, lon = near(centers[ci], 1.5)
        pop = max(1000, round(rng.lognormvariate(11, 1) * weights[ci]))
        counties.append(County(fips=f"{i:05d}", name=f"county{i}",
                               lat=lat, lon=lon, population=pop))
    pops = []
    for i in range(n_pops):
        ci = rng.choices(range(n_clusters), weights=weights)[0]
        lat, lon = near(centers[ci], 2.5)
        pops.append(SitePoint(id=f"pop{i:03d}", kind=SiteKind.PEERING_POP,
                              lat=lat, lon=lon))
    cdns = []
    for i in range(n_cdns):
        ci = rng.choices(range(n_clusters), weights=weights)[0]
        lat, lon = near(centers[ci], 3.0)
        cdns.append(SitePoint(id=f"cdn{i:03d}", kind=SiteKind.CDN_POP,
                              lat=lat, lon=lon))
    return counties, pops, cdns


def write_dataset(out_dir, counties, pops, cdns):
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    total_pop = sum(c.population for c in counties)
    paths["counties"] = os.path.join(out_dir, "counties.csv")
    with open(paths["counties"], "w", newline="") as f:
        f.write(f"# total_population={total_pop}\n")
        w = csv.writer(f)
        w.writerow(COUNTY_HEADER)
        for c in counties:
            w.writerow([c.fips, c.name, f"{c.lat:.6f}", f"{c.lon:.6f}",
                        c.population])
    for key, sites in (("pops", pops), ("cdns", cdns)):
        paths[key] = os.path.join(out_dir, f"{key}.csv")
        with open(paths[key], "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(SITE_HEADER)
            for s in sites:
                w.writerow([s.id, f"{s.lat:.6f}", f"{s.lon:.6f}"])
    return paths
