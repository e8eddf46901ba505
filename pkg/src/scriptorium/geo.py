"""Gazetteer lookups against external place-name authorities.

Fixture mode (the default, and the only mode the test suite uses) reads a
shipped lookup table and is fully deterministic and network-free. Live
adapters for Getty TGN and Geonames are thin, rate-limited and configured
through the environment.
"""
from __future__ import annotations

import os
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

SOURCES = ("tgn", "geonames")
DEFAULT_GEONAMES_ENDPOINT = "http://api.geonames.org/searchJSON"
DEFAULT_TGN_ENDPOINT = "http://vocab.getty.edu/sparql.json"
MIN_REQUEST_INTERVAL = 1.0  # seconds, per source


class GazetteerError(ValueError):
    pass


@dataclass(frozen=True)
class GazetteerRecord:
    source: str
    external_id: str
    name: str
    lat: float
    lon: float
    place_kind: str = ""


def _fixture_path() -> Path:
    return Path(str(resources.files("scriptorium").joinpath(
        "data/fixtures/gazetteer.tsv")))


def load_fixture_table(path: Path | None = None) -> list[GazetteerRecord]:
    path = path or _fixture_path()
    records = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        source, external_id, name, lat, lon, kind = line.split("\t")
        records.append(GazetteerRecord(source, external_id, name,
                                       float(lat), float(lon), kind))
    return records


class GazetteerClient:
    def __init__(self, mode: str | None = None, fixture_path: Path | None = None):
        self.mode = mode or os.environ.get("GEO_MODE", "fixture")
        if self.mode not in ("fixture", "live"):
            raise GazetteerError(f"unknown GEO_MODE {self.mode!r}")
        self._fixture_path = fixture_path
        self._table: list[GazetteerRecord] | None = None
        self._last_request: dict[str, float] = {}

    def _fixtures(self) -> list[GazetteerRecord]:
        if self._table is None:
            self._table = load_fixture_table(self._fixture_path)
        return self._table

    def lookup(self, name: str, source: str) -> list[GazetteerRecord]:
        """Candidate records for a place name, most relevant first:
        exact normalized match, then prefix, then substring."""
        if not name or not name.strip():
            raise GazetteerError("empty place name")
        if source not in SOURCES:
            raise GazetteerError(f"unknown gazetteer source {source!r}; "
                                 f"known: {', '.join(SOURCES)}")
        if self.mode == "fixture":
            return self._lookup_fixture(name.strip(), source)
        return self._lookup_live(name.strip(), source)

    def _lookup_fixture(self, name: str, source: str) -> list[GazetteerRecord]:
        needle = name.casefold()
        scored = []
        for record in self._fixtures():
            if record.source != source:
                continue
            hay = record.name.casefold()
            if hay == needle:
                rank = 0
            elif hay.startswith(needle):
                rank = 1
            elif needle in hay:
                rank = 2
            else:
                continue
            scored.append((rank, record.name, record.external_id, record))
        return [record for *_, record in sorted(scored)]

    # -- live adapters --------------------------------------------------------

    def _throttle(self, source: str) -> None:
        last = self._last_request.get(source, 0.0)
        wait = MIN_REQUEST_INTERVAL - (time.monotonic() - last)
        if wait > 0:
            time.sleep(wait)
        self._last_request[source] = time.monotonic()

    def _lookup_live(self, name: str, source: str) -> list[GazetteerRecord]:
        import requests

        self._throttle(source)
        try:
            return self._live_once(name, source, requests)
        except requests.RequestException:
            self._throttle(source)  # retry once
            return self._live_once(name, source, requests)

    def _live_once(self, name, source, requests) -> list[GazetteerRecord]:
        if source == "geonames":
            user = os.environ.get("GEONAMES_USER")
            if not user:
                raise GazetteerError("GEONAMES_USER is not configured")
            response = requests.get(DEFAULT_GEONAMES_ENDPOINT,
                                    params={"q": name, "maxRows": 10,
                                            "username": user},
                                    timeout=20)
            response.raise_for_status()
            return [GazetteerRecord("geonames", str(row["geonameId"]),
                                    row.get("name", ""),
                                    float(row.get("lat", 0.0)),
                                    float(row.get("lng", 0.0)),
                                    row.get("fclName", ""))
                    for row in response.json().get("geonames", [])]
        # Getty SPARQL returns the id and coordinates in one round trip
        endpoint = os.environ.get("TGN_ENDPOINT", DEFAULT_TGN_ENDPOINT)
        sparql = f"""
            SELECT ?id ?label ?lat ?lon WHERE {{
              ?place a gvp:Subject ; luc:term "{name}" ;
                     gvp:prefLabelGVP/xl:literalForm ?label ;
                     foaf:focus [ wgs:lat ?lat ; wgs:long ?lon ] ;
                     dc:identifier ?id .
            }} LIMIT 10"""
        response = requests.get(endpoint, params={"query": sparql},
                                headers={"Accept": "application/sparql-results+json"},
                                timeout=20)
        response.raise_for_status()
        records = []
        for row in response.json().get("results", {}).get("bindings", []):
            records.append(GazetteerRecord(
                "tgn", row["id"]["value"], row["label"]["value"],
                float(row["lat"]["value"]), float(row["lon"]["value"]), ""))
        return records
