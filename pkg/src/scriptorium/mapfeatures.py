"""Assembles map features (points, transfer lines, route line-sets) from a
selection of entities. Entities whose geometry cannot be resolved are
reported in an `unresolved` section, never dropped silently."""
from __future__ import annotations

from dataclasses import dataclass, field

from .access import User
from .documents import EntityDocument
from .schema import strip_indices
from .values import Coordinates, EntityLink, ExternalPlace, render_text

LatLon = tuple[float, float]


@dataclass
class MapFeature:
    kind: str                       # point | line | line-set
    geometry: object                # LatLon | (LatLon, LatLon) | list of pairs
    popup: dict[str, str]
    source_entity_id: str
    degenerate: bool = False


@dataclass
class FeatureCollection:
    features: list[MapFeature] = field(default_factory=list)
    unresolved: list[dict] = field(default_factory=list)

    def add_unresolved(self, entity_id: str, reason: str) -> None:
        self.unresolved.append({"entity": entity_id, "reason": reason})


def _first_value_at(doc: EntityDocument, free_path: str):
    for path in sorted(doc.values):
        if strip_indices(path) == free_path:
            return doc.values[path]
    return None


def _own_coordinates(doc: EntityDocument, paths: list[str]) -> LatLon | None:
    for free_path in paths:
        value = _first_value_at(doc, free_path)
        if isinstance(value, Coordinates) and value.points:
            if value.kind == "point":
                return value.points[0]
            lat = sum(p[0] for p in value.points) / len(value.points)
            lon = sum(p[1] for p in value.points) / len(value.points)
            return (lat, lon)
        if isinstance(value, ExternalPlace):
            return (value.lat, value.lon)
    return None


class MapAssembler:
    def __init__(self, store, geometry_config: dict, access=None):
        self.store = store
        self.config = geometry_config
        self.access = access

    def _doc(self, entity_id: str) -> EntityDocument | None:
        return self.store._docs.get(entity_id)

    def _popup(self, doc: EntityDocument) -> dict[str, str]:
        schema = self.store.schemas.get(doc.type_name, doc.schema_version)
        fields = schema.map_point_fields or schema.summary_columns[:1]
        popup = {}
        for free_path in fields:
            value = _first_value_at(doc, free_path)
            if value is not None:
                popup[free_path] = render_text(value)
        return popup

    def _location_point(self, entity_id: str) -> LatLon | None:
        doc = self._doc(entity_id)
        if doc is None:
            return None
        rule = self.config.get(doc.type_name, {})
        return _own_coordinates(doc, rule.get("coordinates", []))

    def _point_via_link(self, doc: EntityDocument, link_path: str) -> LatLon | None:
        value = _first_value_at(doc, link_path)
        if not isinstance(value, EntityLink):
            return None
        return self._location_point(value.target_id)

    def _transfer_line(self, doc: EntityDocument, rule: dict):
        start = self._point_via_link(doc, rule["from"])
        end = self._point_via_link(doc, rule["to"])
        if start is None or end is None:
            missing = "from" if start is None else "to"
            return None, f"unresolvable {missing}-location"
        return (start, end), None

    def assemble(self, entity_ids: list[str],
                 viewer: User | None = None) -> FeatureCollection:
        out = FeatureCollection()
        for entity_id in entity_ids:
            doc = self._doc(entity_id)
            if doc is None:
                out.add_unresolved(entity_id, "unknown entity")
                continue
            if self.access is not None and viewer is not None \
                    and not self.access.authorize(viewer, "view", doc):
                out.add_unresolved(entity_id, "not viewable")
                continue
            rule = self.config.get(doc.type_name)
            if rule is None:
                out.add_unresolved(entity_id, f"type {doc.type_name} has no map rule")
                continue
            kind = rule["kind"]
            if kind == "point":
                if "via" in rule:
                    point = self._point_via_link(doc, rule["via"])
                else:
                    point = _own_coordinates(doc, rule.get("coordinates", []))
                if point is None:
                    out.add_unresolved(entity_id, "no coordinates")
                    continue
                out.features.append(MapFeature("point", point, self._popup(doc),
                                               entity_id))
            elif kind == "line":
                line, reason = self._transfer_line(doc, rule)
                if line is None:
                    out.add_unresolved(entity_id, reason)
                    continue
                out.features.append(MapFeature("line", line, self._popup(doc),
                                               entity_id,
                                               degenerate=line[0] == line[1]))
            elif kind == "line-set":
                transfers_path = rule["transfers"]
                lines = []
                any_transfer = False
                for path in sorted(doc.values):
                    if strip_indices(path) != transfers_path:
                        continue
                    link = doc.values[path]
                    if not isinstance(link, EntityLink):
                        continue
                    any_transfer = True
                    transfer = self._doc(link.target_id)
                    if transfer is None:
                        out.add_unresolved(link.target_id, "unknown entity")
                        continue
                    transfer_rule = self.config.get(transfer.type_name)
                    if not transfer_rule or transfer_rule["kind"] != "line":
                        out.add_unresolved(link.target_id, "not a transfer")
                        continue
                    line, reason = self._transfer_line(transfer, transfer_rule)
                    if line is None:
                        out.add_unresolved(link.target_id, reason)
                        continue
                    lines.append(line)
                if not any_transfer:
                    out.add_unresolved(entity_id, "route has no transfers")
                    continue
                out.features.append(MapFeature("line-set", lines, self._popup(doc),
                                               entity_id))
        return out
