"""Corpus exports: per-entity XML archives and union RDF graphs.

Archives are deterministic (fixed timestamps, sorted member names), so
exporting the same corpus twice yields byte-identical bytes.
"""
from __future__ import annotations

import io
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

from . import rdf
from .access import User
from .documents import EntityDocument
from .mapping import (MappingSpec, naive_export, parse_mapping,
                      transform_entity)

ZIP_EPOCH = (1980, 1, 1, 0, 0, 0)


@dataclass
class ExportScope:
    org_id: str | None = None
    type_name: str | None = None
    ids: list[str] | None = None


@dataclass
class ExportResult:
    archive: bytes
    included: list[str]
    excluded: list[str] = field(default_factory=list)   # failed authorization


def _select(store, scope: ExportScope) -> list[EntityDocument]:
    docs = []
    for doc in store.all_documents():
        if scope.org_id and doc.org_id != scope.org_id:
            continue
        if scope.type_name and doc.type_name != scope.type_name:
            continue
        if scope.ids is not None and doc.id not in scope.ids:
            continue
        docs.append(doc)
    return sorted(docs, key=lambda d: d.id)


def _authorized(access, viewer: User | None, docs):
    if access is None or viewer is None:
        return list(docs), []
    included, excluded = [], []
    for doc in docs:
        (included if access.authorize(viewer, "view", doc) else excluded).append(doc)
    return included, [d.id for d in excluded]


def load_mapping_specs(mappings_dir: Path) -> dict[str, MappingSpec]:
    specs = {}
    if mappings_dir and mappings_dir.is_dir():
        for path in sorted(mappings_dir.glob("*.xml")):
            spec = parse_mapping(path.read_text(encoding="utf-8"))
            specs[spec.source_type] = spec
    return specs


def build_union_graph(docs, specs: dict[str, MappingSpec],
                      base_iri: str) -> tuple[set, dict[str, str]]:
    """CIDOC-CRM graph where a mapping file exists, naive fallback where not;
    deterministic set union."""
    graph: set = set()
    prefixes: dict[str, str] = {"crm": rdf.CRM_NS}
    for doc in docs:
        spec = specs.get(doc.type_name)
        if spec is None:
            graph |= naive_export(doc, base_iri)
        else:
            graph |= transform_entity(doc, spec, base_iri)
            prefixes.update(spec.prefixes)
    return graph, prefixes


def serialize_union(graph, prefixes, rdf_format: str) -> str:
    if rdf_format == "rdf-nt":
        return rdf.serialize_ntriples(graph)
    if rdf_format == "rdf-ttl":
        return rdf.serialize_turtle(graph, prefixes)
    raise ValueError(f"unknown RDF format {rdf_format!r}")


def export_dataset(store, scope: ExportScope, export_format: str,
                   mappings_dir: Path | None, base_iri: str,
                   viewer: User | None = None, access=None) -> ExportResult:
    """format: xml (one interchange file per entity) | rdf-nt | rdf-ttl."""
    docs, excluded = _authorized(access, viewer, _select(store, scope))
    members: list[tuple[str, str]] = []
    if export_format == "xml":
        for doc in docs:
            members.append((f"{doc.id}.xml", store.export_entity_xml(doc.id)))
    elif export_format in ("rdf-nt", "rdf-ttl"):
        specs = load_mapping_specs(mappings_dir) if mappings_dir else {}
        graph, prefixes = build_union_graph(docs, specs, base_iri)
        suffix = "nt" if export_format == "rdf-nt" else "ttl"
        members.append((f"export.{suffix}", serialize_union(graph, prefixes,
                                                            export_format)))
    else:
        raise ValueError(f"unknown export format {export_format!r}")
    if excluded:
        members.append(("excluded.txt", "".join(e + "\n" for e in excluded)))
    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w", zipfile.ZIP_DEFLATED) as archive:
        for name, text in sorted(members):
            info = zipfile.ZipInfo(name, date_time=ZIP_EPOCH)
            info.compress_type = zipfile.ZIP_DEFLATED
            archive.writestr(info, text)
    return ExportResult(buffer.getvalue(), [d.id for d in docs], excluded)
