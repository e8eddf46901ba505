"""Entity documents: typed field values addressed by path, plus the
bit-exact XML interchange format used for export and import."""
from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from decimal import Decimal, InvalidOperation

from . import chrono
from .schema import (EntityTypeSchema, FieldDef, GroupDef, Issue, PathError,
                     iter_leaves, parse_field_path, render_field_path,
                     resolve_field_path)
from .values import (Coordinates, EntityLink, ExternalPlace, FieldValue,
                     FileRef, FormattedText, NumberVal, PlainText, TermRef,
                     ThesaurusRef, TimeVal, check_value, value_matches_kind)

STATUSES = ("unpublished", "pending", "published")


class DocumentFormatError(ValueError):
    pass


@dataclass
class EntityDocument:
    id: str
    type_name: str
    schema_version: int
    org_id: str
    creator_user_id: str
    status: str = "unpublished"
    revision: int = 0
    values: dict[str, FieldValue] = field(default_factory=dict)

    def copy(self) -> "EntityDocument":
        return replace(self, values=dict(self.values))

    def linked_ids(self) -> set[str]:
        return {v.target_id for v in self.values.values() if isinstance(v, EntityLink)}

    def digital_files(self) -> list[FileRef]:
        """Attachments referenced from digital-file fields, in path order."""
        return [v for _, v in sorted(self.values.items())
                if isinstance(v, FileRef)]


@dataclass
class VersionRecord:
    version_number: int
    snapshot_of: EntityDocument
    created_by: str
    created_at: str  # UTC ISO timestamp


def canonical_value_paths(doc: EntityDocument, schema: EntityTypeSchema) -> list[str]:
    """Value paths in interchange order: schema (document) order of the
    leaf definition first, instance indices second."""
    leaf_order = {path: i for i, (path, _) in enumerate(iter_leaves(schema))}

    def key(path: str):
        segs = parse_field_path(path)
        free = "/".join(name for name, _ in segs)
        indices = tuple(idx or 0 for _, idx in segs)
        return (leaf_order.get(free, len(leaf_order)), indices)

    return sorted(doc.values, key=key)


def _xml_escape(s: str, attr: bool = False) -> str:
    s = s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    if attr:
        s = (s.replace('"', "&quot;").replace("\n", "&#10;")
             .replace("\t", "&#9;").replace("\r", "&#13;"))
    return s


def _value_element(value: FieldValue) -> str:
    if isinstance(value, PlainText):
        return f"<text>{_xml_escape(value.text)}</text>"
    if isinstance(value, FormattedText):
        return f"<richtext>{_xml_escape(value.markup)}</richtext>"
    if isinstance(value, NumberVal):
        return f"<number>{value.value}</number>"
    if isinstance(value, TermRef):
        return (f'<term vocab="{_xml_escape(value.vocab_id, True)}" '
                f'id="{_xml_escape(value.term_id, True)}">{_xml_escape(value.label)}</term>')
    if isinstance(value, ThesaurusRef):
        return (f'<concept thesaurus="{_xml_escape(value.thesaurus_id, True)}" '
                f'id="{_xml_escape(value.concept_id, True)}">{_xml_escape(value.label)}</concept>')
    if isinstance(value, EntityLink):
        return (f'<link type="{_xml_escape(value.target_type, True)}" '
                f'id="{_xml_escape(value.target_id, True)}">{_xml_escape(value.display_label)}</link>')
    if isinstance(value, TimeVal):
        return (f'<timespan expr="{_xml_escape(value.expr, True)}" '
                f'earliest="{value.span.earliest}" latest="{value.span.latest}"/>')
    if isinstance(value, Coordinates):
        body = ";".join(f"{lat!r},{lon!r}" for lat, lon in value.points)
        return f'<geo kind="{value.kind}">{body}</geo>'
    if isinstance(value, ExternalPlace):
        return (f'<place source="{value.source}" id="{_xml_escape(value.external_id, True)}" '
                f'lat="{value.lat!r}" lon="{value.lon!r}"/>')
    if isinstance(value, FileRef):
        return (f'<file ref="{_xml_escape(value.attachment_id, True)}" '
                f'media="{_xml_escape(value.media_kind, True)}"/>')
    raise TypeError(f"not a field value: {value!r}")


def export_entity_xml(doc: EntityDocument, schema: EntityTypeSchema) -> str:
    """Serialize a document in the interchange format (one line per field,
    attributes and field order fixed, so equal documents give equal bytes)."""
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<entity type="{doc.type_name}" id="{_xml_escape(doc.id, True)}" '
           f'org="{_xml_escape(doc.org_id, True)}" creator="{_xml_escape(doc.creator_user_id, True)}" '
           f'status="{doc.status}" schemaVersion="{doc.schema_version}" '
           f'revision="{doc.revision}">']
    for path in canonical_value_paths(doc, schema):
        out.append(f'  <field path="{_xml_escape(path, True)}">'
                   f'{_value_element(doc.values[path])}</field>')
    out.append("</entity>")
    return "\n".join(out) + "\n"


def _parse_value_element(el: ET.Element) -> FieldValue:
    text = el.text or ""
    if el.tag == "text":
        return PlainText(text)
    if el.tag == "richtext":
        return FormattedText(text)
    if el.tag == "number":
        try:
            return NumberVal(Decimal(text))
        except InvalidOperation as e:
            raise DocumentFormatError(f"bad number {text!r}") from e
    if el.tag == "term":
        return TermRef(el.get("vocab") or "", el.get("id") or "", text)
    if el.tag == "concept":
        return ThesaurusRef(el.get("thesaurus") or "", el.get("id") or "", text)
    if el.tag == "link":
        return EntityLink(el.get("type") or "", el.get("id") or "", text)
    if el.tag == "timespan":
        try:
            span = chrono.TimeSpan(int(el.get("earliest") or ""), int(el.get("latest") or ""))
        except ValueError as e:
            raise DocumentFormatError(f"bad timespan element: {e}") from e
        return TimeVal(el.get("expr") or "", span)
    if el.tag == "geo":
        points = []
        for pair in text.split(";"):
            try:
                lat, lon = pair.split(",")
                points.append((float(lat), float(lon)))
            except ValueError as e:
                raise DocumentFormatError(f"bad coordinate pair {pair!r}") from e
        return Coordinates(el.get("kind") or "point", tuple(points))
    if el.tag == "place":
        try:
            return ExternalPlace(el.get("source") or "", el.get("id") or "",
                                 float(el.get("lat") or ""), float(el.get("lon") or ""))
        except ValueError as e:
            raise DocumentFormatError(f"bad place element: {e}") from e
    if el.tag == "file":
        return FileRef(el.get("ref") or "", el.get("media") or "")
    raise DocumentFormatError(f"unknown value element <{el.tag}>")


def parse_entity_xml(xml_text: str) -> EntityDocument:
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as e:
        raise DocumentFormatError(f"XML syntax error: {e.msg} at {e.position}") from e
    if root.tag != "entity":
        raise DocumentFormatError(f"expected <entity>, got <{root.tag}>")
    status = root.get("status") or "unpublished"
    if status not in STATUSES:
        raise DocumentFormatError(f"unknown status {status!r}")
    try:
        schema_version = int(root.get("schemaVersion") or "1")
        revision = int(root.get("revision") or "0")
    except ValueError as e:
        raise DocumentFormatError(str(e)) from e
    values: dict[str, FieldValue] = {}
    for fel in root.findall("field"):
        path = fel.get("path") or ""
        children = list(fel)
        if len(children) != 1:
            raise DocumentFormatError(f"field {path!r} must carry exactly one value element")
        if path in values:
            raise DocumentFormatError(f"duplicate field path {path!r}")
        values[path] = _parse_value_element(children[0])
    return EntityDocument(
        id=root.get("id") or "",
        type_name=root.get("type") or "",
        schema_version=schema_version,
        org_id=root.get("org") or "",
        creator_user_id=root.get("creator") or "",
        status=status,
        revision=revision,
        values=values,
    )


def _instance_tree(paths: list[list[tuple[str, int | None]]]):
    """Group observed indices: map (parent instance prefix, segment name)
    -> set of indices, for contiguity checking."""
    observed: dict[tuple[str, str], set[int]] = {}
    for segs in paths:
        prefix: list[str] = []
        for name, idx in segs:
            if idx is not None:
                observed.setdefault(("/".join(prefix), name), set()).add(idx)
            prefix.append(name if idx is None else f"{name}[{idx}]")
    return observed


def validate_document(doc: EntityDocument, schema: EntityTypeSchema,
                      vocabs=None, thesauri=None,
                      normalize=chrono.parse_to_span) -> list[Issue]:
    """Check every document invariant against the schema.

    Missing required fields are warnings while the card is unpublished;
    the transition to pending treats them as hard errors.
    """
    issues: list[Issue] = []
    parsed: list[list[tuple[str, int | None]]] = []
    for path, value in doc.values.items():
        try:
            segs = parse_field_path(path)
            definition = resolve_field_path(schema, segs)
        except PathError as e:
            issues.append(Issue(e.code, str(e), path))
            continue
        if not isinstance(definition, FieldDef):
            issues.append(Issue("value-on-group", f"{path!r} addresses a group, not a field", path))
            continue
        # canonical form: an index exactly on every multiple segment
        node: GroupDef | FieldDef = schema.root
        for name, idx in segs:
            node = node.child(name)  # type: ignore[union-attr]
            if node.multiple and idx is None:
                issues.append(Issue("missing-index",
                                    f"segment {name!r} is multiple; an instance index is required",
                                    path))
        parsed.append(segs)
        if not value_matches_kind(value, definition.kind.kind):
            issues.append(Issue("kind-mismatch",
                                f"value {type(value).__name__} does not fit field kind "
                                f"{definition.kind.kind!r}", path))
            continue
        for problem in check_value(value):
            issues.append(Issue("bad-value", problem, path))
        if isinstance(value, EntityLink) and value.target_type not in definition.kind.targets:
            issues.append(Issue("bad-link-target",
                                f"target type {value.target_type!r} not permitted here", path))
        if isinstance(value, TermRef):
            if definition.kind.vocab_id != value.vocab_id:
                issues.append(Issue("wrong-vocabulary",
                                    f"field uses vocabulary {definition.kind.vocab_id!r}, "
                                    f"value references {value.vocab_id!r}", path))
            elif vocabs is not None:
                term = vocabs.find_term(value.vocab_id, value.term_id)
                if term is None:
                    code = ("term-not-in-static-vocabulary"
                            if definition.kind.vocab_mode == "static" else "unknown-term")
                    issues.append(Issue(code, f"term {value.term_id!r} not in "
                                        f"vocabulary {value.vocab_id!r}", path))
        if isinstance(value, ThesaurusRef) and thesauri is not None:
            if not thesauri.has_concept(value.thesaurus_id, value.concept_id):
                issues.append(Issue("unknown-concept",
                                    f"concept {value.concept_id!r} not in thesaurus "
                                    f"{value.thesaurus_id!r}", path))
        if isinstance(value, TimeVal):
            try:
                expected = normalize(value.expr)
            except chrono.TimeExpressionError as e:
                issues.append(Issue("bad-time-expression", str(e), path))
            else:
                if expected != value.span:
                    issues.append(Issue("stale-normalization",
                                        f"stored span [{value.span.earliest}, {value.span.latest}] "
                                        f"differs from re-normalization "
                                        f"[{expected.earliest}, {expected.latest}]", path))
    for (prefix, name), indices in _instance_tree(parsed).items():
        if indices != set(range(1, len(indices) + 1)):
            where = f"{prefix}/{name}" if prefix else name
            issues.append(Issue("non-contiguous-indices",
                                f"instances of {where!r} must be numbered 1..n, "
                                f"got {sorted(indices)}", where))
    issues.extend(_missing_required(doc, schema))
    return issues


def _missing_required(doc: EntityDocument, schema: EntityTypeSchema) -> list[Issue]:
    """Required leaves are checked per existing instance of their nearest
    multiple ancestor, or once at top level when every ancestor is singular."""
    issues: list[Issue] = []
    instance_prefixes: dict[str, set[str]] = {}
    for path in doc.values:
        segs = parse_field_path(path)
        free, inst = [], []
        for name, idx in segs[:-1]:
            free.append(name)
            inst.append(name if idx is None else f"{name}[{idx}]")
            instance_prefixes.setdefault("/".join(free), set()).add("/".join(inst))

    def present(candidate: str) -> bool:
        return any(p == candidate or p.startswith(candidate + "[") for p in doc.values)

    def walk(group: GroupDef, free_prefix: list[str],
             anchor_free: str | None, suffix: list[str]):
        # anchor_free: free path of the nearest multiple ancestor, if any;
        # suffix: singular segment names between the anchor and here.
        for child in group.children:
            free = free_prefix + [child.name]
            if isinstance(child, FieldDef):
                if not child.required:
                    continue
                free_path = "/".join(free)
                tail = "/".join(suffix + [child.name])
                if anchor_free is None:
                    if not present(tail):
                        issues.append(Issue("missing-required",
                                            f"required field {free_path!r} is empty",
                                            free_path, severity="warning"))
                else:
                    for inst in sorted(instance_prefixes.get(anchor_free, ())):
                        candidate = f"{inst}/{tail}"
                        if not present(candidate):
                            issues.append(Issue("missing-required",
                                                f"required field {free_path!r} missing in "
                                                f"instance {inst!r}", candidate,
                                                severity="warning"))
            elif child.multiple:
                walk(child, free, "/".join(free), [])
            else:
                walk(child, free, anchor_free, suffix + [child.name])

    walk(schema.root, [], None, [])
    return issues
