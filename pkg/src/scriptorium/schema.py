"""Entity-type schemas: trees of groups whose leaves are documentation fields.

A schema is parsed from an XML definition file, addressed through slash
paths like ``Measurement[1]/Dimension[2]/DimensionValue``, and evolves
only additively so that documents written under an older revision stay
valid forever.
"""
from __future__ import annotations

import copy
import re
import threading
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

FIELD_KINDS = (
    "entity-link",
    "vocab-term",
    "thesaurus-term",
    "text-plain",
    "text-formatted",
    "number",
    "time-expression",
    "geo-coordinates",
    "geo-external-id",
    "digital-file",
)

NAME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")
DEFAULT_LANG = "en"


class SchemaError(ValueError):
    """Schema definition problem; carries the source position when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class PathError(ValueError):
    """Field-path resolution failure with a machine-readable code."""

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(message)


@dataclass
class Issue:
    code: str
    message: str
    path: str | None = None
    severity: str = "error"


@dataclass
class FieldKind:
    kind: str
    targets: tuple[str, ...] = ()       # entity-link: permitted target types
    vocab_id: str | None = None         # vocab-term
    vocab_mode: str | None = None       # vocab-term: static | dynamic
    thesaurus_id: str | None = None     # thesaurus-term
    media: tuple[str, ...] = ()         # digital-file: accepted media kinds


@dataclass
class FieldDef:
    name: str
    kind: FieldKind
    labels: dict[str, str] = field(default_factory=dict)
    multiple: bool = False
    required: bool = False

    def label(self, lang: str = DEFAULT_LANG) -> str:
        return self.labels.get(lang) or self.labels.get(DEFAULT_LANG) or self.name


@dataclass
class GroupDef:
    name: str
    multiple: bool = False
    children: list["GroupDef | FieldDef"] = field(default_factory=list)

    def child(self, name: str) -> "GroupDef | FieldDef | None":
        for c in self.children:
            if c.name == name:
                return c
        return None


@dataclass
class EntityTypeSchema:
    type_name: str
    schema_version: int
    root: GroupDef
    summary_columns: list[str] = field(default_factory=list)
    map_point_fields: list[str] = field(default_factory=list)


PathSeg = tuple[str, "int | None"]

_SEG_RE = re.compile(r"^([A-Za-z][A-Za-z0-9_]*)(?:\[(\d+)\])?$")


def parse_field_path(path: str) -> list[PathSeg]:
    segs: list[PathSeg] = []
    if not path:
        raise PathError("no-such-segment", "empty field path")
    for part in path.split("/"):
        m = _SEG_RE.match(part)
        if not m:
            raise PathError("no-such-segment", f"malformed path segment {part!r} in {path!r}")
        idx = int(m.group(2)) if m.group(2) else None
        if idx is not None and idx < 1:
            raise PathError("no-such-segment", f"indices are 1-based: {part!r}")
        segs.append((m.group(1), idx))
    return segs


def render_field_path(segs: list[PathSeg]) -> str:
    return "/".join(n if i is None else f"{n}[{i}]" for n, i in segs)


def strip_indices(path: str) -> str:
    return "/".join(seg.split("[")[0] for seg in path.split("/"))


def resolve_field_path(schema: EntityTypeSchema, path: "str | list[PathSeg]") -> "FieldDef | GroupDef":
    """Walk segment names from the root; reject indices on singular segments.

    Indices are otherwise ignored: definition lookup is instance-free.
    """
    segs = parse_field_path(path) if isinstance(path, str) else path
    node: GroupDef | FieldDef = schema.root
    for name, idx in segs:
        if isinstance(node, FieldDef):
            raise PathError("no-such-segment", f"{node.name!r} is a leaf field; cannot descend into {name!r}")
        nxt = node.child(name)
        if nxt is None:
            raise PathError("no-such-segment", f"no segment {name!r} under {node.name!r}")
        if idx is not None and not nxt.multiple:
            raise PathError("index-on-singular-segment",
                            f"segment {name!r} is not multiple; index [{idx}] not allowed")
        node = nxt
    return node


def iter_leaves(schema: EntityTypeSchema):
    """Yield (index-free path, FieldDef) pairs in schema (document) order."""

    def walk(node: GroupDef, prefix: list[str]):
        for child in node.children:
            if isinstance(child, FieldDef):
                yield "/".join(prefix + [child.name]), child
            else:
                yield from walk(child, prefix + [child.name])

    yield from walk(schema.root, [])


def _parse_bool(value: str | None, default: bool = False) -> bool:
    if value is None:
        return default
    return value.lower() in ("true", "1", "yes")


def _parse_field_element(el: ET.Element) -> FieldDef:
    name = el.get("name") or ""
    kind_name = el.get("kind") or ""
    if kind_name not in FIELD_KINDS:
        raise SchemaError(f"unknown field kind {kind_name!r} on field {name!r}")
    kind = FieldKind(kind_name)
    if kind_name == "entity-link":
        targets = tuple(t.strip() for t in (el.get("targets") or "").split(",") if t.strip())
        if not targets:
            raise SchemaError(f"entity-link field {name!r} needs a non-empty targets list")
        kind.targets = targets
    elif kind_name == "vocab-term":
        kind.vocab_id = el.get("vocab")
        kind.vocab_mode = el.get("mode") or "static"
        if not kind.vocab_id:
            raise SchemaError(f"vocab-term field {name!r} needs a vocab attribute")
        if kind.vocab_mode not in ("static", "dynamic"):
            raise SchemaError(f"bad vocabulary mode {kind.vocab_mode!r} on field {name!r}")
    elif kind_name == "thesaurus-term":
        kind.thesaurus_id = el.get("thesaurus")
        if not kind.thesaurus_id:
            raise SchemaError(f"thesaurus-term field {name!r} needs a thesaurus attribute")
    elif kind_name == "digital-file":
        kind.media = tuple(m.strip() for m in (el.get("media") or "").split(",") if m.strip())
    labels: dict[str, str] = {}
    if el.get("label"):
        labels[DEFAULT_LANG] = el.get("label")  # type: ignore[assignment]
    for lab in el.findall("label"):
        labels[lab.get("lang") or DEFAULT_LANG] = lab.text or ""
    return FieldDef(
        name=name,
        kind=kind,
        labels=labels,
        multiple=_parse_bool(el.get("multiple")),
        required=_parse_bool(el.get("required")),
    )


def _check_name(name: str, context: str) -> None:
    if not NAME_RE.match(name):
        raise SchemaError(f"bad {context} name {name!r}: must match [A-Za-z][A-Za-z0-9_]*")


def _parse_children(parent_el: ET.Element, parent_name: str) -> list[GroupDef | FieldDef]:
    children: list[GroupDef | FieldDef] = []
    seen: set[str] = set()
    for el in parent_el:
        if el.tag == "field":
            node: GroupDef | FieldDef = _parse_field_element(el)
        elif el.tag == "group":
            node = GroupDef(
                name=el.get("name") or "",
                multiple=_parse_bool(el.get("multiple")),
                children=_parse_children(el, el.get("name") or ""),
            )
            if not _has_leaf(node):
                raise SchemaError(f"group {node.name!r} has no descendant field")
        elif el.tag in ("summary", "map", "label"):
            continue
        else:
            raise SchemaError(f"unexpected element <{el.tag}> under {parent_name!r}")
        _check_name(node.name, el.tag)
        if node.name in seen:
            raise SchemaError(f"duplicate sibling name {node.name!r} under {parent_name!r}")
        seen.add(node.name)
        children.append(node)
    return children


def _has_leaf(group: GroupDef) -> bool:
    return any(isinstance(c, FieldDef) or _has_leaf(c) for c in group.children)


def parse_schema(xml_text: str) -> EntityTypeSchema:
    """Parse a schema definition file. Raises SchemaError on any violation."""
    try:
        root_el = ET.fromstring(xml_text)
    except ET.ParseError as e:
        line, column = e.position
        raise SchemaError(f"XML syntax error: {e.msg}", line, column) from e
    if root_el.tag != "schema":
        raise SchemaError(f"expected root element <schema>, got <{root_el.tag}>")
    type_name = root_el.get("type") or ""
    _check_name(type_name, "entity type")
    try:
        version = int(root_el.get("version") or "1")
    except ValueError:
        raise SchemaError(f"bad schema version {root_el.get('version')!r}")
    if version < 1:
        raise SchemaError("schema version must be a positive integer")
    root = GroupDef(name=type_name, children=_parse_children(root_el, type_name))
    if not _has_leaf(root):
        raise SchemaError("schema has no documentation fields")
    summary = [col.get("path") or "" for summ in root_el.findall("summary")
               for col in summ.findall("col")]
    map_fields = [col.get("path") or "" for mp in root_el.findall("map")
                  for col in mp.findall("col")]
    return EntityTypeSchema(type_name, version, root, summary, map_fields)


def _xml_escape(s: str, attr: bool = False) -> str:
    s = s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    if attr:
        s = (s.replace('"', "&quot;").replace("\n", "&#10;")
             .replace("\t", "&#9;").replace("\r", "&#13;"))
    return s


def _serialize_node(node: GroupDef | FieldDef, indent: int, out: list[str]) -> None:
    pad = "  " * indent
    if isinstance(node, GroupDef):
        out.append(f'{pad}<group name="{node.name}" multiple="{str(node.multiple).lower()}">')
        for child in node.children:
            _serialize_node(child, indent + 1, out)
        out.append(f"{pad}</group>")
        return
    attrs = [f'name="{node.name}"', f'kind="{node.kind.kind}"',
             f'multiple="{str(node.multiple).lower()}"',
             f'required="{str(node.required).lower()}"']
    k = node.kind
    if k.kind == "entity-link":
        attrs.append(f'targets="{",".join(k.targets)}"')
    elif k.kind == "vocab-term":
        attrs.append(f'vocab="{k.vocab_id}"')
        attrs.append(f'mode="{k.vocab_mode}"')
    elif k.kind == "thesaurus-term":
        attrs.append(f'thesaurus="{k.thesaurus_id}"')
    elif k.kind == "digital-file" and k.media:
        attrs.append(f'media="{",".join(k.media)}"')
    default_label = node.labels.get(DEFAULT_LANG)
    if default_label:
        attrs.append(f'label="{_xml_escape(default_label, attr=True)}"')
    extra = {lang: text for lang, text in node.labels.items() if lang != DEFAULT_LANG}
    if not extra:
        out.append(f"{pad}<field {' '.join(attrs)}/>")
    else:
        out.append(f"{pad}<field {' '.join(attrs)}>")
        for lang in sorted(extra):
            out.append(f'{pad}  <label lang="{lang}">{_xml_escape(extra[lang])}</label>')
        out.append(f"{pad}</field>")


def serialize_schema(schema: EntityTypeSchema) -> str:
    """Inverse of parse_schema: parse(serialize(s)) is structurally equal to s."""
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<schema type="{schema.type_name}" version="{schema.schema_version}">']
    for child in schema.root.children:
        _serialize_node(child, 1, out)
    if schema.summary_columns:
        out.append("  <summary>")
        for path in schema.summary_columns:
            out.append(f'    <col path="{path}"/>')
        out.append("  </summary>")
    if schema.map_point_fields:
        out.append("  <map>")
        for path in schema.map_point_fields:
            out.append(f'    <col path="{path}"/>')
        out.append("  </map>")
    out.append("</schema>")
    return "\n".join(out) + "\n"


@dataclass
class Registry:
    """What validate_schema resolves names against."""
    entity_types: set[str] = field(default_factory=set)
    vocabularies: dict[str, str] = field(default_factory=dict)  # id -> mode
    thesauri: set[str] = field(default_factory=set)


def validate_schema(schema: EntityTypeSchema, registry: Registry) -> list[Issue]:
    """Referential checks that need the installation catalog; returns issues."""
    issues: list[Issue] = []
    for path, leaf in iter_leaves(schema):
        k = leaf.kind
        if k.kind == "entity-link":
            for target in k.targets:
                if target not in registry.entity_types:
                    issues.append(Issue("unresolved-target-type",
                                        f"link target {target!r} is not a registered entity type",
                                        path))
        elif k.kind == "vocab-term":
            if k.vocab_id not in registry.vocabularies:
                issues.append(Issue("unresolved-vocabulary",
                                    f"vocabulary {k.vocab_id!r} is not registered", path))
            elif registry.vocabularies[k.vocab_id] != k.vocab_mode:
                issues.append(Issue("vocabulary-mode-mismatch",
                                    f"vocabulary {k.vocab_id!r} is "
                                    f"{registry.vocabularies[k.vocab_id]}, schema says {k.vocab_mode}",
                                    path))
        elif k.kind == "thesaurus-term":
            if k.thesaurus_id not in registry.thesauri:
                issues.append(Issue("unresolved-thesaurus",
                                    f"thesaurus {k.thesaurus_id!r} is not registered", path))
    for col in schema.summary_columns:
        try:
            target = resolve_field_path(schema, col)
        except PathError:
            target = None
        if not isinstance(target, FieldDef):
            issues.append(Issue("dangling-summary-column",
                                f"summary column {col!r} does not resolve to a field", col))
    for col in schema.map_point_fields:
        try:
            target = resolve_field_path(schema, col)
        except PathError:
            target = None
        if not isinstance(target, FieldDef):
            issues.append(Issue("dangling-map-field",
                                f"map field {col!r} does not resolve to a field", col))
    return issues


def extend_schema(schema: EntityTypeSchema,
                  additions: list[tuple[str, GroupDef | FieldDef]]) -> EntityTypeSchema:
    """Additively evolve a schema; returns a new value with version + 1.

    Only insertion of new groups/fields under existing groups is possible;
    removals and retyping are refused by construction, so every document
    valid under the old schema stays valid under the result.
    """
    new = copy.deepcopy(schema)
    for parent_path, node in additions:
        if parent_path in ("", None):
            parent: GroupDef | FieldDef = new.root
        else:
            try:
                parent = resolve_field_path(new, parent_path)
            except PathError as e:
                raise SchemaError(f"parent not found: {e}") from e
        if not isinstance(parent, GroupDef):
            raise SchemaError(f"parent {parent_path!r} is a field, not a group")
        _check_name(node.name, "added node")
        if parent.child(node.name) is not None:
            raise SchemaError(f"name collision: {node.name!r} already exists under {parent_path!r}")
        node = copy.deepcopy(node)
        if isinstance(node, GroupDef) and not _has_leaf(node):
            raise SchemaError(f"added group {node.name!r} has no descendant field")
        parent.children.append(node)
    new.schema_version = schema.schema_version + 1
    return new


class SchemaRegistry:
    """Versioned catalog of entity-type schemas.

    Reads are lock-free on immutable snapshots; publishing a new revision
    swaps the mapping under a lock (replace-on-publish).
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._schemas: dict[str, dict[int, EntityTypeSchema]] = {}

    def publish(self, schema: EntityTypeSchema) -> None:
        with self._lock:
            revisions = self._schemas.setdefault(schema.type_name, {})
            if revisions and schema.schema_version <= max(revisions):
                raise SchemaError(
                    f"schema version must increase: {schema.type_name} has "
                    f"{max(revisions)}, got {schema.schema_version}")
            revisions[schema.schema_version] = schema

    def latest(self, type_name: str) -> EntityTypeSchema:
        revisions = self._schemas.get(type_name)
        if not revisions:
            raise KeyError(f"unknown entity type {type_name!r}")
        return revisions[max(revisions)]

    def get(self, type_name: str, version: int) -> EntityTypeSchema:
        revisions = self._schemas.get(type_name)
        if not revisions or version not in revisions:
            raise KeyError(f"no schema {type_name!r} version {version}")
        return revisions[version]

    def has_type(self, type_name: str) -> bool:
        return type_name in self._schemas

    def type_names(self) -> list[str]:
        return sorted(self._schemas)


def count_entity_link_fields(schemas: "list[EntityTypeSchema]") -> int:
    """Census of leaves that link to other entities across a schema set."""
    return sum(1 for schema in schemas
               for _, leaf in iter_leaves(schema) if leaf.kind.kind == "entity-link")
