"""Declarative mapping of entity documents onto an ontology graph.

A mapping file binds one entity type to a target class and describes,
per source field path, a chain of intermediate nodes ending in a value.
Resource identifiers come from separate URI policies, so the mapping
logic never invents identifiers: the same document always yields the
identical graph, and regenerating after a mapping change needs no
document edits.

When an entity type has no mapping file, the ontology-agnostic fallback
(`naive_export`) still produces linkable RDF: both paths derive the
entity IRI from the same hash policy.
"""
from __future__ import annotations

import hashlib
import re
import urllib.parse
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from . import rdf
from .documents import EntityDocument
from .schema import (EntityTypeSchema, FieldDef, Issue, PathError,
                     resolve_field_path, strip_indices)
from .values import (Coordinates, EntityLink, ExternalPlace, FieldValue,
                     FileRef, FormattedText, NumberVal, PlainText, TermRef,
                     ThesaurusRef, TimeVal, render_text)


class MappingError(ValueError):
    pass


class UriPolicyError(MappingError):
    """A URI policy input is missing (e.g. slug of an empty field)."""


# terminal kind -> source field kinds it may consume
TERMINAL_COMPAT = {
    "entity-ref": ("entity-link",),
    "term-ref": ("vocab-term", "thesaurus-term"),
    "literal": ("text-plain", "text-formatted", "number", "geo-external-id",
                "digital-file"),
    "timespan": ("time-expression",),
    "coordinates": ("geo-coordinates", "geo-external-id"),
}

TIMESPAN_CLASS = "crm:E52_Time-Span"
TIMESPAN_BEGIN = "crm:P82a_begin_of_the_begin"
TIMESPAN_END = "crm:P82b_end_of_the_end"
TYPE_CLASS = "crm:E55_Type"

_HASH_COMPONENTS = ("type", "id", "path", "class")


@dataclass
class UriPolicy:
    kind: str                       # hash | slug | fixed
    components: tuple[str, ...] = ()  # hash: ordered input names
    field_path: str = ""            # slug: source of the label
    prefix: str = ""                # slug: IRI path segment
    iri: str = ""                   # fixed


_POLICY_RE = re.compile(r"^(hash|slug|fixed)\(([^()]*)\)$")


def parse_uri_policy(text: str) -> UriPolicy:
    m = _POLICY_RE.match(text.strip())
    if not m:
        raise MappingError(f"malformed uri policy {text!r}")
    kind, body = m.group(1), m.group(2)
    parts = [p.strip() for p in body.split(",")] if body.strip() else []
    if kind == "hash":
        if not parts:
            raise MappingError("hash() needs at least one component")
        for p in parts:
            if p not in _HASH_COMPONENTS:
                raise MappingError(f"unknown hash component {p!r}; "
                                   f"allowed: {', '.join(_HASH_COMPONENTS)}")
        return UriPolicy("hash", components=tuple(parts))
    if kind == "slug":
        if len(parts) != 2:
            raise MappingError("slug() needs (fieldPath, prefix)")
        return UriPolicy("slug", field_path=parts[0], prefix=parts[1])
    if len(parts) != 1:
        raise MappingError("fixed() needs exactly the IRI")
    return UriPolicy("fixed", iri=parts[0])


DOMAIN_POLICY = UriPolicy("hash", components=("type", "id"))


def slugify(label: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", label.lower()).strip("-")
    if not slug:
        raise UriPolicyError(f"label {label!r} slugs to nothing")
    return slug


def generate_uri(policy: UriPolicy, inputs: dict[str, str], base_iri: str) -> str:
    """Deterministic IRI generation; stable across runs and machines."""
    if policy.kind == "fixed":
        return policy.iri
    if policy.kind == "slug":
        label = inputs.get("label")
        if not label:
            raise UriPolicyError(f"slug policy needs the field {policy.field_path!r} filled")
        return f"{base_iri}/{policy.prefix}/{slugify(label)}"
    try:
        canonical = "\x1f".join(inputs[c] for c in policy.components)
    except KeyError as e:
        raise UriPolicyError(f"missing uri policy input {e.args[0]!r}") from e
    digest = hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
    return f"{base_iri}/res/{digest}"


def entity_iri(base_iri: str, type_name: str, entity_id: str) -> str:
    """The shared domain policy: hash(type, id). Used by both the mapped
    and the naive export so their graphs link up."""
    return generate_uri(DOMAIN_POLICY, {"type": type_name, "id": entity_id}, base_iri)


def term_iri(base_iri: str, vocab_id: str, term_id: str) -> str:
    return f"{base_iri}/vocab/{vocab_id}/{term_id}"


@dataclass
class ChainStep:
    property: str                  # CURIE
    node_class: str                # CURIE
    uri_policy: UriPolicy
    anchor: str = ""               # relative index-free path under the link source


@dataclass
class Terminal:
    kind: str
    property: str
    source: str = ""               # relative leaf path; empty = the link source
    datatype: str = ""             # CURIE, literal terminals only


@dataclass
class LinkRule:
    source_path: str               # index-free; the rule fires per instance
    steps: list[ChainStep]
    terminal: Terminal


@dataclass
class MappingSpec:
    ontology_id: str
    prefixes: dict[str, str]
    source_type: str
    target_class: str
    domain_policy: UriPolicy
    links: list[LinkRule] = field(default_factory=list)

    def expand(self, curie: str) -> str:
        prefix, sep, local = curie.partition(":")
        if not sep or not prefix:
            raise MappingError(f"not a CURIE: {curie!r}")
        try:
            return self.prefixes[prefix] + local
        except KeyError:
            raise MappingError(f"undeclared prefix {prefix!r} in {curie!r}")

    def used_curies(self):
        yield "class", self.target_class
        for rule in self.links:
            for step in rule.steps:
                yield "property", step.property
                yield "class", step.node_class
            yield "property", rule.terminal.property


def parse_mapping(xml_text: str) -> MappingSpec:
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as e:
        raise MappingError(f"XML syntax error: {e.msg} at {e.position}") from e
    if root.tag != "mappings":
        raise MappingError(f"expected <mappings>, got <{root.tag}>")
    prefixes = dict(rdf.STANDARD_PREFIXES)
    for pel in root.findall("prefix"):
        prefixes[pel.get("name") or ""] = pel.get("iri") or ""
    mappings = root.findall("mapping")
    if len(mappings) != 1:
        raise MappingError("exactly one <mapping> per file")
    mel = mappings[0]
    domains = mel.findall("domain")
    if len(domains) != 1:
        raise MappingError("exactly one <domain> per mapping")
    del_ = domains[0]
    spec = MappingSpec(
        ontology_id=root.get("ontology") or "",
        prefixes=prefixes,
        source_type=del_.get("source") or "",
        target_class=del_.get("class") or "",
        domain_policy=parse_uri_policy(del_.get("uri") or "hash(type,id)"),
    )
    for lel in mel.findall("link"):
        source = lel.get("source") or ""
        if not source:
            raise MappingError("link without source path")
        steps = []
        for sel in lel.findall("step"):
            steps.append(ChainStep(
                property=sel.get("property") or "",
                node_class=sel.get("class") or "",
                uri_policy=parse_uri_policy(sel.get("uri") or "hash(type,id,path,class)"),
                anchor=sel.get("anchor") or "",
            ))
        tels = lel.findall("terminal")
        if len(tels) != 1:
            raise MappingError(f"link {source!r} needs exactly one terminal")
        tel = tels[0]
        terminal = Terminal(
            kind=tel.get("kind") or "",
            property=tel.get("property") or "",
            source=tel.get("source") or "",
            datatype=tel.get("datatype") or "",
        )
        if terminal.kind not in TERMINAL_COMPAT:
            raise MappingError(f"unknown terminal kind {terminal.kind!r}")
        if not terminal.property:
            raise MappingError(f"terminal of link {source!r} needs a property")
        rule = LinkRule(source, steps, terminal)
        spec.links.append(rule)
        _check_curies_parse(spec, rule)
    # surface undeclared prefixes eagerly, including the domain class
    spec.expand(spec.target_class)
    return spec


def _check_curies_parse(spec: MappingSpec, rule: LinkRule) -> None:
    for step in rule.steps:
        spec.expand(step.property)
        spec.expand(step.node_class)
    spec.expand(rule.terminal.property)
    if rule.terminal.datatype:
        spec.expand(rule.terminal.datatype)


def load_ontology_terms(path) -> set[str]:
    """Ontology identifier snapshot: one class/property CURIE per line,
    `#` comments allowed. Duplicates collapse (set semantics)."""
    terms: set[str] = set()
    text = path.read_text(encoding="utf-8") if hasattr(path, "read_text") \
        else open(path, encoding="utf-8").read()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            terms.add(line)
    return terms


def _full_source(rule: LinkRule) -> str:
    if rule.terminal.source:
        return f"{rule.source_path}/{rule.terminal.source}"
    return rule.source_path


def validate_mapping(spec: MappingSpec, schema: EntityTypeSchema,
                     ontology_terms: set[str]) -> list[Issue]:
    issues: list[Issue] = []
    if spec.source_type != schema.type_name:
        issues.append(Issue("wrong-source-type",
                            f"mapping targets {spec.source_type!r}, schema is "
                            f"{schema.type_name!r}"))
    for role, curie in spec.used_curies():
        if curie not in ontology_terms:
            issues.append(Issue("unknown-ontology-term",
                                f"{role} {curie!r} not in the ontology snapshot"))
    for rule in spec.links:
        full = _full_source(rule)
        try:
            leaf = resolve_field_path(schema, full)
        except PathError as e:
            issues.append(Issue("unresolved-source-path", str(e), full))
            continue
        if not isinstance(leaf, FieldDef):
            issues.append(Issue("source-not-a-field",
                                f"{full!r} is a group; terminals read fields", full))
            continue
        allowed = TERMINAL_COMPAT[rule.terminal.kind]
        if leaf.kind.kind not in allowed:
            issues.append(Issue("terminal-kind-mismatch",
                                f"terminal {rule.terminal.kind!r} cannot consume "
                                f"field kind {leaf.kind.kind!r}", full))
        previous = ""
        for step in rule.steps:
            if not step.anchor:
                continue
            anchored = f"{rule.source_path}/{step.anchor}"
            try:
                node = resolve_field_path(schema, anchored)
            except PathError as e:
                issues.append(Issue("unresolved-anchor", str(e), anchored))
                continue
            if isinstance(node, FieldDef):
                issues.append(Issue("anchor-not-a-group",
                                    f"anchor {anchored!r} must name a group", anchored))
            if previous and not step.anchor.startswith(previous):
                issues.append(Issue("anchor-not-nested",
                                    f"anchor {step.anchor!r} does not extend {previous!r}",
                                    anchored))
            previous = step.anchor
    return issues


def _instances_of(doc: EntityDocument, free_path: str) -> list[str]:
    """Distinct indexed prefixes of stored values matching an index-free path."""
    depth = len(free_path.split("/"))
    seen: dict[str, None] = {}
    for path in doc.values:
        segs = path.split("/")
        if len(segs) < depth:
            continue
        prefix = "/".join(segs[:depth])
        if strip_indices(prefix) == free_path:
            seen.setdefault(prefix, None)
    return sorted(seen)


def _literal_for(value: FieldValue, datatype_iri: str | None) -> rdf.Literal:
    if isinstance(value, NumberVal):
        return rdf.Literal(str(value.value), datatype=datatype_iri or rdf.XSD_NS + "decimal")
    if isinstance(value, PlainText):
        return rdf.Literal(value.text, datatype=datatype_iri)
    if isinstance(value, FormattedText):
        return rdf.Literal(value.markup, datatype=datatype_iri)
    if isinstance(value, ExternalPlace):
        return rdf.Literal(f"{value.source}:{value.external_id}", datatype=datatype_iri)
    if isinstance(value, FileRef):
        return rdf.Literal(value.attachment_id, datatype=datatype_iri)
    return rdf.Literal(render_text(value), datatype=datatype_iri)


def transform_entity(doc: EntityDocument, spec: MappingSpec,
                     base_iri: str) -> set[rdf.Triple]:
    """Expand every link rule over the document's value instances.

    Chain nodes are materialized only along paths that end in an actual
    value, and their IRIs are pure functions of the bound instance path,
    so rules sharing a chain converge on the same nodes.
    """
    graph: set[rdf.Triple] = set()
    subject = generate_uri(spec.domain_policy,
                           {"type": doc.type_name, "id": doc.id}, base_iri)
    graph.add(rdf.Triple(subject, rdf.RDF_TYPE, spec.expand(spec.target_class)))
    for rule in spec.links:
        _fire_rule(graph, doc, spec, rule, subject, base_iri)
    return graph


def _fire_rule(graph, doc, spec, rule, subject, base_iri) -> None:
    full_free = _full_source(rule)
    for instance in _instances_of(doc, rule.source_path):
        _expand_chain(graph, doc, spec, rule, 0, subject, instance,
                      full_free, base_iri)


def _expand_chain(graph, doc, spec, rule, step_index, current_node,
                  binding, full_free, base_iri) -> None:
    if step_index == len(rule.steps):
        _emit_terminal(graph, doc, spec, rule, current_node, binding,
                       full_free, base_iri)
        return
    step = rule.steps[step_index]
    if step.anchor:
        bindings = [b for b in _instances_of(doc, f"{rule.source_path}/{step.anchor}")
                    if b.startswith(binding + "/")]
    else:
        bindings = [binding]
    for bound in bindings:
        inputs = {"type": doc.type_name, "id": doc.id, "path": bound,
                  "class": step.node_class}
        if step.uri_policy.kind == "slug":
            inputs["label"] = _slug_label(doc, rule, bound, step.uri_policy)
        node = generate_uri(step.uri_policy, inputs, base_iri)
        # look ahead: only emit the step if the deeper expansion produces output
        sub: set[rdf.Triple] = set()
        _expand_chain(sub, doc, spec, rule, step_index + 1, node, bound,
                      full_free, base_iri)
        if sub:
            graph.update(sub)
            graph.add(rdf.Triple(current_node, spec.expand(step.property), node))
            graph.add(rdf.Triple(node, rdf.RDF_TYPE, spec.expand(step.node_class)))


def _slug_label(doc, rule, binding, policy) -> str:
    candidates = [p for p in doc.values
                  if strip_indices(p) == f"{rule.source_path}/{policy.field_path}"
                  and p.startswith(binding + "/")]
    if not candidates:
        raise UriPolicyError(f"slug policy field {policy.field_path!r} is empty "
                             f"under {binding!r}")
    return render_text(doc.values[sorted(candidates)[0]])


def _emit_terminal(graph, doc, spec, rule, last_node, binding, full_free,
                   base_iri) -> None:
    terminal = rule.terminal
    if terminal.source:
        paths = [p for p in _value_paths(doc, full_free)
                 if p.startswith(binding + "/")]
    else:
        paths = [binding] if binding in doc.values else []
    prop = spec.expand(terminal.property)
    for path in sorted(paths):
        value = doc.values[path]
        if terminal.kind == "literal":
            datatype = spec.expand(terminal.datatype) if terminal.datatype else None
            if datatype == rdf.XSD_NS + "string":
                datatype = None
            graph.add(rdf.Triple(last_node, prop, _literal_for(value, datatype)))
        elif terminal.kind == "entity-ref":
            if isinstance(value, EntityLink):
                graph.add(rdf.Triple(last_node, prop,
                                     entity_iri(base_iri, value.target_type,
                                                value.target_id)))
        elif terminal.kind == "term-ref":
            if isinstance(value, TermRef):
                iri = term_iri(base_iri, value.vocab_id, value.term_id)
                graph.add(rdf.Triple(last_node, prop, iri))
                graph.add(rdf.Triple(iri, rdf.RDF_TYPE, spec.expand(TYPE_CLASS)))
                if value.label:
                    graph.add(rdf.Triple(iri, rdf.RDFS_LABEL,
                                         rdf.Literal(value.label)))
            elif isinstance(value, ThesaurusRef):
                iri = (f"{base_iri}/thesaurus/{value.thesaurus_id}/"
                       f"{value.concept_id}")
                graph.add(rdf.Triple(last_node, prop, iri))
        elif terminal.kind == "timespan":
            if isinstance(value, TimeVal):
                node = generate_uri(
                    UriPolicy("hash", components=("type", "id", "path", "class")),
                    {"type": doc.type_name, "id": doc.id, "path": path,
                     "class": TIMESPAN_CLASS}, base_iri)
                graph.add(rdf.Triple(last_node, prop, node))
                graph.add(rdf.Triple(node, rdf.RDF_TYPE, spec.expand(TIMESPAN_CLASS)))
                graph.add(rdf.Triple(node, spec.expand(TIMESPAN_BEGIN),
                                     rdf.Literal(str(value.span.earliest),
                                                 datatype=rdf.XSD_NS + "integer")))
                graph.add(rdf.Triple(node, spec.expand(TIMESPAN_END),
                                     rdf.Literal(str(value.span.latest),
                                                 datatype=rdf.XSD_NS + "integer")))
        elif terminal.kind == "coordinates":
            if isinstance(value, Coordinates):
                graph.add(rdf.Triple(last_node, prop,
                                     rdf.Literal(render_text(value))))
            elif isinstance(value, ExternalPlace):
                graph.add(rdf.Triple(last_node, prop,
                                     rdf.Literal(f"{value.lat},{value.lon}")))


def _value_paths(doc: EntityDocument, free_path: str) -> list[str]:
    return sorted(p for p in doc.values if strip_indices(p) == free_path)


def naive_export(doc: EntityDocument, base_iri: str) -> set[rdf.Triple]:
    """Ontology-agnostic fallback: one triple per filled leaf plus the type
    triple; linked entities become IRIs, everything else literals."""
    graph: set[rdf.Triple] = set()
    subject = entity_iri(base_iri, doc.type_name, doc.id)
    graph.add(rdf.Triple(subject, rdf.RDF_TYPE,
                         f"{base_iri}/naive/type/{doc.type_name}"))
    for path, value in doc.values.items():
        predicate = f"{base_iri}/naive/" + urllib.parse.quote(strip_indices(path),
                                                              safe="")
        if isinstance(value, EntityLink):
            obj: str | rdf.Literal = entity_iri(base_iri, value.target_type,
                                                value.target_id)
        elif isinstance(value, NumberVal):
            obj = rdf.Literal(str(value.value), datatype=rdf.XSD_NS + "decimal")
        else:
            obj = rdf.Literal(render_text(value))
        graph.add(rdf.Triple(subject, predicate, obj))
    return graph
