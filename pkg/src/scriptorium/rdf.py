"""RDF triple model with canonical N-Triples and Turtle input/output.

Graphs are plain sets of Triple values. Serialization is canonical: the
same graph always produces byte-identical output, so exports can be
diffed and hashed. The Turtle reader covers the subset this package
emits (prefixed names, IRIs, typed/language literals) plus bare numeric
and boolean shorthand; blank nodes are intentionally unsupported because
every generated node carries a policy-derived IRI.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS_NS = "http://www.w3.org/2000/01/rdf-schema#"
XSD_NS = "http://www.w3.org/2001/XMLSchema#"
SKOS_NS = "http://www.w3.org/2004/02/skos/core#"
CRM_NS = "http://www.cidoc-crm.org/cidoc-crm/"

RDF_TYPE = RDF_NS + "type"
RDFS_LABEL = RDFS_NS + "label"

STANDARD_PREFIXES = {
    "rdf": RDF_NS,
    "rdfs": RDFS_NS,
    "xsd": XSD_NS,
    "skos": SKOS_NS,
}


class RdfSyntaxError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Literal:
    lexical: str
    datatype: str | None = None  # full IRI; None means plain string
    lang: str | None = None


@dataclass(frozen=True)
class Triple:
    subject: str
    predicate: str
    obj: "str | Literal"


Graph = set  # set[Triple]


def _escape_literal(s: str) -> str:
    out = []
    for ch in s:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\r":
            out.append("\\r")
        elif ch == "\t":
            out.append("\\t")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04X}")
        else:
            out.append(ch)
    return "".join(out)


_UNESCAPE_RE = re.compile(r"\\(u[0-9A-Fa-f]{4}|U[0-9A-Fa-f]{8}|.)")


def _unescape_literal(s: str, line: int | None = None) -> str:
    def sub(m: re.Match[str]) -> str:
        esc = m.group(1)
        if esc.startswith("u") or esc.startswith("U"):
            return chr(int(esc[1:], 16))
        simple = {"\\": "\\", '"': '"', "n": "\n", "r": "\r", "t": "\t", "'": "'",
                  "b": "\b", "f": "\f"}
        if esc in simple:
            return simple[esc]
        raise RdfSyntaxError(f"bad escape \\{esc}", line)

    return _UNESCAPE_RE.sub(sub, s)


def _render_object_nt(obj: str | Literal) -> str:
    if isinstance(obj, Literal):
        body = f'"{_escape_literal(obj.lexical)}"'
        if obj.lang:
            return f"{body}@{obj.lang}"
        if obj.datatype:
            return f"{body}^^<{obj.datatype}>"
        return body
    return f"<{obj}>"


def triple_to_ntriples(t: Triple) -> str:
    return f"<{t.subject}> <{t.predicate}> {_render_object_nt(t.obj)} ."


def serialize_ntriples(graph: set[Triple]) -> str:
    """Canonical N-Triples: one line per triple, lexicographically sorted."""
    lines = sorted(triple_to_ntriples(t) for t in graph)
    return "".join(line + "\n" for line in lines)


_NT_LINE = re.compile(
    r"^<([^>]*)>\s+<([^>]*)>\s+"
    r"(?:<([^>]*)>|\"((?:[^\"\\]|\\.)*)\"(?:@([A-Za-z0-9-]+)|\^\^<([^>]*)>)?)"
    r"\s*\.\s*$"
)


def parse_ntriples(text: str) -> set[Triple]:
    graph: set[Triple] = set()
    # split on \n only: unicode line separators may occur inside literals
    for lineno, raw in enumerate(text.replace("\r\n", "\n").split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _NT_LINE.match(line)
        if not m:
            raise RdfSyntaxError(f"not an N-Triples statement: {line!r}", lineno)
        subject, predicate, obj_iri, lex, lang, dtype = m.groups()
        if obj_iri is not None:
            obj: str | Literal = obj_iri
        else:
            obj = Literal(_unescape_literal(lex, lineno), datatype=dtype, lang=lang)
        graph.add(Triple(subject, predicate, obj))
    return graph


_PN_LOCAL = re.compile(r"^[A-Za-z_][A-Za-z0-9_-]*$")


def _compact(iri: str, prefixes: dict[str, str]) -> str:
    for name, ns in prefixes.items():
        if iri.startswith(ns):
            local = iri[len(ns):]
            if _PN_LOCAL.match(local):
                return f"{name}:{local}"
    return f"<{iri}>"


def _render_object_turtle(obj: str | Literal, prefixes: dict[str, str]) -> str:
    if isinstance(obj, Literal):
        body = f'"{_escape_literal(obj.lexical)}"'
        if obj.lang:
            return f"{body}@{obj.lang}"
        if obj.datatype:
            return f"{body}^^{_compact(obj.datatype, prefixes)}"
        return body
    return _compact(obj, prefixes)


def serialize_turtle(graph: set[Triple], prefixes: dict[str, str] | None = None) -> str:
    """Canonical Turtle grouped by subject; rdf:type rendered as `a`."""
    prefixes = dict(STANDARD_PREFIXES) | (prefixes or {})
    out = [f"@prefix {name}: <{prefixes[name]}> ." for name in sorted(prefixes)]
    by_subject: dict[str, list[Triple]] = {}
    for t in graph:
        by_subject.setdefault(t.subject, []).append(t)
    for subject in sorted(by_subject):
        out.append("")
        triples = by_subject[subject]
        by_pred: dict[str, list[str | Literal]] = {}
        for t in triples:
            by_pred.setdefault(t.predicate, []).append(t.obj)
        preds = sorted(by_pred, key=lambda p: (p != RDF_TYPE, _compact(p, prefixes)))
        lines = []
        for pred in preds:
            rendered = sorted(
                _render_object_turtle(o, prefixes) for o in by_pred[pred])
            pname = "a" if pred == RDF_TYPE else _compact(pred, prefixes)
            lines.append(f"    {pname} {', '.join(rendered)}")
        out.append(f"{_compact(subject, prefixes)}\n" + " ;\n".join(lines) + " .")
    return "\n".join(out) + "\n"


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<iri><[^>]*>)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<prefix_decl>@prefix)
  | (?P<langtag>@[A-Za-z][A-Za-z0-9-]*)
  | (?P<dtype>\^\^)
  | (?P<pname>[A-Za-z_][A-Za-z0-9_.-]*?:[A-Za-z0-9_][A-Za-z0-9_.-]*|[A-Za-z_][A-Za-z0-9_.-]*?:)
  | (?P<kw_a>\ba\b)
  | (?P<boolean>\btrue\b|\bfalse\b)
  | (?P<number>[+-]?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<punct>[;,.])
    """,
    re.VERBOSE,
)


class _TurtleParser:
    def __init__(self, text: str):
        self.tokens: list[tuple[str, str, int]] = []
        line = 1
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if not m:
                raise RdfSyntaxError(f"unexpected character {text[pos]!r}", line)
            kind = m.lastgroup or ""
            value = m.group()
            line += value.count("\n")
            if kind != "ws":
                self.tokens.append((kind, value, line))
            pos = m.end()
        self.i = 0
        self.prefixes: dict[str, str] = {}

    def peek(self) -> tuple[str, str, int] | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self, expected: str | None = None) -> tuple[str, str, int]:
        tok = self.peek()
        if tok is None:
            raise RdfSyntaxError("unexpected end of input")
        if expected and tok[0] != expected and tok[1] != expected:
            raise RdfSyntaxError(f"expected {expected}, got {tok[1]!r}", tok[2])
        self.i += 1
        return tok

    def resolve(self, kind: str, value: str, line: int) -> str:
        if kind == "iri":
            return value[1:-1]
        if kind == "pname" or kind == "kw_a":
            if kind == "kw_a":
                return RDF_TYPE
            name, _, local = value.partition(":")
            if name not in self.prefixes:
                raise RdfSyntaxError(f"undeclared prefix {name!r}", line)
            return self.prefixes[name] + local
        raise RdfSyntaxError(f"expected an IRI, got {value!r}", line)

    def parse_object(self) -> str | Literal:
        kind, value, line = self.next()
        if kind == "string":
            lex = _unescape_literal(value[1:-1], line)
            nxt = self.peek()
            if nxt and nxt[0] == "langtag":
                self.next()
                return Literal(lex, lang=nxt[1][1:])
            if nxt and nxt[0] == "dtype":
                self.next()
                k, v, ln = self.next()
                return Literal(lex, datatype=self.resolve(k, v, ln))
            return Literal(lex)
        if kind == "boolean":
            return Literal(value, datatype=XSD_NS + "boolean")
        if kind == "number":
            dtype = XSD_NS + ("decimal" if "." in value else "integer")
            if "e" in value.lower():
                dtype = XSD_NS + "double"
            return Literal(value, datatype=dtype)
        return self.resolve(kind, value, line)

    def parse(self) -> set[Triple]:
        graph: set[Triple] = set()
        while self.peek() is not None:
            kind, value, line = self.peek()  # type: ignore[misc]
            if kind == "prefix_decl":
                self.next()
                _, pname, pline = self.next("pname")
                if not pname.endswith(":"):
                    raise RdfSyntaxError("bad prefix declaration", pline)
                k, v, ln = self.next()
                if k != "iri":
                    raise RdfSyntaxError("prefix IRI expected", ln)
                self.prefixes[pname[:-1]] = v[1:-1]
                self.next(".")
                continue
            k, v, ln = self.next()
            subject = self.resolve(k, v, ln)
            while True:
                k, v, ln = self.next()
                predicate = self.resolve(k, v, ln)
                while True:
                    graph.add(Triple(subject, predicate, self.parse_object()))
                    punct = self.next()
                    if punct[1] == ",":
                        continue
                    break
                if punct[1] == ";":
                    nxt = self.peek()
                    if nxt and nxt[1] == ".":  # tolerate trailing ;
                        self.next()
                        break
                    continue
                if punct[1] == ".":
                    break
                raise RdfSyntaxError(f"expected ; , or . got {punct[1]!r}", punct[2])
        return graph


def parse_turtle(text: str) -> set[Triple]:
    return _TurtleParser(text).parse()
