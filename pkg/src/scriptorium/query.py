"""Table filtering, keyword search, advanced field-predicate search with
saved queries, and the backlink (association) index.

All indexes are derived state: they are maintained incrementally on every
store write and can always be rebuilt from the documents themselves, and
the incremental result must equal the rebuilt one at all times.
"""
from __future__ import annotations

import re
import threading
import xml.etree.ElementTree as ET
from bisect import bisect_left
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from . import chrono
from .access import User
from .documents import EntityDocument
from .schema import FieldDef, PathError, resolve_field_path, strip_indices
from .values import EntityLink, TermRef, ThesaurusRef, TimeVal, render_text

PREDICATE_OPS = ("equals", "contains", "term_is", "links_to", "date_within",
                 "date_overlaps", "status_is", "type_is")


class QueryError(ValueError):
    pass


@dataclass
class Predicate:
    op: str
    path: str | None = None
    text: str | None = None
    term_id: str | None = None
    entity_id: str | None = None
    span: chrono.TimeSpan | None = None
    status: str | None = None
    type_name: str | None = None

    def to_json(self) -> dict:
        out: dict = {"op": self.op}
        if self.path is not None:
            out["path"] = self.path
        if self.text is not None:
            out["text"] = self.text
        if self.term_id is not None:
            out["term"] = self.term_id
        if self.entity_id is not None:
            out["entity"] = self.entity_id
        if self.span is not None:
            out["earliest"] = self.span.earliest
            out["latest"] = self.span.latest
        if self.status is not None:
            out["status"] = self.status
        if self.type_name is not None:
            out["type"] = self.type_name
        return out


def predicate_from_json(obj: dict, normalize=chrono.parse_to_span) -> Predicate:
    op = obj.get("op")
    if op not in PREDICATE_OPS:
        raise QueryError(f"unknown predicate op {op!r}")
    p = Predicate(op=op, path=obj.get("path"))
    if op in ("equals", "contains"):
        if obj.get("text") is None or not p.path:
            raise QueryError(f"{op} needs path and text")
        p.text = str(obj["text"])
    elif op == "term_is":
        if not p.path or not obj.get("term"):
            raise QueryError("term_is needs path and term")
        p.term_id = obj["term"]
    elif op == "links_to":
        if not obj.get("entity"):
            raise QueryError("links_to needs entity")
        p.entity_id = obj["entity"]
    elif op in ("date_within", "date_overlaps"):
        if not p.path:
            raise QueryError(f"{op} needs path")
        if "expr" in obj:
            p.span = normalize(obj["expr"])
        elif "earliest" in obj and "latest" in obj:
            p.span = chrono.TimeSpan(int(obj["earliest"]), int(obj["latest"]))
        else:
            raise QueryError(f"{op} needs expr or earliest/latest")
    elif op == "status_is":
        if not obj.get("status"):
            raise QueryError("status_is needs status")
        p.status = obj["status"]
    elif op == "type_is":
        if not obj.get("type"):
            raise QueryError("type_is needs type")
        p.type_name = obj["type"]
    return p


def validate_predicates(predicates: list[Predicate], schema) -> None:
    """Paths must resolve in the queried type's schema and date predicates
    must address time fields."""
    for p in predicates:
        if p.path is None:
            continue
        try:
            definition = resolve_field_path(schema, p.path)
        except PathError as e:
            raise QueryError(f"invalid path in {p.op}: {e}") from e
        if not isinstance(definition, FieldDef):
            raise QueryError(f"{p.op} path {p.path!r} is a group, not a field")
        kind = definition.kind.kind
        if p.op in ("date_within", "date_overlaps") and kind != "time-expression":
            raise QueryError(f"type mismatch: {p.op} on {kind!r} field {p.path!r}")
        if p.op == "term_is" and kind not in ("vocab-term", "thesaurus-term"):
            raise QueryError(f"type mismatch: term_is on {kind!r} field {p.path!r}")
        if p.op == "links_to" and kind != "entity-link":
            raise QueryError(f"type mismatch: links_to on {kind!r} field {p.path!r}")


def _values_at(doc: EntityDocument, free_path: str):
    for path, value in doc.values.items():
        if strip_indices(path) == free_path:
            yield value


def predicate_holds(p: Predicate, doc: EntityDocument) -> bool:
    if p.op == "status_is":
        return doc.status == p.status
    if p.op == "type_is":
        return doc.type_name == p.type_name
    if p.op == "equals":
        return any(render_text(v) == p.text for v in _values_at(doc, p.path))
    if p.op == "contains":
        needle = (p.text or "").casefold()
        return any(needle in render_text(v).casefold()
                   for v in _values_at(doc, p.path))
    if p.op == "term_is":
        for v in _values_at(doc, p.path):
            if isinstance(v, TermRef) and v.term_id == p.term_id:
                return True
            if isinstance(v, ThesaurusRef) and v.concept_id == p.term_id:
                return True
        return False
    if p.op == "links_to":
        values = (_values_at(doc, p.path) if p.path
                  else doc.values.values())
        return any(isinstance(v, EntityLink) and v.target_id == p.entity_id
                   for v in values)
    if p.op == "date_within":
        return any(isinstance(v, TimeVal) and chrono.within(v.span, p.span)
                   for v in _values_at(doc, p.path))
    if p.op == "date_overlaps":
        return any(isinstance(v, TimeVal) and chrono.overlaps(v.span, p.span)
                   for v in _values_at(doc, p.path))
    raise QueryError(f"unknown predicate op {p.op!r}")


@dataclass
class SavedQuery:
    query_id: str
    name: str
    owner_user_id: str
    org_id: str
    type_name: str
    predicates: list[dict]  # predicate JSON, conjunction
    shared_with_org: bool = False


@dataclass
class Row:
    entity_id: str
    status: str
    creator: str
    cells: dict[str, str]


_TOKEN_RE = re.compile(r"\w+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    return [t.casefold() for t in _TOKEN_RE.findall(text)]


class QueryService:
    def __init__(self, store, access=None, normalize=chrono.parse_to_span):
        self.store = store
        self.access = access
        self.normalize = normalize
        self._backlinks: dict[str, set[tuple[str, str]]] = {}
        self._tokens: dict[str, Counter] = {}          # entity -> token counts
        self._token_list: dict[str, list[str]] = {}    # entity -> sorted tokens
        self.saved: dict[str, SavedQuery] = {}
        self._seq = 0
        self._lock = threading.Lock()
        store.add_listener(self._on_change)
        for doc in store.all_documents():
            self._index(doc)

    # -- index maintenance ---------------------------------------------------

    def _on_change(self, old: EntityDocument | None, new: EntityDocument | None):
        with self._lock:
            if old is not None:
                self._deindex(old)
            if new is not None:
                self._index(new)

    def _deindex(self, doc: EntityDocument) -> None:
        for path, value in doc.values.items():
            if isinstance(value, EntityLink):
                refs = self._backlinks.get(value.target_id)
                if refs is not None:
                    refs.discard((doc.id, path))
                    if not refs:
                        del self._backlinks[value.target_id]
        self._tokens.pop(doc.id, None)
        self._token_list.pop(doc.id, None)

    def _index(self, doc: EntityDocument) -> None:
        tokens: Counter = Counter()
        for path, value in doc.values.items():
            if isinstance(value, EntityLink):
                self._backlinks.setdefault(value.target_id, set()).add((doc.id, path))
            tokens.update(tokenize(render_text(value)))
        self._tokens[doc.id] = tokens
        self._token_list[doc.id] = sorted(tokens)

    def rebuild_index(self) -> dict[str, set[tuple[str, str]]]:
        """Recompute everything from the documents; returns the backlink map."""
        with self._lock:
            self._backlinks = {}
            self._tokens = {}
            self._token_list = {}
            for doc in self.store.all_documents():
                self._index(doc)
            return {k: set(v) for k, v in self._backlinks.items()}

    def backlink_snapshot(self) -> dict[str, set[tuple[str, str]]]:
        return {k: set(v) for k, v in self._backlinks.items() if v}

    def backlinks(self, entity_id: str) -> set[tuple[str, str]]:
        return set(self._backlinks.get(entity_id, ()))

    # -- visibility ------------------------------------------------------------

    def _visible(self, doc: EntityDocument, viewer: User | None) -> bool:
        if self.access is None or viewer is None:
            return True
        return bool(self.access.authorize(viewer, "view", doc))

    # -- table filter ------------------------------------------------------------

    def filter_rows(self, type_name: str, text: str,
                    viewer: User | None = None) -> list[Row]:
        """Substring filter over exactly what the table shows: the summary
        columns plus id, status and creator."""
        schema = self.store.schemas.latest(type_name)
        needle = text.casefold()
        rows = []
        for doc in sorted(self.store.documents_of_type(type_name),
                          key=lambda d: d.id):
            if not self._visible(doc, viewer):
                continue
            cells = {}
            for col in schema.summary_columns:
                rendered = [render_text(v) for v in _values_at(doc, col)]
                cells[col] = "; ".join(rendered)
            haystack = [doc.id, doc.status, doc.creator_user_id, *cells.values()]
            if not needle or any(needle in h.casefold() for h in haystack):
                rows.append(Row(doc.id, doc.status, doc.creator_user_id, cells))
        return rows

    # -- keyword search ------------------------------------------------------------

    def keyword_search(self, text: str, types: list[str] | None = None,
                       viewer: User | None = None) -> list[tuple[str, int]]:
        """AND semantics over query tokens; a token matches as a prefix of
        any document token. Ranked by total matched occurrences, ties by id."""
        query_tokens = tokenize(text)
        if not query_tokens:
            return []
        results = []
        for doc in self.store.all_documents():
            if types and doc.type_name not in types:
                continue
            if not self._visible(doc, viewer):
                continue
            token_list = self._token_list.get(doc.id, [])
            counts = self._tokens.get(doc.id, {})
            score = 0
            matched_all = True
            for q in query_tokens:
                start = bisect_left(token_list, q)
                hit = 0
                for token in token_list[start:]:
                    if not token.startswith(q):
                        break
                    hit += counts[token]
                if hit == 0:
                    matched_all = False
                    break
                score += hit
            if matched_all:
                results.append((doc.id, score))
        results.sort(key=lambda r: (-r[1], r[0]))
        return results

    # -- advanced search ------------------------------------------------------------

    def advanced_search(self, type_name: str, predicates: list[Predicate],
                        viewer: User | None = None) -> list[str]:
        schema = self.store.schemas.latest(type_name)
        validate_predicates(predicates, schema)
        hits = []
        for doc in self.store.documents_of_type(type_name):
            if not self._visible(doc, viewer):
                continue
            if all(predicate_holds(p, doc) for p in predicates):
                hits.append(doc.id)
        return sorted(hits)

    # -- saved queries ------------------------------------------------------------

    def save_query(self, user: User, name: str, type_name: str,
                   predicates: list[dict], shared_with_org: bool = False) -> SavedQuery:
        for q in self.saved.values():
            if q.owner_user_id == user.user_id and q.name == name:
                raise QueryError(f"you already have a query named {name!r}")
        for obj in predicates:  # validate eagerly
            predicate_from_json(obj, self.normalize)
        with self._lock:
            self._seq += 1
            query = SavedQuery(f"q-{self._seq:06d}", name, user.user_id,
                               user.org_id or "", type_name, list(predicates),
                               shared_with_org)
            self.saved[query.query_id] = query
        return query

    def _query_visible(self, query: SavedQuery, user: User) -> bool:
        if user.role == "system-admin" or query.owner_user_id == user.user_id:
            return True
        return query.shared_with_org and query.org_id == user.org_id

    def list_queries(self, user: User) -> list[SavedQuery]:
        return sorted((q for q in self.saved.values() if self._query_visible(q, user)),
                      key=lambda q: q.query_id)

    def run_query(self, user: User, query_id: str) -> list[str]:
        query = self.saved.get(query_id)
        if query is None or not self._query_visible(query, user):
            raise QueryError(f"unknown query {query_id!r}")
        predicates = [predicate_from_json(obj, self.normalize)
                      for obj in query.predicates]
        return self.advanced_search(query.type_name, predicates, viewer=user)

    def delete_query(self, user: User, query_id: str) -> None:
        query = self.saved.get(query_id)
        if query is None:
            raise QueryError(f"unknown query {query_id!r}")
        if query.owner_user_id != user.user_id and user.role != "system-admin":
            raise QueryError("only the owner deletes a saved query")
        del self.saved[query_id]

    # -- persistence ------------------------------------------------------------

    def save_queries_file(self, path: Path) -> None:
        root = ET.Element("queries", nextSeq=str(self._seq))
        for query in sorted(self.saved.values(), key=lambda q: q.query_id):
            import json
            qel = ET.SubElement(root, "query", id=query.query_id, name=query.name,
                                owner=query.owner_user_id, org=query.org_id,
                                type=query.type_name,
                                shared=str(query.shared_with_org).lower())
            qel.text = json.dumps(query.predicates, sort_keys=True)
        tree = ET.ElementTree(root)
        ET.indent(tree)
        path.parent.mkdir(parents=True, exist_ok=True)
        tree.write(path, encoding="unicode", xml_declaration=True)

    def load_queries_file(self, path: Path) -> None:
        import json
        root = ET.parse(path).getroot()
        self._seq = int(root.get("nextSeq") or "0")
        self.saved.clear()
        for qel in root.findall("query"):
            query = SavedQuery(qel.get("id") or "", qel.get("name") or "",
                               qel.get("owner") or "", qel.get("org") or "",
                               qel.get("type") or "",
                               json.loads(qel.text or "[]"),
                               (qel.get("shared") == "true"))
            self.saved[query.query_id] = query
