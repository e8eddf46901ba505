"""Persistent store of entity documents.

One XML file per entity under data/{org}/{type}/{id}.xml, explicit
snapshots under data/{org}/{type}/{id}/v{N}.xml, and a trash area that
keeps deleted files for thirty days. Everything else (search indexes,
backlinks) is derived state that can be rebuilt from these files.

Writes to one entity are serialized behind a per-entity lock and guarded
by an optimistic revision check; writes to distinct entities proceed in
parallel.
"""
from __future__ import annotations

import datetime as _dt
import hashlib
import shutil
import threading
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

from . import chrono
from .access import AccessControl, PermissionDeniedError, User
from .documents import (EntityDocument, VersionRecord, export_entity_xml,
                        parse_entity_xml, validate_document)
from .schema import (FieldDef, Issue, PathError, SchemaRegistry,
                     parse_field_path, render_field_path, resolve_field_path)
from .values import EntityLink, FieldValue, TermRef, value_matches_kind

TRASH_RETENTION_DAYS = 30

# short id prefixes per seed entity type; unseeded types fall back to a
# sanitized slice of the type name
ID_PREFIXES = {
    "Object": "obj",
    "ObjectTransfer": "otr",
    "Route": "rte",
    "ArchivalSource": "asr",
    "Book": "bok",
    "Newspaper": "nwp",
    "OralHistorySource": "ohs",
    "WebSource": "wsr",
    "Bibliography": "bib",
    "SourcePassage": "spa",
    "SourcePassageCollection": "spc",
    "ResearcherComment": "rcm",
    "HistoricalFigure": "hfg",
    "Collection": "col",
    "Event": "evt",
    "Location": "loc",
    "Person": "per",
    "Organisation": "org",
    "DigitalObject": "dob",
}


class StoreError(ValueError):
    pass


class UnknownEntityError(StoreError):
    pass


class RevisionConflictError(StoreError):
    def __init__(self, entity_id: str, expected: int, actual: int):
        self.entity_id, self.expected, self.actual = entity_id, expected, actual
        super().__init__(f"revision conflict on {entity_id}: expected "
                         f"{expected}, stored {actual}")


class DocumentInvalidError(StoreError):
    def __init__(self, issues: list[Issue]):
        self.issues = issues
        super().__init__("; ".join(f"{i.code}: {i.message}" for i in issues))


class IllegalTransitionError(StoreError):
    pass


class ImportFailedError(StoreError):
    pass


@dataclass
class Attachment:
    attachment_id: str  # SHA-256 hex of the content
    media_kind: str
    filename: str = ""


@dataclass
class ImportReport:
    document: EntityDocument
    dangling_links: list[tuple[str, str]] = field(default_factory=list)  # (path, target id)


@dataclass
class DeleteReport:
    deleted: dict[str, list[tuple[str, str]]] = field(default_factory=dict)
    failures: dict[str, str] = field(default_factory=dict)

    # deleted maps entity id -> inbound references left dangling, as
    # (referrer entity id, referrer field path)


def _utcnow() -> str:
    return _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


class DocumentStore:
    def __init__(self, root: Path, schemas: SchemaRegistry,
                 vocabs=None, thesauri=None, access: AccessControl | None = None,
                 normalize=chrono.parse_to_span):
        self.root = Path(root)
        self.schemas = schemas
        self.vocabs = vocabs
        self.thesauri = thesauri
        self.access = access
        self.normalize = normalize
        self._docs: dict[str, EntityDocument] = {}
        self._sequences: dict[str, int] = {}
        self.attachments: dict[str, Attachment] = {}
        self._listeners: list = []
        self._locks: dict[str, threading.Lock] = {}
        self._global = threading.Lock()

    # -- wiring ------------------------------------------------------------

    def add_listener(self, listener) -> None:
        """listener(old_doc | None, new_doc | None) on every committed write."""
        self._listeners.append(listener)

    def _notify(self, old: EntityDocument | None, new: EntityDocument | None) -> None:
        for listener in self._listeners:
            listener(old, new)

    def _entity_lock(self, entity_id: str) -> threading.Lock:
        with self._global:
            return self._locks.setdefault(entity_id, threading.Lock())

    def _require(self, actor: User | None, action: str, resource) -> None:
        if self.access is not None and actor is not None:
            self.access.require(actor, action, resource)

    # -- paths ---------------------------------------------------------------

    def _doc_path(self, doc: EntityDocument) -> Path:
        return self.root / "data" / doc.org_id / doc.type_name / f"{doc.id}.xml"

    def _version_dir(self, doc: EntityDocument) -> Path:
        return self.root / "data" / doc.org_id / doc.type_name / doc.id

    def _sequence_file(self) -> Path:
        return self.root / "admin" / "sequences.txt"

    def _write_doc(self, doc: EntityDocument) -> None:
        schema = self.schemas.get(doc.type_name, doc.schema_version)
        path = self._doc_path(doc)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(export_entity_xml(doc, schema), encoding="utf-8")

    def _save_sequences(self) -> None:
        path = self._sequence_file()
        path.parent.mkdir(parents=True, exist_ok=True)
        lines = [f"{name}\t{seq}" for name, seq in sorted(self._sequences.items())]
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")

    def load(self) -> int:
        """Scan the data directory into memory; returns the document count."""
        seq_file = self._sequence_file()
        if seq_file.exists():
            for line in seq_file.read_text(encoding="utf-8").splitlines():
                name, _, seq = line.partition("\t")
                if name:
                    self._sequences[name] = int(seq)
        data = self.root / "data"
        count = 0
        if data.is_dir():
            for path in sorted(data.glob("*/*/*.xml")):
                doc = parse_entity_xml(path.read_text(encoding="utf-8"))
                self._docs[doc.id] = doc
                count += 1
        self._load_attachment_index()
        self.purge_trash()
        return count

    # -- reads ---------------------------------------------------------------

    def get(self, entity_id: str, actor: User | None = None) -> EntityDocument:
        doc = self._docs.get(entity_id)
        if doc is None:
            raise UnknownEntityError(f"unknown entity {entity_id!r}")
        self._require(actor, "view", doc)
        return doc

    def exists(self, entity_id: str) -> bool:
        return entity_id in self._docs

    def all_documents(self):
        return self._docs.values()

    def documents_of_type(self, type_name: str):
        return [d for d in self._docs.values() if d.type_name == type_name]

    # -- creation --------------------------------------------------------------

    def _type_prefix(self, type_name: str) -> str:
        if type_name in ID_PREFIXES:
            return ID_PREFIXES[type_name]
        slug = "".join(c for c in type_name.lower() if c.isalnum())[:3] or "ent"
        taken = set(ID_PREFIXES.values())
        while slug in taken:
            slug += "x"
        return slug

    def _allocate_id(self, type_name: str) -> str:
        # sequences only ever grow, so ids of deleted entities never return
        with self._global:
            seq = self._sequences.get(type_name, 0) + 1
            self._sequences[type_name] = seq
            self._save_sequences()
        return f"{self._type_prefix(type_name)}-{seq:06d}"

    def create_entity(self, type_name: str, org_id: str, creator_user_id: str,
                      actor: User | None = None) -> EntityDocument:
        if not self.schemas.has_type(type_name):
            raise StoreError(f"unknown entity type {type_name!r}")
        self._require(actor, "create", org_id)
        schema = self.schemas.latest(type_name)
        doc = EntityDocument(
            id=self._allocate_id(type_name),
            type_name=type_name,
            schema_version=schema.schema_version,
            org_id=org_id,
            creator_user_id=creator_user_id,
        )
        self._docs[doc.id] = doc
        self._write_doc(doc)
        self._notify(None, doc)
        return doc

    # -- edits -------------------------------------------------------------------

    def apply_field_edits(self, entity_id: str,
                          edits: list[tuple[str, FieldValue | None]],
                          expected_revision: int,
                          actor: User | None = None) -> int:
        """Apply a batch atomically under the optimistic lock; returns the
        new revision. A value of None deletes the addressed leaf value or
        group instance, renumbering later siblings."""
        with self._entity_lock(entity_id):
            doc = self.get(entity_id)
            self._require(actor, "edit", doc)
            if doc.revision != expected_revision:
                raise RevisionConflictError(entity_id, expected_revision, doc.revision)
            schema = self.schemas.get(doc.type_name, doc.schema_version)
            values = dict(doc.values)
            for path, value in edits:
                if value is None:
                    self._apply_delete(values, schema, path)
                else:
                    self._apply_set(values, schema, path, value)
            candidate = doc.copy()
            candidate.values = values
            issues = [i for i in validate_document(candidate, schema,
                                                   self.vocabs, self.thesauri,
                                                   self.normalize)
                      if i.severity == "error"]
            if issues:
                raise DocumentInvalidError(issues)
            candidate.revision = doc.revision + 1
            self._docs[entity_id] = candidate
            self._write_doc(candidate)
            self._notify(doc, candidate)
            return candidate.revision

    def _apply_set(self, values: dict[str, FieldValue], schema, path: str,
                   value: FieldValue) -> None:
        try:
            definition = resolve_field_path(schema, path)
        except PathError as e:
            raise DocumentInvalidError([Issue(e.code, str(e), path)]) from e
        if not isinstance(definition, FieldDef):
            raise DocumentInvalidError([Issue("value-on-group",
                                              f"{path!r} addresses a group", path)])
        if not value_matches_kind(value, definition.kind.kind):
            raise DocumentInvalidError([Issue("kind-mismatch",
                                              f"value {type(value).__name__} does not fit "
                                              f"{definition.kind.kind!r}", path)])
        values[render_field_path(parse_field_path(path))] = value

    def _apply_delete(self, values: dict[str, FieldValue], schema, path: str) -> None:
        try:
            definition = resolve_field_path(schema, path)
        except PathError as e:
            raise DocumentInvalidError([Issue(e.code, str(e), path)]) from e
        segs = parse_field_path(path)
        canonical = render_field_path(segs)
        if isinstance(definition, FieldDef):
            if canonical not in values:
                raise DocumentInvalidError([Issue("no-value-at-path",
                                                  f"nothing stored at {canonical!r}", path)])
            del values[canonical]
            if definition.multiple and segs[-1][1] is not None:
                self._renumber(values, segs)
            self._cascade_renumber(values, segs)
            return
        # group instance: last segment must be indexed
        if segs[-1][1] is None:
            raise DocumentInvalidError([Issue("missing-index",
                                              f"deleting group {path!r} needs an instance index",
                                              path)])
        prefix = canonical + "/"
        doomed = [p for p in values if p.startswith(prefix)]
        if not doomed:
            raise DocumentInvalidError([Issue("no-value-at-path",
                                              f"no instance at {canonical!r}", path)])
        for p in doomed:
            del values[p]
        self._renumber(values, segs)
        self._cascade_renumber(values, segs)

    def _cascade_renumber(self, values: dict[str, FieldValue], segs: list) -> None:
        """A delete can empty ancestor group instances; close those gaps too,
        deepest ancestor first."""
        for depth in range(len(segs) - 1, 0, -1):
            prefix = segs[:depth]
            if prefix[-1][1] is None:
                continue
            rendered = render_field_path(prefix)
            alive = any(p == rendered or p.startswith(rendered + "/") for p in values)
            if alive:
                break
            self._renumber(values, prefix)

    @staticmethod
    def _renumber(values: dict[str, FieldValue], deleted: list) -> None:
        """Close the gap left at the deleted instance's position: every
        sibling with a higher index at that segment slides down by one."""
        *parents, (name, deleted_idx) = deleted
        parent_prefix = render_field_path(parents) + "/" if parents else ""
        depth = len(parents)
        moves = []
        for p in list(values):
            if parent_prefix and not p.startswith(parent_prefix):
                continue
            segs = parse_field_path(p)
            if len(segs) <= depth:
                continue
            seg_name, seg_idx = segs[depth]
            if seg_name != name or seg_idx is None or seg_idx <= (deleted_idx or 0):
                continue
            segs[depth] = (seg_name, seg_idx - 1)
            moves.append((p, render_field_path(segs)))
        for old, new in sorted(moves, key=lambda m: m[1]):
            values[new] = values.pop(old)

    def validate(self, entity_id: str) -> list[Issue]:
        doc = self.get(entity_id)
        schema = self.schemas.get(doc.type_name, doc.schema_version)
        return validate_document(doc, schema, self.vocabs, self.thesauri, self.normalize)

    # -- versions -------------------------------------------------------------

    def snapshot_version(self, entity_id: str, user_id: str,
                         actor: User | None = None) -> int:
        with self._entity_lock(entity_id):
            doc = self.get(entity_id)
            self._require(actor, "edit", doc)
            schema = self.schemas.get(doc.type_name, doc.schema_version)
            vdir = self._version_dir(doc)
            vdir.mkdir(parents=True, exist_ok=True)
            number = len(self.list_versions(entity_id)) + 1
            body = export_entity_xml(doc, schema)
            wrapped = (f'<version number="{number}" createdBy="{user_id}" '
                       f'createdAt="{_utcnow()}">\n'
                       + "\n".join("  " + line for line in body.splitlines()[1:])
                       + "\n</version>\n")
            (vdir / f"v{number}.xml").write_text(wrapped, encoding="utf-8")
            return number

    def list_versions(self, entity_id: str) -> list[int]:
        doc = self.get(entity_id)
        vdir = self._version_dir(doc)
        if not vdir.is_dir():
            return []
        numbers = []
        for path in vdir.glob("v*.xml"):
            try:
                numbers.append(int(path.stem[1:]))
            except ValueError:
                continue
        return sorted(numbers)

    def export_version_xml(self, entity_id: str, number: int) -> str:
        doc = self.get(entity_id)
        path = self._version_dir(doc) / f"v{number}.xml"
        if not path.exists():
            raise UnknownEntityError(f"no version {number} of {entity_id}")
        return path.read_text(encoding="utf-8")

    def get_version(self, entity_id: str, number: int) -> VersionRecord:
        text = self.export_version_xml(entity_id, number)
        root = ET.fromstring(text)
        entity_el = root.find("entity")
        snapshot = parse_entity_xml(ET.tostring(entity_el, encoding="unicode"))
        return VersionRecord(
            version_number=int(root.get("number") or "0"),
            snapshot_of=snapshot,
            created_by=root.get("createdBy") or "",
            created_at=root.get("createdAt") or "",
        )

    # -- workflow ----------------------------------------------------------------

    LEGAL_TRANSITIONS = {
        ("unpublished", "pending"): "request-publish",
        ("pending", "published"): "approve-publish",
        ("pending", "unpublished"): "approve-publish",   # reject
        ("published", "unpublished"): "approve-publish",  # retract
    }

    def transition_status(self, entity_id: str, target: str,
                          actor: User | None = None) -> str:
        with self._entity_lock(entity_id):
            doc = self.get(entity_id)
            action = self.LEGAL_TRANSITIONS.get((doc.status, target))
            if action is None:
                raise IllegalTransitionError(
                    f"cannot move {entity_id} from {doc.status!r} to {target!r}")
            self._require(actor, action, doc)
            if target == "pending":
                schema = self.schemas.get(doc.type_name, doc.schema_version)
                issues = validate_document(doc, schema, self.vocabs,
                                           self.thesauri, self.normalize)
                if issues:  # required-field warnings harden here
                    raise DocumentInvalidError(issues)
            updated = doc.copy()
            updated.status = target
            self._docs[entity_id] = updated
            self._write_doc(updated)
            self._log_transition(entity_id, doc.status, target, actor)
            self._notify(doc, updated)
            return target

    def _log_transition(self, entity_id: str, source: str, target: str,
                        actor: User | None) -> None:
        log = self.root / "admin" / "transitions.log"
        log.parent.mkdir(parents=True, exist_ok=True)
        who = actor.user_id if actor else "system"
        with log.open("a", encoding="utf-8") as fh:
            fh.write(f"{_utcnow()}\t{entity_id}\t{source}\t{target}\t{who}\n")

    # -- interchange -----------------------------------------------------------

    def export_entity_xml(self, entity_id: str, actor: User | None = None) -> str:
        doc = self.get(entity_id, actor)
        schema = self.schemas.get(doc.type_name, doc.schema_version)
        return export_entity_xml(doc, schema)

    def import_entity_xml(self, xml_text: str, target_org: str,
                          actor: User | None = None,
                          mode: str = "strict",
                          preserve_id: bool = False) -> ImportReport:
        """Modes: strict (unresolvable links fail), lenient (links kept and
        flagged), strip (unresolvable link values dropped)."""
        if mode not in ("strict", "lenient", "strip"):
            raise ImportFailedError(f"unknown import mode {mode!r}")
        incoming = parse_entity_xml(xml_text)
        if not self.schemas.has_type(incoming.type_name):
            raise ImportFailedError(f"schema mismatch: unknown type {incoming.type_name!r}")
        try:
            schema = self.schemas.get(incoming.type_name, incoming.schema_version)
        except KeyError:
            raise ImportFailedError(
                f"schema mismatch: no {incoming.type_name!r} schema version "
                f"{incoming.schema_version}")
        self._require(actor, "create", target_org)
        dangling = [(path, value.target_id)
                    for path, value in sorted(incoming.values.items())
                    if isinstance(value, EntityLink) and value.target_id not in self._docs]
        if dangling and mode == "strict":
            raise ImportFailedError(
                "unresolvable entity links: "
                + ", ".join(f"{p} -> {t}" for p, t in dangling))
        if mode == "strip":
            for path, _ in dangling:
                del incoming.values[path]
            dangling = []
        doc = incoming.copy()
        doc.org_id = target_org
        doc.revision = 0
        if preserve_id and incoming.id and incoming.id not in self._docs:
            doc.id = incoming.id
        else:
            doc.id = self._allocate_id(doc.type_name)
        issues = [i for i in validate_document(doc, schema, self.vocabs,
                                               self.thesauri, self.normalize)
                  if i.severity == "error"]
        if issues:
            raise DocumentInvalidError(issues)
        self._docs[doc.id] = doc
        self._write_doc(doc)
        self._notify(None, doc)
        return ImportReport(doc, dangling)

    def copy_entity(self, entity_id: str, user_id: str,
                    actor: User | None = None) -> EntityDocument:
        source = self.get(entity_id, actor)
        self._require(actor, "create", source.org_id)
        copied = EntityDocument(
            id=self._allocate_id(source.type_name),
            type_name=source.type_name,
            schema_version=source.schema_version,
            org_id=source.org_id,
            creator_user_id=user_id,
            values=dict(source.values),  # attachment refs shared, binaries not duplicated
        )
        self._docs[copied.id] = copied
        self._write_doc(copied)
        self._notify(None, copied)
        return copied

    # -- deletion ----------------------------------------------------------------

    def backlinks_scan(self, entity_id: str) -> list[tuple[str, str]]:
        """Brute-force inbound reference scan (the index-free truth)."""
        hits = []
        for doc in self._docs.values():
            for path, value in doc.values.items():
                if isinstance(value, EntityLink) and value.target_id == entity_id:
                    hits.append((doc.id, path))
        return sorted(hits)

    def delete_entities(self, entity_ids: list[str], user_id: str,
                        actor: User | None = None) -> DeleteReport:
        report = DeleteReport()
        stamp = _dt.date.today().isoformat()
        for entity_id in entity_ids:
            doc = self._docs.get(entity_id)
            if doc is None:
                report.failures[entity_id] = "unknown entity"
                continue
            try:
                self._require(actor, "delete", doc)
            except PermissionDeniedError as e:
                report.failures[entity_id] = str(e)
                continue
            with self._entity_lock(entity_id):
                dangling = [(r, p) for r, p in self.backlinks_scan(entity_id)
                            if r != entity_id]
                trash = self.root / "trash" / stamp / doc.org_id / doc.type_name
                trash.mkdir(parents=True, exist_ok=True)
                path = self._doc_path(doc)
                if path.exists():
                    shutil.move(str(path), trash / path.name)
                vdir = self._version_dir(doc)
                if vdir.is_dir():
                    shutil.move(str(vdir), trash / vdir.name)
                del self._docs[entity_id]
                if self.access is not None:
                    self.access.drop_entity_grants(entity_id)
                self._notify(doc, None)
                report.deleted[entity_id] = dangling
        return report

    def purge_trash(self, today: _dt.date | None = None) -> int:
        trash = self.root / "trash"
        if not trash.is_dir():
            return 0
        today = today or _dt.date.today()
        removed = 0
        for sub in trash.iterdir():
            try:
                stamp = _dt.date.fromisoformat(sub.name)
            except ValueError:
                continue
            if (today - stamp).days > TRASH_RETENTION_DAYS:
                shutil.rmtree(sub)
                removed += 1
        return removed

    # -- vocabulary curation hook ---------------------------------------------

    def rewrite_term_refs(self, vocab_id: str, loser_ids: set[str],
                          winner_id: str, winner_label: str,
                          actor_user_id: str) -> list[str]:
        """Replace references to merged-away terms; one revision per touched
        document, attributed to the acting curator."""
        touched = []
        for doc in list(self._docs.values()):
            edits = []
            for path, value in doc.values.items():
                if isinstance(value, TermRef) and value.vocab_id == vocab_id \
                        and value.term_id in loser_ids:
                    edits.append((path, TermRef(vocab_id, winner_id, winner_label)))
            if edits:
                self.apply_field_edits(doc.id, edits, doc.revision)
                touched.append(doc.id)
        return sorted(touched)

    # -- attachments --------------------------------------------------------------

    def _blob_path(self, sha: str) -> Path:
        return self.root / "blobs" / sha[:2] / sha

    def add_attachment(self, data: bytes, media_kind: str,
                       filename: str = "") -> Attachment:
        sha = hashlib.sha256(data).hexdigest()
        blob = self._blob_path(sha)
        if not blob.exists():
            blob.parent.mkdir(parents=True, exist_ok=True)
            blob.write_bytes(data)
        attachment = Attachment(sha, media_kind, filename)
        self.attachments[sha] = attachment
        self._save_attachment_index()
        return attachment

    def get_attachment(self, attachment_id: str) -> bytes:
        blob = self._blob_path(attachment_id)
        if not blob.exists():
            raise UnknownEntityError(f"unknown attachment {attachment_id!r}")
        return blob.read_bytes()

    def _attachment_index(self) -> Path:
        return self.root / "admin" / "attachments.txt"

    def _save_attachment_index(self) -> None:
        path = self._attachment_index()
        path.parent.mkdir(parents=True, exist_ok=True)
        lines = [f"{a.attachment_id}\t{a.media_kind}\t{a.filename}"
                 for a in sorted(self.attachments.values(),
                                 key=lambda a: a.attachment_id)]
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")

    def _load_attachment_index(self) -> None:
        path = self._attachment_index()
        if not path.exists():
            return
        for line in path.read_text(encoding="utf-8").splitlines():
            parts = line.split("\t")
            if len(parts) >= 2:
                attachment = Attachment(parts[0], parts[1],
                                        parts[2] if len(parts) > 2 else "")
                self.attachments[attachment.attachment_id] = attachment
