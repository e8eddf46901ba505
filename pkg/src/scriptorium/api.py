"""HTTP service binding all modules together under /api/v1.

Every mutation endpoint authorizes before touching state; errors are
structured {code, message, details}.
"""
from __future__ import annotations

from decimal import Decimal, InvalidOperation
from typing import Optional

from fastapi import Body, Depends, FastAPI, Header, Query, Request, Response
from fastapi.responses import JSONResponse

from . import chrono, rdf
from .access import AccessError, PermissionDeniedError, User
from .app import Installation
from .documents import EntityDocument
from .exporting import ExportScope, export_dataset
from .geo import GazetteerError
from .mapfeatures import MapAssembler
from .mapping import naive_export, parse_mapping, transform_entity
from .query import QueryError, predicate_from_json
from .schema import SchemaError, serialize_schema, FieldDef, GroupDef
from .store import (DocumentInvalidError, IllegalTransitionError,
                    ImportFailedError, RevisionConflictError, StoreError,
                    UnknownEntityError)
from .values import (Coordinates, EntityLink, ExternalPlace, FieldValue,
                     FileRef, FormattedText, NumberVal, PlainText, TermRef,
                     ThesaurusRef, TimeVal)
from .vocab import StaticVocabularyError, VocabularyError


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, details=None):
        self.status = status
        self.code = code
        self.message = message
        self.details = details or {}


def value_to_json(value: FieldValue) -> dict:
    if isinstance(value, PlainText):
        return {"kind": "text", "text": value.text}
    if isinstance(value, FormattedText):
        return {"kind": "richtext", "markup": value.markup}
    if isinstance(value, NumberVal):
        return {"kind": "number", "value": str(value.value)}
    if isinstance(value, TermRef):
        return {"kind": "term", "vocab": value.vocab_id, "id": value.term_id,
                "label": value.label}
    if isinstance(value, ThesaurusRef):
        return {"kind": "concept", "thesaurus": value.thesaurus_id,
                "id": value.concept_id, "label": value.label}
    if isinstance(value, EntityLink):
        return {"kind": "link", "type": value.target_type, "id": value.target_id,
                "label": value.display_label}
    if isinstance(value, TimeVal):
        return {"kind": "time", "expr": value.expr,
                "earliest": value.span.earliest, "latest": value.span.latest}
    if isinstance(value, Coordinates):
        return {"kind": "geo", "geometry": value.kind,
                "points": [[lat, lon] for lat, lon in value.points]}
    if isinstance(value, ExternalPlace):
        return {"kind": "place", "source": value.source, "id": value.external_id,
                "lat": value.lat, "lon": value.lon}
    if isinstance(value, FileRef):
        return {"kind": "file", "ref": value.attachment_id,
                "media": value.media_kind}
    raise ApiError(500, "bad-value", f"unserializable value {value!r}")


def value_from_json(obj: dict, normalize) -> FieldValue:
    kind = obj.get("kind")
    try:
        if kind == "text":
            return PlainText(str(obj["text"]))
        if kind == "richtext":
            return FormattedText(str(obj["markup"]))
        if kind == "number":
            return NumberVal(Decimal(str(obj["value"])))
        if kind == "term":
            return TermRef(obj["vocab"], obj["id"], obj.get("label", ""))
        if kind == "concept":
            return ThesaurusRef(obj["thesaurus"], obj["id"], obj.get("label", ""))
        if kind == "link":
            return EntityLink(obj["type"], obj["id"], obj.get("label", ""))
        if kind == "time":
            span = normalize(obj["expr"])
            return TimeVal(obj["expr"], span)
        if kind == "geo":
            return Coordinates(obj.get("geometry", "point"),
                               tuple((float(lat), float(lon))
                                     for lat, lon in obj["points"]))
        if kind == "place":
            return ExternalPlace(obj["source"], obj["id"],
                                 float(obj["lat"]), float(obj["lon"]))
        if kind == "file":
            return FileRef(obj["ref"], obj["media"])
    except (KeyError, TypeError, InvalidOperation) as e:
        raise ApiError(400, "bad-value", f"malformed {kind!r} value: {e}")
    except chrono.TimeExpressionError as e:
        raise ApiError(400, "bad-time-expression", str(e))
    raise ApiError(400, "bad-value", f"unknown value kind {kind!r}")


def doc_to_json(doc: EntityDocument) -> dict:
    return {
        "id": doc.id,
        "type": doc.type_name,
        "org": doc.org_id,
        "creator": doc.creator_user_id,
        "status": doc.status,
        "schemaVersion": doc.schema_version,
        "revision": doc.revision,
        "values": {path: value_to_json(v) for path, v in sorted(doc.values.items())},
    }


def _node_to_json(node) -> dict:
    if isinstance(node, GroupDef):
        return {"group": node.name, "multiple": node.multiple,
                "children": [_node_to_json(c) for c in node.children]}
    assert isinstance(node, FieldDef)
    out = {"field": node.name, "kind": node.kind.kind, "label": node.label(),
           "multiple": node.multiple, "required": node.required}
    if node.kind.kind == "entity-link":
        out["targets"] = list(node.kind.targets)
    elif node.kind.kind == "vocab-term":
        out["vocab"] = node.kind.vocab_id
        out["mode"] = node.kind.vocab_mode
    elif node.kind.kind == "thesaurus-term":
        out["thesaurus"] = node.kind.thesaurus_id
    elif node.kind.kind == "digital-file":
        out["media"] = list(node.kind.media)
    return out


def schema_to_json(schema) -> dict:
    return {"type": schema.type_name, "version": schema.schema_version,
            "root": _node_to_json(schema.root),
            "summaryColumns": list(schema.summary_columns),
            "mapPointFields": list(schema.map_point_fields)}


def create_app(inst: Installation) -> FastAPI:
    app = FastAPI(title="scriptorium", version="0.1.0")
    prefix = "/api/v1"

    def current_user(authorization: Optional[str] = Header(default=None)) -> User:
        if not authorization or not authorization.startswith("Bearer "):
            raise ApiError(401, "unauthenticated", "Bearer token required")
        try:
            return inst.access.resolve_token(authorization.removeprefix("Bearer "))
        except PermissionDeniedError as e:
            raise ApiError(401, "unauthenticated", str(e))

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message,
                                     "details": exc.details})

    @app.exception_handler(Exception)
    async def handle_domain_error(request: Request, exc: Exception):
        mapping = [
            (RevisionConflictError, 409, "revision-conflict"),
            (UnknownEntityError, 404, "not-found"),
            (IllegalTransitionError, 409, "illegal-transition"),
            (DocumentInvalidError, 422, "document-invalid"),
            (ImportFailedError, 422, "import-failed"),
            (StaticVocabularyError, 403, "static-vocabulary"),
            (PermissionDeniedError, 403, "denied"),
            (chrono.TimeExpressionError, 400, "bad-time-expression"),
            (GazetteerError, 400, "gazetteer-error"),
            (QueryError, 400, "bad-query"),
            (SchemaError, 400, "bad-schema"),
            (VocabularyError, 400, "vocabulary-error"),
            (AccessError, 400, "access-error"),
            (StoreError, 400, "store-error"),
            (KeyError, 404, "not-found"),
        ]
        for exc_type, status, code in mapping:
            if isinstance(exc, exc_type):
                details = {}
                if isinstance(exc, DocumentInvalidError):
                    details = {"issues": [
                        {"code": i.code, "message": i.message, "path": i.path,
                         "severity": i.severity} for i in exc.issues]}
                return JSONResponse(status_code=status,
                                    content={"code": code, "message": str(exc),
                                             "details": details})
        raise exc

    # -- session ---------------------------------------------------------------

    @app.post(prefix + "/login")
    def login(body: dict = Body(...)):
        token = inst.access.authenticate(body.get("user", ""),
                                         body.get("password", ""))
        user = inst.access.users[body["user"]]
        return {"token": token,
                "user": {"id": user.user_id, "name": user.display_name,
                         "role": user.role, "org": user.org_id}}

    @app.post(prefix + "/logout")
    def logout(authorization: Optional[str] = Header(default=None)):
        if authorization and authorization.startswith("Bearer "):
            inst.access.logout(authorization.removeprefix("Bearer "))
        return {"ok": True}

    # -- catalogs ----------------------------------------------------------------

    @app.get(prefix + "/types")
    def list_types(user: User = Depends(current_user)):
        out = []
        for name in inst.schemas.type_names():
            schema = inst.schemas.latest(name)
            out.append({"name": name, "version": schema.schema_version,
                        "summaryColumns": list(schema.summary_columns)})
        return out

    @app.get(prefix + "/types/{type_name}/schema")
    def export_schema(type_name: str, user: User = Depends(current_user)):
        schema = inst.schemas.latest(type_name)
        return Response(serialize_schema(schema), media_type="application/xml")

    @app.get(prefix + "/types/{type_name}/schema.json")
    def schema_json(type_name: str, user: User = Depends(current_user)):
        return schema_to_json(inst.schemas.latest(type_name))

    # -- search & queries (before the /{type} catch-alls) -----------------------

    @app.get(prefix + "/search")
    def search(q: str, types: Optional[str] = None,
               user: User = Depends(current_user)):
        scope = [t for t in (types or "").split(",") if t] or None
        hits = inst.query.keyword_search(q, scope, viewer=user)
        return [{"id": entity_id, "score": score} for entity_id, score in hits]

    @app.get(prefix + "/queries")
    def list_queries(user: User = Depends(current_user)):
        return [{"id": q.query_id, "name": q.name, "owner": q.owner_user_id,
                 "type": q.type_name, "shared": q.shared_with_org,
                 "predicates": q.predicates}
                for q in inst.query.list_queries(user)]

    @app.post(prefix + "/queries")
    def save_query(body: dict = Body(...), user: User = Depends(current_user)):
        query = inst.query.save_query(user, body.get("name", ""),
                                      body.get("type", ""),
                                      body.get("predicates", []),
                                      bool(body.get("shared", False)))
        inst.persist_admin()
        return {"id": query.query_id, "name": query.name}

    @app.post(prefix + "/queries/{query_id}/run")
    def run_query(query_id: str, user: User = Depends(current_user)):
        return {"ids": inst.query.run_query(user, query_id)}

    @app.delete(prefix + "/queries/{query_id}")
    def delete_query(query_id: str, user: User = Depends(current_user)):
        inst.query.delete_query(user, query_id)
        inst.persist_admin()
        return {"ok": True}

    # -- map ----------------------------------------------------------------------

    @app.get(prefix + "/map")
    def map_features(ids: str, user: User = Depends(current_user)):
        assembler = MapAssembler(inst.store, inst.config.map_geometry, inst.access)
        collection = assembler.assemble([i for i in ids.split(",") if i], viewer=user)
        return {
            "features": [{"kind": f.kind, "geometry": f.geometry, "popup": f.popup,
                          "entity": f.source_entity_id, "degenerate": f.degenerate}
                         for f in collection.features],
            "unresolved": collection.unresolved,
        }

    # -- import / dataset export ----------------------------------------------------

    @app.post(prefix + "/import")
    async def import_entity(request: Request, mode: str = "strict",
                            preserveId: bool = False, org: Optional[str] = None,
                            user: User = Depends(current_user)):
        xml_text = (await request.body()).decode("utf-8")
        target_org = org or user.org_id
        if not target_org:
            raise ApiError(400, "bad-request", "target organisation required")
        report = inst.store.import_entity_xml(xml_text, target_org, actor=user,
                                              mode=mode, preserve_id=preserveId)
        return {"id": report.document.id,
                "dangling": [{"path": p, "target": t}
                             for p, t in report.dangling_links]}

    @app.get(prefix + "/export")
    def export_archive(format: str = "xml", org: Optional[str] = None,
                       type: Optional[str] = None, ids: Optional[str] = None,
                       user: User = Depends(current_user)):
        scope = ExportScope(org_id=org, type_name=type,
                            ids=[i for i in ids.split(",") if i] if ids else None)
        result = export_dataset(inst.store, scope, format,
                                inst.root / "mappings", inst.config.base_iri,
                                viewer=user, access=inst.access)
        headers = {"X-Excluded": ",".join(result.excluded)} if result.excluded else {}
        return Response(result.archive, media_type="application/zip",
                        headers=headers)

    # -- vocabulary ---------------------------------------------------------------

    @app.get(prefix + "/vocab")
    def list_vocabularies(user: User = Depends(current_user)):
        return [{"id": v.vocab_id, "name": v.name, "mode": v.mode,
                 "terms": sum(1 for t in v.terms.values() if not t.deprecated)}
                for v in sorted(inst.vocabs.vocabularies.values(),
                                key=lambda v: v.vocab_id)]

    @app.get(prefix + "/vocab/{vocab_id}")
    def vocabulary_detail(vocab_id: str, user: User = Depends(current_user)):
        vocab = inst.vocabs.get(vocab_id)
        return {"id": vocab.vocab_id, "name": vocab.name, "mode": vocab.mode,
                "terms": [{"id": t.term_id, "labels": t.labels,
                           "deprecated": t.deprecated, "mergedInto": t.merged_into}
                          for t in sorted(vocab.terms.values(),
                                          key=lambda t: t.term_id)]}

    @app.post(prefix + "/vocab/{vocab_id}/terms")
    def add_term(vocab_id: str, body: dict = Body(...),
                 user: User = Depends(current_user)):
        vocab = inst.vocabs.get(vocab_id)
        is_admin = bool(inst.access.authorize(user, "manage-vocab", user.org_id))
        if vocab.mode == "static" and not is_admin:
            raise ApiError(403, "static-vocabulary",
                           "static vocabularies are managed by administrators")
        if not is_admin:
            # growing a dynamic vocabulary is part of data entry
            inst.access.require(user, "create", user.org_id)
        term_id, created = inst.vocabs.add_term(
            vocab_id, body.get("label", ""), body.get("lang", "en"),
            user.user_id, allow_static=is_admin)
        inst.persist_admin()
        return {"id": term_id, "created": created}

    @app.get(prefix + "/vocab/{vocab_id}/duplicates")
    def duplicate_candidates(vocab_id: str, user: User = Depends(current_user)):
        inst.access.require(user, "manage-vocab", user.org_id)
        return {"clusters": inst.vocabs.find_duplicate_candidates(vocab_id)}

    @app.post(prefix + "/vocab/{vocab_id}/merge")
    def merge_terms(vocab_id: str, body: dict = Body(...),
                    user: User = Depends(current_user)):
        inst.access.require(user, "manage-vocab", user.org_id)
        report = inst.vocabs.merge_terms(vocab_id, body.get("winner", ""),
                                         body.get("losers", []), user.user_id,
                                         documents=inst.store)
        inst.persist_admin()
        return {"winner": report.winner_term_id,
                "deprecated": report.deprecated_term_ids,
                "documents": report.touched_document_ids}

    @app.get(prefix + "/vocab/{vocab_id}/export")
    def export_vocabulary(vocab_id: str, user: User = Depends(current_user)):
        inst.access.require(user, "manage-vocab", user.org_id)
        return Response(inst.vocabs.export_vocabulary(vocab_id),
                        media_type="text/tab-separated-values; charset=utf-8")

    @app.post(prefix + "/vocab/{vocab_id}/import")
    async def import_vocabulary(vocab_id: str, request: Request,
                                user: User = Depends(current_user)):
        inst.access.require(user, "manage-vocab", user.org_id)
        created = inst.vocabs.import_vocabulary(
            vocab_id, (await request.body()).decode("utf-8"), user.user_id)
        inst.persist_admin()
        return {"created": created}

    # -- thesaurus -----------------------------------------------------------------

    @app.get(prefix + "/thesaurus")
    def list_thesauri(user: User = Depends(current_user)):
        return sorted(inst.thesauri.thesauri)

    @app.get(prefix + "/thesaurus/{thesaurus_id}")
    def thesaurus_detail(thesaurus_id: str, user: User = Depends(current_user)):
        thesaurus = inst.thesauri.get(thesaurus_id)
        return {"id": thesaurus.thesaurus_id,
                "concepts": [{"id": c.concept_id, "prefLabels": c.pref_labels,
                              "altLabels": c.alt_labels,
                              "broader": sorted(c.broader),
                              "narrower": sorted(thesaurus.narrower(c.concept_id))}
                             for c in sorted(thesaurus.concepts.values(),
                                             key=lambda c: c.concept_id)]}

    @app.post(prefix + "/thesaurus/{thesaurus_id}")
    def manage_thesaurus(thesaurus_id: str, body: dict = Body(...),
                         user: User = Depends(current_user)):
        inst.access.require(user, "manage-vocab", user.org_id)
        thesaurus = inst.thesauri.get(thesaurus_id)
        command = body.get("command")
        if command == "add-concept":
            concept = thesaurus.add_concept(body.get("id", ""),
                                            body.get("prefLabels", {}),
                                            body.get("altLabels"),
                                            set(body.get("broader", [])))
        elif command == "set-broader":
            concept = thesaurus.set_broader(body.get("id", ""), body.get("broader", ""))
        elif command == "remove-broader":
            concept = thesaurus.remove_broader(body.get("id", ""),
                                               body.get("broader", ""))
        else:
            raise ApiError(400, "bad-request", f"unknown command {command!r}")
        inst.persist_admin()
        return {"id": concept.concept_id, "broader": sorted(concept.broader),
                "narrower": sorted(thesaurus.narrower(concept.concept_id))}

    @app.get(prefix + "/thesaurus/{thesaurus_id}/skos")
    def thesaurus_skos(thesaurus_id: str, format: str = "rdf-ttl",
                       user: User = Depends(current_user)):
        graph = inst.thesauri.get(thesaurus_id).export_skos(inst.config.base_iri)
        if format == "rdf-nt":
            return Response(rdf.serialize_ntriples(graph),
                            media_type="application/n-triples")
        return Response(rdf.serialize_turtle(graph),
                        media_type="text/turtle")

    # -- misc helpers ----------------------------------------------------------------

    @app.get(prefix + "/parse-date")
    def parse_date(expr: str):
        ast = chrono.parse_time_expression(expr)
        span = chrono.normalize_to_span(ast, inst.config.circa_radius)
        return {"expr": expr, "ast": chrono.format_expression(ast),
                "earliest": span.earliest, "latest": span.latest}

    @app.get(prefix + "/gazetteer")
    def gazetteer(name: str, source: str = "tgn",
                  user: User = Depends(current_user)):
        records = inst.geo.lookup(name, source)
        return [{"source": r.source, "id": r.external_id, "name": r.name,
                 "lat": r.lat, "lon": r.lon, "kind": r.place_kind}
                for r in records]

    # -- provisioning -------------------------------------------------------------

    @app.post(prefix + "/orgs")
    def create_org(body: dict = Body(...), user: User = Depends(current_user)):
        org = inst.access.create_org(user, body.get("id", ""), body.get("name", ""),
                                     bool(body.get("editorsEditAll", False)))
        inst.persist_admin()
        return {"id": org.org_id, "name": org.name}

    @app.post(prefix + "/users")
    def create_user(body: dict = Body(...), user: User = Depends(current_user)):
        created = inst.access.create_user(user, body.get("id", ""),
                                          body.get("name", ""),
                                          body.get("role", ""),
                                          body.get("org"),
                                          body.get("password", ""))
        inst.persist_admin()
        return {"id": created.user_id, "role": created.role, "org": created.org_id}

    # -- entities ------------------------------------------------------------------

    @app.get(prefix + "/entities/{entity_id}")
    def get_entity(entity_id: str, user: User = Depends(current_user)):
        return doc_to_json(inst.store.get(entity_id, actor=user))

    @app.put(prefix + "/entities/{entity_id}")
    def edit_entity(entity_id: str, body: dict = Body(...),
                    user: User = Depends(current_user)):
        edits = []
        for edit in body.get("edits", []):
            path = edit.get("path")
            if not path:
                raise ApiError(400, "bad-request", "edit without path")
            if edit.get("value") is None:
                edits.append((path, None))
            else:
                edits.append((path, value_from_json(edit["value"], inst.normalize)))
        revision = inst.store.apply_field_edits(
            entity_id, edits, int(body.get("expectedRevision", -1)), actor=user)
        return {"id": entity_id, "revision": revision}

    @app.delete(prefix + "/entities/{entity_id}")
    def delete_entity(entity_id: str, user: User = Depends(current_user)):
        report = inst.store.delete_entities([entity_id], user.user_id, actor=user)
        if entity_id in report.failures:
            reason = report.failures[entity_id]
            status = 404 if "unknown" in reason else 403
            raise ApiError(status, "delete-failed", reason)
        return _delete_report_json(report)

    @app.post(prefix + "/entities/delete")
    def delete_entities(body: dict = Body(...), user: User = Depends(current_user)):
        report = inst.store.delete_entities(list(body.get("ids", [])),
                                            user.user_id, actor=user)
        return _delete_report_json(report)

    def _delete_report_json(report):
        return {
            "deleted": {entity_id: [{"referrer": r, "path": p} for r, p in refs]
                        for entity_id, refs in report.deleted.items()},
            "failures": report.failures,
        }

    @app.post(prefix + "/entities/{entity_id}/versions")
    def snapshot(entity_id: str, user: User = Depends(current_user)):
        return {"version": inst.store.snapshot_version(entity_id, user.user_id,
                                                       actor=user)}

    @app.get(prefix + "/entities/{entity_id}/versions")
    def list_versions(entity_id: str, user: User = Depends(current_user)):
        inst.store.get(entity_id, actor=user)
        return inst.store.list_versions(entity_id)

    @app.get(prefix + "/entities/{entity_id}/versions/{number}")
    def get_version(entity_id: str, number: int,
                    user: User = Depends(current_user)):
        inst.store.get(entity_id, actor=user)
        record = inst.store.get_version(entity_id, number)
        return {"version": record.version_number, "createdBy": record.created_by,
                "createdAt": record.created_at,
                "document": doc_to_json(record.snapshot_of)}

    @app.post(prefix + "/entities/{entity_id}/status")
    def transition(entity_id: str, body: dict = Body(...),
                   user: User = Depends(current_user)):
        return {"status": inst.store.transition_status(
            entity_id, body.get("target", ""), actor=user)}

    @app.post(prefix + "/entities/{entity_id}/grants")
    def grant(entity_id: str, body: dict = Body(...),
              user: User = Depends(current_user)):
        doc = inst.store.get(entity_id, actor=user)
        grant = inst.access.grant_edit(user, doc, body.get("grantee", ""))
        inst.persist_admin()
        return {"entity": grant.entity_id, "grantee": grant.grantee_user_id}

    @app.delete(prefix + "/entities/{entity_id}/grants/{grantee}")
    def revoke(entity_id: str, grantee: str, user: User = Depends(current_user)):
        doc = inst.store.get(entity_id, actor=user)
        inst.access.revoke_edit(user, doc, grantee)
        inst.persist_admin()
        return {"ok": True}

    @app.post(prefix + "/entities/{entity_id}/copy")
    def copy_entity(entity_id: str, user: User = Depends(current_user)):
        return doc_to_json(inst.store.copy_entity(entity_id, user.user_id,
                                                  actor=user))

    @app.get(prefix + "/entities/{entity_id}/export")
    def export_entity(entity_id: str, format: str = "xml",
                      user: User = Depends(current_user)):
        if format == "xml":
            return Response(inst.store.export_entity_xml(entity_id, actor=user),
                            media_type="application/xml")
        doc = inst.store.get(entity_id, actor=user)
        mapping_path = inst.mapping_path(doc.type_name)
        if mapping_path is not None:
            spec = parse_mapping(mapping_path.read_text(encoding="utf-8"))
            graph = transform_entity(doc, spec, inst.config.base_iri)
            prefixes = spec.prefixes
        else:
            graph = naive_export(doc, inst.config.base_iri)
            prefixes = {"crm": rdf.CRM_NS}
        if format == "rdf-nt":
            return Response(rdf.serialize_ntriples(graph),
                            media_type="application/n-triples")
        if format == "rdf-ttl":
            return Response(rdf.serialize_turtle(graph, prefixes),
                            media_type="text/turtle")
        raise ApiError(400, "bad-request", f"unknown format {format!r}")

    @app.get(prefix + "/entities/{entity_id}/backlinks")
    def backlinks(entity_id: str, user: User = Depends(current_user)):
        inst.store.get(entity_id, actor=user)
        return [{"referrer": r, "path": p}
                for r, p in sorted(inst.query.backlinks(entity_id))]

    # -- per-type table & search (single-segment catch-alls come last) -----------

    @app.get(prefix + "/{type_name}/rows")
    def rows(type_name: str, filter: str = "",
             user: User = Depends(current_user)):
        return [{"id": row.entity_id, "status": row.status,
                 "creator": row.creator, "cells": row.cells}
                for row in inst.query.filter_rows(type_name, filter, viewer=user)]

    @app.post(prefix + "/{type_name}/query")
    def advanced_search(type_name: str, body: dict = Body(...),
                        user: User = Depends(current_user)):
        predicates = [predicate_from_json(obj, inst.normalize)
                      for obj in body.get("predicates", [])]
        return {"ids": inst.query.advanced_search(type_name, predicates,
                                                  viewer=user)}

    @app.get(prefix + "/{type_name}")
    def list_entities(type_name: str, user: User = Depends(current_user)):
        if not inst.schemas.has_type(type_name):
            raise ApiError(404, "not-found", f"unknown type {type_name!r}")
        return [doc_to_json(doc)
                for doc in sorted(inst.store.documents_of_type(type_name),
                                  key=lambda d: d.id)
                if inst.access.authorize(user, "view", doc)]

    @app.post(prefix + "/{type_name}")
    def create_entity(type_name: str, body: Optional[dict] = Body(default=None),
                      user: User = Depends(current_user)):
        org = (body or {}).get("org") or user.org_id
        if not org:
            raise ApiError(400, "bad-request",
                           "system administrators must name the organisation")
        doc = inst.store.create_entity(type_name, org, user.user_id, actor=user)
        return doc_to_json(doc)

    # -- public read-only surface --------------------------------------------------

    @app.get("/public/v1/entities/{entity_id}")
    def public_entity(entity_id: str):
        if not inst.config.public_read:
            raise ApiError(404, "not-found", "public access is not enabled")
        doc = inst.store.get(entity_id)
        if doc.status != "published":
            raise ApiError(404, "not-found", "entity not published")
        return doc_to_json(doc)

    return app
