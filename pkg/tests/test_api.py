from __future__ import annotations

import io
import zipfile

import pytest
from fastapi.testclient import TestClient

from scriptorium.api import create_app


@pytest.fixture
def client(inst):
    return TestClient(create_app(inst), raise_server_exceptions=False)


def login(client, user_id, password="pw"):
    response = client.post("/api/v1/login", json={"user": user_id,
                                                  "password": password})
    assert response.status_code == 200, response.text
    return {"Authorization": f"Bearer {response.json()['token']}"}


@pytest.fixture
def editor(client):
    return login(client, "editor_a_org1")


@pytest.fixture
def editor_b(client):
    return login(client, "editor_b_org1")


@pytest.fixture
def org_admin(client):
    return login(client, "admin1")


def make_entity(client, headers, type_name="Object", edits=None):
    created = client.post(f"/api/v1/{type_name}", headers=headers, json={})
    assert created.status_code == 200, created.text
    doc = created.json()
    if edits:
        response = client.put(f"/api/v1/entities/{doc['id']}", headers=headers,
                              json={"expectedRevision": 0, "edits": edits})
        assert response.status_code == 200, response.text
    return doc["id"]


def name_edit(text):
    return [{"path": "ObjectIdentity/ObjectName",
             "value": {"kind": "text", "text": text}},
            {"path": "ObjectIdentity/ObjectCode",
             "value": {"kind": "text", "text": "RC-001"}}]


def test_login_and_bad_password(client):
    assert client.post("/api/v1/login",
                       json={"user": "root", "password": "wrong"}).status_code == 403
    headers = login(client, "root", "root-pw")
    assert client.get("/api/v1/types", headers=headers).status_code == 200


def test_missing_token_rejected(client):
    response = client.get("/api/v1/types")
    assert response.status_code == 401
    assert response.json()["code"] == "unauthenticated"


def test_types_lists_all_nineteen(client, editor):
    types = client.get("/api/v1/types", headers=editor).json()
    assert len(types) == 19
    assert {"Object", "ObjectTransfer", "Location"} <= {t["name"] for t in types}


# one surface per per-entity operation, enumerated
PER_ENTITY_OPERATIONS = {
    "i create": ("POST", "/api/v1/{type_name}"),
    "ii view card": ("GET", "/api/v1/entities/{entity_id}"),
    "iii edit": ("PUT", "/api/v1/entities/{entity_id}"),
    "iv request publish": ("POST", "/api/v1/entities/{entity_id}/status"),
    "v create version": ("POST", "/api/v1/entities/{entity_id}/versions"),
    "vi view versions": ("GET", "/api/v1/entities/{entity_id}/versions"),
    "vii delete": ("DELETE", "/api/v1/entities/{entity_id}"),
    "viii copy": ("POST", "/api/v1/entities/{entity_id}/copy"),
    "ix grant edit rights": ("POST", "/api/v1/entities/{entity_id}/grants"),
    "x export schema": ("GET", "/api/v1/types/{type_name}/schema"),
    "xi export data": ("GET", "/api/v1/entities/{entity_id}/export"),
    "xii import": ("POST", "/api/v1/import"),
}


def test_twelve_operations_each_have_one_endpoint(inst):
    app = create_app(inst)
    routes = {(method, route.path)
              for route in app.routes if hasattr(route, "methods")
              for method in route.methods}
    assert len(PER_ENTITY_OPERATIONS) == 12
    for operation, (method, path) in PER_ENTITY_OPERATIONS.items():
        assert (method, path) in routes, operation


# The twelve per-entity operations, one endpoint each.

def test_op_i_create(client, editor):
    entity_id = make_entity(client, editor)
    assert entity_id.startswith("obj-")


def test_op_ii_view_card(client, editor):
    entity_id = make_entity(client, editor, edits=name_edit("Icon"))
    doc = client.get(f"/api/v1/entities/{entity_id}", headers=editor).json()
    assert doc["values"]["ObjectIdentity/ObjectName"]["text"] == "Icon"


def test_op_iii_edit_with_optimistic_lock(client, editor):
    entity_id = make_entity(client, editor, edits=name_edit("first"))
    stale = client.put(f"/api/v1/entities/{entity_id}", headers=editor,
                       json={"expectedRevision": 0, "edits": name_edit("second")})
    assert stale.status_code == 409
    assert stale.json()["code"] == "revision-conflict"
    fresh = client.put(f"/api/v1/entities/{entity_id}", headers=editor,
                       json={"expectedRevision": 1, "edits": name_edit("second")})
    assert fresh.status_code == 200
    assert fresh.json()["revision"] == 2


def test_op_iv_request_publish(client, editor, org_admin):
    entity_id = make_entity(client, editor, edits=name_edit("complete"))
    response = client.post(f"/api/v1/entities/{entity_id}/status",
                           headers=editor, json={"target": "pending"})
    assert response.json() == {"status": "pending"}
    denied = client.post(f"/api/v1/entities/{entity_id}/status",
                         headers=editor, json={"target": "published"})
    assert denied.status_code == 403
    approved = client.post(f"/api/v1/entities/{entity_id}/status",
                           headers=org_admin, json={"target": "published"})
    assert approved.json() == {"status": "published"}


def test_op_v_vi_versions(client, editor):
    entity_id = make_entity(client, editor, edits=name_edit("v1"))
    assert client.post(f"/api/v1/entities/{entity_id}/versions",
                       headers=editor).json() == {"version": 1}
    client.put(f"/api/v1/entities/{entity_id}", headers=editor,
               json={"expectedRevision": 1, "edits": name_edit("v2")})
    assert client.get(f"/api/v1/entities/{entity_id}/versions",
                      headers=editor).json() == [1]
    old = client.get(f"/api/v1/entities/{entity_id}/versions/1",
                     headers=editor).json()
    assert old["document"]["values"]["ObjectIdentity/ObjectName"]["text"] == "v1"


def test_op_vii_delete(client, editor):
    entity_id = make_entity(client, editor)
    report = client.request("DELETE", f"/api/v1/entities/{entity_id}",
                            headers=editor).json()
    assert entity_id in report["deleted"]
    assert client.get(f"/api/v1/entities/{entity_id}",
                      headers=editor).status_code == 404


def test_op_viii_copy(client, editor):
    entity_id = make_entity(client, editor, edits=name_edit("original"))
    copy = client.post(f"/api/v1/entities/{entity_id}/copy", headers=editor).json()
    assert copy["id"] != entity_id
    assert copy["values"]["ObjectIdentity/ObjectName"]["text"] == "original"
    assert copy["status"] == "unpublished" and copy["revision"] == 0


def test_op_ix_grant_edit(client, editor, editor_b):
    entity_id = make_entity(client, editor, edits=name_edit("mine"))
    denied = client.put(f"/api/v1/entities/{entity_id}", headers=editor_b,
                        json={"expectedRevision": 1, "edits": name_edit("theirs")})
    assert denied.status_code == 403
    granted = client.post(f"/api/v1/entities/{entity_id}/grants", headers=editor,
                          json={"grantee": "editor_b_org1"})
    assert granted.status_code == 200
    allowed = client.put(f"/api/v1/entities/{entity_id}", headers=editor_b,
                         json={"expectedRevision": 1, "edits": name_edit("theirs")})
    assert allowed.status_code == 200
    client.request("DELETE", f"/api/v1/entities/{entity_id}/grants/editor_b_org1",
                   headers=editor)
    again = client.put(f"/api/v1/entities/{entity_id}", headers=editor_b,
                       json={"expectedRevision": 2, "edits": name_edit("nope")})
    assert again.status_code == 403


def test_op_x_export_schema(client, editor):
    response = client.get("/api/v1/types/Object/schema", headers=editor)
    assert response.status_code == 200
    assert response.text.startswith("<?xml")
    assert 'type="Object"' in response.text


def test_op_xi_export_entity_xml_and_rdf(client, editor):
    entity_id = make_entity(client, editor, edits=name_edit("exported"))
    xml = client.get(f"/api/v1/entities/{entity_id}/export?format=xml",
                     headers=editor)
    assert xml.status_code == 200 and "<entity" in xml.text
    nt = client.get(f"/api/v1/entities/{entity_id}/export?format=rdf-nt",
                    headers=editor)
    assert "E22_Human-Made_Object" in nt.text
    ttl = client.get(f"/api/v1/entities/{entity_id}/export?format=rdf-ttl",
                     headers=editor)
    assert "@prefix crm:" in ttl.text


def test_op_xii_import(client, editor):
    entity_id = make_entity(client, editor, edits=name_edit("roundtrip"))
    xml = client.get(f"/api/v1/entities/{entity_id}/export?format=xml",
                     headers=editor).text
    imported = client.post("/api/v1/import", headers=editor, content=xml)
    assert imported.status_code == 200
    new_id = imported.json()["id"]
    assert new_id != entity_id
    copy = client.get(f"/api/v1/entities/{new_id}", headers=editor).json()
    original = client.get(f"/api/v1/entities/{entity_id}", headers=editor).json()
    assert copy["values"] == original["values"]


def test_guest_read_only_everywhere(client, editor):
    entity_id = make_entity(client, editor, edits=name_edit("icon"))
    guest = login(client, "guest_org1")
    assert client.get(f"/api/v1/entities/{entity_id}",
                      headers=guest).status_code == 200
    mutations = [
        ("POST", "/api/v1/Object", {}),
        ("PUT", f"/api/v1/entities/{entity_id}",
         {"expectedRevision": 1, "edits": name_edit("x")}),
        ("DELETE", f"/api/v1/entities/{entity_id}", None),
        ("POST", f"/api/v1/entities/{entity_id}/versions", {}),
        ("POST", f"/api/v1/entities/{entity_id}/status", {"target": "pending"}),
        ("POST", f"/api/v1/entities/{entity_id}/grants", {"grantee": "guest_org1"}),
        ("POST", f"/api/v1/entities/{entity_id}/copy", {}),
        ("POST", "/api/v1/vocab/location-type/terms", {"label": "shrine"}),
        ("POST", "/api/v1/orgs", {"id": "x", "name": "X"}),
        ("POST", "/api/v1/users",
         {"id": "x", "name": "X", "role": "editor", "org": "org1", "password": "x"}),
    ]
    for method, url, body in mutations:
        response = client.request(method, url, headers=guest,
                                  json=body if body is not None else None)
        assert response.status_code == 403, (method, url, response.text)
        # state untouched: delete reports failure instead of removing
    assert client.get(f"/api/v1/entities/{entity_id}",
                      headers=guest).status_code == 200


def test_cross_org_isolation(client, editor):
    entity_id = make_entity(client, editor, edits=name_edit("org1 only"))
    intruder = login(client, "editor_a_org2")
    assert client.get(f"/api/v1/entities/{entity_id}",
                      headers=intruder).status_code == 403
    rows = client.get("/api/v1/Object/rows", headers=intruder).json()
    assert rows == []


def test_rows_and_filter(client, editor):
    make_entity(client, editor, edits=name_edit("Icon of St. Nicholas"))
    make_entity(client, editor, edits=name_edit("Censer"))
    rows = client.get("/api/v1/Object/rows?filter=nichol", headers=editor).json()
    assert len(rows) == 1
    assert rows[0]["cells"]["ObjectIdentity/ObjectName"] == "Icon of St. Nicholas"
    assert len(client.get("/api/v1/Object/rows", headers=editor).json()) == 2


def test_keyword_search_endpoint(client, editor):
    entity_id = make_entity(client, editor, edits=name_edit("Icon of St. Nicholas"))
    hits = client.get("/api/v1/search?q=nicholas+icon", headers=editor).json()
    assert hits and hits[0]["id"] == entity_id


def test_advanced_search_endpoint(client, editor):
    entity_id = make_entity(client, editor, edits=name_edit("dated") + [
        {"path": "ObjectIdentity/CreationProductionDate",
         "value": {"kind": "time", "expr": "ca. 1750"}}])
    response = client.post("/api/v1/Object/query", headers=editor, json={
        "predicates": [{"op": "date_within", "path": "ObjectIdentity/CreationProductionDate",
                        "expr": "18th century"}]})
    assert response.json() == {"ids": [entity_id]}


def test_saved_query_flow(client, editor, editor_b):
    saved = client.post("/api/v1/queries", headers=editor, json={
        "name": "icons", "type": "Object", "shared": True,
        "predicates": [{"op": "contains", "path": "ObjectIdentity/ObjectName",
                        "text": "icon"}]})
    assert saved.status_code == 200
    query_id = saved.json()["id"]
    entity_id = make_entity(client, editor, edits=name_edit("Great icon"))
    run = client.post(f"/api/v1/queries/{query_id}/run", headers=editor_b)
    assert run.json() == {"ids": [entity_id]}
    listed = client.get("/api/v1/queries", headers=editor_b).json()
    assert [q["id"] for q in listed] == [query_id]
    denied = client.request("DELETE", f"/api/v1/queries/{query_id}",
                            headers=editor_b)
    assert denied.status_code == 400
    assert client.request("DELETE", f"/api/v1/queries/{query_id}",
                          headers=editor).status_code == 200


def test_backlinks_endpoint(client, editor):
    location = make_entity(client, editor, type_name="Location",
                           edits=[{"path": "Name",
                                   "value": {"kind": "text", "text": "Athos"}}])
    obj = make_entity(client, editor, edits=name_edit("icon") + [
        {"path": "ObjectIdentity/CurrentLocation",
         "value": {"kind": "link", "type": "Location", "id": location,
                   "label": "Athos"}}])
    backlinks = client.get(f"/api/v1/entities/{location}/backlinks",
                           headers=editor).json()
    assert backlinks == [{"referrer": obj,
                          "path": "ObjectIdentity/CurrentLocation"}]


def test_vocab_term_flow(client, editor, org_admin):
    added = client.post("/api/v1/vocab/location-type/terms", headers=editor,
                        json={"label": "Skete "})
    assert added.status_code == 200
    first = added.json()
    again = client.post("/api/v1/vocab/location-type/terms", headers=editor,
                        json={"label": "skete"})
    assert again.json() == {"id": first["id"], "created": False}
    # static vocabulary rejects editors but accepts administrators
    rejected = client.post("/api/v1/vocab/object-category/terms", headers=editor,
                           json={"label": "panagiarion"})
    assert rejected.status_code == 403
    accepted = client.post("/api/v1/vocab/object-category/terms", headers=org_admin,
                           json={"label": "panagiarion"})
    assert accepted.status_code == 200


def test_vocab_merge_endpoint(client, editor, org_admin):
    loser = client.post("/api/v1/vocab/location-type/terms", headers=editor,
                        json={"label": "monastiri"}).json()["id"]
    entity_id = make_entity(client, editor, type_name="Location", edits=[
        {"path": "Name", "value": {"kind": "text", "text": "Lavra"}},
        {"path": "LocationType",
         "value": {"kind": "term", "vocab": "location-type", "id": loser,
                   "label": "monastiri"}}])
    merged = client.post("/api/v1/vocab/location-type/merge", headers=org_admin,
                         json={"winner": "monastery", "losers": [loser]})
    assert merged.status_code == 200
    assert merged.json()["documents"] == [entity_id]
    doc = client.get(f"/api/v1/entities/{entity_id}", headers=editor).json()
    assert doc["values"]["LocationType"]["id"] == "monastery"


def test_thesaurus_endpoints(client, editor, org_admin):
    detail = client.get("/api/v1/thesaurus/objkind", headers=editor).json()
    icon = next(c for c in detail["concepts"] if c["id"] == "icon")
    assert "religious-object" in icon["broader"]
    cycle = client.post("/api/v1/thesaurus/objkind", headers=org_admin,
                        json={"command": "set-broader", "id": "religious-object",
                              "broader": "icon"})
    assert cycle.status_code == 400
    skos = client.get("/api/v1/thesaurus/objkind/skos?format=rdf-nt",
                      headers=editor)
    assert "skos/core#Concept" in skos.text


def test_parse_date_endpoint(client):
    good = client.get("/api/v1/parse-date?expr=ca.%201920").json()
    assert good == {"expr": "ca. 1920", "ast": "ca. 1920",
                    "earliest": 1910, "latest": 1930}
    bad = client.get("/api/v1/parse-date?expr=whenever")
    assert bad.status_code == 400
    assert bad.json()["code"] == "bad-time-expression"


def test_gazetteer_endpoint(client, editor):
    records = client.get("/api/v1/gazetteer?name=Mount Athos&source=tgn",
                         headers=editor).json()
    assert records and records[0]["name"] == "Mount Athos"
    assert client.get("/api/v1/gazetteer?name=x&source=osm",
                      headers=editor).status_code == 400


def test_map_endpoint(client, editor):
    loc = make_entity(client, editor, type_name="Location", edits=[
        {"path": "Name", "value": {"kind": "text", "text": "Athos"}},
        {"path": "Coordinates",
         "value": {"kind": "geo", "geometry": "point", "points": [[40.157, 24.326]]}}])
    bare = make_entity(client, editor, type_name="Location", edits=[
        {"path": "Name", "value": {"kind": "text", "text": "Nowhere"}}])
    result = client.get(f"/api/v1/map?ids={loc},{bare}", headers=editor).json()
    assert len(result["features"]) == 1
    assert result["features"][0]["kind"] == "point"
    assert result["unresolved"] == [{"entity": bare, "reason": "no coordinates"}]


def test_export_dataset_archive(client, editor):
    make_entity(client, editor, edits=name_edit("one"))
    make_entity(client, editor, type_name="Book", edits=[
        {"path": "Title", "value": {"kind": "text", "text": "Chronicle"}}])
    first = client.get("/api/v1/export?format=xml&org=org1", headers=editor)
    archive = zipfile.ZipFile(io.BytesIO(first.content))
    assert len(archive.namelist()) == 2
    again = client.get("/api/v1/export?format=xml&org=org1", headers=editor)
    assert first.content == again.content  # byte-identical archives
    graph = client.get("/api/v1/export?format=rdf-nt&org=org1", headers=editor)
    nt = zipfile.ZipFile(io.BytesIO(graph.content)).read("export.nt").decode()
    assert "E22_Human-Made_Object" in nt      # mapping file present
    assert "/naive/Title" in nt               # Book falls back to naive


def test_public_surface_flag(client, inst, editor, org_admin):
    entity_id = make_entity(client, editor, edits=name_edit("published thing"))
    client.post(f"/api/v1/entities/{entity_id}/status", headers=editor,
                json={"target": "pending"})
    client.post(f"/api/v1/entities/{entity_id}/status", headers=org_admin,
                json={"target": "published"})
    assert client.get(f"/public/v1/entities/{entity_id}").status_code == 404
    inst.config.public_read = True
    assert client.get(f"/public/v1/entities/{entity_id}").status_code == 200
    unpublished = make_entity(client, editor, edits=name_edit("draft"))
    assert client.get(f"/public/v1/entities/{unpublished}").status_code == 404
