from __future__ import annotations

import pytest

from scriptorium.app import DEFAULT_MAP_GEOMETRY
from scriptorium.mapfeatures import MapAssembler
from scriptorium.values import Coordinates, EntityLink, ExternalPlace, PlainText


@pytest.fixture
def assembler(inst):
    return MapAssembler(inst.store, DEFAULT_MAP_GEOMETRY, inst.access)


def location(inst, name, point=None, place=None):
    doc = inst.store.create_entity("Location", "org1", "editor_a_org1")
    edits = [("Name", PlainText(name))]
    if point:
        edits.append(("Coordinates", Coordinates("point", (point,))))
    if place:
        edits.append(("ExternalPlaceId", place))
    inst.store.apply_field_edits(doc.id, edits, 0)
    return doc.id


def transfer(inst, name, from_id=None, to_id=None):
    doc = inst.store.create_entity("ObjectTransfer", "org1", "editor_a_org1")
    edits = [("TransferCore/TransferName", PlainText(name))]
    if from_id:
        edits.append(("TransferCore/FromLocation",
                      EntityLink("Location", from_id, "from")))
    if to_id:
        edits.append(("TransferCore/ToLocation",
                      EntityLink("Location", to_id, "to")))
    inst.store.apply_field_edits(doc.id, edits, 0)
    return doc.id


def test_two_locations_two_points(inst, assembler, users):
    a = location(inst, "Athos", point=(40.157, 24.326))
    b = location(inst, "Moscow", place=ExternalPlace("tgn", "7010873", 55.752, 37.616))
    out = assembler.assemble([a, b], viewer=users["guest_org1"])
    assert [f.kind for f in out.features] == ["point", "point"]
    assert out.features[0].geometry == (40.157, 24.326)
    assert out.features[1].geometry == (55.752, 37.616)
    assert out.unresolved == []


def test_object_point_at_current_location(inst, assembler):
    athos = location(inst, "Athos", point=(40.157, 24.326))
    obj = inst.store.create_entity("Object", "org1", "editor_a_org1")
    inst.store.apply_field_edits(obj.id, [
        ("ObjectIdentity/ObjectName", PlainText("icon")),
        ("ObjectIdentity/CurrentLocation", EntityLink("Location", athos, "Athos")),
    ], 0)
    out = assembler.assemble([obj.id])
    assert out.features[0].kind == "point"
    assert out.features[0].geometry == (40.157, 24.326)
    assert out.features[0].popup["ObjectIdentity/ObjectName"] == "icon"


def test_transfer_line_two_coordinate_pairs(inst, assembler):
    moscow = location(inst, "Moscow", point=(55.752, 37.616))
    athos = location(inst, "Athos", point=(40.157, 24.326))
    t = transfer(inst, "donation route", moscow, athos)
    out = assembler.assemble([t])
    (feature,) = out.features
    assert feature.kind == "line"
    assert feature.geometry == ((55.752, 37.616), (40.157, 24.326))
    assert not feature.degenerate


def test_degenerate_line_flagged(inst, assembler):
    here = location(inst, "Here", point=(40.0, 24.0))
    t = transfer(inst, "no-op move", here, here)
    out = assembler.assemble([t])
    assert out.features[0].degenerate


def test_route_line_set_with_unresolved(inst, assembler):
    moscow = location(inst, "Moscow", point=(55.752, 37.616))
    athos = location(inst, "Athos", point=(40.157, 24.326))
    belgrade = location(inst, "Belgrade", point=(44.818, 20.468))
    nowhere = location(inst, "Nowhere")  # no coordinates
    t1 = transfer(inst, "t1", moscow, athos)
    t2 = transfer(inst, "t2", athos, belgrade)
    t3 = transfer(inst, "t3", moscow, nowhere)
    route = inst.store.create_entity("Route", "org1", "editor_a_org1")
    inst.store.apply_field_edits(route.id, [
        ("RouteName", PlainText("icons southward")),
        ("ObjectTransfers[1]", EntityLink("ObjectTransfer", t1, "t1")),
        ("ObjectTransfers[2]", EntityLink("ObjectTransfer", t2, "t2")),
        ("ObjectTransfers[3]", EntityLink("ObjectTransfer", t3, "t3")),
    ], 0)
    out = assembler.assemble([route.id])
    (feature,) = out.features
    assert feature.kind == "line-set"
    assert len(feature.geometry) == 2
    assert out.unresolved == [{"entity": t3, "reason": "unresolvable to-location"}]


def test_missing_geometry_reported_not_dropped(inst, assembler):
    bare = location(inst, "Nowhere")
    out = assembler.assemble([bare, "loc-999999"])
    assert out.features == []
    assert {u["entity"] for u in out.unresolved} == {bare, "loc-999999"}


def test_cross_org_viewer_gets_unresolved(inst, assembler, users):
    a = location(inst, "Athos", point=(40.157, 24.326))
    out = assembler.assemble([a], viewer=users["guest_org2"])
    assert out.features == []
    assert out.unresolved == [{"entity": a, "reason": "not viewable"}]
