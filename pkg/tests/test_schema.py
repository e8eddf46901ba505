from __future__ import annotations

import pytest

from scriptorium.schema import (FieldDef, FieldKind, GroupDef, PathError,
                                Registry, SchemaError, SchemaRegistry,
                                count_entity_link_fields, extend_schema,
                                iter_leaves, parse_field_path, parse_schema,
                                render_field_path, resolve_field_path,
                                serialize_schema, strip_indices,
                                validate_schema)

MINIMAL = """
<schema type="Object" version="1">
  <field name="ObjectName" kind="text-plain" required="true"/>
</schema>
"""

# the Object measurement fragment: two nested multiple groups, three leaves
MEASUREMENT = """
<schema type="Object" version="1">
  <group name="Measurement" multiple="true">
    <group name="Dimension" multiple="true">
      <field name="DimensionType" kind="vocab-term" vocab="dimension-type" mode="static"/>
      <field name="DimensionValue" kind="number"/>
      <field name="Unit" kind="vocab-term" vocab="unit" mode="static"/>
    </group>
  </group>
  <field name="ObjectName" kind="text-plain"/>
  <summary>
    <col path="ObjectName"/>
  </summary>
</schema>
"""


def test_minimal_schema_one_leaf():
    schema = parse_schema(MINIMAL)
    leaves = list(iter_leaves(schema))
    assert len(leaves) == 1
    assert leaves[0][0] == "ObjectName"
    assert leaves[0][1].required


def test_measurement_fragment_shape():
    schema = parse_schema(MEASUREMENT)
    leaves = [p for p, _ in iter_leaves(schema)]
    assert leaves == ["Measurement/Dimension/DimensionType",
                      "Measurement/Dimension/DimensionValue",
                      "Measurement/Dimension/Unit",
                      "ObjectName"]
    measurement = schema.root.child("Measurement")
    assert isinstance(measurement, GroupDef) and measurement.multiple
    dimension = measurement.child("Dimension")
    assert isinstance(dimension, GroupDef) and dimension.multiple


def test_duplicate_sibling_names_rejected():
    bad = """
    <schema type="Object" version="1">
      <field name="Name" kind="text-plain"/>
      <field name="Name" kind="text-plain"/>
    </schema>
    """
    with pytest.raises(SchemaError, match="duplicate sibling"):
        parse_schema(bad)


def test_syntax_error_reports_position():
    with pytest.raises(SchemaError) as err:
        parse_schema("<schema type='Object'><field </schema>")
    assert err.value.line is not None


def test_unknown_field_kind():
    with pytest.raises(SchemaError, match="unknown field kind"):
        parse_schema('<schema type="X" version="1"><field name="A" kind="blob"/></schema>')


def test_entity_link_needs_targets():
    with pytest.raises(SchemaError, match="targets"):
        parse_schema('<schema type="X" version="1">'
                     '<field name="A" kind="entity-link"/></schema>')


def test_group_without_leaf_rejected():
    with pytest.raises(SchemaError, match="no descendant field"):
        parse_schema('<schema type="X" version="1">'
                     '<group name="G" multiple="false"></group>'
                     '<field name="A" kind="text-plain"/></schema>')


def test_field_path_parse_render():
    segs = parse_field_path("Measurement[1]/Dimension[2]/DimensionValue")
    assert segs == [("Measurement", 1), ("Dimension", 2), ("DimensionValue", None)]
    assert render_field_path(segs) == "Measurement[1]/Dimension[2]/DimensionValue"
    assert strip_indices("Measurement[1]/Dimension[2]/DimensionValue") == \
        "Measurement/Dimension/DimensionValue"


def test_resolve_field_path():
    schema = parse_schema(MEASUREMENT)
    leaf = resolve_field_path(schema, "Measurement[1]/Dimension[2]/DimensionValue")
    assert isinstance(leaf, FieldDef) and leaf.kind.kind == "number"
    group = resolve_field_path(schema, "Measurement/Dimension")
    assert isinstance(group, GroupDef)


def test_resolve_unknown_segment():
    schema = parse_schema(MEASUREMENT)
    with pytest.raises(PathError) as err:
        resolve_field_path(schema, "Measurement[1]/Bogus")
    assert err.value.code == "no-such-segment"


def test_index_on_singular_segment():
    schema = parse_schema(MEASUREMENT)
    with pytest.raises(PathError) as err:
        resolve_field_path(schema, "ObjectName[2]")
    assert err.value.code == "index-on-singular-segment"


def test_every_resolvable_path_is_unique():
    schema = parse_schema(MEASUREMENT)
    for path, leaf in iter_leaves(schema):
        assert resolve_field_path(schema, path) is leaf


def test_validate_schema_clean():
    schema = parse_schema(MEASUREMENT)
    registry = Registry(entity_types={"Object"},
                        vocabularies={"dimension-type": "static", "unit": "static"})
    assert validate_schema(schema, registry) == []


def test_validate_schema_unresolved_references():
    xml = """
    <schema type="Object" version="1">
      <field name="Where" kind="entity-link" targets="Location"/>
      <field name="Category" kind="vocab-term" vocab="object-category" mode="static"/>
      <field name="Kind" kind="thesaurus-term" thesaurus="objkind"/>
      <summary><col path="Object/Nope"/></summary>
    </schema>
    """
    schema = parse_schema(xml)
    issues = validate_schema(schema, Registry(entity_types={"Object"}))
    codes = sorted(i.code for i in issues)
    assert codes == ["dangling-summary-column", "unresolved-target-type",
                     "unresolved-thesaurus", "unresolved-vocabulary"]


def test_serialize_round_trip():
    for xml in (MINIMAL, MEASUREMENT):
        schema = parse_schema(xml)
        assert parse_schema(serialize_schema(schema)) == schema


def test_extend_schema_additive():
    schema = parse_schema(MEASUREMENT)
    extended = extend_schema(schema, [
        ("", FieldDef("Stamp", FieldKind("text-plain"))),
        ("", GroupDef("ObjectHistory", children=[
            GroupDef("Use", multiple=True, children=[
                FieldDef("UseName", FieldKind("text-plain"))])])),
    ])
    assert extended.schema_version == 2
    assert schema.schema_version == 1  # original untouched
    leaf = resolve_field_path(extended, "ObjectHistory/Use/UseName")
    assert isinstance(leaf, FieldDef)
    # every old path still resolves identically
    for path, _ in iter_leaves(schema):
        assert isinstance(resolve_field_path(extended, path), FieldDef)


def test_extend_schema_collision():
    schema = parse_schema(MEASUREMENT)
    with pytest.raises(SchemaError, match="collision"):
        extend_schema(schema, [("", FieldDef("ObjectName", FieldKind("text-plain")))])


def test_extend_schema_parent_not_found():
    schema = parse_schema(MEASUREMENT)
    with pytest.raises(SchemaError, match="parent not found"):
        extend_schema(schema, [("Nowhere", FieldDef("X", FieldKind("text-plain")))])


def test_registry_version_must_increase():
    registry = SchemaRegistry()
    schema = parse_schema(MEASUREMENT)
    registry.publish(schema)
    with pytest.raises(SchemaError, match="must increase"):
        registry.publish(parse_schema(MEASUREMENT))
    registry.publish(extend_schema(schema, [("", FieldDef("Extra", FieldKind("text-plain")))]))
    assert registry.latest("Object").schema_version == 2
    assert registry.get("Object", 1).schema_version == 1


def test_link_field_census():
    xml = """
    <schema type="X" version="1">
      <field name="A" kind="entity-link" targets="Location"/>
      <field name="B" kind="text-plain"/>
      <group name="G" multiple="true">
        <field name="C" kind="entity-link" targets="Object,Person"/>
      </group>
    </schema>
    """
    assert count_entity_link_fields([parse_schema(xml)]) == 2
