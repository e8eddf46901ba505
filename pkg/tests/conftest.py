from __future__ import annotations

import pytest

from scriptorium.access import AccessControl, User
from scriptorium.app import Installation
from scriptorium.schema import SchemaRegistry, parse_schema
from scriptorium.store import DocumentStore
from scriptorium.vocab import ThesaurusStore, VocabularyStore

OBJECT_SCHEMA = """
<schema type="Object" version="1">
  <group name="ObjectIdentity" multiple="false">
    <field name="ObjectName" kind="text-plain" required="true"/>
    <field name="Category" kind="vocab-term" vocab="object-category" mode="static"/>
    <field name="ObjectKind" kind="thesaurus-term" thesaurus="objkind"/>
    <field name="CurrentLocation" kind="entity-link" targets="Location"/>
    <field name="CreationDate" kind="time-expression"/>
    <field name="MainImage" kind="digital-file" media="image"/>
  </group>
  <group name="DetailedObjectDescription" multiple="false">
    <field name="OtherObjectNames" kind="text-plain" multiple="true"/>
    <field name="Decoration" kind="text-formatted"/>
    <group name="Measurement" multiple="true">
      <group name="Dimension" multiple="true">
        <field name="DimensionType" kind="vocab-term" vocab="dimension-type" mode="static"/>
        <field name="DimensionValue" kind="number"/>
        <field name="Unit" kind="vocab-term" vocab="unit" mode="static"/>
      </group>
    </group>
  </group>
  <summary>
    <col path="ObjectIdentity/ObjectName"/>
    <col path="ObjectIdentity/CurrentLocation"/>
    <col path="ObjectIdentity/Category"/>
  </summary>
  <map>
    <col path="ObjectIdentity/ObjectName"/>
  </map>
</schema>
"""

LOCATION_SCHEMA = """
<schema type="Location" version="1">
  <field name="Name" kind="text-plain" required="true"/>
  <field name="LocationType" kind="vocab-term" vocab="location-type" mode="dynamic"/>
  <group name="GeopoliticalHierarchy" multiple="false">
    <field name="Country" kind="vocab-term" vocab="country" mode="static"/>
  </group>
  <field name="Coordinates" kind="geo-coordinates"/>
  <field name="ExternalPlaceId" kind="geo-external-id"/>
  <summary>
    <col path="Name"/>
    <col path="GeopoliticalHierarchy/Country"/>
  </summary>
</schema>
"""


def build_vocabs() -> VocabularyStore:
    vocabs = VocabularyStore()
    seed = {
        ("object-category", "Object category", "static"):
            [("icon", "icon"), ("triptych", "triptych"), ("cross", "cross")],
        ("dimension-type", "Dimension type", "static"):
            [("height", "height"), ("width", "width")],
        ("unit", "Unit", "static"): [("cm", "cm"), ("mm", "mm")],
        ("location-type", "Location type", "dynamic"):
            [("city", "city"), ("monastery", "monastery")],
        ("country", "Country", "static"):
            [("russia", "Russia"), ("greece", "Greece")],
    }
    for (vocab_id, name, mode), terms in seed.items():
        vocabs.create_vocabulary(vocab_id, name, mode)
        for term_id, label in terms:
            vocabs.add_term(vocab_id, label, "en", "seed",
                            allow_static=True, term_id=term_id)
    return vocabs


def build_thesauri() -> ThesaurusStore:
    thesauri = ThesaurusStore()
    objkind = thesauri.create("objkind")
    objkind.add_concept("religious-object", {"en": "religious object"})
    objkind.add_concept("icon", {"en": "icon"}, broader={"religious-object"})
    return thesauri


def build_access() -> AccessControl:
    access = AccessControl()
    admin = access.bootstrap_system_admin("root", "Root", "root-pw")
    access.create_org(admin, "org1", "First Institute")
    access.create_org(admin, "org2", "Second Institute")
    access.create_user(admin, "admin1", "Org One Admin", "org-admin", "org1", "pw")
    access.create_user(admin, "admin2", "Org Two Admin", "org-admin", "org2", "pw")
    for org in ("org1", "org2"):
        org_admin = access.users[f"admin{org[-1]}"]
        access.create_user(org_admin, f"editor_a_{org}", f"Editor A {org}",
                           "editor", org, "pw")
        access.create_user(org_admin, f"editor_b_{org}", f"Editor B {org}",
                           "editor", org, "pw")
        access.create_user(org_admin, f"guest_{org}", f"Guest {org}",
                           "guest", org, "pw")
    return access


@pytest.fixture
def schemas() -> SchemaRegistry:
    registry = SchemaRegistry()
    registry.publish(parse_schema(OBJECT_SCHEMA))
    registry.publish(parse_schema(LOCATION_SCHEMA))
    return registry


@pytest.fixture
def vocabs() -> VocabularyStore:
    return build_vocabs()


@pytest.fixture
def thesauri() -> ThesaurusStore:
    return build_thesauri()


@pytest.fixture
def access() -> AccessControl:
    return build_access()


@pytest.fixture
def store(tmp_path, schemas, vocabs, thesauri, access) -> DocumentStore:
    return DocumentStore(tmp_path / "inst", schemas, vocabs, thesauri, access)


@pytest.fixture
def plain_store(tmp_path, schemas, vocabs, thesauri) -> DocumentStore:
    """Store without access control, for mechanics-focused tests."""
    return DocumentStore(tmp_path / "inst", schemas, vocabs, thesauri, access=None)


@pytest.fixture
def users(access) -> dict[str, User]:
    return access.users


def provision_installation(root) -> Installation:
    """Full installation with the standard two-org principal layout."""
    inst = Installation.create(root, admin_user="root", admin_password="root-pw")
    admin = inst.access.users["root"]
    inst.access.create_org(admin, "org1", "First Institute")
    inst.access.create_org(admin, "org2", "Second Institute")
    inst.access.create_user(admin, "admin1", "Org One Admin", "org-admin", "org1", "pw")
    inst.access.create_user(admin, "admin2", "Org Two Admin", "org-admin", "org2", "pw")
    for org in ("org1", "org2"):
        org_admin = inst.access.users[f"admin{org[-1]}"]
        inst.access.create_user(org_admin, f"editor_a_{org}", f"Editor A {org}",
                                "editor", org, "pw")
        inst.access.create_user(org_admin, f"editor_b_{org}", f"Editor B {org}",
                                "editor", org, "pw")
        inst.access.create_user(org_admin, f"guest_{org}", f"Guest {org}",
                                "guest", org, "pw")
    inst.persist_admin()
    return inst


@pytest.fixture
def inst(tmp_path) -> Installation:
    return provision_installation(tmp_path / "inst")
