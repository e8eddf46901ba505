"""Installation wiring: one data directory holding everything a running
instance needs: schemas, vocabularies, thesauri, principals, documents,
mapping files and configuration."""
from __future__ import annotations

import json
import shutil
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import chrono
from .access import AccessControl
from .geo import GazetteerClient
from .query import QueryService
from .schema import Registry, SchemaRegistry, parse_schema
from .store import DocumentStore
from .vocab import Thesaurus, ThesaurusStore, VocabularyStore

DEFAULT_BASE_IRI = "http://scriptorium.example.org/kg"

# which field paths drive map geometry, per seed entity type
DEFAULT_MAP_GEOMETRY = {
    "Location": {"kind": "point", "coordinates": ["Coordinates", "ExternalPlaceId"]},
    "Object": {"kind": "point", "via": "ObjectIdentity/CurrentLocation"},
    "ObjectTransfer": {"kind": "line", "from": "TransferCore/FromLocation",
                       "to": "TransferCore/ToLocation"},
    "Route": {"kind": "line-set", "transfers": "ObjectTransfers"},
}


@dataclass
class InstallationConfig:
    base_iri: str = DEFAULT_BASE_IRI
    circa_radius: int = chrono.DEFAULT_CIRCA_RADIUS
    public_read: bool = False
    org_admin_edits_all: bool = True
    session_idle_hours: float = 12.0
    map_geometry: dict = field(default_factory=lambda: dict(DEFAULT_MAP_GEOMETRY))

    def save(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")

    @classmethod
    def load(cls, path: Path) -> "InstallationConfig":
        data = json.loads(path.read_text(encoding="utf-8"))
        config = cls()
        for key, value in data.items():
            if hasattr(config, key):
                setattr(config, key, value)
        return config


def _data_dir() -> Path:
    return Path(str(resources.files("scriptorium").joinpath("data")))


class Installation:
    def __init__(self, root: Path, config: InstallationConfig):
        self.root = Path(root)
        self.config = config
        self.schemas = SchemaRegistry()
        self.vocabs = VocabularyStore()
        self.thesauri = ThesaurusStore()
        self.access = AccessControl(
            org_admin_edits_all=config.org_admin_edits_all,
            session_idle_seconds=int(config.session_idle_hours * 3600))
        self.normalize = lambda text: chrono.parse_to_span(
            text, circa_radius=self.config.circa_radius)
        self.store = DocumentStore(self.root, self.schemas, self.vocabs,
                                   self.thesauri, self.access,
                                   normalize=self.normalize)
        self.query = QueryService(self.store, self.access, self.normalize)
        self.geo = GazetteerClient()

    # -- lifecycle ------------------------------------------------------------

    @classmethod
    def create(cls, root: Path, admin_user: str = "admin",
               admin_password: str = "admin",
               base_iri: str = DEFAULT_BASE_IRI) -> "Installation":
        """Initialize a fresh data directory from the shipped seeds."""
        root = Path(root)
        if (root / "admin" / "config.json").exists():
            raise FileExistsError(f"installation already present at {root}")
        seeds = _data_dir()
        (root / "admin").mkdir(parents=True, exist_ok=True)
        (root / "schemas").mkdir(parents=True, exist_ok=True)
        (root / "mappings").mkdir(parents=True, exist_ok=True)
        for src in sorted((seeds / "schemas").glob("*.xml")):
            shutil.copy(src, root / "schemas" / src.name)
        for src in sorted((seeds / "mappings").glob("*.xml")):
            shutil.copy(src, root / "mappings" / src.name)
        shutil.copy(seeds / "vocabularies.xml", root / "admin" / "vocabularies.xml")
        for src in sorted(seeds.glob("thesaurus-*.xml")):
            shutil.copy(src, root / "admin" / src.name)
        shutil.copy(seeds / "cidoc_crm_terms.txt", root / "admin" / "cidoc_crm_terms.txt")
        config = InstallationConfig(base_iri=base_iri)
        config.save(root / "admin" / "config.json")
        installation = cls(root, config)
        installation._load_catalogs()
        installation.access.bootstrap_system_admin(admin_user, "System administrator",
                                                   admin_password)
        installation.access.save(root / "admin" / "principals.xml")
        installation.store.load()
        return installation

    @classmethod
    def open(cls, root: Path) -> "Installation":
        root = Path(root)
        config = InstallationConfig.load(root / "admin" / "config.json")
        installation = cls(root, config)
        installation._load_catalogs()
        installation.access.load(root / "admin" / "principals.xml")
        installation.store.load()
        installation.query.rebuild_index()
        queries_file = root / "admin" / "queries.xml"
        if queries_file.exists():
            installation.query.load_queries_file(queries_file)
        return installation

    def _load_catalogs(self) -> None:
        for path in sorted((self.root / "schemas").glob("*.xml")):
            self.schemas.publish(parse_schema(path.read_text(encoding="utf-8")))
        vocab_file = self.root / "admin" / "vocabularies.xml"
        if vocab_file.exists():
            self.vocabs.load(vocab_file)
        for path in sorted((self.root / "admin").glob("thesaurus-*.xml")):
            thesaurus = Thesaurus.load(path)
            self.thesauri.thesauri[thesaurus.thesaurus_id] = thesaurus

    # -- persistence of admin state -------------------------------------------

    def persist_admin(self) -> None:
        self.access.save(self.root / "admin" / "principals.xml")
        self.vocabs.save(self.root / "admin" / "vocabularies.xml")
        for thesaurus in self.thesauri.thesauri.values():
            thesaurus.save(self.root / "admin" / f"thesaurus-{thesaurus.thesaurus_id}.xml")
        self.query.save_queries_file(self.root / "admin" / "queries.xml")

    # -- derived views ----------------------------------------------------------

    def validation_registry(self) -> Registry:
        return Registry(
            entity_types=set(self.schemas.type_names()),
            vocabularies={vid: v.mode for vid, v in self.vocabs.vocabularies.items()},
            thesauri=set(self.thesauri.thesauri),
        )

    def mapping_path(self, type_name: str) -> Path | None:
        path = self.root / "mappings" / f"{type_name}.xml"
        return path if path.exists() else None

    def ontology_terms_path(self) -> Path:
        return self.root / "admin" / "cidoc_crm_terms.txt"
