"""Command-line interface.

Local commands operate directly on a data directory and run with system
administrator rights (whoever can read the files owns the installation).
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import chrono
from .access import User
from .app import Installation
from .exporting import build_union_graph, load_mapping_specs, serialize_union
from .mapping import parse_mapping
from .schema import validate_schema

CLI_ACTOR = User("cli", "Command line", "system-admin")


def _open(data: str) -> Installation:
    return Installation.open(Path(data))


@click.group()
def main():
    """Collaborative documentation platform for historical research."""


@main.command()
@click.argument("expr")
def parse_date(expr):
    """Parse a historical time expression; prints one JSON object."""
    ast = chrono.parse_time_expression(expr)
    span = chrono.normalize_to_span(ast)
    click.echo(json.dumps({"expr": expr, "ast": chrono.format_expression(ast),
                           "earliest": span.earliest, "latest": span.latest}))


@main.group()
def provision():
    """Installation bootstrap and principal management."""


@provision.command()
@click.option("--data", required=True, type=click.Path())
@click.option("--admin-user", default="admin", show_default=True)
@click.option("--admin-password", default="admin", show_default=True)
@click.option("--base-iri", default=None)
def init(data, admin_user, admin_password, base_iri):
    """Create a fresh installation from the shipped seed catalog."""
    kwargs = {"admin_user": admin_user, "admin_password": admin_password}
    if base_iri:
        kwargs["base_iri"] = base_iri
    Installation.create(Path(data), **kwargs)
    click.echo(f"installation created at {data}")


@provision.command("create-org")
@click.option("--data", required=True, type=click.Path(exists=True))
@click.argument("org_id")
@click.argument("name")
@click.option("--editors-edit-all", is_flag=True)
def create_org(data, org_id, name, editors_edit_all):
    inst = _open(data)
    admin = next(u for u in inst.access.users.values() if u.role == "system-admin")
    inst.access.create_org(admin, org_id, name, editors_edit_all)
    inst.persist_admin()
    click.echo(f"organisation {org_id} created")


@provision.command("create-user")
@click.option("--data", required=True, type=click.Path(exists=True))
@click.argument("user_id")
@click.argument("display_name")
@click.option("--role", type=click.Choice(["org-admin", "editor", "guest"]),
              default="editor", show_default=True)
@click.option("--org", required=True)
@click.option("--password", prompt=True, hide_input=True)
def create_user(data, user_id, display_name, role, org, password):
    inst = _open(data)
    admin = next(u for u in inst.access.users.values() if u.role == "system-admin")
    inst.access.create_user(admin, user_id, display_name, role, org, password)
    inst.persist_admin()
    click.echo(f"user {user_id} ({role}) created in {org}")


@main.command()
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(data, host, port):
    """Run the HTTP service."""
    import uvicorn

    from .api import create_app

    uvicorn.run(create_app(_open(data)), host=host, port=port, log_level="warning")


@main.command("import")
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--org", required=True)
@click.option("--mode", type=click.Choice(["strict", "lenient", "strip"]),
              default="strict", show_default=True)
@click.option("--preserve-id", is_flag=True)
@click.argument("files", nargs=-1, type=click.Path(exists=True))
def import_cmd(data, org, mode, preserve_id, files):
    """Import entity XML files."""
    inst = _open(data)
    for name in files:
        report = inst.store.import_entity_xml(Path(name).read_text(encoding="utf-8"),
                                              org, actor=CLI_ACTOR, mode=mode,
                                              preserve_id=preserve_id)
        suffix = f" ({len(report.dangling_links)} dangling links)" \
            if report.dangling_links else ""
        click.echo(f"{name} -> {report.document.id}{suffix}")


@main.command()
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--format", "export_format",
              type=click.Choice(["xml", "rdf-nt", "rdf-ttl"]), default="xml",
              show_default=True)
@click.option("--type", "type_name", default=None, help="Limit to one entity type.")
@click.option("--org", default=None, help="Limit to one organisation.")
@click.option("--mapping", "mapping_file", type=click.Path(exists=True),
              default=None, help="Use this mapping file instead of the installed one.")
@click.option("--naive", is_flag=True, help="Force the ontology-agnostic export.")
@click.option("--out", required=True, type=click.Path())
def export(data, export_format, type_name, org, mapping_file, naive, out):
    """Export entities as XML files or as one RDF graph."""
    inst = _open(data)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    docs = [d for d in inst.store.all_documents()
            if (type_name is None or d.type_name == type_name)
            and (org is None or d.org_id == org)]
    docs.sort(key=lambda d: d.id)
    if export_format == "xml":
        for doc in docs:
            (out_dir / f"{doc.id}.xml").write_text(
                inst.store.export_entity_xml(doc.id), encoding="utf-8")
        click.echo(f"{len(docs)} entities written to {out_dir}")
        return
    if naive:
        specs = {}
    elif mapping_file:
        spec = parse_mapping(Path(mapping_file).read_text(encoding="utf-8"))
        specs = {spec.source_type: spec}
    else:
        specs = load_mapping_specs(inst.root / "mappings")
    graph, prefixes = build_union_graph(docs, specs, inst.config.base_iri)
    suffix = "nt" if export_format == "rdf-nt" else "ttl"
    target = out_dir / f"export.{suffix}"
    target.write_text(serialize_union(graph, prefixes, export_format),
                      encoding="utf-8")
    click.echo(f"{len(graph)} triples written to {target}")


@main.command()
@click.option("--data", required=True, type=click.Path(exists=True))
@click.option("--type", "type_name", default=None)
def validate(data, type_name):
    """Validate schemas and documents; prints one line per issue."""
    inst = _open(data)
    registry = inst.validation_registry()
    exit_code = 0
    for name in inst.schemas.type_names():
        if type_name and name != type_name:
            continue
        for issue in validate_schema(inst.schemas.latest(name), registry):
            click.echo(f"schema {name}: {issue.code}: {issue.message}")
            exit_code = 1
    for doc in sorted(inst.store.all_documents(), key=lambda d: d.id):
        if type_name and doc.type_name != type_name:
            continue
        for issue in inst.store.validate(doc.id):
            click.echo(f"{doc.id}: {issue.severity}: {issue.code}: {issue.message}")
            if issue.severity == "error":
                exit_code = 1
    sys.exit(exit_code)


@main.command("rebuild-index")
@click.option("--data", required=True, type=click.Path(exists=True))
def rebuild_index(data):
    """Rebuild all derived indexes from the XML files."""
    import time

    inst = _open(data)
    started = time.monotonic()
    backlinks = inst.query.rebuild_index()
    elapsed = time.monotonic() - started
    click.echo(f"indexed {len(list(inst.store.all_documents()))} documents, "
               f"{sum(len(v) for v in backlinks.values())} backlinks "
               f"in {elapsed:.2f}s")


@main.group()
def vocab():
    """Vocabulary administration."""


@vocab.command("list")
@click.option("--data", required=True, type=click.Path(exists=True))
def vocab_list(data):
    inst = _open(data)
    for v in sorted(inst.vocabs.vocabularies.values(), key=lambda v: v.vocab_id):
        live = sum(1 for t in v.terms.values() if not t.deprecated)
        click.echo(f"{v.vocab_id}\t{v.mode}\t{live} terms\t{v.name}")


@vocab.command("export")
@click.option("--data", required=True, type=click.Path(exists=True))
@click.argument("vocab_id")
def vocab_export(data, vocab_id):
    click.echo(_open(data).vocabs.export_vocabulary(vocab_id), nl=False)


@vocab.command("import")
@click.option("--data", required=True, type=click.Path(exists=True))
@click.argument("vocab_id")
@click.argument("file", type=click.Path(exists=True))
def vocab_import(data, vocab_id, file):
    inst = _open(data)
    created = inst.vocabs.import_vocabulary(
        vocab_id, Path(file).read_text(encoding="utf-8"), CLI_ACTOR.user_id)
    inst.persist_admin()
    click.echo(f"{created} new terms")


@vocab.command("duplicates")
@click.option("--data", required=True, type=click.Path(exists=True))
@click.argument("vocab_id")
def vocab_duplicates(data, vocab_id):
    inst = _open(data)
    for cluster in inst.vocabs.find_duplicate_candidates(vocab_id):
        labels = [inst.vocabs.label_of(vocab_id, t) for t in cluster]
        click.echo("\t".join(f"{t} ({label})" for t, label in zip(cluster, labels)))


@vocab.command("merge")
@click.option("--data", required=True, type=click.Path(exists=True))
@click.argument("vocab_id")
@click.argument("winner")
@click.argument("losers", nargs=-1, required=True)
def vocab_merge(data, vocab_id, winner, losers):
    inst = _open(data)
    report = inst.vocabs.merge_terms(vocab_id, winner, list(losers),
                                     CLI_ACTOR.user_id, documents=inst.store)
    inst.persist_admin()
    click.echo(f"deprecated {len(report.deprecated_term_ids)} terms, "
               f"rewrote {len(report.touched_document_ids)} documents")


if __name__ == "__main__":
    main()
