"""Scriptorium: collaborative documentation of historical research data.

Entities are documented as schema-validated tree-structured XML cards,
terminology is controlled through vocabularies and thesauri, and the
corpus exports to a CIDOC-CRM-compliant RDF knowledge graph.
"""

__version__ = "0.1.0"
