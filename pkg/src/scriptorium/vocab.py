"""Controlled vocabularies and the embedded multilingual thesaurus.

Dynamic vocabularies grow at data-entry time and therefore accumulate
near-duplicate terms; the curation workflow here detects duplicate
candidates under aggressive normalization and merges confirmed ones,
rewriting every referencing document. Merged terms remain as deprecated
tombstones so previously exported XML stays interpretable.
"""
from __future__ import annotations

import re
import unicodedata
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

from . import rdf
from .schema import DEFAULT_LANG


class VocabularyError(ValueError):
    pass


class StaticVocabularyError(VocabularyError):
    """A non-admin tried to grow a static vocabulary."""


class VocabImportError(VocabularyError):
    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


@dataclass
class Term:
    term_id: str
    labels: dict[str, str]
    created_by: str = ""
    deprecated: bool = False
    merged_into: str | None = None


@dataclass
class Vocabulary:
    vocab_id: str
    name: str
    mode: str  # static | dynamic
    terms: dict[str, Term] = field(default_factory=dict)
    next_seq: int = 1


def normalize_label(label: str) -> str:
    """Entry-time dedupe key: lowercase, trim, collapse internal whitespace."""
    return re.sub(r"\s+", " ", label.strip()).lower()


def aggressive_key(label: str) -> str:
    """Candidate-detection key: case fold, strip diacritics and punctuation,
    collapse whitespace. Used for review lists only, never for auto-merge."""
    s = unicodedata.normalize("NFKD", label)
    s = "".join(c for c in s if not unicodedata.combining(c))
    s = "".join(" " if unicodedata.category(c).startswith("P") else c for c in s)
    return re.sub(r"\s+", " ", s).strip().casefold()


@dataclass
class CurationReport:
    vocab_id: str
    winner_term_id: str
    deprecated_term_ids: list[str]
    touched_document_ids: list[str]


class VocabularyStore:
    def __init__(self):
        self.vocabularies: dict[str, Vocabulary] = {}

    def create_vocabulary(self, vocab_id: str, name: str, mode: str) -> Vocabulary:
        if mode not in ("static", "dynamic"):
            raise VocabularyError(f"bad vocabulary mode {mode!r}")
        if vocab_id in self.vocabularies:
            raise VocabularyError(f"vocabulary {vocab_id!r} already exists")
        vocab = Vocabulary(vocab_id, name, mode)
        self.vocabularies[vocab_id] = vocab
        return vocab

    def get(self, vocab_id: str) -> Vocabulary:
        vocab = self.vocabularies.get(vocab_id)
        if vocab is None:
            raise VocabularyError(f"unknown vocabulary {vocab_id!r}")
        return vocab

    def find_term(self, vocab_id: str, term_id: str) -> Term | None:
        vocab = self.vocabularies.get(vocab_id)
        if vocab is None:
            return None
        term = vocab.terms.get(term_id)
        if term is None or term.deprecated:
            return None
        return term

    def label_of(self, vocab_id: str, term_id: str, lang: str = DEFAULT_LANG) -> str:
        term = self.get(vocab_id).terms.get(term_id)
        if term is None:
            return term_id
        return term.labels.get(lang) or term.labels.get(DEFAULT_LANG) or term_id

    def _match_by_label(self, vocab: Vocabulary, label: str, lang: str) -> Term | None:
        key = normalize_label(label)
        for term in vocab.terms.values():
            if term.deprecated:
                continue
            existing = term.labels.get(lang)
            if existing is not None and normalize_label(existing) == key:
                return term
        return None

    def _fresh_term_id(self, vocab: Vocabulary) -> str:
        while True:
            term_id = f"t-{vocab.next_seq:06d}"
            vocab.next_seq += 1
            if term_id not in vocab.terms:
                return term_id

    def add_term(self, vocab_id: str, label: str, lang: str, user_id: str,
                 allow_static: bool = False,
                 term_id: str | None = None) -> tuple[str, bool]:
        """Add a term, or return the existing one whose normalized label
        matches. Returns (term_id, created)."""
        vocab = self.get(vocab_id)
        if not label or not label.strip():
            raise VocabularyError("empty term label")
        if vocab.mode == "static" and not allow_static:
            raise StaticVocabularyError(
                f"vocabulary {vocab_id!r} is static; terms are managed by administrators")
        existing = self._match_by_label(vocab, label, lang)
        if existing is not None:
            return existing.term_id, False
        if term_id is None or term_id in vocab.terms:
            term_id = self._fresh_term_id(vocab)
        vocab.terms[term_id] = Term(term_id, {lang: label.strip()}, created_by=user_id)
        return term_id, True

    def find_duplicate_candidates(self, vocab_id: str) -> list[list[str]]:
        """Clusters of non-deprecated terms whose labels collide under the
        aggressive key, per language. Singletons are dropped; nothing is
        merged automatically."""
        vocab = self.get(vocab_id)
        clusters: dict[tuple[str, str], list[str]] = {}
        for term in vocab.terms.values():
            if term.deprecated:
                continue
            for lang, label in term.labels.items():
                clusters.setdefault((lang, aggressive_key(label)), []).append(term.term_id)
        out = []
        for ids in clusters.values():
            unique = sorted(set(ids))
            if len(unique) > 1:
                out.append(unique)
        return sorted(out)

    def merge_terms(self, vocab_id: str, winner_term_id: str,
                    loser_term_ids: list[str], actor_user_id: str,
                    documents=None) -> CurationReport:
        """Deprecate the losers in favor of the winner and rewrite every
        referencing document (one new revision each, attributed to the actor)."""
        vocab = self.get(vocab_id)
        if winner_term_id in loser_term_ids:
            raise VocabularyError("the winner cannot be among the losers")
        winner = vocab.terms.get(winner_term_id)
        if winner is None or winner.deprecated:
            raise VocabularyError(f"unknown or deprecated winner term {winner_term_id!r}")
        losers = []
        for term_id in loser_term_ids:
            term = vocab.terms.get(term_id)
            if term is None:
                raise VocabularyError(f"unknown term {term_id!r}")
            losers.append(term)
        touched: list[str] = []
        if documents is not None:
            winner_label = winner.labels.get(DEFAULT_LANG) or next(iter(winner.labels.values()), winner_term_id)
            touched = documents.rewrite_term_refs(
                vocab_id, set(loser_term_ids), winner_term_id, winner_label,
                actor_user_id)
        for term in losers:
            term.deprecated = True
            term.merged_into = winner_term_id
        return CurationReport(vocab_id, winner_term_id,
                              [t.term_id for t in losers], touched)

    # -- import/export -----------------------------------------------------

    def export_vocabulary(self, vocab_id: str) -> str:
        """`termId<TAB>lang<TAB>label` lines, sorted by term id then language.
        Deprecated tombstones are internal state and are not exported."""
        vocab = self.get(vocab_id)
        lines = []
        for term_id in sorted(vocab.terms):
            term = vocab.terms[term_id]
            if term.deprecated:
                continue
            for lang in sorted(term.labels):
                lines.append(f"{term_id}\t{lang}\t{term.labels[lang]}")
        return "".join(line + "\n" for line in lines)

    def import_vocabulary(self, vocab_id: str, text: str, user_id: str) -> int:
        """Upsert-by-label; returns the number of newly created terms."""
        vocab = self.get(vocab_id)
        grouped: dict[str, list[tuple[str, str]]] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            if not raw.strip():
                continue
            parts = raw.split("\t")
            if len(parts) != 3:
                raise VocabImportError(
                    f"expected 3 tab-separated columns, got {len(parts)}", lineno)
            term_id, lang, label = parts
            if not term_id.strip() or not lang.strip() or not label.strip():
                raise VocabImportError("empty column", lineno)
            grouped.setdefault(term_id.strip(), []).append((lang.strip(), label.strip()))
        created = 0
        for term_id, labels in grouped.items():
            hit = None
            for lang, label in labels:
                hit = self._match_by_label(vocab, label, lang)
                if hit is not None:
                    break
            if hit is None:
                fresh = term_id if term_id not in vocab.terms else self._fresh_term_id(vocab)
                vocab.terms[fresh] = Term(fresh, {}, created_by=user_id)
                hit = vocab.terms[fresh]
                created += 1
            for lang, label in labels:
                if lang not in hit.labels:
                    clash = self._match_by_label(vocab, label, lang)
                    if clash is None or clash is hit:
                        hit.labels[lang] = label
        return created

    # -- persistence ---------------------------------------------------------

    def save(self, path: Path) -> None:
        root = ET.Element("vocabularies")
        for vocab_id in sorted(self.vocabularies):
            vocab = self.vocabularies[vocab_id]
            vel = ET.SubElement(root, "vocabulary", id=vocab.vocab_id,
                                name=vocab.name, mode=vocab.mode,
                                nextSeq=str(vocab.next_seq))
            for term_id in sorted(vocab.terms):
                term = vocab.terms[term_id]
                attrs = {"id": term.term_id}
                if term.created_by:
                    attrs["createdBy"] = term.created_by
                if term.deprecated:
                    attrs["deprecated"] = "true"
                if term.merged_into:
                    attrs["mergedInto"] = term.merged_into
                tel = ET.SubElement(vel, "term", attrs)
                for lang in sorted(term.labels):
                    lel = ET.SubElement(tel, "label", lang=lang)
                    lel.text = term.labels[lang]
        tree = ET.ElementTree(root)
        ET.indent(tree)
        path.parent.mkdir(parents=True, exist_ok=True)
        tree.write(path, encoding="unicode", xml_declaration=True)

    def load(self, path: Path) -> None:
        root = ET.parse(path).getroot()
        self.vocabularies.clear()
        for vel in root.findall("vocabulary"):
            vocab = Vocabulary(vel.get("id") or "", vel.get("name") or "",
                               vel.get("mode") or "static",
                               next_seq=int(vel.get("nextSeq") or "1"))
            for tel in vel.findall("term"):
                term = Term(tel.get("id") or "",
                            {lel.get("lang") or DEFAULT_LANG: lel.text or ""
                             for lel in tel.findall("label")},
                            created_by=tel.get("createdBy") or "",
                            deprecated=(tel.get("deprecated") == "true"),
                            merged_into=tel.get("mergedInto"))
                vocab.terms[term.term_id] = term
            self.vocabularies[vocab.vocab_id] = vocab


@dataclass
class ThesaurusConcept:
    concept_id: str
    pref_labels: dict[str, str]
    alt_labels: list[str] = field(default_factory=list)
    broader: set[str] = field(default_factory=set)


class Thesaurus:
    def __init__(self, thesaurus_id: str):
        self.thesaurus_id = thesaurus_id
        self.concepts: dict[str, ThesaurusConcept] = {}

    def add_concept(self, concept_id: str, pref_labels: dict[str, str],
                    alt_labels: list[str] | None = None,
                    broader: set[str] | None = None) -> ThesaurusConcept:
        if concept_id in self.concepts:
            raise VocabularyError(f"concept {concept_id!r} already exists")
        for parent in broader or ():
            if parent not in self.concepts:
                raise VocabularyError(f"unknown broader concept {parent!r}")
        concept = ThesaurusConcept(concept_id, dict(pref_labels),
                                   list(alt_labels or ()), set(broader or ()))
        self.concepts[concept_id] = concept
        return concept

    def _reaches(self, start: str, target: str) -> bool:
        stack, seen = [start], set()
        while stack:
            current = stack.pop()
            if current == target:
                return True
            if current in seen:
                continue
            seen.add(current)
            stack.extend(self.concepts[current].broader)
        return False

    def set_broader(self, concept_id: str, broader_id: str) -> ThesaurusConcept:
        concept = self._require(concept_id)
        self._require(broader_id)
        if concept_id == broader_id or self._reaches(broader_id, concept_id):
            raise VocabularyError(
                f"cycle detected: {broader_id!r} is already narrower than {concept_id!r}")
        concept.broader.add(broader_id)
        return concept

    def remove_broader(self, concept_id: str, broader_id: str) -> ThesaurusConcept:
        concept = self._require(concept_id)
        concept.broader.discard(broader_id)
        return concept

    def _require(self, concept_id: str) -> ThesaurusConcept:
        concept = self.concepts.get(concept_id)
        if concept is None:
            raise VocabularyError(f"unknown concept {concept_id!r}")
        return concept

    def narrower(self, concept_id: str) -> set[str]:
        self._require(concept_id)
        return {c.concept_id for c in self.concepts.values()
                if concept_id in c.broader}

    def has_concept(self, concept_id: str) -> bool:
        return concept_id in self.concepts

    def scheme_iri(self, base_iri: str) -> str:
        return f"{base_iri}/thesaurus/{self.thesaurus_id}"

    def concept_iri(self, base_iri: str, concept_id: str) -> str:
        return f"{base_iri}/thesaurus/{self.thesaurus_id}/{concept_id}"

    def export_skos(self, base_iri: str) -> set[rdf.Triple]:
        """One skos:Concept per concept; narrower is exactly the transpose
        of broader; broader-less concepts become top concepts."""
        graph: set[rdf.Triple] = set()
        scheme = self.scheme_iri(base_iri)
        graph.add(rdf.Triple(scheme, rdf.RDF_TYPE, rdf.SKOS_NS + "ConceptScheme"))
        for concept in self.concepts.values():
            iri = self.concept_iri(base_iri, concept.concept_id)
            graph.add(rdf.Triple(iri, rdf.RDF_TYPE, rdf.SKOS_NS + "Concept"))
            for lang, label in concept.pref_labels.items():
                graph.add(rdf.Triple(iri, rdf.SKOS_NS + "prefLabel",
                                     rdf.Literal(label, lang=lang)))
            for label in concept.alt_labels:
                graph.add(rdf.Triple(iri, rdf.SKOS_NS + "altLabel",
                                     rdf.Literal(label, lang=DEFAULT_LANG)))
            for parent in concept.broader:
                parent_iri = self.concept_iri(base_iri, parent)
                graph.add(rdf.Triple(iri, rdf.SKOS_NS + "broader", parent_iri))
                graph.add(rdf.Triple(parent_iri, rdf.SKOS_NS + "narrower", iri))
            if not concept.broader:
                graph.add(rdf.Triple(scheme, rdf.SKOS_NS + "hasTopConcept", iri))
        return graph

    # -- persistence ---------------------------------------------------------

    def save(self, path: Path) -> None:
        root = ET.Element("thesaurus", id=self.thesaurus_id)
        for concept_id in sorted(self.concepts):
            concept = self.concepts[concept_id]
            cel = ET.SubElement(root, "concept", id=concept.concept_id)
            for lang in sorted(concept.pref_labels):
                lel = ET.SubElement(cel, "prefLabel", lang=lang)
                lel.text = concept.pref_labels[lang]
            for label in concept.alt_labels:
                ael = ET.SubElement(cel, "altLabel")
                ael.text = label
            for parent in sorted(concept.broader):
                ET.SubElement(cel, "broader", ref=parent)
        tree = ET.ElementTree(root)
        ET.indent(tree)
        path.parent.mkdir(parents=True, exist_ok=True)
        tree.write(path, encoding="unicode", xml_declaration=True)

    @classmethod
    def load(cls, path: Path) -> "Thesaurus":
        root = ET.parse(path).getroot()
        thesaurus = cls(root.get("id") or path.stem)
        for cel in root.findall("concept"):
            concept = ThesaurusConcept(
                cel.get("id") or "",
                {lel.get("lang") or DEFAULT_LANG: lel.text or ""
                 for lel in cel.findall("prefLabel")},
                [ael.text or "" for ael in cel.findall("altLabel")],
                {bel.get("ref") or "" for bel in cel.findall("broader")},
            )
            thesaurus.concepts[concept.concept_id] = concept
        return thesaurus


class ThesaurusStore:
    def __init__(self):
        self.thesauri: dict[str, Thesaurus] = {}

    def create(self, thesaurus_id: str) -> Thesaurus:
        if thesaurus_id in self.thesauri:
            raise VocabularyError(f"thesaurus {thesaurus_id!r} already exists")
        thesaurus = Thesaurus(thesaurus_id)
        self.thesauri[thesaurus_id] = thesaurus
        return thesaurus

    def get(self, thesaurus_id: str) -> Thesaurus:
        thesaurus = self.thesauri.get(thesaurus_id)
        if thesaurus is None:
            raise VocabularyError(f"unknown thesaurus {thesaurus_id!r}")
        return thesaurus

    def has_concept(self, thesaurus_id: str, concept_id: str) -> bool:
        thesaurus = self.thesauri.get(thesaurus_id)
        return thesaurus is not None and thesaurus.has_concept(concept_id)
