from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from scriptorium.values import PlainText, TermRef
from scriptorium.vocab import (StaticVocabularyError, VocabImportError,
                               VocabularyError, VocabularyStore,
                               aggressive_key, normalize_label)


@pytest.fixture
def dynamic(vocabs):
    vocabs.create_vocabulary("keywords", "Keywords", "dynamic")
    return vocabs


def test_add_term_creates(dynamic):
    term_id, created = dynamic.add_term("keywords", "Icon", "en", "u1")
    assert created
    assert dynamic.find_term("keywords", term_id) is not None


def test_add_term_dedupes_under_normalization(dynamic):
    first, created = dynamic.add_term("keywords", "Icon", "en", "u1")
    assert created
    again, created = dynamic.add_term("keywords", "  icon ", "en", "u2")
    assert not created
    assert again == first
    third, created = dynamic.add_term("keywords", "ICON", "en", "u3")
    assert (third, created) == (first, False)


def test_add_term_static_rejected(vocabs):
    with pytest.raises(StaticVocabularyError):
        vocabs.add_term("object-category", "banner", "en", "u1")
    # administrators grow static vocabularies through the admin path
    term_id, created = vocabs.add_term("object-category", "banner", "en", "admin",
                                       allow_static=True)
    assert created


def test_add_term_empty_label(dynamic):
    with pytest.raises(VocabularyError, match="empty"):
        dynamic.add_term("keywords", "   ", "en", "u1")


def test_duplicate_candidates_diacritics(dynamic):
    dynamic.add_term("keywords", "Münster", "en", "u1")
    dynamic.add_term("keywords", "Munster", "en", "u2")
    dynamic.add_term("keywords", "triptych", "en", "u3")
    clusters = dynamic.find_duplicate_candidates("keywords")
    assert len(clusters) == 1
    assert len(clusters[0]) == 2


def test_duplicate_candidates_no_false_positives(dynamic):
    dynamic.add_term("keywords", "icon", "en", "u1")
    dynamic.add_term("keywords", "triptych", "en", "u2")
    assert dynamic.find_duplicate_candidates("keywords") == []


def test_duplicate_candidates_punctuation_not_abbreviation(dynamic):
    """Punctuation stripping clusters; abbreviation expansion must not."""
    a, _ = dynamic.add_term("keywords", "St. Nicholas", "en", "u1")
    b, _ = dynamic.add_term("keywords", "St Nicholas", "en", "u2")
    c, _ = dynamic.add_term("keywords", "saint nicholas", "en", "u3")
    clusters = dynamic.find_duplicate_candidates("keywords")
    assert clusters == [sorted([a, b])]
    assert all(c not in cluster for cluster in clusters)


def test_normalization_functions():
    assert normalize_label("  Icon   of  St. Nicholas ") == "icon of st. nicholas"
    assert aggressive_key("Münster!") == "munster"
    assert aggressive_key("St.   Nicholas") == "st nicholas"


def test_merge_rewrites_documents(plain_store):
    # three documents reference the loser through the dynamic location-type
    dynamic = plain_store.vocabs
    loser_lt, _ = dynamic.add_term("location-type", "monastiri", "en", "u2")
    winner_lt = "monastery"
    docs = []
    for _ in range(3):
        doc = plain_store.create_entity("Location", "org1", "u1")
        plain_store.apply_field_edits(doc.id, [
            ("Name", PlainText("Great Lavra")),
            ("LocationType", TermRef("location-type", loser_lt, "monastiri")),
        ], 0)
        docs.append(doc.id)
    untouched = plain_store.create_entity("Location", "org1", "u1")
    plain_store.apply_field_edits(untouched.id, [
        ("Name", PlainText("Moscow")),
        ("LocationType", TermRef("location-type", winner_lt, "monastery")),
    ], 0)
    report = dynamic.merge_terms("location-type", winner_lt, [loser_lt], "curator",
                                 documents=plain_store)
    assert sorted(report.touched_document_ids) == sorted(docs)
    assert report.deprecated_term_ids == [loser_lt]
    # corpus scan finds zero loser references
    for doc in plain_store.all_documents():
        for value in doc.values.values():
            if isinstance(value, TermRef):
                assert value.term_id != loser_lt
    # losers stay as tombstones pointing at the winner
    term = dynamic.get("location-type").terms[loser_lt]
    assert term.deprecated and term.merged_into == winner_lt
    # revision advanced on touched docs only
    assert plain_store.get(docs[0]).revision == 2
    assert plain_store.get(untouched.id).revision == 1


def test_merge_zero_references(dynamic, plain_store):
    winner, _ = dynamic.add_term("keywords", "icon", "en", "u1")
    loser, _ = dynamic.add_term("keywords", "ikon", "en", "u2")
    report = dynamic.merge_terms("keywords", winner, [loser], "curator",
                                 documents=plain_store)
    assert report.touched_document_ids == []
    assert dynamic.get("keywords").terms[loser].deprecated


def test_merge_winner_among_losers(dynamic):
    winner, _ = dynamic.add_term("keywords", "icon", "en", "u1")
    with pytest.raises(VocabularyError, match="winner"):
        dynamic.merge_terms("keywords", winner, [winner], "curator")


def test_merged_label_becomes_addable_again(dynamic):
    winner, _ = dynamic.add_term("keywords", "icon", "en", "u1")
    loser, _ = dynamic.add_term("keywords", "ikon", "en", "u2")
    dynamic.merge_terms("keywords", winner, [loser], "curator")
    # deprecated labels no longer block creation
    fresh, created = dynamic.add_term("keywords", "ikon", "en", "u3")
    assert created and fresh != loser


def test_export_format(dynamic):
    a, _ = dynamic.add_term("keywords", "icon", "en", "u1")
    b, _ = dynamic.add_term("keywords", "cross", "en", "u1")
    out = dynamic.export_vocabulary("keywords")
    lines = out.splitlines()
    assert len(lines) == 2
    assert lines == sorted(lines)
    for line in lines:
        assert len(line.split("\t")) == 3


def test_import_existing_label_no_new_term(dynamic):
    dynamic.add_term("keywords", "icon", "en", "u1")
    created = dynamic.import_vocabulary("keywords", "t-zzz\ten\tIcon\n", "imp")
    assert created == 0


def test_import_malformed_line_reports_number(dynamic):
    with pytest.raises(VocabImportError, match="line 2"):
        dynamic.import_vocabulary("keywords", "t-1\ten\ticon\nt-2\tbroken\n", "imp")


def test_export_import_export_fixpoint(dynamic):
    dynamic.add_term("keywords", "icon", "en", "u1")
    dynamic.add_term("keywords", "cross", "en", "u1")
    dynamic.add_term("keywords", "Εικόνα", "el", "u1")
    first = dynamic.export_vocabulary("keywords")
    dynamic.import_vocabulary("keywords", first, "imp")
    assert dynamic.export_vocabulary("keywords") == first


def test_import_into_fresh_vocabulary_preserves_ids(vocabs):
    vocabs.create_vocabulary("copy", "Copy", "dynamic")
    vocabs.import_vocabulary("copy", "alpha\ten\tAlpha\nalpha\tde\tAlpha-DE\nbeta\ten\tBeta\n", "imp")
    vocab = vocabs.get("copy")
    assert set(vocab.terms) == {"alpha", "beta"}
    assert vocab.terms["alpha"].labels == {"en": "Alpha", "de": "Alpha-DE"}


@given(st.lists(st.sampled_from(["Icon", " icon ", "ICON", "ikon", "Ikon"]),
                min_size=1, max_size=8))
def test_add_term_idempotent_under_normalization(labels):
    vocabs = VocabularyStore()
    vocabs.create_vocabulary("kw", "KW", "dynamic")
    ids = {normalize_label(label): vocabs.add_term("kw", label, "en", "u")[0]
           for label in labels}
    # same normalized label always lands on the same term
    for label in labels:
        term_id, created = vocabs.add_term("kw", label, "en", "u")
        assert not created
        assert term_id == ids[normalize_label(label)]


def test_vocabulary_persistence(vocabs, tmp_path):
    vocabs.create_vocabulary("keywords", "Keywords", "dynamic")
    winner, _ = vocabs.add_term("keywords", "icon", "en", "u1")
    loser, _ = vocabs.add_term("keywords", "ikon", "en", "u2")
    vocabs.merge_terms("keywords", winner, [loser], "cur")
    path = tmp_path / "vocabularies.xml"
    vocabs.save(path)
    reloaded = VocabularyStore()
    reloaded.load(path)
    assert set(reloaded.vocabularies) == set(vocabs.vocabularies)
    term = reloaded.get("keywords").terms[loser]
    assert term.deprecated and term.merged_into == winner
    assert reloaded.get("object-category").mode == "static"
