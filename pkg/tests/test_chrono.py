from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from scriptorium.chrono import (BCE, BEGINNING, CE, END, FIRST_HALF, MIDDLE,
                                SECOND_HALF, Century, CenturyPart, CircaYear,
                                Decade, Range, TimeExpressionError, TimeSpan,
                                Year, century_span, format_expression,
                                normalize_to_span, overlaps,
                                parse_time_expression, parse_to_span,
                                span_relation, within)


def century_of_year_oracle(year: int) -> tuple[int, str, str]:
    """Classify an astronomical year into (century, era, half) by counting,
    independent of the closed-form span formulas."""
    if year >= 1:
        century = (year - 1) // 100 + 1
        offset = (year - 1) % 100
        era = CE
    else:
        # year 0 is 1 BCE; walking backwards from there
        bce_year = 1 - year
        century = (bce_year - 1) // 100 + 1
        offset = 100 * century - bce_year
        era = BCE
    return century, era, "first" if offset < 50 else "second"


def test_documented_expressions_normalize_exactly():
    expected = {
        "decade of 1970": (1970, 1979),
        "ca. 1920": (1910, 1930),
        "1st half 4th century": (301, 350),
        "1500 BCE": (-1499, -1499),
        "3rd century - 5th century": (201, 500),
    }
    for expr, (earliest, latest) in expected.items():
        span = parse_to_span(expr)
        assert (span.earliest, span.latest) == (earliest, latest), expr


@pytest.mark.parametrize("text,ast", [
    ("1st half 4th century", CenturyPart(FIRST_HALF, 4, CE)),
    ("2nd half 4th century BCE", CenturyPart(SECOND_HALF, 4, BCE)),
    ("3rd century - 5th century", Range(Century(3, CE), Century(5, CE))),
    ("beginning of 4th century", CenturyPart(BEGINNING, 4, CE)),
    ("middle of 18th century", CenturyPart(MIDDLE, 18, CE)),
    ("end of 18th century", CenturyPart(END, 18, CE)),
    ("ca. 1920", CircaYear(1920, CE)),
    ("ca 330 BCE", CircaYear(330, BCE)),
    ("decade of 1970", Decade(1970)),
    ("1500 BCE", Year(1500, BCE)),
    ("1896", Year(1896, CE)),
    ("4 century", Century(4, CE)),
    ("1500 bce", Year(1500, BCE)),
    ("1712 - decade of 1850", Range(Year(1712, CE), Decade(1850))),
])
def test_grammar(text, ast):
    assert parse_time_expression(text) == ast


def test_case_and_whitespace_insensitive():
    assert parse_time_expression("  1ST  HALF   4th CENTURY ") == \
        CenturyPart(FIRST_HALF, 4, CE)
    assert parse_time_expression("DECADE OF 1970") == Decade(1970)


@pytest.mark.parametrize("bad", [
    "decade of 1973",
    "sometime long ago",
    "",
    "0th century",
    "0 BCE",
    "1st century - 2nd century - 3rd century",
    "14th of March",
])
def test_rejected_expressions(bad):
    with pytest.raises(TimeExpressionError):
        parse_time_expression(bad)


def test_decade_error_names_the_rule():
    with pytest.raises(TimeExpressionError, match="end in 0"):
        parse_time_expression("decade of 1973")


def test_unrecognized_error_lists_accepted_forms():
    with pytest.raises(TimeExpressionError, match="accepted forms"):
        parse_time_expression("in the reign of Peter")


@pytest.mark.parametrize("ast,span", [
    (Year(1500, BCE), (-1499, -1499)),
    (Year(1, CE), (1, 1)),
    (CircaYear(1920, CE), (1910, 1930)),
    (CircaYear(1500, BCE), (-1509, -1489)),
    (Decade(1970), (1970, 1979)),
    (Century(4, CE), (301, 400)),
    (Century(1, BCE), (-99, 0)),
    (CenturyPart(FIRST_HALF, 4, CE), (301, 350)),
    (CenturyPart(SECOND_HALF, 4, CE), (351, 400)),
    (CenturyPart(BEGINNING, 4, CE), (301, 333)),
    (CenturyPart(MIDDLE, 4, CE), (334, 366)),
    (CenturyPart(END, 4, CE), (367, 400)),
    (Range(Century(3, CE), Century(5, CE)), (201, 500)),
])
def test_normalization(ast, span):
    got = normalize_to_span(ast)
    assert (got.earliest, got.latest) == span


def test_thirds_partition_every_century():
    for number in range(1, 22):
        for era in (CE, BCE):
            whole = century_span(number, era)
            parts = [normalize_to_span(CenturyPart(p, number, era))
                     for p in (BEGINNING, MIDDLE, END)]
            assert parts[0].earliest == whole.earliest
            assert parts[2].latest == whole.latest
            assert parts[0].latest + 1 == parts[1].earliest
            assert parts[1].latest + 1 == parts[2].earliest


def test_circa_radius_configurable():
    assert normalize_to_span(CircaYear(1920, CE), circa_radius=5) == TimeSpan(1915, 1925)


def test_inverted_range_rejected():
    with pytest.raises(TimeExpressionError, match="inverted"):
        normalize_to_span(parse_time_expression("5th century - 3rd century"))


def test_century_formula_matches_year_classification_oracle():
    """Spans computed by formula must equal spans enumerated year by year."""
    for number in range(1, 22):
        for era in (CE, BCE):
            for part, half in ((FIRST_HALF, "first"), (SECOND_HALF, "second")):
                span = normalize_to_span(CenturyPart(part, number, era))
                enumerated = [y for y in range(-2200, 2201)
                              if century_of_year_oracle(y) == (number, era, half)]
                assert enumerated == list(range(span.earliest, span.latest + 1))


def test_era_consistency_never_overlaps():
    for n in range(1, 30):
        assert not overlaps(normalize_to_span(Year(n, BCE)), normalize_to_span(Year(n, CE)))
        assert not overlaps(normalize_to_span(Century(n, BCE)),
                            normalize_to_span(Century(n, CE)))


def test_span_relations():
    assert within(TimeSpan(1710, 1730), TimeSpan(1701, 1800))
    assert overlaps(TimeSpan(201, 500), TimeSpan(450, 600))
    assert not within(TimeSpan(201, 500), TimeSpan(450, 600))
    a = TimeSpan(100, 200)
    assert span_relation(a, a) == "equal"
    assert span_relation(TimeSpan(120, 180), a) == "within"
    assert span_relation(a, TimeSpan(120, 180)) == "contains"
    assert span_relation(TimeSpan(150, 250), a) == "overlaps"
    assert span_relation(TimeSpan(300, 400), a) == "disjoint"


def test_within_means_eighteenth_century():
    century18 = parse_to_span("18th century")
    assert century18 == TimeSpan(1701, 1800)
    assert within(parse_to_span("1750"), century18)
    assert not within(parse_to_span("1801"), century18)


_era_st = st.sampled_from([CE, BCE])
_simple_ast = st.one_of(
    st.builds(Year, st.integers(1, 2500), _era_st),
    st.builds(CircaYear, st.integers(1, 2500), _era_st),
    st.builds(Decade, st.integers(0, 250).map(lambda n: n * 10)),
    st.builds(Century, st.integers(1, 25), _era_st),
    st.builds(CenturyPart,
              st.sampled_from([FIRST_HALF, SECOND_HALF, BEGINNING, MIDDLE, END]),
              st.integers(1, 25), _era_st),
)
_any_ast = st.one_of(_simple_ast, st.builds(Range, _simple_ast, _simple_ast))


@given(_any_ast)
def test_print_parse_fixpoint(ast):
    printed = format_expression(ast)
    assert parse_time_expression(printed) == ast
    assert format_expression(parse_time_expression(printed)) == printed


@given(_simple_ast)
def test_earliest_never_exceeds_latest(ast):
    span = normalize_to_span(ast)
    assert span.earliest <= span.latest


@given(_any_ast, _any_ast)
def test_relation_consistent_with_predicates(a_ast, b_ast):
    try:
        a, b = normalize_to_span(a_ast), normalize_to_span(b_ast)
    except TimeExpressionError:
        return  # inverted range draw
    relation = span_relation(a, b)
    if relation in ("within", "equal"):
        assert within(a, b)
    if relation in ("contains", "equal"):
        assert within(b, a)
    if relation == "disjoint":
        assert not overlaps(a, b)
    else:
        assert overlaps(a, b)
