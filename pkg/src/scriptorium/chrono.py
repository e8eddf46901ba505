"""Parsing and normalization of historical time expressions.

Expressions like "ca. 1920", "1st half 4th century" or "1500 BCE" are
parsed into a small AST and normalized to closed [earliest, latest]
intervals of astronomical years (year 0 exists and equals 1 BCE), so that
any two expressions can be compared.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

CE = "CE"
BCE = "BCE"

FIRST_HALF = "first-half"
SECOND_HALF = "second-half"
BEGINNING = "beginning"
MIDDLE = "middle"
END = "end"

DEFAULT_CIRCA_RADIUS = 10

ACCEPTED_FORMS = (
    "YYYY",
    "YYYY BCE",
    "ca. YYYY [BCE]",
    "decade of YYY0",
    "Nth century [BCE]",
    "1st|2nd half Nth century [BCE]",
    "beginning|middle|end of Nth century [BCE]",
    "<expression> - <expression>",
)


class TimeExpressionError(ValueError):
    """A time expression does not match any accepted form."""

    def __init__(self, message: str, expr: str | None = None):
        self.expr = expr
        super().__init__(message)


class _NoMatchError(TimeExpressionError):
    """No grammar row matched (distinct from a row matching with bad content)."""


@dataclass(frozen=True)
class Year:
    year: int
    era: str = CE


@dataclass(frozen=True)
class CircaYear:
    year: int
    era: str = CE


@dataclass(frozen=True)
class Decade:
    start_year: int


@dataclass(frozen=True)
class Century:
    number: int
    era: str = CE


@dataclass(frozen=True)
class CenturyPart:
    part: str
    number: int
    era: str = CE


@dataclass(frozen=True)
class YearMonthDay:
    # Extension slot for exact dates; not produced by the default grammar.
    year: int
    month: int | None = None
    day: int | None = None


@dataclass(frozen=True)
class Range:
    start: "SimpleExpression"
    end: "SimpleExpression"


SimpleExpression = Year | CircaYear | Decade | Century | CenturyPart | YearMonthDay
TimeExpression = SimpleExpression | Range


@dataclass(frozen=True, order=True)
class TimeSpan:
    earliest: int
    latest: int

    def __post_init__(self):
        if self.earliest > self.latest:
            raise ValueError(f"inverted span [{self.earliest}, {self.latest}]")


def _era(suffix: str | None) -> str:
    return BCE if suffix else CE


def _check_year(year: int, era: str, expr: str) -> None:
    if era == BCE and year == 0:
        raise TimeExpressionError("year 0 BCE does not exist", expr)


def _check_century(number: int, expr: str) -> None:
    if number < 1:
        raise TimeExpressionError("century number must be at least 1", expr)


def _build_year(m, expr):
    era = _era(m.group(2))
    year = int(m.group(1))
    _check_year(year, era, expr)
    return Year(year, era)


def _build_circa(m, expr):
    era = _era(m.group(2))
    year = int(m.group(1))
    _check_year(year, era, expr)
    return CircaYear(year, era)


def _build_decade(m, expr):
    year = int(m.group(1))
    if year % 10 != 0:
        raise TimeExpressionError(f"decade year must end in 0, got {year}", expr)
    return Decade(year)


def _build_century(m, expr):
    number = int(m.group(1))
    _check_century(number, expr)
    return Century(number, _era(m.group(2)))


def _build_half(m, expr):
    part = FIRST_HALF if m.group(1).lower().startswith("1") else SECOND_HALF
    number = int(m.group(2))
    _check_century(number, expr)
    return CenturyPart(part, number, _era(m.group(3)))


def _build_century_part(m, expr):
    number = int(m.group(2))
    _check_century(number, expr)
    return CenturyPart(m.group(1).lower(), number, _era(m.group(3)))


# Table-driven grammar: new accepted forms are added as (pattern, builder)
# rows without touching the parser itself.
_ORD = r"(?:st|nd|rd|th)?"
_BCE = r"(?:\s+(bce|bc))?"
def _build_year_ce(m, expr):
    return Year(int(m.group(1)), CE)


GRAMMAR: list[tuple[re.Pattern[str], object]] = [
    (re.compile(rf"^(\d+){_BCE}$", re.IGNORECASE), _build_year),
    (re.compile(r"^(\d+)\s+ce$", re.IGNORECASE), _build_year_ce),
    (re.compile(rf"^ca\.?\s+(\d+){_BCE}$", re.IGNORECASE), _build_circa),
    (re.compile(r"^decade\s+of\s+(\d+)$", re.IGNORECASE), _build_decade),
    (re.compile(rf"^(\d+){_ORD}\s+century{_BCE}$", re.IGNORECASE), _build_century),
    (re.compile(rf"^(1st|2nd)\s+half\s+(?:of\s+)?(\d+){_ORD}\s+century{_BCE}$",
                re.IGNORECASE), _build_half),
    (re.compile(rf"^(beginning|middle|end)\s+of\s+(?:the\s+)?(\d+){_ORD}\s+century{_BCE}$",
                re.IGNORECASE), _build_century_part),
]

_DASH_RE = re.compile(r"[-–]")


def _parse_simple(text: str) -> SimpleExpression:
    for pattern, build in GRAMMAR:
        m = pattern.match(text)
        if m:
            return build(m, text)
    raise _NoMatchError(
        f"unrecognized time expression {text!r}; accepted forms: "
        + ", ".join(ACCEPTED_FORMS),
        text,
    )


def parse_time_expression(text: str) -> TimeExpression:
    """Parse a historical time expression into its AST.

    Raises TimeExpressionError with the list of accepted forms when the
    text matches no grammar row. Ranges may not nest.
    """
    s = re.sub(r"\s+", " ", text.strip())
    if not s:
        raise TimeExpressionError("empty time expression", text)
    try:
        return _parse_simple(s)
    except _NoMatchError:
        pass
    # Try every dash as a range separator; the first split whose two sides
    # both parse wins. Semantic errors inside a matched form propagate.
    for m in _DASH_RE.finditer(s):
        lhs, rhs = s[: m.start()].strip(), s[m.end():].strip()
        if not lhs or not rhs:
            continue
        try:
            left = _parse_simple(lhs)
        except _NoMatchError:
            continue
        try:
            right = _parse_simple(rhs)
        except _NoMatchError:
            # A parseable range on the right would mean a nested range.
            try:
                nested = parse_time_expression(rhs)
            except TimeExpressionError:
                continue
            if isinstance(nested, Range):
                raise TimeExpressionError("nested ranges are not accepted", text)
            continue
        return Range(left, right)
    raise _NoMatchError(
        f"unrecognized time expression {text!r}; accepted forms: "
        + ", ".join(ACCEPTED_FORMS),
        text,
    )


_ORDINAL_SUFFIX = {1: "st", 2: "nd", 3: "rd"}


def ordinal(n: int) -> str:
    if 10 <= n % 100 <= 20:
        return f"{n}th"
    return f"{n}{_ORDINAL_SUFFIX.get(n % 10, 'th')}"


def format_expression(ast: TimeExpression) -> str:
    """Render an AST back to its canonical surface form."""
    if isinstance(ast, Year):
        return f"{ast.year} BCE" if ast.era == BCE else str(ast.year)
    if isinstance(ast, CircaYear):
        suffix = " BCE" if ast.era == BCE else ""
        return f"ca. {ast.year}{suffix}"
    if isinstance(ast, Decade):
        return f"decade of {ast.start_year}"
    if isinstance(ast, Century):
        suffix = " BCE" if ast.era == BCE else ""
        return f"{ordinal(ast.number)} century{suffix}"
    if isinstance(ast, CenturyPart):
        suffix = " BCE" if ast.era == BCE else ""
        century = f"{ordinal(ast.number)} century{suffix}"
        if ast.part == FIRST_HALF:
            return f"1st half {century}"
        if ast.part == SECOND_HALF:
            return f"2nd half {century}"
        return f"{ast.part} of {century}"
    if isinstance(ast, YearMonthDay):
        out = f"{ast.year:04d}"
        if ast.month is not None:
            out += f"-{ast.month:02d}"
        if ast.day is not None:
            out += f"-{ast.day:02d}"
        return out
    if isinstance(ast, Range):
        return f"{format_expression(ast.start)} - {format_expression(ast.end)}"
    raise TypeError(f"not a time expression AST: {ast!r}")


def astronomical_year(year: int, era: str) -> int:
    """Map a year in an era to the astronomical number line (1 BCE = 0)."""
    return year if era == CE else 1 - year


def century_span(number: int, era: str) -> TimeSpan:
    if era == CE:
        return TimeSpan(100 * (number - 1) + 1, 100 * number)
    return TimeSpan(1 - 100 * number, -100 * (number - 1))


def _thirds(span: TimeSpan) -> tuple[TimeSpan, TimeSpan, TimeSpan]:
    # Rounded so the three parts exactly partition the interval.
    length = span.latest - span.earliest + 1
    third = length // 3
    a = TimeSpan(span.earliest, span.earliest + third - 1)
    b = TimeSpan(a.latest + 1, a.latest + third)
    c = TimeSpan(b.latest + 1, span.latest)
    return a, b, c


def normalize_to_span(ast: TimeExpression, circa_radius: int = DEFAULT_CIRCA_RADIUS) -> TimeSpan:
    """Normalize an AST to its astronomical-year interval."""
    if isinstance(ast, Year):
        a = astronomical_year(ast.year, ast.era)
        return TimeSpan(a, a)
    if isinstance(ast, CircaYear):
        a = astronomical_year(ast.year, ast.era)
        return TimeSpan(a - circa_radius, a + circa_radius)
    if isinstance(ast, Decade):
        return TimeSpan(ast.start_year, ast.start_year + 9)
    if isinstance(ast, Century):
        return century_span(ast.number, ast.era)
    if isinstance(ast, CenturyPart):
        span = century_span(ast.number, ast.era)
        if ast.part == FIRST_HALF:
            return TimeSpan(span.earliest, span.earliest + 49)
        if ast.part == SECOND_HALF:
            return TimeSpan(span.earliest + 50, span.latest)
        beginning, middle, end = _thirds(span)
        return {BEGINNING: beginning, MIDDLE: middle, END: end}[ast.part]
    if isinstance(ast, YearMonthDay):
        return TimeSpan(ast.year, ast.year)
    if isinstance(ast, Range):
        lhs = normalize_to_span(ast.start, circa_radius)
        rhs = normalize_to_span(ast.end, circa_radius)
        if lhs.earliest > rhs.latest:
            raise TimeExpressionError(
                f"inverted range: {format_expression(ast)}")
        return TimeSpan(lhs.earliest, rhs.latest)
    raise TypeError(f"not a time expression AST: {ast!r}")


def parse_to_span(text: str, circa_radius: int = DEFAULT_CIRCA_RADIUS) -> TimeSpan:
    return normalize_to_span(parse_time_expression(text), circa_radius)


def within(a: TimeSpan, b: TimeSpan) -> bool:
    """True when a lies fully inside b."""
    return b.earliest <= a.earliest and a.latest <= b.latest


def overlaps(a: TimeSpan, b: TimeSpan) -> bool:
    return a.earliest <= b.latest and b.earliest <= a.latest


def span_relation(a: TimeSpan, b: TimeSpan) -> str:
    """Classify a against b: equal, within, contains, overlaps or disjoint."""
    if a == b:
        return "equal"
    if within(a, b):
        return "within"
    if within(b, a):
        return "contains"
    if overlaps(a, b):
        return "overlaps"
    return "disjoint"
