"""Typed field values stored in documentation cards."""
from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal, InvalidOperation

from .chrono import TimeSpan


@dataclass(frozen=True)
class EntityLink:
    target_type: str
    target_id: str
    display_label: str = ""


@dataclass(frozen=True)
class TermRef:
    vocab_id: str
    term_id: str
    label: str = ""


@dataclass(frozen=True)
class ThesaurusRef:
    thesaurus_id: str
    concept_id: str
    label: str = ""


@dataclass(frozen=True)
class PlainText:
    text: str


@dataclass(frozen=True)
class FormattedText:
    markup: str


@dataclass(frozen=True)
class NumberVal:
    value: Decimal

    def __post_init__(self):
        if not isinstance(self.value, Decimal):
            object.__setattr__(self, "value", Decimal(str(self.value)))


@dataclass(frozen=True)
class TimeVal:
    expr: str
    span: TimeSpan


@dataclass(frozen=True)
class Coordinates:
    kind: str                      # point | polygon
    points: tuple[tuple[float, float], ...]  # (lat, lon) WGS84 degrees


@dataclass(frozen=True)
class ExternalPlace:
    source: str                    # tgn | geonames
    external_id: str
    lat: float
    lon: float


@dataclass(frozen=True)
class FileRef:
    attachment_id: str
    media_kind: str


FieldValue = (EntityLink | TermRef | ThesaurusRef | PlainText | FormattedText
              | NumberVal | TimeVal | Coordinates | ExternalPlace | FileRef)

# field kind -> value classes an edit may store there
KIND_VALUE_TYPES: dict[str, tuple[type, ...]] = {
    "entity-link": (EntityLink,),
    "vocab-term": (TermRef,),
    "thesaurus-term": (ThesaurusRef,),
    "text-plain": (PlainText,),
    "text-formatted": (FormattedText,),
    "number": (NumberVal,),
    "time-expression": (TimeVal,),
    "geo-coordinates": (Coordinates,),
    "geo-external-id": (ExternalPlace,),
    "digital-file": (FileRef,),
}

GAZETTEER_SOURCES = ("tgn", "geonames")


def value_matches_kind(value: FieldValue, kind: str) -> bool:
    return isinstance(value, KIND_VALUE_TYPES.get(kind, ()))


def check_value(value: FieldValue) -> list[str]:
    """Intrinsic validity problems of a single value, as message strings."""
    problems: list[str] = []
    if isinstance(value, (PlainText, FormattedText)):
        text = value.text if isinstance(value, PlainText) else value.markup
        if any(ord(c) < 0x20 and c not in "\n\t" for c in text):
            problems.append("text contains control characters")
    elif isinstance(value, NumberVal):
        if not value.value.is_finite():
            problems.append("number must be finite")
    elif isinstance(value, Coordinates):
        if value.kind not in ("point", "polygon"):
            problems.append(f"bad geometry kind {value.kind!r}")
        if value.kind == "point" and len(value.points) != 1:
            problems.append("a point carries exactly one coordinate pair")
        if value.kind == "polygon" and len(value.points) < 3:
            problems.append("a polygon needs at least three coordinate pairs")
        for lat, lon in value.points:
            if not (-90.0 <= lat <= 90.0):
                problems.append(f"latitude {lat} out of [-90, 90]")
            if not (-180.0 <= lon <= 180.0):
                problems.append(f"longitude {lon} out of [-180, 180]")
    elif isinstance(value, ExternalPlace):
        if value.source not in GAZETTEER_SOURCES:
            problems.append(f"unknown gazetteer source {value.source!r}")
        if not (-90.0 <= value.lat <= 90.0):
            problems.append(f"latitude {value.lat} out of [-90, 90]")
        if not (-180.0 <= value.lon <= 180.0):
            problems.append(f"longitude {value.lon} out of [-180, 180]")
    elif isinstance(value, TimeVal):
        if not value.expr.strip():
            problems.append("time expression is empty")
    return problems


def render_text(value: FieldValue) -> str:
    """Human text used by table rows, keyword search and naive RDF literals."""
    if isinstance(value, PlainText):
        return value.text
    if isinstance(value, FormattedText):
        return value.markup
    if isinstance(value, NumberVal):
        return str(value.value)
    if isinstance(value, TimeVal):
        return value.expr
    if isinstance(value, (TermRef, ThesaurusRef, EntityLink)):
        return value.label if not isinstance(value, EntityLink) else value.display_label
    if isinstance(value, Coordinates):
        return ";".join(f"{lat},{lon}" for lat, lon in value.points)
    if isinstance(value, ExternalPlace):
        return f"{value.source}:{value.external_id}"
    if isinstance(value, FileRef):
        return value.attachment_id
    raise TypeError(f"not a field value: {value!r}")


def number_from_text(text: str) -> Decimal:
    try:
        value = Decimal(text)
    except InvalidOperation as e:
        raise ValueError(f"not a number: {text!r}") from e
    if not value.is_finite():
        raise ValueError(f"number must be finite: {text!r}")
    return value
