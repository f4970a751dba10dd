"""App records, the gamification keyword lexicon, and binary feature extraction.

Matching is whole-token and case-insensitive: the lexicon enumerates
inflected forms explicitly (``game``/``games``, ``track``/``tracking``),
so no stemming or substring matching is performed.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from .errors import InputError

STORES = ("android", "ios", "other")
APP_TYPES = ("breast_cancer", "health", "misc")

# Maximal runs of letters/digits; underscore and all punctuation separate.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Split free text into lowercase tokens.

    Tokens are maximal runs of Unicode letters and digits; everything
    else (punctuation, whitespace, underscores) separates. Deterministic
    and total: empty or ``None``-ish text yields an empty list.
    """
    if not text:
        return []
    return [t.casefold() for t in _TOKEN_RE.findall(text)]


@dataclass(frozen=True)
class AppRecord:
    """One store listing: the unit of analysis."""

    id: str
    store: str
    title: str = ""
    description: str = ""
    gamification_label: int | None = None
    app_type: str | None = None
    language: str | None = None

    def __post_init__(self):
        if not self.id:
            raise InputError("record id must be nonempty")
        if self.store not in STORES:
            raise InputError(f"record {self.id!r}: store must be one of {STORES}, got {self.store!r}")
        if self.gamification_label not in (None, 0, 1):
            raise InputError(f"record {self.id!r}: gamification_label must be 0 or 1")
        if self.app_type is not None and self.app_type not in APP_TYPES:
            raise InputError(f"record {self.id!r}: app_type must be one of {APP_TYPES}")

    @property
    def text(self) -> str:
        """Title and description joined for matching purposes."""
        return f"{self.title}\n{self.description}"


@dataclass(frozen=True)
class Lexicon:
    """The flat set of screening keywords."""

    keywords: frozenset[str]
    version: str = "custom"

    def __post_init__(self):
        for k in self.keywords:
            if not k or k != k.casefold() or any(c.isspace() for c in k):
                raise InputError(f"invalid lexicon keyword: {k!r}")

    def __contains__(self, token: str) -> bool:
        return token in self.keywords


@dataclass(frozen=True)
class VariableGrouping:
    """Ordered mapping from model variables to their member keywords.

    Member sets must be pairwise disjoint so every matched keyword
    contributes to exactly one variable bit.
    """

    variables: tuple[tuple[str, frozenset[str]], ...]

    def __post_init__(self):
        seen: set[str] = set()
        for name, members in self.variables:
            if not members:
                raise InputError(f"variable {name!r} has no member keywords")
            overlap = seen & members
            if overlap:
                raise InputError(f"variable {name!r} reuses keywords: {sorted(overlap)}")
            seen |= members

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.variables)

    @property
    def all_keywords(self) -> frozenset[str]:
        out: set[str] = set()
        for _, members in self.variables:
            out |= members
        return frozenset(out)

    def members(self, name: str) -> frozenset[str]:
        for n, members in self.variables:
            if n == name:
                return members
        raise KeyError(name)

    def check_against(self, lexicon: Lexicon) -> None:
        missing = self.all_keywords - lexicon.keywords
        if missing:
            raise InputError(f"grouping keywords absent from lexicon: {sorted(missing)}")


@dataclass(frozen=True)
class FeatureVector:
    """Binary indicators, one per grouping variable, in grouping order."""

    bits: tuple[int, ...]
    matched_keywords: frozenset[str] = field(default_factory=frozenset)


def match_keywords(record: AppRecord, lexicon: Lexicon) -> set[str]:
    """Keywords of `lexicon` appearing as whole tokens in title or description."""
    return set(tokenize(record.text)) & lexicon.keywords


def build_features(matched: set[str] | frozenset[str], grouping: VariableGrouping) -> FeatureVector:
    """Collapse matched keywords to per-variable presence bits."""
    bits = tuple(int(bool(matched & members)) for _, members in grouping.variables)
    return FeatureVector(bits=bits, matched_keywords=frozenset(matched))


def extract_features(record: AppRecord, lexicon: Lexicon, grouping: VariableGrouping) -> FeatureVector:
    return build_features(match_keywords(record, lexicon), grouping)


def load_lexicon_file(path_or_text) -> tuple[Lexicon, VariableGrouping]:
    """Parse a lexicon JSON document: {version, keywords, variables}."""
    if hasattr(path_or_text, "read"):
        doc = json.load(path_or_text)
    else:
        with open(path_or_text, encoding="utf-8") as fh:
            doc = json.load(fh)
    return _from_doc(doc)


def _from_doc(doc: dict) -> tuple[Lexicon, VariableGrouping]:
    keywords = doc["keywords"]
    if len(keywords) != len(set(keywords)):
        raise InputError("lexicon file contains duplicate keywords")
    lexicon = Lexicon(keywords=frozenset(keywords), version=str(doc.get("version", "custom")))
    grouping = VariableGrouping(
        variables=tuple((v["name"], frozenset(v["keywords"])) for v in doc["variables"])
    )
    grouping.check_against(lexicon)
    return lexicon, grouping


@lru_cache(maxsize=1)
def _default() -> tuple[Lexicon, VariableGrouping]:
    text = resources.files("gamiscreen.data").joinpath("lexicon.json").read_text(encoding="utf-8")
    return _from_doc(json.loads(text))


def default_lexicon() -> Lexicon:
    """The bundled 79-keyword screening lexicon."""
    return _default()[0]


def default_grouping() -> VariableGrouping:
    """The bundled 14-variable grouping over the default lexicon."""
    return _default()[1]
