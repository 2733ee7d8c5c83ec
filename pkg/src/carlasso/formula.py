"""Parser for ``y1 + ... + yk ~ x1 + ... + xp`` formulas.

Only ``+`` separated identifiers are accepted on either side of a single
``~``. Interactions, intercept removal and function calls are rejected with
an :class:`~carlasso.errors.InvalidIdentifier` naming the operator. Offsets
in errors are byte offsets into the UTF-8 encoding of the input.
"""

from __future__ import annotations

import difflib
import re
from dataclasses import dataclass

from .errors import (
    DuplicateName,
    EmptySide,
    InvalidIdentifier,
    MissingTilde,
    UnknownColumn,
)

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*\Z")

_UNSUPPORTED = {
    ":": "interaction ':'",
    "*": "interaction '*'",
    "-": "term removal '-'",
    "(": "function call '('",
    ")": "function call ')'",
    "^": "power '^'",
    "|": "random-effect bar '|'",
    "/": "nesting '/'",
    "%": "operator '%'",
}


@dataclass(frozen=True)
class FormulaSpec:
    responses: tuple[str, ...]
    predictors: tuple[str, ...]
    raw_text: str

    def render(self) -> str:
        return " + ".join(self.responses) + " ~ " + " + ".join(self.predictors)

    def __eq__(self, other):
        # raw_text is provenance only
        if not isinstance(other, FormulaSpec):
            return NotImplemented
        return self.responses == other.responses and self.predictors == other.predictors

    def __hash__(self):
        return hash((self.responses, self.predictors))


@dataclass(frozen=True)
class BoundColumn:
    name: str
    index: int
    kind: str  # "numeric" | "categorical"


@dataclass(frozen=True)
class BoundFormula:
    spec: FormulaSpec
    responses: tuple[BoundColumn, ...]
    predictors: tuple[BoundColumn, ...]


def _byte_offsets(text: str) -> list[int]:
    """Byte offset of every character, plus one trailing entry for ``len``."""
    out = [0]
    for ch in text:
        out.append(out[-1] + len(ch.encode("utf-8", errors="surrogatepass")))
    return out


def _split_side(text: str, start: int, end: int, offs: list[int]) -> list[tuple[str, int]]:
    """Split ``text[start:end]`` on ``+`` into (token, char_index) pairs."""
    terms = []
    i = start
    cur_start = None
    last_plus = None
    expect_term = True
    while i < end:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch == "+":
            if expect_term:
                # '+' with nothing before it on this side
                if terms or last_plus is not None:
                    raise InvalidIdentifier("empty term before '+'", offset=offs[i], token="+")
                raise InvalidIdentifier("formula side starts with '+'", offset=offs[i], token="+")
            expect_term = True
            last_plus = i
            i += 1
            continue
        if not expect_term:
            # two tokens separated only by whitespace
            raise InvalidIdentifier(
                f"missing '+' before {text[i]!r}", offset=offs[i], token=text[i]
            )
        cur_start = i
        while i < end and not text[i].isspace() and text[i] != "+":
            i += 1
        terms.append((text[cur_start:i], cur_start))
        expect_term = False
    if expect_term and last_plus is not None:
        raise InvalidIdentifier("empty term after '+'", offset=offs[last_plus], token="+")
    return terms


def _check_identifier(token: str, offset: int) -> None:
    if IDENT_RE.match(token):
        return
    for ch in token:
        if ch in _UNSUPPORTED:
            raise InvalidIdentifier(
                f"unsupported operator: {_UNSUPPORTED[ch]} in {token!r}", offset=offset, token=token
            )
    if token[0] == ".":
        raise InvalidIdentifier(
            f"{token!r}: the '.' all-columns wildcard is not supported", offset=offset, token=token
        )
    raise InvalidIdentifier(f"invalid identifier {token!r}", offset=offset, token=token)


def parse_formula(text: str | bytes) -> FormulaSpec:
    """Parse ``responses ~ predictors``.

    Raises one of MissingTilde, EmptySide, DuplicateName or InvalidIdentifier;
    never anything else, whatever the input.
    """
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as e:
            raise InvalidIdentifier("input is not valid UTF-8", offset=e.start) from None
    offs = _byte_offsets(text)

    tildes = [i for i, ch in enumerate(text) if ch == "~"]
    if not tildes:
        raise MissingTilde("formula has no '~'", offset=0)
    if len(tildes) > 1:
        raise MissingTilde("formula has more than one '~'", offset=offs[tildes[1]], token="~")
    t = tildes[0]

    lhs = _split_side(text, 0, t, offs)
    rhs = _split_side(text, t + 1, len(text), offs)
    if not lhs:
        raise EmptySide("no responses left of '~'", offset=offs[t], token="~")
    if not rhs:
        raise EmptySide("no predictors right of '~'", offset=offs[t], token="~")

    seen: dict[str, str] = {}
    for side, terms in (("response", lhs), ("predictor", rhs)):
        for tok, ci in terms:
            _check_identifier(tok, offs[ci])
            if tok in seen:
                where = "twice" if seen[tok] == side else "as both response and predictor"
                raise DuplicateName(f"{tok!r} appears {where}", offset=offs[ci], token=tok)
            seen[tok] = side

    return FormulaSpec(
        responses=tuple(tok for tok, _ in lhs),
        predictors=tuple(tok for tok, _ in rhs),
        raw_text=text,
    )


def _closest(name: str, candidates) -> str | None:
    """Best suggestion for a misspelt column, comparing case-insensitively."""
    folded = {}
    for c in candidates:
        folded.setdefault(c.casefold(), c)
    close = difflib.get_close_matches(name.casefold(), list(folded), n=1)
    return folded[close[0]] if close else None


def validate_against_table(spec: FormulaSpec, table) -> BoundFormula:
    """Resolve every formula name to a column of ``table``."""
    index = {name: i for i, name in enumerate(table.column_names)}

    def bind(name):
        if name not in index:
            raise UnknownColumn(name, _closest(name, table.column_names))
        i = index[name]
        return BoundColumn(name, i, table.kind(i))

    return BoundFormula(
        spec=spec,
        responses=tuple(bind(n) for n in spec.responses),
        predictors=tuple(bind(n) for n in spec.predictors),
    )
