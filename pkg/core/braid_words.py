"""Braid words - parsing, validation and permutation analysis.

Classical words use the generators ``s<i>`` / ``s<i>^-1``. Loop words add
``r<i>`` / ``r<i>^-1``; since r_i squares to the identity the inverse sign of
an ``r`` token is dropped on parse, but the sign as drawn is kept because it
still picks the over/under order when the loop braid is laid out.

Words are read left to right as time runs from 0 to 2*pi.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Sequence, Tuple, Union

logger = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"^(?P<kind>[sr])(?P<index>[1-9]\d*)(?P<inverse>\^-1)?$")


class BraidWordError(ValueError):
    """Malformed braid text or an out-of-range generator."""


class TokenKind(str, Enum):
    SIGMA = "sigma"
    RHO = "rho"


class SingularKind(str, Enum):
    SIGMA_PLUS = "sigma_plus"
    SIGMA_MINUS = "sigma_minus"
    RHO = "rho"
    RHO_INVERSE = "rho_inverse"


@dataclass(frozen=True)
class Generator:
    """One letter of a braid word.

    ``sign`` is the group-theoretic sign (always +1 for rho after
    normalization); ``drawn_sign`` is the sign as written in the input.
    """

    kind: TokenKind
    index: int
    sign: int = 1
    drawn_sign: int = 0

    def __post_init__(self) -> None:
        if self.sign not in (1, -1):
            raise BraidWordError(f"sign must be +1 or -1, got {self.sign}")
        if self.drawn_sign == 0:
            object.__setattr__(self, "drawn_sign", self.sign)
        elif self.drawn_sign not in (1, -1):
            raise BraidWordError(f"drawn sign must be +1 or -1, got {self.drawn_sign}")

    @property
    def transposition(self) -> Tuple[int, int]:
        return (self.index, self.index + 1)

    def to_text(self, normalized: bool = False) -> str:
        letter = "s" if self.kind == TokenKind.SIGMA else "r"
        sign = self.sign if normalized else self.drawn_sign
        return f"{letter}{self.index}" + ("^-1" if sign < 0 else "")

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "index": self.index, "sign": self.drawn_sign}


@dataclass(frozen=True)
class _BraidWord:
    strand_count: int
    tokens: Tuple[Generator, ...] = ()
    original_text: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if self.strand_count < 1:
            raise BraidWordError(f"strand count must be positive, got {self.strand_count}")
        object.__setattr__(self, "tokens", tuple(self.tokens))
        for position, token in enumerate(self.tokens):
            if not 1 <= token.index < self.strand_count:
                raise BraidWordError(
                    f"token {position + 1} ({token.to_text()}): generator index "
                    f"{token.index} out of range for {self.strand_count} strands"
                )

    @property
    def length(self) -> int:
        return len(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def to_text(self) -> str:
        """Serialize with the signs as drawn; parsing the result gives back an equal word."""
        return " ".join(token.to_text() for token in self.tokens)

    def normalized_text(self) -> str:
        return " ".join(token.to_text(normalized=True) for token in self.tokens)

    def to_json(self) -> Dict[str, Any]:
        return {"strands": self.strand_count, "tokens": [t.to_dict() for t in self.tokens]}


@dataclass(frozen=True)
class ClassicalBraidWord(_BraidWord):
    """Word in the Artin generators."""

    def __post_init__(self) -> None:
        super().__post_init__()
        for token in self.tokens:
            if token.kind != TokenKind.SIGMA:
                raise BraidWordError("classical words only contain sigma generators")

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "ClassicalBraidWord":
        tokens = [_token_from_dict(item, loop=False) for item in data.get("tokens", [])]
        return cls(strand_count=int(data["strands"]), tokens=tuple(tokens))


@dataclass(frozen=True)
class LoopBraidWord(_BraidWord):
    """Word in the loop braid generators sigma_i and rho_i."""

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "LoopBraidWord":
        tokens = [_token_from_dict(item, loop=True) for item in data.get("tokens", [])]
        return cls(strand_count=int(data["strands"]), tokens=tuple(tokens))


BraidWord = Union[ClassicalBraidWord, LoopBraidWord]


@dataclass(frozen=True)
class SignedSingularWord:
    strand_count: int
    tokens: Tuple[Tuple[SingularKind, int], ...]


@dataclass(frozen=True)
class ComponentDecomposition:
    """Cycles of the closure permutation.

    ``cycles[c]`` lists the start positions of the strands of component c+1
    in strand order: strand j starts at ``cycles[c][j-1]`` and ends where
    strand j+1 starts. Each cycle begins at its smallest position.
    """

    strand_count: int
    cycles: Tuple[Tuple[int, ...], ...]

    @property
    def strand_counts(self) -> Tuple[int, ...]:
        return tuple(len(cycle) for cycle in self.cycles)

    @property
    def component_count(self) -> int:
        return len(self.cycles)

    def start_position(self, component: int, strand: int) -> int:
        """Start position of strand ``strand`` (1-based) of component ``component`` (1-based)."""
        return self.cycles[component - 1][strand - 1]

    def strands(self) -> List[Tuple[int, int]]:
        """All (component, strand) labels, component-major."""
        return [(c + 1, j + 1) for c, cycle in enumerate(self.cycles) for j in range(len(cycle))]

    def to_dict(self) -> Dict[str, Any]:
        return {"strands": self.strand_count, "cycles": [list(c) for c in self.cycles]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ComponentDecomposition":
        return cls(
            strand_count=int(data["strands"]),
            cycles=tuple(tuple(int(p) for p in c) for c in data["cycles"]),
        )


def _token_from_dict(item: Dict[str, Any], loop: bool) -> Generator:
    try:
        kind = TokenKind(item.get("kind", "sigma"))
        index = int(item["index"])
        sign = int(item.get("sign", 1))
    except (KeyError, ValueError, TypeError) as e:
        raise BraidWordError(f"malformed token {item!r}: {e}") from e
    if not loop and kind != TokenKind.SIGMA:
        raise BraidWordError("classical words only contain sigma generators")
    return _make_token(kind, index, sign)


def _make_token(kind: TokenKind, index: int, sign: int) -> Generator:
    if kind == TokenKind.RHO:
        return Generator(kind=kind, index=index, sign=1, drawn_sign=sign)
    return Generator(kind=kind, index=index, sign=sign)


def _tokenize(text: str, loop: bool) -> List[Generator]:
    tokens: List[Generator] = []
    for position, raw in enumerate(text.split()):
        match = _TOKEN_RE.match(raw)
        if not match:
            raise BraidWordError(f"malformed token {position + 1}: {raw!r}")
        kind = TokenKind.SIGMA if match["kind"] == "s" else TokenKind.RHO
        if kind == TokenKind.RHO and not loop:
            raise BraidWordError(f"token {position + 1}: {raw!r} is not a classical generator")
        tokens.append(_make_token(kind, int(match["index"]), -1 if match["inverse"] else 1))
    return tokens


def parse_classical_word(text: str, strand_count: int) -> ClassicalBraidWord:
    return ClassicalBraidWord(
        strand_count=strand_count, tokens=tuple(_tokenize(text, loop=False)), original_text=text
    )


def parse_loop_word(text: str, strand_count: int) -> LoopBraidWord:
    word = LoopBraidWord(
        strand_count=strand_count, tokens=tuple(_tokenize(text, loop=True)), original_text=text
    )
    logger.debug("Parsed loop word %r -> %r", text, word.normalized_text())
    return word


def as_loop_word(word: ClassicalBraidWord) -> LoopBraidWord:
    """Thicken a classical braid: every classical crossing becomes an r-exchange."""
    tokens = tuple(_make_token(TokenKind.RHO, t.index, t.sign) for t in word.tokens)
    return LoopBraidWord(strand_count=word.strand_count, tokens=tokens)


def interval_permutations(word: _BraidWord) -> List[Tuple[int, int]]:
    """Transposition acting on positions in each interval [2pi k/l, 2pi (k+1)/l)."""
    return [token.transposition for token in word.tokens]


def apply_transpositions(strand_count: int, transpositions: Iterable[Tuple[int, int]]) -> Tuple[int, ...]:
    """Map start position -> end position after the swaps, as a 1-based tuple."""
    occupant = list(range(1, strand_count + 1))  # occupant[pos-1] = start position of the strand there
    for a, b in transpositions:
        occupant[a - 1], occupant[b - 1] = occupant[b - 1], occupant[a - 1]
    end = [0] * strand_count
    for pos, start in enumerate(occupant, start=1):
        end[start - 1] = pos
    return tuple(end)


def closure_permutation(word: _BraidWord) -> Tuple[int, ...]:
    return apply_transpositions(word.strand_count, interval_permutations(word))


def position_history(word: _BraidWord) -> List[List[int]]:
    """``history[k][p-1]`` is the position of the strand starting at p after k tokens."""
    s = word.strand_count
    occupant = list(range(1, s + 1))
    history: List[List[int]] = []

    def snapshot() -> List[int]:
        where = [0] * s
        for pos, start in enumerate(occupant, start=1):
            where[start - 1] = pos
        return where

    history.append(snapshot())
    for token in word.tokens:
        i = token.index
        occupant[i - 1], occupant[i] = occupant[i], occupant[i - 1]
        history.append(snapshot())
    return history


def strand_components(word: _BraidWord) -> ComponentDecomposition:
    perm = closure_permutation(word)
    seen = set()
    cycles: List[Tuple[int, ...]] = []
    for start in range(1, word.strand_count + 1):
        if start in seen:
            continue
        cycle = [start]
        seen.add(start)
        nxt = perm[start - 1]
        while nxt != start:
            cycle.append(nxt)
            seen.add(nxt)
            nxt = perm[nxt - 1]
        cycles.append(tuple(cycle))
    return ComponentDecomposition(strand_count=word.strand_count, cycles=tuple(cycles))


def loop_to_signed_singular(word: LoopBraidWord) -> SignedSingularWord:
    mapped: List[Tuple[SingularKind, int]] = []
    for token in word.tokens:
        if token.kind == TokenKind.RHO:
            mapped.append((SingularKind.RHO, token.index))
        elif token.sign > 0:
            mapped.append((SingularKind.SIGMA_PLUS, token.index))
        else:
            mapped.append((SingularKind.SIGMA_MINUS, token.index))
    return SignedSingularWord(strand_count=word.strand_count, tokens=tuple(mapped))


def is_homogeneous(word: _BraidWord) -> bool:
    """True when no generator occurs with both signs."""
    signs: Dict[Tuple[TokenKind, int], int] = {}
    for token in word.tokens:
        key = (token.kind, token.index)
        if signs.setdefault(key, token.drawn_sign) != token.drawn_sign:
            return False
    return True


def word_from_tokens(
    strand_count: int, letters: Sequence[Tuple[str, int, int]], loop: bool = True
) -> BraidWord:
    """Build a word from (kind, index, sign) triples; kind is "sigma" or "rho"."""
    tokens = tuple(_make_token(TokenKind(kind), index, sign) for kind, index, sign in letters)
    cls = LoopBraidWord if loop else ClassicalBraidWord
    return cls(strand_count=strand_count, tokens=tokens)
