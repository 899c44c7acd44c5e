"""Constructors - polynomials whose vanishing sets realize braids.

* classical braids: u - lambda (X + iY) per strand, semiholomorphic in (u, v)
* loop braids: one horizontal ring equation per strand, in x, y, z, v, vbar
* holomorphic variant: e^{-it} -> 1/v and the numerator is kept
* spinning surface braids: e^{i n chi} rotation, holomorphic in u, v, w
* generic torus parametrizations
* satellites: every ring replaced by a pulled-back classical closure

Strand coordinates are expanded in q = e^{it/s_C}; after the product over
the strands of a component only powers of q^{s_C} survive, and those are
renamed to the harmonic variable ``et`` (= e^{it}).
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from config import RunConfig

from .braid_words import (
    BraidWord,
    ClassicalBraidWord,
    LoopBraidWord,
    TokenKind,
    as_loop_word,
    position_history,
    strand_components,
)
from .poly_algebra import (
    DegreeReport,
    HolomorphicForm,
    LaurentPoly,
    compose,
    degrees,
    poly_product,
    poly_sum,
    reduce_harmonics,
    rescale,
    restore_harmonics,
    stereographic_pullback_3d,
    subst_holomorphic,
    subst_unit_circle,
)
from .strand_param import (
    StrandOptions,
    StrandPipelineError,
    StrandSystem,
    SystemKind,
    classical_strand_system,
    loop_strand_system,
)
from .trig_interp import TWO_PI, TorusTrigPoly, TrigPoly

logger = logging.getLogger(__name__)

LambdaArg = Union[str, float, None]


class ConstructionError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(message)
        self.stage = stage

    def __str__(self) -> str:
        return f"[{self.stage}] {super().__str__()}"


class Algorithm(str, Enum):
    CLASSICAL = "classical"
    LOOP = "loop"
    HOLOMORPHIC = "holomorphic"
    SPINNING = "spin"
    TORUS = "torus"
    SATELLITE = "satellite"


# ---------------------------------------------------------------------------
# degree bounds
# ---------------------------------------------------------------------------


def component_term(s_c: int, length: int, s: int) -> int:
    """floor(((s_C+1)(s_C l - 1) + l s_C (s - s_C) - 1) / 2), the G-degree bound of a component."""
    return ((s_c + 1) * (s_c * length - 1) + length * s_c * (s - s_c) - 1) // 2


@dataclass
class BoundReport:
    """Inputs and per-component pieces of a degree bound; ``bound`` is recomputable from them."""

    kind: str
    strand_count: int
    length: int
    strand_counts: List[int]
    terms: List[int]
    sigma_incidences: List[int]
    bound: int
    n: Optional[int] = None
    closed_form: Optional[int] = None
    satellite_degrees: Dict[int, int] = field(default_factory=dict)

    @property
    def contributions(self) -> List[int]:
        return [max(t, s_c) for t, s_c in zip(self.terms, self.strand_counts)]

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "kind": self.kind,
            "strands": self.strand_count,
            "length": self.length,
            "strand_counts": list(self.strand_counts),
            "terms": list(self.terms),
            "contributions": self.contributions,
            "sigma_incidences": list(self.sigma_incidences),
            "bound": self.bound,
        }
        if self.n is not None:
            data["n"] = self.n
        if self.closed_form is not None:
            data["closed_form"] = self.closed_form
        if self.satellite_degrees:
            data["satellite_degrees"] = {str(k): v for k, v in sorted(self.satellite_degrees.items())}
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "BoundReport":
        return cls(
            kind=data["kind"],
            strand_count=int(data["strands"]),
            length=int(data["length"]),
            strand_counts=[int(v) for v in data["strand_counts"]],
            terms=[int(v) for v in data["terms"]],
            sigma_incidences=[int(v) for v in data.get("sigma_incidences", [])],
            bound=int(data["bound"]),
            n=data.get("n"),
            closed_form=data.get("closed_form"),
            satellite_degrees={int(k): int(v) for k, v in data.get("satellite_degrees", {}).items()},
        )


def sigma_incidences(word: BraidWord) -> List[int]:
    """Number of sigma-crossings each component takes part in, with multiplicity."""
    decomposition = strand_components(word)
    owner: Dict[int, int] = {}
    for c, cycle in enumerate(decomposition.cycles):
        for start in cycle:
            owner[start] = c
    history = position_history(word)
    counts = [0] * decomposition.component_count
    for k, token in enumerate(word.tokens):
        if not (isinstance(word, LoopBraidWord) and token.kind == TokenKind.SIGMA):
            continue
        where = history[k]
        for position in token.transposition:
            start = where.index(position) + 1
            counts[owner[start]] += 1
    return counts


def _base_report(word: BraidWord, kind: str) -> BoundReport:
    decomposition = strand_components(word)
    s, ell = word.strand_count, word.length
    counts = list(decomposition.strand_counts)
    return BoundReport(
        kind=kind,
        strand_count=s,
        length=ell,
        strand_counts=counts,
        terms=[component_term(s_c, ell, s) for s_c in counts],
        sigma_incidences=sigma_incidences(word),
        bound=0,
    )


def classical_bound(word: BraidWord) -> BoundReport:
    """Sum over components of max{T_C, s_C}."""
    report = _base_report(word, "classical")
    report.bound = sum(report.contributions)
    return report


def loop_bound(word: BraidWord) -> BoundReport:
    """Twice the classical bound."""
    report = _base_report(word, "loop")
    report.bound = 2 * sum(report.contributions)
    return report


def corollary_bound(word: BraidWord) -> BoundReport:
    """Bound for loop braids whose closure is a single component."""
    report = _base_report(word, "corollary")
    if len(report.strand_counts) != 1:
        raise ConstructionError("bounds", f"closure has {len(report.strand_counts)} components, expected one")
    s, ell = word.strand_count, word.length
    report.bound = 2 * (((s + 1) * (s * ell - 1) - 1) // 2)
    return report


def holomorphic_bound(word: BraidWord) -> BoundReport:
    report = _base_report(word, "holomorphic")
    report.bound = 2 * sum(report.contributions) + 2 * sum(report.terms)
    return report


def spinning_bound(word: BraidWord, n: int) -> BoundReport:
    report = _base_report(word, "spinning")
    report.n = n
    report.bound = 2 * sum(report.contributions) + 2 * sum(report.terms) + abs(n)
    return report


def satellite_bound(
    word: LoopBraidWord,
    satellites: Mapping[int, ClassicalBraidWord],
    satellite_degrees: Optional[Mapping[int, int]] = None,
) -> BoundReport:
    """Sum_i deg f_i * max{T_i, s_i}; ``closed_form`` replaces deg f_i by its own bound.

    Components without a satellite word carry the plain ring (degree 2).
    """
    report = _base_report(word, "satellite")
    actual = dict(satellite_degrees or {})
    total = 0
    closed = 0
    for c, contribution in enumerate(report.contributions, start=1):
        sat = satellites.get(c)
        if sat is None:
            own = 2
        else:
            inner = _base_report(sat, "classical")
            own = 2 * sum(inner.contributions)
        degree = actual.get(c, own)
        actual[c] = degree
        total += degree * contribution
        closed += own * contribution
    report.bound = total
    report.closed_form = closed
    report.satellite_degrees = actual
    return report


def degree_bound(word: BraidWord, n: Optional[int] = None, kind: Optional[str] = None) -> BoundReport:
    """Pick the bound that applies to ``word`` (or the named ``kind``)."""
    if kind is None:
        if n is not None:
            kind = "spinning"
        elif isinstance(word, LoopBraidWord):
            kind = "loop"
        else:
            kind = "classical"
    if kind == "classical":
        return classical_bound(word)
    if kind == "loop":
        return loop_bound(word)
    if kind == "corollary":
        return corollary_bound(word)
    if kind == "holomorphic":
        return holomorphic_bound(word)
    if kind == "spinning":
        return spinning_bound(word, n or 0)
    raise ConstructionError("bounds", f"unknown bound kind {kind!r}")


# ---------------------------------------------------------------------------
# harmonic expansion of strand coordinates
# ---------------------------------------------------------------------------


def strand_series(poly: TrigPoly, strand: int, strand_count: int, var: str = "et") -> LaurentPoly:
    """poly((t + 2 pi (j-1)) / s) as a Laurent polynomial in q = e^{it/s}."""
    terms: Dict[Tuple[int, ...], complex] = {}
    for k, coef in poly.exponential_terms().items():
        terms[(k,)] = coef * cmath.exp(1j * TWO_PI * k * (strand - 1) / strand_count)
    return LaurentPoly.from_terms((var,), terms)


def torus_series(
    poly: TorusTrigPoly, phi_strand: int, phi_count: int, chi_strand: int, chi_count: int
) -> LaurentPoly:
    terms: Dict[Tuple[int, ...], complex] = {}
    for (m, n), coef in poly.exponential_terms().items():
        phase = m * (phi_strand - 1) / phi_count + n * (chi_strand - 1) / chi_count
        terms[(m, n)] = coef * cmath.exp(1j * TWO_PI * phase)
    return LaurentPoly.from_terms(("et", "ec"), terms)


def _reduce(product: LaurentPoly, var: str, period: int, label: str) -> LaurentPoly:
    reduced, residue = reduce_harmonics(product, var, var, period)
    if residue > 1e-6:
        raise ConstructionError(
            "expand", f"{label}: fractional harmonics do not cancel (relative residue {residue:.3g})"
        )
    if residue:
        logger.debug("%s: dropped fractional harmonics of relative size %.2e", label, residue)
    return reduced


def _expand(factors: Sequence[LaurentPoly], config: RunConfig) -> LaurentPoly:
    return poly_product(factors, max_workers=config.threads, chunk_terms=config.mul_chunk_terms)


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------


@dataclass
class ConstructionResult:
    """Output of a construction.

    ``g`` keeps the harmonics explicit (``et``/``ec``); ``f`` is the
    polynomial after substitution. For the holomorphic variant ``ftilde``
    carries the numerator and the cleared v-power; for spinning and torus
    constructions ``f`` already is that numerator.
    """

    algorithm: Algorithm
    g: LaurentPoly
    f: LaurentPoly
    lam: float = 1.0
    word: Optional[BraidWord] = None
    system: Optional[StrandSystem] = None
    ftilde: Optional[HolomorphicForm] = None
    bounds: Optional[BoundReport] = None
    n: int = 0
    lambda_evidence: Optional[Dict[str, Any]] = None
    satellite_parts: Dict[int, LaurentPoly] = field(default_factory=dict)
    satellite_words: Dict[int, ClassicalBraidWord] = field(default_factory=dict)
    satellite_lambdas: Dict[int, float] = field(default_factory=dict)
    surface: List["TorusComponent"] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def degrees(self) -> DegreeReport:
        return degrees(self.checked_polynomial)

    @property
    def checked_polynomial(self) -> LaurentPoly:
        """The polynomial the degree bound refers to."""
        if self.algorithm == Algorithm.HOLOMORPHIC and self.ftilde is not None:
            return self.ftilde.numerator
        return self.f

    @property
    def within_bound(self) -> Optional[bool]:
        if self.bounds is None:
            return None
        return self.degrees.total <= self.bounds.bound

    def at_lambda(self, lam: float) -> "ConstructionResult":
        """Same construction rescaled to another lambda."""
        if self.algorithm in (Algorithm.SPINNING, Algorithm.TORUS):
            raise ConstructionError("lambda", f"{self.algorithm.value} constructions have no lambda")
        if not lam > 0:
            raise ConstructionError("lambda", f"lambda must be positive, got {lam}")
        ratio = self.lam / lam
        if self.algorithm == Algorithm.CLASSICAL:
            s = self.g.degree_in("u")
            g = rescale(self.g, {"u": ratio}) * (1.0 / ratio) ** s
        else:
            g = rescale(self.g, {"x": ratio, "y": ratio, "z": ratio})
        return replace(
            self,
            g=g,
            f=subst_unit_circle(g),
            lam=float(lam),
            ftilde=None if self.ftilde is None else subst_holomorphic(g),
            notes=list(self.notes),
        )

    def to_bundle(self, emit: Sequence[str] = ("g", "f", "ftilde", "bounds")) -> Dict[str, Any]:
        bundle: Dict[str, Any] = {
            "algorithm": self.algorithm.value,
            "lambda": self.lam,
            "n": self.n,
            "word": None if self.word is None else {
                "type": "loop" if isinstance(self.word, LoopBraidWord) else "classical",
                **self.word.to_json(),
            },
            "system": None if self.system is None else self.system.to_json(),
            "degrees": self.degrees.to_dict(),
            "within_bound": self.within_bound,
            "notes": list(self.notes),
        }
        if self.lambda_evidence is not None:
            bundle["lambda_evidence"] = self.lambda_evidence
        if "g" in emit:
            bundle["g"] = self.g.to_json()
        if "f" in emit:
            bundle["f"] = self.f.to_json()
        if "ftilde" in emit and self.ftilde is not None:
            bundle["ftilde"] = {"numerator": self.ftilde.numerator.to_json(), "powers": dict(self.ftilde.powers)}
        if "bounds" in emit and self.bounds is not None:
            bundle["bounds"] = self.bounds.to_dict()
        if self.satellite_parts:
            bundle["satellite_parts"] = {str(c): p.to_json() for c, p in sorted(self.satellite_parts.items())}
        if self.satellite_words:
            bundle["satellites"] = {
                str(c): {**w.to_json(), "lambda": self.satellite_lambdas.get(c)}
                for c, w in sorted(self.satellite_words.items())
            }
        if self.surface:
            bundle["torus_components"] = [comp.to_dict() for comp in self.surface]
        return bundle

    @classmethod
    def from_bundle(cls, data: Dict[str, Any]) -> "ConstructionResult":
        try:
            algorithm = Algorithm(data["algorithm"])
        except (KeyError, ValueError) as e:
            raise ConstructionError("bundle", f"missing or unknown algorithm: {e}") from e
        word_data = data.get("word")
        word: Optional[BraidWord] = None
        if word_data:
            word_cls = LoopBraidWord if word_data.get("type") == "loop" else ClassicalBraidWord
            word = word_cls.from_json(word_data)
        system = StrandSystem.from_json(data["system"]) if data.get("system") else None

        if "g" in data:
            g = LaurentPoly.from_json(data["g"])
        elif "f" in data and algorithm in (Algorithm.CLASSICAL, Algorithm.LOOP, Algorithm.SATELLITE):
            g = restore_harmonics(LaurentPoly.from_json(data["f"]))
        else:
            raise ConstructionError("bundle", "bundle holds neither g nor a recoverable f")
        f = LaurentPoly.from_json(data["f"]) if "f" in data else None

        ftilde = None
        if "ftilde" in data:
            ftilde = HolomorphicForm(
                numerator=LaurentPoly.from_json(data["ftilde"]["numerator"]),
                powers={k: int(v) for k, v in data["ftilde"].get("powers", {}).items()},
            )
        if f is None:
            if algorithm in (Algorithm.SPINNING, Algorithm.TORUS):
                f = subst_holomorphic(g).numerator
            else:
                f = subst_unit_circle(g)
        return cls(
            algorithm=algorithm,
            g=g,
            f=f,
            lam=float(data.get("lambda", 1.0)),
            word=word,
            system=system,
            ftilde=ftilde,
            bounds=BoundReport.from_dict(data["bounds"]) if data.get("bounds") else None,
            n=int(data.get("n", 0)),
            lambda_evidence=data.get("lambda_evidence"),
            satellite_parts={int(c): LaurentPoly.from_json(p) for c, p in data.get("satellite_parts", {}).items()},
            satellite_words={int(c): ClassicalBraidWord.from_json(w) for c, w in data.get("satellites", {}).items()},
            satellite_lambdas={
                int(c): float(w["lambda"]) for c, w in data.get("satellites", {}).items() if w.get("lambda") is not None
            },
            surface=[TorusComponent.from_dict(c) for c in data.get("torus_components", [])],
            notes=list(data.get("notes", [])),
        )


def _check_bound(result: ConstructionResult) -> ConstructionResult:
    ok = result.within_bound
    if ok is False:
        message = (
            f"total degree {result.degrees.total} exceeds the {result.bounds.kind} bound {result.bounds.bound}"
        )
        logger.warning(message)
        result.notes.append(message)
    return result


def _options(config: RunConfig) -> StrandOptions:
    return StrandOptions.from_settings(config)


def _resolve_lambda(
    result: ConstructionResult, lam: LambdaArg, config: RunConfig
) -> ConstructionResult:
    if lam is None:
        lam = config.lambda_mode
    if isinstance(lam, str):
        if lam != "auto":
            lam = float(lam)
        else:
            from .verifier import select_lambda

            selection = select_lambda(result, config)
            result.lambda_evidence = selection.to_dict()
            return result.at_lambda(selection.lam)
    return result.at_lambda(float(lam))


def _pipeline(stage_call, *args: Any) -> StrandSystem:
    try:
        return stage_call(*args)
    except StrandPipelineError as e:
        raise ConstructionError(f"strands/{e.stage.value}", str(e)) from e


# ---------------------------------------------------------------------------
# Algorithm 0: classical braids
# ---------------------------------------------------------------------------


def classical_g(system: StrandSystem, config: Optional[RunConfig] = None) -> LaurentPoly:
    """prod_C prod_j (u - (X_{C,j} + i Y_{C,j})) at lambda = 1."""
    config = config or RunConfig()
    u = LaurentPoly.variable("u")
    blocks = []
    for c in system.components:
        s_c = system.strand_count(c)
        factors = [
            u - (strand_series(system.F[c], j, s_c) + 1j * strand_series(system.G[c], j, s_c))
            for j in range(1, s_c + 1)
        ]
        blocks.append(_reduce(_expand(factors, config), "et", s_c, f"component {c}"))
    return _expand(blocks, config)


def algorithm0(
    word: ClassicalBraidWord,
    lam: LambdaArg = None,
    config: Optional[RunConfig] = None,
    system: Optional[StrandSystem] = None,
) -> ConstructionResult:
    """Semiholomorphic f(u, v, vbar) whose zeros on S^3 close up the braid."""
    config = config or RunConfig()
    if system is None:
        system = _pipeline(classical_strand_system, word, _options(config))
    g = classical_g(system, config)
    base = ConstructionResult(
        algorithm=Algorithm.CLASSICAL,
        g=g,
        f=subst_unit_circle(g),
        word=word,
        system=system,
        bounds=classical_bound(word),
    )
    result = _resolve_lambda(base, lam, config)
    logger.info("Classical construction: %d terms, degree %d, lambda=%.4g", len(result.f), result.degrees.total, result.lam)
    return _check_bound(result)


# ---------------------------------------------------------------------------
# Algorithm 1: loop braids
# ---------------------------------------------------------------------------


def ring_factor(X: LaurentPoly, Y: LaurentPoly, Z: LaurentPoly, R: LaurentPoly) -> LaurentPoly:
    """(x - X)^2 + (y - Y)^2 - R^2 + i (z - Z)."""
    x, y, z = (LaurentPoly.variable(n) for n in ("x", "y", "z"))
    dx = x - X
    dy = y - Y
    return dx * dx + dy * dy - R * R + 1j * (z - Z)


def _strand_coordinates(system: StrandSystem, c: int, j: int) -> Tuple[LaurentPoly, ...]:
    s_c = system.strand_count(c)
    return tuple(
        strand_series(table.get(c, TrigPoly.zero()), j, s_c)
        for table in (system.F, system.G, system.H, system.R)
    )


def loop_g(system: StrandSystem, config: Optional[RunConfig] = None) -> LaurentPoly:
    """prod over all rings of the ring equation, at lambda = 1."""
    config = config or RunConfig()
    if system.kind != SystemKind.LOOP:
        raise ConstructionError("expand", "ring equations need a loop strand system")
    blocks = []
    for c in system.components:
        s_c = system.strand_count(c)
        factors = [ring_factor(*_strand_coordinates(system, c, j)) for j in range(1, s_c + 1)]
        blocks.append(_reduce(_expand(factors, config), "et", s_c, f"component {c}"))
    return _expand(blocks, config)


def algorithm1(
    word: LoopBraidWord,
    lam: LambdaArg = None,
    config: Optional[RunConfig] = None,
    system: Optional[StrandSystem] = None,
) -> ConstructionResult:
    """Semiholomorphic f(x, y, z, v, vbar) whose zeros on S^4 contain the closed loop braid."""
    config = config or RunConfig()
    if system is None:
        system = _pipeline(loop_strand_system, word, _options(config))
    g = loop_g(system, config)
    base = ConstructionResult(
        algorithm=Algorithm.LOOP,
        g=g,
        f=subst_unit_circle(g),
        word=word,
        system=system,
        bounds=loop_bound(word),
    )
    result = _resolve_lambda(base, lam, config)
    logger.info("Loop construction: %d terms, degree %d, lambda=%.4g", len(result.f), result.degrees.total, result.lam)
    return _check_bound(result)


def algorithm1_holomorphic(
    word: LoopBraidWord,
    lam: LambdaArg = None,
    config: Optional[RunConfig] = None,
    system: Optional[StrandSystem] = None,
) -> ConstructionResult:
    """As :func:`algorithm1`, plus the numerator of e^{-it} -> 1/v, holomorphic in v."""
    config = config or RunConfig()
    if system is None:
        system = _pipeline(loop_strand_system, word, _options(config))
    g = loop_g(system, config)
    base = ConstructionResult(
        algorithm=Algorithm.HOLOMORPHIC,
        g=g,
        f=subst_unit_circle(g),
        word=word,
        system=system,
        ftilde=subst_holomorphic(g),
        bounds=holomorphic_bound(word),
    )
    result = _resolve_lambda(base, lam, config)
    logger.info(
        "Holomorphic loop construction: numerator degree %d, v-denominator power %d",
        result.degrees.total,
        result.ftilde.denominator_power,
    )
    return _check_bound(result)


# ---------------------------------------------------------------------------
# Algorithm 2 and the torus builder
# ---------------------------------------------------------------------------


def algorithm2(
    word: ClassicalBraidWord,
    n: int,
    config: Optional[RunConfig] = None,
    system: Optional[StrandSystem] = None,
) -> ConstructionResult:
    """Spinning braid B(n): numerator of prod (u - e^{i n chi} (X + iY)) after v, w substitution."""
    config = config or RunConfig()
    if system is None:
        system = _pipeline(classical_strand_system, word, _options(config))
    u = LaurentPoly.variable("u")
    twist = LaurentPoly.variable("ec", n) if n else LaurentPoly.constant(1.0)
    blocks = []
    for c in system.components:
        s_c = system.strand_count(c)
        factors = [
            u - twist * (strand_series(system.F[c], j, s_c) + 1j * strand_series(system.G[c], j, s_c))
            for j in range(1, s_c + 1)
        ]
        blocks.append(_reduce(_expand(factors, config), "et", s_c, f"component {c}"))
    g = _expand(blocks, config)
    form = subst_holomorphic(g)
    result = ConstructionResult(
        algorithm=Algorithm.SPINNING,
        g=g,
        f=form.numerator,
        word=word,
        system=system,
        ftilde=form,
        bounds=spinning_bound(word, n),
        n=n,
    )
    w_degree = result.f.degree_in("w")
    if n and w_degree != abs(n):
        result.notes.append(f"w-degree is {w_degree}, not |n| = {abs(n)}")
        logger.info("Spinning construction: w-degree %d (n=%d)", w_degree, n)
    return _check_bound(result)


@dataclass
class TorusComponent:
    """One component of a surface braid on the torus: (F + iG)(phi', chi') on s_phi x s_chi sheets."""

    F: TorusTrigPoly
    G: TorusTrigPoly
    phi_strands: int = 1
    chi_strands: int = 1

    def value(self, phi: Any, chi: Any, j: int, k: int) -> Any:
        p = (np.asarray(phi) + TWO_PI * (j - 1)) / self.phi_strands
        q = (np.asarray(chi) + TWO_PI * (k - 1)) / self.chi_strands
        return self.F.evaluate(p, q) + 1j * self.G.evaluate(p, q)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "F": self.F.to_json(),
            "G": self.G.to_json(),
            "strands": [self.phi_strands, self.chi_strands],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TorusComponent":
        s1, s2 = data.get("strands", [1, 1])
        return cls(
            F=TorusTrigPoly.from_json(data["F"]),
            G=TorusTrigPoly.from_json(data["G"]),
            phi_strands=int(s1),
            chi_strands=int(s2),
        )


def _check_torus_collisions(components: Sequence[TorusComponent], grid: int = 128) -> float:
    angles = np.linspace(0.0, TWO_PI, grid, endpoint=False)
    phi, chi = np.meshgrid(angles, angles, indexing="ij")
    sheets = [
        comp.value(phi, chi, j, k)
        for comp in components
        for j in range(1, comp.phi_strands + 1)
        for k in range(1, comp.chi_strands + 1)
    ]
    closest = math.inf
    for a in range(len(sheets)):
        for b in range(a + 1, len(sheets)):
            gap = float(np.min(np.abs(sheets[a] - sheets[b])))
            closest = min(closest, gap)
    scale = 1.0 + max(float(np.max(np.abs(s))) for s in sheets)
    if closest < 1e-9 * scale:
        raise ConstructionError("torus", f"strands collide on the {grid}x{grid} grid (gap {closest:.3g})")
    return closest


def torus_builder(
    components: Sequence[TorusComponent],
    config: Optional[RunConfig] = None,
) -> ConstructionResult:
    """Holomorphic f(u, v, w) for a surface braid given by torus parametrizations."""
    config = config or RunConfig()
    if not components:
        raise ConstructionError("torus", "no components given")
    gap = _check_torus_collisions(components)
    u = LaurentPoly.variable("u")
    blocks = []
    for index, comp in enumerate(components, start=1):
        factors = [
            u - (
                torus_series(comp.F, j, comp.phi_strands, k, comp.chi_strands)
                + 1j * torus_series(comp.G, j, comp.phi_strands, k, comp.chi_strands)
            )
            for j in range(1, comp.phi_strands + 1)
            for k in range(1, comp.chi_strands + 1)
        ]
        block = _expand(factors, config)
        block = _reduce(block, "et", comp.phi_strands, f"component {index}")
        block = _reduce(block, "ec", comp.chi_strands, f"component {index}")
        blocks.append(block)
    g = _expand(blocks, config)
    form = subst_holomorphic(g)
    logger.info("Torus construction: %d components, closest strand gap %.3g", len(components), gap)
    return ConstructionResult(
        algorithm=Algorithm.TORUS, g=g, f=form.numerator, ftilde=form, surface=list(components)
    )


def spinning_parametrization(system: StrandSystem, n: int) -> List[TorusComponent]:
    """The spinning braid B(n) written as torus parametrizations: e^{i n chi}(F + iG)."""
    sign = 1 if n >= 0 else -1
    k = abs(n)
    out = []
    for c in system.components:
        F, G = system.F[c], system.G[c]
        cos_f, cos_g = TorusTrigPoly.from_trig(F, k, "c"), TorusTrigPoly.from_trig(G, k, "c")
        sin_f, sin_g = TorusTrigPoly.from_trig(F, k, "s"), TorusTrigPoly.from_trig(G, k, "s")
        out.append(
            TorusComponent(
                F=cos_f - sin_g * sign,
                G=sin_f * sign + cos_g,
                phi_strands=system.strand_count(c),
                chi_strands=1,
            )
        )
    return out


# ---------------------------------------------------------------------------
# satellites
# ---------------------------------------------------------------------------


def unit_ring() -> LaurentPoly:
    """(x1^2 + x2^2 - 1) + i x3: the unknot as the unit circle of the x1x2-plane."""
    x1, x2, x3 = (LaurentPoly.variable(n) for n in ("x1", "x2", "x3"))
    return x1 * x1 + x2 * x2 - 1.0 + 1j * x3


def satellite_factor(
    pattern: LaurentPoly,
    degree: int,
    X: LaurentPoly,
    Y: LaurentPoly,
    Z: LaurentPoly,
    R: LaurentPoly,
) -> LaurentPoly:
    """R^degree * pattern((x - X)/R, (y - Y)/R, z - Z), expanded without division."""
    x, y, z = (LaurentPoly.variable(n) for n in ("x", "y", "z"))
    mapping = {"x1": x - X, "x2": y - Y, "x3": z - Z}
    planar = pattern.column("x1") + pattern.column("x2")
    radius_powers: Dict[int, LaurentPoly] = {}
    pieces = []
    for a in sorted(set(int(v) for v in planar)):
        mask = planar == a
        part = LaurentPoly(pattern.variables, pattern.exponents[mask], pattern.coeffs[mask], prune_tolerance=0.0)
        k = degree - a
        if k not in radius_powers:
            radius_powers[k] = R ** k
        pieces.append(compose(part, mapping) * radius_powers[k])
    return poly_sum(pieces)


def satellite_builder(
    word: LoopBraidWord,
    satellites: Mapping[int, ClassicalBraidWord],
    lam: LambdaArg = None,
    config: Optional[RunConfig] = None,
    system: Optional[StrandSystem] = None,
    satellite_lambda: LambdaArg = "auto",
) -> ConstructionResult:
    """Loop braid whose rings are replaced by closures of the given classical braids.

    ``satellites`` maps component numbers (1-based) to classical words; other
    components keep the plain ring.
    """
    config = config or RunConfig()
    if system is None:
        system = _pipeline(loop_strand_system, word, _options(config))
    unknown = sorted(set(satellites).difference(system.components))
    if unknown:
        raise ConstructionError("satellite", f"no components {unknown} in the closure")

    patterns: Dict[int, LaurentPoly] = {}
    pattern_degrees: Dict[int, int] = {}
    notes: List[str] = []
    inner_lambdas: Dict[int, float] = {}
    for c in system.components:
        if c in satellites:
            inner = algorithm0(satellites[c], lam=satellite_lambda, config=config)
            inner_lambdas[c] = inner.lam
            patterns[c] = stereographic_pullback_3d(inner.f)
            notes.append(f"component {c}: satellite {satellites[c].to_text()!r} at lambda {inner.lam:.4g}")
        else:
            patterns[c] = unit_ring()
        pattern_degrees[c] = degrees(patterns[c]).total

    blocks = []
    for c in system.components:
        s_c = system.strand_count(c)
        factors = [
            satellite_factor(patterns[c], pattern_degrees[c], *_strand_coordinates(system, c, j))
            for j in range(1, s_c + 1)
        ]
        blocks.append(_reduce(_expand(factors, config), "et", s_c, f"component {c}"))
    g = _expand(blocks, config)
    base = ConstructionResult(
        algorithm=Algorithm.SATELLITE,
        g=g,
        f=subst_unit_circle(g),
        word=word,
        system=system,
        bounds=satellite_bound(word, satellites, pattern_degrees),
        satellite_parts={c: p for c, p in patterns.items() if c in satellites},
        satellite_words=dict(satellites),
        satellite_lambdas=inner_lambdas,
        notes=notes,
    )
    result = _resolve_lambda(base, lam, config)
    logger.info("Satellite construction: %d terms, degree %d", len(result.f), result.degrees.total)
    return _check_bound(result)


def build(
    word: BraidWord,
    algorithm: Union[Algorithm, str],
    lam: LambdaArg = None,
    n: int = 0,
    config: Optional[RunConfig] = None,
) -> ConstructionResult:
    """Dispatch on the algorithm name; used by the CLI."""
    algorithm = Algorithm(algorithm)
    if word.length < 1:
        raise ConstructionError("input", "the empty word has no crossings to interpolate (length 0)")
    if algorithm == Algorithm.CLASSICAL:
        return algorithm0(_classical(word), lam, config)
    if algorithm == Algorithm.LOOP:
        return algorithm1(_loop(word), lam, config)
    if algorithm == Algorithm.HOLOMORPHIC:
        return algorithm1_holomorphic(_loop(word), lam, config)
    if algorithm == Algorithm.SPINNING:
        return algorithm2(_classical(word), n, config)
    raise ConstructionError("input", f"algorithm {algorithm.value!r} needs more than a braid word")


def _classical(word: BraidWord) -> ClassicalBraidWord:
    if isinstance(word, ClassicalBraidWord):
        return word
    raise ConstructionError("input", "this construction takes a classical braid word")


def _loop(word: BraidWord) -> LoopBraidWord:
    if isinstance(word, LoopBraidWord):
        return word
    return as_loop_word(word)
