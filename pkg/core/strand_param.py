"""Strand parametrization - from a braid word to trigonometric strand data.

Pipeline stages (each failure is raised as ``StrandPipelineError`` tagged
with its stage):

1. x-data: lane position of every strand at the sample times 2 pi k / l.
2. F: interpolate the x-coordinate of each component.
3. crossings: find every crossing of the interpolated x-graphs and classify
   it against the target word.
4. y-data / G: assign y-values per strand and interval, interpolate.
5. H (loop only): Hermite data at sigma-crossings.
6. R (loop only): radii at sigma-crossings, positivity shift and the
   common scaling epsilon that keeps rings apart.

Strand j of component C is parametrized through the angle
(t + 2 pi (j - 1)) / s_C of the component's trigonometric polynomials.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import optimize

from .braid_words import (
    BraidWord,
    ClassicalBraidWord,
    ComponentDecomposition,
    LoopBraidWord,
    TokenKind,
    position_history,
    strand_components,
)
from .trig_interp import (
    TWO_PI,
    HermiteNode,
    InterpolationError,
    TrigPoly,
    hermite_interpolate,
    interpolate,
)

logger = logging.getLogger(__name__)

Strand = Tuple[int, int]  # (component, strand), both 1-based


class Stage(str, Enum):
    X_DATA = "x-data"
    F = "F"
    CROSSINGS = "crossings"
    Y_DATA = "y-data"
    G = "G"
    H = "H"
    R = "R"


class StrandPipelineError(RuntimeError):
    def __init__(self, stage: Stage, message: str):
        super().__init__(message)
        self.stage = stage

    def __str__(self) -> str:
        return f"[{self.stage.value}] {super().__str__()}"


class TangentialCrossingError(StrandPipelineError):
    pass


class RingCollisionError(StrandPipelineError):
    pass


class SystemKind(str, Enum):
    CLASSICAL = "classical"
    LOOP = "loop"


class CrossingClass(str, Enum):
    TARGET_RHO = "matches-target-rho"
    TARGET_SIGMA = "matches-target-sigma"
    SPURIOUS = "spurious"


@dataclass
class StrandOptions:
    """Numeric knobs of the pipeline; ``from_settings`` reads them from the run config."""

    crossing_samples: int = 8192
    bisection_tolerance: float = 1e-10
    verification_grid: int = 4096
    lane_order: str = "descending"
    coefficient_limit: float = 1e6
    jitter_attempts: int = 3
    jitter_fraction: float = 0.1
    epsilon_fraction: float = 0.9
    condition_limit: float = 1e12
    interp_tolerance: float = 1e-9
    hermite_tolerance: float = 1e-8
    seed: int = 0

    @classmethod
    def from_settings(cls, settings: Any) -> "StrandOptions":
        values = {name: getattr(settings, name) for name in cls.__dataclass_fields__ if hasattr(settings, name)}
        return cls(**values)


@dataclass
class CrossingEvent:
    """A crossing of two interpolated x-graphs.

    For target events ``pair[0]`` is the strand at position i and ``pair[1]``
    the strand at position i+1 at the start of the interval.
    """

    time: float
    pair: Tuple[Strand, Strand]
    interval: int
    classification: CrossingClass
    sign: int = 0

    @property
    def is_target(self) -> bool:
        return self.classification != CrossingClass.SPURIOUS

    def to_dict(self) -> Dict[str, Any]:
        return {
            "time": self.time,
            "pair": [list(self.pair[0]), list(self.pair[1])],
            "interval": self.interval,
            "classification": self.classification.value,
            "sign": self.sign,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CrossingEvent":
        a, b = data["pair"]
        return cls(
            time=float(data["time"]),
            pair=((int(a[0]), int(a[1])), (int(b[0]), int(b[1]))),
            interval=int(data["interval"]),
            classification=CrossingClass(data["classification"]),
            sign=int(data.get("sign", 0)),
        )


def strand_angle(t: Union[float, np.ndarray], strand: int, strand_count: int) -> Union[float, np.ndarray]:
    return (t + TWO_PI * (strand - 1)) / strand_count


def lane_value(position: int, strand_count: int, lane_order: str = "descending") -> float:
    centre = (strand_count + 1) / 2.0
    if lane_order == "descending":
        return centre - position
    if lane_order == "ascending":
        return position - centre
    raise ValueError(f"unknown lane order {lane_order!r}")


@dataclass
class StrandSystem:
    """Per-component trigonometric data describing a geometric (loop) braid."""

    kind: SystemKind
    decomposition: ComponentDecomposition
    F: Dict[int, TrigPoly]
    G: Dict[int, TrigPoly]
    H: Dict[int, TrigPoly] = field(default_factory=dict)
    R: Dict[int, TrigPoly] = field(default_factory=dict)
    epsilon: float = 1.0
    events: List[CrossingEvent] = field(default_factory=list)
    word: Optional[BraidWord] = None
    lane_order: str = "descending"
    clearance: float = math.inf
    attempts: int = 1

    @property
    def components(self) -> List[int]:
        return list(range(1, self.decomposition.component_count + 1))

    def strand_count(self, component: int) -> int:
        return self.decomposition.strand_counts[component - 1]

    def strands(self) -> List[Strand]:
        return self.decomposition.strands()

    def _coord(self, table: Dict[int, TrigPoly], strand: Strand, t: Any) -> Any:
        c, j = strand
        poly = table.get(c)
        if poly is None:
            return np.zeros_like(np.asarray(t, dtype=float)) if np.ndim(t) else 0.0
        return poly.evaluate(strand_angle(t, j, self.strand_count(c)))

    def x(self, strand: Strand, t: Any) -> Any:
        return self._coord(self.F, strand, t)

    def y(self, strand: Strand, t: Any) -> Any:
        return self._coord(self.G, strand, t)

    def z(self, strand: Strand, t: Any) -> Any:
        return self._coord(self.H, strand, t)

    def radius(self, strand: Strand, t: Any) -> Any:
        return self._coord(self.R, strand, t)

    def velocity(self, table_name: str, strand: Strand, t: Any) -> Any:
        """d/dt of one coordinate of a strand."""
        c, j = strand
        table = getattr(self, table_name)
        if c not in table:
            return 0.0
        s_c = self.strand_count(c)
        return table[c].derivative().evaluate(strand_angle(t, j, s_c)) / s_c

    def ring_points(self, strand: Strand, t: np.ndarray, phi: np.ndarray) -> np.ndarray:
        """Points (x + rho cos phi, y + rho sin phi, z) on a strand's ring; shape (..., 3)."""
        t, phi = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(phi, dtype=float))
        rho = self.radius(strand, t) if self.kind == SystemKind.LOOP else 0.0
        return np.stack(
            [self.x(strand, t) + rho * np.cos(phi), self.y(strand, t) + rho * np.sin(phi), self.z(strand, t)],
            axis=-1,
        )

    def positions_at(self, t: float) -> Dict[Strand, int]:
        """Diagram position of each strand, read from the x-order at time t."""
        strands = self.strands()
        xs = np.array([self.x(s, t) for s in strands])
        order = np.argsort(-xs if self.lane_order == "descending" else xs, kind="stable")
        return {strands[idx]: rank + 1 for rank, idx in enumerate(order)}

    def induced_transposition(self, interval: int, length: int) -> Optional[Tuple[int, int]]:
        """Positions exchanged over one interval, or None if it is not a single adjacent swap."""
        before = self.positions_at(TWO_PI * interval / length)
        after = self.positions_at(TWO_PI * (interval + 1) / length)
        moved = sorted(before[s] for s in before if before[s] != after[s])
        if len(moved) == 2 and moved[1] == moved[0] + 1:
            a, b = moved
            swapped = {s for s in before if before[s] in moved}
            if all(after[s] == (b if before[s] == a else a) for s in swapped):
                return (a, b)
        return None

    def to_json(self) -> Dict[str, Any]:
        def table(t: Dict[int, TrigPoly]) -> Dict[str, Any]:
            return {str(c): p.to_json() for c, p in sorted(t.items())}

        return {
            "kind": self.kind.value,
            "decomposition": self.decomposition.to_dict(),
            "F": table(self.F),
            "G": table(self.G),
            "H": table(self.H),
            "R": table(self.R),
            "epsilon": self.epsilon,
            "clearance": None if math.isinf(self.clearance) else self.clearance,
            "lane_order": self.lane_order,
            "attempts": self.attempts,
            "events": [e.to_dict() for e in self.events],
            "word": self.word.to_json() if self.word is not None else None,
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "StrandSystem":
        def table(raw: Dict[str, Any]) -> Dict[int, TrigPoly]:
            return {int(c): TrigPoly.from_json(p) for c, p in raw.items()}

        kind = SystemKind(data["kind"])
        word_data = data.get("word")
        word: Optional[BraidWord] = None
        if word_data is not None:
            word_cls = LoopBraidWord if kind == SystemKind.LOOP else ClassicalBraidWord
            word = word_cls.from_json(word_data)
        clearance = data.get("clearance")
        return cls(
            kind=kind,
            decomposition=ComponentDecomposition.from_dict(data["decomposition"]),
            F=table(data["F"]),
            G=table(data["G"]),
            H=table(data.get("H", {})),
            R=table(data.get("R", {})),
            epsilon=float(data.get("epsilon", 1.0)),
            events=[CrossingEvent.from_dict(e) for e in data.get("events", [])],
            word=word,
            lane_order=data.get("lane_order", "descending"),
            clearance=math.inf if clearance is None else float(clearance),
            attempts=int(data.get("attempts", 1)),
        )


# ---------------------------------------------------------------------------
# Stage 1-2: x-data and F
# ---------------------------------------------------------------------------

NodeTable = Dict[int, List[Tuple[float, float]]]


def _require_length(word: BraidWord) -> None:
    if word.length < 1:
        raise StrandPipelineError(Stage.X_DATA, "the empty word has no crossings to interpolate (length 0)")


def extract_x_data(
    word: BraidWord,
    decomposition: ComponentDecomposition,
    lane_order: str = "descending",
    lane_offsets: Optional[Dict[int, float]] = None,
) -> NodeTable:
    """Lane positions at t = 2 pi k / l, mapped to each component's angle.

    ``lane_offsets`` (position -> shift) perturbs the lane values; the pipeline
    uses it when it retries with jittered data.
    """
    _require_length(word)
    history = position_history(word)
    s, ell = word.strand_count, word.length
    offsets = lane_offsets or {}
    nodes: NodeTable = {}
    for c, cycle in enumerate(decomposition.cycles, start=1):
        s_c = len(cycle)
        rows: List[Tuple[float, float]] = []
        for j, start in enumerate(cycle, start=1):
            for k in range(ell):
                position = history[k][start - 1]
                value = lane_value(position, s, lane_order) + offsets.get(position, 0.0)
                rows.append((strand_angle(TWO_PI * k / ell, j, s_c), value))
        nodes[c] = rows
    return nodes


def build_F(nodes: NodeTable, options: Optional[StrandOptions] = None) -> Dict[int, TrigPoly]:
    return _interpolate_all(nodes, Stage.F, options or StrandOptions())


def _interpolate_all(nodes: NodeTable, stage: Stage, options: StrandOptions) -> Dict[int, TrigPoly]:
    out: Dict[int, TrigPoly] = {}
    for c, rows in nodes.items():
        if not rows:
            out[c] = TrigPoly.zero()
            continue
        try:
            out[c] = interpolate(
                rows,
                condition_limit=options.condition_limit,
                tolerance=options.interp_tolerance,
            )
        except InterpolationError as e:
            raise StrandPipelineError(stage, f"component {c}: {e}") from e
    return out


# ---------------------------------------------------------------------------
# Stage 3: crossings
# ---------------------------------------------------------------------------


def _pair_roots(
    diff: Any,
    grid: np.ndarray,
    values: np.ndarray,
    tolerance: float,
    pair: Tuple[Strand, Strand],
) -> List[float]:
    roots: List[float] = []
    scale = 1.0 + float(np.max(np.abs(values)))
    signs = np.sign(values)
    crossed = -2
    for i in range(len(grid) - 1):
        a, b = values[i], values[i + 1]
        if a == 0.0:
            if 0 < i and signs[i - 1] * signs[i + 1] < 0:
                roots.append(float(grid[i]))
                crossed = i
            elif 0 < i:
                raise TangentialCrossingError(Stage.CROSSINGS, f"strands {pair} touch at t={grid[i]:.6f}")
            continue
        if a * b < 0:
            roots.append(float(optimize.brentq(diff, grid[i], grid[i + 1], xtol=tolerance)))
            crossed = i
            continue
        if i == 0 or crossed == i - 1:
            continue
        if signs[i - 1] == 0.0 or signs[i - 1] != signs[i + 1]:
            continue
        # local minimum of |d| with equal signs on both sides: possible even-order contact
        if abs(a) <= abs(values[i - 1]) and abs(a) <= abs(b) and abs(a) < 1e-3 * scale:
            res = optimize.minimize_scalar(
                lambda t: abs(diff(t)), bounds=(grid[i - 1], grid[i + 1]), method="bounded",
                options={"xatol": tolerance},
            )
            if res.fun < 1e-9 * scale:
                raise TangentialCrossingError(
                    Stage.CROSSINGS, f"strands {pair} meet tangentially near t={res.x:.6f}"
                )
    return roots


def detect_crossings(
    word: BraidWord,
    decomposition: ComponentDecomposition,
    F: Dict[int, TrigPoly],
    options: Optional[StrandOptions] = None,
) -> List[CrossingEvent]:
    """All crossings of the strand x-graphs over [0, 2 pi), classified against ``word``."""
    options = options or StrandOptions()
    draft = StrandSystem(
        kind=SystemKind.CLASSICAL, decomposition=decomposition, F=F, G={}, lane_order=options.lane_order
    )
    strands = draft.strands()
    ell = word.length
    grid = np.linspace(0.0, TWO_PI, options.crossing_samples + 1)
    xs = {s: draft.x(s, grid) for s in strands}

    raw: List[Tuple[float, Strand, Strand]] = []
    for ia, a in enumerate(strands):
        for b in strands[ia + 1:]:
            def diff(t: float, a: Strand = a, b: Strand = b) -> float:
                return float(draft.x(a, t) - draft.x(b, t))

            for root in _pair_roots(diff, grid, xs[a] - xs[b], options.bisection_tolerance, (a, b)):
                if root < TWO_PI:
                    raw.append((root, a, b))
    raw.sort(key=lambda item: item[0])

    history = position_history(word)
    start_of = {s: decomposition.start_position(*s) for s in strands}
    events: List[CrossingEvent] = []
    matched: set = set()
    for time, a, b in raw:
        k = min(int(time * ell / TWO_PI), ell - 1)
        token = word.tokens[k]
        where = {s: history[k][start_of[s] - 1] for s in (a, b)}
        first, second = sorted((a, b), key=lambda s: where[s])
        target = (where[first], where[second]) == token.transposition
        if target and k not in matched:
            matched.add(k)
            loop_sigma = isinstance(word, LoopBraidWord) and token.kind == TokenKind.SIGMA
            cls = CrossingClass.TARGET_SIGMA if loop_sigma else CrossingClass.TARGET_RHO
            events.append(CrossingEvent(time, (first, second), k, cls, token.drawn_sign))
        else:
            events.append(CrossingEvent(time, (first, second), k, CrossingClass.SPURIOUS))

    missing = sorted(set(range(ell)) - matched)
    if missing:
        raise StrandPipelineError(Stage.CROSSINGS, f"no crossing found for target tokens in intervals {missing}")
    for k in range(ell):
        induced = draft.induced_transposition(k, ell)
        if induced != word.tokens[k].transposition:
            raise StrandPipelineError(
                Stage.CROSSINGS,
                f"interval {k}: interpolated strands swap {induced}, word asks for {word.tokens[k].transposition}",
            )
    spurious = sum(1 for e in events if not e.is_target)
    logger.info("Detected %d crossings (%d spurious) over %d intervals", len(events), spurious, ell)
    return events


# ---------------------------------------------------------------------------
# Stage 4: y-data and G
# ---------------------------------------------------------------------------


def y_table(word: BraidWord, decomposition: ComponentDecomposition) -> Dict[Strand, List[float]]:
    """y-value of every strand in every interval.

    In interval k with active generator index i, position p gets the odd
    integer 2(i - p) + 1, so the active pair sits at +1 / -1 with the strand
    at position i on top; a negative token swaps the pair.
    """
    history = position_history(word)
    table: Dict[Strand, List[float]] = {}
    for strand in decomposition.strands():
        start = decomposition.start_position(*strand)
        values = []
        for k, token in enumerate(word.tokens):
            p = history[k][start - 1]
            i = token.index
            if token.drawn_sign < 0 and p in (i, i + 1):
                p = i + 1 if p == i else i
            values.append(float(2 * (i - p) + 1))
        table[strand] = values
    return table


def jitter_table(table: Dict[Strand, List[float]], rng: np.random.Generator, fraction: float) -> Dict[Strand, List[float]]:
    """Perturb each value by at most ``fraction`` of its size (capped so the order survives)."""
    out: Dict[Strand, List[float]] = {}
    for strand in sorted(table):
        out[strand] = [v + rng.uniform(-1.0, 1.0) * min(0.45, fraction * abs(v)) for v in table[strand]]
    return out


def assign_y_values(
    events: Sequence[CrossingEvent],
    word: BraidWord,
    decomposition: ComponentDecomposition,
    table: Optional[Dict[Strand, List[float]]] = None,
) -> NodeTable:
    """Lagrange data for G: one node per strand per crossing event."""
    table = table or y_table(word, decomposition)
    nodes: NodeTable = {c: [] for c in range(1, decomposition.component_count + 1)}
    for event in events:
        for strand in event.pair:
            c, j = strand
            if event.classification == CrossingClass.TARGET_SIGMA:
                value = 0.0
            else:
                value = table[strand][event.interval]
            angle = strand_angle(event.time, j, decomposition.strand_counts[c - 1])
            nodes[c].append((angle, value))
    return nodes


def build_G(nodes: NodeTable, options: Optional[StrandOptions] = None) -> Dict[int, TrigPoly]:
    return _interpolate_all(nodes, Stage.G, options or StrandOptions())


# ---------------------------------------------------------------------------
# Stage 5-6: H and R
# ---------------------------------------------------------------------------


def passing_strand(event: CrossingEvent) -> Tuple[Strand, Strand]:
    """(passing ring, enclosing ring) of a sigma-crossing."""
    first, second = event.pair
    return (first, second) if event.sign > 0 else (second, first)


def build_H(
    events: Sequence[CrossingEvent],
    decomposition: ComponentDecomposition,
    options: Optional[StrandOptions] = None,
) -> Dict[int, TrigPoly]:
    """z-data: both rings at height 0 at a sigma-crossing, the passing ring moving with slope -sign."""
    options = options or StrandOptions()
    nodes: Dict[int, List[HermiteNode]] = {c: [] for c in range(1, decomposition.component_count + 1)}
    for event in events:
        if event.classification != CrossingClass.TARGET_SIGMA:
            continue
        passing, enclosing = passing_strand(event)
        for strand, slope in ((passing, -event.sign), (enclosing, event.sign)):
            c, j = strand
            angle = strand_angle(event.time, j, decomposition.strand_counts[c - 1])
            nodes[c].append(HermiteNode(angle=angle, value=0.0, slope=float(slope)))
    out: Dict[int, TrigPoly] = {}
    for c, rows in nodes.items():
        if not rows:
            out[c] = TrigPoly.zero()
            continue
        try:
            out[c] = hermite_interpolate(rows, tolerance=options.hermite_tolerance)
        except InterpolationError as e:
            raise StrandPipelineError(Stage.H, f"component {c}: {e}") from e
    return out


def radius_nodes(events: Sequence[CrossingEvent], decomposition: ComponentDecomposition) -> NodeTable:
    nodes: NodeTable = {c: [] for c in range(1, decomposition.component_count + 1)}
    for event in events:
        if event.classification != CrossingClass.TARGET_SIGMA:
            continue
        passing, enclosing = passing_strand(event)
        for strand, value in ((passing, 1.0), (enclosing, 2.0)):
            c, j = strand
            nodes[c].append((strand_angle(event.time, j, decomposition.strand_counts[c - 1]), value))
    return nodes


def ring_clearance(
    system: StrandSystem,
    samples: int = 4096,
    tolerance: float = 1e-10,
) -> Tuple[float, Optional[Dict[str, Any]]]:
    """Smallest (centre distance) / (sum of radii) over times where two strands share a z-value.

    Sigma-crossings of the pair (centres coincide, rings nested) are skipped.
    Returns (threshold, witness); the threshold is inf if no two strands ever
    share a height.
    """
    sigma_times: Dict[Tuple[Strand, Strand], List[float]] = {}
    for e in system.events:
        if e.classification == CrossingClass.TARGET_SIGMA:
            sigma_times.setdefault(tuple(sorted(e.pair)), []).append(e.time)

    grid = np.linspace(0.0, TWO_PI, samples + 1)
    strands = system.strands()
    best = math.inf
    witness: Optional[Dict[str, Any]] = None

    def ratio(a: Strand, b: Strand, t: Any) -> Any:
        dist = np.hypot(system.x(a, t) - system.x(b, t), system.y(a, t) - system.y(b, t))
        return dist / (system.radius(a, t) + system.radius(b, t)), dist

    for ia, a in enumerate(strands):
        for b in strands[ia + 1:]:
            dz = system.z(a, grid) - system.z(b, grid)
            if np.max(np.abs(dz)) < 1e-12:
                values, _ = ratio(a, b, grid)
                i = int(np.argmin(values))
                lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
                res = optimize.minimize_scalar(
                    lambda t: float(ratio(a, b, t)[0]), bounds=(lo, hi), method="bounded"
                )
                times = [float(res.x)]
            else:
                def diff(t: float, a: Strand = a, b: Strand = b) -> float:
                    return float(system.z(a, t) - system.z(b, t))

                times = []
                for i in range(len(grid) - 1):
                    if dz[i] == 0.0:
                        times.append(float(grid[i]))
                    elif dz[i] * dz[i + 1] < 0:
                        times.append(float(optimize.brentq(diff, grid[i], grid[i + 1], xtol=tolerance)))
            known = sigma_times.get(tuple(sorted((a, b))), [])
            for t in times:
                value, dist = ratio(a, b, t)
                if any(abs(t - s) < 1e-6 for s in known):
                    continue
                if dist < 1e-9:
                    raise RingCollisionError(
                        Stage.R, f"strands {a} and {b} share centre and height at t={t:.6f} away from a sigma-crossing"
                    )
                if value < best:
                    best = float(value)
                    witness = {"time": float(t) % TWO_PI, "pair": [list(a), list(b)], "distance": float(dist)}
    return best, witness


def build_R(
    events: Sequence[CrossingEvent],
    draft: StrandSystem,
    options: Optional[StrandOptions] = None,
) -> Tuple[Dict[int, TrigPoly], float, float]:
    """Radii: interpolate the sigma data, shift to positivity, scale by epsilon.

    Returns (scaled radii, epsilon, clearance threshold before scaling).
    """
    options = options or StrandOptions()
    nodes = radius_nodes(events, draft.decomposition)
    radii: Dict[int, TrigPoly] = {}
    for c, rows in nodes.items():
        radii[c] = TrigPoly.const(1.0) if not rows else _interpolate_all({c: rows}, Stage.R, options)[c]
    lowest = min(p.min_value(options.verification_grid) for p in radii.values())
    if lowest <= 0.0:
        shift = -lowest + 1.0
        logger.info("Shifting all radii by %.4f to make them positive", shift)
        radii = {c: p + shift for c, p in radii.items()}
    draft.R = radii
    threshold, witness = ring_clearance(draft, options.verification_grid, options.bisection_tolerance)
    epsilon = min(1.0, options.epsilon_fraction * threshold)
    if witness is not None:
        logger.info("Ring clearance %.4f at t=%.4f between %s; epsilon=%.4f", threshold, witness["time"], witness["pair"], epsilon)
    scaled = {c: p * epsilon for c, p in radii.items()}
    for event in events:
        if event.classification != CrossingClass.TARGET_SIGMA:
            continue
        inner, outer = passing_strand(event)
        if not draft.radius(inner, event.time) < draft.radius(outer, event.time):
            raise StrandPipelineError(Stage.R, f"radius order violated at sigma-crossing t={event.time:.6f}")
    return scaled, epsilon, threshold


# ---------------------------------------------------------------------------
# full pipeline
# ---------------------------------------------------------------------------


class _CoefficientBlowup(StrandPipelineError):
    pass


def _check_size(table: Dict[int, TrigPoly], stage: Stage, limit: float) -> None:
    for c, poly in table.items():
        if poly.largest_coefficient() > limit:
            raise _CoefficientBlowup(
                stage, f"component {c}: coefficients reach {poly.largest_coefficient():.3g} (limit {limit:g})"
            )


def _run_pipeline(word: BraidWord, kind: SystemKind, options: StrandOptions) -> StrandSystem:
    _require_length(word)
    decomposition = strand_components(word)
    rng = np.random.default_rng(options.seed)
    base_y = y_table(word, decomposition)
    last_error: Optional[StrandPipelineError] = None

    for attempt in range(options.jitter_attempts + 1):
        jittered = attempt > 0
        lane_offsets = (
            {p: rng.uniform(-1.0, 1.0) * options.jitter_fraction for p in range(1, word.strand_count + 1)}
            if jittered else None
        )
        ys = jitter_table(base_y, rng, options.jitter_fraction) if jittered else base_y
        try:
            F = build_F(extract_x_data(word, decomposition, options.lane_order, lane_offsets), options)
            _check_size(F, Stage.F, options.coefficient_limit)
            events = detect_crossings(word, decomposition, F, options)
            G = build_G(assign_y_values(events, word, decomposition, ys), options)
            _check_size(G, Stage.G, options.coefficient_limit)
            system = StrandSystem(
                kind=kind,
                decomposition=decomposition,
                F=F,
                G=G,
                events=list(events),
                word=word,
                lane_order=options.lane_order,
                attempts=attempt + 1,
            )
            if kind == SystemKind.LOOP:
                system.H = build_H(events, decomposition, options)
                _check_size(system.H, Stage.H, options.coefficient_limit)
                system.R, system.epsilon, system.clearance = build_R(events, system, options)
            return system
        except (TangentialCrossingError, _CoefficientBlowup) as e:
            last_error = e
            logger.warning("Attempt %d failed (%s); retrying with jittered data", attempt + 1, e)
        except StrandPipelineError as e:
            if e.stage in (Stage.F, Stage.G) and attempt < options.jitter_attempts:
                last_error = e
                logger.warning("Attempt %d failed (%s); retrying with jittered data", attempt + 1, e)
                continue
            raise
    assert last_error is not None
    raise StrandPipelineError(last_error.stage, f"{last_error} (after {options.jitter_attempts + 1} attempts)")


def loop_strand_system(word: LoopBraidWord, options: Optional[StrandOptions] = None) -> StrandSystem:
    """Full pipeline for a loop braid: F, G, H, R and epsilon."""
    system = _run_pipeline(word, SystemKind.LOOP, options or StrandOptions())
    logger.info(
        "Loop strand system: %d components, degrees F=%s G=%s H=%s R=%s, epsilon=%.4f",
        len(system.components),
        [system.F[c].degree for c in system.components],
        [system.G[c].degree for c in system.components],
        [system.H[c].degree for c in system.components],
        [system.R[c].degree for c in system.components],
        system.epsilon,
    )
    return system


def classical_strand_system(word: BraidWord, options: Optional[StrandOptions] = None) -> StrandSystem:
    """F and G only; used by the classical and spinning constructions."""
    return _run_pipeline(word, SystemKind.CLASSICAL, options or StrandOptions())
