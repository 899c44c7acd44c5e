"""Verifier - numeric evidence that a construction realizes its braid.

Zeros of f on the slice |v| = r are followed from r = 1 (where the strand
parametrization gives them exactly) inwards by Newton continuation. The
largest r at which they stop being regular or disjoint fixes delta, and
lambda is then chosen so that every followed zero has entered the unit
sphere before r = 1 - delta.

None of this is a proof; a PASS means every sampled check held.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize
from scipy.spatial.distance import cdist

from config import RunConfig

from .braid_words import BraidWord, ClassicalBraidWord, LoopBraidWord, TokenKind, position_history
from .constructors import Algorithm, ConstructionResult, algorithm0, loop_g
from .parallel import map_ordered
from .poly_algebra import LaurentPoly, eval_batch, partial, partial_harmonic, rescale, subst_unit_circle
from .strand_param import StrandSystem, SystemKind
from .trig_interp import TWO_PI

logger = logging.getLogger(__name__)

CHECK_NAMES = ("lambda", "slices", "reextract", "extra_components", "fibration", "surface", "satellite")


class VerificationError(RuntimeError):
    """No admissible lambda, a root-finder failure or an ambiguous crossing."""


class CheckStatus(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    SKIPPED = "SKIPPED"


@dataclass
class CheckResult:
    name: str
    status: CheckStatus
    message: str = ""
    details: Dict[str, Any] = field(default_factory=dict)
    advisory: bool = False  # a FAIL here does not fail the report

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "status": self.status.value,
            "message": self.message,
            "advisory": self.advisory,
            "details": self.details,
        }


@dataclass
class VerificationReport:
    algorithm: str
    lam: Optional[float] = None
    delta: Optional[float] = None
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.status != CheckStatus.FAIL for c in self.checks if not c.advisory)

    def add(self, check: CheckResult) -> CheckResult:
        self.checks.append(check)
        logger.info("Check %s: %s %s", check.name, check.status.value, check.message)
        return check

    def check(self, name: str) -> Optional[CheckResult]:
        return next((c for c in self.checks if c.name == name), None)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "algorithm": self.algorithm,
            "lambda": self.lam,
            "delta": self.delta,
            "status": CheckStatus.PASS.value if self.passed else CheckStatus.FAIL.value,
            "checks": [c.to_dict() for c in self.checks],
        }


def _status(ok: bool) -> CheckStatus:
    return CheckStatus.PASS if ok else CheckStatus.FAIL


def _scale(f: LaurentPoly) -> float:
    return max(1.0, f.max_abs_coefficient())


def _solve(jac: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(jac, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        return np.einsum("nij,nj->ni", np.linalg.pinv(jac), rhs)


# ---------------------------------------------------------------------------
# zero trackers
# ---------------------------------------------------------------------------


class _Tracker:
    """Zeros of f on |v| = r, one per seed, as real state vectors."""

    kind = "abstract"

    def __init__(self, f: LaurentPoly, config: RunConfig):
        self.f = f
        self.config = config
        self.scale = _scale(f)
        self.seeds = np.zeros((0, 1))
        self.labels = np.zeros(0, dtype=int)
        self.time_index = np.zeros(0, dtype=int)
        self.times = np.zeros(0)

    # hooks
    def _system(self, x: np.ndarray, r: np.ndarray, idx: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        raise NotImplementedError

    def regularity(self, x: np.ndarray, r: np.ndarray, idx: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def norms(self, x: np.ndarray) -> np.ndarray:
        return np.linalg.norm(x, axis=-1)

    def _v(self, r: np.ndarray, idx: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        t = self.times[idx]
        return r * np.exp(1j * t), r * np.exp(-1j * t)

    def newton(self, states: np.ndarray, r: Any, idx: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Damped Newton at radius r (scalar or per seed); returns (states, converged, |f|)."""
        idx = np.arange(len(states)) if idx is None else idx
        r = np.broadcast_to(np.asarray(r, dtype=float), (len(states),)).copy()
        x = np.array(states, dtype=float, copy=True)
        if not len(x):
            return x, np.zeros(0, dtype=bool), np.zeros(0)
        res, jac, fval = self._system(x, r, idx)
        norm = np.linalg.norm(res, axis=1)
        for _ in range(self.config.newton_max_iter):
            step = _solve(jac, -res)
            trial = x + step
            t_res, t_jac, t_f = self._system(trial, r, idx)
            t_norm = np.linalg.norm(t_res, axis=1)
            worse = ~(t_norm <= norm)
            halvings = 0
            while np.any(worse) and halvings < 8:
                step[worse] *= 0.5
                trial[worse] = x[worse] + step[worse]
                w = np.flatnonzero(worse)
                w_res, w_jac, w_f = self._system(trial[w], r[w], idx[w])
                t_res[w], t_jac[w], t_f[w] = w_res, w_jac, w_f
                t_norm[w] = np.linalg.norm(w_res, axis=1)
                worse[w] = ~(t_norm[w] <= norm[w])
                halvings += 1
            x, res, jac, fval, norm = trial, t_res, t_jac, t_f, t_norm
            small = np.linalg.norm(step, axis=1) <= self.config.newton_tolerance * (1.0 + self.norms(x))
            if np.all(small):
                break
        value = np.abs(fval)
        converged = np.isfinite(value) & (value <= self.config.vanishing_tolerance * self.scale)
        return x, converged, value

    def disjointness(self, x: np.ndarray) -> float:
        """Smallest distance between zeros of different strands at the same time sample."""
        best = math.inf
        for ti in np.unique(self.time_index):
            mask = self.time_index == ti
            labs = self.labels[mask]
            pts = x[mask]
            groups = [pts[labs == lab] for lab in np.unique(labs)]
            for a in range(len(groups)):
                for b in range(a + 1, len(groups)):
                    best = min(best, float(cdist(groups[a], groups[b]).min()))
        return best


class RingTracker(_Tracker):
    """Loop constructions: zeros on the ray at angle phi from a ring centre."""

    kind = "rings"

    def __init__(
        self,
        f: LaurentPoly,
        system: StrandSystem,
        lam: float,
        times: np.ndarray,
        angles: np.ndarray,
        config: RunConfig,
    ):
        super().__init__(f, config)
        if system.kind != SystemKind.LOOP:
            raise VerificationError("ring tracking needs a loop strand system")
        self.fx, self.fy, self.fz = (partial(f, v) for v in ("x", "y", "z"))
        tt, pp = np.meshgrid(np.asarray(times, dtype=float), np.asarray(angles, dtype=float), indexing="ij")
        ti = np.broadcast_to(np.arange(len(times))[:, None], tt.shape)
        seeds, labels, t_all, phi_all, cx, cy, t_index = [], [], [], [], [], [], []
        for label, strand in enumerate(system.strands()):
            seeds.append(lam * system.ring_points(strand, tt, pp).reshape(-1, 3))
            labels.append(np.full(tt.size, label))
            t_all.append(tt.ravel())
            phi_all.append(pp.ravel())
            cx.append(lam * system.x(strand, tt.ravel()))
            cy.append(lam * system.y(strand, tt.ravel()))
            t_index.append(ti.ravel())
        self.strands = system.strands()
        self.seeds = np.vstack(seeds)
        self.labels = np.concatenate(labels)
        self.times = np.concatenate(t_all)
        self.phi = np.concatenate(phi_all)
        self.cx = np.concatenate(cx)
        self.cy = np.concatenate(cy)
        self.time_index = np.concatenate(t_index)

    def _gradient(self, x: np.ndarray, r: np.ndarray, idx: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        v, vbar = self._v(r, idx)
        values = {"x": x[:, 0], "y": x[:, 1], "z": x[:, 2], "v": v, "vbar": vbar}
        fval = eval_batch(self.f, values)
        grad = np.stack([eval_batch(p, values) for p in (self.fx, self.fy, self.fz)], axis=-1)
        return fval, grad

    def _system(self, x, r, idx):
        fval, grad = self._gradient(x, r, idx)
        s, c = np.sin(self.phi[idx]), np.cos(self.phi[idx])
        ray = (x[:, 0] - self.cx[idx]) * s - (x[:, 1] - self.cy[idx]) * c
        res = np.stack([fval.real, fval.imag, ray], axis=-1)
        third = np.stack([s, -c, np.zeros_like(s)], axis=-1)
        jac = np.stack([grad.real, grad.imag, third], axis=-2)
        return res, jac, fval

    def regularity(self, x, r, idx):
        _, grad = self._gradient(x, r, idx)
        spatial = np.stack([grad.real, grad.imag], axis=-2)
        return np.linalg.svd(spatial, compute_uv=False)[:, -1]


class RootTracker(_Tracker):
    """Classical constructions: the s roots in u of f(u, r e^{it})."""

    kind = "roots"

    def __init__(self, f: LaurentPoly, system: StrandSystem, lam: float, times: np.ndarray, config: RunConfig):
        super().__init__(f, config)
        self.fu = partial(f, "u")
        times = np.asarray(times, dtype=float)
        seeds, labels, t_all, t_index = [], [], [], []
        for label, strand in enumerate(system.strands()):
            u = lam * (system.x(strand, times) + 1j * system.y(strand, times))
            seeds.append(np.stack([u.real, u.imag], axis=-1))
            labels.append(np.full(len(times), label))
            t_all.append(times)
            t_index.append(np.arange(len(times)))
        self.strands = system.strands()
        self.seeds = np.vstack(seeds)
        self.labels = np.concatenate(labels)
        self.times = np.concatenate(t_all)
        self.time_index = np.concatenate(t_index)

    def _values(self, x, r, idx):
        v, vbar = self._v(r, idx)
        values = {"u": x[:, 0] + 1j * x[:, 1], "v": v, "vbar": vbar}
        return eval_batch(self.f, values), eval_batch(self.fu, values)

    def _system(self, x, r, idx):
        fval, fu = self._values(x, r, idx)
        res = np.stack([fval.real, fval.imag], axis=-1)
        jac = np.stack(
            [np.stack([fu.real, -fu.imag], axis=-1), np.stack([fu.imag, fu.real], axis=-1)], axis=-2
        )
        return res, jac, fval

    def regularity(self, x, r, idx):
        return np.abs(self._values(x, r, idx)[1])


def _advance(tracker: _Tracker, states: np.ndarray, r_from: float, r_to: float, depth: int = 0) -> Optional[np.ndarray]:
    """Continue all zeros from r_from to r_to, halving the step when Newton fails."""
    new, ok, _ = tracker.newton(states, r_to)
    if np.all(ok):
        return new
    if depth >= 6:
        return None
    mid = 0.5 * (r_from + r_to)
    half = _advance(tracker, states, r_from, mid, depth + 1)
    if half is None:
        return None
    return _advance(tracker, half, mid, r_to, depth + 1)


@dataclass
class SliceStats:
    r: float
    max_norm: float
    max_residual: float
    min_regularity: float
    disjointness: float
    converged: bool

    def ok(self, floor: float) -> bool:
        return self.converged and self.min_regularity > floor and self.disjointness > floor

    def to_dict(self) -> Dict[str, Any]:
        return {
            "r": self.r,
            "M": self.max_norm,
            "max_residual": self.max_residual,
            "min_regularity": self.min_regularity,
            "disjointness": None if math.isinf(self.disjointness) else self.disjointness,
            "converged": self.converged,
        }


def _probe(tracker: _Tracker, states: np.ndarray, r: float) -> SliceStats:
    idx = np.arange(len(states))
    rr = np.full(len(states), r)
    _, _, fval = tracker._system(states, rr, idx)
    residual = np.abs(fval)
    return SliceStats(
        r=float(r),
        max_norm=float(np.max(tracker.norms(states))),
        max_residual=float(np.max(residual)),
        min_regularity=float(np.min(tracker.regularity(states, rr, idx))),
        disjointness=tracker.disjointness(states),
        converged=bool(np.all(residual <= tracker.config.vanishing_tolerance * tracker.scale)),
    )


@dataclass
class DeltaSearch:
    delta: float
    states: np.ndarray
    path: List[SliceStats]

    @property
    def m_at_delta(self) -> float:
        return self.path[-1].max_norm


def find_delta(tracker: _Tracker) -> DeltaSearch:
    """Step r down from 1 until the zeros lose regularity or disjointness, then bisect the boundary."""
    config = tracker.config
    floor = config.regularity_floor
    first = _probe(tracker, tracker.seeds, 1.0)
    if not first.ok(floor):
        raise VerificationError(
            f"zeros at r=1 are not regular and disjoint (residual {first.max_residual:.3g}, "
            f"regularity {first.min_regularity:.3g}, gap {first.disjointness:.3g})"
        )
    path = [first]
    r_min = 1.0 - config.delta_max
    good_r, good = 1.0, tracker.seeds
    bad_r: Optional[float] = None
    while good_r > r_min + 1e-12:
        target = max(good_r - config.continuation_step, r_min)
        new = _advance(tracker, good, good_r, target)
        stats = _probe(tracker, new, target) if new is not None else None
        if stats is None or not stats.ok(floor):
            bad_r = target
            break
        good_r, good = target, new
        path.append(stats)
    if bad_r is not None:
        lo, hi = bad_r, good_r
        for _ in range(config.bisection_iterations):
            mid = 0.5 * (lo + hi)
            new = _advance(tracker, good, hi, mid)
            stats = _probe(tracker, new, mid) if new is not None else None
            if stats is not None and stats.ok(floor):
                hi, good = mid, new
                path.append(stats)
            else:
                lo = mid
        good_r = hi
    delta = 1.0 - good_r
    if delta < config.delta_floor:
        raise VerificationError(
            f"zeros lose regularity or disjointness at r={bad_r:.4f}, before r={1.0 - config.delta_floor:.2f}"
        )
    logger.info("delta=%.4f (%d continuation records)", delta, len(path))
    return DeltaSearch(delta=delta, states=good, path=path)


def track_slices(tracker: _Tracker, radii: Iterable[float]) -> Dict[float, Tuple[np.ndarray, SliceStats]]:
    """Follow the seeds to each radius (descending) with the configured step."""
    out: Dict[float, Tuple[np.ndarray, SliceStats]] = {}
    r, states = 1.0, tracker.seeds
    for target in sorted(set(float(v) for v in radii), reverse=True):
        while r > target + 1e-12:
            nxt = max(r - tracker.config.continuation_step, target)
            new = _advance(tracker, states, r, nxt)
            if new is None:
                raise VerificationError(f"Newton continuation failed between r={r:.4f} and r={nxt:.4f}")
            r, states = nxt, new
        out[target] = (states, _probe(tracker, states, target))
    return out


# ---------------------------------------------------------------------------
# lambda selection
# ---------------------------------------------------------------------------


@dataclass
class LambdaSelection:
    lam: float
    delta: float
    m_one: float
    target: float
    tracker: str
    path: List[SliceStats] = field(default_factory=list)

    def m(self, lam: float) -> float:
        """M(lambda, 1 - delta) = lambda M(1, 1 - delta)."""
        return lam * self.m_one

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambda": self.lam,
            "delta": self.delta,
            "M1": self.m_one,
            "target": self.target,
            "tracker": self.tracker,
            "path": [s.to_dict() for s in self.path],
        }


def _unit_f(result: ConstructionResult) -> LaurentPoly:
    if result.algorithm == Algorithm.SATELLITE:
        return subst_unit_circle(loop_g(result.system))
    if result.lam == 1.0:
        return result.f
    return result.at_lambda(1.0).f


def make_tracker(
    result: ConstructionResult,
    config: RunConfig,
    lam: Optional[float] = None,
    times: Optional[np.ndarray] = None,
    angles: Optional[np.ndarray] = None,
    coarse: bool = False,
) -> _Tracker:
    """Tracker for ``result`` at ``lam`` (default: the result's own lambda)."""
    if result.system is None:
        raise VerificationError("construction carries no strand system")
    n_t = config.lambda_time_samples if coarse else config.time_samples
    n_a = config.lambda_ring_angles if coarse else config.ring_angles
    if times is None:
        times = np.linspace(0.0, TWO_PI, n_t, endpoint=False)
    if angles is None:
        angles = np.linspace(0.0, TWO_PI, n_a, endpoint=False)
    if lam is None:
        lam, f = result.lam, result.f
        if result.algorithm == Algorithm.SATELLITE:
            f = subst_unit_circle(loop_g(result.system)) if lam == 1.0 else _rescaled_core(result, lam)
    elif lam == 1.0:
        f = _unit_f(result)
    else:
        f = _rescaled_core(result, lam) if result.algorithm == Algorithm.SATELLITE else result.at_lambda(lam).f
    if result.algorithm == Algorithm.CLASSICAL:
        return RootTracker(f, result.system, lam, times, config)
    return RingTracker(f, result.system, lam, times, angles, config)


def _rescaled_core(result: ConstructionResult, lam: float) -> LaurentPoly:
    g = loop_g(result.system)
    return subst_unit_circle(rescale(g, {"x": 1.0 / lam, "y": 1.0 / lam, "z": 1.0 / lam}))


def select_lambda(result: ConstructionResult, config: Optional[RunConfig] = None) -> LambdaSelection:
    """delta from continuation at lambda = 1, then lambda with M(lambda, 1 - delta) < safety * sqrt(delta (2 - delta))."""
    config = config or RunConfig()
    tracker = make_tracker(result, config, lam=1.0, coarse=True)
    search = find_delta(tracker)
    delta = search.delta
    target = math.sqrt(delta * (2.0 - delta))
    m_one = search.m_at_delta
    lam = config.lambda_max if m_one <= 0 else config.lambda_safety * target / m_one
    lam = min(lam, config.lambda_max)
    if lam < config.lambda_min:
        raise VerificationError(f"no admissible lambda: need {lam:.3g} < lambda_min={config.lambda_min:g}")
    logger.info("Selected lambda=%.5f (delta=%.4f, M(1, 1-delta)=%.4f)", lam, delta, m_one)
    return LambdaSelection(lam=lam, delta=delta, m_one=m_one, target=target, tracker=tracker.kind, path=search.path)


# ---------------------------------------------------------------------------
# slices
# ---------------------------------------------------------------------------


@dataclass
class SliceZeroes:
    r: float
    points: np.ndarray
    labels: np.ndarray
    times: np.ndarray
    stats: SliceStats

    def to_dict(self) -> Dict[str, Any]:
        return {"r": self.r, "count": int(len(self.points)), **self.stats.to_dict()}


def slice_zeroes(
    result: ConstructionResult,
    radii: Sequence[float],
    config: Optional[RunConfig] = None,
    tracker: Optional[_Tracker] = None,
) -> List[SliceZeroes]:
    """Zeros of f_lambda on |v| = r for each radius, followed from the strand seeds."""
    config = config or RunConfig()
    tracker = tracker or make_tracker(result, config)
    tracked = track_slices(tracker, radii)
    return [
        SliceZeroes(r=r, points=states, labels=tracker.labels, times=tracker.times, stats=stats)
        for r, (states, stats) in sorted(tracked.items(), reverse=True)
    ]


@dataclass
class SpherePoints:
    """Where each followed zero path meets the unit sphere |p|^2 + r^2 = 1."""

    points: np.ndarray  # real states (x, y, z) or (Re u, Im u)
    radii: np.ndarray
    labels: np.ndarray
    times: np.ndarray
    found: np.ndarray

    def v(self) -> np.ndarray:
        return self.radii * np.exp(1j * self.times)


def _sphere_crossing(tracker: _Tracker, r_floor: float) -> SpherePoints:
    config = tracker.config
    n = len(tracker.seeds)
    found = np.zeros(n, dtype=bool)
    r_lo = np.full(n, np.nan)
    r_hi = np.ones(n)
    s_hi = tracker.seeds.copy()
    r, current = 1.0, tracker.seeds
    while r > r_floor + 1e-12 and not found.all():
        target = max(r - config.continuation_step, r_floor)
        new = _advance(tracker, current, r, target)
        if new is None:
            logger.warning("Sphere search stopped at r=%.4f: continuation failed", r)
            break
        inside = tracker.norms(new) ** 2 + target ** 2 - 1.0 <= 0.0
        newly = inside & ~found
        r_lo[newly] = target
        found |= newly
        outside = ~found
        r_hi[outside] = target
        s_hi[outside] = new[outside]
        r, current = target, new

    idx = np.flatnonzero(found)
    lo, hi, st = r_lo[idx], r_hi[idx], s_hi[idx]
    for _ in range(config.bisection_iterations):
        if not len(idx):
            break
        mid = 0.5 * (lo + hi)
        new, _, _ = tracker.newton(st, mid, idx)
        inside = tracker.norms(new) ** 2 + mid ** 2 - 1.0 <= 0.0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
        st = np.where(inside[:, None], st, new)
    points = np.full_like(tracker.seeds, np.nan)
    radii = np.full(n, np.nan)
    if len(idx):
        final_r = 0.5 * (lo + hi)
        final, _, _ = tracker.newton(st, final_r, idx)
        points[idx] = final
        radii[idx] = final_r
    return SpherePoints(points=points, radii=radii, labels=tracker.labels, times=tracker.times, found=found)


def s4_slice(
    result: ConstructionResult,
    t: Any,
    config: Optional[RunConfig] = None,
    delta: Optional[float] = None,
) -> SpherePoints:
    """Points Z(C, j, t, phi) of the closed loop braid on S^4 at the given time(s)."""
    config = config or RunConfig()
    times = np.atleast_1d(np.asarray(t, dtype=float))
    tracker = make_tracker(result, config, times=times)
    if not isinstance(tracker, RingTracker):
        raise VerificationError("s4_slice needs a loop construction")
    floor = 1.0 - (delta if delta is not None else config.delta_max)
    return _sphere_crossing(tracker, floor)


def s3_slice(result: ConstructionResult, config: Optional[RunConfig] = None, times: Optional[np.ndarray] = None) -> SpherePoints:
    """Points (u, v) of the closed classical braid on S^3; states hold (Re u, Im u)."""
    config = config or RunConfig()
    tracker = make_tracker(result, config, times=times)
    if not isinstance(tracker, RootTracker):
        raise VerificationError("s3_slice needs a classical construction")
    return _sphere_crossing(tracker, 1.0 - config.delta_max)


def inverse_stereographic(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """S^3 in C^2 -> R^3, inverse of u = (2 x3 + i(|x|^2 - 1))/D, v = 2(x1 + i x2)/D."""
    denom = 1.0 - u.imag
    w = v / denom
    return np.stack([w.real, w.imag, u.real / denom], axis=-1)


# ---------------------------------------------------------------------------
# extra components
# ---------------------------------------------------------------------------


@dataclass
class GridScan:
    t: float
    candidates: int
    zeros: np.ndarray
    unmatched: np.ndarray

    def to_dict(self) -> Dict[str, Any]:
        return {
            "t": self.t,
            "candidate_cells": self.candidates,
            "zeros": int(len(self.zeros)),
            "unmatched": [list(map(float, p)) for p in self.unmatched[:20]],
            "unmatched_count": int(len(self.unmatched)),
        }


class _SphereSlice:
    """f(p, r(p) e^{it}) on the unit ball, r(p) = sqrt(1 - |p|^2)."""

    def __init__(self, f: LaurentPoly, t: float):
        self.f = f
        self.t = t
        self.partials = [partial(f, v) for v in ("x", "y", "z", "v", "vbar")]

    def _values(self, p: np.ndarray) -> Dict[str, np.ndarray]:
        r = np.sqrt(np.clip(1.0 - np.sum(p * p, axis=-1), 0.0, None))
        return {
            "x": p[..., 0], "y": p[..., 1], "z": p[..., 2],
            "v": r * np.exp(1j * self.t), "vbar": r * np.exp(-1j * self.t),
        }

    def value(self, p: np.ndarray) -> np.ndarray:
        return eval_batch(self.f, self._values(p))

    def jacobian(self, p: np.ndarray) -> np.ndarray:
        values = self._values(p)
        r = np.sqrt(np.clip(1.0 - np.sum(p * p, axis=-1), 1e-300, None))
        fx, fy, fz, fv, fvbar = (eval_batch(q, values) for q in self.partials)
        radial = fv * np.exp(1j * self.t) + fvbar * np.exp(-1j * self.t)
        return np.stack([fx, fy, fz], axis=-1) - (radial / r)[:, None] * p


def grid_scan(
    result: ConstructionResult,
    t: float,
    sphere: SpherePoints,
    config: Optional[RunConfig] = None,
) -> GridScan:
    """Zeros of f_lambda on the S^4 slice at time t that no followed strand accounts for."""
    config = config or RunConfig()
    n = config.grid_scan_size
    axis = np.linspace(-1.0, 1.0, n)
    grid = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1)
    inside = np.sum(grid * grid, axis=-1) < 1.0
    surface = _SphereSlice(result.f, t)
    values = np.full(inside.shape, np.nan, dtype=complex)
    values[inside] = surface.value(grid[inside])

    corners = [values[a:n - 1 + a, b:n - 1 + b, c:n - 1 + c] for a in (0, 1) for b in (0, 1) for c in (0, 1)]
    stack = np.stack(corners, axis=-1)
    valid = np.all(np.isfinite(stack), axis=-1)
    re_change = (np.nanmin(stack.real, axis=-1) <= 0) & (np.nanmax(stack.real, axis=-1) >= 0)
    im_change = (np.nanmin(stack.imag, axis=-1) <= 0) & (np.nanmax(stack.imag, axis=-1) >= 0)
    cells = np.argwhere(valid & re_change & im_change)
    h = 2.0 / (n - 1)
    starts = -1.0 + (cells + 0.5) * h

    zeros = _refine_on_sphere(surface, starts, config)
    at_t = sphere.found & np.isclose(sphere.times, t)
    genuine = sphere.points[at_t]
    if len(zeros) and len(genuine):
        nearest = cdist(zeros, genuine).min(axis=1)
        unmatched = zeros[nearest > 2.0 * math.sqrt(3.0) * h]
    else:
        unmatched = zeros
    if len(unmatched):
        logger.warning("Grid scan at t=%.3f: %d zeros away from the braid", t, len(unmatched))
    return GridScan(t=float(t), candidates=int(len(cells)), zeros=zeros, unmatched=unmatched)


def _refine_on_sphere(surface: _SphereSlice, starts: np.ndarray, config: RunConfig) -> np.ndarray:
    """Minimum-norm Newton on (Re, Im) of the slice map; returns the converged points."""
    if not len(starts):
        return np.zeros((0, 3))
    p = starts.copy()
    scale = _scale(surface.f)
    for _ in range(config.newton_max_iter):
        fval = surface.value(p)
        jac = surface.jacobian(p)
        real_jac = np.stack([jac.real, jac.imag], axis=-2)
        rhs = np.stack([fval.real, fval.imag], axis=-1)
        step = -np.einsum("nij,nj->ni", np.linalg.pinv(real_jac), rhs)
        p = p + step
        norms = np.linalg.norm(p, axis=1)
        p = np.where((norms >= 0.999)[:, None], p * (0.999 / np.maximum(norms, 1e-300))[:, None], p)
        if np.all(np.linalg.norm(step, axis=1) < config.newton_tolerance):
            break
    ok = np.abs(surface.value(p)) <= config.vanishing_tolerance * scale
    return p[ok]


# ---------------------------------------------------------------------------
# re-extraction
# ---------------------------------------------------------------------------


@dataclass
class IntervalEvidence:
    interval: int
    expected: Dict[str, Any]
    found: Dict[str, Any]

    @property
    def matches(self) -> bool:
        return self.expected == self.found

    def to_dict(self) -> Dict[str, Any]:
        return {"interval": self.interval, "expected": self.expected, "found": self.found, "match": self.matches}


@dataclass
class Reextraction:
    intervals: List[IntervalEvidence]
    spurious: int = 0

    @property
    def passed(self) -> bool:
        return all(i.matches for i in self.intervals)

    def to_dict(self) -> Dict[str, Any]:
        return {"passed": self.passed, "spurious_crossings": self.spurious, "intervals": [i.to_dict() for i in self.intervals]}


def _token_summary(word: BraidWord, k: int) -> Dict[str, Any]:
    token = word.tokens[k]
    loop_sigma = isinstance(word, LoopBraidWord) and token.kind == TokenKind.SIGMA
    if isinstance(word, ClassicalBraidWord):
        kind, sign = "sigma", token.sign
    elif loop_sigma:
        kind, sign = "sigma", token.sign
    else:
        kind, sign = "rho", token.drawn_sign
    return {"transposition": list(token.transposition), "kind": kind, "sign": int(sign)}


def _first_crossing(system: StrandSystem, a: Any, b: Any, lo: float, hi: float, samples: int) -> Optional[float]:
    grid = np.linspace(lo, hi, samples + 1)
    diff = system.x(a, grid) - system.x(b, grid)
    for i in range(samples):
        if diff[i] == 0.0:
            return float(grid[i])
        if diff[i] * diff[i + 1] < 0:
            return float(
                optimize.brentq(lambda t: float(system.x(a, t) - system.x(b, t)), grid[i], grid[i + 1], xtol=1e-12)
            )
    return None


def reextract_braid(system: StrandSystem, word: Optional[BraidWord] = None, samples: int = 256) -> Reextraction:
    """Read transposition, crossing kind and sign of every interval back from the strand data."""
    word = word or system.word
    if word is None:
        raise VerificationError("no target word to compare against")
    ell = word.length
    history = position_history(word)
    start_of = {s: system.decomposition.start_position(*s) for s in system.strands()}
    loop = system.kind == SystemKind.LOOP
    intervals: List[IntervalEvidence] = []
    for k in range(ell):
        expected = _token_summary(word, k)
        transposition = system.induced_transposition(k, ell)
        found: Dict[str, Any] = {"transposition": None if transposition is None else list(transposition)}
        if transposition is None:
            found.update(kind=None, sign=None)
            intervals.append(IntervalEvidence(k, expected, found))
            continue
        i = transposition[0]
        at = {history[k][start_of[s] - 1]: s for s in system.strands()}
        first, second = at[i], at[i + 1]
        lo, hi = TWO_PI * k / ell, TWO_PI * (k + 1) / ell
        t_star = _first_crossing(system, first, second, lo, hi, samples)
        if t_star is None:
            raise VerificationError(f"interval {k}: strands at positions {i}, {i + 1} never share an x-value")
        kind, sign = _classify(system, first, second, t_star, loop)
        found.update(kind=kind, sign=sign)
        intervals.append(IntervalEvidence(k, expected, found))
    spurious = sum(1 for e in system.events if not e.is_target)
    report = Reextraction(intervals=intervals, spurious=spurious)
    logger.info("Re-extraction: %d/%d intervals agree", sum(i.matches for i in intervals), ell)
    return report


def _classify(system: StrandSystem, first: Any, second: Any, t: float, loop: bool) -> Tuple[str, int]:
    dy = float(system.y(first, t) - system.y(second, t))
    if not loop:
        if abs(dy) < 1e-12:
            raise VerificationError(f"crossing at t={t:.6f} has no over/under order")
        return "sigma", 1 if dy > 0 else -1
    dz = float(system.z(first, t) - system.z(second, t))
    dist = math.sqrt(dy * dy + dz * dz)
    ra, rb = float(system.radius(first, t)), float(system.radius(second, t))
    tol = 1e-6 * (1.0 + max(ra, rb))
    if dist < tol:
        if abs(ra - rb) < tol:
            raise VerificationError(f"crossing at t={t:.6f}: coincident rings of equal radius")
        passing, enclosing = (first, second) if ra < rb else (second, first)
        slope = system.velocity("H", enclosing, t) - system.velocity("H", passing, t)
        if abs(slope) < 1e-12:
            raise VerificationError(f"crossing at t={t:.6f}: rings pass at equal vertical speed")
        return "sigma", 1 if slope > 0 else -1
    if abs(dy) < tol:
        raise VerificationError(f"crossing at t={t:.6f} is neither a pass-through nor an exchange")
    return "rho", 1 if dy > 0 else -1


# ---------------------------------------------------------------------------
# fibration and surface checks
# ---------------------------------------------------------------------------


@dataclass
class FibrationReport:
    expected: float
    values: List[float]
    max_relative_error: float
    samples: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "expected": self.expected,
            "samples": self.samples,
            "roots": len(self.values),
            "max_relative_error": self.max_relative_error,
        }


def _u_coefficients(g: LaurentPoly, values: Dict[str, np.ndarray]) -> np.ndarray:
    """Coefficients of g as a polynomial in u, highest first; shape (N, deg + 1)."""
    degree = g.degree_in("u")
    count = len(next(iter(values.values())))
    out = np.zeros((count, degree + 1), dtype=complex)
    col = g.column("u")
    at_one = dict(values, u=np.ones(count, dtype=complex))
    for k in range(degree + 1):
        mask = col == k
        if not np.any(mask):
            continue
        part = LaurentPoly(g.variables, g.exponents[mask], g.coeffs[mask], prune_tolerance=0.0)
        out[:, degree - k] = eval_batch(part, at_one)
    return out


def fibration_check(result: ConstructionResult, samples: Optional[int] = None, config: Optional[RunConfig] = None) -> FibrationReport:
    """d arg g / d chi at the critical points of g in u, compared with s n."""
    config = config or RunConfig()
    if result.algorithm != Algorithm.SPINNING:
        raise VerificationError("the fibration check applies to spinning constructions")
    samples = samples or config.fibration_samples
    s = result.g.degree_in("u")
    expected = float(s * result.n)
    rng = np.random.default_rng(config.seed)
    phi = rng.uniform(0.0, TWO_PI, samples)
    chi = rng.uniform(0.0, TWO_PI, samples)
    harmonics = {"et": np.exp(1j * phi), "ec": np.exp(1j * chi)}
    coeffs = _u_coefficients(result.g, harmonics)
    g_chi = partial_harmonic(result.g, "ec")
    values: List[float] = []
    worst = 0.0
    for m in range(samples):
        derivative = np.polyder(coeffs[m])
        if len(derivative) <= 1:
            continue
        roots = np.roots(derivative)
        if not np.all(np.isfinite(roots)):
            raise VerificationError(f"root finder failed at phi={phi[m]:.4f}, chi={chi[m]:.4f}")
        point = {"u": roots, "et": np.full(len(roots), harmonics["et"][m]), "ec": np.full(len(roots), harmonics["ec"][m])}
        gv = np.polyval(coeffs[m], roots)
        gc = eval_batch(g_chi, point)
        rate = (gc / gv).imag
        values.extend(float(v) for v in rate)
        worst = max(worst, float(np.max(np.abs(rate - expected))) / max(abs(expected), 1e-300))
    logger.info("Fibration check: %d critical values, max relative error %.3g", len(values), worst)
    return FibrationReport(expected=expected, values=values, max_relative_error=worst, samples=samples)


def surface_residual(result: ConstructionResult, config: Optional[RunConfig] = None, grid: int = 16) -> float:
    """max |g| / scale over sampled strand points of a spinning or torus construction."""
    config = config or RunConfig()
    angles = np.linspace(0.0, TWO_PI, grid, endpoint=False)
    phi, chi = (a.ravel() for a in np.meshgrid(angles, angles, indexing="ij"))
    worst = 0.0
    sheets: List[np.ndarray] = []
    if result.algorithm == Algorithm.SPINNING:
        system = result.system
        for strand in system.strands():
            u = np.exp(1j * result.n * chi) * (system.x(strand, phi) + 1j * system.y(strand, phi))
            sheets.append(u)
    else:
        for comp in result.surface:
            for j in range(1, comp.phi_strands + 1):
                for k in range(1, comp.chi_strands + 1):
                    sheets.append(comp.value(phi, chi, j, k))
    scale = _scale(result.g)
    for u in sheets:
        values = {"u": u, "et": np.exp(1j * phi), "ec": np.exp(1j * chi)}
        worst = max(worst, float(np.max(np.abs(eval_batch(result.g, values)))) / scale)
    return worst


def satellite_residual(result: ConstructionResult, config: Optional[RunConfig] = None, core_times: int = 16) -> float:
    """max |g_lambda| / scale at S^3 points of each satellite mapped into the tube around its ring."""
    config = config or RunConfig()
    system = result.system
    worst = 0.0
    scale = _scale(result.g)
    times = np.linspace(0.0, TWO_PI, core_times, endpoint=False)
    for c, word in sorted(result.satellite_words.items()):
        inner = algorithm0(word, lam=result.satellite_lambdas.get(c, "auto"), config=config)
        sphere = s3_slice(inner, config)
        if not sphere.found.any():
            raise VerificationError(f"satellite on component {c}: no strand meets S^3")
        u = sphere.points[sphere.found, 0] + 1j * sphere.points[sphere.found, 1]
        pattern = inverse_stereographic(u, sphere.v()[sphere.found])
        for j in range(1, system.strand_count(c) + 1):
            strand = (c, j)
            for t in times:
                X, Y, Z = system.x(strand, t), system.y(strand, t), system.z(strand, t)
                rho = system.radius(strand, t)
                pts = result.lam * np.stack(
                    [X + rho * pattern[:, 0], Y + rho * pattern[:, 1], Z + pattern[:, 2]], axis=-1
                )
                values = {"x": pts[:, 0], "y": pts[:, 1], "z": pts[:, 2], "et": np.full(len(pts), np.exp(1j * t))}
                worst = max(worst, float(np.max(np.abs(eval_batch(result.g, values)))) / scale)
    return worst


# ---------------------------------------------------------------------------
# the full report
# ---------------------------------------------------------------------------


def verify(
    result: ConstructionResult,
    config: Optional[RunConfig] = None,
    checks: Optional[Sequence[str]] = None,
    scan_times: int = 4,
) -> VerificationReport:
    """Run the checks that apply to the construction; ``checks`` restricts them by name."""
    config = config or RunConfig()
    wanted = set(CHECK_NAMES if checks is None else checks)
    unknown = wanted.difference(CHECK_NAMES)
    if unknown:
        raise VerificationError(f"unknown checks {sorted(unknown)}; choose from {list(CHECK_NAMES)}")
    report = VerificationReport(algorithm=result.algorithm.value, lam=result.lam)

    def skipped(name: str, why: str) -> None:
        report.add(CheckResult(name, CheckStatus.SKIPPED, why))

    for name in CHECK_NAMES:
        if name not in wanted:
            skipped(name, "not requested")
            continue
        try:
            _run_check(name, result, config, report, scan_times)
        except VerificationError as e:
            report.add(CheckResult(name, CheckStatus.FAIL, str(e)))
    logger.info("Verification %s", "PASS" if report.passed else "FAIL")
    return report


_APPLIES = {
    "lambda": {Algorithm.CLASSICAL, Algorithm.LOOP, Algorithm.HOLOMORPHIC, Algorithm.SATELLITE},
    "slices": {Algorithm.CLASSICAL, Algorithm.LOOP, Algorithm.HOLOMORPHIC},
    "reextract": {Algorithm.CLASSICAL, Algorithm.LOOP, Algorithm.HOLOMORPHIC, Algorithm.SATELLITE, Algorithm.SPINNING},
    "extra_components": {Algorithm.LOOP, Algorithm.HOLOMORPHIC},
    "fibration": {Algorithm.SPINNING},
    "surface": {Algorithm.SPINNING, Algorithm.TORUS},
    "satellite": {Algorithm.SATELLITE},
}


def _delta_for(result: ConstructionResult, config: RunConfig, report: VerificationReport) -> float:
    if report.delta is None:
        evidence = result.lambda_evidence or {}
        if evidence.get("delta") is not None:
            report.delta = float(evidence["delta"])
        else:
            report.delta = find_delta(make_tracker(result, config, lam=1.0, coarse=True)).delta
    return report.delta


def _run_check(name: str, result: ConstructionResult, config: RunConfig, report: VerificationReport, scan_times: int) -> None:
    if result.algorithm not in _APPLIES[name]:
        report.add(CheckResult(name, CheckStatus.SKIPPED, f"does not apply to {result.algorithm.value}"))
        return
    if name in ("lambda", "slices", "reextract", "extra_components", "satellite") and result.system is None:
        report.add(CheckResult(name, CheckStatus.SKIPPED, "bundle carries no strand system"))
        return

    if name == "lambda":
        delta = _delta_for(result, config, report)
        target = math.sqrt(delta * (2.0 - delta))
        tracker = make_tracker(result, config, lam=1.0, coarse=True)
        m_one = track_slices(tracker, [1.0 - delta])[1.0 - delta][1].max_norm
        m = result.lam * m_one
        ok = m < target
        report.add(CheckResult(
            name, _status(ok),
            "" if ok else f"containment violated: M(lambda, 1-delta)={m:.4g} >= {target:.4g}",
            {"delta": delta, "M": m, "M1": m_one, "target": target},
        ))
    elif name == "slices":
        delta = _delta_for(result, config, report)
        slices = slice_zeroes(result, [1.0, 1.0 - delta / 2.0, 1.0 - delta], config)
        floor = config.regularity_floor
        ok = all(s.stats.ok(floor) for s in slices)
        report.add(CheckResult(
            name, _status(ok),
            "" if ok else "zeros lost regularity, disjointness or convergence on some slice",
            {"slices": [s.to_dict() for s in slices]},
        ))
    elif name == "reextract":
        evidence = reextract_braid(result.system, result.word)
        report.add(CheckResult(
            name, _status(evidence.passed),
            "" if evidence.passed else "re-extracted crossings differ from the word",
            evidence.to_dict(),
        ))
    elif name == "extra_components":
        delta = _delta_for(result, config, report)
        times = np.linspace(0.0, TWO_PI, scan_times, endpoint=False)
        sphere = s4_slice(result, times, config, delta=config.delta_max)
        scans = map_ordered(lambda t: grid_scan(result, float(t), sphere, config), list(times), config.threads)
        extra = sum(len(s.unmatched) for s in scans)
        report.add(CheckResult(
            name, _status(extra == 0),
            "" if extra == 0 else f"{extra} zeros away from the braid (possible extra components)",
            {"scans": [s.to_dict() for s in scans], "delta": delta},
            advisory=True,
        ))
    elif name == "fibration":
        if result.n == 0:
            report.add(CheckResult(name, CheckStatus.SKIPPED, "n = 0: the rotation leaves no fibration to check"))
            return
        fib = fibration_check(result, config=config)
        ok = fib.max_relative_error <= config.fibration_tolerance
        report.add(CheckResult(
            name, _status(ok),
            "" if ok else f"d arg g / d chi deviates from s n by {fib.max_relative_error:.3g}",
            fib.to_dict(),
        ))
    elif name == "surface":
        if result.algorithm == Algorithm.TORUS and not result.surface:
            report.add(CheckResult(name, CheckStatus.SKIPPED, "bundle carries no torus parametrization"))
            return
        if result.algorithm == Algorithm.SPINNING and result.system is None:
            report.add(CheckResult(name, CheckStatus.SKIPPED, "bundle carries no strand system"))
            return
        residual = surface_residual(result, config)
        ok = residual < 1e-6
        report.add(CheckResult(name, _status(ok), "" if ok else f"g does not vanish on the surface ({residual:.3g})", {"max_relative": residual}))
    elif name == "satellite":
        if not result.satellite_words:
            report.add(CheckResult(name, CheckStatus.SKIPPED, "no satellite words recorded"))
            return
        residual = satellite_residual(result, config)
        ok = residual < 1e-4
        report.add(CheckResult(name, _status(ok), "" if ok else f"g does not vanish on the satellites ({residual:.3g})", {"max_relative": residual}))
