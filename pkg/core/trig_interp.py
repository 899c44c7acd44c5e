"""Trigonometric polynomials and interpolation.

TrigPoly is a finite real Fourier series in one angle. Lagrange
interpolation solves a dense square system in the basis
{1, cos kt, sin kt, ...}; for an even node count 2m the top harmonic is
cos m(t - t0) with t0 the first node, so only one extra basis function
is needed. When that alignment is singular the next nodes are tried, then
the phase in quadrature with the nodes' vanishing product. Hermite
interpolation (values and slopes) is assembled in closed form from
squared-sine cardinal products.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

Number = Union[int, float]


class InterpolationError(ValueError):
    """Interpolation data that cannot be solved."""


class DuplicateNodeError(InterpolationError):
    pass


class IllConditionedError(InterpolationError):
    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


def canonical_angle(t: float) -> float:
    t = math.fmod(t, TWO_PI)
    if t < 0:
        t += TWO_PI
    if t >= TWO_PI:
        t = 0.0
    return t


@dataclass(frozen=True)
class TrigPoly:
    """a0 + sum_k (cos[k-1] cos kt + sin[k-1] sin kt)."""

    constant: float = 0.0
    cos: Tuple[float, ...] = ()
    sin: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        cos = [float(c) for c in self.cos]
        sin = [float(s) for s in self.sin]
        width = max(len(cos), len(sin))
        cos += [0.0] * (width - len(cos))
        sin += [0.0] * (width - len(sin))
        while cos and cos[-1] == 0.0 and sin[-1] == 0.0:
            cos.pop()
            sin.pop()
        object.__setattr__(self, "constant", float(self.constant))
        object.__setattr__(self, "cos", tuple(cos))
        object.__setattr__(self, "sin", tuple(sin))

    # -- construction -------------------------------------------------------

    @classmethod
    def zero(cls) -> "TrigPoly":
        return cls()

    @classmethod
    def const(cls, value: float) -> "TrigPoly":
        return cls(constant=value)

    @classmethod
    def from_exponential(cls, coeffs: np.ndarray) -> "TrigPoly":
        """Inverse of :meth:`to_exponential`; imaginary parts of the real series are dropped."""
        coeffs = np.asarray(coeffs, dtype=complex)
        d = (len(coeffs) - 1) // 2
        pos = coeffs[d + 1:]
        neg = coeffs[:d][::-1]
        cos = (pos + neg).real
        sin = (1j * (pos - neg)).real
        return cls(constant=coeffs[d].real, cos=tuple(cos), sin=tuple(sin))

    # -- structure ----------------------------------------------------------

    @property
    def degree(self) -> int:
        return len(self.cos)

    def coefficient(self, kind: str, k: int) -> float:
        if k == 0:
            return self.constant if kind == "cos" else 0.0
        table = self.cos if kind == "cos" else self.sin
        return table[k - 1] if k <= len(table) else 0.0

    def to_exponential(self) -> np.ndarray:
        """Coefficients c_k of e^{ikt}, k = -d..d, at index k + d."""
        d = self.degree
        out = np.zeros(2 * d + 1, dtype=complex)
        out[d] = self.constant
        if d:
            a = np.asarray(self.cos)
            b = np.asarray(self.sin)
            out[d + 1:] = (a - 1j * b) / 2
            out[:d] = ((a + 1j * b) / 2)[::-1]
        return out

    def exponential_terms(self) -> Dict[int, complex]:
        d = self.degree
        return {k - d: c for k, c in enumerate(self.to_exponential()) if c != 0}

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        arr = np.asarray(t, dtype=float)
        value = np.full(arr.shape, self.constant, dtype=float)
        if self.degree:
            k = np.arange(1, self.degree + 1)
            phase = np.multiply.outer(arr, k)
            value = value + np.cos(phase) @ np.asarray(self.cos) + np.sin(phase) @ np.asarray(self.sin)
        if np.ndim(t) == 0:
            return float(value)
        return value

    __call__ = evaluate

    def derivative(self) -> "TrigPoly":
        k = np.arange(1, self.degree + 1)
        return TrigPoly(
            constant=0.0,
            cos=tuple(k * np.asarray(self.sin)),
            sin=tuple(-k * np.asarray(self.cos)),
        )

    def max_abs(self, samples: int = 4096) -> float:
        grid = np.linspace(0.0, TWO_PI, samples, endpoint=False)
        return float(np.max(np.abs(self.evaluate(grid))))

    def min_value(self, samples: int = 4096) -> float:
        grid = np.linspace(0.0, TWO_PI, samples, endpoint=False)
        return float(np.min(self.evaluate(grid)))

    def largest_coefficient(self) -> float:
        values = [abs(self.constant), *map(abs, self.cos), *map(abs, self.sin)]
        return max(values)

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other: Union["TrigPoly", Number]) -> "TrigPoly":
        if not isinstance(other, TrigPoly):
            return TrigPoly(self.constant + float(other), self.cos, self.sin)
        width = max(self.degree, other.degree)
        a = _padded(self.cos, width) + _padded(other.cos, width)
        b = _padded(self.sin, width) + _padded(other.sin, width)
        return TrigPoly(self.constant + other.constant, tuple(a), tuple(b))

    __radd__ = __add__

    def __neg__(self) -> "TrigPoly":
        return self * -1.0

    def __sub__(self, other: Union["TrigPoly", Number]) -> "TrigPoly":
        return self + (-other)

    def __rsub__(self, other: Number) -> "TrigPoly":
        return (-self) + other

    def __mul__(self, other: Union["TrigPoly", Number]) -> "TrigPoly":
        if not isinstance(other, TrigPoly):
            f = float(other)
            return TrigPoly(
                self.constant * f,
                tuple(c * f for c in self.cos),
                tuple(s * f for s in self.sin),
            )
        return TrigPoly.from_exponential(np.convolve(self.to_exponential(), other.to_exponential()))

    __rmul__ = __mul__

    # -- serialization ------------------------------------------------------

    def to_json(self) -> Dict[str, Any]:
        return {"const": self.constant, "cos": list(self.cos), "sin": list(self.sin)}

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "TrigPoly":
        return cls(
            constant=float(data.get("const", 0.0)),
            cos=tuple(float(c) for c in data.get("cos", [])),
            sin=tuple(float(s) for s in data.get("sin", [])),
        )


def _padded(values: Sequence[float], width: int) -> np.ndarray:
    out = np.zeros(width)
    out[: len(values)] = values
    return out


def harmonic(k: int, kind: str = "cos", amplitude: float = 1.0) -> TrigPoly:
    """amplitude * cos(kt) or amplitude * sin(kt)."""
    if k == 0:
        return TrigPoly.const(amplitude if kind == "cos" else 0.0)
    coeffs = [0.0] * k
    coeffs[-1] = amplitude
    if kind == "cos":
        return TrigPoly(cos=tuple(coeffs))
    return TrigPoly(sin=tuple(coeffs))


def shifted_cosine(k: int, t0: float, amplitude: float = 1.0) -> TrigPoly:
    """amplitude * cos(k (t - t0))."""
    return harmonic(k, "cos", amplitude * math.cos(k * t0)) + harmonic(k, "sin", amplitude * math.sin(k * t0))


def shifted_sine(k: int, t0: float, amplitude: float = 1.0) -> TrigPoly:
    """amplitude * sin(k (t - t0))."""
    return harmonic(k, "sin", amplitude * math.cos(k * t0)) - harmonic(k, "cos", amplitude * math.sin(k * t0))


# ---------------------------------------------------------------------------
# Lagrange interpolation
# ---------------------------------------------------------------------------


@dataclass
class InterpolationResult:
    poly: TrigPoly
    condition: float
    residual: float
    node_count: int
    t0: float = 0.0


def _check_angles(angles: Sequence[float], min_gap: float) -> None:
    if not angles:
        raise InterpolationError("at least one node is required")
    ordered = sorted(angles)
    gaps = [b - a for a, b in zip(ordered, ordered[1:])]
    if len(ordered) > 1:
        gaps.append(ordered[0] + TWO_PI - ordered[-1])
    for gap in gaps:
        if gap < min_gap:
            raise DuplicateNodeError(f"node angles closer than {min_gap:g} (gap {gap:.3g})")


def _basis_matrix(angles: np.ndarray, t0: float, n: int) -> np.ndarray:
    m, odd = divmod(n, 2)
    top = m if odd else m - 1
    cols = [np.ones_like(angles)]
    for k in range(1, top + 1):
        cols.append(np.cos(k * angles))
        cols.append(np.sin(k * angles))
    if not odd and m >= 1:
        cols.append(np.cos(m * (angles - t0)))
    return np.column_stack(cols)


def _phase_candidates(angles: np.ndarray, n: int) -> List[float]:
    """Alignments for the top cosine: each node in order, then the phase in quadrature
    with prod sin((t - t_j)/2), which can never be singular."""
    m = n // 2
    quadrature = canonical_angle((float(np.sum(angles)) + math.pi) / (2 * m))
    return [float(a) for a in angles] + [quadrature]


def _aligned_system(angles: np.ndarray, n: int, condition_limit: float) -> Tuple[float, np.ndarray, float]:
    if n % 2:
        matrix = _basis_matrix(angles, 0.0, n)
        return 0.0, matrix, float(np.linalg.cond(matrix))
    best: Tuple[float, np.ndarray, float] = (0.0, np.empty(0), math.inf)
    for t0 in _phase_candidates(angles, n):
        matrix = _basis_matrix(angles, t0, n)
        condition = float(np.linalg.cond(matrix))
        if np.isfinite(condition) and condition <= condition_limit:
            if t0 != float(angles[0]):
                logger.info("Top cosine aligned to t0=%.6f; first node gives a singular system", t0)
            return t0, matrix, condition
        if condition < best[2]:
            best = (t0, matrix, condition)
    return best


def solve_interpolation(
    nodes: Sequence[Tuple[float, float]],
    *,
    condition_limit: float = 1e12,
    min_gap: float = 1e-9,
    tolerance: float = 1e-9,
) -> InterpolationResult:
    """Lagrange trigonometric interpolation through ``(angle, value)`` nodes."""
    angles = [canonical_angle(float(a)) for a, _ in nodes]
    values = np.array([float(v) for _, v in nodes])
    _check_angles(angles, min_gap)
    n = len(angles)
    theta = np.asarray(angles)
    t0, matrix, condition = _aligned_system(theta, n, condition_limit)
    if not np.isfinite(condition) or condition > condition_limit:
        raise IllConditionedError(
            f"interpolation system with {n} nodes is ill-conditioned (cond={condition:.3g})", condition
        )
    solution = linalg.lu_solve(linalg.lu_factor(matrix), values)

    m, odd = divmod(n, 2)
    top = m if odd else m - 1
    cos = [float(solution[2 * k - 1]) for k in range(1, top + 1)]
    sin = [float(solution[2 * k]) for k in range(1, top + 1)]
    poly = TrigPoly(constant=float(solution[0]), cos=tuple(cos), sin=tuple(sin))
    if not odd and m >= 1:
        poly = poly + shifted_cosine(m, t0, float(solution[-1]))

    residual = float(np.max(np.abs(poly.evaluate(theta) - values)))
    scale = 1.0 + float(np.max(np.abs(values)))
    if residual > tolerance * scale * max(1.0, poly.largest_coefficient()):
        raise IllConditionedError(
            f"interpolation residual {residual:.3g} exceeds tolerance", condition
        )
    logger.debug("Interpolated %d nodes: degree %d, cond %.3g, residual %.2e", n, poly.degree, condition, residual)
    return InterpolationResult(poly=poly, condition=condition, residual=residual, node_count=n, t0=t0)


def interpolate(nodes: Sequence[Tuple[float, float]], **kwargs: Any) -> TrigPoly:
    return solve_interpolation(nodes, **kwargs).poly


# ---------------------------------------------------------------------------
# Hermite interpolation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HermiteNode:
    angle: float
    value: float
    slope: float


def _cardinal_square(t_i: float, others: Sequence[float]) -> TrigPoly:
    """U_i(t) = prod_{k != i} (sin((t - t_k)/2) / sin((t_i - t_k)/2))^2."""
    product = TrigPoly.const(1.0)
    for t_k in others:
        denom = math.sin((t_i - t_k) / 2.0) ** 2
        # sin^2((t - t_k)/2) = (1 - cos(t - t_k)) / 2
        factor = (1.0 - shifted_cosine(1, t_k)) * (0.5 / denom)
        product = product * factor
    return product


def hermite_interpolate(
    nodes: Sequence[HermiteNode],
    *,
    min_gap: float = 1e-9,
    tolerance: float = 1e-8,
) -> TrigPoly:
    """Trigonometric polynomial with prescribed values and first derivatives.

    H(t) = sum_i z_i w0_i(t) + z'_i w1_i(t) where, with s = t - t_i,
    w0_i = (1 - V_i sin(s/2) cos(s/2)) U_i, w1_i = 2 sin(s/2) cos(s/2) U_i and
    V_i = sum_{k != i} 2 cot((t_i - t_k)/2).
    """
    angles = [canonical_angle(n.angle) for n in nodes]
    _check_angles(angles, min_gap)
    result = TrigPoly.zero()
    for i, node in enumerate(nodes):
        t_i = angles[i]
        others = [a for k, a in enumerate(angles) if k != i]
        u_i = _cardinal_square(t_i, others)
        v_i = sum(2.0 / math.tan((t_i - t_k) / 2.0) for t_k in others)
        # 2 sin(s/2) cos(s/2) = sin(t - t_i)
        sin_shift = shifted_sine(1, t_i)
        w0 = (1.0 - sin_shift * (v_i / 2.0)) * u_i
        w1 = sin_shift * u_i
        result = result + w0 * node.value + w1 * node.slope

    theta = np.asarray(angles)
    values = np.array([n.value for n in nodes])
    slopes = np.array([n.slope for n in nodes])
    residual = float(
        np.max(np.abs(result.evaluate(theta) - values) + np.abs(result.derivative().evaluate(theta) - slopes))
    )
    if residual > tolerance * (1.0 + float(np.max(np.abs(values))) + float(np.max(np.abs(slopes)))):
        raise IllConditionedError(f"Hermite residual {residual:.3g} exceeds tolerance", float("nan"))
    logger.debug("Hermite interpolation through %d nodes: degree %d", len(nodes), result.degree)
    return _clean(result)


def _clean(poly: TrigPoly, rel: float = 1e-13) -> TrigPoly:
    """Zero coefficients that are pure round-off relative to the largest one."""
    scale = poly.largest_coefficient()
    if scale == 0.0:
        return poly
    cut = rel * scale

    def keep(values: Iterable[float]) -> Tuple[float, ...]:
        return tuple(v if abs(v) > cut else 0.0 for v in values)

    constant = poly.constant if abs(poly.constant) > cut else 0.0
    return TrigPoly(constant, keep(poly.cos), keep(poly.sin))


# ---------------------------------------------------------------------------
# Torus trigonometric polynomials
# ---------------------------------------------------------------------------

TorusKey = Tuple[int, str, int, str]


def _exp_expansion(k: int, tag: str) -> Dict[int, complex]:
    if k == 0:
        return {0: 1.0 + 0j} if tag == "c" else {}
    if tag == "c":
        return {k: 0.5 + 0j, -k: 0.5 + 0j}
    return {k: -0.5j, -k: 0.5j}


@dataclass(frozen=True)
class TorusTrigPoly:
    """Sparse sum of coef * trig(k_phi phi) * trig(k_chi chi) with trig in {cos ("c"), sin ("s")}."""

    terms: Dict[TorusKey, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        cleaned: Dict[TorusKey, float] = {}
        for (kp, tp, kc, tc), coef in self.terms.items():
            if tp not in ("c", "s") or tc not in ("c", "s") or kp < 0 or kc < 0:
                raise InterpolationError(f"invalid torus term key {(kp, tp, kc, tc)!r}")
            if (kp == 0 and tp == "s") or (kc == 0 and tc == "s") or coef == 0.0:
                continue
            key = (kp, tp, kc, tc)
            cleaned[key] = cleaned.get(key, 0.0) + float(coef)
        object.__setattr__(self, "terms", cleaned)

    @classmethod
    def from_trig(cls, poly: TrigPoly, chi_harmonic: int = 0, chi_tag: str = "c") -> "TorusTrigPoly":
        """poly(phi) * cos(n chi) or poly(phi) * sin(n chi)."""
        terms: Dict[TorusKey, float] = {}
        if chi_harmonic == 0 and chi_tag == "s":
            return cls()
        terms[(0, "c", chi_harmonic, chi_tag)] = poly.constant
        for k, c in enumerate(poly.cos, start=1):
            terms[(k, "c", chi_harmonic, chi_tag)] = c
        for k, s in enumerate(poly.sin, start=1):
            terms[(k, "s", chi_harmonic, chi_tag)] = s
        return cls(terms)

    def __add__(self, other: "TorusTrigPoly") -> "TorusTrigPoly":
        merged = dict(self.terms)
        for key, coef in other.terms.items():
            merged[key] = merged.get(key, 0.0) + coef
        return TorusTrigPoly(merged)

    def __mul__(self, factor: Number) -> "TorusTrigPoly":
        return TorusTrigPoly({k: v * float(factor) for k, v in self.terms.items()})

    __rmul__ = __mul__

    def __sub__(self, other: "TorusTrigPoly") -> "TorusTrigPoly":
        return self + other * -1.0

    @property
    def degrees(self) -> Tuple[int, int]:
        if not self.terms:
            return (0, 0)
        return (max(k[0] for k in self.terms), max(k[2] for k in self.terms))

    def exponential_terms(self) -> Dict[Tuple[int, int], complex]:
        """Coefficients of e^{i(m phi + n chi)}."""
        out: Dict[Tuple[int, int], complex] = {}
        for (kp, tp, kc, tc), coef in self.terms.items():
            for m, a in _exp_expansion(kp, tp).items():
                for n, b in _exp_expansion(kc, tc).items():
                    out[(m, n)] = out.get((m, n), 0j) + coef * a * b
        return {k: v for k, v in out.items() if v != 0}

    def evaluate(self, phi: Union[float, np.ndarray], chi: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        phi = np.asarray(phi, dtype=float)
        chi = np.asarray(chi, dtype=float)
        total = np.zeros(np.broadcast(phi, chi).shape)
        for (kp, tp, kc, tc), coef in self.terms.items():
            a = np.cos(kp * phi) if tp == "c" else np.sin(kp * phi)
            b = np.cos(kc * chi) if tc == "c" else np.sin(kc * chi)
            total = total + coef * a * b
        return float(total) if total.ndim == 0 else total

    def to_json(self) -> List[Dict[str, Any]]:
        return [
            {"phi": [kp, tp], "chi": [kc, tc], "coef": coef}
            for (kp, tp, kc, tc), coef in sorted(self.terms.items())
        ]

    @classmethod
    def from_json(cls, data: List[Dict[str, Any]]) -> "TorusTrigPoly":
        terms: Dict[TorusKey, float] = {}
        for item in data:
            kp, tp = item["phi"]
            kc, tc = item["chi"]
            terms[(int(kp), str(tp), int(kc), str(tc))] = float(item["coef"])
        return cls(terms)
