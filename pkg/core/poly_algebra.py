"""Sparse Laurent polynomials with complex coefficients.

Terms are stored as an integer exponent matrix plus a complex coefficient
vector, kept merged, pruned and in graded-lex order. Products are
vectorized with numpy: exponent vectors are packed into a single integer
key so that like terms can be merged with ``np.unique``/``np.bincount``.

Harmonic variables ``et`` (e^{it}) and ``ec`` (e^{i chi}) may carry negative
exponents; the substitution helpers turn them into v, vbar, w, wbar.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

from .parallel import map_ordered

logger = logging.getLogger(__name__)

VARIABLE_ORDER: Tuple[str, ...] = (
    "x", "y", "z", "u", "v", "vbar", "w", "wbar", "et", "ec", "x1", "x2", "x3", "x4",
)
HARMONIC_PAIRS = {"et": ("v", "vbar"), "ec": ("w", "wbar")}
EXPONENT_LIMIT = 2 ** 15
PRUNE_TOLERANCE = 1e-14

Scalar = Union[int, float, complex]


class PolynomialError(ValueError):
    """Variable mismatch, exponent overflow or malformed polynomial data."""


def _order_variables(names: Iterable[str]) -> Tuple[str, ...]:
    names = set(names)
    unknown = names.difference(VARIABLE_ORDER)
    if unknown:
        raise PolynomialError(f"unknown variables: {sorted(unknown)}")
    return tuple(v for v in VARIABLE_ORDER if v in names)


# ---------------------------------------------------------------------------
# term merging
# ---------------------------------------------------------------------------


def _pack(exps: np.ndarray) -> Tuple[Optional[np.ndarray], np.ndarray, np.ndarray]:
    lo = exps.min(axis=0)
    span = exps.max(axis=0) - lo + 1
    if math.prod(int(s) for s in span) >= 2 ** 62:
        return None, lo, span
    strides = np.ones(len(span), dtype=np.int64)
    for i in range(len(span) - 2, -1, -1):
        strides[i] = strides[i + 1] * span[i + 1]
    keys = (exps - lo) @ strides
    return keys, lo, span


def _merge(exps: np.ndarray, coeffs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Sum coefficients of equal exponent rows."""
    k = exps.shape[1]
    if len(coeffs) == 0:
        return np.zeros((0, k), dtype=np.int64), np.zeros(0, dtype=complex)
    if k == 0:
        return np.zeros((1, 0), dtype=np.int64), np.array([coeffs.sum()], dtype=complex)
    keys, lo, span = _pack(exps)
    if keys is None:
        uniq, inverse = np.unique(exps, axis=0, return_inverse=True)
    else:
        ukeys, inverse = np.unique(keys, return_inverse=True)
        uniq = np.empty((len(ukeys), k), dtype=np.int64)
        rest = ukeys.copy()
        for i in range(k - 1, -1, -1):
            uniq[:, i] = rest % span[i] + lo[i]
            rest //= span[i]
    inverse = np.asarray(inverse).ravel()
    real = np.bincount(inverse, weights=coeffs.real, minlength=len(uniq))
    imag = np.bincount(inverse, weights=coeffs.imag, minlength=len(uniq))
    return uniq, real + 1j * imag


class LaurentPoly:
    """Immutable sparse polynomial over named variables."""

    __slots__ = ("variables", "exponents", "coeffs")

    def __init__(
        self,
        variables: Sequence[str],
        exponents: Any,
        coeffs: Any,
        *,
        prune_tolerance: float = PRUNE_TOLERANCE,
    ):
        variables = tuple(variables)
        if len(set(variables)) != len(variables):
            raise PolynomialError(f"repeated variable in {variables}")
        ordered = _order_variables(variables)
        coef = np.asarray(coeffs, dtype=complex).ravel()
        if variables:
            exps = np.asarray(exponents, dtype=np.int64).reshape(-1, len(variables))
        else:
            exps = np.zeros((len(coef), 0), dtype=np.int64)
        if exps.shape[0] != coef.shape[0]:
            raise PolynomialError("exponent rows and coefficients differ in length")
        if ordered != variables:
            exps = exps[:, [variables.index(v) for v in ordered]]
        if exps.size and np.abs(exps).max() > EXPONENT_LIMIT:
            raise PolynomialError(f"exponent exceeds +/-{EXPONENT_LIMIT}")
        exps, coef = _merge(exps, coef)
        magnitude = np.abs(coef)
        if len(coef):
            keep = magnitude > prune_tolerance * magnitude.max()
            exps, coef = exps[keep], coef[keep]
        if len(coef) > 1:
            total = exps.sum(axis=1)
            order = np.lexsort(tuple(exps[:, i] for i in range(exps.shape[1] - 1, -1, -1)) + (total,))
            exps, coef = exps[order], coef[order]
        exps.setflags(write=False)
        coef.setflags(write=False)
        self.variables = ordered
        self.exponents = exps
        self.coeffs = coef

    # -- construction -------------------------------------------------------

    @classmethod
    def zero(cls, variables: Sequence[str] = ()) -> "LaurentPoly":
        return cls(variables, np.zeros((0, len(variables))), [])

    @classmethod
    def constant(cls, value: Scalar, variables: Sequence[str] = ()) -> "LaurentPoly":
        return cls(variables, np.zeros((1, len(variables))), [value])

    @classmethod
    def variable(cls, name: str, power: int = 1, coeff: Scalar = 1.0) -> "LaurentPoly":
        return cls((name,), [[power]], [coeff])

    @classmethod
    def from_terms(cls, variables: Sequence[str], terms: Mapping[Tuple[int, ...], Scalar]) -> "LaurentPoly":
        variables = tuple(variables)
        if not terms:
            return cls.zero(variables)
        keys = list(terms)
        return cls(variables, np.array(keys, dtype=np.int64).reshape(len(keys), len(variables)), [terms[k] for k in keys])

    # -- structure ----------------------------------------------------------

    def __len__(self) -> int:
        return len(self.coeffs)

    @property
    def is_zero(self) -> bool:
        return len(self.coeffs) == 0

    @property
    def terms(self) -> Dict[Tuple[int, ...], complex]:
        return {tuple(int(e) for e in row): complex(c) for row, c in zip(self.exponents, self.coeffs)}

    def iter_terms(self) -> Iterator[Tuple[Tuple[int, ...], complex]]:
        for row, c in zip(self.exponents, self.coeffs):
            yield tuple(int(e) for e in row), complex(c)

    def column(self, name: str) -> np.ndarray:
        if name not in self.variables:
            return np.zeros(len(self.coeffs), dtype=np.int64)
        return self.exponents[:, self.variables.index(name)]

    def degree_in(self, name: str) -> int:
        col = self.column(name)
        return int(col.max()) if len(col) else 0

    def min_degree_in(self, name: str) -> int:
        col = self.column(name)
        return int(col.min()) if len(col) else 0

    def max_abs_coefficient(self) -> float:
        return float(np.abs(self.coeffs).max()) if len(self.coeffs) else 0.0

    def align(self, variables: Sequence[str]) -> "LaurentPoly":
        """Embed into a superset of variables."""
        target = _order_variables(variables)
        if target == self.variables:
            return self
        missing = set(self.variables).difference(target)
        if missing:
            if np.any(self.exponents[:, [self.variables.index(v) for v in missing]] != 0):
                raise PolynomialError(f"cannot drop variables {sorted(missing)} that occur in the polynomial")
        exps = np.zeros((len(self.coeffs), len(target)), dtype=np.int64)
        for j, name in enumerate(target):
            if name in self.variables:
                exps[:, j] = self.exponents[:, self.variables.index(name)]
        return LaurentPoly(target, exps, self.coeffs, prune_tolerance=0.0)

    def drop_unused(self) -> "LaurentPoly":
        used = [v for v in self.variables if np.any(self.column(v) != 0)]
        return self.align(used)

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other: Union["LaurentPoly", Scalar]) -> "LaurentPoly":
        if isinstance(other, LaurentPoly):
            return other
        return LaurentPoly.constant(other, self.variables)

    def __add__(self, other: Union["LaurentPoly", Scalar]) -> "LaurentPoly":
        a, b = _aligned(self, self._coerce(other))
        return LaurentPoly(a.variables, np.vstack([a.exponents, b.exponents]), np.concatenate([a.coeffs, b.coeffs]))

    __radd__ = __add__

    def __neg__(self) -> "LaurentPoly":
        return LaurentPoly(self.variables, self.exponents, -self.coeffs, prune_tolerance=0.0)

    def __sub__(self, other: Union["LaurentPoly", Scalar]) -> "LaurentPoly":
        return self + (-self._coerce(other))

    def __rsub__(self, other: Scalar) -> "LaurentPoly":
        return (-self) + other

    def __mul__(self, other: Union["LaurentPoly", Scalar]) -> "LaurentPoly":
        if isinstance(other, LaurentPoly):
            return poly_mul(self, other)
        return LaurentPoly(self.variables, self.exponents, self.coeffs * complex(other), prune_tolerance=0.0)

    __rmul__ = __mul__

    def __truediv__(self, other: Scalar) -> "LaurentPoly":
        return self * (1.0 / complex(other))

    def __pow__(self, power: int) -> "LaurentPoly":
        if power < 0:
            raise PolynomialError("negative powers of polynomials are not supported")
        result = LaurentPoly.constant(1.0, self.variables)
        base = self
        while power:
            if power & 1:
                result = result * base
            power >>= 1
            if power:
                base = base * base
        return result

    def conjugate_coefficients(self) -> "LaurentPoly":
        return LaurentPoly(self.variables, self.exponents, np.conj(self.coeffs), prune_tolerance=0.0)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        a, b = _aligned(self, other)
        return (
            a.exponents.shape == b.exponents.shape
            and bool(np.array_equal(a.exponents, b.exponents))
            and bool(np.array_equal(a.coeffs, b.coeffs))
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"LaurentPoly(vars={list(self.variables)}, terms={len(self)})"

    # -- serialization ------------------------------------------------------

    def to_json(self) -> Dict[str, Any]:
        return {
            "vars": list(self.variables),
            "terms": [
                {"exp": [int(e) for e in row], "re": float(c.real), "im": float(c.imag)}
                for row, c in zip(self.exponents, self.coeffs)
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "LaurentPoly":
        try:
            variables = tuple(data["vars"])
            rows = [item["exp"] for item in data["terms"]]
            coeffs = [complex(float(item["re"]), float(item["im"])) for item in data["terms"]]
        except (KeyError, TypeError, ValueError) as e:
            raise PolynomialError(f"malformed polynomial JSON: {e}") from e
        if not rows:
            return cls.zero(variables)
        return cls(variables, np.array(rows, dtype=np.int64), coeffs, prune_tolerance=0.0)


def _aligned(a: LaurentPoly, b: LaurentPoly) -> Tuple[LaurentPoly, LaurentPoly]:
    if a.variables == b.variables:
        return a, b
    union = _order_variables(set(a.variables) | set(b.variables))
    return a.align(union), b.align(union)


def poly_sum(polys: Sequence[LaurentPoly], variables: Sequence[str] = ()) -> LaurentPoly:
    """Sum many polynomials with a single merge."""
    names = set(variables)
    for p in polys:
        names.update(p.variables)
    union = _order_variables(names)
    if not polys:
        return LaurentPoly.zero(union)
    parts = [p.align(union) for p in polys]
    return LaurentPoly(
        union,
        np.vstack([p.exponents for p in parts]),
        np.concatenate([p.coeffs for p in parts]),
    )


# ---------------------------------------------------------------------------
# multiplication
# ---------------------------------------------------------------------------


def poly_mul(
    a: LaurentPoly,
    b: LaurentPoly,
    *,
    max_workers: Optional[int] = None,
    chunk_terms: int = 2_000_000,
) -> LaurentPoly:
    """Distributive expansion of ``a * b``.

    The term-pair products are split into row chunks of ``a``; chunks may run
    on separate threads and are merged in chunk order.
    """
    a, b = _aligned(a, b)
    variables = a.variables
    if a.is_zero or b.is_zero:
        return LaurentPoly.zero(variables)
    if len(a) < len(b):
        a, b = b, a
    rows = max(1, chunk_terms // len(b))
    bounds = [(start, min(start + rows, len(a))) for start in range(0, len(a), rows)]

    def expand(span: Tuple[int, int]) -> Tuple[np.ndarray, np.ndarray]:
        lo, hi = span
        exps = (a.exponents[lo:hi, None, :] + b.exponents[None, :, :]).reshape((hi - lo) * len(b), len(variables))
        coeffs = np.multiply.outer(a.coeffs[lo:hi], b.coeffs).ravel()
        return _merge(exps, coeffs)

    if len(bounds) == 1:
        parts = [expand(bounds[0])]
    else:
        parts = map_ordered(expand, bounds, max_workers=max_workers)
    exps = np.vstack([p[0] for p in parts])
    coeffs = np.concatenate([p[1] for p in parts])
    return LaurentPoly(variables, exps, coeffs)


def poly_product(factors: Sequence[LaurentPoly], **kwargs: Any) -> LaurentPoly:
    """Expand a product factor by factor, pruning after each step."""
    if not factors:
        return LaurentPoly.constant(1.0)
    result = factors[0]
    for factor in factors[1:]:
        result = poly_mul(result, factor, **kwargs)
    return result


# ---------------------------------------------------------------------------
# calculus and rescaling
# ---------------------------------------------------------------------------


def partial(f: LaurentPoly, name: str) -> LaurentPoly:
    """Partial derivative with respect to an ordinary variable."""
    if name not in f.variables:
        return LaurentPoly.zero(f.variables)
    j = f.variables.index(name)
    col = f.exponents[:, j]
    keep = col != 0
    exps = f.exponents[keep].copy()
    exps[:, j] -= 1
    return LaurentPoly(f.variables, exps, f.coeffs[keep] * col[keep], prune_tolerance=0.0)


def partial_harmonic(f: LaurentPoly, name: str = "et") -> LaurentPoly:
    """d/dt for a harmonic variable: e^{int} -> i n e^{int}."""
    if name not in f.variables:
        return LaurentPoly.zero(f.variables)
    col = f.column(name)
    keep = col != 0
    return LaurentPoly(f.variables, f.exponents[keep], f.coeffs[keep] * (1j * col[keep]), prune_tolerance=0.0)


def rescale(f: LaurentPoly, factors: Mapping[str, float]) -> LaurentPoly:
    """Substitute ``var -> factor * var`` for each entry of ``factors``."""
    coeffs = f.coeffs.copy()
    for name, factor in factors.items():
        col = f.column(name)
        if np.any(col != 0):
            coeffs = coeffs * np.power(complex(factor), col)
    return LaurentPoly(f.variables, f.exponents, coeffs, prune_tolerance=0.0)


def reduce_harmonics(f: LaurentPoly, source: str, target: str, period: int) -> Tuple[LaurentPoly, float]:
    """Map ``source^m`` to ``target^(m/period)``, dropping exponents not divisible by ``period``.

    Returns the reduced polynomial and the largest dropped coefficient
    relative to the largest kept one.
    """
    if source not in f.variables:
        return f, 0.0
    col = f.column(source)
    keep = (col % period) == 0
    dropped = float(np.abs(f.coeffs[~keep]).max()) if np.any(~keep) else 0.0
    kept_scale = float(np.abs(f.coeffs[keep]).max()) if np.any(keep) else 1.0
    exps = f.exponents[keep].copy()
    exps[:, f.variables.index(source)] //= period
    names = list(f.variables)
    if source != target:
        names[names.index(source)] = target
    return LaurentPoly(names, exps, f.coeffs[keep]), dropped / max(kept_scale, 1e-300)


# ---------------------------------------------------------------------------
# substitutions
# ---------------------------------------------------------------------------


def _split_harmonic(f: LaurentPoly, source: str, positive: str, negative: str) -> LaurentPoly:
    if source not in f.variables:
        return f
    col = f.column(source)
    others = [v for v in f.variables if v != source]
    exps = [f.column(v) for v in others] + [np.maximum(col, 0), np.maximum(-col, 0)]
    names = others + [positive, negative]
    return LaurentPoly(names, np.column_stack(exps), f.coeffs, prune_tolerance=0.0)


def subst_unit_circle(g: LaurentPoly) -> LaurentPoly:
    """e^{int} -> v^n for n > 0 and vbar^{-n} for n < 0 (likewise e^{i n chi} -> w, wbar)."""
    f = g
    for source, (pos, neg) in HARMONIC_PAIRS.items():
        if any(name in f.variables for name in (pos, neg)) and source in f.variables:
            raise PolynomialError(f"{pos}/{neg} already present alongside {source}")
        f = _split_harmonic(f, source, pos, neg)
    return f.drop_unused()


def restore_harmonics(f: LaurentPoly) -> LaurentPoly:
    """Inverse of :func:`subst_unit_circle`: v^a vbar^b -> e^{i(a-b)t}.

    Only defined when no term carries both members of a pair.
    """
    g = f
    for source, (pos, neg) in HARMONIC_PAIRS.items():
        if pos not in g.variables and neg not in g.variables:
            continue
        a, b = g.column(pos), g.column(neg)
        if np.any((a > 0) & (b > 0)):
            raise PolynomialError(f"terms mix {pos} and {neg}; not a unit-circle substitution")
        others = [v for v in g.variables if v not in (pos, neg)]
        names = others + [source]
        exps = np.column_stack([g.column(v) for v in others] + [a - b])
        g = LaurentPoly(names, exps, g.coeffs, prune_tolerance=0.0)
    return g.drop_unused()


@dataclass(frozen=True)
class HolomorphicForm:
    """Numerator of the rational map obtained from e^{-int} -> v^{-n}."""

    numerator: LaurentPoly
    powers: Dict[str, int] = field(default_factory=dict)

    @property
    def denominator_power(self) -> int:
        return self.powers.get("v", 0)


def subst_holomorphic(g: LaurentPoly) -> HolomorphicForm:
    """e^{it} -> v, e^{-it} -> 1/v (and e^{i chi} -> w); clear the v (and w) denominators."""
    names = list(g.variables)
    exps = g.exponents.copy()
    powers: Dict[str, int] = {}
    for source, (pos, _neg) in HARMONIC_PAIRS.items():
        if source not in names:
            continue
        j = names.index(source)
        if pos in names:
            raise PolynomialError(f"{pos} already present alongside {source}")
        shift = -int(exps[:, j].min()) if len(exps) else 0
        exps[:, j] += shift
        names[j] = pos
        powers[pos] = shift
    numerator = LaurentPoly(names, exps, g.coeffs, prune_tolerance=0.0).drop_unused()
    return HolomorphicForm(numerator=numerator, powers=powers)


def compose(f: LaurentPoly, mapping: Mapping[str, LaurentPoly], **kwargs: Any) -> LaurentPoly:
    """Substitute a polynomial for each variable of ``f`` named in ``mapping``.

    Variables of ``f`` not in ``mapping`` are kept as they are.
    """
    cache: Dict[Tuple[str, int], LaurentPoly] = {}

    def power(name: str, e: int) -> LaurentPoly:
        key = (name, e)
        if key not in cache:
            if e == 1:
                cache[key] = mapping[name]
            elif e % 2 == 0:
                half = power(name, e // 2)
                cache[key] = poly_mul(half, half, **kwargs)
            else:
                cache[key] = poly_mul(power(name, e - 1), mapping[name], **kwargs)
        return cache[key]

    pieces: List[LaurentPoly] = []
    for row, coeff in f.iter_terms():
        term: Optional[LaurentPoly] = None
        kept: Dict[str, int] = {}
        for name, e in zip(f.variables, row):
            if e == 0:
                continue
            if name in mapping:
                if e < 0:
                    raise PolynomialError(f"cannot substitute into negative power of {name}")
                factor = power(name, e)
                term = factor if term is None else poly_mul(term, factor, **kwargs)
            else:
                kept[name] = e
        mono = LaurentPoly.from_terms(tuple(kept), {tuple(kept.values()): coeff})
        pieces.append(mono if term is None else poly_mul(term, mono, **kwargs))
    return poly_sum(pieces)


def _total_degree(f: LaurentPoly) -> int:
    if f.is_zero:
        return 0
    if (f.exponents < 0).any():
        raise PolynomialError("pullback requires non-negative exponents")
    return int(f.exponents.sum(axis=1).max())


def _homogeneous_parts(f: LaurentPoly) -> Dict[int, LaurentPoly]:
    totals = f.exponents.sum(axis=1)
    return {
        int(n): LaurentPoly(f.variables, f.exponents[totals == n], f.coeffs[totals == n], prune_tolerance=0.0)
        for n in np.unique(totals)
    }


def _pullback(f: LaurentPoly, mapping: Mapping[str, LaurentPoly], denominator: LaurentPoly) -> LaurentPoly:
    top = _total_degree(f)
    pieces = []
    clearing = {0: LaurentPoly.constant(1.0, denominator.variables)}
    for n, part in sorted(_homogeneous_parts(f).items(), reverse=True):
        k = top - n
        if k not in clearing:
            below = max(e for e in clearing if e < k)
            clearing[k] = poly_mul(clearing[below], denominator ** (k - below))
        pieces.append(poly_mul(compose(part, mapping), clearing[k]))
    return poly_sum(pieces)


def stereographic_pullback(f: LaurentPoly) -> LaurentPoly:
    """Numerator of f composed with inverse stereographic projection R^4 -> S^4.

    x = 2x1/D, y = 2x2/D, z = (|x|^2 - 1)/D, v = 2(x3 + i x4)/D with
    D = |x|^2 + 1; the result is D^deg(f) * f(Phi(x)).
    """
    allowed = {"x", "y", "z", "v", "vbar"}
    if not set(f.variables) <= allowed:
        raise PolynomialError(f"pullback expects variables among {sorted(allowed)}, got {f.variables}")
    x1, x2, x3, x4 = (LaurentPoly.variable(n) for n in ("x1", "x2", "x3", "x4"))
    norm = x1 * x1 + x2 * x2 + x3 * x3 + x4 * x4
    mapping = {
        "x": 2.0 * x1,
        "y": 2.0 * x2,
        "z": norm - 1.0,
        "v": 2.0 * (x3 + 1j * x4),
        "vbar": 2.0 * (x3 - 1j * x4),
    }
    return _pullback(f, mapping, norm + 1.0)


def stereographic_pullback_3d(f: LaurentPoly) -> LaurentPoly:
    """Numerator of f(u, v, vbar) composed with R^3 -> S^3 in C^2.

    v = 2(x1 + i x2)/D and u = (2 x3 + i(|x|^2 - 1))/D with D = |x|^2 + 1,
    so {u = 0} pulls back to the unit circle of the x1x2-plane.
    """
    allowed = {"u", "v", "vbar"}
    if not set(f.variables) <= allowed:
        raise PolynomialError(f"3d pullback expects variables among {sorted(allowed)}, got {f.variables}")
    x1, x2, x3 = (LaurentPoly.variable(n) for n in ("x1", "x2", "x3"))
    norm = x1 * x1 + x2 * x2 + x3 * x3
    mapping = {
        "u": 2.0 * x3 + 1j * (norm - 1.0),
        "v": 2.0 * (x1 + 1j * x2),
        "vbar": 2.0 * (x1 - 1j * x2),
    }
    return _pullback(f, mapping, norm + 1.0)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def eval_poly(f: LaurentPoly, point: Mapping[str, Scalar]) -> complex:
    if f.is_zero:
        return 0j
    missing = [v for v in f.variables if v not in point]
    if missing:
        raise PolynomialError(f"no value for variables {missing}")
    values = np.array([complex(point[v]) for v in f.variables], dtype=complex)
    monomials = np.prod(values[None, :] ** f.exponents, axis=1) if f.variables else np.ones(len(f))
    return complex(monomials @ f.coeffs)


def eval_batch(f: LaurentPoly, points: Mapping[str, Any], max_cells: int = 4_000_000) -> np.ndarray:
    """Evaluate at many points; ``points[var]`` are equally shaped arrays.

    The variable with the most distinct exponents becomes a column index of
    a sparse coefficient matrix; the remaining monomials are evaluated as
    rows and contracted with a sparse product.
    """
    shape = np.shape(next(iter(points.values()))) if points else ()
    count = int(np.prod(shape)) if shape else 1
    if f.is_zero:
        return np.zeros(shape, dtype=complex)
    missing = [v for v in f.variables if v not in points]
    if missing:
        raise PolynomialError(f"no value for variables {missing}")
    if not f.variables:
        return np.full(shape, complex(f.coeffs[0]))
    values = {v: np.asarray(points[v], dtype=complex).reshape(count) for v in f.variables}

    distinct = [len(np.unique(f.column(v))) for v in f.variables]
    col_var = f.variables[int(np.argmax(distinct))]
    row_vars = [v for v in f.variables if v != col_var]
    col_exps, col_index = np.unique(f.column(col_var), return_inverse=True)
    col_index = np.asarray(col_index).ravel()
    if row_vars:
        row_matrix = np.column_stack([f.column(v) for v in row_vars])
        row_exps, row_index = np.unique(row_matrix, axis=0, return_inverse=True)
        row_index = np.asarray(row_index).ravel()
    else:
        row_exps = np.zeros((1, 0), dtype=np.int64)
        row_index = np.zeros(len(f), dtype=np.int64)
    coef = sparse.csr_matrix((f.coeffs, (row_index, col_index)), shape=(len(row_exps), len(col_exps)))

    out = np.empty(count, dtype=complex)
    step = max(1, max_cells // max(len(row_exps), len(col_exps), 1))
    for lo in range(0, count, step):
        hi = min(lo + step, count)
        rows = np.ones((hi - lo, len(row_exps)), dtype=complex)
        for j, name in enumerate(row_vars):
            base = values[name][lo:hi]
            rows *= base[:, None] ** row_exps[:, j][None, :]
        cols = values[col_var][lo:hi, None] ** col_exps[None, :]
        contracted = np.asarray((coef.T @ rows.T)).T
        out[lo:hi] = np.sum(contracted * cols, axis=1)
    return out.reshape(shape)


# ---------------------------------------------------------------------------
# degrees
# ---------------------------------------------------------------------------


@dataclass
class DegreeReport:
    per_variable: Dict[str, int]
    min_exponents: Dict[str, int]
    conjugate_pairs: Dict[str, int]
    total: int
    term_count: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "per_variable": dict(self.per_variable),
            "min_exponents": dict(self.min_exponents),
            "conjugate_pairs": dict(self.conjugate_pairs),
            "total": self.total,
            "terms": self.term_count,
        }


def degrees(f: LaurentPoly) -> DegreeReport:
    """Degree bookkeeping: every variable has weight 1; Laurent exponents count by absolute value."""
    per_variable = {v: f.degree_in(v) for v in f.variables}
    min_exponents = {v: f.min_degree_in(v) for v in f.variables}
    pairs: Dict[str, int] = {}
    for pos, neg in (("v", "vbar"), ("w", "wbar")):
        if pos in f.variables or neg in f.variables:
            combined = f.column(pos) + f.column(neg)
            pairs[pos] = int(combined.max()) if len(combined) else 0
    total = int(np.abs(f.exponents).sum(axis=1).max()) if len(f) and f.variables else 0
    return DegreeReport(per_variable, min_exponents, pairs, total, len(f))
