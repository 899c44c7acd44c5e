"""Time-dependent vector fields tangent to a loop braid.

Both forms are built from g(x, y, z, t), the polynomial with the
harmonic variable ``et`` = e^{it} still explicit:

* Ranada form:  V = (1 / 2 pi i) (grad g x grad gbar) / (1 + |g|^2)
                  = -(grad Re g x grad Im g) / (pi (1 + |g|^2))
* 4D cross product of grad Re g, grad Im g and grad t in (x, y, z, t)
  with basis order (e_x, e_y, e_z, e_t); its spatial part is
  grad Re g x grad Im g, so g = x + iy gives +e_z.

All derivatives are taken termwise on g; finite differences only appear in
the tests.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .poly_algebra import LaurentPoly, eval_batch, partial, partial_harmonic, poly_sum

logger = logging.getLogger(__name__)

SPATIAL = ("x", "y", "z")
FIELD_VARIABLES = frozenset(SPATIAL + ("et",))
CSV_HEADER = ("x", "y", "z", "t", "Vx", "Vy", "Vz", "div", "wave_rx", "wave_ry", "wave_rz")


class FieldError(RuntimeError):
    """Non-finite evaluation or a polynomial outside (x, y, z, et)."""


class FieldForm(str, Enum):
    RANADA = "ranada"
    CROSS4 = "cross4"


@dataclass
class FieldSample:
    point: Tuple[float, float, float]
    t: float
    vector: Tuple[float, float, float]
    divergence: float
    wave_residual: Tuple[float, float, float]

    def row(self) -> List[float]:
        return [*self.point, self.t, *self.vector, self.divergence, *self.wave_residual]

    def to_dict(self) -> Dict[str, Any]:
        return dict(zip(CSV_HEADER, self.row()))


@dataclass
class _Jet:
    """Values of g and its partials at N points."""

    g: np.ndarray        # (N,)
    grad: np.ndarray     # (N, 3)
    hess: np.ndarray     # (N, 3, 3)
    grad_lap: np.ndarray  # (N, 3): grad of the Laplacian
    g_t: np.ndarray      # (N,)
    grad_t: np.ndarray   # (N, 3)


@dataclass
class FieldEvaluation:
    points: np.ndarray
    times: np.ndarray
    vectors: np.ndarray
    divergence: np.ndarray
    wave_residual: np.ndarray

    def samples(self) -> List[FieldSample]:
        return [
            FieldSample(
                point=tuple(float(v) for v in self.points[k]),
                t=float(self.times[k]),
                vector=tuple(float(v) for v in self.vectors[k]),
                divergence=float(self.divergence[k]),
                wave_residual=tuple(float(v) for v in self.wave_residual[k]),
            )
            for k in range(len(self.points))
        ]


def _curl(h: np.ndarray) -> np.ndarray:
    """Curl of a vector field a from its Jacobian h[..., i, k] = d_k a_i."""
    return np.stack(
        [h[..., 2, 1] - h[..., 1, 2], h[..., 0, 2] - h[..., 2, 0], h[..., 1, 0] - h[..., 0, 1]],
        axis=-1,
    )


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(a * b, axis=-1)


class FieldModel:
    """Symbolic partials of g, evaluated on demand."""

    def __init__(self, g: LaurentPoly, form: Union[FieldForm, str] = FieldForm.RANADA):
        extra = set(g.variables).difference(FIELD_VARIABLES)
        if extra:
            raise FieldError(f"field polynomial may only use x, y, z, et; found {sorted(extra)}")
        self.g = g
        self.form = FieldForm(form)
        self.grad = [partial(g, v) for v in SPATIAL]
        self.hess = [[partial(self.grad[i], v) for v in SPATIAL] for i in range(3)]
        laplacian = poly_sum([self.hess[k][k] for k in range(3)], g.variables)
        self.grad_lap = [partial(laplacian, v) for v in SPATIAL]
        self.g_t = partial_harmonic(g, "et")
        self.grad_t = [partial(self.g_t, v) for v in SPATIAL]
        logger.debug("Field model: %d terms in g, form %s", len(g), self.form.value)

    # -- evaluation --------------------------------------------------------

    def _jet(self, points: np.ndarray, times: np.ndarray) -> _Jet:
        values = {
            "x": points[:, 0],
            "y": points[:, 1],
            "z": points[:, 2],
            "et": np.exp(1j * times),
        }

        def ev(p: LaurentPoly) -> np.ndarray:
            return eval_batch(p, values)

        jet = _Jet(
            g=ev(self.g),
            grad=np.stack([ev(p) for p in self.grad], axis=-1),
            hess=np.stack([np.stack([ev(p) for p in row], axis=-1) for row in self.hess], axis=-2),
            grad_lap=np.stack([ev(p) for p in self.grad_lap], axis=-1),
            g_t=ev(self.g_t),
            grad_t=np.stack([ev(p) for p in self.grad_t], axis=-1),
        )
        if not np.all(np.isfinite(jet.g)) or not np.all(np.isfinite(jet.grad)):
            raise FieldError("non-finite value of g or its gradient")
        return jet

    @staticmethod
    def _inputs(points: Any, t: Any) -> Tuple[np.ndarray, np.ndarray]:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[-1] != 3:
            raise FieldError(f"points must have 3 coordinates, got shape {pts.shape}")
        times = np.broadcast_to(np.asarray(t, dtype=float), (len(pts),)).copy()
        return pts, times

    def ranada(self, points: Any, t: Any) -> np.ndarray:
        """(1 / 2 pi i)(grad g x grad gbar) / (1 + g gbar), checked to be real."""
        pts, times = self._inputs(points, t)
        jet = self._jet(pts, times)
        h = 1.0 + np.abs(jet.g) ** 2
        raw = np.cross(jet.grad, np.conj(jet.grad)) / (2j * math.pi * h[:, None])
        scale = max(1.0, float(np.max(np.abs(raw))))
        residue = float(np.max(np.abs(raw.imag))) if raw.size else 0.0
        if residue > 1e-10 * scale:
            raise FieldError(f"field has imaginary part {residue:.3g}")
        return raw.real

    def cross4(self, points: Any, t: Any) -> np.ndarray:
        """Spatial part of the 4D cross product grad Re g x grad Im g x grad t."""
        pts, times = self._inputs(points, t)
        jet = self._jet(pts, times)
        return np.cross(jet.grad.real, jet.grad.imag)

    def vector(self, points: Any, t: Any) -> np.ndarray:
        if self.form == FieldForm.RANADA:
            return self.ranada(points, t)
        return self.cross4(points, t)

    def evaluate(self, points: Any, t: Any) -> FieldEvaluation:
        """Field, divergence and wave residual of the selected form."""
        pts, times = self._inputs(points, t)
        jet = self._jet(pts, times)
        a, b = jet.grad.real, jet.grad.imag
        ha, hb = jet.hess.real, jet.hess.imag
        c = np.cross(a, b)
        div_c = _dot(b, _curl(ha)) - _dot(a, _curl(hb))
        # d_k c for each k, shape (N, 3 components, 3 directions)
        dc = np.stack([np.cross(ha[..., :, k], b) + np.cross(a, hb[..., :, k]) for k in range(3)], axis=-1)
        lap_c = np.cross(jet.grad_lap.real, b) + np.cross(a, jet.grad_lap.imag)
        for k in range(3):
            lap_c = lap_c + 2.0 * np.cross(ha[..., :, k], hb[..., :, k])
        dt_c = np.cross(jet.grad_t.real, b) + np.cross(a, jet.grad_t.imag)

        if self.form == FieldForm.CROSS4:
            vectors = c
            div = div_c
            residual = lap_c + dt_c
        else:
            gr, gi = jet.g.real, jet.g.imag
            h = 1.0 + gr ** 2 + gi ** 2
            grad_h = 2.0 * (gr[:, None] * a + gi[:, None] * b)
            lap_h = 2.0 * (
                _dot(a, a) + _dot(b, b)
                + gr * np.trace(ha, axis1=-2, axis2=-1)
                + gi * np.trace(hb, axis1=-2, axis2=-1)
            )
            q = 1.0 / h
            grad_q = -grad_h / h[:, None] ** 2
            lap_q = -lap_h / h ** 2 + 2.0 * _dot(grad_h, grad_h) / h ** 3
            dt_h = 2.0 * (gr * jet.g_t.real + gi * jet.g_t.imag)
            dt_q = -dt_h / h ** 2

            vectors = -c * q[:, None] / math.pi
            div = -(div_c * q + _dot(c, grad_q)) / math.pi
            lap_v = -(lap_c * q[:, None] + 2.0 * np.einsum("nik,nk->ni", dc, grad_q) + c * lap_q[:, None]) / math.pi
            dt_v = -(dt_c * q[:, None] + c * dt_q[:, None]) / math.pi
            residual = lap_v + dt_v

        result = FieldEvaluation(points=pts, times=times, vectors=vectors, divergence=div, wave_residual=residual)
        if not (np.all(np.isfinite(vectors)) and np.all(np.isfinite(div)) and np.all(np.isfinite(residual))):
            raise FieldError("non-finite field sample")
        return result


def _model(g: Union[LaurentPoly, FieldModel], form: FieldForm) -> FieldModel:
    if isinstance(g, FieldModel):
        return g if g.form == form else FieldModel(g.g, form)
    return FieldModel(g, form)


def vfield_ranada(g: Union[LaurentPoly, FieldModel], point: Sequence[float], t: float) -> np.ndarray:
    return _model(g, FieldForm.RANADA).ranada(point, t)[0]


def vfield_cross4(g: Union[LaurentPoly, FieldModel], point: Sequence[float], t: float) -> np.ndarray:
    return _model(g, FieldForm.CROSS4).cross4(point, t)[0]


def divergence(
    g: Union[LaurentPoly, FieldModel], point: Sequence[float], t: float, form: FieldForm = FieldForm.RANADA
) -> float:
    return float(_model(g, form).evaluate(point, t).divergence[0])


def wave_residual(
    g: Union[LaurentPoly, FieldModel], point: Sequence[float], t: float, form: FieldForm = FieldForm.RANADA
) -> np.ndarray:
    """Laplacian of V plus its time derivative (lap V = -dV/dt moved to one side)."""
    return _model(g, form).evaluate(point, t).wave_residual[0]


def sample_field(
    model: FieldModel,
    points: np.ndarray,
    times: Union[float, np.ndarray],
) -> List[FieldSample]:
    return model.evaluate(points, times).samples()


def random_points(
    count: int, radius: float, seed: int = 0
) -> Tuple[np.ndarray, np.ndarray]:
    """Uniform points in the cube [-radius, radius]^3 and times in [0, 2 pi)."""
    rng = np.random.default_rng(seed)
    points = rng.uniform(-radius, radius, size=(count, 3))
    times = rng.uniform(0.0, 2.0 * math.pi, size=count)
    return points, times


@dataclass
class TangencyReport:
    samples: int
    max_angle: float
    min_speed: float

    def to_dict(self) -> Dict[str, Any]:
        return {"samples": self.samples, "max_angle": self.max_angle, "min_speed": self.min_speed}


def ring_tangency(
    model: FieldModel,
    system: Any,
    lam: float,
    time_samples: int = 16,
    ring_angles: int = 16,
) -> TangencyReport:
    """Angle between V_t and the ring tangent (-sin phi, cos phi, 0) at points of every ring."""
    t = np.linspace(0.0, 2.0 * math.pi, time_samples, endpoint=False)
    phi = np.linspace(0.0, 2.0 * math.pi, ring_angles, endpoint=False)
    tt, pp = np.meshgrid(t, phi, indexing="ij")
    worst = 0.0
    slowest = math.inf
    count = 0
    for strand in system.strands():
        points = lam * system.ring_points(strand, tt, pp).reshape(-1, 3)
        times = tt.ravel()
        vectors = model.vector(points, times)
        tangent = np.stack([-np.sin(pp.ravel()), np.cos(pp.ravel()), np.zeros(pp.size)], axis=-1)
        speed = np.linalg.norm(vectors, axis=-1)
        sine = np.linalg.norm(np.cross(vectors, tangent), axis=-1) / np.maximum(speed, 1e-300)
        worst = max(worst, float(np.max(np.arcsin(np.clip(sine, 0.0, 1.0)))))
        slowest = min(slowest, float(np.min(speed)))
        count += len(points)
    logger.info("Tangency over %d ring points: max angle %.3g rad", count, worst)
    return TangencyReport(samples=count, max_angle=worst, min_speed=slowest)
