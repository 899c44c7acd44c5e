import math

import numpy as np
import pytest

from core.braid_words import parse_loop_word
from core.constructors import algorithm1
from core.poly_algebra import LaurentPoly, eval_batch
from core.vector_field import (
    CSV_HEADER,
    FieldError,
    FieldForm,
    FieldModel,
    divergence,
    random_points,
    ring_tangency,
    sample_field,
    vfield_cross4,
    vfield_ranada,
    wave_residual,
)

H = 1e-4


@pytest.fixture(scope="module")
def exchanged_rings():
    return algorithm1(parse_loop_word("r1 r1", 2), lam=1.0)



@pytest.fixture(scope="module")
def passing_rings():
    return algorithm1(parse_loop_word("r1^-1 r2 s1 r2 r1^-1", 3), lam=1.0)


def _small_g() -> LaurentPoly:
    x, y, z = (LaurentPoly.variable(v) for v in ("x", "y", "z"))
    et = LaurentPoly.variable("et")
    return (x + 1j * y) ** 2 * et + z * (x - 0.5j) + 0.3 * LaurentPoly.variable("et", -1) * y * y


def _numeric_divergence(model: FieldModel, point: np.ndarray, t: float) -> float:
    total = 0.0
    for k in range(3):
        step = np.zeros(3)
        step[k] = H
        total += (model.vector(point + step, t)[0, k] - model.vector(point - step, t)[0, k]) / (2 * H)
    return total


def _numeric_wave(model: FieldModel, point: np.ndarray, t: float) -> np.ndarray:
    centre = model.vector(point, t)[0]
    lap = np.zeros(3)
    for k in range(3):
        step = np.zeros(3)
        step[k] = H
        lap += (model.vector(point + step, t)[0] - 2 * centre + model.vector(point - step, t)[0]) / H ** 2
    dt = (model.vector(point, t + H)[0] - model.vector(point, t - H)[0]) / (2 * H)
    return lap + dt


@pytest.mark.parametrize("form", [FieldForm.RANADA, FieldForm.CROSS4])
def test_field_is_divergence_free(form):
    model = FieldModel(_small_g(), form)
    points, times = random_points(40, 1.0, seed=1)

    result = model.evaluate(points, times)

    scale = 1.0 + float(np.max(np.abs(result.vectors)))
    assert np.max(np.abs(result.divergence)) <= 1e-6 * scale
    for k in range(3):
        assert _numeric_divergence(model, points[k], times[k]) == pytest.approx(0.0, abs=1e-6 * scale)

def test_constructed_loop_field_is_divergence_free_but_not_a_wave(passing_rings):
    model = FieldModel(passing_rings.g)
    points, times = random_points(1000, 1.0, seed=0)

    result = model.evaluate(points, times)

    scale = 1.0 + float(np.max(np.abs(result.vectors)))
    assert np.max(np.abs(result.divergence)) <= 1e-6 * scale
    assert np.median(np.linalg.norm(result.wave_residual, axis=1)) > 1e-6



def test_both_forms_are_parallel_with_the_ranada_normalization():
    g = _small_g()
    points, times = random_points(25, 1.5, seed=2)
    ranada = FieldModel(g, "ranada").vector(points, times)
    cross = FieldModel(g, "cross4").vector(points, times)
    values = eval_batch(g, {"x": points[:, 0], "y": points[:, 1], "z": points[:, 2], "et": np.exp(1j * times)})

    expected = -cross / (math.pi * (1.0 + np.abs(values) ** 2))[:, None]

    assert np.allclose(ranada, expected, rtol=1e-9, atol=1e-12)


def test_planar_coordinate_gives_the_vertical_field():
    g = LaurentPoly.variable("x") + 1j * LaurentPoly.variable("y")

    assert vfield_cross4(g, [0.2, -0.4, 0.7], 1.0) == pytest.approx([0.0, 0.0, 1.0])
    ranada = vfield_ranada(g, [0.0, 0.0, 0.0], 0.0)
    assert ranada == pytest.approx([0.0, 0.0, -1.0 / math.pi])


@pytest.mark.parametrize("form", [FieldForm.RANADA, FieldForm.CROSS4])
def test_wave_residual_matches_finite_differences(form):
    model = FieldModel(_small_g(), form)
    point, t = np.array([0.3, -0.2, 0.45]), 0.8

    analytic = model.evaluate(point, t).wave_residual[0]
    numeric = _numeric_wave(model, point, t)

    scale = 1.0 + float(np.max(np.abs(analytic)))
    assert np.allclose(analytic, numeric, atol=1e-4 * scale)
    # lap V = -dV/dt does not hold in general
    assert np.max(np.abs(analytic)) > 1e-6


def test_single_point_helpers_agree_with_the_model():
    g = _small_g()
    model = FieldModel(g)
    point, t = [0.1, 0.2, -0.3], 2.0

    assert vfield_ranada(g, point, t) == pytest.approx(model.vector(point, t)[0])
    assert divergence(model, point, t) == pytest.approx(model.evaluate(point, t).divergence[0])
    assert wave_residual(g, point, t, FieldForm.CROSS4) == pytest.approx(
        FieldModel(g, "cross4").evaluate(point, t).wave_residual[0]
    )


def test_field_is_tangent_to_every_ring(exchanged_rings):
    model = FieldModel(exchanged_rings.g)

    report = ring_tangency(model, exchanged_rings.system, exchanged_rings.lam)

    assert report.samples == 2 * 16 * 16
    assert report.max_angle < 1e-6
    assert report.min_speed > 0


def test_samples_follow_the_csv_header():
    model = FieldModel(_small_g(), "cross4")
    points, times = random_points(3, 1.0, seed=0)

    samples = sample_field(model, points, times)

    assert len(samples) == 3
    assert list(samples[0].to_dict()) == list(CSV_HEADER)
    assert samples[1].row()[:4] == pytest.approx([*points[1], times[1]])


def test_random_points_are_reproducible_and_bounded():
    a, ta = random_points(50, 2.0, seed=7)
    b, tb = random_points(50, 2.0, seed=7)

    assert np.array_equal(a, b) and np.array_equal(ta, tb)
    assert np.all(np.abs(a) <= 2.0)
    assert np.all((0 <= ta) & (ta < 2 * math.pi))


def test_non_spatial_variables_are_rejected():
    with pytest.raises(FieldError, match="x, y, z, et"):
        FieldModel(LaurentPoly.variable("u") * LaurentPoly.variable("x"))
    with pytest.raises(FieldError, match="3 coordinates"):
        FieldModel(LaurentPoly.variable("x")).vector([[1.0, 2.0]], 0.0)
