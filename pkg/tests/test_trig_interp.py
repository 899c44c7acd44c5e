import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.trig_interp import (
    DuplicateNodeError,
    HermiteNode,
    TorusTrigPoly,
    TrigPoly,
    canonical_angle,
    hermite_interpolate,
    interpolate,
    solve_interpolation,
)


def test_two_node_lagrange_gives_shifted_sine():
    poly = interpolate([(math.pi / 2, 1.0), (3 * math.pi / 2, 2.0)])

    assert poly.constant == pytest.approx(1.5)
    assert poly.coefficient("sin", 1) == pytest.approx(-0.5)
    assert poly.coefficient("cos", 1) == pytest.approx(0.0, abs=1e-12)


def test_two_node_hermite_gives_cosine():
    poly = hermite_interpolate([
        HermiteNode(angle=math.pi / 2, value=0.0, slope=-1.0),
        HermiteNode(angle=3 * math.pi / 2, value=0.0, slope=1.0),
    ])

    assert poly.constant == pytest.approx(0.0, abs=1e-12)
    assert poly.coefficient("cos", 1) == pytest.approx(1.0)
    assert poly.coefficient("sin", 1) == pytest.approx(0.0, abs=1e-12)
    assert poly.coefficient("cos", 2) == pytest.approx(0.0, abs=1e-12)
    assert poly.coefficient("sin", 2) == pytest.approx(0.0, abs=1e-12)


def test_odd_node_count_uses_full_harmonics():
    angles = [2 * math.pi * k / 5 for k in range(5)]
    poly = interpolate(list(zip(angles, [1.0, 0.0, -1.0, -1.0, 0.0])))

    assert poly.degree == 2
    assert poly.constant == pytest.approx(-0.2, abs=1e-3)
    assert poly.coefficient("cos", 1) == pytest.approx(1.047, abs=1e-3)
    assert poly.coefficient("cos", 2) == pytest.approx(0.153, abs=1e-3)


def test_even_node_count_adds_single_top_cosine():
    result = solve_interpolation([(0.0, 1.0), (1.0, 0.0), (2.0, 3.0), (4.0, -1.0)])

    assert result.node_count == 4
    assert result.poly.degree == 2
    # top harmonic is cos 2(t - t0) with t0 = 0
    assert result.poly.coefficient("sin", 2) == pytest.approx(0.0, abs=1e-12)


def test_singular_first_alignment_moves_to_the_next_node():
    # 3 t0 - (t1 + t2 + t3) is a multiple of 2 pi, so cos 2(t - t0) adds nothing new
    nodes = [(0.0, 1.0), (0.5, 0.0), (1.0, 3.0), (2 * math.pi - 1.5, -1.0)]

    result = solve_interpolation(nodes)

    assert result.t0 == pytest.approx(0.5)
    assert result.poly.degree == 2
    assert np.allclose(result.poly.evaluate([a for a, _ in nodes]), [v for _, v in nodes], atol=1e-9)


def test_worked_crossing_data_is_interpolated_exactly():
    nodes = [(0.794, -1.0), (1.857, 1.0), (4.426, -1.0), (5.490, 1.0)]
    printed = TrigPoly(0.520, (-0.721, 0.860), (-0.341, -1.243))

    result = solve_interpolation(nodes)

    assert result.t0 == pytest.approx(0.794)
    assert result.poly.degree == 2
    assert np.allclose(result.poly.evaluate([a for a, _ in nodes]), [v for _, v in nodes], atol=1e-9)
    # the published coefficients miss their own first node
    assert printed.evaluate(0.794) == pytest.approx(-1.486, abs=1e-2)


def _dense_oracle(angles, values, t0):
    n = len(angles)
    m, odd = divmod(n, 2)
    top = m if odd else m - 1

    def basis(t):
        t = np.asarray(t, dtype=float)
        cols = [np.ones_like(t)]
        for k in range(1, top + 1):
            cols += [np.cos(k * t), np.sin(k * t)]
        if not odd:
            cols.append(np.cos(m * (t - t0)))
        return np.column_stack(cols)

    solution = np.linalg.solve(basis(angles), values)
    return lambda t: basis(t) @ solution


@pytest.mark.parametrize("count", [3, 4, 7, 10])
def test_interpolation_agrees_with_a_dense_solve(count):
    rng = np.random.default_rng(count)
    angles = 2 * math.pi * (np.arange(count) + rng.uniform(-0.3, 0.3, count)) / count
    values = rng.normal(size=count)
    grid = np.linspace(0.0, 2 * math.pi, 101)

    result = solve_interpolation(list(zip(angles, values)))
    oracle = _dense_oracle(np.mod(angles, 2 * math.pi), values, result.t0)

    assert result.residual < 1e-9
    assert np.allclose(result.poly.evaluate(grid), oracle(grid), atol=1e-9)


def test_duplicate_nodes_are_rejected():
    with pytest.raises(DuplicateNodeError):
        interpolate([(0.5, 1.0), (0.5, 2.0)])
    with pytest.raises(DuplicateNodeError):
        interpolate([(0.0, 1.0), (2 * math.pi, 2.0)])


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=9), st.integers(min_value=0, max_value=10_000))
def test_interpolant_reproduces_the_nodes(count, seed):
    rng = np.random.default_rng(seed)
    # one node per sector keeps neighbours apart
    angles = (np.arange(count) + rng.uniform(0.1, 0.9, count)) * (2 * math.pi / count)
    values = rng.normal(size=count)

    result = solve_interpolation(list(zip(angles, values)))

    assert np.allclose(result.poly.evaluate(angles), values, atol=1e-8)
    assert result.poly.degree <= count // 2
    assert result.condition <= 1e12


def test_hermite_matches_values_and_slopes():
    nodes = [HermiteNode(0.3, 1.0, 0.5), HermiteNode(2.0, -0.5, 0.0), HermiteNode(4.1, 0.25, -2.0)]

    poly = hermite_interpolate(nodes)
    slope = poly.derivative()

    for node in nodes:
        assert poly.evaluate(node.angle) == pytest.approx(node.value, abs=1e-9)
        assert slope.evaluate(node.angle) == pytest.approx(node.slope, abs=1e-9)


def test_product_and_exponential_form_agree_with_pointwise_values():
    a = TrigPoly(0.5, (1.0, -0.25), (0.0, 2.0))
    b = TrigPoly(-1.0, (0.0,), (3.0,))
    grid = np.linspace(0.0, 2 * math.pi, 37)

    assert np.allclose((a * b).evaluate(grid), a.evaluate(grid) * b.evaluate(grid))
    assert np.allclose(TrigPoly.from_exponential(a.to_exponential()).evaluate(grid), a.evaluate(grid))


def test_canonical_angle_wraps_into_one_period():
    assert canonical_angle(-0.5) == pytest.approx(2 * math.pi - 0.5)
    assert canonical_angle(2 * math.pi) == 0.0
    assert canonical_angle(7.0) == pytest.approx(7.0 - 2 * math.pi)


def test_torus_polynomial_expands_to_double_exponentials():
    poly = TorusTrigPoly.from_trig(TrigPoly(0.0, (1.0,)), 2, "s")
    phi, chi = 0.7, 1.9

    terms = poly.exponential_terms()
    value = sum(c * np.exp(1j * (m * phi + n * chi)) for (m, n), c in terms.items())

    assert poly.degrees == (1, 2)
    assert value.real == pytest.approx(math.cos(phi) * math.sin(2 * chi))
    assert value.imag == pytest.approx(0.0, abs=1e-12)
