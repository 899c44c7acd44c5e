import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.poly_algebra import (
    LaurentPoly,
    PolynomialError,
    compose,
    degrees,
    eval_batch,
    eval_poly,
    partial,
    partial_harmonic,
    poly_mul,
    reduce_harmonics,
    rescale,
    restore_harmonics,
    stereographic_pullback,
    stereographic_pullback_3d,
    subst_holomorphic,
    subst_unit_circle,
)

VARS = ("x", "y", "et")

exponent = st.integers(min_value=-3, max_value=3)
terms = st.dictionaries(st.tuples(st.integers(0, 3), st.integers(0, 3), exponent), st.floats(-10, 10, allow_nan=False), max_size=8)


def _naive_product(a: LaurentPoly, b: LaurentPoly) -> dict:
    out: dict = {}
    for ea, ca in a.iter_terms():
        for eb, cb in b.iter_terms():
            key = tuple(x + y for x, y in zip(ea, eb))
            out[key] = out.get(key, 0) + ca * cb
    return out


@settings(max_examples=100, deadline=None)
@given(terms, terms)
def test_product_matches_naive_expansion(ta, tb):
    a = LaurentPoly.from_terms(VARS, ta)
    b = LaurentPoly.from_terms(VARS, tb)

    product = poly_mul(a, b)
    expected = _naive_product(a, b)
    scale = max([1.0] + [abs(c) for c in expected.values()])

    for key, coeff in expected.items():
        assert product.terms.get(key, 0) == pytest.approx(coeff, abs=1e-12 * scale)
    assert set(product.terms).issubset(expected)


def test_chunked_product_equals_single_chunk():
    x, y = LaurentPoly.variable("x"), LaurentPoly.variable("y")
    a = (x + y + 1.0) ** 6
    b = (x - 2.0 * y) ** 5

    chunked = poly_mul(a, b, chunk_terms=7, max_workers=3).terms
    single = poly_mul(a, b).terms

    assert set(chunked) == set(single)
    assert all(chunked[k] == pytest.approx(single[k]) for k in single)


def test_partials_agree_with_finite_differences():
    x, y, et = (LaurentPoly.variable(v) for v in VARS)
    f = (x * x * y - 3j * y) * et + x * LaurentPoly.variable("et", -2) + 2.0
    point = {"x": 0.4, "y": -1.3, "et": np.exp(0.9j)}
    h = 1e-6

    for name in ("x", "y"):
        up = dict(point, **{name: point[name] + h})
        down = dict(point, **{name: point[name] - h})
        numeric = (eval_poly(f, up) - eval_poly(f, down)) / (2 * h)
        assert eval_poly(partial(f, name), point) == pytest.approx(numeric, rel=1e-6)

    t = 0.9
    up = dict(point, et=np.exp(1j * (t + h)))
    down = dict(point, et=np.exp(1j * (t - h)))
    numeric = (eval_poly(f, up) - eval_poly(f, down)) / (2 * h)
    assert eval_poly(partial_harmonic(f, "et"), point) == pytest.approx(numeric, rel=1e-6)


def test_unit_circle_substitution_and_restore():
    et = LaurentPoly.variable("et")
    x = LaurentPoly.variable("x")
    g = x * et + 2.0 * LaurentPoly.variable("et", -3) + 1.0

    f = subst_unit_circle(g)

    assert set(f.variables) == {"x", "v", "vbar"}
    assert f.degree_in("vbar") == 3
    assert restore_harmonics(f) == g


def test_holomorphic_substitution_clears_the_denominator():
    g = LaurentPoly.variable("u") * LaurentPoly.variable("et", 2) + LaurentPoly.variable("et", -1)

    form = subst_holomorphic(g)

    assert form.denominator_power == 1
    assert form.numerator.min_degree_in("v") == 0
    assert form.numerator.degree_in("v") == 3


def test_harmonic_reduction_reports_dropped_terms():
    q = LaurentPoly.variable("et")
    g = q ** 4 + 1e-9 * q ** 3

    reduced, residue = reduce_harmonics(g, "et", "et", 2)

    assert reduced.degree_in("et") == 2
    assert residue == pytest.approx(1e-9)


def test_rescale_substitutes_scaled_variables():
    x = LaurentPoly.variable("x")
    f = x ** 3 + x

    scaled = rescale(f, {"x": 2.0})

    assert eval_poly(scaled, {"x": 1.5}) == pytest.approx(eval_poly(f, {"x": 3.0}))


def test_compose_and_pullback_send_the_unit_circle_to_zero():
    pulled = stereographic_pullback_3d(LaurentPoly.variable("u"))
    angles = np.linspace(0.0, 2 * np.pi, 9)

    values = eval_batch(pulled, {"x1": np.cos(angles), "x2": np.sin(angles), "x3": np.zeros(9)})

    assert np.max(np.abs(values)) < 1e-12
    shifted = compose(LaurentPoly.variable("x") ** 2, {"x": LaurentPoly.variable("y") + 1.0})
    assert eval_poly(shifted, {"y": 2.0}) == pytest.approx(9.0)


def test_four_dimensional_pullback_clears_the_denominator_per_degree():
    x, z, v = (LaurentPoly.variable(n) for n in ("x", "z", "v"))
    point = {"x1": 0.1, "x2": 0.2, "x3": 0.3, "x4": 0.4}

    # |x|^2 = 0.3 at the point
    assert eval_poly(stereographic_pullback(z), point) == pytest.approx(-0.7)
    assert eval_poly(stereographic_pullback(z + 1.0), point) == pytest.approx(0.6)
    assert eval_poly(stereographic_pullback(x * v), point) == pytest.approx(0.12 + 0.16j)
    with pytest.raises(PolynomialError, match="pullback expects"):
        stereographic_pullback(LaurentPoly.variable("u"))

def test_constants_need_no_variables():
    two = LaurentPoly.constant(2.5)

    assert two.variables == ()
    assert eval_poly(two, {}) == pytest.approx(2.5)
    assert eval_poly(poly_mul(two, LaurentPoly.constant(-2.0)), {}) == pytest.approx(-5.0)
    assert LaurentPoly.constant(0.0).is_zero
    assert np.allclose(eval_batch(two, {"x": np.zeros(3)}), 2.5)



def test_batch_evaluation_matches_pointwise():
    rng = np.random.default_rng(3)
    x, y, et = (LaurentPoly.variable(v) for v in VARS)
    f = (x + 2j * y) ** 3 * et + y * LaurentPoly.variable("et", -1) - 0.5
    pts = {"x": rng.normal(size=20), "y": rng.normal(size=20), "et": np.exp(1j * rng.uniform(0, 6, 20))}

    batch = eval_batch(f, pts, max_cells=5)

    for k in range(20):
        assert batch[k] == pytest.approx(eval_poly(f, {v: pts[v][k] for v in VARS}))


def test_missing_values_are_errors():
    with pytest.raises(PolynomialError, match="no value"):
        eval_batch(LaurentPoly.variable("x") * LaurentPoly.variable("y"), {"x": np.ones(2)})


def test_json_round_trip_is_exact():
    f = (LaurentPoly.variable("x") + 1j) ** 4 * LaurentPoly.variable("vbar", 2)

    assert LaurentPoly.from_json(f.to_json()) == f


def test_degrees_count_laurent_exponents_by_size():
    f = LaurentPoly.from_terms(("x", "v", "vbar"), {(2, 1, 0): 1.0, (0, 0, 3): 2.0})

    report = degrees(f)

    assert report.total == 3
    assert report.per_variable == {"x": 2, "v": 1, "vbar": 3}
    assert report.conjugate_pairs == {"v": 3}
