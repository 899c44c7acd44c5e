import math

import numpy as np
import pytest

from config import RunConfig
from core.braid_words import parse_classical_word, parse_loop_word
from core.constructors import (
    Algorithm,
    ConstructionError,
    ConstructionResult,
    TorusComponent,
    algorithm0,
    algorithm1,
    algorithm1_holomorphic,
    algorithm2,
    build,
    corollary_bound,
    degree_bound,
    ring_factor,
    satellite_bound,
    satellite_builder,
    satellite_factor,
    spinning_parametrization,
    torus_builder,
    unit_ring,
)
from core.poly_algebra import LaurentPoly, eval_batch
from core.strand_param import SystemKind
from core.trig_interp import TorusTrigPoly, TrigPoly

CLASSICAL = "s1^-1 s2 s1^-1 s2 s1^-1"
LOOP = "r1^-1 r2 s1 r2 r1^-1"


def _ring_residual(result: ConstructionResult, times: int = 256, angles: int = 64) -> float:
    """max |g| / max |coefficient| over sampled ring points at the result's lambda."""
    system = result.system
    t = np.linspace(0.0, 2 * math.pi, times, endpoint=False)
    phi = np.linspace(0.0, 2 * math.pi, angles, endpoint=False)
    tt, pp = (a.ravel() for a in np.meshgrid(t, phi, indexing="ij"))
    scale = max(1.0, result.g.max_abs_coefficient())
    worst = 0.0
    for strand in system.strands():
        pts = result.lam * system.ring_points(strand, tt, pp)
        values = {"x": pts[:, 0], "y": pts[:, 1], "z": pts[:, 2], "et": np.exp(1j * tt)}
        worst = max(worst, float(np.max(np.abs(eval_batch(result.g, values)))) / scale)
    return worst


def _f_matches_g(result: ConstructionResult, count: int = 64, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    t = rng.uniform(0.0, 2 * math.pi, count)
    values = {name: rng.normal(size=count) for name in ("x", "y", "z", "u")}
    g_values = dict(values, et=np.exp(1j * t))
    f_values = dict(values, v=np.exp(1j * t), vbar=np.exp(-1j * t))
    g = eval_batch(result.g, {k: g_values[k] for k in result.g.variables})
    f = eval_batch(result.f, {k: f_values[k] for k in result.f.variables})
    return float(np.max(np.abs(f - g)) / max(1.0, float(np.max(np.abs(g)))))


@pytest.fixture(scope="module")
def loop_result():
    return algorithm1(parse_loop_word(LOOP, 3), lam=1.0)


def test_degree_bounds_for_the_example_words():
    loop = parse_loop_word(LOOP, 3)
    classical = parse_classical_word(CLASSICAL, 3)

    report = degree_bound(loop)

    assert report.kind == "loop"
    assert report.strand_counts == [1, 2]
    assert report.terms == [8, 18]
    assert report.bound == 52
    assert degree_bound(classical).bound == 26
    assert degree_bound(classical, kind="holomorphic").bound == 104
    assert degree_bound(classical, n=3).bound == 107
    assert report.sigma_incidences == [0, 2]


def test_corollary_bound_needs_a_single_component():
    with pytest.raises(ConstructionError, match="expected one"):
        corollary_bound(parse_loop_word(LOOP, 3))

    knot = parse_loop_word("r1 r2", 3)
    assert corollary_bound(knot).bound == 2 * (((3 + 1) * (3 * 2 - 1) - 1) // 2)


def test_loop_example_is_within_its_bound_and_vanishes_on_the_rings(loop_result):
    assert loop_result.algorithm == Algorithm.LOOP
    assert loop_result.system.kind == SystemKind.LOOP
    assert loop_result.degrees.total <= 52
    assert loop_result.within_bound is True
    assert _ring_residual(loop_result) < 1e-6
    assert _f_matches_g(loop_result) < 1e-9


def test_rescaling_keeps_the_rings_in_the_zero_set(loop_result):
    scaled = loop_result.at_lambda(0.25)

    assert scaled.lam == 0.25
    assert _ring_residual(scaled, times=32, angles=16) < 1e-6
    assert scaled.degrees.total == loop_result.degrees.total


def test_holomorphic_variant_matches_after_clearing_v(loop_result):
    result = algorithm1_holomorphic(parse_loop_word(LOOP, 3), lam=1.0, system=loop_result.system)
    rng = np.random.default_rng(0)
    pts = {name: rng.normal(size=64) for name in ("x", "y", "z")}
    v = np.exp(1j * rng.uniform(0.0, 2 * math.pi, 64))

    numerator = eval_batch(result.ftilde.numerator, dict(pts, v=v))
    g = eval_batch(result.g, dict(pts, et=v))

    assert result.ftilde.numerator.min_degree_in("v") == 0
    assert np.allclose(numerator, g * v ** result.ftilde.denominator_power, rtol=1e-9, atol=1e-9)
    assert result.bounds.kind == "holomorphic"


def test_classical_example_vanishes_on_the_closed_braid():
    result = algorithm0(parse_classical_word(CLASSICAL, 3), lam=0.5)
    system = result.system
    t = np.linspace(0.0, 2 * math.pi, 128, endpoint=False)
    scale = max(1.0, result.g.max_abs_coefficient())

    assert result.g.degree_in("u") == 3
    assert result.within_bound is True
    for strand in system.strands():
        u = 0.5 * (system.x(strand, t) + 1j * system.y(strand, t))
        values = eval_batch(result.g, {"u": u, "et": np.exp(1j * t)})
        assert np.max(np.abs(values)) / scale < 1e-8


def test_spinning_construction_degrees_and_surface():
    word = parse_classical_word("s1", 2)

    result = algorithm2(word, 3)

    assert result.algorithm == Algorithm.SPINNING
    assert result.f.degree_in("u") == 2
    assert set(result.f.variables) <= {"u", "v", "w"}
    assert result.bounds.n == 3
    system = result.system
    phi = np.linspace(0.0, 2 * math.pi, 16)
    chi = np.linspace(0.0, 2 * math.pi, 16)[::-1]
    for strand in system.strands():
        u = np.exp(3j * chi) * (system.x(strand, phi) + 1j * system.y(strand, phi))
        values = eval_batch(result.g, {"u": u, "et": np.exp(1j * phi), "ec": np.exp(1j * chi)})
        assert np.max(np.abs(values)) < 1e-8


def test_spinning_parametrization_agrees_with_the_rotated_braid():
    word = parse_classical_word("s1 s1 s1", 2)
    result = algorithm2(word, -2)

    (component,) = spinning_parametrization(result.system, -2)
    phi, chi = 0.9, 2.3

    for j in (1, 2):
        expected = np.exp(-2j * chi) * (result.system.x((1, j), phi) + 1j * result.system.y((1, j), phi))
        assert component.value(phi, chi, j, 1) == pytest.approx(expected)


def test_torus_builder_vanishes_on_its_surface():
    comp = TorusComponent(
        F=TorusTrigPoly.from_trig(TrigPoly(0.0, (1.0,))),
        G=TorusTrigPoly.from_trig(TrigPoly(0.5, (), (1.0,)), 1, "c"),
    )

    result = torus_builder([comp])

    angles = np.linspace(0.0, 2 * math.pi, 12)
    phi, chi = (a.ravel() for a in np.meshgrid(angles, angles))
    u = comp.value(phi, chi, 1, 1)
    values = eval_batch(result.g, {"u": u, "et": np.exp(1j * phi), "ec": np.exp(1j * chi)})
    assert result.algorithm == Algorithm.TORUS
    assert np.max(np.abs(values)) < 1e-10
    assert result.f.degree_in("u") == 1


def test_torus_builder_rejects_colliding_strands():
    comp = TorusComponent(F=TorusTrigPoly.from_trig(TrigPoly(0.0, (1.0,))), G=TorusTrigPoly())

    with pytest.raises(ConstructionError, match="collide"):
        torus_builder([comp, comp])


def test_unit_ring_satellite_factor_shares_the_ring_zero_set():
    X, Y, Z, R = (LaurentPoly.constant(c) for c in (0.3, -0.2, 0.1, 0.7))
    plain = ring_factor(X, Y, Z, R)
    wrapped = satellite_factor(unit_ring(), 2, X, Y, Z, R)
    phi = np.linspace(0.0, 2 * math.pi, 10)
    pts = {"x": 0.3 + 0.7 * np.cos(phi), "y": -0.2 + 0.7 * np.sin(phi), "z": np.full(10, 0.1)}

    assert np.max(np.abs(eval_batch(plain, pts))) < 1e-12
    assert np.max(np.abs(eval_batch(wrapped, pts))) < 1e-12


def test_satellite_builder_records_its_parts():
    word = parse_loop_word("r1 r1", 2)
    hopf = parse_classical_word("s1 s1", 2)

    result = satellite_builder(word, {1: hopf}, lam=1.0, satellite_lambda=0.5)

    assert result.algorithm == Algorithm.SATELLITE
    assert set(result.satellite_parts) == {1}
    assert result.satellite_lambdas == {1: 0.5}
    assert result.bounds.kind == "satellite"
    assert result.bounds.satellite_degrees[2] == 2
    assert result.within_bound is True
    with pytest.raises(ConstructionError, match="no components"):
        satellite_builder(word, {3: hopf}, lam=1.0, system=result.system)


def test_satellite_bound_closed_form_uses_each_pattern_bound():
    word = parse_loop_word("r1 r1", 2)
    hopf = parse_classical_word("s1 s1", 2)

    report = satellite_bound(word, {1: hopf})

    # each component contributes max{T, s} = 1; the Hopf pattern has bound 2 * 2
    assert report.contributions == [1, 1]
    assert report.closed_form == 4 + 2
    assert report.bound == report.closed_form


def test_bundle_round_trip_keeps_the_construction(loop_result):
    again = ConstructionResult.from_bundle(loop_result.to_bundle())

    assert again.algorithm == loop_result.algorithm
    assert again.g == loop_result.g
    assert again.f == loop_result.f
    assert again.lam == loop_result.lam
    assert again.bounds.bound == 52
    assert again.word == loop_result.word
    assert again.system.epsilon == loop_result.system.epsilon


def test_bundle_without_g_restores_it_from_f(loop_result):
    bundle = loop_result.to_bundle(emit=("f",))

    again = ConstructionResult.from_bundle(bundle)

    assert "g" not in bundle
    assert again.g == loop_result.g


def test_build_dispatches_and_rejects_bad_input():
    assert build(parse_loop_word("r1", 2), "loop", lam=1.0).algorithm == Algorithm.LOOP
    # classical words are thickened for loop constructions
    assert build(parse_classical_word("s1", 2), "loop", lam=1.0).word.tokens[0].drawn_sign == 1

    with pytest.raises(ConstructionError, match="length 0"):
        build(parse_loop_word("", 2), "loop")
    with pytest.raises(ConstructionError, match="classical braid word"):
        build(parse_loop_word("r1", 2), "classical")
    with pytest.raises(ConstructionError, match="more than a braid word"):
        build(parse_classical_word("s1", 2), "torus")


def test_at_lambda_rejects_bad_values(loop_result):
    with pytest.raises(ConstructionError, match="positive"):
        loop_result.at_lambda(0.0)
    spin = algorithm2(parse_classical_word("s1", 2), 1)
    with pytest.raises(ConstructionError, match="no lambda"):
        spin.at_lambda(0.5)


@pytest.mark.slow
def test_random_corpus_vanishes_on_every_ring(loop_corpus):
    config = RunConfig(lambda_mode=1.0)

    for word in loop_corpus:
        result = algorithm1(word, lam=1.0, config=config)
        assert _ring_residual(result) < 1e-6, word.to_text()
        assert _f_matches_g(result) < 1e-9, word.to_text()
        assert result.within_bound is True, word.to_text()
