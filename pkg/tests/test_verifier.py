import math

import numpy as np
import pytest

from config import RunConfig
from core.braid_words import parse_classical_word, parse_loop_word
from core.constructors import TorusComponent, algorithm1, algorithm2, torus_builder
from core.strand_param import classical_strand_system, loop_strand_system
from core.trig_interp import TorusTrigPoly, TrigPoly
from core.verifier import (
    CHECK_NAMES,
    CheckStatus,
    LambdaSelection,
    VerificationError,
    fibration_check,
    inverse_stereographic,
    reextract_braid,
    s4_slice,
    slice_zeroes,
    select_lambda,
    surface_residual,
    verify,
)

CLASSICAL = "s1^-1 s2 s1^-1 s2 s1^-1"
LOOP = "r1^-1 r2 s1 r2 r1^-1"


@pytest.fixture(scope="module")
def exchanged_rings():
    return algorithm1(parse_loop_word("r1 r1", 2), lam=1.0)


def test_loop_example_reextracts_every_interval():
    system = loop_strand_system(parse_loop_word(LOOP, 3))

    evidence = reextract_braid(system)

    assert evidence.passed
    assert [i.found["kind"] for i in evidence.intervals] == ["rho", "rho", "sigma", "rho", "rho"]
    assert evidence.intervals[2].found == {"transposition": [1, 2], "kind": "sigma", "sign": 1}
    assert [i.found["sign"] for i in evidence.intervals] == [-1, 1, 1, 1, -1]


def test_classical_example_reextracts_its_signs():
    system = classical_strand_system(parse_classical_word(CLASSICAL, 3))

    evidence = reextract_braid(system)

    assert evidence.passed
    assert evidence.spurious == sum(1 for e in system.events if not e.is_target)
    assert [i.expected["sign"] for i in evidence.intervals] == [-1, 1, -1, 1, -1]


def test_single_exchange_keeps_its_drawn_sign():
    word = parse_loop_word("r1^-1", 2)

    evidence = reextract_braid(loop_strand_system(word))

    assert evidence.passed
    assert evidence.intervals[0].found == {"transposition": [1, 2], "kind": "rho", "sign": -1}


def test_reextraction_reports_a_different_word():
    system = loop_strand_system(parse_loop_word("r1 r1", 2))

    evidence = reextract_braid(system, parse_loop_word("r1 r1^-1", 2))

    assert not evidence.passed
    assert evidence.intervals[0].matches
    assert not evidence.intervals[1].matches


@pytest.mark.slow
def test_random_corpus_reextracts_completely(loop_corpus):
    agreed = 0
    for word in loop_corpus:
        agreed += reextract_braid(loop_strand_system(word)).passed
    assert agreed == len(loop_corpus)


def test_fibration_rate_is_strand_count_times_twist():
    unknot = algorithm2(parse_classical_word("s1", 2), 1)
    whitehead = algorithm2(parse_classical_word(CLASSICAL, 3), 1)

    first = fibration_check(unknot, samples=100)
    second = fibration_check(whitehead, samples=100)

    assert first.expected == 2.0
    assert first.max_relative_error < 1e-6
    assert np.allclose(first.values, 2.0, rtol=1e-6)
    assert second.expected == 3.0
    assert second.max_relative_error < 1e-6
    assert len(first.values) == 100
    assert len(second.values) == 100 * 2


def test_fibration_needs_a_spinning_construction(exchanged_rings):
    with pytest.raises(VerificationError, match="spinning"):
        fibration_check(exchanged_rings)


def test_untwisted_spin_skips_the_fibration_check():
    result = algorithm2(parse_classical_word("s1", 2), 0)

    report = verify(result, checks=["fibration", "surface"])

    assert report.check("fibration").status == CheckStatus.SKIPPED
    assert "n = 0" in report.check("fibration").message
    assert report.check("surface").status == CheckStatus.PASS
    assert report.passed


def test_torus_surface_passes_and_other_checks_do_not_apply():
    comp = TorusComponent(
        F=TorusTrigPoly.from_trig(TrigPoly(0.0, (1.0,))),
        G=TorusTrigPoly.from_trig(TrigPoly(0.0, (), (1.0,)), 2, "s"),
        phi_strands=1,
    )
    result = torus_builder([comp])

    report = verify(result)

    assert surface_residual(result) < 1e-10
    assert report.check("surface").status == CheckStatus.PASS
    assert report.check("lambda").status == CheckStatus.SKIPPED
    assert [c.name for c in report.checks] == list(CHECK_NAMES)
    assert report.to_dict()["status"] == "PASS"


def test_lambda_selection_scales_linearly():
    selection = LambdaSelection(lam=0.2, delta=0.3, m_one=2.5, target=math.sqrt(0.3 * 1.7), tracker="rings")

    assert selection.m(0.2) == pytest.approx(0.5)
    assert selection.m(1.0) == 2.5
    assert selection.to_dict()["M1"] == 2.5


def test_selected_lambda_contains_the_slice(exchanged_rings):
    config = RunConfig(continuation_step=0.05)

    selection = select_lambda(exchanged_rings, config)

    assert config.delta_floor <= selection.delta <= config.delta_max
    assert 0 < selection.lam <= config.lambda_max
    assert selection.m(selection.lam) < selection.target
    assert selection.tracker == "rings"


def test_verify_runs_requested_checks_only(exchanged_rings):
    config = RunConfig(continuation_step=0.05)
    result = algorithm1(parse_loop_word("r1 r1", 2), lam="auto", config=config, system=exchanged_rings.system)

    report = verify(result, config, checks=["lambda", "reextract"])

    assert result.lambda_evidence is not None
    assert report.delta == pytest.approx(result.lambda_evidence["delta"])
    assert report.check("lambda").status == CheckStatus.PASS
    assert report.check("reextract").status == CheckStatus.PASS
    assert report.check("slices").status == CheckStatus.SKIPPED
    assert report.check("slices").message == "not requested"
    assert report.passed


def test_unknown_checks_are_rejected(exchanged_rings):
    with pytest.raises(VerificationError, match="unknown checks"):
        verify(exchanged_rings, checks=["lambda", "sparkle"])


def test_s4_slice_reaches_the_sphere(exchanged_rings):
    config = RunConfig(ring_angles=16, continuation_step=0.05)
    result = exchanged_rings.at_lambda(0.3)

    sphere = s4_slice(result, [0.0, math.pi / 2], config)

    assert sphere.found.all()
    norms = np.linalg.norm(sphere.points, axis=1)
    assert np.allclose(norms ** 2 + sphere.radii ** 2, 1.0, atol=1e-3)


def test_inverse_stereographic_recovers_the_point():
    x = np.array([[0.3, -1.2, 0.5], [0.0, 0.0, 0.0], [2.0, 1.0, -3.0]])
    d = 1.0 + np.sum(x * x, axis=1)
    u = (2 * x[:, 2] + 1j * (np.sum(x * x, axis=1) - 1.0)) / d
    v = 2 * (x[:, 0] + 1j * x[:, 1]) / d

    assert np.allclose(np.abs(u) ** 2 + np.abs(v) ** 2, 1.0)
    assert np.allclose(inverse_stereographic(u, v), x)


def test_slice_zeroes_follow_the_rings_inwards(exchanged_rings):
    config = RunConfig(continuation_step=0.05)

    zeros = slice_zeroes(exchanged_rings.at_lambda(0.3), [0.9, 1.0], config)

    assert [z.r for z in zeros] == [1.0, 0.9]
    assert zeros[0].points.shape == zeros[1].points.shape
    assert all(z.stats.converged for z in zeros)
    assert zeros[1].to_dict()["count"] == len(zeros[1].points)
