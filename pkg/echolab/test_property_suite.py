"""Tests for the randomized symplectic-core property suites"""
from echolab.property_suite import (
    PropertyResult,
    det_block_identity,
    det_lower_bound,
    det_strict_excess,
    det_unit_modulus,
    gamma_quadratic_bound,
    run_all,
)

SAMPLES = 60
DIMS = (1, 2, 3)
SEED = 11


def test_det_lower_bound():
    result = det_lower_bound(SAMPLES, DIMS, SEED)
    assert result.passed
    assert result.samples == SAMPLES


def test_det_unit_modulus_for_orthogonal_maps():
    assert det_unit_modulus(30, DIMS, SEED).passed


def test_det_strict_excess():
    result = det_strict_excess(SAMPLES, DIMS, SEED)
    assert result.passed
    assert result.samples > 0


def test_block_identity():
    assert det_block_identity(SAMPLES, DIMS, SEED).passed


def test_gamma_quadratic_bound():
    assert gamma_quadratic_bound(SAMPLES, DIMS, SEED).passed


def test_run_all_is_deterministic():
    first = run_all(samples=30, seed=SEED, orthogonal_samples=10)
    second = run_all(samples=30, seed=SEED, orthogonal_samples=10)
    assert [r.name for r in first] == [r.name for r in second]
    assert [r.max_violation for r in first] == [r.max_violation for r in second]
    assert all(r.passed for r in first)


def test_result_pass_rule():
    assert PropertyResult("x", 1, 1e-11, 1e-10, 0.0).passed
    assert not PropertyResult("x", 1, 1e-9, 1e-10, 0.0).passed
