#!/usr/bin/env python3
"""
Tests for the fundamental solution evaluators against closed forms and each other
"""
import cmath
import logging
import math
import os

from errors import InputError, NumericalError
from oscillatory import (
    Method,
    MollifierSchedule,
    fundamental_solution,
    mollified_integral,
    partition_guided_eval,
    partition_piece,
    sector_pieces,
    split_I1_I2,
)
from quadrature import EvaluationBudget
from spectral import classify_symbol
from symbols import PolynomialSymbol, load_symbol

logging.basicConfig(level=logging.WARNING)

SYMBOLS = os.path.join(os.path.dirname(os.path.abspath(__file__)), "symbol_files")
FREE = load_symbol(os.path.join(SYMBOLS, "free.sym"))
QUARTIC = load_symbol(os.path.join(SYMBOLS, "quartic.sym"))
RADIAL = load_symbol(os.path.join(SYMBOLS, "radial_quartic.sym"))

# ∫ exp(i ξ⁴) dξ over the real line
QUARTIC_AT_ONE = 2.0 * math.gamma(1.25) * cmath.exp(1j * math.pi / 8.0)


def _close(a, b, rel):
    return abs(a - b) <= rel * abs(b)


def test_mollified_free_closed_form():
    for x in (0.0, 3.0):
        eps = 0.01
        a = complex(eps, -1.0)
        exact = cmath.sqrt(math.pi / a) * cmath.exp(-x * x / (4.0 * a))
        value = mollified_integral(FREE, 1.0, [x], eps, 1e-9)
        assert abs(value - exact) < 1e-7


def test_free_magnitude():
    for t in (0.3, 1.0, 3.0):
        for x in (0.0, 1.0, 5.0):
            result = fundamental_solution(FREE, t, [x])
            assert result.converged
            assert _close(result.magnitude, math.sqrt(math.pi / t), 1e-4)


def test_quartic_oracle_and_scaling():
    result = fundamental_solution(QUARTIC, 1.0, [0.0])
    assert _close(result.value, QUARTIC_AT_ONE, 1e-4)
    assert abs(result.magnitude - 1.8128) < 1e-3
    for t in (0.01, 100.0):
        scaled = fundamental_solution(QUARTIC, t, [0.0])
        assert _close(scaled.magnitude, t ** -0.25 * abs(QUARTIC_AT_ONE), 1e-2)


def test_radial_quartic_in_two_dimensions():
    for t in (0.5, 2.0):
        result = fundamental_solution(RADIAL, t, [0.0, 0.0])
        assert result.diagnostics["rays"][0] == 1
        assert _close(result.magnitude, math.pi ** 1.5 / (2.0 * math.sqrt(t)), 1e-4)


def test_radial_quartic_in_three_dimensions():
    terms = {(4, 0, 0): 1.0, (0, 4, 0): 1.0, (0, 0, 4): 1.0, (2, 2, 0): 2.0, (2, 0, 2): 2.0, (0, 2, 2): 2.0}
    radial = PolynomialSymbol.from_terms(3, terms, "radial3")
    exact = math.pi * math.gamma(0.75) * cmath.exp(3j * math.pi / 8.0)
    result = fundamental_solution(radial, 1.0, [0.0, 0.0, 0.0])
    assert _close(result.value, exact, 1e-4)

    box = PolynomialSymbol.from_terms(3, {(4, 0, 0): 1.0, (0, 4, 0): 1.0, (0, 0, 4): 1.0}, "box")
    try:
        fundamental_solution(box, 1.0, [0.0, 0.0, 0.0])
    except InputError:
        return
    raise AssertionError("a non-radial symbol in three dimensions must be rejected")


def test_conjugation_and_parity():
    forward = fundamental_solution(QUARTIC, 1.0, [0.7]).value
    backward = fundamental_solution(QUARTIC, -1.0, [-0.7]).value
    mirrored = fundamental_solution(QUARTIC, 1.0, [-0.7]).value
    assert abs(forward - backward.conjugate()) < 1e-6
    assert abs(forward - mirrored) < 1e-6


def test_scaling_with_position():
    # I(t, x) = t^{-1/4} I(1, x t^{-1/4}) for ξ⁴
    large = fundamental_solution(QUARTIC, 16.0, [2.0]).value
    unit = fundamental_solution(QUARTIC, 1.0, [1.0]).value
    assert abs(large - 0.5 * unit) < 1e-6


def test_split_is_additive():
    i1, i2 = split_I1_I2(QUARTIC, 100.0, [0.0], 1.0, 1e-6)
    whole = fundamental_solution(QUARTIC, 100.0, [0.0], tol=1e-6)
    assert i1.diagnostics["piece"] == "I1" and i2.diagnostics["piece"] == "I2"
    assert i1.method == Method.MOLLIFIED and i2.method == Method.QUADRATURE
    assert i2.to_document()["method"] == "quadrature"
    assert abs(i1.value + i2.value - whole.value) < 1e-5
    assert abs(i1.value) < 0.2
    assert abs(whole.magnitude - 0.5733) < 1e-3

    _, free_inner = split_I1_I2(FREE, 1.0, [0.0], 1.0, 1e-6)
    assert free_inner.magnitude <= 2.0


def test_partition_matches_mollified():
    for symbol in (FREE, QUARTIC):
        _, report = classify_symbol(symbol, sphere_samples=200, same_sign_samples=500)
        mollified = fundamental_solution(symbol, 1.0, [-2.0], tol=1e-6)
        guided = partition_guided_eval(symbol, 1.0, [-2.0], report, 1e-6)
        assert guided.converged
        assert set(guided.diagnostics["pieces"]) == {"I2", "I11", "I12", "I13"}
        bound = 2.0 * (mollified.abs_error_estimate + guided.abs_error_estimate) + 1e-6
        assert abs(mollified.value - guided.value) <= bound


def test_partition_conjugation():
    _, report = classify_symbol(QUARTIC, sphere_samples=200, same_sign_samples=500)
    forward = partition_guided_eval(QUARTIC, 1.0, [0.7], report, 1e-6)
    backward = partition_guided_eval(QUARTIC, -1.0, [-0.7], report, 1e-6)
    assert forward.method == Method.PARTITION_GUIDED
    bound = 2.0 * (forward.abs_error_estimate + backward.abs_error_estimate) + 1e-6
    assert abs(forward.value - backward.value.conjugate()) <= bound


def test_partition_matches_mollified_in_two_dimensions():
    _, report = classify_symbol(RADIAL, sphere_samples=200, same_sign_samples=500)
    for x in ([-2.0, 0.0], [-1.0, 0.5]):
        mollified = fundamental_solution(RADIAL, 1.0, x, tol=1e-5)
        guided = partition_guided_eval(RADIAL, 1.0, x, report, 1e-5)
        assert guided.converged
        bound = 2.0 * (mollified.abs_error_estimate + guided.abs_error_estimate) + 1e-5
        assert abs(mollified.value - guided.value) <= bound


def test_partition_small_time_quartic():
    _, report = classify_symbol(QUARTIC, sphere_samples=200, same_sign_samples=500)
    guided = partition_guided_eval(QUARTIC, 0.01, [0.0], report, 1e-5)
    assert _close(guided.magnitude, 0.01 ** -0.25 * abs(QUARTIC_AT_ONE), 1e-2)
    assert guided.diagnostics["pieces"]["I12"]["re"] == 0.0


def test_sectors_sum_to_stationary_piece():
    _, report = classify_symbol(QUARTIC, sphere_samples=200, same_sign_samples=500)
    sectors = sector_pieces(QUARTIC, 1.0, [-4.0], report, 1e-6)
    assert [centre for centre, _, _ in sectors] == [(1.0,), (-1.0,)]
    whole = partition_piece(QUARTIC, 1.0, [-4.0], report, "I12", 1e-6)
    total = sum(value for _, value, _ in sectors)
    assert abs(total - whole.value) <= 2e-6 + sum(error for _, _, error in sectors)
    assert sector_pieces(QUARTIC, 1.0, [0.0], report, 1e-6) == []


def test_schedule_validation():
    for kwargs in ({"eps0": 0.0}, {"ratio": 1.0}, {"depth": 2}, {"richardson_order": 6}):
        try:
            MollifierSchedule(**kwargs)
        except InputError:
            continue
        raise AssertionError(f"{kwargs} should be rejected")
    levels = MollifierSchedule().levels(2.0)
    assert len(levels) == 6 and abs(levels[0] - 0.005) < 1e-15


def test_invalid_evaluations():
    try:
        fundamental_solution(QUARTIC, 0.0, [0.0])
    except InputError:
        pass
    else:
        raise AssertionError("t = 0 must be rejected")

    try:
        mollified_integral(QUARTIC, 1.0, [0.0], 1e-4, 1e-12, budget=EvaluationBudget(50))
    except NumericalError as e:
        assert e.exit_code == 5
    else:
        raise AssertionError("an exhausted budget must surface as a numerical error")


def main():
    print("=" * 60)
    print("  Testing schrodecay evaluators")
    print("=" * 60)
    tests = [
        test_mollified_free_closed_form,
        test_free_magnitude,
        test_quartic_oracle_and_scaling,
        test_radial_quartic_in_two_dimensions,
        test_radial_quartic_in_three_dimensions,
        test_conjugation_and_parity,
        test_scaling_with_position,
        test_split_is_additive,
        test_partition_matches_mollified,
        test_partition_conjugation,
        test_partition_matches_mollified_in_two_dimensions,
        test_partition_small_time_quartic,
        test_sectors_sum_to_stationary_piece,
        test_schedule_validation,
        test_invalid_evaluations,
    ]
    for test in tests:
        print(f"\n🔍 {test.__name__}...")
        test()
        print("   ✅ passed")
    print("\n" + "=" * 60)
    print("✅ Evaluator tests completed successfully!")
    print("=" * 60)


if __name__ == "__main__":
    main()
