#!/usr/bin/env python3
"""
Tests for the spectral classification: eigenvalues, b, L, sign coherence, exponents
"""
import logging
import os

import numpy as np

from errors import ClassificationError, InputError
from spectral import (
    SpectralReport,
    classify_symbol,
    eigenvalues_batch,
    estimate_b,
    exponent_table,
    find_L,
    hessian_eigenvalues,
    rho_b,
    same_sign_check,
    sigma,
)
from symbols import PolynomialSymbol, load_symbol

logging.basicConfig(level=logging.WARNING)

SYMBOLS = os.path.join(os.path.dirname(os.path.abspath(__file__)), "symbol_files")


def _symbol(name: str) -> PolynomialSymbol:
    return load_symbol(os.path.join(SYMBOLS, f"{name}.sym"))


def test_eigenvalues_match_reference():
    rng = np.random.default_rng(11)
    for n in (2, 3):
        a = rng.normal(size=(40, n, n))
        matrices = a + np.transpose(a, (0, 2, 1))
        ours = eigenvalues_batch(matrices)
        reference = np.linalg.eigvalsh(matrices)
        scale = np.linalg.norm(matrices, axis=(1, 2))[:, None]
        assert np.all(np.abs(ours - reference) <= 1e-10 * scale)


def test_saddle_hessian_is_mixed():
    values = hessian_eigenvalues(_symbol("saddle"), [1.0, 1.0])
    assert np.allclose(values, [-4.0, 60.0])


def test_estimate_b():
    assert abs(estimate_b(_symbol("quartic")).b_hat - 1.0) < 1e-9
    assert abs(estimate_b(_symbol("radial_quartic")).b_hat - 1.0) < 0.05
    assert abs(estimate_b(_symbol("quartic_perturbed")).b_hat - 1.0) < 0.05
    free = estimate_b(_symbol("free"))
    assert free.b_hat == 1.0 and free.flag

    degenerate = estimate_b(_symbol("degenerate"))
    assert degenerate.witness is not None
    assert degenerate.b_hat == 0.0


def test_estimate_b_is_invariant_under_positive_scaling():
    for name in ("quartic", "quartic_perturbed", "radial_quartic", "degenerate", "free"):
        P = _symbol(name)
        first = estimate_b(P)
        for factor in (0.25, 8.0):
            second = estimate_b(P.scaled(factor))
            assert abs(second.b_hat - first.b_hat) < 1e-9, name
            assert second.flag == first.flag
            assert (second.witness is None) == (first.witness is None)


def test_find_L_constants():
    threshold = find_L(_symbol("quartic"), 1.0)
    assert threshold.L == 1.0
    assert abs(threshold.c_lambda - 12.0) < 1e-9
    assert abs(threshold.c_grad - 4.0) < 1e-9

    radial = find_L(_symbol("radial_quartic"), 1.0)
    assert radial.L == 1.0
    assert abs(radial.c_lambda - 4.0) < 1e-9


def test_find_L_fails_for_degenerate_symbol():
    try:
        find_L(_symbol("degenerate"), 0.0)
    except ClassificationError as e:
        assert e.exit_code == 3
        assert "direction" in e.witness
    else:
        raise AssertionError("a Hessian vanishing along an axis has no L")


def test_same_sign():
    result = same_sign_check(_symbol("radial_quartic"), 1.0, 2000, seed=5)
    assert result.same_sign and result.sign == 1

    harmonic = PolynomialSymbol.from_terms(2, {(4, 0): 1.0, (2, 2): -6.0, (0, 4): 1.0}, "harmonic")
    result = same_sign_check(harmonic, 1.0, 500, seed=5)
    assert not result.same_sign
    assert result.witness["kind"] == "mixed_at_point"


def test_same_sign_across_points_in_one_dimension():
    concave = PolynomialSymbol.from_terms(1, {(4,): -1.0}, "concave")
    assert same_sign_check(concave, 1.0, 100).sign == -1

    odd = PolynomialSymbol.from_terms(1, {(3,): 1.0, (2,): 1.0}, "odd")
    result = same_sign_check(odd, 1.0, 200)
    assert not result.same_sign
    assert result.witness["kind"] == "inconsistent_across_points"


def test_classify_symbol():
    certificate, report = classify_symbol(_symbol("quartic"), sphere_samples=200)
    assert certificate.is_elliptic
    assert report.same_sign and report.L == 1.0
    assert SpectralReport.from_document(report.to_document()) == report


def test_classify_saddle_fails_with_witness():
    try:
        classify_symbol(_symbol("saddle"))
    except ClassificationError as e:
        assert e.witness["kind"] == "mixed_at_point"
        assert e.details["certificate"]["is_elliptic"]
        assert e.details["report"]["same_sign"] is False
    else:
        raise AssertionError("mixed Hessian signs must fail classification")


def test_classify_rejects_non_elliptic():
    flat = PolynomialSymbol.from_terms(2, {(4, 0): 1.0, (0, 2): 1.0}, "flat")
    try:
        classify_symbol(flat)
    except InputError as e:
        assert e.exit_code == 2
        assert not e.details["certificate"]["is_elliptic"]
    else:
        raise AssertionError("non-elliptic symbols must be rejected")


def test_exponent_formulas():
    for n in (1, 2, 3):
        for m in range(2, 11):
            assert abs(sigma(n, m, 1.0) - n / m) < 1e-15
            assert abs(sigma(n, m, 0.5) - n / 2.0) < 1e-15
            for b in np.arange(0.5, 1.0001, 0.05):
                rho = rho_b(n, m, float(b))
                if m == 2:
                    assert abs(rho + n / 2.0) < 1e-12
                else:
                    assert rho > -n / 2.0


def test_exponent_table():
    record = exponent_table(1, 4, 1.0)
    assert record.sigma == 0.25 and record.rho_b == -0.25
    assert record.rho_b_at_least_new and not record.equality
    assert exponent_table(2, 2, 0.7).equality
    assert exponent_table(1, 4, 0.5).rho_b == 0.0


def main():
    print("=" * 60)
    print("  Testing schrodecay spectral classification")
    print("=" * 60)
    tests = [
        test_eigenvalues_match_reference,
        test_saddle_hessian_is_mixed,
        test_estimate_b,
        test_estimate_b_is_invariant_under_positive_scaling,
        test_find_L_constants,
        test_find_L_fails_for_degenerate_symbol,
        test_same_sign,
        test_same_sign_across_points_in_one_dimension,
        test_classify_symbol,
        test_classify_saddle_fails_with_witness,
        test_classify_rejects_non_elliptic,
        test_exponent_formulas,
        test_exponent_table,
    ]
    for test in tests:
        print(f"\n🔍 {test.__name__}...")
        test()
        print("   ✅ passed")
    print("\n" + "=" * 60)
    print("✅ Spectral tests completed successfully!")
    print("=" * 60)


if __name__ == "__main__":
    main()
