#!/usr/bin/env python3
"""
Tests for the oscillatory ray quadrature
"""
import cmath
import logging
import math

import numpy as np
from numpy.polynomial import Polynomial
from scipy.special import fresnel

from errors import InputError
from quadrature import EvaluationBudget, filon_moments, integrate_ray, legendre_rule

logging.basicConfig(level=logging.WARNING)


def _ones(rho: np.ndarray) -> np.ndarray:
    return np.ones_like(rho)


def test_legendre_projector_is_exact_for_polynomials():
    nodes, weights, projector = legendre_rule(12)
    coefficients = projector @ (3.0 * nodes ** 5 - nodes ** 2 + 2.0)
    assert abs(2.0 * coefficients[0] - (-2.0 / 3.0 + 4.0)) < 1e-13
    assert abs(np.sum(weights) - 2.0) < 1e-14
    assert np.all(np.abs(coefficients[6:]) < 1e-13)


def test_filon_moments_match_gauss():
    nodes, weights = np.polynomial.legendre.leggauss(200)
    for omega in (7.0, -3.5, 0.2):
        moments = filon_moments(8, omega)
        for k in range(8):
            basis = np.polynomial.legendre.Legendre.basis(k)(nodes)
            reference = np.sum(weights * basis * np.exp(1j * omega * nodes))
            assert abs(moments[k] - reference) < 1e-12


def test_fresnel_integral():
    radius = 10.0
    result = integrate_ray(Polynomial([0.0, 0.0, 1.0]), _ones, 0.0, radius, 1e-10, EvaluationBudget())
    s, c = fresnel(radius * math.sqrt(2.0 / math.pi))
    exact = math.sqrt(math.pi / 2.0) * complex(c, s)
    assert result.converged
    assert abs(result.value - exact) < 1e-8


def test_damped_linear_phase():
    result = integrate_ray(Polynomial([0.0, 1.0]), lambda r: np.exp(-r), 0.0, 10.0, 1e-11, EvaluationBudget())
    exact = (1.0 - cmath.exp(complex(-1.0, 1.0) * 10.0)) / complex(1.0, -1.0)
    assert abs(result.value - exact) < 1e-9


def test_many_oscillations_cost_stays_bounded():
    budget = EvaluationBudget()
    result = integrate_ray(Polynomial([0.0, 0.0, 0.0, 0.0, 1.0]), lambda r: np.exp(-1e-4 * r * r), 0.0, 600.0, 1e-9, budget)
    assert result.converged
    assert budget.used < 200_000


def test_non_oscillatory_integrand():
    result = integrate_ray(Polynomial([0.0]), lambda r: r * r, 0.0, 1.0, 1e-12, EvaluationBudget())
    assert abs(result.value - 1.0 / 3.0) < 1e-12


def test_stationary_point_inside_interval():
    # ∫_0^2 exp(i 40 (ρ - 1)²) dρ = 2 ∫_0^1 exp(i 40 u²) du
    phase = Polynomial([40.0, -80.0, 40.0])
    result = integrate_ray(phase, _ones, 0.0, 2.0, 1e-10, EvaluationBudget())
    z = math.sqrt(80.0 / math.pi)
    s, c = fresnel(z)
    exact = 2.0 * math.sqrt(math.pi / 80.0) * complex(c, s)
    assert abs(result.value - exact) < 1e-8


def test_budget_exhaustion_is_reported():
    budget = EvaluationBudget(200)
    result = integrate_ray(Polynomial([0.0, 0.0, 50.0]), lambda r: np.sin(7 * r) ** 2, 0.0, 30.0, 1e-14, budget)
    assert not result.converged


def test_invalid_arguments():
    for args in ((1.0, 0.0, 1e-8), (0.0, 1.0, 0.0)):
        try:
            integrate_ray(Polynomial([0.0, 1.0]), _ones, args[0], args[1], args[2], EvaluationBudget())
        except InputError:
            continue
        raise AssertionError(f"{args} should be rejected")
    try:
        EvaluationBudget(0)
    except InputError:
        return
    raise AssertionError("an empty budget should be rejected")


def main():
    print("=" * 60)
    print("  Testing schrodecay ray quadrature")
    print("=" * 60)
    tests = [
        test_legendre_projector_is_exact_for_polynomials,
        test_filon_moments_match_gauss,
        test_fresnel_integral,
        test_damped_linear_phase,
        test_many_oscillations_cost_stays_bounded,
        test_non_oscillatory_integrand,
        test_stationary_point_inside_interval,
        test_budget_exhaustion_is_reported,
        test_invalid_arguments,
    ]
    for test in tests:
        print(f"\n🔍 {test.__name__}...")
        test()
        print("   ✅ passed")
    print("\n" + "=" * 60)
    print("✅ Quadrature tests completed successfully!")
    print("=" * 60)


if __name__ == "__main__":
    main()
