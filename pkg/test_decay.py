#!/usr/bin/env python3
"""
Tests for decay verification: slope fits, sup over x, verdicts and the comparison table
"""
import logging
import math
import os

import numpy as np

from config import RunConfig
from decay import (
    DecayScan,
    ScanRecord,
    comparison_table,
    edge_slope,
    fit_slope,
    local_slopes,
    make_evaluator,
    run_scan,
    seed_points,
    sup_over_x,
    t_grid,
    verify_piece_bounds,
    verify_theorem1,
    verify_theorem2,
)
from errors import InputError
from oscillatory import EvalResult, Method, fundamental_solution
from spectral import classify_symbol
from symbols import PolynomialSymbol, load_symbol

logging.basicConfig(level=logging.WARNING)

SYMBOLS = os.path.join(os.path.dirname(os.path.abspath(__file__)), "symbol_files")
FREE_PATH = os.path.join(SYMBOLS, "free.sym")
FREE = load_symbol(FREE_PATH)
QUARTIC_PATH = os.path.join(SYMBOLS, "quartic.sym")
QUARTIC = load_symbol(QUARTIC_PATH)

GRID = [1e-3, 1e-2, 1e-1, 0.5, 1.0, 3.0, 10.0, 30.0, 100.0]


def _scan(target, amplitude, n=1, m=2, grid=GRID, b=1.0):
    records = tuple(
        ScanRecord(t, (0.0,) * n, float(amplitude(t)), 1e-9, 10, 0, True) for t in grid
    )
    return DecayScan("synthetic", n, m, target, b, 1.0, records)


def _free_report():
    _, report = classify_symbol(FREE, sphere_samples=200, same_sign_samples=500)
    return report


def test_fit_slope_is_exact_on_power_laws():
    t = np.geomspace(1e-3, 1e2, 9)
    slope, intercept = fit_slope(t, 3.0 * t ** -0.7)
    assert abs(slope + 0.7) < 1e-10
    assert abs(intercept - math.log10(3.0)) < 1e-10
    assert np.allclose(local_slopes(t, 3.0 * t ** -0.7), -0.7, atol=1e-10)
    assert abs(edge_slope(t, t ** -0.25, "low") + 0.25) < 1e-10

    try:
        fit_slope([1.0, 2.0], [1.0, 0.0])
    except InputError:
        return
    raise AssertionError("a zero amplitude has no logarithm")


def test_theorem2_verdicts():
    passing = verify_theorem2(_scan("I", lambda t: math.sqrt(math.pi / t)))
    assert passing.passed
    assert passing.to_document()["verdict"] == "PASS"
    assert abs(passing.checks["small_t"]["edge_slope"] + 0.5) < 1e-10

    too_fast = verify_theorem2(_scan("I", lambda t: 1.0 / t))
    assert not too_fast.passed and not too_fast.checks["small_t"]["passed"]

    growing = verify_theorem2(_scan("I", lambda t: t ** -0.5 if t < 1 else t ** 0.5))
    assert not growing.passed
    assert growing.checks["small_t"]["passed"] and not growing.checks["large_t"]["passed"]


def test_theorem1_verdicts():
    passing = verify_theorem1(_scan("I1", lambda t: t ** -0.5))
    assert passing.passed
    assert abs(passing.checks["large_t"]["normalized_edge_slope"]) < 1e-10

    slow = verify_theorem1(_scan("I1", lambda t: t ** -0.5 if t < 1 else t ** -0.25))
    assert not slow.passed and not slow.checks["large_t"]["passed"]

    try:
        verify_theorem1(_scan("I", lambda t: t ** -0.5))
    except InputError:
        return
    raise AssertionError("the first theorem is checked on I1 scans only")


def test_verdicts_are_scale_invariant():
    scan = _scan("I", lambda t: t ** -0.5)
    scaled = scan.with_amplitudes([1000.0 * r.amplitude for r in scan.records])
    first, second = verify_theorem2(scan), verify_theorem2(scaled)
    assert first.passed == second.passed
    assert abs(first.checks["small_t"]["edge_slope"] - second.checks["small_t"]["edge_slope"]) < 1e-10
    assert abs(second.constants["C_small"] - 1000.0 * first.constants["C_small"]) < 1e-6
    assert abs(scaled.fitted["slope_small_t"] - scan.fitted["slope_small_t"]) < 1e-10


def test_piece_bounds():
    small = [1e-3, 1e-2, 1e-1, 0.5]
    scans = {
        "I11": _scan("I11", lambda t: 0.0, m=4, grid=small),
        "I13": _scan("I13", lambda t: t ** -0.25, m=4, grid=small),
    }
    verdict = verify_piece_bounds(scans)
    assert verdict.passed
    assert "note" in verdict.checks["I11"]
    assert verdict.constants["I11_C_small"] == 0.0

    scans["I13"] = _scan("I13", lambda t: t ** -1.0, m=4, grid=small)
    assert not verify_piece_bounds(scans).passed


def test_scan_document_and_table():
    scan = _scan("I", lambda t: t ** -0.5)
    assert DecayScan.from_document(scan.to_document()) == scan
    header, rows = scan.table()
    assert header[0] == "t" and header[1] == "x_star_1"
    assert len(rows) == len(GRID)
    assert abs(rows[0][4] - 1.0) < 1e-12

    try:
        _scan("I", lambda t: 1.0, grid=[1.0, 0.5, 2.0])
    except InputError:
        return
    raise AssertionError("a scan grid must increase")


def test_comparison_table():
    rows = comparison_table(1, 4, 1.0)
    small, large, assertion = rows
    assert small["this_work"] == -0.25 and small["cui"] == -0.25
    assert large["this_work"] == -0.5 and large["yao"] == -0.25
    assert assertion["holds"] and not assertion["equality"]
    assert comparison_table(2, 2, 1.0)[2]["equality"]

    measured = comparison_table(1, 2, 1.0, _scan("I", lambda t: t ** -0.5))
    assert abs(measured[0]["measured"] + 0.5) < 1e-10


def test_t_grid_and_seeds():
    config = RunConfig(symbol_path=FREE_PATH)
    grid = t_grid(config)
    assert len(grid) == config.small_points + config.large_points
    assert grid[0] == config.t_min and grid[config.small_points] == 1.0
    assert len(t_grid(config, large=False)) == config.small_points

    seeds = seed_points(FREE, 1.0, 1.0, 8, 8)
    assert np.array_equal(seeds[0], [0.0])
    assert len(seeds) == 17
    assert abs(np.max(np.abs(seeds)) - 20.0) < 1e-12


def test_sup_over_x_refines_the_peak():
    config = RunConfig(symbol_path=FREE_PATH, refine_iterations=30)
    report = _free_report()

    def bump_at(t, x):
        value = complex(math.exp(-(x[0] + 3.3) ** 2))
        return EvalResult(value, 1e-12, Method.MOLLIFIED, {}, True)

    sup = sup_over_x(FREE, 1.0, "I", report, config, evaluate=bump_at)
    assert sup.amplitude > 0.999
    assert abs(sup.x_star[0] + 3.3) < 0.05
    assert sup.reliable and sup.failures == 0

    def failing(t, x):
        return EvalResult(1.0 + 0j, 1.0, Method.MOLLIFIED, {}, False)

    unreliable = sup_over_x(FREE, 1.0, "I", report, config, evaluate=failing)
    assert not unreliable.reliable


def test_sup_over_x_rejects_bad_input():
    config = RunConfig(symbol_path=FREE_PATH)
    report = _free_report()
    try:
        make_evaluator(FREE, report, "I7", config)
    except InputError:
        pass
    else:
        raise AssertionError("unknown scan targets must be rejected")

    cube = PolynomialSymbol.from_terms(3, {(2, 0, 0): 1.0, (0, 2, 0): 1.0, (0, 0, 2): 1.0}, "cube")
    try:
        sup_over_x(cube, 1.0, "I", report, config)
    except InputError:
        return
    raise AssertionError("scans are limited to n <= 2")


def test_free_scan_decays_like_square_root():
    config = RunConfig(
        symbol_path=FREE_PATH,
        tol=1e-6,
        t_min=1e-2,
        t_max=100.0,
        small_points=3,
        large_points=3,
        seed_radii=2,
        refine_iterations=4,
    )
    scan = run_scan(FREE, _free_report(), config, "I")
    assert scan.reliable
    assert abs(scan.fitted["slope_small_t"] + 0.5) < 0.02
    assert abs(scan.fitted["slope_large_t"] + 0.5) < 0.02
    assert verify_theorem2(scan).passed


def test_quartic_decay_at_origin():
    t = np.geomspace(1e-2, 1.0, 4)
    amplitude = [fundamental_solution(QUARTIC, float(v), [0.0]).magnitude for v in t]
    slope, _ = fit_slope(t, amplitude)
    assert abs(slope + 0.25) < 0.01


def _reduced_config(path):
    return RunConfig(
        symbol_path=path,
        tol=1e-6,
        t_min=1e-2,
        t_max=100.0,
        small_points=3,
        large_points=4,
        seed_radii=2,
        refine_iterations=4,
    )


def test_quartic_scan_passes_theorem2():
    _, report = classify_symbol(QUARTIC, sphere_samples=200, same_sign_samples=500)
    scan = run_scan(QUARTIC, report, _reduced_config(QUARTIC_PATH), "I")
    assert len(scan.records) == 7 and scan.records[3].t == 1.0
    verdict = verify_theorem2(scan)
    assert verdict.passed, verdict.to_document()
    assert verdict.checks["small_t"]["edge_slope"] >= -0.25 - 0.1


def test_quartic_I1_scan_passes_theorem1():
    _, report = classify_symbol(QUARTIC, sphere_samples=200, same_sign_samples=500)
    scan = run_scan(QUARTIC, report, _reduced_config(QUARTIC_PATH), "I1")
    assert scan.target == "I1" and len(scan.records) == 7
    verdict = verify_theorem1(scan)
    assert verdict.passed, verdict.to_document()
    assert verdict.checks["large_t"]["normalized_edge_slope"] <= 0.1


def main():
    print("=" * 60)
    print("  Testing schrodecay decay verification")
    print("=" * 60)
    tests = [
        test_fit_slope_is_exact_on_power_laws,
        test_theorem2_verdicts,
        test_theorem1_verdicts,
        test_verdicts_are_scale_invariant,
        test_piece_bounds,
        test_scan_document_and_table,
        test_comparison_table,
        test_t_grid_and_seeds,
        test_sup_over_x_refines_the_peak,
        test_sup_over_x_rejects_bad_input,
        test_free_scan_decays_like_square_root,
        test_quartic_decay_at_origin,
        test_quartic_scan_passes_theorem2,
        test_quartic_I1_scan_passes_theorem1,
    ]
    for test in tests:
        print(f"\n🔍 {test.__name__}...")
        test()
        print("   ✅ passed")
    print("\n" + "=" * 60)
    print("✅ Decay tests completed successfully!")
    print("=" * 60)


if __name__ == "__main__":
    main()
