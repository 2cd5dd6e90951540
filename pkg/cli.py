"""
Command line for schrodecay

    python cli.py analyze --symbol symbol_files/quartic.sym
    python cli.py eval    --symbol symbol_files/quartic.sym --t 1 --x 0
    python cli.py regions --symbol symbol_files/radial_quartic.sym --t 0.001 --x=-4,0
    python cli.py scan    --symbol symbol_files/quartic.sym --target I
    python cli.py verify  --symbol symbol_files/quartic.sym --target I
    python cli.py report  --symbol symbol_files/quartic.sym --target I --check-journal

Exit codes: 0 ok, 1 parse error, 2 invalid input, 3 classification failure,
4 missing upstream document, 5 numerical failure.
"""
import argparse
import logging
import os
import sys
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import METHODS, TARGETS, VERSION, RunConfig, setup_logging
from decay import DecayScan, comparison_table, local_slopes, piece_scan, run_scan, verify_piece_bounds, verify_theorem1, verify_theorem2
from documents import file_digest, read_document, write_document, write_table
from errors import ClassificationError, InputError, MissingDependencyError, SchrodecayError
from journal import log_command, verify_journal
from oscillatory import fundamental_solution, partition_guided_eval
from partition import RegionContext, region_table
from quadrature import EvaluationBudget
from spectral import SpectralReport, classify_symbol, exponent_table
from symbols import PolynomialSymbol, load_symbol

logger = logging.getLogger(__name__)

ANALYSIS = "analysis.json"


# ==================== ARGUMENTS ====================

def _vector(text: str) -> Tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--symbol", required=True, help="symbol file (JSON term list)")
    common.add_argument("--out", default="results", help="output directory")
    common.add_argument("--seed", type=int, default=20240917)
    common.add_argument("--tol", type=float, default=1e-7, help="absolute tolerance of one evaluation")
    common.add_argument("--budget", type=int, default=10_000_000, help="integrand evaluations per call")
    common.add_argument("--method", choices=METHODS, default="mollified")
    common.add_argument("--log-level", default=None, help="overrides SCHRODECAY_LOG_LEVEL")

    parser = argparse.ArgumentParser(
        prog="schrodecay",
        description="Decay-estimate laboratory for higher-order Schrödinger kernels",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__,
    )
    commands = parser.add_subparsers(dest="command", required=True)

    analyze = commands.add_parser("analyze", parents=[common], help="ellipticity, b, L, sign coherence, exponents")
    analyze.add_argument("--sphere-samples", type=int, default=2000)
    analyze.add_argument("--ellipticity-tol", type=float, default=1e-8)
    analyze.add_argument("--same-sign-samples", type=int, default=4000)

    evaluate = commands.add_parser("eval", parents=[common], help="evaluate I(t, x)")
    evaluate.add_argument("--t", type=float, required=True)
    evaluate.add_argument("--x", type=_vector, default=None, help="comma-separated, e.g. --x=-1,0")

    regions = commands.add_parser("regions", parents=[common], help="region and cutoff table on a grid")
    regions.add_argument("--t", type=float, required=True)
    regions.add_argument("--x", type=_vector, default=None)
    regions.add_argument("--L", type=float, default=None, help="defaults to the analyzed L")
    regions.add_argument("--grid-size", type=int, default=41)
    regions.add_argument("--extent", type=float, default=4.0)

    for name, text in (("scan", "sup-over-x amplitude scans"), ("verify", "decay verdicts"), ("report", "plot-ready columns")):
        sub = commands.add_parser(name, parents=[common], help=text)
        sub.add_argument("--target", choices=TARGETS, default="both")
        sub.add_argument("--small-points", type=int, default=12)
        sub.add_argument("--large-points", type=int, default=8)
        sub.add_argument("--t-min", type=float, default=1e-3)
        sub.add_argument("--t-max", type=float, default=1e2)
        sub.add_argument("--seed-radii", type=int, default=8)
        sub.add_argument("--seed-angles", type=int, default=8)
        sub.add_argument("--refine-iterations", type=int, default=12)
        sub.add_argument("--slack", type=float, default=0.1)
        sub.add_argument("--pieces", action="store_true", help="also check the I11 and I13 piece bounds")
        if name == "report":
            sub.add_argument("--check-journal", action="store_true", help="re-hash every journaled document")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = {
        "symbol_path": args.symbol,
        "out_dir": args.out,
        "seed": args.seed,
        "tol": args.tol,
        "budget": args.budget,
        "method": args.method,
    }
    optional = (
        "t", "L", "grid_size", "extent", "sphere_samples", "ellipticity_tol", "same_sign_samples",
        "target", "small_points", "large_points", "t_min", "t_max", "seed_radii", "seed_angles",
        "refine_iterations", "slack", "pieces",
    )
    for name in optional:
        if getattr(args, name, None) is not None:
            values[name] = getattr(args, name)
    if getattr(args, "x", None) is not None:
        values["x"] = args.x
    return RunConfig(**values)


# ==================== SHARED STEPS ====================

def _header(command: str, config: RunConfig) -> dict:
    return {"tool": "schrodecay", "version": VERSION, "command": command, "config_hash": config.config_hash()}


def _output(config: RunConfig, name: str) -> str:
    return os.path.join(config.out_dir, name)


def _position(P: PolynomialSymbol, config: RunConfig) -> Tuple[float, ...]:
    x = config.x or (0.0,) * P.n
    if len(x) != P.n:
        raise InputError(f"--x has {len(x)} component(s), symbol dimension is {P.n}")
    return x


def _write_analysis(config: RunConfig, P: PolynomialSymbol) -> Tuple[str, SpectralReport]:
    """Classify P and write analysis.json; failures are written too, then re-raised"""
    path = _output(config, ANALYSIS)
    document = {**_header("analyze", config), "symbol_digest": file_digest(config.symbol_path), "symbol": P.to_document()}
    try:
        certificate, report = classify_symbol(
            P, config.sphere_samples, config.ellipticity_tol, config.same_sign_samples, config.seed
        )
    except (InputError, ClassificationError) as e:
        status = "classification_failed" if isinstance(e, ClassificationError) else "not_elliptic"
        write_document(path, {**document, "status": status, "error": str(e), "details": e.details})
        log_command("analyze", config, [path])
        raise
    exponents = exponent_table(P.n, P.m, report.b_hat)
    document.update(
        status="ok",
        certificate=certificate.to_document(),
        spectral=report.to_document(),
        exponents=exponents.to_document(),
    )
    write_document(path, document)
    return path, report


def _analysis(config: RunConfig, P: PolynomialSymbol, required: bool) -> Tuple[SpectralReport, List[str]]:
    """The spectral report from analysis.json, computed and written first when allowed

    An analysis.json written for another symbol file counts as missing.
    """
    path = _output(config, ANALYSIS)
    document = read_document(path) if os.path.exists(path) else None
    if document is not None and document.get("symbol_digest") != file_digest(config.symbol_path):
        if required:
            raise MissingDependencyError(path, f"analysis of another symbol than {P.name}")
        logger.info(f"🔍 {path} belongs to another symbol, analyzing {P.name} again")
        document = None
    if document is None:
        if required:
            raise MissingDependencyError(path)
        logger.info(f"🔍 {path} missing, analyzing {P.name} first")
        written, report = _write_analysis(config, P)
        return report, [written]
    if document.get("status") != "ok":
        raise ClassificationError(f"{path} records a failed analysis ({document.get('status')})", document.get("details"))
    return SpectralReport.from_document(document["spectral"]), []


def _targets(config: RunConfig) -> List[str]:
    return ["I", "I1"] if config.target == "both" else [config.target]


def _scan_header(config: RunConfig, scan: DecayScan) -> dict:
    return {
        "symbol": scan.symbol,
        "n": scan.n,
        "m": scan.m,
        "b": scan.b,
        "L": scan.L,
        "sigma": scan.sigma,
        "target": scan.target,
        "config_hash": config.config_hash(),
        "version": VERSION,
    }


def _load_scans(config: RunConfig, P: PolynomialSymbol) -> Dict[str, DecayScan]:
    scans = {}
    for target in _targets(config):
        path = _output(config, f"scan_{target}.json")
        scan = DecayScan.from_document(read_document(path))
        if scan.symbol != P.name or scan.n != P.n:
            raise MissingDependencyError(path, f"scan of {scan.symbol}, not {P.name}")
        scans[target] = scan
    return scans


# ==================== COMMANDS ====================

def cmd_analyze(config: RunConfig, P: PolynomialSymbol) -> List[str]:
    path, report = _write_analysis(config, P)
    logger.info(f"✅ {P.name}: elliptic, b_hat={report.b_hat:.4f}, L={report.L:.4g}")
    return [path]


def cmd_eval(config: RunConfig, P: PolynomialSymbol) -> List[str]:
    x = _position(P, config)
    budget = EvaluationBudget(config.budget)
    outputs: List[str] = []
    if config.method == "partition":
        report, outputs = _analysis(config, P, required=False)
        result = partition_guided_eval(P, config.t, x, report, config.tol, budget)
    else:
        result = fundamental_solution(P, config.t, x, tol=config.tol, budget=budget)
    if result.converged:
        logger.info(f"✅ I({config.t:g}, {x}) = {result.value:.10g}, |I| = {result.magnitude:.10g} ± {result.abs_error_estimate:.2g}")
    else:
        logger.warning(f"⚠️ I({config.t:g}, {x}) did not converge: error estimate {result.abs_error_estimate:.3g}")
    path = _output(config, "eval.json")
    write_document(path, {**_header("eval", config), "t": config.t, "x": list(x), "result": result.to_document()})
    return outputs + [path]


def cmd_regions(config: RunConfig, P: PolynomialSymbol) -> List[str]:
    x = _position(P, config)
    outputs: List[str] = []
    L = config.L
    if L is None:
        report, outputs = _analysis(config, P, required=False)
        L = report.L
    ctx = RegionContext.create(P, config.t, x, L)
    rows = region_table(ctx, P, config.extent, config.grid_size)
    header = {
        "symbol": P.name, "n": P.n, "m": P.m, "t": config.t, "x": ",".join(str(v) for v in x), "L": L,
        "r": ctx.r, "low_freq_radius": ctx.low_freq_radius, "config_hash": config.config_hash(), "version": VERSION,
    }
    columns = [f"xi_{j + 1}" for j in range(P.n)] + ["regions", "phi1", "phi2", "phi3"]
    path = _output(config, "regions.tsv")
    write_table(path, header, columns, [[*point, names, a, b, c] for point, names, a, b, c in rows])
    logger.info(f"📝 {len(rows)} grid points classified into {path}")
    return outputs + [path]


def cmd_scan(config: RunConfig, P: PolynomialSymbol) -> List[str]:
    report, outputs = _analysis(config, P, required=False)
    for target in _targets(config):
        logger.info(f"🔍 scanning sup_x |{target}(t, x)| for {P.name}")
        scan = run_scan(P, report, config, target)
        stem = _output(config, f"scan_{target}")
        write_document(stem + ".json", {**_header("scan", config), **scan.to_document()})
        columns, rows = scan.table()
        write_table(stem + ".tsv", _scan_header(config, scan), columns, rows)
        outputs += [stem + ".json", stem + ".tsv"]
    return outputs


def cmd_verify(config: RunConfig, P: PolynomialSymbol) -> List[str]:
    report, _ = _analysis(config, P, required=True)
    scans = _load_scans(config, P)
    verdicts = {}
    if "I1" in scans:
        verdicts["theorem1"] = verify_theorem1(scans["I1"], config.slack).to_document()
    if "I" in scans:
        verdicts["theorem2"] = verify_theorem2(scans["I"], config.slack).to_document()
    if config.pieces:
        verdicts["piece_bounds"] = verify_piece_bounds(piece_scan(P, report, config), config.slack).to_document()
    for name, verdict in verdicts.items():
        mark = "✅" if verdict["verdict"] == "PASS" else "❌"
        logger.info(f"{mark} {name}: {verdict['verdict']} (reliable={verdict['reliable']})")

    reference = scans.get("I1") or scans.get("I")
    table = comparison_table(P.n, P.m, report.b_hat, reference)
    verdicts_path = _output(config, "verdicts.json")
    comparison_path = _output(config, "comparison.json")
    header = {**_header("verify", config), **_scan_header(config, reference)}
    header.pop("target")
    write_document(verdicts_path, {**header, "targets": list(scans), "verdicts": verdicts})
    write_document(comparison_path, {**header, "measured_target": reference.target, "rows": table})
    return [verdicts_path, comparison_path]


def cmd_report(config: RunConfig, P: PolynomialSymbol) -> List[str]:
    _analysis(config, P, required=True)
    scans = _load_scans(config, P)
    rows = []
    for target, scan in scans.items():
        t = np.array([r.t for r in scan.records])
        amplitude = np.array([r.amplitude for r in scan.records])
        anchor = int(np.argmin(np.abs(np.log10(t))))
        log_t, log_a = np.log10(t), np.log10(amplitude)
        slopes = local_slopes(t, amplitude)
        for k in range(len(t)):
            shift = log_t[k] - log_t[anchor]
            rows.append([
                target, t[k], log_t[k], log_a[k], slopes[k],
                log_a[anchor] - scan.sigma * shift,
                log_a[anchor] - 0.5 * scan.n * shift,
            ])
    header = {
        "symbol": P.name, "n": P.n, "m": P.m, "targets": ",".join(scans),
        "config_hash": config.config_hash(), "version": VERSION,
    }
    columns = ["target", "t", "log10_t", "log10_amplitude", "local_slope", "reference_sigma", "reference_half_n"]
    path = _output(config, "report_columns.tsv")
    write_table(path, header, columns, rows)
    return [path]


def check_journal(config: RunConfig):
    mismatches = verify_journal(config.out_dir)
    if mismatches:
        raise SchrodecayError(f"{len(mismatches)} journaled document(s) do not verify", {"mismatches": mismatches})


COMMANDS: Dict[str, Callable[[RunConfig, PolynomialSymbol], List[str]]] = {
    "analyze": cmd_analyze,
    "eval": cmd_eval,
    "regions": cmd_regions,
    "scan": cmd_scan,
    "verify": cmd_verify,
    "report": cmd_report,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)
    try:
        config = config_from_args(args)
        P = load_symbol(config.symbol_path)
        outputs = COMMANDS[args.command](config, P)
        log_command(args.command, config, outputs)
        if getattr(args, "check_journal", False):
            check_journal(config)
        return 0
    except SchrodecayError as e:
        logger.error(f"❌ {args.command} failed: {e}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
