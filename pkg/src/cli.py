"""Command line surface: python -m src.cli <command> [options]"""
import argparse
import asyncio
import logging
import os
import sys
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import mpmath
from pydantic import ValidationError

from src import __version__
from src.aggregate import (
    compare,
    load_checkpoint,
    load_references,
    load_weil_fixtures,
    partial_product,
    product_value,
    save_checkpoint,
)
from src.errors import ResourceGuardError, WeilDensityError, WeilValidationError
from src.ffpoly import FFPoly, seed_splitting
from src.gsp_oracle import (
    centralizer_matrix,
    enumerate_group,
    export_census,
    representative_report,
)
from src.localdensity import local_table, primes_from
from src.schemas import (
    ArchimedeanReport,
    CentralizerCell,
    CharPolyCensus,
    ComparisonReport,
    Envelope,
    InvalidInput,
    LocalRow,
    ProductCheckpoint,
    RepresentativeReport,
    RunConfig,
    WeilPolynomial,
    render_rational,
)
from src.weilpoly import (
    disc_trig_crosscheck,
    frobenius_angles,
    nu_infinity,
    parse_weil,
    real_weil,
    validate_conditions,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3

DEFAULT_WEIL_FIXTURES = Path("fixtures") / "weil_polynomials.jsonl"
DEFAULT_REFERENCE_FIXTURES = Path("fixtures") / "class_numbers.jsonl"
VALIDATE_PRIME_BOUND = 200
BANNER = "=" * 70


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.replace(" ", "").split(",") if part]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--coeffs", type=_int_list, help="Descending integer coefficients, e.g. 1,10,48,151,336,490,343")
    common.add_argument("--q", type=int, help="Prime power q")
    common.add_argument("--label", help="Fixture label (with --fixture-path) or label for the given coefficients")
    common.add_argument("--fixture-path", help="Line-delimited JSON fixture file")
    common.add_argument("--precision", type=int, default=None, help="Working precision in bits (default: PRECISION_BITS or 128)")
    common.add_argument("--seed", type=int, default=None, help="Seed for randomized subroutines (default: DENSITY_SEED or 0)")
    common.add_argument("--format", dest="output_format", choices=["human", "structured"], default="human",
                        help="Output format (default: human)")
    common.add_argument("--threads", type=int, default=1, help="Worker processes (default: 1)")
    common.add_argument("--timings", action="store_true", help="Include wall-clock timings in structured output")

    parser = argparse.ArgumentParser(
        prog="python -m src.cli",
        description="Local densities of Weil polynomials and their Euler products",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="Parse f and report the standing hypotheses")
    p.add_argument("--prime-bound", type=int, default=None,
                   help=f"Primes screened for the cyclic Galois check (default: {VALIDATE_PRIME_BOUND})")
    p.add_argument("--assume-maximal", action="store_true", help="Accept an unverified maximality status")

    p = sub.add_parser("local", parents=[common], help="Table of nu_ell(f) and nu_ell(K)")
    p.add_argument("--prime-bound", type=int, default=None, help="All primes up to this bound (default: PRIME_BOUND or 1000)")
    p.add_argument("--ells", type=_int_list, help="Explicit primes instead of a bound")
    p.add_argument("--cache", action="store_true", help="Route the sweep through the SQLite cache")

    sub.add_parser("archimedean", parents=[common], help="f+, discriminants, conductor, angles and nu_infinity")

    for name, text in (("product", "Partial Euler product up to a bound"),
                       ("compare", "Compare the product with a class-number fixture")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--bound", type=int, default=None, help="Primes below this bound (default: PRIME_BOUND or 1000)")
        p.add_argument("--checkpoint", help="Checkpoint file to resume from and write to")
        p.add_argument("--exact-cutoff", type=int, default=None, help="Keep the exact product up to this bound (default: 10000)")
        p.add_argument("--source", choices=["f", "K"], default="f", help="Centralizer side (f) or character side (K)")

    p = sub.add_parser("oracle", help="Explicit group computations")
    oracle = p.add_subparsers(dest="oracle_command", required=True)
    o = oracle.add_parser("centralizers", parents=[common], help="Formula against enumeration for every shape")
    o.add_argument("--g", type=int, default=3, help="Genus (default: 3)")
    o.add_argument("--ells", type=_int_list, default=[2, 3, 5], help="Primes (default: 2,3,5)")
    o = oracle.add_parser("census", parents=[common], help="Characteristic polynomial census of GSp_6(F_2)")
    o.add_argument("--g", type=int, default=3, help="Genus (default: 3)")
    o.add_argument("--census-out", help="Write the census as JSON lines")
    o = oracle.add_parser("representative", parents=[common], help="Construct and verify a class representative")
    o.add_argument("--fbar", type=_int_list, required=True, help="Descending coefficients mod ell")
    o.add_argument("--m", type=int, required=True, help="Multiplier")
    o.add_argument("--ell", type=int, required=True, help="Prime")
    return parser


def _env_int(name: str, default: int) -> int:
    return int(os.getenv(name, str(default)))


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Flags override the environment, the environment overrides built-in defaults"""
    command = args.command if args.command != "oracle" else f"oracle {args.oracle_command}"
    prime_bound = getattr(args, "prime_bound", None)
    if prime_bound is None:
        prime_bound = VALIDATE_PRIME_BOUND if command == "validate" else _env_int("PRIME_BOUND", 1000)
    exact_cutoff = getattr(args, "exact_cutoff", None)
    return RunConfig(
        command=command,
        coeffs=args.coeffs,
        q=args.q,
        label=args.label,
        prime_bound=prime_bound,
        precision_bits=args.precision if args.precision is not None else _env_int("PRECISION_BITS", 128),
        seed=args.seed if args.seed is not None else _env_int("DENSITY_SEED", 0),
        checkpoint_path=getattr(args, "checkpoint", None),
        fixture_path=args.fixture_path,
        output_format=args.output_format,
        threads=args.threads,
        bound=getattr(args, "bound", None),
        ells=getattr(args, "ells", None),
        g=getattr(args, "g", 3),
        exact_cutoff=exact_cutoff if exact_cutoff is not None else _env_int("EXACT_CUTOFF", 10000),
        source=getattr(args, "source", "f"),
        assume_maximal=getattr(args, "assume_maximal", False),
    )


def load_polynomial(config: RunConfig) -> WeilPolynomial:
    if config.coeffs is not None:
        if config.q is None:
            raise UsageError("--q is required with --coeffs")
        return parse_weil(config.coeffs, config.q, label=config.label)
    if config.label is None:
        raise UsageError("either --coeffs/--q or --label is required")

    path = Path(config.fixture_path) if config.fixture_path else DEFAULT_WEIL_FIXTURES
    if config.command == "compare" and not config.fixture_path:
        path = DEFAULT_REFERENCE_FIXTURES
    fixtures = load_references(path) if config.command == "compare" else load_weil_fixtures(path)
    if config.label not in fixtures:
        raise UsageError(f"label '{config.label}' not found in {path}")
    fixture = fixtures[config.label]
    return parse_weil(fixture.coeffs, fixture.q, label=fixture.label)


# ---------------------------------------------------------------------------
# Commands. Each returns (results, exit code)
# ---------------------------------------------------------------------------

def cmd_validate(config: RunConfig) -> Tuple[Any, int]:
    try:
        f = load_polynomial(config)
    except WeilValidationError as e:
        return InvalidInput(error=e.detail()), EXIT_FAILURE
    report = validate_conditions(f, config.prime_bound, assume_maximal=config.assume_maximal)
    return report, EXIT_FAILURE if report.has_failure() else EXIT_OK


def cmd_local(config: RunConfig, cache: bool = False) -> Tuple[Any, int]:
    f = load_polynomial(config)
    ells = primes_from(config.ells, config.prime_bound)
    if cache:
        from src.factor_processor import sweep

        rows = asyncio.run(sweep(f, ells, threads=config.threads))
    else:
        rows = local_table(f, ells)
    failed = any(r.error is not None or not r.factor.matched for r in rows)
    return rows, EXIT_FAILURE if failed else EXIT_OK


def cmd_archimedean(config: RunConfig) -> Tuple[Any, int]:
    f = load_polynomial(config)
    prec = config.precision_bits
    fplus = real_weil(f)
    report = ArchimedeanReport(
        fplus=fplus.coeffs,
        angles=frobenius_angles(f, prec),
        nu_infinity=nu_infinity(f, prec),
        crosscheck=disc_trig_crosscheck(f, prec),
    )
    return report, EXIT_OK


def _product(config: RunConfig, f: WeilPolynomial) -> ProductCheckpoint:
    bound = config.bound or config.prime_bound
    resume = load_checkpoint(Path(config.checkpoint_path)) if config.checkpoint_path else None
    checkpoint = partial_product(
        f,
        bound,
        resume=resume,
        precision=config.precision_bits,
        exact_cutoff=config.exact_cutoff,
        source=config.source,
        threads=config.threads,
    )
    if config.checkpoint_path:
        save_checkpoint(checkpoint, Path(config.checkpoint_path))
    return checkpoint


def cmd_product(config: RunConfig) -> Tuple[Any, int]:
    f = load_polynomial(config)
    checkpoint = _product(config, f)
    return checkpoint, EXIT_FAILURE if checkpoint.failed_at is not None else EXIT_OK


def cmd_compare(config: RunConfig) -> Tuple[Any, int]:
    f = load_polynomial(config)
    path = Path(config.fixture_path) if config.fixture_path else DEFAULT_REFERENCE_FIXTURES
    references = load_references(path)
    label = config.label or f.name
    if label not in references:
        raise UsageError(f"no reference fixture labelled '{label}' in {path}")
    checkpoint = _product(config, f)
    if checkpoint.failed_at is not None:
        return checkpoint, EXIT_FAILURE
    return compare(f, checkpoint, references[label]), EXIT_OK


def cmd_centralizers(config: RunConfig) -> Tuple[Any, int]:
    cells = centralizer_matrix(config.g, config.ells or [2, 3, 5], seed=config.seed)
    bad = any(c.status in ("mismatch", "error") for c in cells)
    return cells, EXIT_FAILURE if bad else EXIT_OK


def cmd_census(config: RunConfig, census_out: Optional[str] = None) -> Tuple[Any, int]:
    census = enumerate_group(config.g, 2, seed=config.seed, threads=config.threads)
    if census_out:
        export_census(census, Path(census_out))
    return census, EXIT_OK if census.total == census.group_order else EXIT_FAILURE


def cmd_representative(config: RunConfig, fbar: List[int], m: int, ell: int) -> Tuple[Any, int]:
    report = representative_report(FFPoly.from_ints(fbar, ell), m, seed=config.seed)
    ok = report.charpoly_ok and report.cyclic and report.similitude_ok
    return report, EXIT_OK if ok else EXIT_FAILURE


# ---------------------------------------------------------------------------
# Human output
# ---------------------------------------------------------------------------

def _banner(title: str):
    print("\n" + BANNER)
    print(title)
    print(BANNER)


def format_local_row(row: LocalRow) -> str:
    if row.error is not None:
        return f"{row.ell}, error, {row.error}"
    factor = row.factor
    if factor.kind == "p":
        return f"{row.ell}, p-adic, {render_rational(factor.nu_f)}, —, ok(ν_p)"
    status = "ok" if factor.matched else "MISMATCH"
    return f"{row.ell}, {factor.shape.label}, {render_rational(factor.nu_f)}, {render_rational(factor.nu_K)}, {status}"


def _print_validation(report):
    if isinstance(report, InvalidInput):
        print(f"✗ {report.error}")
        return
    print(f"Ordinary:                 {report.ordinary}")
    print(f"Principally polarizable:  {report.principally_polarizable}")
    cyclic = report.cyclic_galois
    confidence = f" (confidence {cyclic.confidence:.4f})" if cyclic.confidence is not None else ""
    print(f"Cyclic Galois:            {cyclic.status}{confidence}, {cyclic.primes_tested} primes tested")
    override = " (override: assumed)" if report.maximal_override else ""
    print(f"Maximal:                  {report.maximal}{override}")
    for note in report.notes:
        print(f"  - {note}")


def _print_archimedean(report: ArchimedeanReport):
    factor = report.nu_infinity
    print(f"f+:          {report.fplus}")
    print(f"disc(f):     {factor.components.disc_f}")
    print(f"disc(f+):    {factor.components.disc_fplus}")
    print(f"Delta:       {factor.components.delta}")
    print(f"cond(f):     {factor.components.cond}")
    for theta, mult in zip(report.angles.angles, report.angles.multiplicities):
        print(f"theta:       {mpmath.nstr(theta, 30)}" + (f" (multiplicity {mult})" if mult > 1 else ""))
    print(f"nu_infinity: {mpmath.nstr(factor.value, 30)}")
    check = report.crosscheck
    for name, value in (("disc(f)", check.rel_err_f), ("disc(f+)", check.rel_err_fplus)):
        text = mpmath.nstr(value, 5) if value is not None else "n/a (exact zero)"
        print(f"trig check {name}: rel. error {text}")


def _print_checkpoint(cp: ProductCheckpoint):
    print(f"Label:      {cp.label}")
    print(f"Bound B:    {cp.B} ({cp.primes_consumed} primes, source {cp.source})")
    if cp.exact_product is not None:
        print(f"Exact:      {render_rational(cp.exact_product)}")
    print(f"Product:    {mpmath.nstr(product_value(cp), 30)}")
    for snap in cp.history:
        print(f"  B={snap.bound:<10} {mpmath.nstr(snap.value, 20)}")
    if cp.failed_at is not None:
        print(f"✗ stopped at ell={cp.failed_at}: {cp.failure}")


def _print_comparison(report: ComparisonReport):
    print(f"Label:            {report.label}")
    print(f"Bound B:          {report.bound}")
    print(f"nu_infinity:      {mpmath.nstr(report.nu_infinity, 20)}")
    print(f"Predicted:        {mpmath.nstr(report.predicted, 20)}")
    print(f"Reference:        {render_rational(report.reference)}")
    print(f"Relative error:   {mpmath.nstr(report.rel_error, 8)}")
    print(f"Oscillation band: {mpmath.nstr(report.oscillation_band, 8)} (last {report.snapshots_used} snapshots)")


def _print_cells(cells: List[CentralizerCell]):
    for cell in cells:
        detail = {
            "equal": f"{cell.formula} = {cell.enumerated}",
            "mismatch": f"formula {cell.formula} != enumerated {cell.enumerated}",
        }.get(cell.status, cell.detail or "")
        print(f"{cell.variant.label:<18} ell={cell.ell:<3} {cell.status:<13} {detail}")


def _print_census(census: CharPolyCensus):
    print(f"GSp_{2 * census.g}(F_{census.ell}): {census.total} elements (order {census.group_order})")
    print(f"Distinct characteristic polynomials: {len(census.records)}")
    for record in census.records:
        print(f"  {record.charpoly}  m={record.multiplier}  {record.count}")


def _print_representative(report: RepresentativeReport):
    for row in report.matrix:
        print("  " + " ".join(str(c) for c in row))
    print(f"charpoly ok: {report.charpoly_ok}, cyclic: {report.cyclic}, similitude ok: {report.similitude_ok}")
    if report.centralizer is not None:
        print(f"centralizer order: {report.centralizer}")


def render_human(config: RunConfig, results: Any):
    _banner(f"{config.command.upper()}")
    if config.command == "validate":
        _print_validation(results)
    elif config.command == "local":
        print("ell, shape, nu_ell(f), nu_ell(K), status")
        for row in results:
            print(format_local_row(row))
    elif config.command == "archimedean":
        _print_archimedean(results)
    elif config.command == "product" or isinstance(results, ProductCheckpoint):
        _print_checkpoint(results)
    elif config.command == "compare":
        _print_comparison(results)
    elif config.command == "oracle centralizers":
        _print_cells(results)
    elif config.command == "oracle census":
        _print_census(results)
    elif config.command == "oracle representative":
        _print_representative(results)
    print(BANNER)


def render_structured(config: RunConfig, results: Any, timings: Optional[Dict[str, float]]) -> str:
    envelope = Envelope(version=__version__, config=config, results=results, timings=timings)
    return envelope.model_dump_json()


def validation_details(e: ValidationError) -> List[Dict[str, str]]:
    return [
        {
            "field": ".".join(str(loc) for loc in err["loc"]),
            "message": err["msg"],
            "type": err["type"],
        }
        for err in e.errors()
    ]


def run(args: argparse.Namespace) -> int:
    try:
        config = resolve_config(args)
    except ValidationError as e:
        print(f"Error: invalid configuration {validation_details(e)}", file=sys.stderr)
        return EXIT_USAGE

    seed_splitting(config.seed)
    handlers: Dict[str, Callable[[], Tuple[Any, int]]] = {
        "validate": lambda: cmd_validate(config),
        "local": lambda: cmd_local(config, cache=getattr(args, "cache", False)),
        "archimedean": lambda: cmd_archimedean(config),
        "product": lambda: cmd_product(config),
        "compare": lambda: cmd_compare(config),
        "oracle centralizers": lambda: cmd_centralizers(config),
        "oracle census": lambda: cmd_census(config, getattr(args, "census_out", None)),
        "oracle representative": lambda: cmd_representative(config, args.fbar, args.m, args.ell),
    }

    started = time.perf_counter()
    try:
        results, code = handlers[config.command]()
    except UsageError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as e:
        print(f"Error: validation failed {validation_details(e)}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceGuardError as e:
        print(f"Error: {e.detail()}", file=sys.stderr)
        return EXIT_RESOURCE
    except WeilDensityError as e:
        print(f"Error: {e.detail()}", file=sys.stderr)
        return EXIT_FAILURE
    timings = {"total": time.perf_counter() - started} if args.timings else None

    if config.output_format == "structured":
        print(render_structured(config, results, timings))
    else:
        render_human(config, results)
    return code


def main(argv: Optional[List[str]] = None) -> int:
    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
    logging.basicConfig(level=getattr(logging, LOG_LEVEL))

    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command != "oracle" and getattr(args, "coeffs", None) is not None and args.q is None:
        parser.error("--q is required with --coeffs")
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
