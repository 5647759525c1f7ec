"""Partial products of local densities and the class-number comparison.

Primes are always consumed in ascending order; the product is only
conditionally convergent, so the reduction never reorders factors even
when the factors themselves are computed in a worker pool.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Type, TypeVar

import mpmath
from pydantic import BaseModel
from sympy import primerange

from src.errors import CheckpointError, DensityError, FixtureMismatch
from src.localdensity import classify_shape, factor_mod, nu_ell, nu_ell_K, nu_p
from src.schemas import (
    ComparisonReport,
    ProductCheckpoint,
    ReferenceFixture,
    Snapshot,
    WeilFixture,
    WeilPolynomial,
)
from src.weilpoly import nu_infinity, parse_weil

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
BAND_WINDOW = 5
PREFETCH_CHUNK = 64

Model = TypeVar("Model", bound=BaseModel)


def snapshot_marks(start: int, end: int) -> List[int]:
    """Every k * 10^j (k = 1..9) in the half-open range (start, end]"""
    marks = []
    power = 1
    while power <= end:
        for k in range(1, 10):
            mark = k * power
            if start < mark <= end:
                marks.append(mark)
        power *= 10
    return sorted(marks)


def factor_value(f: WeilPolynomial, ell: int, source: str = "f") -> Fraction:
    """nu_ell from the centralizer side ("f") or the character side ("K")"""
    if ell == f.p:
        return nu_p(f)
    if source == "K":
        return nu_ell_K(classify_shape(factor_mod(f, ell), f.g), ell, f.g)
    return nu_ell(f, ell).nu_f


def _factor_task(args) -> Tuple[int, Optional[Fraction], Optional[str]]:
    coeffs, q, ell, source = args
    f = parse_weil(coeffs, q)
    try:
        return ell, factor_value(f, ell, source), None
    except DensityError as e:
        return ell, None, e.detail()


def _factors(f: WeilPolynomial, primes: List[int], source: str, threads: int) -> Iterator[Tuple[int, Optional[Fraction], Optional[str]]]:
    if threads <= 1:
        for ell in primes:
            try:
                yield ell, factor_value(f, ell, source), None
            except DensityError as e:
                yield ell, None, e.detail()
        return
    tasks = [(list(f.coeffs), f.q, ell, source) for ell in primes]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        # map preserves submission order, so the reduction stays ascending
        yield from pool.map(_factor_task, tasks, chunksize=PREFETCH_CHUNK)


def _log(x: Fraction) -> mpmath.mpf:
    return mpmath.log(x.numerator) - mpmath.log(x.denominator)


def partial_product(
    f: WeilPolynomial,
    B: int,
    resume: Optional[ProductCheckpoint] = None,
    precision: int = 128,
    exact_cutoff: int = 10 ** 4,
    source: str = "f",
    threads: int = 1,
) -> ProductCheckpoint:
    """Product of nu_ell over primes ell < B, resumable from a checkpoint"""
    if B < 2:
        raise CheckpointError(f"bound {B} is below 2")
    label = f.label or f.name

    if resume is not None:
        _check_resume(f, resume, B, precision, source)
        if resume.failed_at is not None:
            logger.warning(f"checkpoint for {label} already failed at ell={resume.failed_at}")
            return resume
        start = resume.B
        log_sum, compensation = resume.log_product, resume.log_compensation
        exact = resume.exact_product
        consumed = resume.primes_consumed
        history = list(resume.history)
        exact_cutoff = resume.exact_cutoff
    else:
        start = 2
        log_sum, compensation = mpmath.mpf(0), mpmath.mpf(0)
        exact = Fraction(1)
        consumed = 0
        history = []

    # a cold run records the empty product at bound 1
    marks = snapshot_marks(start if resume is not None else 0, B)
    primes = [int(ell) for ell in primerange(start, B)]
    failed_at, failure = None, None
    bound = B

    logger.info(f"product for {label}: primes in [{start}, {B}), {len(primes)} factors")
    with mpmath.workprec(precision):
        log_sum = +log_sum
        compensation = +compensation
        for ell, value, error in _factors(f, primes, source, threads):
            while marks and marks[0] <= ell:
                history.append(Snapshot(bound=marks.pop(0), value=mpmath.exp(log_sum)))
            if error is not None:
                failed_at, failure, bound = ell, error, ell
                logger.error(f"product for {label} stopped at ell={ell}: {error}")
                break

            # Kahan summation of log(nu_ell)
            y = _log(value) - compensation
            t = log_sum + y
            compensation = (t - log_sum) - y
            log_sum = t
            if exact is not None:
                exact = exact * value if ell < exact_cutoff else None
            consumed += 1
        else:
            while marks and marks[0] <= B:
                history.append(Snapshot(bound=marks.pop(0), value=mpmath.exp(log_sum)))

    if bound > exact_cutoff:
        exact = None

    checkpoint = ProductCheckpoint(
        version=CHECKPOINT_VERSION,
        label=label,
        coeffs=list(f.coeffs),
        q=f.q,
        B=bound,
        source=source,
        precision_bits=precision,
        exact_cutoff=exact_cutoff,
        log_product=log_sum,
        log_compensation=compensation,
        exact_product=exact,
        primes_consumed=consumed,
        history=history,
        failed_at=failed_at,
        failure=failure,
    )
    logger.info(f"product for {label} reached B={bound} after {consumed} primes")
    return checkpoint


def _check_resume(f: WeilPolynomial, resume: ProductCheckpoint, B: int, precision: int, source: str) -> None:
    if resume.version != CHECKPOINT_VERSION:
        raise CheckpointError(f"checkpoint version {resume.version} is not {CHECKPOINT_VERSION}")
    if list(resume.coeffs) != list(f.coeffs) or resume.q != f.q:
        raise CheckpointError("checkpoint belongs to a different polynomial")
    if resume.source != source:
        raise CheckpointError(f"checkpoint uses factor source '{resume.source}', not '{source}'")
    if resume.precision_bits != precision:
        raise CheckpointError(f"checkpoint precision is {resume.precision_bits} bits, not {precision}")
    if B < resume.B:
        raise CheckpointError(f"bound {B} is below the checkpoint bound {resume.B}")


def product_value(checkpoint: ProductCheckpoint) -> mpmath.mpf:
    with mpmath.workprec(checkpoint.precision_bits):
        return mpmath.exp(checkpoint.log_product)


# ---------------------------------------------------------------------------
# Comparison with class-number fixtures
# ---------------------------------------------------------------------------

def comparison_report(
    label: str,
    bound: int,
    nu_inf: mpmath.mpf,
    log_product: mpmath.mpf,
    history: Sequence[Snapshot],
    reference: Fraction,
    precision: int = 128,
) -> ComparisonReport:
    with mpmath.workprec(precision):
        predicted = nu_inf * mpmath.exp(log_product)
        ref = mpmath.mpf(reference.numerator) / reference.denominator
        rel_error = abs(predicted - ref) / ref
        tail = [nu_inf * s.value for s in history[-BAND_WINDOW:]]
        band = (max(tail) - min(tail)) if tail else mpmath.mpf(0)
    return ComparisonReport(
        label=label,
        bound=bound,
        nu_infinity=nu_inf,
        predicted=predicted,
        reference=reference,
        rel_error=rel_error,
        oscillation_band=band,
        snapshots_used=len(tail),
    )


def compare(f: WeilPolynomial, checkpoint: ProductCheckpoint, fixture: ReferenceFixture) -> ComparisonReport:
    if fixture.label != checkpoint.label:
        raise FixtureMismatch(checkpoint.label, fixture.label)
    precision = checkpoint.precision_bits
    nu_inf = nu_infinity(f, precision).value
    report = comparison_report(
        checkpoint.label,
        checkpoint.B,
        nu_inf,
        checkpoint.log_product,
        checkpoint.history,
        fixture.reference,
        precision,
    )
    logger.info(f"{checkpoint.label} at B={checkpoint.B}: predicted {mpmath.nstr(report.predicted, 12)}, "
                f"reference {fixture.reference}, rel_error {mpmath.nstr(report.rel_error, 6)}")
    return report


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------

def save_checkpoint(checkpoint: ProductCheckpoint, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(checkpoint.model_dump_json(indent=2) + "\n")
    tmp.replace(path)
    logger.info(f"checkpoint written to {path} (B={checkpoint.B})")


def load_checkpoint(path: Path) -> Optional[ProductCheckpoint]:
    path = Path(path)
    if not path.exists():
        return None
    checkpoint = ProductCheckpoint.model_validate_json(path.read_text())
    if checkpoint.version != CHECKPOINT_VERSION:
        raise CheckpointError(f"checkpoint version {checkpoint.version} is not {CHECKPOINT_VERSION}")
    return checkpoint


def load_jsonl(path: Path, model: Type[Model]) -> List[Model]:
    records = []
    with Path(path).open() as fh:
        for line in fh:
            if line.strip():
                records.append(model.model_validate_json(line))
    return records


def load_references(path: Path) -> Dict[str, ReferenceFixture]:
    return {r.label: r for r in load_jsonl(path, ReferenceFixture)}


def load_weil_fixtures(path: Path) -> Dict[str, WeilFixture]:
    return {r.label: r for r in load_jsonl(path, WeilFixture)}
