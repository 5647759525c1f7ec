import pytest
import sys
import os
from fractions import Fraction

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

# Set testing mode
os.environ["TESTING"] = "True"

import mpmath

from src.aggregate import (
    compare,
    comparison_report,
    factor_value,
    load_checkpoint,
    partial_product,
    product_value,
    save_checkpoint,
    snapshot_marks,
)
from src.errors import CheckpointError, FixtureMismatch
from src.schemas import ReferenceFixture
from src.weilpoly import nu_infinity


def test_snapshot_marks():
    """Marks lie in (start, end]; a cold run starts from 0"""
    assert snapshot_marks(0, 30) == [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 20, 30]
    assert snapshot_marks(1, 30) == [2, 3, 4, 5, 6, 7, 8, 9, 10, 20, 30]
    assert snapshot_marks(100, 400) == [200, 300, 400]
    assert snapshot_marks(5, 5) == []


def test_small_products_are_exact(cm19):
    """Exact partial products at small bounds"""

    print("\n" + "="*70)
    print("TEST: EXACT PARTIAL PRODUCTS")
    print("="*70)

    cases = [(2, Fraction(1)), (3, Fraction(8, 9)), (8, Fraction(6125, 4464))]
    for B, expected in cases:
        checkpoint = partial_product(cm19, B)
        assert checkpoint.exact_product == expected, f"B={B}: expected {expected}, got {checkpoint.exact_product}"
        with mpmath.workprec(128):
            value = product_value(checkpoint)
            assert abs(value - mpmath.mpf(expected.numerator) / expected.denominator) < mpmath.mpf(10) ** -30
        print(f"✓ B={B}: {checkpoint.exact_product}")

    checkpoint = partial_product(cm19, 8)
    assert checkpoint.primes_consumed == 4
    assert [s.bound for s in checkpoint.history] == [1, 2, 3, 4, 5, 6, 7, 8]


def test_factor_sources_agree(sextic_fixtures):
    """Centralizer side and character side give identical checkpoints"""

    print("\n" + "="*70)
    print("TEST: FACTOR SOURCE EQUIVALENCE")
    print("="*70)

    for f in sextic_fixtures:
        from_f = partial_product(f, 500, source="f")
        from_k = partial_product(f, 500, source="K")
        assert from_f.exact_product == from_k.exact_product, f"{f.label}: exact products differ"
        assert from_f.log_product == from_k.log_product, f"{f.label}: log products differ"
        assert factor_value(f, f.p, "K") == factor_value(f, f.p, "f")
        print(f"✓ {f.label}")


def test_resume_equals_cold_run(cm19, tmp_path):
    """Resuming from a saved checkpoint reproduces an uninterrupted run"""

    print("\n" + "="*70)
    print("TEST: CHECKPOINT RESUME")
    print("="*70)

    cold = partial_product(cm19, 2000)

    first = partial_product(cm19, 300)
    path = tmp_path / "cm19.ckpt"
    save_checkpoint(first, path)
    loaded = load_checkpoint(path)
    assert loaded == first, "Checkpoint changed on disk"
    resumed = partial_product(cm19, 2000, resume=loaded)

    assert resumed.exact_product == cold.exact_product
    assert resumed.log_product == cold.log_product
    assert resumed.primes_consumed == cold.primes_consumed
    assert [s.bound for s in resumed.history] == [s.bound for s in cold.history]
    print(f"✓ resumed at B=300, reached B={resumed.B}")


def test_resume_rejects_mismatches(cm19, zeta7_plus):
    checkpoint = partial_product(cm19, 50)
    with pytest.raises(CheckpointError):
        partial_product(zeta7_plus, 100, resume=checkpoint)
    with pytest.raises(CheckpointError):
        partial_product(cm19, 100, resume=checkpoint, source="K")
    with pytest.raises(CheckpointError):
        partial_product(cm19, 100, resume=checkpoint, precision=256)
    with pytest.raises(CheckpointError):
        partial_product(cm19, 20, resume=checkpoint)


def test_missing_checkpoint(tmp_path):
    assert load_checkpoint(tmp_path / "absent.ckpt") is None


def test_exact_product_dropped_above_cutoff(cm19):
    checkpoint = partial_product(cm19, 200, exact_cutoff=100)
    assert checkpoint.exact_product is None
    checkpoint = partial_product(cm19, 100, exact_cutoff=100)
    assert checkpoint.exact_product is not None


def test_failure_is_recorded(genus5):
    """A local factor error stops the product at that prime"""

    print("\n" + "="*70)
    print("TEST: PRODUCT FAILURE")
    print("="*70)

    checkpoint = partial_product(genus5, 100)
    assert checkpoint.failed_at == 2
    assert "UnsupportedNonSemisimple" in checkpoint.failure
    assert checkpoint.primes_consumed == 0
    print(f"✓ stopped at ell={checkpoint.failed_at}")


def test_comparison_report_arithmetic():
    """Relative error from a synthetic reference"""

    nu_inf = mpmath.mpf(1) / 4
    with mpmath.workprec(128):
        log_product = mpmath.log(2)
    exact = comparison_report("x", 10, nu_inf, log_product, [], Fraction(1, 2))
    assert exact.rel_error < mpmath.mpf(10) ** -30
    halved = comparison_report("x", 10, nu_inf, log_product, [], Fraction(1, 4))
    assert abs(halved.rel_error - 1) < mpmath.mpf(10) ** -30
    assert halved.snapshots_used == 0


def test_compare_cm19(cm19, reference_fixtures):
    """Prediction against h_K / (omega_K h_K+) = 1/2"""

    print("\n" + "="*70)
    print("TEST: CLASS NUMBER COMPARISON")
    print("="*70)

    fixture = reference_fixtures["cm19_q7"]
    assert fixture.reference == Fraction(1, 2)
    checkpoint = partial_product(cm19, 8)
    report = compare(cm19, checkpoint, fixture)
    with mpmath.workprec(128):
        expected = nu_infinity(cm19).value * mpmath.mpf(6125) / 4464
        assert abs(report.predicted - expected) < mpmath.mpf(10) ** -30
    assert report.rel_error < mpmath.mpf("0.2"), f"rel_error = {report.rel_error}"
    assert report.snapshots_used == 5
    print(f"✓ predicted {mpmath.nstr(report.predicted, 10)} at B=8")

    other = ReferenceFixture(label="other", coeffs=cm19.coeffs, q=7, h_K=1, h_Kplus=1, omega_K=2,
                             provenance="synthetic")
    with pytest.raises(FixtureMismatch):
        compare(cm19, checkpoint, other)


def test_reference_fixture_provenance(reference_fixtures):
    """Every reference line says where its class numbers came from"""

    for label, fixture in reference_fixtures.items():
        assert fixture.provenance, f"{label} has no provenance"
        assert "Derived by hand" in fixture.provenance, f"{label}: {fixture.provenance}"
    assert reference_fixtures["cm19_q7"].omega_K == 2
    assert reference_fixtures["zeta7_q2_plus"].omega_K == 14
    print(f"✓ {len(reference_fixtures)} hand-derived reference lines")


@pytest.mark.slow
def test_convergence_band_shrinks(cm19, reference_fixtures):
    """Oscillation band shrinks across decades and the prediction approaches the ratio"""

    print("\n" + "="*70)
    print("TEST: CONVERGENCE AT B = 10^5")
    print("="*70)

    fixture = reference_fixtures["cm19_q7"]
    bands = []
    checkpoint = None
    for B in [10 ** 3, 10 ** 4, 10 ** 5]:
        checkpoint = partial_product(cm19, B, resume=checkpoint)
        report = compare(cm19, checkpoint, fixture)
        bands.append(report.oscillation_band)
        print(f"B={B}: predicted {mpmath.nstr(report.predicted, 10)}, band {mpmath.nstr(report.oscillation_band, 5)}")

    assert bands[0] > bands[1] > bands[2], f"band did not shrink: {bands}"
    assert report.rel_error < mpmath.mpf("0.10"), f"rel_error = {report.rel_error}"
    print(f"✓ rel_error {mpmath.nstr(report.rel_error, 6)}")
