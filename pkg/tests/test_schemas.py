import pytest
import sys
import os
import json
from fractions import Fraction

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

# Set testing mode
os.environ["TESTING"] = "True"

import mpmath
from pydantic import ValidationError

from src.schemas import (
    LocalFactor,
    ProductCheckpoint,
    ReferenceFixture,
    RunConfig,
    ShapeVariant,
    Snapshot,
    WeilFixture,
    render_real,
)


def test_missing_required_fields():
    """Reference fixtures need every field"""

    print("\n" + "="*70)
    print("TEST: MISSING REQUIRED FIELDS VALIDATION")
    print("="*70)

    complete = {
        "label": "cm19_q7",
        "coeffs": [1, 10, 48, 151, 336, 490, 343],
        "q": 7,
        "h_K": 1,
        "h_Kplus": 1,
        "omega_K": 2,
        "provenance": "hand",
    }
    for field in complete:
        data = {k: v for k, v in complete.items() if k != field}
        with pytest.raises(ValidationError) as exc:
            ReferenceFixture(**data)
        fields = [".".join(str(loc) for loc in err["loc"]) for err in exc.value.errors()]
        assert field in fields, f"Missing {field} not reported: {fields}"
        print(f"✓ Missing {field} rejected")


def test_invalid_values():
    """Out-of-range values are rejected"""

    print("\n" + "="*70)
    print("TEST: INVALID VALUES")
    print("="*70)

    with pytest.raises(ValidationError):
        ReferenceFixture(label="", coeffs=[1, 1, 2], q=2, h_K=1, h_Kplus=1, omega_K=2, provenance="x")
    with pytest.raises(ValidationError):
        ReferenceFixture(label="a", coeffs=[1, 1, 2], q=2, h_K=0, h_Kplus=1, omega_K=2, provenance="x")
    with pytest.raises(ValidationError):
        WeilFixture(label="a", coeffs=[1, 2], q=2)
    with pytest.raises(ValidationError):
        RunConfig(command="local", threads=0)
    with pytest.raises(ValidationError):
        RunConfig(command="local", output_format="xml")
    print("✓ Invalid values rejected")


def test_local_factor_matched_flag():
    """matched must agree with the two values"""

    ok = LocalFactor(ell=2, nu_f=Fraction(8, 9), nu_K="8/9", matched=True)
    assert ok.nu_K == Fraction(8, 9)
    with pytest.raises(ValidationError):
        LocalFactor(ell=2, nu_f=Fraction(8, 9), nu_K=Fraction(1), matched=True)


def test_rational_and_real_serialization():
    """Exact rationals and binary reals survive JSON unchanged"""

    print("\n" + "="*70)
    print("TEST: EXACT SERIALIZATION")
    print("="*70)

    with mpmath.workprec(128):
        log_product = mpmath.log(mpmath.mpf(6125) / 4464)
        compensation = mpmath.ldexp(1, -140)
    checkpoint = ProductCheckpoint(
        label="cm19_q7",
        coeffs=[1, 10, 48, 151, 336, 490, 343],
        q=7,
        B=8,
        precision_bits=128,
        exact_cutoff=10000,
        log_product=log_product,
        log_compensation=compensation,
        exact_product=Fraction(6125, 4464),
        primes_consumed=4,
        history=[Snapshot(bound=1, value=1), Snapshot(bound=2, value="1/2")],
    )
    text = checkpoint.model_dump_json()
    payload = json.loads(text)
    assert payload["exact_product"] == "6125/4464"
    assert payload["log_compensation"] == f"1/{2 ** 140}"
    assert payload["log_product"] == render_real(log_product)

    loaded = ProductCheckpoint.model_validate_json(text)
    assert loaded.log_product == log_product
    assert loaded.log_compensation == compensation
    assert loaded == checkpoint
    print(f"✓ log_product = {payload['log_product']}")


def test_history_must_ascend():
    with pytest.raises(ValidationError):
        ProductCheckpoint(
            label="x", coeffs=[1, 1, 2], q=2, B=10, precision_bits=128, exact_cutoff=100,
            log_product=0, log_compensation=0,
            history=[Snapshot(bound=5, value=1), Snapshot(bound=3, value=1)],
        )


def test_low_precision_rejected():
    with pytest.raises(ValidationError):
        ProductCheckpoint(label="x", coeffs=[1, 1, 2], q=2, B=10, precision_bits=64,
                          exact_cutoff=100, log_product=0, log_compensation=0)


def test_shape_labels():
    assert ShapeVariant.TWO_G.label == "[2g]"
    assert ShapeVariant.ONE_TWO_G_FULL.label == "[g]_1[g]_2"
    assert ShapeVariant.RAMIFIED_PAIR.ramified
    assert not ShapeVariant.PAIRS.ramified
