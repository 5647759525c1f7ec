import pytest
import sys
import os
import time

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

# Set testing mode
os.environ["TESTING"] = "True"

from src.errors import NotRelevant
from src.ffpoly import factor, monic_polynomials, self_dual_lift
from src.gsp_oracle import enumerate_group, export_census, load_census
from src.localdensity import centralizer_order, classify_shape


@pytest.fixture(scope="module")
def census():
    start = time.time()
    result = enumerate_group(3, 2, seed=0)
    print(f"\nEnumerated GSp_6(F_2) in {time.time() - start:.1f}s")
    return result


@pytest.mark.slow
def test_census_total(census):
    """Every element of GSp_6(F_2) is counted once"""

    print("\n" + "="*70)
    print("TEST: CENSUS OF GSP_6(F_2)")
    print("="*70)

    assert census.group_order == 1451520
    assert census.total == 1451520, f"Expected 1451520 elements, got {census.total}"
    assert all(r.multiplier == 1 for r in census.records)
    print(f"✓ {len(census.records)} characteristic polynomials")


@pytest.mark.slow
def test_census_known_counts(census):
    """Class sizes of the two unramified irreducible-type shapes"""

    print("\n" + "="*70)
    print("TEST: CENSUS CLASS SIZES")
    print("="*70)

    # T^6 + T^3 + 1, shape [2g]
    assert census.count([1, 0, 0, 1, 0, 0, 1]) == 161280
    # Phi_7 = (T^3 + T + 1)(T^3 + T^2 + 1), shape [g]_1[g]_2
    assert census.count([1, 1, 1, 1, 1, 1, 1]) == 207360
    print("✓ 161280 and 207360")


@pytest.mark.slow
def test_census_matches_centralizer_formula(census):
    """For squarefree relevant characteristic polynomials, count * |Z| = |G|"""

    print("\n" + "="*70)
    print("TEST: CENSUS AGAINST CENTRALIZER FORMULA")
    print("="*70)

    checked = 0
    for H in monic_polynomials(3, 2):
        fbar = self_dual_lift(H, 1)
        shape_factors = factor(fbar)
        if shape_factors.ramified:
            continue
        try:
            shape = classify_shape(shape_factors, 3)
        except NotRelevant:
            continue
        count = census.count(list(fbar.ascending))
        assert count * centralizer_order(shape, 2, 3) == 1451520, f"{fbar}: {count} elements"
        checked += 1
    assert checked >= 2
    print(f"✓ {checked} characteristic polynomials checked")


@pytest.mark.slow
def test_census_export_roundtrip(census, tmp_path):
    path = tmp_path / "gsp6_f2.jsonl"
    export_census(census, path)
    loaded = load_census(path)
    assert loaded.total == census.total
    assert loaded.count([1, 1, 1, 1, 1, 1, 1]) == 207360
