import pytest
import sys
import os

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

# Set testing mode
os.environ["TESTING"] = "True"

import numpy
from sympy import primerange

from src.errors import NotRelevant, SymmetryViolation
from src.ffpoly import FFPoly, factor, self_dual_lift
from src.gsp_oracle import (
    MatrixFF,
    centralizer_count,
    commutant_basis,
    darboux_basis,
    is_cyclic,
    pairing_consistent,
    random_similitude,
    representative,
    similitude_multiplier,
    standard_form,
)
from src.localdensity import centralizer_order, classify_shape, nu_ell
from src.weilpoly import check_symmetry, count_roots_in_window, parse_weil, real_weil, reexpand

INSTANCES = 100


def _random_self_dual(rng, ell, g=3):
    m = int(rng.integers(1, ell))
    tail = [int(c) for c in rng.integers(0, ell, size=g)]
    return self_dual_lift(FFPoly((1,) + tuple(tail), ell), m), m


def test_random_similitudes_have_self_dual_charpolys():
    """Characteristic polynomials of random similitudes satisfy the functional equation"""

    print("\n" + "="*70)
    print("TEST: SELF-DUAL CHARACTERISTIC POLYNOMIALS")
    print("="*70)

    rng = numpy.random.default_rng(2024)
    for i in range(INSTANCES):
        ell = [3, 5, 7][i % 3]
        m = int(rng.integers(1, ell))
        M = random_similitude(3, ell, rng, m)
        assert similitude_multiplier(M) == m
        c = M.charpoly().coeffs
        for k in range(3):
            assert c[6 - k] == pow(m, 3 - k, ell) * c[k] % ell, f"instance {i}: {M.charpoly()} not self-dual"
    print(f"✓ {INSTANCES} random similitudes")


def test_random_classes_match_formula():
    """Enumerated centralizers equal the closed form for random relevant classes"""

    print("\n" + "="*70)
    print("TEST: RANDOM CLASSES AGAINST FORMULA")
    print("="*70)

    rng = numpy.random.default_rng(11)
    checked = 0
    attempts = 0
    while checked < INSTANCES and attempts < 20 * INSTANCES:
        attempts += 1
        ell = [2, 3, 5][attempts % 3]
        fbar, m = _random_self_dual(rng, ell)
        fs = factor(fbar)
        try:
            shape = classify_shape(fs, 3)
        except NotRelevant:
            continue
        if shape.variant.ramified or not pairing_consistent(fs, m, shape.variant):
            continue
        gamma = representative(fbar, m, seed=attempts)
        assert centralizer_count(gamma) == centralizer_order(shape, ell, 3), f"{fbar} mod {ell}, m={m}"
        checked += 1
    assert checked == INSTANCES, f"only {checked} relevant classes in {attempts} attempts"
    print(f"✓ {checked} classes in {attempts} attempts")


def test_twist_preserves_local_factors(sextic_fixtures):
    """f(-T) defines the same field, so every local factor agrees"""

    print("\n" + "="*70)
    print("TEST: QUADRATIC TWIST")
    print("="*70)

    for f in sextic_fixtures:
        twisted = parse_weil([c * (-1) ** i for i, c in enumerate(f.coeffs)], f.q)
        for ell in primerange(2, 300):
            if ell == f.p:
                continue
            assert nu_ell(f, ell).nu_f == nu_ell(twisted, ell).nu_f, f"{f.label}: twist differs at ell={ell}"
    print(f"✓ {len(sextic_fixtures)} twists")


def _poly_mul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def _random_weil_sextic(rng):
    """Product of three T^2 - aT + q with a^2 < 4q, so every root lies on |z| = sqrt(q)"""
    q = int(rng.choice([2, 3, 5, 7, 11, 13]))
    bound = int(numpy.floor(2 * numpy.sqrt(q)))
    coeffs = [1]
    for _ in range(3):
        a = int(rng.integers(-bound, bound + 1))
        coeffs = _poly_mul(coeffs, [1, -a, q])
    return coeffs, q


def test_random_weil_polynomials_symmetry_and_reexpansion():
    """Functional equation, window root count and T^g f+(T + q/T) = f on random sextics"""

    print("\n" + "="*70)
    print("TEST: RANDOM WEIL SEXTICS")
    print("="*70)

    rng = numpy.random.default_rng(7)
    for i in range(INSTANCES):
        coeffs, q = _random_weil_sextic(rng)
        check_symmetry(coeffs, q, 3)
        f = parse_weil(coeffs, q)
        fplus = real_weil(f)
        assert reexpand(fplus.coeffs, q) == coeffs, f"instance {i}: {coeffs}"
        assert count_roots_in_window(fplus.coeffs, q) == 3

        broken = list(coeffs)
        broken[6] += 1
        with pytest.raises(SymmetryViolation):
            parse_weil(broken, q)
    print(f"✓ {INSTANCES} sextics")


def test_random_factorizations_reconstruct():
    """Factors multiply back and each factor is irreducible"""

    print("\n" + "="*70)
    print("TEST: RANDOM FACTORIZATIONS")
    print("="*70)

    rng = numpy.random.default_rng(3)
    for i in range(INSTANCES):
        ell = [2, 3, 5, 7, 11, 13][i % 6]
        coeffs = [1] + [int(c) for c in rng.integers(0, ell, size=6)]
        poly = FFPoly.from_ints(coeffs, ell)
        fs = factor(poly)
        assert fs.expand() == poly.monic(), f"instance {i}: {poly} mod {ell}"
        assert all(h.is_irreducible() for h, _ in fs.factors), f"instance {i}: reducible factor"
    print(f"✓ {INSTANCES} factorizations")


def test_random_darboux_bases():
    """Q A Q^T = J for random nondegenerate alternating forms"""

    print("\n" + "="*70)
    print("TEST: RANDOM DARBOUX BASES")
    print("="*70)

    rng = numpy.random.default_rng(5)
    done = 0
    while done < INSTANCES:
        ell = [3, 5, 7, 11][done % 4]
        J = standard_form(3, ell)
        P = MatrixFF(rng.integers(0, ell, size=(6, 6)), ell)
        if P.det() == 0:
            continue
        A = P * J * P.transpose()
        Q = darboux_basis(A)
        assert Q * A * Q.transpose() == J, f"instance {done} mod {ell}"
        done += 1
    print(f"✓ {INSTANCES} forms")


def test_cyclic_elements_have_commutant_dimension_2g():
    """A cyclic element commutes only with polynomials in itself"""

    print("\n" + "="*70)
    print("TEST: COMMUTANT DIMENSION")
    print("="*70)

    rng = numpy.random.default_rng(13)
    done = 0
    attempts = 0
    while done < INSTANCES and attempts < 10 * INSTANCES:
        attempts += 1
        ell = [3, 5, 7][attempts % 3]
        M = random_similitude(3, ell, rng, int(rng.integers(1, ell)))
        if not is_cyclic(M):
            continue
        assert len(commutant_basis(M)) == 6, f"attempt {attempts} mod {ell}"
        done += 1
    assert done == INSTANCES, f"only {done} cyclic elements in {attempts} attempts"
    print(f"✓ {done} cyclic elements")
