"""Local densities at finite primes.

The centralizer side (nu_ell(f)) comes from closed-form centralizer orders
of the conjugacy class picked out by f mod ell. The character side
(nu_ell(K)) is evaluated from the product over odd characters in exact
cyclotomic arithmetic. The two must agree exactly.
"""
import logging
from fractions import Fraction
from typing import Callable, Iterable, List, Optional

from sympy import Poly, Symbol, cyclotomic_poly, primerange

from src.errors import (
    DensityError,
    EqualsP,
    NotOddPrimeGenus,
    NotOrdinary,
    NotRelevant,
    UnexpectedPFactorization,
    UnsupportedNonSemisimple,
    WeilValidationError,
)
from src.ffpoly import FactorizationShape, FFPoly, factor
from src.schemas import CharacterPair, ClassShape, LocalFactor, LocalRow, ShapeVariant, WeilPolynomial

logger = logging.getLogger(__name__)

z = Symbol("z")

# (e, f_res, r) for each variant, as functions of g
_RAMIFICATION = {
    ShapeVariant.SPLIT: lambda g: (1, 1, 2 * g),
    ShapeVariant.PAIRS: lambda g: (1, 2, g),
    ShapeVariant.ONE_TWO_G_FULL: lambda g: (1, g, 2),
    ShapeVariant.TWO_G: lambda g: (1, 2 * g, 1),
    ShapeVariant.RAMIFIED_LINEAR: lambda g: (2 * g, 1, 1),
    ShapeVariant.RAMIFIED_PAIR: lambda g: (g, 1, 2),
    ShapeVariant.RAMIFIED_QUAD: lambda g: (g, 2, 1),
}

# chi(ell) as the exponent k of exp(pi*i*k/g) (None for 0), and chi^g(ell)
_CHARACTERS = {
    ShapeVariant.SPLIT: (0, 1),
    ShapeVariant.PAIRS: (None, -1),  # exponent is g, filled in per genus
    ShapeVariant.ONE_TWO_G_FULL: (2, 1),
    ShapeVariant.TWO_G: (1, -1),
    ShapeVariant.RAMIFIED_PAIR: (None, 1),
    ShapeVariant.RAMIFIED_QUAD: (None, -1),
    ShapeVariant.RAMIFIED_LINEAR: (None, 0),
}


def is_odd_prime(g: int) -> bool:
    return g > 2 and all(g % d for d in range(2, int(g ** 0.5) + 1))


def check_genus(g: int) -> None:
    if g != 1 and not is_odd_prime(g):
        raise NotOddPrimeGenus(g)


def make_shape(variant: ShapeVariant, g: int) -> ClassShape:
    e, f_res, r = _RAMIFICATION[variant](g)
    return ClassShape(variant=variant, e=e, f_res=f_res, r=r)


def factor_mod(f: WeilPolynomial, ell: int) -> FactorizationShape:
    return factor(FFPoly.from_ints(f.coeffs, ell))


def classify_shape(fs: FactorizationShape, g: int) -> ClassShape:
    check_genus(g)
    degrees = fs.degrees
    if sum(d * m for d, m in degrees) != 2 * g:
        raise NotRelevant(f"{fs.describe()} (total degree is not {2 * g})")

    if g == 1:
        # split pair, irreducible quadratic, ramified square
        if degrees == [(1, 1), (1, 1)]:
            return make_shape(ShapeVariant.SPLIT, g)
        if degrees == [(2, 1)]:
            return make_shape(ShapeVariant.TWO_G, g)
        if degrees == [(1, 2)]:
            return make_shape(ShapeVariant.RAMIFIED_LINEAR, g)
        raise NotRelevant(fs.describe())

    if not fs.ramified:
        common = {d for d, _ in degrees}
        if len(common) != 1:
            raise NotRelevant(fs.describe())
        d = common.pop()
        variant = {
            1: ShapeVariant.SPLIT,
            2: ShapeVariant.PAIRS,
            g: ShapeVariant.ONE_TWO_G_FULL,
            2 * g: ShapeVariant.TWO_G,
        }.get(d)
        if variant is None:
            raise NotRelevant(fs.describe())
        return make_shape(variant, g)

    if degrees == [(1, 2 * g)]:
        return make_shape(ShapeVariant.RAMIFIED_LINEAR, g)
    if degrees == [(1, g), (1, g)]:
        return make_shape(ShapeVariant.RAMIFIED_PAIR, g)
    if degrees == [(2, g)]:
        return make_shape(ShapeVariant.RAMIFIED_QUAD, g)
    raise NotRelevant(fs.describe())


def centralizer_order(shape: ClassShape, ell: int, g: int) -> int:
    """Order of the centralizer in GSp_2g(F_ell) of a cyclic class of this shape"""
    check_genus(g)
    v = shape.variant
    if v == ShapeVariant.SPLIT:
        return (ell - 1) ** (g + 1)
    if v == ShapeVariant.PAIRS:
        return (ell ** 2 - 1) * (ell + 1) ** (g - 1)
    if v == ShapeVariant.ONE_TWO_G_FULL:
        return (ell ** g - 1) * (ell - 1)
    if v == ShapeVariant.TWO_G:
        return (ell ** g + 1) * (ell - 1)

    if g == 1:
        # a single Jordan block in GL_2 = GSp_2
        return ell * (ell - 1)
    if g != 3:
        raise UnsupportedNonSemisimple(g, v.value)
    if v == ShapeVariant.RAMIFIED_LINEAR:
        return ell ** 3 * (ell - 1)
    if v == ShapeVariant.RAMIFIED_PAIR:
        return ell ** 2 * (ell - 1) ** 2
    return ell ** 2 * (ell ** 2 - 1)


def chi_values(shape: ClassShape, g: int) -> CharacterPair:
    chi, chi_g = _CHARACTERS[shape.variant]
    if shape.variant == ShapeVariant.PAIRS:
        chi = g
    return CharacterPair(chi_ell=chi, chi_g_ell=chi_g)


def _character_value(pair: CharacterPair, j: int, g: int) -> Poly:
    """chi^(2j-1)(ell) as an element of Z[z], z = exp(pi*i/g)"""
    odd = 2 * j - 1
    if pair.chi_ell is not None:
        return Poly(z ** ((pair.chi_ell * odd) % (2 * g)), z)
    # chi(ell) = 0 only leaves chi^g, the quadratic character
    if odd == g:
        return Poly(pair.chi_g_ell, z)
    return Poly(0, z)


def nu_ell_K(shape: ClassShape, ell: int, g: int) -> Fraction:
    """ell^g / prod over odd characters of (ell - chi(ell)), exactly.

    The product runs in Z[z]/(Phi_2g(z)) and must reduce to an integer.
    """
    pair = chi_values(shape, g)
    modulus = Poly(cyclotomic_poly(2 * g, z), z)
    denominator = Poly(1, z)
    for j in range(1, g + 1):
        denominator = (denominator * (Poly(ell, z) - _character_value(pair, j, g))).rem(modulus)
    if denominator.degree() > 0:
        raise DensityError(f"character product for {shape.label} did not reduce to an integer")
    value = int(denominator.LC()) if not denominator.is_zero else 0
    if value == 0:
        raise DensityError(f"character product for {shape.label} vanishes at ell={ell}")
    return Fraction(ell ** g, value)


def nu_ell(
    f: WeilPolynomial,
    ell: int,
    centralizer: Callable[[ClassShape, int, int], int] = centralizer_order,
) -> LocalFactor:
    if ell == f.p:
        raise EqualsP(ell)
    check_genus(f.g)
    if (f.q ** f.g - f.coeffs[-1]) % ell:
        raise WeilValidationError(f"constant term {f.coeffs[-1]} is not q^g mod {ell}")

    shape = classify_shape(factor_mod(f, ell), f.g)
    nu_f = Fraction(ell ** f.g * (ell - 1), centralizer(shape, ell, f.g))
    nu_K = nu_ell_K(shape, ell, f.g)
    logger.debug(f"ell={ell} shape={shape.label} nu_f={nu_f} nu_K={nu_K}")
    return LocalFactor(ell=ell, shape=shape, nu_f=nu_f, nu_K=nu_K, matched=nu_f == nu_K)


def nu_p(f: WeilPolynomial) -> Fraction:
    """Density at the characteristic, from the etale factor g_X(T) = T^g + c_1 T^(g-1) + ... + c_g"""
    p, g = f.p, f.g
    if f.middle % p == 0:
        raise NotOrdinary(p, f.middle)
    g_x = FFPoly.from_ints(f.coeffs[: g + 1], p)
    shape = factor(g_x)
    degrees = shape.degrees
    if degrees == [(1, 1)] * g:
        return Fraction(p, p - 1) ** g
    if degrees == [(g, 1)]:
        return Fraction(p ** g, p ** g - 1)
    raise UnexpectedPFactorization(p, [d for d, m in degrees for _ in range(m)])


def p_factor(f: WeilPolynomial) -> LocalFactor:
    value = nu_p(f)
    return LocalFactor(ell=f.p, kind="p", nu_f=value, nu_K=value, matched=True)


def match_check(
    f: WeilPolynomial,
    ell: int,
    centralizer: Callable[[ClassShape, int, int], int] = centralizer_order,
) -> bool:
    return nu_ell(f, ell, centralizer).matched


def local_factor(f: WeilPolynomial, ell: int) -> LocalFactor:
    """nu_ell for ell != p, nu_p at the characteristic"""
    if ell == f.p:
        return p_factor(f)
    return nu_ell(f, ell)


def local_table(f: WeilPolynomial, ells: Iterable[int]) -> List[LocalRow]:
    rows = []
    for ell in sorted(set(ells)):
        try:
            rows.append(LocalRow(ell=ell, factor=local_factor(f, ell)))
        except DensityError as e:
            logger.warning(f"no local factor at ell={ell}: {e}")
            rows.append(LocalRow(ell=ell, error=e.detail()))
    return rows


def primes_from(ells: Optional[Iterable[int]], bound: Optional[int]) -> List[int]:
    if ells:
        return sorted(set(int(e) for e in ells))
    return [int(e) for e in primerange(2, (bound or 2) + 1)]
