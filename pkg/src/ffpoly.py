"""Dense polynomials over F_ell and their factorization.

Coefficients are stored descending (leading coefficient first) as plain
ints in [0, ell). Arithmetic and the factorization pipeline are delegated
to sympy's galoistools, which works on the same dense list layout.
"""
import logging
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Iterator, List, Sequence, Tuple

from sympy.core import random as sympy_random
from sympy.polys.domains import ZZ
from sympy.polys.galoistools import (
    gf_add,
    gf_ddf_zassenhaus,
    gf_degree,
    gf_edf_zassenhaus,
    gf_eval,
    gf_expand,
    gf_from_int_poly,
    gf_gcd,
    gf_irreducible_p,
    gf_monic,
    gf_mul,
    gf_pow,
    gf_quo,
    gf_rem,
    gf_sqf_list,
    gf_sub,
)

logger = logging.getLogger(__name__)


def _ints(coeffs: Iterable) -> Tuple[int, ...]:
    return tuple(int(c) for c in coeffs)


@dataclass(frozen=True)
class FFPoly:
    """Polynomial over F_ell, descending coefficients, zero polynomial is ()"""

    coeffs: Tuple[int, ...]
    ell: int

    @classmethod
    def from_ints(cls, coeffs: Sequence[int], ell: int) -> "FFPoly":
        return cls(_ints(gf_from_int_poly(list(coeffs), ell)), ell)

    @classmethod
    def from_ascending(cls, coeffs: Sequence[int], ell: int) -> "FFPoly":
        return cls.from_ints(list(reversed(list(coeffs))), ell)

    @classmethod
    def monomial(cls, degree: int, ell: int) -> "FFPoly":
        return cls((1,) + (0,) * degree, ell)

    @classmethod
    def constant(cls, c: int, ell: int) -> "FFPoly":
        return cls.from_ints([c], ell)

    def _wrap(self, raw) -> "FFPoly":
        return FFPoly(_ints(raw), self.ell)

    def _check(self, other: "FFPoly"):
        if other.ell != self.ell:
            raise ValueError(f"moduli differ: {self.ell} vs {other.ell}")

    @property
    def degree(self) -> int:
        return gf_degree(list(self.coeffs))

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def ascending(self) -> Tuple[int, ...]:
        return tuple(reversed(self.coeffs))

    def __add__(self, other: "FFPoly") -> "FFPoly":
        self._check(other)
        return self._wrap(gf_add(list(self.coeffs), list(other.coeffs), self.ell, ZZ))

    def __sub__(self, other: "FFPoly") -> "FFPoly":
        self._check(other)
        return self._wrap(gf_sub(list(self.coeffs), list(other.coeffs), self.ell, ZZ))

    def __mul__(self, other: "FFPoly") -> "FFPoly":
        self._check(other)
        return self._wrap(gf_mul(list(self.coeffs), list(other.coeffs), self.ell, ZZ))

    def __pow__(self, n: int) -> "FFPoly":
        return self._wrap(gf_pow(list(self.coeffs), n, self.ell, ZZ))

    def __floordiv__(self, other: "FFPoly") -> "FFPoly":
        self._check(other)
        return self._wrap(gf_quo(list(self.coeffs), list(other.coeffs), self.ell, ZZ))

    def __mod__(self, other: "FFPoly") -> "FFPoly":
        self._check(other)
        return self._wrap(gf_rem(list(self.coeffs), list(other.coeffs), self.ell, ZZ))

    def gcd(self, other: "FFPoly") -> "FFPoly":
        self._check(other)
        return self._wrap(gf_gcd(list(self.coeffs), list(other.coeffs), self.ell, ZZ))

    def monic(self) -> "FFPoly":
        _, f = gf_monic(list(self.coeffs), self.ell, ZZ)
        return self._wrap(f)

    def __call__(self, a: int) -> int:
        return int(gf_eval(list(self.coeffs), a % self.ell, self.ell, ZZ))

    def is_irreducible(self) -> bool:
        if self.degree < 1:
            return False
        return bool(gf_irreducible_p(list(self.monic().coeffs), self.ell, ZZ))

    def dual(self, m: int) -> "FFPoly":
        """Monic polynomial whose roots are m/lambda for the roots lambda of self"""
        d = self.degree
        c = self.coeffs
        raw = [c[k] * pow(m, d - k, self.ell) for k in range(d, -1, -1)]
        return FFPoly.from_ints(raw, self.ell).monic()

    def sort_key(self) -> Tuple[int, Tuple[int, ...]]:
        return (self.degree, self.coeffs)

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        terms = []
        n = self.degree
        for i, c in enumerate(self.coeffs):
            e = n - i
            if c == 0:
                continue
            if e == 0:
                terms.append(str(c))
            elif e == 1:
                terms.append("T" if c == 1 else f"{c}*T")
            else:
                terms.append(f"T^{e}" if c == 1 else f"{c}*T^{e}")
        return " + ".join(terms)


@dataclass(frozen=True)
class FactorizationShape:
    """Complete factorization into monic irreducibles with multiplicities"""

    factors: Tuple[Tuple[FFPoly, int], ...]
    ell: int

    @property
    def ramified(self) -> bool:
        return any(mult > 1 for _, mult in self.factors)

    @property
    def degrees(self) -> List[Tuple[int, int]]:
        return [(f.degree, mult) for f, mult in self.factors]

    def describe(self) -> str:
        parts = []
        for f, mult in self.factors:
            parts.append(f"[{f.degree}]" + (f"^{mult}" if mult > 1 else ""))
        return "".join(parts) or "[]"

    def expand(self) -> FFPoly:
        raw = gf_expand([(list(f.coeffs), mult) for f, mult in self.factors], self.ell, ZZ)
        return FFPoly(_ints(raw), self.ell)


def seed_splitting(seed: int) -> None:
    """Seed the generator used by equal-degree splitting"""
    sympy_random.seed(seed)


def factor(poly: FFPoly) -> FactorizationShape:
    """Squarefree decomposition, distinct-degree, then equal-degree splitting.

    The result is independent of the random choices made while splitting
    because factors are returned in canonical order (degree, then
    coefficients).
    """
    ell = poly.ell
    if poly.degree < 1:
        return FactorizationShape((), ell)

    _, monic = gf_monic(list(poly.coeffs), ell, ZZ)
    found = []
    for sqf_part, mult in gf_sqf_list(monic, ell, ZZ)[1]:
        for block, d in gf_ddf_zassenhaus(sqf_part, ell, ZZ):
            for irreducible in gf_edf_zassenhaus(block, d, ell, ZZ):
                found.append((FFPoly(_ints(irreducible), ell), mult))

    found.sort(key=lambda item: (item[0].sort_key(), item[1]))
    logger.debug(f"factored {poly} mod {ell}: {[(str(f), m) for f, m in found]}")
    return FactorizationShape(tuple(found), ell)


def monic_polynomials(degree: int, ell: int) -> Iterator[FFPoly]:
    """All monic polynomials of the given degree, lexicographic in the coefficients"""
    for tail in product(range(ell), repeat=degree):
        yield FFPoly((1,) + tail, ell)


def self_dual_lift(h: FFPoly, m: int) -> FFPoly:
    """T^deg(h) * h(T + m/T), the self-dual polynomial of multiplier m"""
    ell = h.ell
    g = h.degree
    quad = FFPoly.from_ints([1, 0, m], ell)
    total = FFPoly((), ell)
    for i, c in enumerate(h.coeffs):
        k = g - i
        if c == 0:
            continue
        term = FFPoly.constant(c, ell) * quad ** k * FFPoly.monomial(g - k, ell)
        total = total + term
    return total
