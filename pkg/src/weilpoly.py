"""Exact integer side of a q-Weil polynomial.

Everything here is a pure function of the coefficient list: parsing and
validation, the real Weil polynomial f+, discriminants, the conductor,
Frobenius angles and the archimedean factor.
"""
import logging
from fractions import Fraction
from math import gcd, isqrt
from typing import List, Optional, Sequence, Set, Tuple

import mpmath
from sympy import Poly, Rational, Symbol, factorint, isprime, perfect_power, primerange

from src.errors import (
    ConductorCrossCheckFailed,
    NotMonic,
    NotPrimePower,
    OddDegree,
    RepeatedRoots,
    RootsOffCircle,
    SymmetryViolation,
    WeilValidationError,
    ZeroPolynomial,
)
from src.ffpoly import FFPoly, factor
from src.schemas import (
    ArchimedeanComponents,
    ArchimedeanFactor,
    CyclicGalois,
    FrobeniusAngles,
    RealWeilPolynomial,
    TrigCrossCheck,
    ValidationReport,
    WeilPolynomial,
)

logger = logging.getLogger(__name__)

x = Symbol("x")
T = Symbol("T")

TRIAL_DIVISION_LIMIT = 10 ** 6


def prime_power(q: int) -> Tuple[int, int]:
    if q < 2:
        raise NotPrimePower(q)
    factors = factorint(q)
    if len(factors) != 1:
        raise NotPrimePower(q)
    (p, a), = factors.items()
    return int(p), int(a)


def check_symmetry(coeffs: Sequence[int], q: int, g: int) -> None:
    """coefficient of T^i must equal q^(g-i) times the coefficient of T^(2g-i)"""
    n = 2 * g
    for i in range(g):
        expected = q ** (g - i) * coeffs[i]
        found = coeffs[n - i]
        if found != expected:
            raise SymmetryViolation(i, expected, found)


def parse_weil(coeffs: Sequence[int], q: int, label: Optional[str] = None) -> WeilPolynomial:
    coeffs = [int(c) for c in coeffs]
    if not coeffs:
        raise ZeroPolynomial("coefficient list")
    p, a = prime_power(int(q))
    if coeffs[0] != 1:
        raise NotMonic(coeffs[0])
    n = len(coeffs) - 1
    if n <= 0 or n % 2:
        raise OddDegree(n)
    g = n // 2

    check_symmetry(coeffs, q, g)

    fplus = fplus_coefficients(coeffs, q, g)
    counted = count_roots_in_window(fplus, q)
    if counted != g:
        raise RootsOffCircle(counted, g)

    logger.debug(f"accepted {q}-Weil polynomial of genus {g}: {coeffs}")
    return WeilPolynomial(coeffs=coeffs, q=q, p=p, a=a, g=g, label=label)


# ---------------------------------------------------------------------------
# f+ and the re-expansion identity
# ---------------------------------------------------------------------------

def dickson(k: int, q: int) -> Poly:
    """D_k(x, q) with D_k(T + q/T) = T^k + q^k/T^k"""
    prev, cur = Poly(2, x), Poly(x, x)
    if k == 0:
        return prev
    for _ in range(k - 1):
        prev, cur = cur, Poly(x, x) * cur - q * prev
    return cur


def fplus_coefficients(coeffs: Sequence[int], q: int, g: int) -> List[int]:
    result = Poly(coeffs[g], x)
    for i in range(g):
        result = result + coeffs[i] * dickson(g - i, q)
    return [int(c) for c in result.all_coeffs()]


def reexpand(fplus: Sequence[int], q: int) -> List[int]:
    """T^g * f+(T + q/T) as a descending integer list"""
    g = len(fplus) - 1
    quad = Poly(T ** 2 + q, T)
    total = Poly(0, T)
    for i, c in enumerate(fplus):
        k = g - i
        total = total + int(c) * quad ** k * Poly(T ** (g - k), T)
    return [int(c) for c in total.all_coeffs()]


def real_weil(f: WeilPolynomial) -> RealWeilPolynomial:
    fplus = fplus_coefficients(f.coeffs, f.q, f.g)
    if reexpand(fplus, f.q) != list(f.coeffs):
        raise WeilValidationError("re-expansion T^g f+(T + q/T) does not reproduce f")
    return RealWeilPolynomial(coeffs=fplus, q=f.q)


# ---------------------------------------------------------------------------
# Exact root counting on [-2 sqrt(q), 2 sqrt(q)]
# ---------------------------------------------------------------------------

def _fraction(r) -> Fraction:
    return Fraction(int(r.p), int(r.q))


def _sign(v) -> int:
    return (v > 0) - (v < 0)


def sign_a_plus_b_sqrt(a: Fraction, b: Fraction, q: int) -> int:
    """Exact sign of a + b*sqrt(q)"""
    r = isqrt(q)
    if r * r == q:
        return _sign(a + b * r)
    if b == 0:
        return _sign(a)
    if a == 0:
        return _sign(b)
    if (a > 0) == (b > 0):
        return _sign(a)
    return _sign(a) if a * a > q * b * b else _sign(b)


def eval_at_sqrt(coeffs: Sequence, q: int, c: int) -> Tuple[Fraction, Fraction]:
    """Value at c*sqrt(q) written as a + b*sqrt(q)"""
    a, b = Fraction(0), Fraction(0)
    n = len(coeffs) - 1
    for i, coef in enumerate(coeffs):
        k = n - i
        term = Fraction(coef) * c ** k
        if k % 2 == 0:
            a += term * q ** (k // 2)
        else:
            b += term * q ** ((k - 1) // 2)
    return a, b


def _sign_changes(signs: Sequence[int]) -> int:
    nonzero = [s for s in signs if s != 0]
    return sum(1 for s, t in zip(nonzero, nonzero[1:]) if s != t)


def sturm_count(poly: Poly, q: int) -> int:
    """Distinct roots of a squarefree polynomial in the closed window"""
    chain = poly.sturm()
    low, high = [], []
    for member in chain:
        cs = [_fraction(c) for c in member.all_coeffs()]
        low.append(sign_a_plus_b_sqrt(*eval_at_sqrt(cs, q, -2), q))
        high.append(sign_a_plus_b_sqrt(*eval_at_sqrt(cs, q, 2), q))
    count = _sign_changes(low) - _sign_changes(high)
    if low[0] == 0:
        count += 1
    return count


def count_roots_in_window(fplus: Sequence[int], q: int) -> int:
    """Roots of f+ in [-2 sqrt(q), 2 sqrt(q)], counted with multiplicity"""
    poly = Poly(list(fplus), x)
    if poly.degree() < 1:
        return 0
    _, parts = poly.sqf_list()
    return sum(mult * sturm_count(part, q) for part, mult in parts)


# ---------------------------------------------------------------------------
# Discriminants and the conductor
# ---------------------------------------------------------------------------

def discriminant(coeffs: Sequence[int]) -> int:
    """Discriminant through the subresultant resultant of (p, p')"""
    poly = Poly([int(c) for c in coeffs], x)
    if poly.is_zero or poly.degree() < 1:
        raise ZeroPolynomial()
    return int(poly.discriminant())


def delta_order(f: WeilPolynomial) -> int:
    """disc(f) / q^(g(g-1)), the discriminant of Z[pi, q/pi]"""
    disc = discriminant(f.coeffs)
    scale = f.q ** (f.g * (f.g - 1))
    if disc % scale:
        raise ConductorCrossCheckFailed(f.q, f.g)
    return disc // scale


def delta_from_fplus(f: WeilPolynomial) -> int:
    """disc(f+)^2 * f+(2 sqrt q) * f+(-2 sqrt q), evaluated exactly"""
    fplus = real_weil(f).coeffs
    disc_fplus = discriminant(fplus) if len(fplus) > 2 else 1
    a, b = eval_at_sqrt(fplus, f.q, 2)
    norm = a * a - f.q * b * b
    if norm.denominator != 1:
        raise WeilValidationError("f+(2 sqrt q) f+(-2 sqrt q) is not an integer")
    return disc_fplus ** 2 * int(norm)


def conductor(f: WeilPolynomial) -> int:
    delta_order(f)
    return f.q ** (f.g * (f.g - 1) // 2)


# ---------------------------------------------------------------------------
# Frobenius angles
# ---------------------------------------------------------------------------

def _poly_value(coeffs: Sequence[Fraction], t: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in coeffs:
        acc = acc * t + c
    return acc


def _mpf_to_fraction(v: mpmath.mpf) -> Fraction:
    man, exp = v.man_exp
    man, exp = int(man), int(exp)
    return Fraction(man << exp) if exp >= 0 else Fraction(man, 1 << -exp)


def _polish(simple: Poly, lo: Fraction, hi: Fraction, precision: int) -> Tuple[Fraction, Fraction]:
    """Newton-polish the unique root of `simple` in [lo, hi] and certify it.

    Returns the root approximation and a certified radius.
    """
    if lo == hi:
        return lo, Fraction(0)

    coeffs = [_fraction(c) for c in simple.all_coeffs()]
    radius = Fraction(1, 2 ** max(precision - 8, 1))
    mp_coeffs = [mpmath.mpf(c.numerator) / c.denominator for c in coeffs]
    r = (mpmath.mpf(lo.numerator) / lo.denominator + mpmath.mpf(hi.numerator) / hi.denominator) / 2
    for _ in range(200):
        y, dy = mpmath.polyval(mp_coeffs, r, derivative=True)
        if dy == 0:
            break
        step = y / dy
        r = r - step
        if abs(step) < mpmath.ldexp(1, -precision):
            break

    centre = _mpf_to_fraction(r)
    left = max(lo, centre - radius)
    right = min(hi, centre + radius)
    if left < right:
        s_left = _sign(_poly_value(coeffs, left))
        s_right = _sign(_poly_value(coeffs, right))
        if s_left == 0:
            return left, Fraction(0)
        if s_right == 0:
            return right, Fraction(0)
        if s_left != s_right:
            return centre, radius

    logger.debug("Newton polish not certified, refining isolating interval exactly")
    s, t = simple.refine_root(Rational(lo.numerator, lo.denominator),
                              Rational(hi.numerator, hi.denominator),
                              eps=Rational(1, 2 ** precision))
    s, t = _fraction(s), _fraction(t)
    return (s + t) / 2, (t - s) / 2


def arccos_error(u, delta):
    """Bound |arccos(u) - arccos(v)| for every v in [-1, 1] with |u - v| <= delta

    Uses the derivative bound delta / sqrt(1 - w^2), w = |u| + delta, away from
    the endpoints and the global estimate (pi / sqrt 2) * sqrt(delta) always.
    """
    u, delta = mpmath.mpf(u), mpmath.mpf(delta)
    holder = mpmath.pi / mpmath.sqrt(2) * mpmath.sqrt(delta)
    w = abs(u) + delta
    if w >= 1:
        return min(holder, mpmath.pi)
    return min(holder, delta / mpmath.sqrt(1 - w * w))


def frobenius_angles(f: WeilPolynomial, precision: int = 128) -> FrobeniusAngles:
    """Angles theta_j = arccos(x_j / 2sqrt(q)) of the real roots x_j of f+

    error_bound covers the angles themselves: the root radius is carried
    through arccos by arccos_error, plus the evaluation slack.
    """
    fplus = Poly(real_weil(f).coeffs, x)
    simple = fplus.sqf_part()
    width = Rational(1, 2 ** (precision // 2))

    entries = []
    with mpmath.workprec(precision + 32):
        error = mpmath.mpf(0)
        slack = mpmath.mpf(2) ** -precision
        two_sqrt_q = 2 * mpmath.sqrt(f.q)
        for (s, t), mult in fplus.intervals(eps=width):
            root, radius = _polish(simple, _fraction(s), _fraction(t), precision)
            ratio = (mpmath.mpf(root.numerator) / root.denominator) / two_sqrt_q
            ratio = min(max(ratio, mpmath.mpf(-1)), mpmath.mpf(1))
            theta = mpmath.acos(ratio)
            delta = (mpmath.mpf(radius.numerator) / radius.denominator) / two_sqrt_q + slack
            error = max(error, arccos_error(ratio, delta) + slack)
            entries.extend([(theta, int(mult))] * int(mult))

    entries.sort(key=lambda item: item[0])
    return FrobeniusAngles(
        angles=[theta for theta, _ in entries],
        multiplicities=[mult for _, mult in entries],
        error_bound=error,
        precision_bits=precision,
    )


def disc_trig_crosscheck(f: WeilPolynomial, precision: int = 128) -> TrigCrossCheck:
    """Compare both trigonometric discriminant formulas with the exact integers"""
    g, q = f.g, f.q
    angles = frobenius_angles(f, precision)
    disc_f = discriminant(f.coeffs)
    fplus = real_weil(f).coeffs
    disc_fplus = discriminant(fplus) if g > 1 else 1

    with mpmath.workprec(precision):
        cosines = [mpmath.cos(theta) for theta in angles.angles]
        sines = mpmath.fprod(mpmath.sin(theta) ** 2 for theta in angles.angles)
        pairs = mpmath.fprod(
            (cosines[k] - cosines[t]) ** 2 for k in range(g) for t in range(k + 1, g)
        )
        trig_fplus = mpmath.mpf(2) ** (g * (g - 1)) * mpmath.mpf(q) ** (g * (g - 1) // 2) * pairs
        trig_f = ((-1) ** g * mpmath.mpf(2) ** (2 * g * g)
                  * mpmath.mpf(q) ** (2 * g * g - g) * sines * pairs ** 2)
        tiny = mpmath.ldexp(1, -(precision // 2))

        def relative(trig, exact):
            if exact == 0:
                return None, abs(trig) < tiny
            return abs(trig - exact) / abs(mpmath.mpf(exact)), False

        rel_f, zero_f = relative(trig_f, disc_f)
        rel_fplus, zero_fplus = relative(trig_fplus, disc_fplus)

    return TrigCrossCheck(
        rel_err_f=rel_f,
        rel_err_fplus=rel_fplus,
        zero_match=zero_f or zero_fplus,
    )


# ---------------------------------------------------------------------------
# Archimedean factor
# ---------------------------------------------------------------------------

def archimedean_value(disc_f: int, disc_fplus: int, cond: int, g: int, precision: int = 128) -> mpmath.mpf:
    if disc_fplus == 0:
        raise RepeatedRoots()
    with mpmath.workprec(precision):
        ratio = abs(mpmath.mpf(disc_f) / mpmath.mpf(disc_fplus))
        return mpmath.sqrt(ratio) / (cond * (2 * mpmath.pi) ** g)


def nu_infinity(f: WeilPolynomial, precision: int = 128) -> ArchimedeanFactor:
    disc_f = discriminant(f.coeffs)
    fplus = real_weil(f).coeffs
    disc_fplus = discriminant(fplus) if f.g > 1 else 1
    cond = conductor(f)
    value = archimedean_value(disc_f, disc_fplus, cond, f.g, precision)
    return ArchimedeanFactor(
        value=value,
        components=ArchimedeanComponents(
            cond=cond,
            disc_f=disc_f,
            disc_fplus=disc_fplus,
            delta=delta_order(f),
        ),
        precision_bits=precision,
    )


# ---------------------------------------------------------------------------
# Hypotheses on f
# ---------------------------------------------------------------------------

def subset_sums(degrees: Sequence[int]) -> Set[int]:
    sums = {0}
    for d in degrees:
        sums |= {s + d for s in sums}
    return sums


def dedekind_maximal(f: WeilPolynomial, ell: int) -> bool:
    """Dedekind criterion: is Z[pi] maximal at ell?"""
    shape = factor(FFPoly.from_ints(f.coeffs, ell))
    big_g = Poly(1, T)
    big_h = Poly(1, T)
    for fac, mult in shape.factors:
        lift = Poly(list(fac.coeffs), T)
        big_g = big_g * lift
        big_h = big_h * lift ** (mult - 1)
    rest = [int(c) for c in (Poly(list(f.coeffs), T) - big_g * big_h).all_coeffs()]
    if any(c % ell for c in rest):
        raise WeilValidationError(f"radical lift does not agree with f mod {ell}")
    f_bar = FFPoly.from_ints([c // ell for c in rest], ell)
    g_bar = FFPoly.from_ints([int(c) for c in big_g.all_coeffs()], ell)
    h_bar = FFPoly.from_ints([int(c) for c in big_h.all_coeffs()], ell)
    common = f_bar.gcd(g_bar).gcd(h_bar)
    return common.degree == 0


def _square_primes(n: int) -> Tuple[List[int], List[int]]:
    """Primes whose square divides n, plus cofactors that could not be resolved"""
    squares, unresolved = [], []
    for prime, e in sorted(factorint(n, limit=TRIAL_DIVISION_LIMIT).items()):
        prime = int(prime)
        if isprime(prime):
            if e >= 2:
                squares.append(prime)
            continue
        power = perfect_power(prime)
        if power and isprime(power[0]):
            squares.append(int(power[0]))
        else:
            unresolved.append(prime)
    return squares, unresolved


def maximality(f: WeilPolynomial, delta: int) -> Tuple[str, List[str]]:
    notes = []
    if delta == 0:
        return "failed", ["disc(f) = 0, f has repeated roots"]
    squares, unresolved = _square_primes(abs(delta))
    if not squares and not unresolved:
        return "verified", [f"Delta = {delta} is squarefree"]

    failed = []
    for ell in squares:
        if ell == f.p:
            notes.append(f"p^2 divides Delta, maximality at p={ell} not checked")
            continue
        if dedekind_maximal(f, ell):
            notes.append(f"Dedekind criterion passes at ell={ell}")
        else:
            failed.append(ell)
            notes.append(f"Z[pi] is not maximal at ell={ell}")
    for cofactor in unresolved:
        notes.append(f"unfactored cofactor {cofactor} of Delta")

    if failed:
        return "failed", notes
    if unresolved or f.p in squares:
        return "unverified", notes
    return "verified", notes


def cyclic_screen(f: WeilPolynomial, delta: int, prime_bound: int) -> Tuple[CyclicGalois, List[str]]:
    """Factor f at unramified primes up to the bound.

    Each squarefree factorization must have equal degrees. The degrees of any
    rational factor of f are subset sums at every prime, so an intersection
    equal to {0, 2g} proves irreducibility.
    """
    notes = []
    possible: Optional[Set[int]] = None
    tested = 0
    for ell in primerange(2, prime_bound + 1):
        if ell == f.p or delta % ell == 0:
            continue
        shape = factor(FFPoly.from_ints(f.coeffs, ell))
        tested += 1
        degrees = [fac.degree for fac, _ in shape.factors]
        if len(set(degrees)) != 1:
            notes.append(f"unramified ell={ell} has shape {shape.describe()}")
            return CyclicGalois(status="failed", primes_tested=tested), notes
        sums = subset_sums(degrees)
        possible = sums if possible is None else possible & sums

    irreducible = possible is not None and possible == {0, 2 * f.g}
    if not irreducible:
        notes.append("irreducibility over Q not established below the prime bound")
        return CyclicGalois(status="unverified", primes_tested=tested), notes

    confidence = 1 - 0.75 ** tested
    return CyclicGalois(
        status="probable",
        confidence=confidence,
        primes_tested=tested,
        irreducible=True,
    ), notes


def validate_conditions(f: WeilPolynomial, prime_bound: int = 200, assume_maximal: bool = False) -> ValidationReport:
    notes = []
    delta = delta_order(f)

    ordinary = "verified"
    if gcd(f.middle, f.p) != 1:
        ordinary = "failed"
        notes.append(f"middle coefficient {f.middle} is divisible by p={f.p}")
    elif delta % f.p == 0:
        ordinary = "failed"
        notes.append(f"p={f.p} divides Delta")

    cyclic, cyclic_notes = cyclic_screen(f, delta, prime_bound)
    notes.extend(cyclic_notes)

    maximal, maximal_notes = maximality(f, delta)
    notes.extend(maximal_notes)
    override = assume_maximal and maximal == "unverified"
    if override:
        notes.append("maximality assumed by user override")

    logger.info(
        f"validated {f.name}: ordinary={ordinary} cyclic={cyclic.status} maximal={maximal}"
    )
    return ValidationReport(
        ordinary=ordinary,
        cyclic_galois=cyclic,
        maximal=maximal,
        maximal_override=override,
        notes=notes,
    )
