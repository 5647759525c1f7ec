"""Named failure conditions raised by the density pipeline.

Statuses that are reported rather than raised (ordinarity, cyclicity,
maximality) live on ValidationReport instead.
"""


class WeilDensityError(Exception):
    """Base class for every error raised by this package"""

    def detail(self) -> str:
        return f"{type(self).__name__}: {self}"


# --- polynomial validation -------------------------------------------------

class WeilValidationError(WeilDensityError):
    """Input is not a q-Weil polynomial"""


class NotPrimePower(WeilValidationError):
    def __init__(self, q: int):
        super().__init__(f"q={q} is not a prime power")
        self.q = q


class NotMonic(WeilValidationError):
    def __init__(self, leading: int):
        super().__init__(f"leading coefficient is {leading}, expected 1")
        self.leading = leading


class OddDegree(WeilValidationError):
    def __init__(self, degree: int):
        super().__init__(f"degree {degree} is not a positive even number")
        self.degree = degree


class SymmetryViolation(WeilValidationError):
    def __init__(self, index: int, expected: int, found: int):
        super().__init__(
            f"coefficient of T^{index} is {found}, functional equation requires {expected}"
        )
        self.index = index
        self.expected = expected
        self.found = found


class RootsOffCircle(WeilValidationError):
    def __init__(self, counted: int, g: int):
        super().__init__(
            f"real Weil polynomial has {counted} roots in [-2*sqrt(q), 2*sqrt(q)], expected {g}"
        )
        self.counted = counted
        self.g = g


class ZeroPolynomial(WeilDensityError):
    def __init__(self, what: str = "polynomial"):
        super().__init__(f"{what} has degree < 1")


class RepeatedRoots(WeilDensityError):
    def __init__(self):
        super().__init__("disc(f+) = 0, archimedean factor undefined")


class ConductorCrossCheckFailed(WeilDensityError):
    def __init__(self, q: int, g: int):
        super().__init__(f"q^(g(g-1)) = {q}^{g * (g - 1)} does not divide disc(f)")


# --- local densities -------------------------------------------------------

class DensityError(WeilDensityError):
    """A local factor could not be produced"""


class NotRelevant(DensityError):
    def __init__(self, description: str):
        super().__init__(f"factorization shape {description} is not a relevant shape")
        self.description = description


class UnsupportedNonSemisimple(DensityError):
    def __init__(self, g: int, variant: str = ""):
        suffix = f" ({variant})" if variant else ""
        super().__init__(f"no centralizer formula for non-semisimple classes when g={g}{suffix}")
        self.g = g


class EqualsP(DensityError):
    def __init__(self, ell: int):
        super().__init__(f"ell={ell} is the characteristic; use nu_p")
        self.ell = ell


class UnexpectedPFactorization(DensityError):
    def __init__(self, p: int, degrees):
        super().__init__(f"g_X mod {p} has factor degrees {list(degrees)}, expected split or irreducible")
        self.p = p


class NotOrdinary(DensityError):
    def __init__(self, p: int, middle: int):
        super().__init__(f"middle coefficient {middle} is divisible by p={p}")


class NotOddPrimeGenus(DensityError):
    def __init__(self, g: int):
        super().__init__(f"g={g} is not an odd prime (or the g=1 sanity tier)")
        self.g = g


# --- matrix oracle ---------------------------------------------------------

class OracleError(WeilDensityError):
    """Explicit group computation failed or was refused"""


class DimensionMismatch(OracleError):
    def __init__(self, n: int, expected: int):
        super().__init__(f"matrix of size {n} does not match form of size {expected}")


class NoInvariantForm(OracleError):
    def __init__(self, reason: str):
        super().__init__(f"no invertible alternating form: {reason}")


class GenerationStalled(OracleError):
    def __init__(self, size: int, order: int, generators: int):
        super().__init__(
            f"closure stalled at {size} of {order} elements after {generators} generators"
        )
        self.size = size


class ResourceGuardError(WeilDensityError):
    """Computation refused because it exceeds a hard-coded size guard"""


class TooLarge(ResourceGuardError):
    def __init__(self, what: str, size: int, limit: int):
        super().__init__(f"{what} has {size} elements, limit is {limit}")


# --- aggregation -----------------------------------------------------------

class FixtureMismatch(WeilDensityError):
    def __init__(self, expected: str, found: str):
        super().__init__(f"fixture label '{found}' does not match checkpoint label '{expected}'")


class CheckpointError(WeilDensityError):
    """Checkpoint cannot be resumed with the requested arguments"""
