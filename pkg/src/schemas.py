from enum import Enum
from fractions import Fraction
from typing import Annotated, Any, Dict, List, Literal, Optional

import mpmath
from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    PlainSerializer,
    field_validator,
    model_validator,
)


# ---------------------------------------------------------------------------
# Exact and high-precision scalars. Both serialize as "num/den" strings so
# structured output never goes through a float.
# ---------------------------------------------------------------------------

def _parse_rational(v: Any) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int) and not isinstance(v, bool):
        return Fraction(v)
    if isinstance(v, str):
        try:
            return Fraction(v.strip())
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"Invalid rational '{v}', expected 'num/den'")
    raise ValueError(f"Invalid rational of type {type(v).__name__}")


def render_rational(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _parse_real(v: Any) -> mpmath.mpf:
    if isinstance(v, mpmath.mpf):
        return v
    if isinstance(v, bool):
        raise ValueError("Invalid real: boolean")
    if isinstance(v, int):
        with mpmath.workprec(max(mpmath.mp.prec, v.bit_length() + 1)):
            return mpmath.mpf(v)
    if isinstance(v, float):
        return mpmath.mpf(v)
    if isinstance(v, str):
        text = v.strip()
        if "/" in text:
            num, den = (int(part) for part in text.split("/", 1))
            if den <= 0:
                raise ValueError(f"Invalid real '{v}': denominator must be positive")
            if den & (den - 1) == 0:
                exp = -(den.bit_length() - 1)
                with mpmath.workprec(max(mpmath.mp.prec, abs(num).bit_length() + 1)):
                    return mpmath.mpf((num, exp))
            return mpmath.mpf(num) / den
        try:
            return mpmath.mpf(text)
        except ValueError:
            raise ValueError(f"Invalid real '{v}'")
    raise ValueError(f"Invalid real of type {type(v).__name__}")


def render_real(x: mpmath.mpf) -> str:
    """Exact dyadic rendering of a binary float"""
    man, exp = x.man_exp
    man = int(man)
    exp = int(exp)
    if exp >= 0:
        return f"{man << exp}/1"
    return f"{man}/{1 << -exp}"


Rational = Annotated[
    Fraction,
    BeforeValidator(_parse_rational),
    PlainSerializer(render_rational, return_type=str),
]

HighPrecision = Annotated[
    mpmath.mpf,
    BeforeValidator(_parse_real),
    PlainSerializer(render_real, return_type=str),
]


class Record(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


# ---------------------------------------------------------------------------
# Weil polynomials
# ---------------------------------------------------------------------------

class WeilPolynomial(Record):
    coeffs: List[int] = Field(..., min_length=3)
    q: int = Field(..., ge=2)
    p: int
    a: int = Field(..., ge=1)
    g: int = Field(..., ge=1)
    label: Optional[str] = None

    @model_validator(mode="after")
    def check_degree(self):
        if len(self.coeffs) != 2 * self.g + 1:
            raise ValueError(f"expected {2 * self.g + 1} coefficients for g={self.g}")
        if self.p ** self.a != self.q:
            raise ValueError(f"q={self.q} is not {self.p}^{self.a}")
        return self

    @property
    def middle(self) -> int:
        return self.coeffs[self.g]

    @property
    def name(self) -> str:
        return self.label or ",".join(str(c) for c in self.coeffs)


class RealWeilPolynomial(Record):
    coeffs: List[int] = Field(..., min_length=2)
    q: int = Field(..., ge=2)

    @property
    def g(self) -> int:
        return len(self.coeffs) - 1


class CyclicGalois(Record):
    status: Literal["probable", "failed", "unverified"]
    confidence: Optional[float] = None
    primes_tested: int = 0
    irreducible: bool = False


class ValidationReport(Record):
    ordinary: Literal["verified", "failed"]
    principally_polarizable: Literal["assumed"] = "assumed"
    cyclic_galois: CyclicGalois
    maximal: Literal["verified", "unverified", "failed"]
    maximal_override: bool = False
    notes: List[str] = []

    def has_failure(self) -> bool:
        return (
            self.ordinary == "failed"
            or self.cyclic_galois.status == "failed"
            or self.maximal == "failed"
        )


class FrobeniusAngles(Record):
    angles: List[HighPrecision]
    multiplicities: List[int]
    error_bound: HighPrecision
    precision_bits: int

    @model_validator(mode="after")
    def check_order(self):
        if len(self.angles) != len(self.multiplicities):
            raise ValueError("angles and multiplicities differ in length")
        if any(b < a for a, b in zip(self.angles, self.angles[1:])):
            raise ValueError("angles must be ascending")
        return self

    @property
    def repeated(self) -> bool:
        return any(m > 1 for m in self.multiplicities)


class TrigCrossCheck(Record):
    rel_err_f: Optional[HighPrecision] = None
    rel_err_fplus: Optional[HighPrecision] = None
    zero_match: bool = False


class ArchimedeanComponents(Record):
    cond: int
    disc_f: int
    disc_fplus: int
    delta: int


class ArchimedeanFactor(Record):
    value: HighPrecision
    components: ArchimedeanComponents
    precision_bits: int


class ArchimedeanReport(Record):
    fplus: List[int]
    angles: FrobeniusAngles
    nu_infinity: ArchimedeanFactor
    crosscheck: TrigCrossCheck


class InvalidInput(Record):
    valid: bool = False
    error: str


# ---------------------------------------------------------------------------
# Local factors
# ---------------------------------------------------------------------------

class ShapeVariant(str, Enum):
    SPLIT = "Split_1x2g"
    PAIRS = "Pairs_2xg"
    TWO_G = "TwoG"
    ONE_TWO_G_FULL = "OneTwoG_full"
    RAMIFIED_LINEAR = "RamifiedLinear_1_2g"
    RAMIFIED_PAIR = "RamifiedPair_1g1g"
    RAMIFIED_QUAD = "RamifiedQuad_2g"

    @property
    def label(self) -> str:
        return SHAPE_LABELS[self]

    @property
    def ramified(self) -> bool:
        return self in (
            ShapeVariant.RAMIFIED_LINEAR,
            ShapeVariant.RAMIFIED_PAIR,
            ShapeVariant.RAMIFIED_QUAD,
        )


SHAPE_LABELS = {
    ShapeVariant.SPLIT: "[1]_1...[1]_2g",
    ShapeVariant.PAIRS: "[2]_1...[2]_g",
    ShapeVariant.TWO_G: "[2g]",
    ShapeVariant.ONE_TWO_G_FULL: "[g]_1[g]_2",
    ShapeVariant.RAMIFIED_LINEAR: "[1]^2g",
    ShapeVariant.RAMIFIED_PAIR: "[1]_1^g[1]_2^g",
    ShapeVariant.RAMIFIED_QUAD: "[2]^g",
}


class ClassShape(Record):
    variant: ShapeVariant
    e: int = Field(..., ge=1)
    f_res: int = Field(..., ge=1)
    r: int = Field(..., ge=1)

    @property
    def label(self) -> str:
        return self.variant.label


class CharacterPair(Record):
    # chi_ell is the exponent k of exp(pi*i*k/g), or None for the zero value
    chi_ell: Optional[int] = None
    chi_g_ell: Literal[-1, 0, 1]


class LocalFactor(Record):
    ell: int
    kind: Literal["ell", "p"] = "ell"
    shape: Optional[ClassShape] = None
    nu_f: Rational
    nu_K: Rational
    matched: bool

    @model_validator(mode="after")
    def check_matched(self):
        if self.matched != (self.nu_f == self.nu_K):
            raise ValueError("matched flag disagrees with nu_f == nu_K")
        return self


class LocalRow(Record):
    ell: int
    factor: Optional[LocalFactor] = None
    error: Optional[str] = None


# ---------------------------------------------------------------------------
# Group oracle
# ---------------------------------------------------------------------------

class CensusRecord(Record):
    charpoly: List[int]
    multiplier: int
    count: int = Field(..., ge=0)


class CharPolyCensus(Record):
    ell: int
    g: int
    group_order: int
    records: List[CensusRecord]
    generators: int = 0

    @property
    def total(self) -> int:
        return sum(r.count for r in self.records)

    def count(self, charpoly_ascending: List[int], multiplier: int = 1) -> int:
        for r in self.records:
            if r.charpoly == list(charpoly_ascending) and r.multiplier == multiplier:
                return r.count
        return 0


class CentralizerCell(Record):
    variant: ShapeVariant
    ell: int
    g: int
    # "recorded": a mismatch listed in gsp_oracle.RECORDED_DISCREPANCIES with exactly these values
    status: Literal["equal", "mismatch", "recorded", "unrealizable", "error"]
    formula: Optional[int] = None
    enumerated: Optional[int] = None
    class_polynomial: Optional[List[int]] = None
    multiplier: Optional[int] = None
    detail: Optional[str] = None


class RepresentativeReport(Record):
    ell: int
    fbar: List[int]
    multiplier: int
    matrix: List[List[int]]
    charpoly_ok: bool
    cyclic: bool
    similitude_ok: bool
    centralizer: Optional[int] = None


# ---------------------------------------------------------------------------
# Products and comparison
# ---------------------------------------------------------------------------

class Snapshot(Record):
    bound: int
    value: HighPrecision


class ProductCheckpoint(Record):
    version: int = 1
    label: str
    coeffs: List[int]
    q: int
    B: int = Field(..., ge=2)
    source: Literal["f", "K"] = "f"
    precision_bits: int = Field(..., ge=80)
    exact_cutoff: int
    log_product: HighPrecision
    log_compensation: HighPrecision
    exact_product: Optional[Rational] = None
    primes_consumed: int = 0
    history: List[Snapshot] = []
    failed_at: Optional[int] = None
    failure: Optional[str] = None

    @field_validator("history")
    @classmethod
    def validate_history(cls, v):
        bounds = [s.bound for s in v]
        if any(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:])):
            raise ValueError("snapshot bounds must be strictly ascending")
        return v


class ReferenceFixture(Record):
    label: str = Field(..., min_length=1)
    coeffs: List[int]
    q: int
    h_K: int = Field(..., ge=1)
    h_Kplus: int = Field(..., ge=1)
    omega_K: int = Field(..., ge=1)
    provenance: str = Field(..., min_length=1)

    @property
    def reference(self) -> Fraction:
        return Fraction(self.h_K, self.omega_K * self.h_Kplus)


class WeilFixture(Record):
    label: str = Field(..., min_length=1)
    coeffs: List[int] = Field(..., min_length=3)
    q: int = Field(..., ge=2)


class ComparisonReport(Record):
    label: str
    bound: int
    nu_infinity: HighPrecision
    predicted: HighPrecision
    reference: Rational
    rel_error: HighPrecision
    oscillation_band: HighPrecision
    snapshots_used: int


# ---------------------------------------------------------------------------
# Command surface
# ---------------------------------------------------------------------------

class RunConfig(Record):
    command: str
    coeffs: Optional[List[int]] = None
    q: Optional[int] = None
    label: Optional[str] = None
    prime_bound: int = Field(1000, ge=2)
    precision_bits: int = Field(128, ge=53)
    seed: int = 0
    checkpoint_path: Optional[str] = None
    fixture_path: Optional[str] = None
    output_format: Literal["human", "structured"] = "human"
    threads: int = Field(1, ge=1)
    bound: Optional[int] = None
    ells: Optional[List[int]] = None
    g: int = Field(3, ge=1)
    exact_cutoff: int = Field(10000, ge=2)
    source: Literal["f", "K"] = "f"
    assume_maximal: bool = False


class Envelope(Record):
    version: str
    config: RunConfig
    results: Any
    timings: Optional[Dict[str, float]] = None
