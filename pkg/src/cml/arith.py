"""Scalars for the measure algebra: exact rationals, exact complex rationals,
exact cyclotomic numbers, and floats carrying an absolute error bound.

Promotion order for mixed arithmetic is

    ComplexRational  <  Cyclotomic  <  ApproxComplex

so an expression stays exact as long as every operand is exact.  Cyclotomic
values collapse back to ComplexRational whenever they lie in Q(i).

Angles are stored as fractions of a full turn: ``TurnAngle(p, q)`` is the
point 2*pi*p/q of the circle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational as _RationalABC
from typing import Union

import mpmath

from .errors import MAX_CONDUCTOR, InvalidAngleError, InvalidInputError, ResourceLimitError

Rational = Fraction

# rounding slack charged per floating point operation, in ulps
ULP_SLACK = 4
# working precision (bits) for reference evaluations of exponentials
_MP_BITS = 96


def _ulp(x: float) -> float:
    return math.ulp(abs(x))


# --------------------------------------------------------------------------
# exact complex rationals


@dataclass(frozen=True, eq=False)
class ComplexRational:
    re: Fraction
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "re", Fraction(self.re))
        object.__setattr__(self, "im", Fraction(self.im))

    @classmethod
    def coerce(cls, value) -> "ComplexRational":
        if isinstance(value, ComplexRational):
            return value
        if isinstance(value, (int, _RationalABC)):
            return cls(Fraction(value))
        if isinstance(value, str):
            return cls(Fraction(value))
        raise TypeError(f"cannot make an exact complex rational from {value!r}")

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def conjugate(self) -> "ComplexRational":
        return ComplexRational(self.re, -self.im)

    def norm2(self) -> Fraction:
        """Exact squared modulus."""
        return self.re * self.re + self.im * self.im

    def is_real(self) -> bool:
        return self.im == 0

    def to_complex(self) -> complex:
        return complex(float(self.re), float(self.im))

    def to_approx(self) -> "ApproxComplex":
        return ApproxComplex.from_fractions(self.re, self.im)

    def __neg__(self):
        return ComplexRational(-self.re, -self.im)

    def __add__(self, other):
        other = _as_scalar(other)
        if isinstance(other, ComplexRational):
            return ComplexRational(self.re + other.re, self.im + other.im)
        return NotImplemented if other is None else _promote(self, other)[0] + other

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-_as_scalar(other))

    def __rsub__(self, other):
        return _as_scalar(other) + (-self)

    def __mul__(self, other):
        other = _as_scalar(other)
        if isinstance(other, ComplexRational):
            return ComplexRational(
                self.re * other.re - self.im * other.im,
                self.re * other.im + self.im * other.re,
            )
        return NotImplemented if other is None else _promote(self, other)[0] * other

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_scalar(other)
        if not isinstance(other, ComplexRational):
            return NotImplemented
        d = other.norm2()
        if d == 0:
            raise ZeroDivisionError("division by exact zero")
        num = self * other.conjugate()
        return ComplexRational(num.re / d, num.im / d)

    def __eq__(self, other):
        other = _as_scalar(other)
        if isinstance(other, ComplexRational):
            return self.re == other.re and self.im == other.im
        if isinstance(other, Cyclotomic):
            return other == self
        return NotImplemented if other is None else False

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self):
        if self.im == 0:
            return f"ComplexRational({self.re})"
        return f"ComplexRational({self.re}, {self.im})"

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        sign = "+" if self.im >= 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}i"


# --------------------------------------------------------------------------
# floats with error bounds


@dataclass(frozen=True)
class ApproxComplex:
    """A complex float together with an absolute error bound ``err``.

    The true value lies in the closed disk of radius ``err`` around
    ``re + i*im``.  Every operation widens ``err`` by the propagated error
    and a rounding slack of ``ULP_SLACK`` ulps of each intermediate.
    """

    re: float
    im: float = 0.0
    err: float = 0.0

    def __post_init__(self):
        if not (self.err >= 0.0):
            raise InvalidInputError(f"error bound must be >= 0, got {self.err}")

    @classmethod
    def from_fractions(cls, re: Fraction, im: Fraction = Fraction(0)) -> "ApproxComplex":
        fr, fi = float(re), float(im)
        # float() rounds to nearest: half an ulp each
        err = 0.0
        if Fraction(fr) != re:
            err += _ulp(fr)
        if Fraction(fi) != im:
            err += _ulp(fi)
        return cls(fr, fi, err)

    def to_complex(self) -> complex:
        return complex(self.re, self.im)

    def to_approx(self) -> "ApproxComplex":
        return self

    def abs(self) -> float:
        return math.hypot(self.re, self.im)

    def abs_bounds(self) -> tuple[float, float]:
        """Outward enclosure of the modulus of the true value."""
        h = self.abs()
        slack = ULP_SLACK * _ulp(h)
        return max(0.0, h - self.err - slack), h + self.err + slack

    def is_zero(self) -> bool:
        return self.re == 0.0 and self.im == 0.0 and self.err == 0.0

    def conjugate(self) -> "ApproxComplex":
        return ApproxComplex(self.re, -self.im, self.err)

    def __neg__(self):
        return ApproxComplex(-self.re, -self.im, self.err)

    def __add__(self, other):
        other = _as_scalar(other)
        if other is None:
            return NotImplemented
        b = other.to_approx()
        re = self.re + b.re
        im = self.im + b.im
        err = self.err + b.err + ULP_SLACK * (_ulp(re) + _ulp(im))
        return ApproxComplex(re, im, err)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-_as_scalar(other))

    def __rsub__(self, other):
        return _as_scalar(other) + (-self)

    def __mul__(self, other):
        other = _as_scalar(other)
        if other is None:
            return NotImplemented
        b = other.to_approx()
        rr, ii = self.re * b.re, self.im * b.im
        ri, ir = self.re * b.im, self.im * b.re
        re, im = rr - ii, ri + ir
        slack = ULP_SLACK * (_ulp(rr) + _ulp(ii) + _ulp(ri) + _ulp(ir) + _ulp(re) + _ulp(im))
        ma = self.abs() * (1 + 2**-50)
        mb = b.abs() * (1 + 2**-50)
        err = ma * b.err + mb * self.err + self.err * b.err
        err = err * (1 + 2**-48) + slack
        return ApproxComplex(re, im, err)

    __rmul__ = __mul__

    def scale(self, c: float) -> "ApproxComplex":
        re, im = self.re * c, self.im * c
        return ApproxComplex(re, im, self.err * abs(c) * (1 + 2**-48) + ULP_SLACK * (_ulp(re) + _ulp(im)))


# --------------------------------------------------------------------------
# exact cyclotomic numbers


def _poly_divmod(num: list, den: list) -> tuple[list, list]:
    """Polynomial division, coefficient lists low-to-high; ``den`` is monic."""
    num = list(num)
    dd = len(den) - 1
    if len(num) - 1 < dd:
        return [0], num
    quot = [0] * (len(num) - dd)
    for i in range(len(num) - 1, dd - 1, -1):
        c = num[i]
        if c:
            quot[i - dd] = c
            for j in range(dd + 1):
                num[i - dd + j] -= c * den[j]
    return quot, num[:dd] if dd else [0]


@lru_cache(maxsize=None)
def cyclotomic_polynomial(n: int) -> tuple[int, ...]:
    """Integer coefficients (low to high) of the n-th cyclotomic polynomial."""
    if n < 1:
        raise InvalidInputError("cyclotomic index must be positive")
    if n > MAX_CONDUCTOR:
        raise ResourceLimitError(f"exact arithmetic in Q(zeta_{n}) exceeds the conductor cap {MAX_CONDUCTOR}")
    poly = [-1] + [0] * (n - 1) + [1]
    for d in range(1, n):
        if n % d == 0:
            poly, rem = _poly_divmod(poly, list(cyclotomic_polynomial(d)))
            assert not any(rem)
    return tuple(poly)


@lru_cache(maxsize=None)
def euler_phi(n: int) -> int:
    return len(cyclotomic_polynomial(n)) - 1


@lru_cache(maxsize=4096)
def _reduced_power(n: int, k: int) -> tuple[int, ...]:
    """zeta_n**k written in the power basis 1, zeta_n, ..., zeta_n**(phi(n)-1)."""
    deg = euler_phi(n)
    k %= n
    if k < deg:
        v = [0] * deg
        v[k] = 1
        return tuple(v)
    poly = [0] * (k + 1)
    poly[k] = 1
    _, rem = _poly_divmod(poly, list(cyclotomic_polynomial(n)))
    rem = list(rem) + [0] * (deg - len(rem))
    return tuple(rem[:deg])


class Cyclotomic:
    """Exact element of the cyclotomic field Q(zeta_n), zeta_n = exp(2*pi*i/n).

    Stored in the power basis of degree phi(n).  Only the arithmetic needed for
    convolving atomic measures is provided: ring operations, conjugation and
    equality.  Elements of different conductors are compared by lifting both
    to the least common multiple.
    """

    __slots__ = ("n", "coeffs")

    def __init__(self, n: int, coeffs):
        deg = euler_phi(n)
        coeffs = tuple(Fraction(c) for c in coeffs)
        if len(coeffs) != deg:
            raise InvalidInputError(f"Q(zeta_{n}) has degree {deg}, got {len(coeffs)} coefficients")
        self.n = n
        self.coeffs = coeffs

    @classmethod
    def from_powers(cls, n: int, powers: dict) -> "Cyclotomic":
        """Sum of ``c * zeta_n**k`` over ``powers = {k: c}``."""
        deg = euler_phi(n)
        acc = [Fraction(0)] * deg
        for k, c in powers.items():
            c = Fraction(c)
            if not c:
                continue
            for j, v in enumerate(_reduced_power(n, k)):
                if v:
                    acc[j] += c * v
        return cls(n, acc)

    @classmethod
    def from_complex_rational(cls, z: ComplexRational, n: int = 4) -> "Cyclotomic":
        if n % 4:
            if z.im:
                raise InvalidInputError("i is not in Q(zeta_n) unless 4 | n")
            return cls.from_powers(n, {0: z.re})
        return cls.from_powers(n, {0: z.re, n // 4: z.im})

    def lift(self, m: int) -> "Cyclotomic":
        if m == self.n:
            return self
        if m % self.n:
            raise InvalidInputError(f"cannot lift Q(zeta_{self.n}) into Q(zeta_{m})")
        step = m // self.n
        return Cyclotomic.from_powers(m, {k * step: c for k, c in enumerate(self.coeffs) if c})

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def conjugate(self) -> "Cyclotomic":
        return Cyclotomic.from_powers(self.n, {-k: c for k, c in enumerate(self.coeffs) if c})

    def to_complex_rational(self) -> ComplexRational | None:
        """The same number as a ComplexRational, or None if it is not in Q(i)."""
        if not any(self.coeffs[1:]):
            return ComplexRational(self.coeffs[0])
        m = self.n * 4 // math.gcd(self.n, 4)
        c = self.lift(m).coeffs
        vi = _reduced_power(m, m // 4)
        j = next(idx for idx in range(1, len(vi)) if vi[idx])
        b = c[j] / vi[j]
        rest = [c[idx] - b * vi[idx] for idx in range(len(c))]
        if any(rest[1:]):
            return None
        return ComplexRational(rest[0], b)

    def to_approx(self) -> ApproxComplex:
        acc = ApproxComplex(0.0)
        for k, c in enumerate(self.coeffs):
            if c:
                acc = acc + _expi_turns(Fraction(-k, self.n)) * ComplexRational(c).to_approx()
        return acc

    def to_complex(self) -> complex:
        return self.to_approx().to_complex()

    def _common(self, other: "Cyclotomic") -> tuple["Cyclotomic", "Cyclotomic"]:
        m = self.n * other.n // math.gcd(self.n, other.n)
        return self.lift(m), other.lift(m)

    def __neg__(self):
        return Cyclotomic(self.n, [-c for c in self.coeffs])

    def __add__(self, other):
        other = _as_scalar(other)
        if other is None:
            return NotImplemented
        if isinstance(other, ApproxComplex):
            return self.to_approx() + other
        if isinstance(other, ComplexRational):
            other = Cyclotomic.from_complex_rational(other)
        a, b = self._common(other)
        return Cyclotomic(a.n, [x + y for x, y in zip(a.coeffs, b.coeffs)])

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-_as_scalar(other))

    def __rsub__(self, other):
        return _as_scalar(other) + (-self)

    def __mul__(self, other):
        other = _as_scalar(other)
        if other is None:
            return NotImplemented
        if isinstance(other, ApproxComplex):
            return self.to_approx() * other
        if isinstance(other, ComplexRational) and other.im == 0:
            return Cyclotomic(self.n, [c * other.re for c in self.coeffs])
        if isinstance(other, ComplexRational):
            other = Cyclotomic.from_complex_rational(other)
        a, b = self._common(other)
        powers: dict[int, Fraction] = {}
        for i, x in enumerate(a.coeffs):
            if not x:
                continue
            for j, y in enumerate(b.coeffs):
                if y:
                    powers[i + j] = powers.get(i + j, 0) + x * y
        return Cyclotomic.from_powers(a.n, powers)

    __rmul__ = __mul__

    def __eq__(self, other):
        other = _as_scalar(other)
        if other is None:
            return NotImplemented
        if isinstance(other, ApproxComplex):
            return False
        if isinstance(other, ComplexRational):
            return self.to_complex_rational() == other
        a, b = self._common(other)
        return a.coeffs == b.coeffs

    def __hash__(self):
        z = self.to_complex_rational()
        if z is not None:
            return hash(z)
        # no conductor-free canonical form is kept; a constant hash is correct
        return hash(Cyclotomic)

    def __repr__(self):
        terms = ", ".join(str(c) for c in self.coeffs)
        return f"Cyclotomic({self.n}, [{terms}])"

    __str__ = __repr__


Exact = Union[ComplexRational, Cyclotomic]
Scalar = Union[ComplexRational, Cyclotomic, ApproxComplex]


def _as_scalar(value):
    if isinstance(value, (ComplexRational, Cyclotomic, ApproxComplex)):
        return value
    if isinstance(value, (int, _RationalABC)):
        return ComplexRational(Fraction(value))
    if isinstance(value, float):
        return ApproxComplex(value)
    if isinstance(value, complex):
        return ApproxComplex(value.real, value.imag)
    return None


def _promote(a, b):
    if isinstance(b, ApproxComplex):
        return a.to_approx(), b
    if isinstance(b, Cyclotomic) and isinstance(a, ComplexRational):
        return Cyclotomic.from_complex_rational(a), b
    return a, b


def as_scalar(value) -> Scalar:
    """Coerce ints, Fractions, floats and complex numbers into package scalars."""
    s = _as_scalar(value)
    if s is None:
        raise TypeError(f"not a scalar: {value!r}")
    return s


def normalize(value: Scalar) -> Scalar:
    """Canonical form: cyclotomic values in Q(i) become ComplexRational."""
    if isinstance(value, Cyclotomic):
        z = value.to_complex_rational()
        return z if z is not None else value
    return value


def is_exact(value) -> bool:
    return isinstance(value, (ComplexRational, Cyclotomic))


def to_approx(value) -> ApproxComplex:
    return as_scalar(value).to_approx()


# --------------------------------------------------------------------------
# angles


@dataclass(frozen=True, order=True)
class TurnAngle:
    """Rational point 2*pi*p/q of the circle, reduced with 0 <= p < q."""

    p: int
    q: int

    def __post_init__(self):
        if self.q <= 0 or not (0 <= self.p < self.q) or math.gcd(self.p, self.q) != 1:
            raise InvalidAngleError(f"TurnAngle({self.p}, {self.q}) is not reduced; use reduce_angle")

    @property
    def turns(self) -> Fraction:
        return Fraction(self.p, self.q)

    def __add__(self, other: "TurnAngle") -> "TurnAngle":
        t = self.turns + other.turns
        return reduce_angle(t.numerator, t.denominator)

    def __neg__(self) -> "TurnAngle":
        return reduce_angle(-self.p, self.q)

    def __str__(self):
        return f"{self.p}/{self.q}"


@dataclass(frozen=True, order=True)
class FloatAngle:
    """Approximate point of the circle given in turns, 0 <= turns < 1."""

    turns: float

    def __post_init__(self):
        if not math.isfinite(self.turns):
            raise InvalidAngleError("angle must be finite")
        object.__setattr__(self, "turns", float(self.turns) % 1.0)

    def __add__(self, other) -> "FloatAngle":
        return FloatAngle(self.turns + float(other.turns))

    def __neg__(self) -> "FloatAngle":
        return FloatAngle(-self.turns)


Angle = Union[TurnAngle, FloatAngle]


def reduce_angle(p: int, q: int) -> TurnAngle:
    if q == 0:
        raise InvalidAngleError("angle denominator must be nonzero")
    if q < 0:
        raise InvalidAngleError(f"angle denominator must be positive, got {q}")
    p %= q
    g = math.gcd(p, q)
    if p == 0:
        return TurnAngle(0, 1)
    return TurnAngle(p // g, q // g)


_QUARTER_UNITS = (
    ComplexRational(1),
    ComplexRational(0, -1),
    ComplexRational(-1),
    ComplexRational(0, 1),
)


def quarter_turn_unit(turns: Fraction) -> ComplexRational | None:
    """exp(-2*pi*i*turns) exactly, when turns is a multiple of 1/4; else None."""
    t4 = turns * 4
    if t4.denominator != 1:
        return None
    return _QUARTER_UNITS[t4.numerator % 4]


@lru_cache(maxsize=65536)
def _expi_turns(turns: Fraction) -> ApproxComplex:
    """exp(-2*pi*i*turns) as an ApproxComplex; exact on quarter turns."""
    turns = turns - math.floor(turns)
    exact = quarter_turn_unit(turns)
    if exact is not None:
        return ApproxComplex(float(exact.re), float(exact.im), 0.0)
    with mpmath.workprec(_MP_BITS):
        t = mpmath.mpf(2 * turns.numerator) / turns.denominator
        re = float(mpmath.cospi(t))
        im = -float(mpmath.sinpi(t))
    # half an ulp from the final rounding of each part, doubled for margin
    return ApproxComplex(re, im, _ulp(re) + _ulp(im))


def root_of_unity(a: Angle, n: int) -> ApproxComplex:
    """exp(-i*n*t) for the angle t = 2*pi*a."""
    if isinstance(a, TurnAngle):
        return _expi_turns(Fraction((n * a.p) % a.q, a.q))
    return _expi_turns(Fraction(a.turns) * n)


def exact_character(a: TurnAngle, n: int) -> ComplexRational | None:
    """exp(-i*n*t) as an exact value when it is a quarter-turn unit."""
    return quarter_turn_unit(Fraction((n * a.p) % a.q, a.q))


def character_cyclotomic(a: TurnAngle, n: int) -> Cyclotomic:
    """exp(-i*n*t) as an exact element of Q(zeta_q)."""
    return Cyclotomic.from_powers(a.q, {-(n * a.p): 1})


# --------------------------------------------------------------------------
# continued fractions


def continued_fraction(x: Fraction, count: int) -> list[int]:
    terms = []
    while len(terms) < count:
        a = math.floor(x)
        terms.append(a)
        frac = x - a
        if frac == 0:
            break
        x = 1 / frac
    return terms


def convergents(x: float, count: int) -> list[tuple[int, int]]:
    """First ``count`` continued-fraction convergents (p, q) of ``x``.

    The expansion is carried out exactly on the binary value of ``x``, so it
    terminates early (with fewer than ``count`` entries) when ``x`` is a
    rational with a short expansion.
    """
    if isinstance(x, float) and not math.isfinite(x):
        raise InvalidInputError(f"convergents need a finite input, got {x}")
    if count < 1:
        raise InvalidInputError("count must be >= 1")
    fx = Fraction(x)
    if fx <= 0:
        raise InvalidInputError(f"convergents need a positive input, got {x}")
    out = []
    p_prev, p = 0, 1
    q_prev, q = 1, 0
    for a in continued_fraction(fx, count):
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        out.append((p, q))
    return out
