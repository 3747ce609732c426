"""Computable measures on the circle: finite atomic measures, trigonometric
polynomials, and their formal sums.

    fourier_coefficient(m, n)   mu^(n) = integral of exp(-i n t) d mu(t)
    convolve(a, b)              atoms add positions and multiply masses;
                                anything times a trig polynomial is a
                                trig polynomial (coefficientwise product)
    involution(m)               mu~(E) = conj(mu(-E))
    total_variation(m)          enclosure of sum |c_j|
    decompose(m)                the stored (discrete, continuous) split

Angles are turns: an atom at TurnAngle(p, q) sits at t = 2*pi*p/q.  A
trigonometric polynomial with coefficients c_n is the absolutely continuous
measure with density sum c_n exp(i n t) against dt/(2*pi), so its n-th
Fourier coefficient is c_n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Union

from .arith import (
    ApproxComplex,
    ComplexRational,
    Cyclotomic,
    FloatAngle,
    TurnAngle,
    as_scalar,
    exact_character,
    is_exact,
    normalize,
    reduce_angle,
    root_of_unity,
)
from .errors import InvalidInputError, NotDecidableError, ResourceLimitError, max_atoms

# width of the per-atom square-root enclosure in total_variation
_SQRT_SCALE = 10**12


def _angle_key(a) -> Fraction:
    if isinstance(a, TurnAngle):
        return a.turns
    return Fraction(a.turns)


def _coerce_angle(a):
    if isinstance(a, (TurnAngle, FloatAngle)):
        return a
    if isinstance(a, Fraction):
        return reduce_angle(a.numerator, a.denominator)
    if isinstance(a, tuple) and len(a) == 2:
        return reduce_angle(*a)
    if isinstance(a, float):
        return FloatAngle(a)
    if isinstance(a, int):
        return reduce_angle(a, 1)
    raise InvalidInputError(f"not an angle: {a!r}")


class DiscreteMeasure:
    """Finite atomic measure sum c_j delta_{t_j}.

    Atoms at the same point are merged, zero masses dropped, and atoms kept in
    increasing order of position, so two equal measures have identical atom
    lists.  A float angle that coincides with a rational one merges into the
    rational atom.
    """

    __slots__ = ("atoms",)

    def __init__(self, atoms: Iterable = ()):
        merged: dict[Fraction, list] = {}
        for pos, mass in atoms:
            pos = _coerce_angle(pos)
            mass = as_scalar(mass)
            key = _angle_key(pos)
            if key in merged:
                old_pos, old_mass = merged[key]
                if isinstance(pos, TurnAngle):
                    old_pos = pos
                merged[key] = [old_pos, old_mass + mass]
            else:
                merged[key] = [pos, mass]
        out = []
        for key in sorted(merged):
            pos, mass = merged[key]
            mass = normalize(mass)
            if mass.is_zero():
                continue
            out.append((pos, mass))
        self.atoms: tuple = tuple(out)

    @classmethod
    def point(cls, p: int = 0, q: int = 1, mass=1) -> "DiscreteMeasure":
        return cls([(reduce_angle(p, q), mass)])

    @classmethod
    def zero(cls) -> "DiscreteMeasure":
        return cls()

    @property
    def exact(self) -> bool:
        return all(isinstance(p, TurnAngle) and is_exact(c) for p, c in self.atoms)

    def __len__(self):
        return len(self.atoms)

    def __iter__(self):
        return iter(self.atoms)

    def __bool__(self):
        return bool(self.atoms)

    def __eq__(self, other):
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        if len(self.atoms) != len(other.atoms):
            return False
        for (p, c), (r, d) in zip(self.atoms, other.atoms):
            if type(p) is not type(r) or _angle_key(p) != _angle_key(r):
                return False
            if isinstance(c, ApproxComplex) or isinstance(d, ApproxComplex):
                if c != d:
                    return False
            elif not c == d:
                return False
        return True

    def __hash__(self):
        return hash(tuple(_angle_key(p) for p, _ in self.atoms))

    def __add__(self, other: "DiscreteMeasure") -> "DiscreteMeasure":
        return DiscreteMeasure(list(self.atoms) + list(other.atoms))

    def scale(self, c) -> "DiscreteMeasure":
        c = as_scalar(c)
        return DiscreteMeasure([(p, m * c) for p, m in self.atoms])

    def denominators(self) -> list[int]:
        return [p.q for p, _ in self.atoms if isinstance(p, TurnAngle)]

    def coefficient(self, n: int):
        return _discrete_coefficient(self, n)

    def __repr__(self):
        body = ", ".join(f"{c}@{p}" for p, c in self.atoms)
        return f"DiscreteMeasure([{body}])"


class TrigPolynomial:
    """Finite map n -> c_n with no zero coefficient stored."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: dict | Iterable = ()):
        items = coeffs.items() if isinstance(coeffs, dict) else coeffs
        acc: dict[int, object] = {}
        for n, c in items:
            n = int(n)
            c = as_scalar(c)
            acc[n] = acc[n] + c if n in acc else c
        self.coeffs: dict[int, object] = {
            n: normalize(c) for n, c in sorted(acc.items()) if not c.is_zero()
        }

    def coefficient(self, n: int):
        return self.coeffs.get(n, ComplexRational(0))

    def support(self) -> list[int]:
        return list(self.coeffs)

    @property
    def exact(self) -> bool:
        return all(is_exact(c) for c in self.coeffs.values())

    def sup_abs(self) -> float:
        """Upper bound for max_n |c_n|."""
        best = 0.0
        for c in self.coeffs.values():
            best = max(best, c.to_approx().abs_bounds()[1])
        return best

    def evaluate(self, t: float) -> complex:
        """Density sum c_n exp(i n t) at the real point t (radians)."""
        return sum(
            (c.to_complex() * complex(math.cos(n * t), math.sin(n * t)) for n, c in self.coeffs.items()),
            0j,
        )

    def __eq__(self, other):
        if not isinstance(other, TrigPolynomial):
            return NotImplemented
        return list(self.coeffs) == list(other.coeffs) and all(
            self.coeffs[n] == other.coeffs[n] for n in self.coeffs
        )

    def __hash__(self):
        return hash(tuple(self.coeffs))

    def __len__(self):
        return len(self.coeffs)

    def __repr__(self):
        body = ", ".join(f"{n}: {c}" for n, c in self.coeffs.items())
        return f"TrigPolynomial({{{body}}})"


@dataclass(frozen=True)
class MeasureSum:
    """mu = mu_d + mu_c with the split fixed at construction.

    ``continuous`` holds TrigPolynomial instances or Riesz product specs; any
    object exposing ``coefficient(n)`` is accepted.
    """

    discrete: DiscreteMeasure = field(default_factory=DiscreteMeasure)
    continuous: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "continuous", tuple(self.continuous))

    def coefficient(self, n: int):
        return fourier_coefficient(self, n)

    def continuous_coefficient(self, n: int):
        total = ComplexRational(0)
        for part in self.continuous:
            total = total + part.coefficient(n)
        return total


Measure = Union[DiscreteMeasure, TrigPolynomial, MeasureSum]


def _discrete_coefficient(m: DiscreteMeasure, n: int):
    exact_total = ComplexRational(0)
    for pos, mass in m.atoms:
        if not (isinstance(pos, TurnAngle) and isinstance(mass, ComplexRational)):
            break
        unit = exact_character(pos, n)
        if unit is None:
            break
        exact_total = exact_total + mass * unit
    else:
        return exact_total
    total = ApproxComplex(0.0)
    for pos, mass in m.atoms:
        total = total + mass.to_approx() * root_of_unity(pos, n)
    return total


def fourier_coefficient(m, n: int):
    """n-th Fourier-Stieltjes coefficient.

    Exact (ComplexRational) whenever every term is exact on the quarter-turn
    path; otherwise an ApproxComplex with a rigorous error bound.
    """
    if isinstance(m, DiscreteMeasure):
        return _discrete_coefficient(m, n)
    if isinstance(m, MeasureSum):
        return _discrete_coefficient(m.discrete, n) + m.continuous_coefficient(n)
    if hasattr(m, "coefficient"):
        return m.coefficient(n)
    raise InvalidInputError(f"not a measure: {m!r}")


def exact_fourier_coefficient(m: DiscreteMeasure, n: int):
    """Exact coefficient of an exact discrete measure, in Q(i) when possible."""
    if not m.exact:
        raise NotDecidableError("exact coefficients need rational positions and exact masses")
    # collect powers of zeta_L over a common conductor L and reduce once
    L = 4
    for pos, mass in m.atoms:
        L = math.lcm(L, pos.q, mass.n if isinstance(mass, Cyclotomic) else 1)
    powers: dict[int, Fraction] = {}
    for pos, mass in m.atoms:
        shift = (-n * pos.p * (L // pos.q)) % L
        if isinstance(mass, Cyclotomic):
            step = L // mass.n
            terms = [(k * step, c) for k, c in enumerate(mass.coeffs) if c]
        else:
            terms = [(0, mass.re), (L // 4, mass.im)]
        for k, c in terms:
            if c:
                e = (k + shift) % L
                powers[e] = powers.get(e, 0) + c
    return normalize(Cyclotomic.from_powers(L, powers))


def _check_atom_budget(size: int):
    cap = max_atoms()
    if size > cap:
        raise ResourceLimitError(f"measure would carry {size} atoms, cap is {cap} (CML_MAX_ATOMS)")


def convolve(a, b):
    if isinstance(a, DiscreteMeasure) and isinstance(b, DiscreteMeasure):
        if len(a) * len(b) > 100 * max_atoms():
            raise ResourceLimitError("convolution needs too many atom products")
        out = DiscreteMeasure((p + r, c * d) for p, c in a.atoms for r, d in b.atoms)
        _check_atom_budget(len(out))
        return out
    if isinstance(a, DiscreteMeasure) and isinstance(b, TrigPolynomial):
        a, b = b, a
    if isinstance(a, TrigPolynomial) and isinstance(b, DiscreteMeasure):
        return TrigPolynomial({n: c * fourier_coefficient(b, n) for n, c in a.coeffs.items()})
    if isinstance(a, TrigPolynomial) and isinstance(b, TrigPolynomial):
        common = [n for n in a.coeffs if n in b.coeffs]
        return TrigPolynomial({n: a.coeffs[n] * b.coeffs[n] for n in common})
    raise InvalidInputError(f"cannot convolve {type(a).__name__} with {type(b).__name__}")


def convolution_power(m: DiscreteMeasure, k: int) -> DiscreteMeasure:
    if k < 1:
        raise InvalidInputError("power must be >= 1")
    out = m
    for _ in range(k - 1):
        out = convolve(out, m)
    return out


def involution(m):
    if isinstance(m, DiscreteMeasure):
        return DiscreteMeasure((-p, c.conjugate()) for p, c in m.atoms)
    if isinstance(m, TrigPolynomial):
        return TrigPolynomial({n: c.conjugate() for n, c in m.coeffs.items()})
    raise InvalidInputError(f"involution is defined for discrete measures and trig polynomials, not {m!r}")


def _sqrt_enclosure(r: Fraction) -> tuple[Fraction, Fraction]:
    u, v = r.numerator, r.denominator
    root = math.isqrt(u * v)
    if root * root == u * v:
        exact = Fraction(root, v)
        return exact, exact
    s = math.isqrt(u * v * _SQRT_SCALE * _SQRT_SCALE)
    return Fraction(s, v * _SQRT_SCALE), Fraction(s + 1, v * _SQRT_SCALE)


def mass_modulus(c) -> tuple[Fraction, Fraction]:
    """Rational enclosure of |c|."""
    if isinstance(c, ComplexRational):
        return _sqrt_enclosure(c.norm2())
    lo, hi = c.to_approx().abs_bounds()
    return Fraction(lo), Fraction(hi)


def total_variation(m: DiscreteMeasure) -> tuple[Fraction, Fraction]:
    """Enclosure [lower, upper] of the total variation norm sum |c_j|."""
    lo = hi = Fraction(0)
    for _, c in m.atoms:
        a, b = mass_modulus(c)
        lo += a
        hi += b
    return lo, hi


def decompose(m: MeasureSum) -> tuple[DiscreteMeasure, list]:
    return m.discrete, list(m.continuous)


# --------------------------------------------------------------------------
# JSON description format


def parse_fraction(obj: dict, prefix: str, default: int = 0) -> Fraction:
    """Read ``<prefix>_num``/``<prefix>_den`` or a ``<prefix>`` string like '1/2'."""
    try:
        if prefix in obj:
            return Fraction(str(obj[prefix]))
        num = obj.get(f"{prefix}_num", default)
        den = obj.get(f"{prefix}_den", 1)
        if not isinstance(num, int) or not isinstance(den, int):
            raise InvalidInputError(f"{prefix}_num/{prefix}_den must be integers")
        if den == 0:
            raise InvalidInputError(f"{prefix}_den must be nonzero")
        return Fraction(num, den)
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidInputError(f"bad rational field {prefix!r} in {obj!r}") from exc


def parse_coefficient(obj: dict) -> ComplexRational:
    return ComplexRational(parse_fraction(obj, "re"), parse_fraction(obj, "im"))


def parse_atom(obj: dict):
    if not isinstance(obj, dict):
        raise InvalidInputError(f"atom must be an object, got {obj!r}")
    if "turn" in obj:
        pos = FloatAngle(float(obj["turn"]))
    else:
        p, q = obj.get("p", 0), obj.get("q", 1)
        if not isinstance(p, int) or not isinstance(q, int):
            raise InvalidInputError("atom p/q must be integers")
        pos = reduce_angle(p, q)
    return pos, parse_coefficient(obj)


def measure_from_json(obj: dict) -> MeasureSum:
    """Parse {"atoms": [...], "trigpoly": [...], "riesz": [...]} into a MeasureSum."""
    if not isinstance(obj, dict):
        raise InvalidInputError("measure description must be a JSON object")
    unknown = set(obj) - {"atoms", "trigpoly", "riesz", "name"}
    if unknown:
        raise InvalidInputError(f"unknown measure fields: {sorted(unknown)}")
    disc = DiscreteMeasure(parse_atom(a) for a in obj.get("atoms", []))
    parts = []
    if obj.get("trigpoly"):
        rows = obj["trigpoly"]
        if any(not isinstance(r, dict) or not isinstance(r.get("n"), int) for r in rows):
            raise InvalidInputError("trigpoly rows need an integer 'n'")
        parts.append(TrigPolynomial((r["n"], parse_coefficient(r)) for r in rows))
    if obj.get("riesz"):
        from .lacunary import riesz_spec_from_json

        parts.extend(riesz_spec_from_json(s) for s in obj["riesz"])
    return MeasureSum(disc, parts)


def scalar_to_json(c):
    c = as_scalar(c)
    if isinstance(c, ComplexRational):
        return {"re": str(c.re), "im": str(c.im)}
    if isinstance(c, Cyclotomic):
        a = c.to_approx()
        return {"conductor": c.n, "basis_coeffs": [str(x) for x in c.coeffs], "re": a.re, "im": a.im, "err": a.err}
    return {"re": c.re, "im": c.im, "err": c.err}


def discrete_to_json(m: DiscreteMeasure) -> list:
    out = []
    for pos, c in m.atoms:
        row = {"p": pos.p, "q": pos.q} if isinstance(pos, TurnAngle) else {"turn": pos.turns}
        row["mass"] = scalar_to_json(c)
        out.append(row)
    return out


def trigpoly_to_json(p: TrigPolynomial) -> list:
    return [{"n": n, "coeff": scalar_to_json(c)} for n, c in p.coeffs.items()]
