"""Lacunary sequences, signed-digit representations and Riesz products.

For a sequence n_1 < n_2 < ... with n_{k+1} >= 3 n_k every term exceeds twice
the sum of all earlier ones, so an integer has at most one representation

    n = sum_k eps_k n_k,    eps_k in {-1, 0, 1},

and the greedy choice from the top is forced: eps_K = sign(n) exactly when
|n| > n_1 + ... + n_{K-1}.

The tilde set of an index set A is the set of integers whose representation
uses only indices in A.  Expanding the finite Riesz product

    prod_{k <= K} (1 + a_k cos(n_k t))

term by term shows that its n-th coefficient is the product of a_k / 2 over
the nonzero digits of n, and 0 when n has no representation.  Its support is
therefore the tilde set of {k : a_k != 0}.
"""

from __future__ import annotations

import bisect
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import accumulate
from typing import Iterable

from .arith import ComplexRational
from .errors import (
    MAX_EXPANDED_FACTORS,
    MAX_TRUNCATION,
    InvalidInputError,
    ResourceLimitError,
)
from .measures import TrigPolynomial


@dataclass(frozen=True)
class LacunarySequence:
    terms: tuple
    generator: str | None = None
    _prefix: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        terms = tuple(int(t) for t in self.terms)
        object.__setattr__(self, "terms", terms)
        for t in terms:
            if t <= 0:
                raise InvalidInputError(f"lacunary terms must be positive, got {t}")
        for a, b in zip(terms, terms[1:]):
            if b < 3 * a:
                raise InvalidInputError(f"ratio {b}/{a} is below 3")
        prefix = (0,) + tuple(accumulate(terms))
        for k, t in enumerate(terms):
            assert t > 2 * prefix[k], "ratio >= 3 forces n_k > 2 * (n_1 + ... + n_{k-1})"
        object.__setattr__(self, "_prefix", prefix)

    @classmethod
    def power(cls, base: int, count: int) -> "LacunarySequence":
        """base**0, base**1, ..., base**(count - 1)."""
        if base < 3:
            raise InvalidInputError(f"power base must be >= 3, got {base}")
        if count < 0:
            raise InvalidInputError("term count must be non-negative")
        return cls(tuple(base**k for k in range(count)), generator=f"{base}^k")

    def __len__(self):
        return len(self.terms)

    def term(self, k: int) -> int:
        """The k-th term, 1-based."""
        if not 1 <= k <= len(self.terms):
            raise InvalidInputError(f"index {k} outside 1..{len(self.terms)}")
        return self.terms[k - 1]

    def partial_sum(self, k: int) -> int:
        """n_1 + ... + n_k."""
        return self._prefix[k]


@dataclass(frozen=True)
class SignedDigitRep:
    digits: tuple  # ((k, eps), ...) with k increasing and eps = +-1

    def value(self, seq: LacunarySequence) -> int:
        return sum(e * seq.term(k) for k, e in self.digits)

    def indices(self) -> tuple:
        return tuple(k for k, _ in self.digits)

    def as_vector(self, length: int) -> tuple:
        v = [0] * length
        for k, e in self.digits:
            v[k - 1] = e
        return tuple(v)


@dataclass(frozen=True)
class IndexSet:
    """Strictly increasing positive indices into a lacunary sequence.

    ``infinite`` marks a finite prefix of an infinite set; ``branch`` records
    the binary branch a Sierpinski member was generated from.
    """

    indices: tuple = ()
    infinite: bool = False
    branch: str | None = None

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if any(i < 1 for i in idx):
            raise InvalidInputError("indices are 1-based positive integers")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise InvalidInputError(f"indices must be strictly increasing: {idx}")
        object.__setattr__(self, "indices", idx)

    def __contains__(self, k):
        i = bisect.bisect_left(self.indices, k)
        return i < len(self.indices) and self.indices[i] == k

    def __iter__(self):
        return iter(self.indices)

    def __len__(self):
        return len(self.indices)

    def __and__(self, other: "IndexSet") -> "IndexSet":
        return IndexSet(tuple(sorted(set(self.indices) & set(other.indices))))

    def __sub__(self, other: "IndexSet") -> "IndexSet":
        return IndexSet(tuple(k for k in self.indices if k not in other))

    def upto(self, K: int) -> "IndexSet":
        return IndexSet(tuple(k for k in self.indices if k <= K), self.infinite, self.branch)


# --------------------------------------------------------------------------
# coefficient rules


@dataclass(frozen=True)
class CoeffRule:
    """Symbolic description of the sequence a_1, a_2, ...

    kinds: ``constant`` (a_k = value), ``indicator`` (a_k = value on ``indices``,
    0 elsewhere), ``list`` (explicit finite list, 0 afterwards) and
    ``geometric`` (a_k = ratio**k).
    """

    kind: str
    value: Fraction = Fraction(1)
    indices: IndexSet | None = None
    values: tuple = ()
    ratio: Fraction = Fraction(0)

    def __post_init__(self):
        if self.kind not in ("constant", "indicator", "list", "geometric"):
            raise InvalidInputError(f"unknown coefficient rule {self.kind!r}")
        object.__setattr__(self, "value", Fraction(self.value))
        object.__setattr__(self, "ratio", Fraction(self.ratio))
        object.__setattr__(self, "values", tuple(Fraction(v) for v in self.values))
        if self.kind == "indicator" and self.indices is None:
            raise InvalidInputError("indicator rule needs an IndexSet")
        for a in self._extreme_values():
            if not (-1 < a <= 1):
                raise InvalidInputError(f"coefficient {a} out of (-1,1]")

    @classmethod
    def constant(cls, c=1) -> "CoeffRule":
        return cls("constant", value=c)

    @classmethod
    def indicator(cls, indices: IndexSet | Iterable[int], value=1) -> "CoeffRule":
        if not isinstance(indices, IndexSet):
            indices = IndexSet(tuple(indices))
        return cls("indicator", value=value, indices=indices)

    @classmethod
    def from_list(cls, values) -> "CoeffRule":
        return cls("list", values=tuple(values))

    @classmethod
    def geometric(cls, ratio) -> "CoeffRule":
        return cls("geometric", ratio=ratio)

    def _extreme_values(self):
        if self.kind == "constant":
            return [self.value]
        if self.kind == "indicator":
            return [self.value] if len(self.indices) or self.indices.infinite else []
        if self.kind == "list":
            return list(self.values)
        # ratio**k for k >= 1 stays in (-1, 1] iff the ratio does
        return [self.ratio]

    def a(self, k: int) -> Fraction:
        if self.kind == "constant":
            return self.value
        if self.kind == "indicator":
            return self.value if k in self.indices else Fraction(0)
        if self.kind == "list":
            return self.values[k - 1] if k <= len(self.values) else Fraction(0)
        return self.ratio**k

    def active(self, K: int) -> IndexSet:
        """Indices k <= K with a_k != 0."""
        return IndexSet(tuple(k for k in range(1, K + 1) if self.a(k) != 0))

    def active_set_finite(self) -> bool:
        """Whether {k : a_k != 0} is finite for the untruncated rule."""
        if self.kind == "constant":
            return self.value == 0
        if self.kind == "indicator":
            return self.value == 0 or not self.indices.infinite
        if self.kind == "list":
            return True
        return self.ratio == 0


@dataclass(frozen=True)
class RieszProductSpec:
    """The Riesz product prod_{k <= K} (1 + a_k cos(n_k t))."""

    seq: LacunarySequence
    rule: CoeffRule
    K: int

    def __post_init__(self):
        if self.K < 0:
            raise InvalidInputError("truncation K must be non-negative")
        if self.K > len(self.seq):
            raise InvalidInputError(f"truncation K={self.K} exceeds the {len(self.seq)} sequence terms")

    def a(self, k: int) -> Fraction:
        return self.rule.a(k) if 1 <= k <= self.K else Fraction(0)

    def active(self) -> IndexSet:
        return self.rule.active(self.K)

    def coefficient(self, n: int) -> ComplexRational:
        return ComplexRational(riesz_coefficient(self, n))

    @property
    def is_real(self) -> bool:
        # a_k are rationals, so the product density is real and even
        return True


# --------------------------------------------------------------------------
# digit arithmetic


def represent(n: int, seq: LacunarySequence, upto: int | None = None) -> SignedDigitRep | None:
    """The unique signed-digit representation of n over n_1..n_upto, or None."""
    K = len(seq) if upto is None else min(upto, len(seq))
    rem = n
    digits = []
    for k in range(K, 0, -1):
        if abs(rem) > seq.partial_sum(k - 1):
            e = 1 if rem > 0 else -1
            digits.append((k, e))
            rem -= e * seq.terms[k - 1]
    if rem != 0:
        return None
    return SignedDigitRep(tuple(reversed(digits)))


def tilde_set(A: IndexSet | Iterable[int], seq: LacunarySequence, window: int) -> list[int]:
    """Sorted integers n with |n| <= window whose digits lie in A."""
    # enumeration cost is 3^|A| regardless of the window, so no window cap here
    if window < 0:
        raise InvalidInputError("window must be non-negative")
    idx = sorted(set(A.indices if isinstance(A, IndexSet) else A))
    if idx and idx[-1] > len(seq):
        raise InvalidInputError(f"index {idx[-1]} outside the {len(seq)} sequence terms")
    terms = [seq.terms[k - 1] for k in reversed(idx)]
    # sums of the still-unused (smaller) terms, for pruning against the window
    rest = list(accumulate(reversed(terms)))[::-1][1:] + [0]
    values = [0]
    for t, r in zip(terms, rest):
        bound = window + r
        values = [v + d for v in values for d in (-t, 0, t) if abs(v + d) <= bound]
    values.sort()
    return values


def riesz_coefficient(spec: RieszProductSpec, n: int) -> Fraction:
    rep = represent(n, spec.seq, spec.K)
    if rep is None:
        return Fraction(0)
    out = Fraction(1)
    for k, _ in rep.digits:
        a = spec.a(k)
        if a == 0:
            return Fraction(0)
        out *= a / 2
    return out


def riesz_truncation_to_trigpoly(spec: RieszProductSpec, limit: int = MAX_TRUNCATION) -> TrigPolynomial:
    """Multiply out the finite product factor by factor."""
    if spec.K > limit:
        raise ResourceLimitError(f"truncation K={spec.K} exceeds limit {limit}")
    active = [k for k in range(1, spec.K + 1) if spec.a(k) != 0]
    if len(active) > MAX_EXPANDED_FACTORS:
        raise ResourceLimitError(
            f"{len(active)} active factors would give 3^{len(active)} coefficients; limit is {MAX_EXPANDED_FACTORS}"
        )
    poly: dict[int, Fraction] = {0: Fraction(1)}
    for k in active:
        t = spec.seq.term(k)
        half = spec.a(k) / 2
        nxt: dict[int, Fraction] = defaultdict(Fraction)
        for n, c in poly.items():
            nxt[n] += c
            nxt[n + t] += c * half
            nxt[n - t] += c * half
        poly = nxt
    return TrigPolynomial({n: c for n, c in poly.items()})


@dataclass(frozen=True)
class RieszConvolution:
    poly: TrigPolynomial
    common_indices: tuple
    window: int
    support: tuple
    full_support_finite: bool | None
    full_support_size: int | None

    def as_dict(self) -> dict:
        return {
            "common_indices": list(self.common_indices),
            "window": self.window,
            "support": list(self.support),
            "support_size": len(self.support),
            "full_support_finite": self.full_support_finite,
            "full_support_size": self.full_support_size,
        }


def _full_intersection_finite(r1: CoeffRule, r2: CoeffRule) -> bool | None:
    if r1.active_set_finite() or r2.active_set_finite():
        return True
    if r1.kind == "indicator" and r2.kind == "indicator":
        b1, b2 = r1.indices.branch, r2.indices.branch
        if b1 is not None and b2 is not None:
            d = common_prefix_length(b1, b2)
            if d < min(len(b1), len(b2)):
                # members share exactly the codes of the common prefix
                return True
        return None
    # a rule active on every index meets any infinite set infinitely often
    return False


def convolve_riesz(s1: RieszProductSpec, s2: RieszProductSpec, window: int) -> RieszConvolution:
    """mu_1 * mu_2 restricted to |n| <= window, with a finiteness verdict.

    A frequency carries a nonzero product coefficient only if its unique
    representation uses indices active in both factors, so the support is the
    tilde set of the intersection of the active index sets.
    """
    if s1.seq.terms[: max(s1.K, s2.K)] != s2.seq.terms[: max(s1.K, s2.K)]:
        raise InvalidInputError("Riesz products are built on different lacunary sequences")
    common = s1.active() & s2.active()
    support = tilde_set(common, s1.seq, window)
    coeffs = {n: riesz_coefficient(s1, n) * riesz_coefficient(s2, n) for n in support}
    poly = TrigPolynomial(coeffs)
    finite = _full_intersection_finite(s1.rule, s2.rule)
    size = 3 ** len(common) if finite else None
    return RieszConvolution(poly, common.indices, window, tuple(poly.support()), finite, size)


# --------------------------------------------------------------------------
# Brown-Moran divergence condition


@dataclass(frozen=True)
class BrownMoranVerdict:
    status: str  # "diverges" | "converges" | "converges-for-power" | "unknown"
    power: int | None = None

    def __str__(self):
        return f"converges-for-power({self.power})" if self.power else self.status


def brown_moran_check(rule: CoeffRule) -> BrownMoranVerdict:
    """Decide whether sum_k |a_k|^p diverges for every power p."""
    if rule.kind == "constant":
        return BrownMoranVerdict("diverges") if rule.value != 0 else BrownMoranVerdict("converges")
    if rule.kind == "indicator":
        if rule.value == 0 or not rule.indices.infinite:
            return BrownMoranVerdict("converges")
        return BrownMoranVerdict("diverges")
    if rule.kind == "list":
        return BrownMoranVerdict("converges")
    if rule.kind == "geometric":
        r = abs(rule.ratio)
        if r == 0:
            return BrownMoranVerdict("converges")
        if r < 1:
            return BrownMoranVerdict("converges-for-power", 1)
        return BrownMoranVerdict("diverges")
    return BrownMoranVerdict("unknown")


# --------------------------------------------------------------------------
# almost disjoint families


def prefix_code(bits: str) -> int:
    return 2 ** len(bits) - 1 + (int(bits, 2) if bits else 0)


def common_prefix_length(a: str, b: str) -> int:
    d = 0
    for x, y in zip(a, b):
        if x != y:
            break
        d += 1
    return d


def sierpinski_member(branch: str, count: int) -> IndexSet:
    """Codes of the first ``count`` nonempty prefixes of a binary branch.

    Distinct prefixes get distinct codes, so two branches first differing at
    position d share exactly d codes: the family is almost disjoint.
    """
    if count < 1:
        raise InvalidInputError("count must be positive")
    if any(ch not in "01" for ch in branch):
        raise InvalidInputError(f"branch must be a bit string, got {branch!r}")
    if len(branch) < count:
        raise InvalidInputError(f"branch of length {len(branch)} is shorter than count {count}")
    codes = tuple(prefix_code(branch[:j]) for j in range(1, count + 1))
    return IndexSet(codes, infinite=True, branch=branch)


# --------------------------------------------------------------------------
# JSON


def _fraction_field(obj: dict, default=None) -> Fraction:
    if "value" in obj:
        return Fraction(str(obj["value"]))
    if "num" in obj or default is None:
        num, den = obj.get("num"), obj.get("den", 1)
        if not isinstance(num, int) or not isinstance(den, int) or den == 0:
            raise InvalidInputError(f"expected integer num/den in {obj!r}")
        return Fraction(num, den)
    return Fraction(default)


def sequence_from_json(obj: dict) -> LacunarySequence:
    if not isinstance(obj, dict):
        raise InvalidInputError("base must be an object")
    kind = obj.get("kind")
    if kind == "power":
        return LacunarySequence.power(int(obj["b"]), int(obj["K"]))
    if kind == "list":
        return LacunarySequence(tuple(obj["terms"]))
    raise InvalidInputError(f"unknown base kind {kind!r}")


def rule_from_json(obj: dict) -> CoeffRule:
    if not isinstance(obj, dict):
        raise InvalidInputError("coeffs must be an object")
    kind = obj.get("kind")
    try:
        if kind == "constant":
            return CoeffRule.constant(_fraction_field(obj))
        if kind == "indicator":
            idx = IndexSet(tuple(obj["indices"]), bool(obj.get("infinite", False)), obj.get("branch"))
            return CoeffRule.indicator(idx, _fraction_field(obj, default=1))
        if kind == "sierpinski":
            member = sierpinski_member(obj["branch"], int(obj.get("count", len(obj["branch"]))))
            return CoeffRule.indicator(member, _fraction_field(obj, default=1))
        if kind == "list":
            return CoeffRule.from_list(Fraction(str(v)) for v in obj["values"])
        if kind == "geometric":
            return CoeffRule.geometric(_fraction_field(obj))
    except (KeyError, ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, InvalidInputError):
            raise
        raise InvalidInputError(f"bad coefficient rule {obj!r}: {exc}") from exc
    raise InvalidInputError(f"unknown coefficient kind {kind!r}")


def riesz_spec_from_json(obj: dict) -> RieszProductSpec:
    """Parse {"base": ..., "coeffs": ..., "K": int}."""
    if not isinstance(obj, dict):
        raise InvalidInputError("Riesz spec must be a JSON object")
    for key in ("base", "coeffs", "K"):
        if key not in obj:
            raise InvalidInputError(f"Riesz spec is missing {key!r}")
    seq = sequence_from_json(obj["base"])
    rule = rule_from_json(obj["coeffs"])
    K = obj["K"]
    if not isinstance(K, int):
        raise InvalidInputError("K must be an integer")
    return RieszProductSpec(seq, rule, K)
