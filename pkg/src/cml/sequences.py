"""Sequence-side analysis of Fourier-Stieltjes transforms.

Wiener averages

    W_N(mu) = 1/(2N+1) * sum_{|n| <= N} |mu^(n)|^2

converge to the sum of squared atom masses, so they vanish in the limit
exactly for continuous measures.  The remaining tools work on finite windows
of a sequence: searching for epsilon-periods, falsifying almost periodicity of
the unit step, taking bounded logarithms, and measuring how far a transform
stays from the step sequence.

Every almost-periodicity statement here is relative to an explicit window and
range of shifts: "verified on window", never "proved".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .arith import ApproxComplex, ComplexRational, Cyclotomic, normalize
from .errors import (
    InsufficientDataError,
    InvalidInputError,
    NotInvertibleError,
    check_window,
)
from .lacunary import RieszProductSpec
from .measures import DiscreteMeasure, MeasureSum, TrigPolynomial, fourier_coefficient

_EPS = np.finfo(float).eps


class ApproxReal(NamedTuple):
    value: float
    err: float


def _as_float(x) -> float:
    return float(x.value) if isinstance(x, ApproxReal) else float(x)


@dataclass(frozen=True, eq=False)
class SequenceWindow:
    """Values a_lo, ..., a_hi with a per-entry absolute error bound."""

    lo: int
    hi: int
    values: np.ndarray
    err: np.ndarray
    source: str = "custom"

    def __post_init__(self):
        if self.hi < self.lo:
            raise InvalidInputError(f"empty window [{self.lo}, {self.hi}]")
        values = np.asarray(self.values, dtype=complex)
        err = np.asarray(self.err, dtype=float)
        if values.shape != (self.hi - self.lo + 1,) or err.shape != values.shape:
            raise InvalidInputError("window length does not match hi - lo + 1")
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(err))):
            raise InvalidInputError("window values must be finite")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "err", err)

    @classmethod
    def from_values(cls, lo: int, values, err=None, source: str = "custom") -> "SequenceWindow":
        values = np.asarray(values, dtype=complex)
        err = np.zeros(len(values)) if err is None else err
        return cls(lo, lo + len(values) - 1, values, err, source)

    @classmethod
    def step(cls, lo: int, hi: int) -> "SequenceWindow":
        """a_n = 1 for n >= 0 and 0 for n < 0."""
        n = np.arange(lo, hi + 1)
        return cls(lo, hi, (n >= 0).astype(complex), np.zeros(len(n)), "step")

    @classmethod
    def from_measure(cls, m, lo: int, hi: int, source: str = "measure-transform") -> "SequenceWindow":
        check_window(hi - lo)
        vals, errs = [], []
        for n in range(lo, hi + 1):
            c = fourier_coefficient(m, n).to_approx()
            vals.append(complex(c.re, c.im))
            errs.append(c.err)
        return cls(lo, hi, np.array(vals), np.array(errs), source)

    def __len__(self):
        return self.hi - self.lo + 1

    def __getitem__(self, n: int) -> ApproxComplex:
        if not self.lo <= n <= self.hi:
            raise IndexError(n)
        v = self.values[n - self.lo]
        return ApproxComplex(float(v.real), float(v.imag), float(self.err[n - self.lo]))

    def indices(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)


# --------------------------------------------------------------------------
# Wiener averages


def _abs2(c):
    """|c|^2 exactly when possible, else an ApproxReal enclosure."""
    if isinstance(c, ComplexRational):
        return c.norm2()
    if isinstance(c, Cyclotomic):
        sq = normalize(c * c.conjugate())
        if isinstance(sq, ComplexRational):
            return sq.re
        c = c.to_approx()
    h = c.abs()
    v = h * h
    err = 2 * h * c.err + c.err * c.err
    return ApproxReal(v, err * (1 + 4 * _EPS) + 4 * math.ulp(v))


def _sum_reals(items) -> Fraction | ApproxReal:
    exact = Fraction(0)
    fsum, ferr, approx = 0.0, 0.0, False
    for x in items:
        if isinstance(x, ApproxReal):
            approx = True
            fsum += x.value
            ferr += x.err + 4 * math.ulp(fsum)
        else:
            exact += x
    if not approx:
        return exact
    total = fsum + float(exact)
    return ApproxReal(total, ferr + 4 * math.ulp(total) + math.ulp(float(exact)))


def wiener_average(m, N: int) -> Fraction | ApproxReal:
    """1/(2N+1) * sum_{|n| <= N} |mu^(n)|^2, exact whenever the coefficients are."""
    if N < 1:
        raise InvalidInputError("N must be >= 1")
    check_window(2 * N)
    total = _sum_reals(_abs2(fourier_coefficient(m, n)) for n in range(-N, N + 1))
    if isinstance(total, ApproxReal):
        v = total.value / (2 * N + 1)
        return ApproxReal(v, total.err / (2 * N + 1) + 4 * math.ulp(v))
    return total / (2 * N + 1)


def atom_mass_sum(m: DiscreteMeasure) -> Fraction | ApproxReal:
    """sum_tau |mu({tau})|^2."""
    return _sum_reals(_abs2(c) for _, c in m.atoms)


def limit_claim(m) -> Fraction | ApproxReal:
    if isinstance(m, DiscreteMeasure):
        return atom_mass_sum(m)
    if isinstance(m, MeasureSum):
        return atom_mass_sum(m.discrete)
    if isinstance(m, (TrigPolynomial, RieszProductSpec)):
        return Fraction(0)
    raise InvalidInputError(f"not a measure: {m!r}")


@dataclass
class WienerReport:
    Ns: list
    averages: list
    limit_claim: object
    abs_errors: list
    verdicts: list

    @property
    def decreasing(self) -> bool:
        return all(v != "increasing" for v in self.verdicts)

    def rows(self) -> list[dict]:
        return [
            {"N": N, "average": avg, "claim": self.limit_claim, "abs_error": e}
            for N, avg, e in zip(self.Ns, self.averages, self.abs_errors)
        ]


def wiener_report(m, Ns) -> WienerReport:
    Ns = list(Ns)
    if not Ns:
        raise InvalidInputError("N list must be nonempty")
    if any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise InvalidInputError("N list must be increasing")
    claim = limit_claim(m)
    averages, errors, verdicts = [], [], []
    for N in Ns:
        avg = wiener_average(m, N)
        if isinstance(avg, ApproxReal) or isinstance(claim, ApproxReal):
            e = abs(_as_float(avg) - _as_float(claim))
        else:
            e = abs(avg - claim)
        if errors and e > errors[-1]:
            verdicts.append("increasing")
        else:
            verdicts.append("non-increasing")
        averages.append(avg)
        errors.append(e)
    return WienerReport(Ns, averages, claim, errors, verdicts)


# --------------------------------------------------------------------------
# epsilon-periods


@dataclass(frozen=True)
class IntervalCheck:
    start: int
    stop: int  # inclusive
    period: int | None
    # (m, n, deviation) for each shift when no period was found
    witnesses: tuple = ()

    @property
    def verified(self) -> bool:
        return self.period is not None


@dataclass(frozen=True)
class EpsilonPeriodSearch:
    eps: float
    p: int
    window: tuple
    intervals: tuple

    @property
    def all_verified(self) -> bool:
        return all(iv.verified for iv in self.intervals)

    @property
    def all_failed(self) -> bool:
        return not any(iv.verified for iv in self.intervals)


def shift_deviation(s: SequenceWindow, m: int) -> tuple[float, int]:
    """Upper bound of sup_n |a_{n+m} - a_n| over the window and the n attaining it."""
    if m == 0:
        return 0.0, s.lo
    k = abs(m)
    if k >= len(s):
        raise InsufficientDataError(f"shift {m} leaves no overlap in a window of length {len(s)}")
    a, b = (s.values[:-k], s.values[k:]) if m > 0 else (s.values[k:], s.values[:-k])
    ea, eb = (s.err[:-k], s.err[k:]) if m > 0 else (s.err[k:], s.err[:-k])
    dev = np.abs(b - a) + ea + eb
    j = int(np.argmax(dev))
    n = s.lo + j if m > 0 else s.lo + k + j
    return float(dev[j]) * (1 + 4 * _EPS), n


def find_epsilon_periods(s: SequenceWindow, eps: float, p: int, shifts: tuple | None = None) -> EpsilonPeriodSearch:
    """For consecutive length-p intervals of shifts, look for an m with
    sup_n |a_{n+m} - a_n| < eps over all n where both terms lie in the window.

    ``shifts`` is the inclusive range of positive shifts examined; it defaults
    to [1, (hi - lo) // 2] so that every shift keeps half the window.
    """
    if p < 1:
        raise InvalidInputError("p must be >= 1")
    if not eps > 0:
        raise InvalidInputError("eps must be positive")
    lo_shift, hi_shift = shifts if shifts is not None else (1, (s.hi - s.lo) // 2)
    if lo_shift < 1 or hi_shift >= len(s) or hi_shift - lo_shift + 1 < p:
        raise InsufficientDataError(
            f"window [{s.lo}, {s.hi}] cannot test a length-{p} interval of shifts in [{lo_shift}, {hi_shift}]"
        )
    out = []
    start = lo_shift
    while start + p - 1 <= hi_shift:
        stop = start + p - 1
        found, witnesses = None, []
        for m in range(start, stop + 1):
            dev, n = shift_deviation(s, m)
            if dev < eps:
                found = m
                break
            witnesses.append((m, n, dev))
        out.append(IntervalCheck(start, stop, found, () if found else tuple(witnesses)))
        start += p
    return EpsilonPeriodSearch(eps, p, (s.lo, s.hi), tuple(out))


@dataclass(frozen=True)
class StepFalsification:
    p: int
    eps: float
    interval: tuple
    witnesses: tuple  # (m, n, |a_{n+m} - a_n|)

    @property
    def succeeded(self) -> bool:
        return len(self.witnesses) == self.p and all(j >= self.eps for _, _, j in self.witnesses)


def ap_falsify_step(p: int, eps: float, window: tuple | None = None) -> StepFalsification:
    """Show that no shift in [1, p] is an eps-period of the unit step.

    For each m the point n = -m jumps across 0, so |a_{n+m} - a_n| = 1.
    """
    if p < 1:
        raise InvalidInputError("p must be >= 1")
    if not 0 < eps < 1:
        raise InvalidInputError(f"eps must lie in (0, 1), got {eps}; no falsification is claimed otherwise")
    lo, hi = window if window is not None else (-p - 1, p + 1)
    if lo > -p - 1 or hi < p + 1:
        raise InvalidInputError(f"window [{lo}, {hi}] must contain [{-p - 1}, {p + 1}]")
    s = SequenceWindow.step(lo, hi)
    witnesses = []
    for m in range(1, p + 1):
        n = -m
        a, b = s[n], s[n + m]
        jump = abs(complex(b.re - a.re, b.im - a.im))
        witnesses.append((m, n, jump))
    return StepFalsification(p, eps, (1, p), tuple(witnesses))


# --------------------------------------------------------------------------
# logarithms


def bounded_log(s: SequenceWindow, separation: float) -> SequenceWindow:
    """Principal logarithm b_n of each a_n, with Im b_n in (-pi, pi].

    Since separation <= |a_n| <= sup |a|, the real parts are pinned between
    log(separation) and log(sup |a|), so the result is a bounded sequence.
    """
    if not separation > 0:
        raise InvalidInputError("separation must be positive")
    mod = np.abs(s.values)
    bad = np.nonzero(mod < separation)[0]
    if len(bad):
        n = s.lo + int(bad[0])
        raise NotInvertibleError(f"|a_{n}| = {mod[bad[0]]:.3g} is below the separation {separation}")
    arg = np.angle(s.values)
    arg = np.where(arg <= -np.pi, np.pi, arg)
    logs = np.log(mod) + 1j * arg
    err = s.err / np.maximum(mod - s.err, np.finfo(float).tiny) + 8 * _EPS * (1 + np.abs(logs))
    return SequenceWindow(s.lo, s.hi, logs, err, f"log({s.source})")


# --------------------------------------------------------------------------
# distance to the step sequence


@dataclass
class GapReport:
    candidate: str
    window: tuple
    eps: float
    delta: float
    p: int
    sup_distance: float
    sup_distance_err: float
    argmax_n: int
    discrete_distance: float
    continuous_sup: float
    triangle_check: bool
    pipeline_ran: bool = False
    n0: int | None = None
    threshold: float | None = None
    near_periods: list = field(default_factory=list)
    lower_bound: float | None = None
    observed: list = field(default_factory=list)
    eq2_holds: bool | None = None
    wiener_trace: list = field(default_factory=list)
    beats_record: bool = True

    def rows(self) -> list[tuple]:
        out = [
            ("candidate", self.candidate),
            ("window_lo", self.window[0]),
            ("window_hi", self.window[1]),
            ("eps", self.eps),
            ("delta", self.delta),
            ("p", self.p),
            ("sup_distance", self.sup_distance),
            ("sup_distance_err", self.sup_distance_err),
            ("argmax_n", self.argmax_n),
            ("discrete_distance", self.discrete_distance),
            ("continuous_sup", self.continuous_sup),
            ("triangle_check", self.triangle_check),
            ("pipeline_ran", self.pipeline_ran),
            ("beats_record", self.beats_record),
        ]
        if self.pipeline_ran:
            out += [
                ("n0", self.n0),
                ("threshold", self.threshold),
                ("lower_bound", self.lower_bound),
                ("eq2_holds", self.eq2_holds),
            ]
            out += [(f"near_period_{k}", m) for k, m in enumerate(self.near_periods)]
            out += [(f"observed_{k}", v) for k, v in enumerate(self.observed)]
            out += [(f"wiener_avg_k{k}", a) for k, a, _ in self.wiener_trace]
            out += [(f"wiener_floor_k{k}", f) for k, _, f in self.wiener_trace]
        return out


def _pick(n_idx: np.ndarray, dist: np.ndarray, prefer_nonneg: bool = False) -> int:
    top = dist.max()
    ties = n_idx[dist >= top - 1e-12]
    if prefer_nonneg and np.any(ties >= 0):
        ties = ties[ties >= 0]
    order = sorted(ties.tolist(), key=lambda n: (abs(n), n))
    return int(order[0])


def _as_sum(m) -> MeasureSum:
    if isinstance(m, MeasureSum):
        return m
    if isinstance(m, DiscreteMeasure):
        return MeasureSum(m, ())
    return MeasureSum(DiscreteMeasure(), (m,))


def density_gap_report(
    candidate,
    target: SequenceWindow,
    eps: float,
    delta: float,
    p: int,
    best_so_far: float | None = None,
    name: str = "candidate",
) -> GapReport:
    """Distance sup_n |mu^(n) - a_n| over the target's window.

    When the candidate comes within ``delta`` of the target the argument that
    rules out density is replayed: a point n0 where the discrete part misses
    the target, near-periods m_k of the discrete transform in consecutive
    length-p blocks, the lower bound |mu_c^(n0 + m_k)| > thr - eps - delta,
    and the Wiener averages of the continuous part against their forced floor.
    """
    if not isinstance(target, SequenceWindow):
        raise InvalidInputError("target must be a SequenceWindow")
    if not (eps > 0 and delta > 0 and p >= 1):
        raise InvalidInputError("eps, delta must be positive and p >= 1")
    mu = _as_sum(candidate)
    lo, hi = target.lo, target.hi
    d = SequenceWindow.from_measure(mu.discrete, lo, hi)
    c_vals, c_errs = [], []
    for n in range(lo, hi + 1):
        c = mu.continuous_coefficient(n).to_approx()
        c_vals.append(complex(c.re, c.im))
        c_errs.append(c.err)
    c_vals, c_errs = np.array(c_vals), np.array(c_errs)
    a = target.values
    idx = target.indices()

    total = d.values + c_vals
    total_err = d.err + c_errs + target.err
    dist = np.abs(total - a)
    disc_dist = np.abs(d.values - a)
    sup = float(dist.max())
    argmax = _pick(idx, dist)
    disc_sup = float(disc_dist.max())
    cont_sup = float(np.abs(c_vals).max())
    slack = float(total_err.max() + d.err.max() + c_errs.max()) + 16 * _EPS
    report = GapReport(
        candidate=name,
        window=(lo, hi),
        eps=eps,
        delta=delta,
        p=p,
        sup_distance=sup,
        sup_distance_err=float(total_err.max() + 4 * _EPS),
        argmax_n=argmax,
        discrete_distance=disc_sup,
        continuous_sup=cont_sup,
        triangle_check=bool(sup >= disc_sup - cont_sup - slack),
        beats_record=best_so_far is None or sup < best_so_far,
    )
    if sup >= delta:
        return report

    report.pipeline_ran = True
    n0 = _pick(idx, disc_dist, prefer_nonneg=True)
    threshold = disc_sup / 2
    direction = 1 if n0 >= 0 else -1
    d0 = d.values[n0 - lo]
    near, observed = [], []
    k = 0
    while True:
        block = [n0 + direction * m for m in range(k * p + 1, (k + 1) * p + 1)]
        if not all(lo <= n <= hi for n in block):
            break
        mk = None
        for m in range(k * p + 1, (k + 1) * p + 1):
            n = n0 + direction * m
            if abs(d.values[n - lo] - d0) + d.err[n - lo] + d.err[n0 - lo] < eps:
                mk = m
                break
        near.append(mk)
        if mk is not None:
            observed.append(float(abs(c_vals[n0 + direction * mk - lo])))
        k += 1
    lb = threshold - eps - delta
    report.n0 = n0
    report.threshold = threshold
    report.near_periods = near
    report.lower_bound = lb
    report.observed = observed
    report.eq2_holds = bool(all(v >= lb - slack for v in observed))
    hits = [n0 + direction * m for m in near if m is not None]
    trace = []
    k = 1
    while k * p + abs(n0) <= min(-lo, hi):
        r = k * p + abs(n0)
        seg = c_vals[-r - lo : r - lo + 1]
        avg = float(np.mean(np.abs(seg) ** 2))
        # each near-period point inside [-r, r] contributes at least lb^2
        inside = sum(1 for n in hits if -r <= n <= r)
        floor = inside * max(lb, 0.0) ** 2 / (2 * r + 1)
        trace.append((k, avg, floor))
        k += 1
    report.wiener_trace = trace
    return report
