import itertools
import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from cml.arith import ComplexRational, FloatAngle, reduce_angle
from cml.errors import (
    InsufficientDataError,
    InvalidInputError,
    NotApplicableError,
    NotDecidableError,
    ResourceLimitError,
)
from cml.gelfand import (
    ObstructionWitness,
    enumerate_idempotents,
    exp_obstruction,
    filter_limit,
    idempotent_from_residues,
    is_idempotent,
    natural_spectrum_gap,
    rational_multiple_of_pi,
    separation_limits,
    spectral_radius_upper,
    transform_indicator_holds,
    trigpoly_spectrum,
)
from cml.lacunary import CoeffRule, IndexSet, LacunarySequence, RieszProductSpec
from cml.measures import DiscreteMeasure, TrigPolynomial, exact_fourier_coefficient

HALF, QUARTER = Fraction(1, 2), Fraction(1, 4)


def half_pair():
    return DiscreteMeasure([(reduce_angle(0, 1), HALF), (reduce_angle(1, 2), HALF)])


def test_idempotent_from_residues_examples():
    assert idempotent_from_residues(1, {0}) == DiscreteMeasure.point()
    assert idempotent_from_residues(2, {0}) == half_pair()
    assert idempotent_from_residues(2, set()) == DiscreteMeasure()


def test_is_idempotent_examples():
    assert is_idempotent(half_pair())
    assert not is_idempotent(DiscreteMeasure.point(1, 2))
    assert is_idempotent(DiscreteMeasure())


def test_is_idempotent_rejects_float_atoms():
    with pytest.raises(NotDecidableError):
        is_idempotent(DiscreteMeasure([(FloatAngle(0.1), 1)]))


@pytest.mark.parametrize("q,count", [(1, 2), (2, 4), (3, 8)])
def test_enumerate_counts(q, count):
    found = enumerate_idempotents(q)
    assert len(found) == count
    assert all(is_idempotent(m) for m in found)


def test_enumerate_q1_is_zero_and_delta():
    assert set(map(repr, enumerate_idempotents(1))) == {repr(DiscreteMeasure()), repr(DiscreteMeasure.point())}


def test_enumerate_guard():
    with pytest.raises(ResourceLimitError):
        enumerate_idempotents(17)


@pytest.mark.parametrize("q", range(1, 7))
def test_every_residue_subset_gives_an_idempotent(q):
    for r in range(q + 1):
        for S in itertools.combinations(range(q), r):
            m = idempotent_from_residues(q, S)
            assert is_idempotent(m)
            # oracle: transform is the indicator of n mod q in S
            for n in range(-4 * q, 4 * q + 1):
                want = ComplexRational(1 if n % q in S else 0)
                assert exact_fourier_coefficient(m, n) == want
            assert transform_indicator_holds(m, q, S)


def test_transform_indicator_detects_mismatch():
    assert not transform_indicator_holds(half_pair(), 2, {1})


@pytest.mark.parametrize(
    "coeffs,want",
    [
        ({0: 1}, [0, 1]),
        ({0: 2, 5: 3}, [0, 2, 3]),
        ({-4: QUARTER, 0: 1, 4: QUARTER}, [0, QUARTER, 1]),
    ],
)
def test_trigpoly_spectrum_examples(coeffs, want):
    r = trigpoly_spectrum(TrigPolynomial(coeffs))
    assert r.kind == "finite-set"
    assert r.points == [ComplexRational(w) for w in want]


@given(st.dictionaries(st.integers(-20, 20), st.fractions(-3, 3, max_denominator=4), max_size=6))
def test_trigpoly_spectrum_is_coefficient_image_with_zero(coeffs):
    P = TrigPolynomial(coeffs)
    pts = trigpoly_spectrum(P).points
    image = {ComplexRational(c) for c in coeffs.values() if c != 0} | {ComplexRational(0)}
    assert len(pts) == len(image)
    assert set(pts) == image


@pytest.mark.parametrize(
    "m,M,want",
    [
        (DiscreteMeasure.point(1, 3), 3, [1, 1, 1]),
        (DiscreteMeasure.point(0, 1, 2), 2, [2, 2]),
        (DiscreteMeasure([((1, 4), HALF), ((3, 4), HALF)]), 2, [1, 1]),
    ],
)
def test_spectral_radius_examples(m, M, want):
    b = spectral_radius_upper(m, M)
    for (lo, hi), w in zip(b.enclosures, want):
        assert lo <= w <= hi
    assert b.upper == want[-1]


def test_spectral_radius_power_guard():
    with pytest.raises(ResourceLimitError):
        spectral_radius_upper(DiscreteMeasure.point(), 13)


probability_measures = st.lists(
    st.tuples(st.integers(0, 11), st.integers(1, 12), st.integers(1, 5)), min_size=1, max_size=4
).map(
    lambda raw: DiscreteMeasure(
        [(reduce_angle(p, q), Fraction(w, sum(x[2] for x in raw))) for p, q, w in raw]
    )
)


@settings(max_examples=25, deadline=None)
@given(probability_measures, st.integers(1, 5))
def test_spectral_radius_of_probability_measure_is_one(m, M):
    b = spectral_radius_upper(m, M)
    assert all(x >= y for x, y in zip(b.running_min, b.running_min[1:]))
    for lo, hi in b.enclosures:
        assert lo <= 1 <= hi
        assert hi - lo <= 1e-12


def riesz(base, K, rule):
    return RieszProductSpec(LacunarySequence.power(base, K), rule, K)


@pytest.mark.parametrize("base", [4, 3])
def test_natural_spectrum_gap_reports(base):
    spec = riesz(base, 6, CoeffRule.constant(1))
    r = natural_spectrum_gap(spec, 200)
    assert r.precondition == "ok" and r.claimed == "disk"
    assert (r.radius_lo, r.radius_hi) == (1.0, 1.0)
    assert r.witness == 1j
    # oracle: every coefficient |n| <= W is a product of halves, so lies in [0, 1]
    assert all(isinstance(x, Fraction) and 0 <= x <= 1 for x in r.points)
    assert 1 in r.points
    assert r.gap == math.sqrt(1 + float(min(r.points)) ** 2) >= 1


def test_natural_spectrum_gap_base_four_misses_zero_frequencies():
    r = natural_spectrum_gap(riesz(4, 6, CoeffRule.constant(1)), 200)
    assert 0 in r.points and r.gap == 1.0


def test_natural_spectrum_gap_precondition_fails():
    r = natural_spectrum_gap(riesz(4, 6, CoeffRule.geometric(HALF)), 100)
    assert r.precondition.startswith("failed")
    assert r.claimed is None and r.witness is None


def brute_drift(alpha, M):
    """(m, s, drift) minimizing |m*alpha - 2*pi*s| over 1 <= m <= M, all s."""
    best = None
    with mpmath.workprec(160):
        a, two_pi = mpmath.mpf(alpha), 2 * mpmath.pi
        for m in range(1, M + 1):
            s = int(mpmath.nint(m * a / two_pi))
            d = abs(m * a - two_pi * s)
            if best is None or d < best[2]:
                best = (m, s, d)
    return best[0], best[1], float(best[2])


def closed_form(expr):
    with mpmath.workprec(160):
        return float(expr(mpmath.pi))


def test_exp_obstruction_examples():
    w = exp_obstruction(1.0, 10, 50)
    assert (w.m, w.s, w.k) == (44, 7, 565)
    assert abs(w.drift - closed_form(lambda pi: 44 - 14 * pi)) <= 1e-15
    assert abs(w.drift - 0.01771) < 1e-4
    w = exp_obstruction(1.0, 1, 20)
    assert (w.m, w.s, w.k) == (19, 3, 7)
    assert abs(w.drift - closed_form(lambda pi: 19 - 6 * pi)) <= 1e-15
    assert abs(w.drift - 0.1504) < 1e-4


@pytest.mark.parametrize("alpha", [math.pi / 2, math.pi, 2 * math.pi / 3, 3 * math.pi / 7, 0.0])
def test_exp_obstruction_not_applicable(alpha):
    assert rational_multiple_of_pi(alpha) is not None
    with pytest.raises(NotApplicableError):
        exp_obstruction(alpha, 1, 20)


def test_rationality_test_passes_one_radian():
    assert rational_multiple_of_pi(1.0) is None


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 6.2), st.floats(0.1, 100), st.integers(1, 300))
def test_exp_obstruction_invariants(alpha, B, M):
    assume(rational_multiple_of_pi(alpha) is None)
    w = exp_obstruction(alpha, B, M)
    assert w.drift > 0 and w.k * w.drift >= B
    with mpmath.workprec(160):
        exact = abs(w.m * mpmath.mpf(alpha) - 2 * mpmath.pi * w.s)
        assert abs(float(exact) - w.drift) <= 1e-12
        # no other s does better for this m
        for s in (w.s - 1, w.s + 1):
            assert abs(w.m * mpmath.mpf(alpha) - 2 * mpmath.pi * s) > exact
    # oracle: the scan over every m <= M finds nothing smaller
    _, _, best = brute_drift(alpha, M)
    assert w.drift <= best + 1e-12


def test_witness_invariants_enforced():
    with pytest.raises(InvalidInputError):
        ObstructionWitness(1.0, 44, 7, 0.0177, 1, 10.0, [])


def test_filter_limit_along_own_frequencies():
    seq = LacunarySequence.power(4, 20)
    X = IndexSet((3, 7, 15))
    mu = RieszProductSpec(seq, CoeffRule.indicator(X), 20)
    r = filter_limit(mu, [seq.term(k) for k in X], 1e-9)
    assert r.converged and r.limit == HALF


def test_filter_limit_along_disjoint_frequencies():
    seq = LacunarySequence.power(4, 20)
    mu = RieszProductSpec(seq, CoeffRule.indicator(IndexSet((3, 7, 15))), 20)
    r = filter_limit(mu, [seq.term(k) for k in (4, 9, 20)], 1e-9)
    assert r.converged and r.limit == 0


def test_filter_limit_oscillation():
    r = filter_limit(lambda n: (-1) ** n, range(-50, 51), 0.1)
    assert not r.converged and r.limit is None
    assert (r.liminf, r.limsup) == (-1, 1)


def test_filter_limit_needs_data():
    with pytest.raises(InsufficientDataError):
        filter_limit(DiscreteMeasure.point(), [100, 200], 0.1, horizon=10)


@st.composite
def disjoint_index_sets(draw):
    picks = draw(st.lists(st.sampled_from("xy-"), min_size=20, max_size=20))
    X = tuple(k + 1 for k, c in enumerate(picks) if c == "x")
    Y = tuple(k + 1 for k, c in enumerate(picks) if c == "y")
    assume(X and Y)
    return IndexSet(X), IndexSet(Y)


@settings(max_examples=30, deadline=None)
@given(disjoint_index_sets(), st.sampled_from([3, 4]))
def test_separation_property(sets, base):
    X, Y = sets
    on_x, on_y = separation_limits(LacunarySequence.power(base, 20), X, Y, 20)
    assert on_x.limit == HALF and on_y.limit == 0
    assert on_x.limit != on_y.limit


def test_separation_rejects_overlap():
    with pytest.raises(InvalidInputError):
        separation_limits(LacunarySequence.power(4, 5), IndexSet((1, 2)), IndexSet((2, 3)), 5)
