import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from divcorr import diophantine as dio
from divcorr.errors import (ConstructionInfeasible, PrecisionExhausted,
                            ThetaParseError)
from divcorr.realfield import psi_parse


def surd_cf_oracle(d: int, K: int):
    """Independent expansion: high-precision floor recurrence in mpmath."""
    with mpmath.workprec(64 * (K + 8)):
        x = mpmath.sqrt(d)
        out = []
        for _ in range(K + 1):
            a = int(mpmath.floor(x))
            out.append(a)
            x = 1 / (x - a)
        return out


# --- expansion and convergents ----------------------------------------------


def test_surd_expansion_against_oracle():
    for d in (2, 3, 5, 7, 13, 61):
        cf = dio.cf_expand_surd(d, 18)
        assert list(cf.quotients) == surd_cf_oracle(d, 18)


def test_surd_periods():
    assert dio.cf_expand_surd(2, 6).period == (2,)
    assert dio.cf_expand_surd(3, 6).period == (1, 2)
    with pytest.raises(ValueError):
        dio.cf_expand_surd(4, 5)
    with pytest.raises(ValueError):
        dio.cf_expand_surd(1, 5)


def test_golden_expansion():
    cf = dio.theta_parse("golden").continued_fraction(9)
    assert list(cf.quotients) == [1] * 10


def test_cf_expand_from_big_real():
    with mpmath.workprec(300):
        s2 = mpmath.sqrt(2)
    cf = dio.cf_expand(s2, 20)
    assert list(cf.quotients) == [1] + [2] * 20


def test_cf_expand_rational_degenerates():
    with pytest.raises(PrecisionExhausted) as ei:
        dio.cf_expand(mpmath.mpf(22) / 7, 10)
    assert ei.value.last_certified is not None


def test_convergents_sqrt2_prefix():
    cf = dio.cf_expand_surd(2, 4)
    convs = dio.convergents(cf)
    assert [(c.n, c.m) for c in convs] == [(1, 1), (3, 2), (7, 5), (17, 12),
                                           (41, 29)]


def test_golden_denominators_are_fibonacci():
    cf = dio.theta_parse("golden").continued_fraction(25)
    convs = dio.convergents(cf)
    for c in convs:
        assert c.m == dio.fibonacci(c.k + 1)


def test_determinant_identity_exact():
    cf = dio.cf_expand_surd(61, 40)
    convs = dio.convergents(cf)
    for k in range(1, len(convs)):
        det = convs[k].n * convs[k - 1].m - convs[k - 1].n * convs[k].m
        assert det == (-1) ** (k - 1)
        assert math.gcd(convs[k].n, convs[k].m) == 1


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 50), min_size=2, max_size=14),
       st.integers(0, 9))
def test_determinant_identity_random_cf(quots, a0):
    cf = dio.ContinuedFraction(tuple([a0] + quots))
    convs = dio.convergents(cf)
    for k in range(1, len(convs)):
        det = convs[k].n * convs[k - 1].m - convs[k - 1].n * convs[k].m
        assert det == (-1) ** (k - 1)
        assert convs[k].m >= dio.fibonacci(k + 1)


def test_binet_matches_exact():
    for k in range(1, 60):
        assert round(dio.binet_fibonacci(k)) == dio.fibonacci(k)


# --- invariants bundle -------------------------------------------------------


@pytest.mark.parametrize("spec", ["surd:2", "surd:3", "golden"])
def test_convergent_invariants_classics(spec):
    rep = dio.convergent_invariants(dio.theta_parse(spec), 50)
    assert rep.all_ok
    assert rep.sandwich_checked >= 49
    assert rep.fibonacci_all_equal == (spec == "golden")


def test_best_approximation_sqrt2():
    # brute force over 1 <= m < m_{k+1}, m != m_k, for every k <= 10
    theta = dio.theta_parse("surd:2")
    cf = theta.continued_fraction(11)
    convs = dio.convergents(cf)
    with mpmath.workprec(100):
        s2 = mpmath.sqrt(2)
        for k in range(10 + 1):
            mk = convs[k].m
            best = abs(mk * s2 - convs[k].n)
            nxt = convs[k + 1].m
            for m in range(1, nxt):
                if m == mk:
                    continue
                d = abs(m * s2 - mpmath.nint(m * s2))
                assert best < d


# --- distances ---------------------------------------------------------------


def test_nearest_distance_examples():
    t2 = dio.theta_parse("surd:2")
    assert float(dio.nearest_distance(t2, 5)) == pytest.approx(
        abs(5 * math.sqrt(2) - 7), rel=1e-10)
    g = dio.theta_parse("golden")
    assert float(dio.nearest_distance(g, 1)) == pytest.approx(
        (1 + math.sqrt(5)) / 2 - 1 - 0.236067977, abs=1e-6)
    assert float(dio.nearest_distance(g, 1)) == pytest.approx(0.381966011,
                                                              abs=1e-8)


def test_distance_folds_to_half_at_exact_tie():
    # the fold reports 1/2 exactly at a midpoint tie (only decidable for an
    # exact anchor; irrational theta never lands on the tie)
    enc = dio.Enclosure(Fraction(1, 4), -math.inf, 0)
    d, err = dio._dist_from_enclosure(enc, 2)
    assert d == Fraction(1, 2) and err == -math.inf


def test_distance_fold_range():
    enc = dio.Enclosure(Fraction(7, 10), -math.inf, 0)
    d, _ = dio._dist_from_enclosure(enc, 1)
    assert d == Fraction(3, 10)  # folds down from 0.7
    d, _ = dio._dist_from_enclosure(enc, 3)
    assert d == Fraction(1, 10)  # 2.1 -> 0.1


def test_nearest_distance_rejects_rational():
    with pytest.raises(ValueError):
        dio.nearest_distance(dio.theta_parse("rat:3/2"), 4)


def test_tau_beta_residual_matches_construction():
    # ||16 tau_2|| = 2^-12 (1 + O(2^-65508)): the partial-sum residual
    t = dio.theta_parse("taubeta:2/1:4")
    d = dio.nearest_distance(t, 16)
    assert float(mpmath.log(d, 2)) == pytest.approx(-12.0, abs=1e-6)
    d2 = dio.nearest_distance(t, 65536)
    assert float(mpmath.log(d2, 2)) == pytest.approx(-65520.0, abs=1e-3)


# --- Legendre ----------------------------------------------------------------


def test_legendre_predicate_examples():
    pi = dio.DecimalTheta("3.14159265358979323846264338327950288")
    assert dio.legendre_is_convergent(pi, 22, 7)  # |22 - 7 pi| ~ 0.0089 < 1/14
    assert not dio.legendre_is_convergent(pi, 13, 4)  # 0.434 > 1/8
    t2 = dio.theta_parse("surd:2")
    assert dio.legendre_is_convergent(t2, 7, 5)
    # reduction convention: 6/4 reduces to 3/2
    assert dio.legendre_is_convergent(t2, 6, 4) == \
        dio.legendre_is_convergent(t2, 3, 2)
    with pytest.raises(ValueError):
        dio.legendre_is_convergent(t2, 1, 0)


def brute_legendre(theta_float: float, M: int):
    out = []
    for m in range(1, M + 1):
        d = abs(m * theta_float - round(m * theta_float))
        if d < 1 / (2 * m):
            out.append(m)
    return out


@pytest.mark.parametrize("spec,value", [("surd:2", math.sqrt(2)),
                                        ("surd:3", math.sqrt(3)),
                                        ("golden", (1 + math.sqrt(5)) / 2)])
def test_legendre_hits_match_float_brute(spec, value):
    # doubles are exact enough at M = 2000 (margins are Theta(1/m))
    hits = dio.legendre_hits(dio.theta_parse(spec), 2000)
    assert hits == brute_legendre(value, 2000)


def test_legendre_hits_are_convergent_denominators():
    for spec in ("surd:2", "surd:3", "golden"):
        theta = dio.theta_parse(spec)
        hits = dio.legendre_hits(theta, 10**4)
        dens = {c.m for c in dio.convergents(theta.continued_fraction(40))}
        assert set(hits) <= dens


# --- theta parsing -----------------------------------------------------------


def test_theta_parse_specs():
    assert dio.theta_parse("rat:6/4").spec == "rat:3/2"
    assert dio.theta_parse("surd:2").d == 2
    assert isinstance(dio.theta_parse("golden"), dio.GoldenTheta)
    cf = dio.theta_parse("cf:[1;2,2,2]")
    assert cf.cf.quotients == (1, 2, 2, 2)
    tb = dio.theta_parse("taubeta:3/2:3")
    assert (tb.a, tb.b, tb.depth) == (3, 2, 3)
    dec = dio.theta_parse("dec:1.5")
    assert dec.exact == Fraction(3, 2)


def test_theta_parse_errors():
    for bad in ("", "frob:1", "surd:4", "surd:x", "rat:0/1", "cf:1;2",
                "taubeta:2/3:4", "golden:1", "dec:-2"):
        with pytest.raises((ThetaParseError, ValueError)):
            dio.theta_parse(bad)


# --- scans -------------------------------------------------------------------


def brute_scan(theta_float: float, psi, M: int):
    hits = []
    for m in range(1, M + 1):
        d = abs(m * theta_float - round(m * theta_float))
        if d < 1 / float(psi.eval(m)):
            hits.append(m)
    return hits


def test_scan_sqrt2_pow3_matches_brute():
    psi = psi_parse("pow:3")
    theta = dio.theta_parse("surd:2")
    res = dio.approximability_scan(theta, psi, 10**4)
    assert res.certified_to == 10**4
    assert res.hits == brute_scan(math.sqrt(2), psi, 10**4)
    # no nontrivial approximations: sqrt2 has bounded quotients
    assert all(m <= 1 for m in res.hits)


def test_scan_golden_hurwitz_band():
    psi = psi_parse("scale:0.4:pow:1")  # threshold 2.5/m > 1/(sqrt5 m)
    theta = dio.theta_parse("golden")
    res = dio.approximability_scan(theta, psi, 1000)
    phi = (1 + math.sqrt(5)) / 2
    assert res.hits == brute_scan(phi, psi, 1000)
    fib = [1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377, 610, 987]
    assert set(fib) <= set(res.hits)


def test_scan_tau_beta_acceptance_pattern():
    theta = dio.theta_parse("taubeta:2/1:4")
    res = dio.approximability_scan(theta, psi_parse("exp:1.5"), 2**16)
    assert res.certified_to == 2**16
    assert {16, 65536} <= set(res.hits)
    res3 = dio.approximability_scan(theta, psi_parse("exp:3"), 2**16)
    assert all(m <= 4 for m in res3.hits)


def test_scan_includes_convergent_near_misses():
    theta = dio.theta_parse("surd:2")
    res = dio.approximability_scan(theta, psi_parse("pow:3"), 10**4)
    conv_events = [e.m for e in res.events if e.is_convergent]
    assert set([1, 2, 5, 12, 29, 70]) <= set(conv_events)
    for e in res.events:
        assert e.hit == (e.dist < e.threshold)


# --- constructions -----------------------------------------------------------


def test_construct_tau_beta_dyadic():
    num = dio.construct_tau_beta(2, 1, 4)
    assert num.partial == Fraction(53249, 65536)
    assert float(num.value(64)) == 0.8125152587890625
    assert num.exponents == (1, 2, 4, 16)


def test_construct_tau_beta_depth1():
    assert float(dio.construct_tau_beta(2, 1, 1).value(64)) == 0.5


def test_construct_tau_beta_exponent_towers():
    num = dio.construct_tau_beta(3, 2, 3)
    assert num.exponents == (1, 3, 27)


def test_construct_tau_beta_depth_budget():
    with pytest.raises(PrecisionExhausted) as ei:
        dio.construct_tau_beta(2, 1, 8)
    assert ei.value.last_certified == 5  # max safe depth for beta = 2


def test_construct_tau_beta_validation():
    with pytest.raises(ValueError):
        dio.construct_tau_beta(2, 3, 2)  # beta < 1
    with pytest.raises(ValueError):
        dio.construct_tau_beta(4, 2, 2)  # not coprime
    with pytest.raises(PrecisionExhausted):
        dio.construct_tau_beta(2, 1, 4, precision_bits=8)


def test_construct_jarnik_exp3():
    cf = dio.construct_jarnik(psi_parse("exp:3"), 4)
    assert cf.quotients[:4] == (0, 1, 3, 21)
    convs = dio.convergents(cf)
    # target: ||m_k theta|| < 1/psi(m_k), i.e. m_{k+1} >= psi(m_k)
    psi = psi_parse("exp:3")
    for k in range(2, len(convs) - 1):
        assert math.log2(convs[k + 1].m) >= psi.log2(convs[k].m)


def test_construct_jarnik_posteriori_distances():
    psi = psi_parse("exp:3")
    theta = dio.JarnikTheta(psi, 4)
    convs = dio.convergents(theta.cf)
    for k in range(2, len(convs) - 1):
        # exact guarantee: m_{k+1} >= psi(m_k), hence ||m_k theta|| < 1/psi(m_k)
        assert convs[k + 1].m >= psi.eval_fraction(convs[k].m)
        d = dio.nearest_distance(theta, convs[k].m)
        assert d * psi.eval(convs[k].m, 96) < 1 + 1e-9
    est = dio.irrationality_base_estimate(theta.cf)
    assert est.estimate == pytest.approx(3.0, rel=0.20)


def test_construct_jarnik_expexp_budget():
    with pytest.raises(PrecisionExhausted) as ei:
        dio.construct_jarnik(psi_parse("expexp"), 6)
    assert ei.value.partial.quotients == (0, 1, 16)
    # the theta spec degrades to the constructible prefix
    jt = dio.theta_parse("jarnik:expexp:6")
    assert jt.cf.quotients == (0, 1, 16)
    rep = dio.convergent_invariants(jt, 2)
    assert rep.all_ok


def test_construct_jarnik_infeasible():
    with pytest.raises(ConstructionInfeasible):
        dio.construct_jarnik(psi_parse("pow:1"), 8)


def test_base_estimate_classics():
    # polynomially approximable numbers: the m_k-th roots tend to 1
    assert dio.irrationality_base_estimate(
        dio.cf_expand_surd(2, 20)).estimate == pytest.approx(1.0, abs=0.05)
    golden_cf = dio.theta_parse("golden").continued_fraction(40)
    assert dio.irrationality_base_estimate(golden_cf).estimate == \
        pytest.approx(1.0, abs=0.05)


def test_base_estimate_tau_beta():
    theta = dio.theta_parse("taubeta:2/1:5")
    try:
        cf = dio.cf_expand(theta, 40)
    except PrecisionExhausted as e:
        cf = e.partial
    est = dio.irrationality_base_estimate(cf)
    assert est.estimate == pytest.approx(2.0, rel=0.15)
    assert est.low <= est.estimate <= est.high


def test_base_estimate_needs_three():
    with pytest.raises(ValueError):
        dio.irrationality_base_estimate(dio.ContinuedFraction((1, 2)))
