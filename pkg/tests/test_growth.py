import math
import random

import pytest
from oracles import free_group_census, heisenberg_census

from growthlab.errors import ParameterError
from growthlab.growth import (
    BallCensus,
    element_length,
    entropy_report,
    enumerate_ball,
    enumerate_ball_elements,
    enumerate_closure,
    distortion_profile,
    fit_exponential_rate,
    fit_polynomial_degree,
    kernel_subgroup,
    plot_data,
    quotient_sandwich_check,
    tail_subgroup,
)
from growthlab.models import PolycyclicPresentation, evaluate_word
from growthlab.words import parse_word

Z = PolycyclicPresentation([("t", "T")], {}, name="Z")
TRIVIAL = PolycyclicPresentation([], {}, name="trivial")


def test_radius_zero(load):
    for name in ("free2", "heisenberg", "sol_fib", "modp5"):
        assert enumerate_ball(load(name), 0).counts == (1,)


def test_free_group_closed_form(load):
    assert list(enumerate_ball(load("free2"), 8).counts) == free_group_census(8)


def test_heisenberg_matches_bfs_oracle(load):
    assert list(enumerate_ball(load("heisenberg"), 10).counts) == heisenberg_census(10)


def test_modp_spheres_eventually_constant(load):
    c = enumerate_ball(load("modp5"), 20)
    s = c.spheres
    assert len(set(s[8:])) == 1 and s[-1] > 0


def test_no_generators():
    c = enumerate_ball(Z, 5, generators=[])
    assert c.counts == (1,) * 6
    assert enumerate_ball(TRIVIAL, 4).counts == (1,) * 5


def test_truncation_keeps_complete_radii(load):
    c = enumerate_ball(load("free2"), 12, cap_elements=1000)
    assert c.truncated and c.requested_radius == 12
    assert list(c.counts) == free_group_census(c.radius)
    assert c.to_csv().splitlines()[-1].endswith(",true")


def test_census_csv_roundtrip(load):
    c = enumerate_ball(load("heisenberg"), 5)
    text = c.to_csv()
    assert text.splitlines()[0] == "radius,cumulative,sphere,truncated"
    assert BallCensus.from_csv(text).counts == c.counts


@pytest.mark.parametrize("name", ["free2", "heisenberg", "heis_mod3", "sol_fib", "heis_by_z", "modp5", "z_cross_z2"])
def test_census_invariants(load, name):
    c = enumerate_ball(load(name), 6)
    assert c.counts[0] == 1
    assert all(s >= 0 for s in c.spheres)
    assert c.submultiplicative()


def test_threads_do_not_change_counts(load):
    H = load("heisenberg")
    a = enumerate_ball(H, 9, threads=1)
    b = enumerate_ball(H, 9, threads=4)
    assert a.to_csv() == b.to_csv()


def test_ball_symmetry(load):
    H = load("heisenberg")
    ball = enumerate_ball_elements(H, 6)
    for g, d in ball.distance.items():
        assert ball.distance[H.inverse(g)] == d


def test_element_length(load):
    H = load("heisenberg")
    assert element_length(H, H.identity(), 4) == 0
    assert element_length(H, H.generator(0), 4) == 1
    z = evaluate_word(H, parse_word(H.gens, "x y x^-1 y^-1"))
    assert element_length(H, z, 4) == 4
    assert element_length(H, H.power(z, 9), 4) is None


def test_triangle_inequality(load):
    H = load("heisenberg")
    ball = enumerate_ball_elements(H, 5)
    elems = sorted(ball.distance, key=H.key)
    rng = random.Random(3)
    for _ in range(500):
        g, h = rng.choice(elems), rng.choice(elems)
        bound = ball.distance[g] + ball.distance[h]
        n = element_length(H, H.multiply(g, h), bound)
        assert n is not None and n <= bound


# -- fits and entropy ---------------------------------------------------------

def test_fit_exact_power():
    fit = fit_polynomial_degree({R: R ** 2 for R in range(1, 30)}, (5, 25))
    assert fit.degree == pytest.approx(2.0, abs=1e-9)
    assert fit == fit_polynomial_degree({R: R ** 2 for R in range(1, 30)}, (5, 25))
    exp = fit_exponential_rate([3 ** R for R in range(20)], (4, 19))
    assert exp.rate == pytest.approx(math.log(3), abs=1e-9)


def test_fit_rejects_degenerate_windows():
    with pytest.raises(ParameterError):
        fit_polynomial_degree([1, 2, 3, 4], (2, 3))
    with pytest.raises(ParameterError):
        fit_polynomial_degree([1, 0, 3, 4, 5], (1, 4))


def test_entropy_trivial_group():
    rep = entropy_report(enumerate_ball(TRIVIAL, 6))
    assert rep.certified_upper == 0
    assert rep.classification == "polynomial-consistent"


def test_entropy_free_group(load):
    c = enumerate_ball(load("free2"), 10)
    rep = entropy_report(c)
    assert rep.certified_upper == pytest.approx(math.log(2 * 3 ** 10 - 1) / 10, rel=1e-12)
    assert rep.certified_upper == pytest.approx(1.168, abs=5e-4)
    assert rep.classification == "exponential-consistent"
    # the Fekete minimum sits at the largest radius once transients have passed
    ratios = [math.log(x) / r for r, x in enumerate(c.counts) if r >= 3]
    assert min(ratios) == ratios[-1]


def test_entropy_z():
    rep = entropy_report(enumerate_ball(Z, 10))
    assert rep.certified_upper == pytest.approx(math.log(21) / 10)
    assert rep.certified_upper < 0.35
    assert rep.classification == "polynomial-consistent"


def test_certified_upper_nonincreasing(load):
    c = enumerate_ball(load("heisenberg"), 14)
    vals = [entropy_report(BallCensus("h", "", c.counts[:R + 1], R)).certified_upper for R in range(4, 15)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_entropy_needs_four_radii(load):
    with pytest.raises(ParameterError):
        entropy_report(enumerate_ball(load("free2"), 3))


def test_entropy_warns_on_truncation(load):
    rep = entropy_report(enumerate_ball(load("free2"), 10, cap_elements=3000))
    assert rep.warnings


# -- distortion, closure, sandwich ---------------------------------------------

def test_distortion_metric_coincidence():
    prof = distortion_profile(Z, tail_subgroup(Z, "t"), 8)
    assert prof.values == tuple(range(9))


def test_heisenberg_center_distortion_monotone(load):
    P = load("heis_poly")
    xy = [P.gens.index(l) for l in "xXyY"]
    prof = distortion_profile(P, tail_subgroup(P, "z"), 10, generators=xy)
    assert all(a <= b for a, b in zip(prof.values, prof.values[1:]))
    # z-exponent oracle: [x^a, y^b] = z^{ab} has length 2(a+b)
    assert prof.values[8] == 4 and prof.values[10] == 6


def test_sol_kernel_distortion_grows(load):
    S = load("sol_fib")
    prof = distortion_profile(S, kernel_subgroup(S), 8)
    assert prof.values[-1] > 8
    assert prof.to_csv().startswith("radius,distortion,members,witness,truncated\n")


def test_closure():
    assert enumerate_closure(TRIVIAL, 10).order == 1


def test_closure_examples(load):
    assert enumerate_closure(load("heis_mod3")).order == 27
    res = enumerate_closure(load("heisenberg"), cap=10 ** 5)
    assert not res.finite and res.order is None


def test_sandwich_z_cross_z2(load):
    rep = quotient_sandwich_check(load("z_cross_z2"), 10)
    assert rep.holds and rep.kernel_order == 2
    assert list(rep.quotient_counts) == [2 * R + 1 for R in range(11)]
    # (n, ε) has length |n| + ε for S = {u, t, T}
    assert list(rep.group_counts) == [1] + [4 * R for R in range(1, 11)]


def test_sandwich_modp(load):
    rep = quotient_sandwich_check(load("modp5"), 10)
    assert rep.holds and rep.kernel_order == 5


def test_plot_data():
    assert plot_data([1, 2], [0.5, 3]) == "1 0.5\n2 3\n"
