"""Acceptance gate: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or directly with ``python3 tests/test_acceptance.py``.
"""

import csv
import itertools
import json
import math
import random
import resource
import sys
import time
from fractions import Fraction
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

from oracles import (  # noqa: E402
    evaluate_labels,
    evaluate_syllables,
    faithful,
    fixture,
    free_group_census,
    heisenberg_census,
    numpy_unit_circle,
    random_unimodular_suite,
)

from growthlab.cli import run  # noqa: E402
from growthlab.growth import (  # noqa: E402
    BallCensus,
    distortion_profile,
    enumerate_ball,
    enumerate_closure,
    entropy_report,
    fit_exponential_rate,
    fit_polynomial_degree,
    kernel_subgroup,
    quotient_sandwich_check,
    tail_subgroup,
)
from growthlab.models import evaluate_word, load_group_spec  # noqa: E402
from growthlab.rewriting import as_graded, collect_normal_form, measure_prefix_growth, push_right  # noqa: E402
from growthlab.spectra import (  # noqa: E402
    conjugation_matrix,
    lambda_max,
    osin_lower_bound,
    unit_circle_test,
)
from growthlab.words import Word, parse_word  # noqa: E402

RESULTS: list[str] = []


def report(n: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n:>2}: {title}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def census_from(path: Path) -> BallCensus:
    return BallCensus.from_csv(path.read_text())


def peak_rss_mb() -> float:
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024


def test_criterion_01_free_group(tmp_path):
    t0 = time.perf_counter()
    code_b = run(["ball", str(fixture("free2")), "--radius", "8", "-o", str(tmp_path / "b")])
    code_e = run(["entropy", str(fixture("free2")), "--radius", "8", "-o", str(tmp_path / "e")])
    elapsed = time.perf_counter() - t0
    counts = list(census_from(tmp_path / "b" / "census.csv").counts)
    ent = json.loads((tmp_path / "e" / "entropy.json").read_text())
    h = float(ent["certified_upper"])
    lo, hi = math.log(3), math.log(3) + 0.09
    ok = (code_b == code_e == 0 and counts == free_group_census(8) and lo <= h <= hi
          and ent["classification"] == "exponential-consistent" and elapsed < 60 and peak_rss_mb() < 2048)
    report(1, "free-group census", ok,
           f"c(R) = 2*3^R-1 for R<=8: {counts == free_group_census(8)}; certified_upper {h:.6f} in "
           f"[{lo:.6f}, {hi:.6f}]; {ent['classification']}; {elapsed:.1f} s; peak RSS {peak_rss_mb():.0f} MB")


def test_criterion_02_heisenberg(tmp_path):
    t0 = time.perf_counter()
    code = run(["ball", str(fixture("heisenberg")), "--radius", "20", "-o", str(tmp_path)])
    elapsed = time.perf_counter() - t0
    census = census_from(tmp_path / "census.csv")
    oracle = heisenberg_census(20)
    deg = fit_polynomial_degree(census.counts, (10, 20)).degree
    cls = entropy_report(census).classification
    ok = (code == 0 and list(census.counts) == oracle and 3.0 <= deg <= 4.5
          and cls == "polynomial-consistent" and elapsed < 300)
    report(2, "Heisenberg growth", ok,
           f"c(20) = {census.counts[-1]} (oracle {oracle[-1]}, all radii equal: {list(census.counts) == oracle}); "
           f"degree over [10,20] = {deg:.4f} in [3.0, 4.5]; {cls}; {elapsed:.1f} s")


def test_criterion_03_osin_instantiation():
    ext = load_group_spec(fixture("sol_fib"))
    A = conjugation_matrix(ext, "t", 1)
    uc = unit_circle_test(A)
    lo, hi = lambda_max(A, Fraction(1, 10 ** 9))
    # (3+√5)/2 ∈ [lo, hi]  ⇔  (2lo-3)² <= 5 <= (2hi-3)² with 2lo >= 3
    contains = 2 * lo >= 3 and (2 * lo - 3) ** 2 <= 5 <= (2 * hi - 3) ** 2
    width = hi - lo
    osin = osin_lower_bound((lo, hi))
    lam = (3 + math.sqrt(5)) / 2
    direct = math.log(2) * math.log(lam) / (math.log(2) + 5 * math.log(lam))
    census = enumerate_ball(ext, 12)
    upper = entropy_report(census).certified_upper
    ok = (not uc and contains and width <= Fraction(1, 10 ** 9) and abs(osin - 0.1212) <= 5e-4
          and abs(osin - direct) <= 1e-8 and upper >= osin and not census.truncated)
    report(3, "spectral lower bound on sol_fib", ok,
           f"unit_circle={uc}; enclosure [{float(lo):.12f}, {float(hi):.12f}] contains (3+sqrt5)/2: {contains}, "
           f"width {float(width):.2e}; osin_bound {osin:.6f} (direct formula {direct:.6f}); "
           f"certified upper at R=12 {upper:.4f} >= osin_bound")


def test_criterion_04_kronecker_oracle():
    suite = random_unimodular_suite(seed=2024, size=200)
    compared = disagree = dead = 0
    for A in suite:
        want = numpy_unit_circle(A)
        if want is None:
            dead += 1
            continue
        compared += 1
        disagree += unit_circle_test(A) != want
    ok = disagree == 0 and len(suite) == 200
    report(4, "Kronecker test vs float oracle", ok,
           f"200 matrices (dims 2-4, entries in [-3,3], |det|=1): {compared} compared, {dead} in dead zone, "
           f"{disagree} disagreements")


def test_criterion_05_rewriting_soundness():
    parts, ok = [], True
    for name in ("heis_by_z", "sol_fib"):
        M = load_group_spec(fixture(name))
        G = as_graded(M)
        mats = faithful(name)
        labels = list(M.gens.labels)
        rng = random.Random(f"acceptance-5-{name}")
        fails = 0
        for _ in range(1000):
            w = Word(M.gens, tuple(rng.randrange(len(labels)) for _ in range(rng.randint(0, 30))))
            want = evaluate_labels(mats, [labels[i] for i in w.letters])
            pr = push_right(G, w)
            cr = collect_normal_form(G, w)
            good = (evaluate_syllables(mats, labels, pr.output_syllables()) == want
                    and evaluate_syllables(mats, labels, cr.output_syllables()) == want
                    and pr.trace.t <= len(w) and cr.trace.t <= len(w))
            fails += not good
        ok &= fails == 0
        parts.append(f"{name}: {fails} failures in 1000 words")
    report(5, "rewriting soundness", ok, "; ".join(parts) + " (faithful matrix oracle, t <= R checked)")


def test_criterion_06_prefix_growth_dichotomy():
    hz = load_group_spec(fixture("heis_by_z"))
    sol = load_group_spec(fixture("sol_fib"))
    lengths = range(5, 41)
    h1, h2 = (measure_prefix_growth(hz, lengths, 50, seed=s, search="climb") for s in (1, 2))
    s1, s2 = (measure_prefix_growth(sol, lengths, 50, seed=s, search="climb") for s in (1, 2))
    stable = abs(h1.fit.degree - h2.fit.degree) <= 0.5 and max(h1.fit.degree, h2.fit.degree) < 4
    rates = (s1.semilog.rate, s2.semilog.rate)
    ok = h1.mode == "screened" and s1.mode == "unscreened" and stable and min(rates) >= 0.3
    u1, u2 = (measure_prefix_growth(hz, lengths, 100, seed=s) for s in (1, 2))
    us = measure_prefix_growth(sol, lengths, 100, seed=1)
    report(6, "prefix growth dichotomy", ok,
           f"worst-case search: heis_by_z degrees {h1.fit.degree:.3f}/{h2.fit.degree:.3f} (seeds 1/2, "
           f"within 0.5: {stable}); sol_fib semi-log slopes {rates[0]:.3f}/{rates[1]:.3f} >= 0.3. "
           f"Uniform sampling only, for reference: heis_by_z {u1.fit.degree:.3f}/{u2.fit.degree:.3f}, "
           f"sol_fib slope {us.semilog.rate:.3f}")


def test_criterion_07_distortion():
    hp = load_group_spec(fixture("heis_poly"))
    xy = [hp.gens.index(lab) for lab in "xXyY"]
    prof = distortion_profile(hp, tail_subgroup(hp, "z"), 16, generators=xy)
    deg = fit_polynomial_degree(prof.values, (8, 16)).degree
    sol = load_group_spec(fixture("sol_fib"))
    sp = distortion_profile(sol, kernel_subgroup(sol), 12)
    rate = fit_exponential_rate(sp.values, (6, 12)).rate
    ok = (1.6 <= deg <= 2.4 and prof.truncated_from is None and rate > 0 and rate >= 0.3
          and sp.truncated_from is None)
    report(7, "distortion", ok,
           f"Heisenberg centre Delta(16) = {prof.values[-1]}, degree over [8,16] {deg:.3f} in [1.6, 2.4]; "
           f"Z^2 in sol_fib Delta(12) = {sp.values[-1]}, semi-log slope over [6,12] {rate:.3f} > 0")


def test_criterion_08_sandwich():
    rep = quotient_sandwich_check(load_group_spec(fixture("z_cross_z2")), 10)
    ok = rep.holds and len(rep.group_counts) == 11
    ratios = [g / q for q, g in zip(rep.quotient_counts, rep.group_counts)]
    report(8, "quotient sandwich on z_cross_z2", ok,
           f"|F| = {rep.kernel_order}; holds for R = 0..10; max |Gamma(R)|/|Lambda(R)| = {max(ratios):.3f}")


def test_criterion_09_closure():
    m3 = enumerate_closure(load_group_spec(fixture("heis_mod3")), cap=10 ** 5)
    oracle = sum(1 for _ in itertools.product(range(3), repeat=3))
    h = enumerate_closure(load_group_spec(fixture("heisenberg")), cap=10 ** 5)
    ok = m3.finite and m3.order == oracle == 27 and not h.finite
    report(9, "torsion closure", ok,
           f"heis_mod3 order {m3.order} (oracle 3^3 = {oracle}); heisenberg exceeded cap 10^5: {not h.finite}")


def test_criterion_10_modp():
    M = load_group_spec(fixture("modp5"))
    lhs = evaluate_word(M, parse_word(M.gens, "g a g^-1"))
    rhs = evaluate_word(M, parse_word(M.gens, "a a"))
    census = enumerate_ball(M, 20)
    deg = fit_polynomial_degree(census.counts, (10, 20)).degree
    ok = M.report.ok and lhs == rhs and 0.8 <= deg <= 1.2
    report(10, "mod-p extension p=5", ok,
           f"validation ok: {M.report.ok}; g a g^-1 = a^2: {lhs == rhs}; census degree over [10,20] {deg:.3f}")


def test_criterion_11_determinism(tmp_path):
    same = []
    for name, R in (("free2", 8), ("heisenberg", 20)):
        blobs = []
        for threads in ("1", "8"):
            out = tmp_path / f"{name}-{threads}"
            assert run(["ball", str(fixture(name)), "--radius", str(R), "--threads", threads, "-o", str(out)]) == 0
            blobs.append((out / "census.csv").read_bytes())
        same.append(blobs[0] == blobs[1])
    report(11, "thread determinism", all(same),
           f"census.csv byte-identical for --threads 1 vs 8: free2 R=8 {same[0]}, heisenberg R=20 {same[1]}")


if __name__ == "__main__":
    import tempfile

    failures = 0
    for name, fn in sorted(globals().items()):
        if not name.startswith("test_criterion"):
            continue
        try:
            if "tmp_path" in fn.__code__.co_varnames[:fn.__code__.co_argcount]:
                with tempfile.TemporaryDirectory() as d:
                    fn(Path(d))
            else:
                fn()
        except AssertionError:
            failures += 1
    sys.exit(1 if failures else 0)
