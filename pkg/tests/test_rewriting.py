import random

import pytest
from oracles import evaluate_labels, evaluate_syllables, faithful

from growthlab.errors import ResourceError, StructuralError
from growthlab.models import PolycyclicPresentation, evaluate_word
from growthlab.rewriting import (
    GradedExtension,
    MemoCache,
    as_graded,
    cache_entries_from_env,
    coset_normal_form,
    coset_table,
    collect_normal_form,
    measure_prefix_growth,
    push_right,
    traces_csv,
)
from growthlab.words import Word, parse_word


def rand_word(model, rng, max_len=30):
    return Word(model.gens, tuple(rng.randrange(len(model.gens)) for _ in range(rng.randint(0, max_len))))


def matrices_for(model, name):
    mats = faithful(name)
    labels = list(model.gens.labels)
    return mats, labels


def test_faithful_oracles_satisfy_relations(load):
    # the oracle matrices obey the fixtures' defining relations
    for name in ("heis_by_z", "sol_fib"):
        G = load(name)
        mats, labels = matrices_for(G, name)
        for lab in labels:
            inv = labels[G.gens.inverse(labels.index(lab))]
            d = len(mats[lab])
            assert evaluate_labels(mats, [lab, inv]) == [[int(i == j) for j in range(d)] for i in range(d)]
        rng = random.Random(0)
        for _ in range(200):
            u, v = rand_word(G, rng, 12), rand_word(G, rng, 12)
            same = evaluate_word(G, u) == evaluate_word(G, v)
            mu = evaluate_labels(mats, [labels[i] for i in u.letters])
            mv = evaluate_labels(mats, [labels[i] for i in v.letters])
            assert same == (mu == mv)


def test_push_right_pure_words(load):
    H = load("heis_by_z")
    G = as_graded(H)
    w = parse_word(H.gens, "x y X z")
    res = push_right(G, w)
    assert res.sigma.letters == () and res.trace.conj_ops == 0
    assert G.bottom_vector(res.nu) == G.bottom_vector(G.word_vector(w))
    w = parse_word(H.gens, "t T t")
    res = push_right(G, w)
    assert res.sigma == w and not any(res.nu)


def test_push_right_single_swap(load):
    H = load("heis_by_z")
    mats, labels = matrices_for(H, "heis_by_z")
    res = push_right(H, parse_word(H.gens, "t y"))
    assert res.trace.conj_ops == 1 and res.trace.t == 1
    assert [H.gens.labels[i] for i in res.sigma.letters] == ["t"]
    # ν is ρ(t)(y) = x y
    assert evaluate_syllables(mats, labels, res.nu_syllables()) == evaluate_labels(mats, ["x", "y"])


def test_collect_examples(load):
    P = load("heis_poly")
    G = GradedExtension.from_polycyclic(P, "z")
    res = collect_normal_form(G, Word(P.gens, ()))
    assert not any(res.alpha) and not any(res.exponents) and res.coset == 0
    res = collect_normal_form(G, parse_word(P.gens, "x y"))
    assert res.exponents == (1, 1)
    assert G.bottom_vector(res.alpha) == (1,)
    mats = faithful("heis_poly")
    assert evaluate_syllables(mats, list(P.gens.labels), res.output_syllables()) == evaluate_labels(mats, ["x", "y"])


@pytest.mark.parametrize("name", ["heis_by_z", "sol_fib"])
def test_rewriting_sound(load, name):
    M = load(name)
    G = as_graded(M)
    mats, labels = matrices_for(M, name)
    rng = random.Random(name)
    for _ in range(300):
        w = rand_word(M, rng)
        want = evaluate_labels(mats, [labels[i] for i in w.letters])
        pr = push_right(G, w)
        assert evaluate_syllables(mats, labels, pr.output_syllables()) == want
        assert pr.trace.t <= len(w)
        assert pr.trace.conj_ops <= len(w)
        cr = collect_normal_form(G, w)
        assert evaluate_syllables(mats, labels, cr.output_syllables()) == want
        assert cr.trace.t <= len(w)


@pytest.mark.parametrize("name", ["heis_by_z", "sol_fib"])
def test_collect_idempotent(load, name):
    M = load(name)
    G = as_graded(M)
    rng = random.Random(4)
    for _ in range(100):
        first = collect_normal_form(G, rand_word(M, rng))
        letters = tuple(i for i, e in first.output_syllables() for _ in range(e))
        again = collect_normal_form(G, Word(M.gens, letters))
        assert (again.alpha, again.exponents, again.coset) == (first.alpha, first.exponents, first.coset)


def test_rewriting_deterministic(load):
    M = load("sol_fib")
    rng = random.Random(9)
    words = [rand_word(M, rng) for _ in range(50)]
    a = [push_right(as_graded(M), w).trace for w in words]
    b = [push_right(as_graded(M), w).trace for w in words]
    assert traces_csv(a) == traces_csv(b)
    assert traces_csv(a).startswith("input_length,s,t,conj_ops,max_intermediate\n")


# -- cosets: Z × Z_2 with F = <t> -----------------------------------------------

@pytest.fixture()
def z_z2():
    P = PolycyclicPresentation([("u", "u"), ("t", "T")], {(0, 1, 1): ((1, 1),)}, moduli=[2, None], name="ZxZ2")
    return P, GradedExtension.from_polycyclic(P, "t")


def direct(P, letters):
    labs = [P.gens.labels[i] for i in letters]
    return labs.count("t") - labs.count("T"), labs.count("u") % 2


def test_coset_table_examples(z_z2):
    P, G = z_z2
    table = coset_table(G)
    assert len(table.reps) == 2 and table.K >= 1
    w = parse_word(P.gens, "t t T t")
    res = coset_normal_form(G, w)
    assert res.phi == w and res.coset == 0
    u = parse_word(P.gens, "u")
    res = coset_normal_form(G, Word(P.gens, u.letters * 2))
    assert res.coset == 0 and res.phi.letters == ()


def test_coset_random_words(z_z2):
    P, G = z_z2
    rng = random.Random(20)
    for _ in range(1000):
        w = Word(P.gens, tuple(rng.randrange(len(P.gens)) for _ in range(20)))
        res = coset_normal_form(G, w)
        out = [i for i, e in res.output_syllables(G) for _ in range(e)]
        assert direct(P, out) == direct(P, w.letters)
        assert all(P.gens.labels[i] in "tT" for i in res.phi.letters)
        assert len(res.phi) <= res.K * 20
        cr = collect_normal_form(G, w)
        out = [i for i, e in cr.output_syllables() for _ in range(e)]
        assert direct(P, out) == direct(P, w.letters)


# -- errors, cache, prefix growth -------------------------------------------

def test_push_right_errors(load):
    M = load("sol_fib")
    other = load("heis_by_z")
    with pytest.raises(StructuralError):
        push_right(M, parse_word(other.gens, "x"))
    w = parse_word(M.gens, "t t t t t t a " + "T " * 6)
    with pytest.raises(ResourceError) as exc:
        push_right(M, w, max_length=5)
    assert exc.value.partial.input_length == len(w)


def test_cache_env(monkeypatch):
    monkeypatch.setenv("GROWTHLAB_CACHE_MB", "1")
    small = cache_entries_from_env(4)
    monkeypatch.setenv("GROWTHLAB_CACHE_MB", "64")
    assert cache_entries_from_env(4) > small >= 1
    c = MemoCache(2)
    c.put(1, "a")
    c.put(2, "b")
    c.get(1)
    c.put(3, "c")
    assert c.get(2) is None and c.get(1) == "a" and len(c) == 2


def test_results_independent_of_cache(load):
    M = load("sol_fib")
    big = GradedExtension.from_split(M)
    tiny = GradedExtension.from_split(M)
    tiny.cache = MemoCache(1)
    rng = random.Random(2)
    for _ in range(100):
        w = rand_word(M, rng)
        a, b = push_right(big, w), push_right(tiny, w)
        assert a.nu == b.nu and a.trace == b.trace


def test_prefix_growth_trivial_action():
    P = PolycyclicPresentation([("t", "T"), ("a", "A")], {(0, 1, 1): ((1, 1),), (0, -1, 1): ((1, 1),)})
    rep = measure_prefix_growth(P, range(5, 21), 30, seed=1, tail="a")
    assert all(s <= R for R, s in zip(rep.lengths, rep.s_max))
    assert rep.fit.degree <= 1.1 and rep.bound_claimed


def test_prefix_growth_modes(load):
    a = measure_prefix_growth(load("heis_by_z"), range(5, 13), 10, seed=3)
    b = measure_prefix_growth(load("heis_by_z"), range(5, 13), 10, seed=3)
    assert a.mode == "screened" and a.s_max == b.s_max
    sol = measure_prefix_growth(load("sol_fib"), range(5, 13), 10, seed=3)
    assert sol.mode == "unscreened" and not sol.bound_claimed
    climb = measure_prefix_growth(load("sol_fib"), range(5, 13), 10, seed=3, search="climb")
    assert all(c >= u for c, u in zip(climb.s_max, sol.s_max))
