import pytest
from hypothesis import given, strategies as st

from growthlab.errors import StructuralError
from growthlab.words import (
    SymmetricGeneratingSet,
    Word,
    concat,
    format_word,
    free_reduce,
    invert_word,
    parse_word,
)

S = SymmetricGeneratingSet.from_pairs([("a", "A"), ("b", "B"), ("c", "C")])


def w(text):
    return parse_word(S, text)


def reduce_oracle(letters):
    """Single left-to-right cancellation passes until nothing changes."""
    cur = list(letters)
    while True:
        out, i, changed = [], 0, False
        while i < len(cur):
            if i + 1 < len(cur) and S.involution[cur[i]] == cur[i + 1]:
                i += 2
                changed = True
            else:
                out.append(cur[i])
                i += 1
        cur = out
        if not changed:
            return tuple(cur)


words = st.lists(st.integers(0, len(S) - 1), max_size=40).map(lambda xs: Word(S, tuple(xs)))


def test_free_reduce_examples():
    assert free_reduce(w("")).letters == ()
    assert free_reduce(w("a A")).letters == ()
    assert free_reduce(w("a b B a")) == w("a a")


def test_invert_examples():
    assert invert_word(w("")) == w("")
    assert invert_word(w("a")) == w("A")
    assert invert_word(w("a b")) == w("B A")


def test_concat_examples():
    assert concat(w("a"), w("")) == w("a")
    assert concat(w("a"), w("A")) == w("")
    assert concat(w("a b"), w("B c")) == w("a c")


def test_parse_and_format():
    assert w("a b^-1 a") == Word(S, (S.index("a"), S.index("B"), S.index("a")))
    assert w("a^3") == w("a a a")
    assert format_word(w("a B")) == "a B"
    assert format_word(w("")) == "e"
    with pytest.raises(StructuralError):
        w("q")


def test_structural_errors():
    with pytest.raises(StructuralError):
        Word(S, (99,))
    other = SymmetricGeneratingSet.from_pairs([("a", "A")])
    with pytest.raises(StructuralError):
        concat(w("a"), Word(other, (0,)))


def test_generating_set_invariants():
    assert all(S.involution[S.involution[i]] == i for i in range(len(S)))
    inv = SymmetricGeneratingSet.from_pairs([("u", "u"), ("t", "T")])
    assert inv.inverse(inv.index("u")) == inv.index("u")
    with pytest.raises(StructuralError):
        SymmetricGeneratingSet.from_pairs([("a", "A"), ("a", "b")])


@given(words)
def test_reduce_matches_oracle_and_is_idempotent(x):
    r = free_reduce(x)
    assert r.letters == reduce_oracle(x.letters)
    assert free_reduce(r) == r
    assert len(r) <= len(x) and (len(x) - len(r)) % 2 == 0
    assert r.is_reduced


@given(words)
def test_word_times_inverse_is_empty(x):
    assert concat(x, invert_word(x)).letters == ()


@given(words, words, words)
def test_concat_associative(x, y, z):
    assert concat(concat(x, y), z) == concat(x, concat(y, z))
