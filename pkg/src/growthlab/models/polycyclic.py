"""Polycyclic presentations on a graded basis, with collection to normal form.

A presentation has basis ``α_0, …, α_{n-1}`` and, for ``i < j`` and
``s = ±1``, a conjugation relation ``α_i^s α_j α_i^-s = w`` where ``w`` is a
word in ``α_{i+1}, …``.  Elements are exponent vectors ``(e_0, …, e_{n-1})``
standing for ``α_0^e_0 ⋯ α_{n-1}^e_{n-1}``.  A basis element may carry a
modulus ``m`` with the relation ``α^m = e``; its exponent is then kept in
``[0, m)``.

Right multiplication by ``α_j^e`` moves the power past the tail of the
normal form: ``tail · α_j^e = α_j^e · (α_j^-e tail α_j^e)``, and the
conjugated tail is collected recursively in the subgroup on indices > j.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Optional, Sequence

from ..errors import PresentationError, ResourceError, StructuralError
from ..words import SymmetricGeneratingSet, Word
from .base import GroupModel

Syllables = tuple  # ((basis index, exponent), ...)

DEFAULT_STEP_BUDGET = 10_000_000


class _Budget:
    __slots__ = ("left",)

    def __init__(self, steps: int):
        self.left = steps

    def spend(self):
        self.left -= 1
        if self.left < 0:
            raise ResourceError("collection exceeded its step budget")


class PolycyclicPresentation(GroupModel):
    kind = "polycyclic"

    def __init__(
        self,
        pairs: Sequence[tuple[str, str]],
        conjugation: Mapping[tuple[int, int, int], Syllables],
        strata: Optional[Sequence[tuple[int, int]]] = None,
        moduli: Optional[Sequence[Optional[int]]] = None,
        name: str = "",
        step_budget: int = DEFAULT_STEP_BUDGET,
    ):
        self.name = name
        self.n = len(pairs)
        self.basis_labels = tuple(p[0] for p in pairs)
        self.gens = SymmetricGeneratingSet.from_pairs(pairs)
        # symmetric letter -> (basis index, ±1)
        self._letter = []
        for k, (lab, inv) in enumerate(pairs):
            self._letter.append((k, 1))
            if lab != inv:
                self._letter.append((k, -1))
        self.moduli = tuple(moduli) if moduli is not None else (None,) * self.n
        if len(self.moduli) != self.n:
            raise StructuralError("moduli list must have one entry per basis element")
        for k, (lab, inv) in enumerate(pairs):
            m = self.moduli[k]
            if m is not None and m < 2:
                raise PresentationError(f"modulus of {lab!r} must be at least 2")
            if lab == inv and m != 2:
                raise PresentationError(f"self-inverse generator {lab!r} needs modulus 2")
        if strata is None:
            strata = [(0, self.n)] if self.n else []
        self.strata = tuple((int(a), int(b)) for a, b in strata)
        pos = 0
        for a, b in self.strata:
            if a != pos or b <= a:
                raise PresentationError(f"strata {list(self.strata)} do not partition the basis in order")
            pos = b
        if pos != self.n:
            raise PresentationError(f"strata {list(self.strata)} do not cover all {self.n} basis elements")
        self.stratum_of = tuple(h for h, (a, b) in enumerate(self.strata) for _ in range(a, b))
        self.step_budget = step_budget

        self._table: dict[tuple[int, int, int], Syllables] = {}
        for (i, s, j), syl in conjugation.items():
            if not (0 <= i < j < self.n) or s not in (1, -1):
                raise PresentationError(f"bad conjugation key {(i, s, j)}")
            for k, _ in syl:
                if not i < k < self.n:
                    raise PresentationError(
                        f"conjugate of {self.basis_labels[j]} by {self.basis_labels[i]}^{s} "
                        f"uses {self.basis_labels[k] if 0 <= k < self.n else k}, outside the tail")
            self._table[(i, s, j)] = tuple((int(k), int(e)) for k, e in syl if e)
        # a self-inverse element conjugates the same way from both sides
        for k, (lab, inv) in enumerate(pairs):
            if lab == inv:
                for j in range(k + 1, self.n):
                    if (k, 1, j) in self._table:
                        self._table.setdefault((k, -1, j), self._table[(k, 1, j)])
        self._conj_vec: dict[tuple[int, int, int], tuple] = {}
        # commutes[j] = set of k > j with α_j α_k = α_k α_j recorded in both directions
        self._commutes = [set() for _ in range(self.n)]
        for j in range(self.n):
            for k in range(j + 1, self.n):
                if self._table.get((j, 1, k)) == ((k, 1),) and self._table.get((j, -1, k)) == ((k, 1),):
                    self._commutes[j].add(k)
        self.is_abelian = all(len(self._commutes[j]) == self.n - j - 1 for j in range(self.n))
        self.is_free_abelian = self.is_abelian and all(m is None for m in self.moduli)
        self._identity = (0,) * self.n

    # -- table access -------------------------------------------------
    def has_entry(self, i: int, s: int, j: int) -> bool:
        return (i, s, j) in self._table

    def missing_entries(self) -> list[tuple[int, int, int]]:
        return [(i, s, j) for i in range(self.n) for j in range(i + 1, self.n) for s in (1, -1)
                if (i, s, j) not in self._table]

    def conj_syllables(self, i: int, s: int, j: int) -> Syllables:
        try:
            return self._table[(i, s, j)]
        except KeyError:
            raise PresentationError(
                f"conjugation table has no entry for {self.basis_labels[i]}^{s} "
                f"{self.basis_labels[j]} {self.basis_labels[i]}^{-s}") from None

    def conj_vector(self, i: int, s: int, j: int, budget: Optional[_Budget] = None) -> tuple:
        """Normal form of ``α_i^s α_j α_i^-s``."""
        key = (i, s, j)
        v = self._conj_vec.get(key)
        if v is None:
            vec = list(self._identity)
            b = budget or _Budget(self.step_budget)
            for k, e in self.conj_syllables(i, s, j):
                self._mul_syllable(vec, k, e, b)
            v = tuple(vec)
            self._conj_vec[key] = v
        return v

    # -- collection ----------------------------------------------------
    def _mul_syllable(self, vec: list, j: int, e: int, budget: _Budget) -> None:
        """In place: ``vec ← vec · α_j^e``."""
        if e == 0:
            return
        budget.spend()
        n = self.n
        m = self.moduli[j]
        if m is not None:
            e %= m
            if e == 0:
                return
        comm = self._commutes[j]
        tail = [(k, vec[k]) for k in range(j + 1, n) if vec[k] and k not in comm]
        if tail:
            # α_j^-s x α_j^s is the table entry (j, -s, ·); apply it |e| times
            s = 1 if e > 0 else -1
            steps = abs(e)
            cur = vec[j + 1:]
            for _ in range(steps):
                new = [0] * (n - j - 1)
                sub = [0] * (j + 1) + new
                for off, t in enumerate(cur):
                    if t:
                        k = j + 1 + off
                        if k in comm:
                            img = None
                        else:
                            img = self.conj_vector(j, -s, k, budget)
                        if img is None:
                            self._mul_syllable(sub, k, t, budget)
                        else:
                            self._mul_vec_power(sub, img, t, budget)
                cur = sub[j + 1:]
            vec[j + 1:] = cur
        nv = vec[j] + e
        vec[j] = nv % m if m is not None else nv

    def _mul_vec(self, vec: list, v: Sequence[int], budget: _Budget) -> None:
        for k, e in enumerate(v):
            if e:
                self._mul_syllable(vec, k, e, budget)

    def _inverse_vec(self, v: Sequence[int], budget: _Budget) -> list:
        out = list(self._identity)
        for k in range(self.n - 1, -1, -1):
            if v[k]:
                self._mul_syllable(out, k, -v[k], budget)
        return out

    def _mul_vec_power(self, vec: list, v: Sequence[int], t: int, budget: _Budget) -> None:
        if t == 0:
            return
        if t < 0:
            v, t = self._inverse_vec(v, budget), -t
        nz = [(k, e) for k, e in enumerate(v) if e]
        if len(nz) == 1:
            k, e = nz[0]
            self._mul_syllable(vec, k, e * t, budget)
            return
        base = list(v)
        acc = None
        while t:
            if t & 1:
                if acc is None:
                    acc = list(base)
                else:
                    self._mul_vec(acc, base, budget)
            t >>= 1
            if t:
                sq = list(base)
                self._mul_vec(sq, base, budget)
                base = sq
        self._mul_vec(vec, acc, budget)

    # -- GroupModel interface -----------------------------------------
    def identity(self):
        return self._identity

    def generator(self, i):
        k, s = self._letter[i]
        vec = list(self._identity)
        self._mul_syllable(vec, k, s, _Budget(self.step_budget))
        return tuple(vec)

    def letter_syllable(self, i: int) -> tuple[int, int]:
        """``(basis index, ±1)`` for symmetric letter ``i``."""
        return self._letter[i]

    def letter_of(self, k: int, s: int) -> int:
        """Symmetric letter index for ``α_k^s``."""
        return self._letter.index((k, s)) if (k, s) in self._letter else self._letter.index((k, 1))

    def multiply(self, a, b):
        vec = list(a)
        self._mul_vec(vec, b, _Budget(self.step_budget))
        return tuple(vec)

    def right_mul_gen(self, a, i):
        k, s = self._letter[i]
        vec = list(a)
        self._mul_syllable(vec, k, s, _Budget(self.step_budget))
        return tuple(vec)

    def mul_syllable(self, a, k: int, e: int):
        vec = list(a)
        self._mul_syllable(vec, k, e, _Budget(self.step_budget))
        return tuple(vec)

    def inverse(self, a):
        return tuple(self._inverse_vec(a, _Budget(self.step_budget)))

    def power(self, a, k):
        vec = list(self._identity)
        self._mul_vec_power(vec, a, k, _Budget(self.step_budget))
        return tuple(vec)

    def key(self, a):
        return ("P:" + ",".join(map(str, a))).encode()

    def normal_form_of_syllables(self, syllables: Iterable[tuple[int, int]]) -> tuple:
        vec = list(self._identity)
        b = _Budget(self.step_budget)
        for k, e in syllables:
            self._mul_syllable(vec, k, e, b)
        return tuple(vec)

    def vector_word(self, v: Sequence[int]) -> Word:
        """The normal form ``α_0^e_0 ⋯`` written out as a word."""
        letters = []
        for k, e in enumerate(v):
            if e:
                letters.extend([self.letter_of(k, 1 if e > 0 else -1)] * abs(e))
        return Word(self.gens, tuple(letters))

    def word_length(self, v: Sequence[int]) -> int:
        """Sum of absolute exponents of a normal form (its length as a written word)."""
        return sum(abs(e) for e in v)

    def describe(self):
        d = super().describe()
        d["basis"] = list(self.basis_labels)
        d["strata"] = [list(s) for s in self.strata]
        return d


def polycyclic_multiply(pres: PolycyclicPresentation, u: Sequence[int], v: Sequence[int]) -> tuple:
    """Normal form of ``u · v``."""
    if len(u) != pres.n or len(v) != pres.n:
        raise StructuralError("exponent vectors do not match the presentation")
    return pres.multiply(tuple(u), tuple(v))


def syllables_from_word(pres: PolycyclicPresentation, w: Word) -> Syllables:
    out: list[list[int]] = []
    for i in w.letters:
        k, s = pres.letter_syllable(i)
        if out and out[-1][0] == k:
            out[-1][1] += s
        else:
            out.append([k, s])
    return tuple((k, e) for k, e in out if e)
