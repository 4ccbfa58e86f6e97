"""Words over symmetric generating sets.

Words are stored as tuples of generator indices into a
:class:`SymmetricGeneratingSet`; the inverse of letter ``i`` is the letter
``gens.involution[i]``.  Labels only matter when parsing or printing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from .errors import StructuralError


class Letter(NamedTuple):
    generator_index: int
    inverted: bool = False


@dataclass(frozen=True)
class SymmetricGeneratingSet:
    labels: tuple[str, ...]
    involution: tuple[int, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.involution):
            raise StructuralError("labels and involution differ in length")
        if len(set(self.labels)) != len(self.labels):
            raise StructuralError(f"duplicate generator labels in {self.labels}")
        n = len(self.labels)
        for i, j in enumerate(self.involution):
            if not 0 <= j < n or self.involution[j] != i:
                raise StructuralError(f"involution is not an involution at index {i}")
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(self.labels)})

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> "SymmetricGeneratingSet":
        """Build from ``(label, inverse_label)`` pairs; equal labels mean an involution."""
        labels: list[str] = []
        inv: list[int] = []
        for lab, inv_lab in pairs:
            i = len(labels)
            if lab == inv_lab:
                labels.append(lab)
                inv.append(i)
            else:
                labels.extend((lab, inv_lab))
                inv.extend((i + 1, i))
        return cls(tuple(labels), tuple(inv))

    def __len__(self):
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise StructuralError(f"unknown generator label {label!r}") from None

    def inverse(self, i: int) -> int:
        return self.involution[i]

    def pair_representatives(self) -> list[int]:
        """One index per inverse pair, in declaration order."""
        return [i for i, j in enumerate(self.involution) if i <= j]

    def fingerprint(self) -> str:
        return ",".join(f"{lab}~{self.labels[j]}" for lab, j in zip(self.labels, self.involution))


@dataclass(frozen=True)
class Word:
    gens: SymmetricGeneratingSet
    letters: tuple[int, ...] = ()

    def __post_init__(self):
        n = len(self.gens)
        for i in self.letters:
            if not isinstance(i, int) or not 0 <= i < n:
                raise StructuralError(f"letter index {i!r} out of range for {n} generators")

    def __len__(self):
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __str__(self):
        return format_word(self)

    def as_letters(self) -> list[Letter]:
        """Each letter as (pair representative, inverted flag)."""
        out = []
        for i in self.letters:
            j = self.gens.involution[i]
            out.append(Letter(i, False) if i <= j else Letter(j, True))
        return out

    @property
    def is_reduced(self) -> bool:
        inv = self.gens.involution
        return all(inv[a] != b for a, b in zip(self.letters, self.letters[1:]))


def word(gens: SymmetricGeneratingSet, letters: Sequence[int] = ()) -> Word:
    return Word(gens, tuple(letters))


def from_letters(gens: SymmetricGeneratingSet, letters: Iterable[Letter]) -> Word:
    out = []
    for lt in letters:
        if not 0 <= lt.generator_index < len(gens):
            raise StructuralError(f"letter index {lt.generator_index} out of range")
        i = lt.generator_index
        out.append(gens.involution[i] if lt.inverted else i)
    return Word(gens, tuple(out))


def _reduce(letters: Sequence[int], inv: Sequence[int]) -> tuple[int, ...]:
    stack: list[int] = []
    for a in letters:
        if stack and inv[stack[-1]] == a:
            stack.pop()
        else:
            stack.append(a)
    return tuple(stack)


def free_reduce(w: Word) -> Word:
    """Cancel adjacent inverse pairs until none remain."""
    return Word(w.gens, _reduce(w.letters, w.gens.involution))


def invert_word(w: Word) -> Word:
    inv = w.gens.involution
    return Word(w.gens, tuple(inv[a] for a in reversed(w.letters)))


def concat(w1: Word, w2: Word) -> Word:
    """Concatenate and freely reduce."""
    if w1.gens != w2.gens:
        raise StructuralError("cannot concatenate words over different generating sets")
    return Word(w1.gens, _reduce(w1.letters + w2.letters, w1.gens.involution))


def parse_word(gens: SymmetricGeneratingSet, text: str) -> Word:
    """Parse ``"a b^-1 a"``; a trailing ``^-1`` inverts, ``^k`` repeats ``|k|`` times."""
    out: list[int] = []
    for tok in text.split():
        base, sep, exp = tok.partition("^")
        if base in ("e", "1") and not sep:
            continue
        idx = gens.index(base)
        if sep:
            try:
                k = int(exp)
            except ValueError:
                raise StructuralError(f"bad exponent in token {tok!r}") from None
        else:
            k = 1
        letter = idx if k >= 0 else gens.involution[idx]
        out.extend([letter] * abs(k))
    return Word(gens, tuple(out))


def format_word(w: Word) -> str:
    if not w.letters:
        return "e"
    return " ".join(w.gens.labels[i] for i in w.letters)
