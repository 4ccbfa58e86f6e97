from __future__ import annotations

from typing import Any, Hashable

from ..errors import StructuralError
from ..words import SymmetricGeneratingSet, Word

Element = Hashable


class GroupModel:
    """Exact element algebra for a finitely generated group.

    Elements are immutable hashable values; two elements are equal exactly
    when they denote the same group element, so they can be used directly as
    set members.  :meth:`key` gives the equivalent byte serialisation.
    """

    kind = "abstract"
    gens: SymmetricGeneratingSet
    name: str = ""

    def identity(self) -> Element:
        raise NotImplementedError

    def multiply(self, a: Element, b: Element) -> Element:
        raise NotImplementedError

    def inverse(self, a: Element) -> Element:
        raise NotImplementedError

    def generator(self, i: int) -> Element:
        raise NotImplementedError

    def key(self, a: Element) -> bytes:
        raise NotImplementedError

    def right_mul_gen(self, a: Element, i: int) -> Element:
        return self.multiply(a, self.generator(i))

    def is_identity(self, a: Element) -> bool:
        return a == self.identity()

    def power(self, a: Element, k: int) -> Element:
        if k < 0:
            a, k = self.inverse(a), -k
        result = self.identity()
        while k:
            if k & 1:
                result = self.multiply(result, a)
            k >>= 1
            if k:
                a = self.multiply(a, a)
        return result

    def describe(self) -> dict[str, Any]:
        return {"model": self.kind, "name": self.name, "generators": list(self.gens.labels)}


def evaluate_word(model: GroupModel, w: Word) -> Element:
    """Product of the generator images of ``w`` from left to right."""
    if w.gens != model.gens:
        raise StructuralError("word is not over the model's generating set")
    g = model.identity()
    for i in w.letters:
        g = model.right_mul_gen(g, i)
    return g


def canonical_key(model: GroupModel, element: Element) -> bytes:
    return model.key(element)
