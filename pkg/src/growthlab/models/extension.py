"""Split extensions ``N ⋊ Λ`` and the mod-p family ``Z_p ⋊ Z``."""

from __future__ import annotations

from typing import Mapping, Optional, Sequence

from ..errors import PresentationError, StructuralError
from ..words import SymmetricGeneratingSet
from .base import GroupModel
from .polycyclic import PolycyclicPresentation, _Budget

Automorphism = tuple  # images of the N basis, one exponent vector each


class SplitExtensionModel(GroupModel):
    """Elements are pairs ``(n, λ)`` with ``(n1, λ1)(n2, λ2) = (n1 · φ(λ1)(n2), λ1 λ2)``.

    ``action`` maps ``(Λ symmetric letter, N basis index)`` to the exponent
    vector of ``γ α γ⁻¹``.  The generating set is N's letters followed by
    Λ's letters.
    """

    kind = "split_extension"

    def __init__(self, N: PolycyclicPresentation, Lam: GroupModel,
                 action: Mapping[tuple[int, int], Sequence[int]], name: str = ""):
        self.N = N
        self.Lam = Lam
        self.name = name
        clash = set(N.gens.labels) & set(Lam.gens.labels)
        if clash:
            raise StructuralError(f"labels {sorted(clash)} used in both N and Lambda")
        nN = len(N.gens)
        self.n_letters_N = nN
        self.gens = SymmetricGeneratingSet(
            N.gens.labels + Lam.gens.labels,
            N.gens.involution + tuple(j + nN for j in Lam.gens.involution),
        )
        n = N.n
        self._gen_auts: list[Automorphism] = []
        for g in range(len(Lam.gens)):
            images = []
            for k in range(n):
                if (g, k) not in action:
                    raise PresentationError(
                        f"action table has no image of {N.basis_labels[k]} under {Lam.gens.labels[g]}")
                v = tuple(action[(g, k)])
                if len(v) != n:
                    raise StructuralError("action image has the wrong length")
                images.append(v)
            self._gen_auts.append(tuple(images))
        self.identity_aut: Automorphism = tuple(
            tuple(int(i == k) for i in range(n)) for k in range(n))
        lam_id = Lam.identity()
        self._aut = {lam_id: self.identity_aut}
        self._aut_inv = {lam_id: self.identity_aut}
        for g in range(len(Lam.gens)):
            lam = Lam.generator(g)
            self._aut.setdefault(lam, self._gen_auts[g])
            self._aut_inv.setdefault(lam, self._gen_auts[Lam.gens.involution[g]])
        self._identity = (N.identity(), lam_id)
        self._gen_elems = [(N.generator(i), lam_id) for i in range(nN)] + \
                          [(N.identity(), Lam.generator(g)) for g in range(len(Lam.gens))]

    # -- automorphisms of N -------------------------------------------
    def generator_automorphism(self, g: int) -> Automorphism:
        """``φ(γ)`` for Λ symmetric letter ``g``."""
        return self._gen_auts[g]

    def apply(self, aut: Automorphism, v: Sequence[int]) -> tuple:
        N = self.N
        if N.is_free_abelian:
            n = N.n
            out = [0] * n
            for k, e in enumerate(v):
                if e:
                    img = aut[k]
                    for i in range(n):
                        if img[i]:
                            out[i] += e * img[i]
            return tuple(out)
        vec = list(N.identity())
        b = _Budget(N.step_budget)
        for k, e in enumerate(v):
            if e:
                N._mul_vec_power(vec, aut[k], e, b)
        return tuple(vec)

    def compose(self, f: Automorphism, g: Automorphism) -> Automorphism:
        """``f ∘ g``."""
        return tuple(self.apply(f, img) for img in g)

    def aut_power(self, f: Automorphism, f_inv: Automorphism, k: int) -> Automorphism:
        if k < 0:
            f, k = f_inv, -k
        result = self.identity_aut
        while k:
            if k & 1:
                result = self.compose(result, f)
            k >>= 1
            if k:
                f = self.compose(f, f)
        return result

    def _lookup(self, lam, inverse: bool) -> Automorphism:
        table = self._aut_inv if inverse else self._aut
        a = table.get(lam)
        if a is not None:
            return a
        Lam = self.Lam
        if isinstance(Lam, PolycyclicPresentation):
            a = self.identity_aut
            a_inv = self.identity_aut
            for k, e in enumerate(lam):
                if e:
                    i = Lam.letter_of(k, 1)
                    f, f_inv = self._gen_auts[i], self._gen_auts[Lam.gens.involution[i]]
                    a = self.compose(a, self.aut_power(f, f_inv, e))
                    a_inv = self.compose(self.aut_power(f, f_inv, -e), a_inv)
            self._aut[lam] = a
            self._aut_inv[lam] = a_inv
            return a_inv if inverse else a
        raise PresentationError(
            "action of this Lambda element is unknown; build elements from generator words")

    def automorphism(self, lam) -> Automorphism:
        """``φ(λ)``."""
        return self._lookup(lam, False)

    def automorphism_inverse(self, lam) -> Automorphism:
        return self._lookup(lam, True)

    # -- GroupModel interface -----------------------------------------
    def identity(self):
        return self._identity

    def generator(self, i):
        return self._gen_elems[i]

    def multiply(self, a, b):
        n1, l1 = a
        n2, l2 = b
        f = self.automorphism(l1)
        n = self.N.multiply(n1, self.apply(f, n2))
        lam = self.Lam.multiply(l1, l2)
        if lam not in self._aut:
            self._aut[lam] = self.compose(f, self.automorphism(l2))
            self._aut_inv[lam] = self.compose(self.automorphism_inverse(l2), self.automorphism_inverse(l1))
        return (n, lam)

    def right_mul_gen(self, a, i):
        n1, l1 = a
        if i < self.n_letters_N:
            f = self.automorphism(l1)
            if self.N.is_free_abelian:
                k, s = self.N.letter_syllable(i)
                img = f[k]
                return (tuple(x + s * y for x, y in zip(n1, img)), l1)
            return (self.N.multiply(n1, self.apply(f, self._gen_elems[i][0])), l1)
        return self.multiply(a, self._gen_elems[i])

    def inverse(self, a):
        n, lam = a
        lam_inv = self.Lam.inverse(lam)
        f_inv = self.automorphism_inverse(lam)
        self._aut.setdefault(lam_inv, f_inv)
        self._aut_inv.setdefault(lam_inv, self.automorphism(lam))
        return (self.apply(f_inv, self.N.inverse(n)), lam_inv)

    def key(self, a):
        n, lam = a
        return b"X(" + self.N.key(n) + b"|" + self.Lam.key(lam) + b")"

    # -- structure ------------------------------------------------------
    def in_kernel(self, a) -> bool:
        return a[1] == self.Lam.identity()

    def embed_N(self, v: Sequence[int]):
        return (tuple(v), self.Lam.identity())

    def embed_Lambda(self, lam):
        return (self.N.identity(), lam)

    def project(self, a):
        return a[1]

    def quotient_data(self):
        """``(Λ model, generator images in Λ or None for N letters)``."""
        nN = self.n_letters_N
        images = [None] * nN + list(range(len(self.Lam.gens)))
        return self.Lam, images

    def describe(self):
        d = super().describe()
        d["N"] = self.N.describe()
        d["Lambda"] = self.Lam.describe()
        return d


def extension_multiply(ext: SplitExtensionModel, a, b):
    """``(n1, λ1)(n2, λ2) = (n1 · φ(λ1)(n2), λ1 λ2)``."""
    return ext.multiply(a, b)


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True


class ModPExtensionModel(GroupModel):
    """``Z_p ⋊ Z`` with the generator of Z acting by doubling.

    Elements ``(a, n)``: ``(a, n)(b, m) = (a + 2ⁿ b mod p, n + m)``.
    Generators are α = (1, 0) and γ = (0, 1) with their inverses.
    """

    kind = "mod_p_extension"

    def __init__(self, p: int, pairs: Optional[Sequence[tuple[str, str]]] = None, name: str = ""):
        if not isinstance(p, int) or not _is_prime(p) or p == 2:
            raise PresentationError(f"p must be an odd prime, got {p!r}")
        self.p = p
        self.name = name
        pairs = pairs or [("a", "A"), ("g", "G")]
        if len(pairs) != 2 or any(lab == inv for lab, inv in pairs):
            raise StructuralError("mod_p_extension takes exactly two generator pairs (alpha, gamma)")
        self.gens = SymmetricGeneratingSet.from_pairs(pairs)
        self._gens = [(1, 0), (p - 1, 0), (0, 1), (0, -1)]

    def identity(self):
        return (0, 0)

    def generator(self, i):
        return self._gens[i]

    def multiply(self, x, y):
        a, n = x
        b, m = y
        p = self.p
        return ((a + pow(2, n, p) * b) % p, n + m)

    def inverse(self, x):
        a, n = x
        p = self.p
        return ((-pow(2, -n, p) * a) % p, -n)

    def key(self, x):
        return b"Z%d:%d,%d" % (self.p, x[0], x[1])

    def in_kernel(self, x) -> bool:
        return x[1] == 0

    def quotient_data(self):
        from .polycyclic import PolycyclicPresentation
        Z = PolycyclicPresentation([(self.gens.labels[2], self.gens.labels[3])], {}, name="Z")
        return Z, [None, None, 0, 1]

    def describe(self):
        d = super().describe()
        d["p"] = self.p
        return d
