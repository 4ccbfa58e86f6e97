"""Matrix groups over the rationals with exact arithmetic."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from ..errors import InconsistencyError, StructuralError
from ..words import SymmetricGeneratingSet
from .base import GroupModel

Matrix = tuple  # flat row-major tuple of int or Fraction entries


def parse_rational(value) -> Fraction:
    if isinstance(value, bool):
        raise ValueError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise ValueError(f"not a rational: {value!r}")


def _normalize(entries: Sequence[Fraction], integral: bool) -> Matrix:
    if integral:
        return tuple(int(x) for x in entries)
    return tuple(Fraction(x) for x in entries)


def identity_matrix(dim: int, integral: bool = True) -> Matrix:
    one, zero = (1, 0) if integral else (Fraction(1), Fraction(0))
    return tuple(one if i == j else zero for i in range(dim) for j in range(dim))


def mat_mul(a: Matrix, b: Matrix, dim: int) -> Matrix:
    out = []
    for i in range(dim):
        row = a[i * dim:(i + 1) * dim]
        for j in range(dim):
            s = 0
            for k in range(dim):
                x = row[k]
                if x:
                    s += x * b[k * dim + j]
            out.append(s)
    return tuple(out)


def mat_inverse(a: Matrix, dim: int) -> Matrix:
    """Gauss-Jordan inverse over the rationals; raises on a singular matrix."""
    m = [[Fraction(a[i * dim + j]) for j in range(dim)] + [Fraction(int(i == j)) for j in range(dim)]
         for i in range(dim)]
    for col in range(dim):
        piv = next((r for r in range(col, dim) if m[r][col] != 0), None)
        if piv is None:
            raise InconsistencyError("matrix is singular")
        m[col], m[piv] = m[piv], m[col]
        p = m[col][col]
        m[col] = [x / p for x in m[col]]
        for r in range(dim):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return tuple(m[i][dim + j] for i in range(dim) for j in range(dim))


def mat_det(a: Matrix, dim: int) -> Fraction:
    m = [[Fraction(a[i * dim + j]) for j in range(dim)] for i in range(dim)]
    det = Fraction(1)
    for col in range(dim):
        piv = next((r for r in range(col, dim) if m[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        det *= m[col][col]
        for r in range(col + 1, dim):
            f = m[r][col] / m[col][col]
            if f:
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return det


class MatrixGroupModel(GroupModel):
    kind = "matrix"

    def __init__(self, gens: SymmetricGeneratingSet, matrices: Sequence[Sequence[Sequence]], name: str = ""):
        if len(matrices) != len(gens):
            raise StructuralError("need exactly one matrix per symmetric generator")
        self.gens = gens
        self.name = name
        rows0 = matrices[0] if matrices else [[1]]
        self.dim = len(rows0)
        flat = []
        for lab, rows in zip(gens.labels, matrices):
            if len(rows) != self.dim or any(len(r) != self.dim for r in rows):
                raise StructuralError(f"matrix for {lab!r} is not {self.dim}x{self.dim}")
            flat.append([parse_rational(x) for r in rows for x in r])
        self.integral = all(x.denominator == 1 for m in flat for x in m)
        self._gens = [_normalize(m, self.integral) for m in flat]
        self._identity = identity_matrix(self.dim, self.integral)
        for i, j in enumerate(gens.involution):
            if mat_mul(self._gens[i], self._gens[j], self.dim) != self._identity:
                raise InconsistencyError(
                    f"declared inverse {gens.labels[j]!r} is not the exact inverse of {gens.labels[i]!r}")
        # sparse (k, j, value) triples for fast right multiplication
        d = self.dim
        self._sparse = [[(k, j, g[k * d + j]) for k in range(d) for j in range(d) if g[k * d + j]]
                        for g in self._gens]

    def identity(self):
        return self._identity

    def generator(self, i):
        return self._gens[i]

    def multiply(self, a, b):
        return mat_mul(a, b, self.dim)

    def right_mul_gen(self, a, i):
        d = self.dim
        out = [0] * (d * d)
        for k, j, g in self._sparse[i]:
            for r in range(d):
                x = a[r * d + k]
                if x:
                    out[r * d + j] += x * g
        if self.integral:
            return tuple(out)
        return tuple(Fraction(x) for x in out)

    def inverse(self, a):
        inv = mat_inverse(a, self.dim)
        return _normalize(inv, self.integral)

    def key(self, a):
        parts = []
        for x in a:
            x = Fraction(x)
            parts.append(f"{x.numerator}/{x.denominator}")
        return ("M%d:" % self.dim + ",".join(parts)).encode()

    def rows(self, a) -> list[list[Fraction]]:
        d = self.dim
        return [[Fraction(a[i * d + j]) for j in range(d)] for i in range(d)]
