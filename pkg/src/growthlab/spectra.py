"""Exact spectral tests for integer matrices acting on graded quotients.

Polynomials are coefficient lists with the leading coefficient first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, isqrt
from typing import NamedTuple, Optional, Sequence, Union

from .errors import ParameterError, PresentationError, UnsupportedStratumError
from .models.extension import SplitExtensionModel
from .models.polycyclic import PolycyclicPresentation

Number = Union[int, Fraction]
Poly = list  # leading coefficient first

DEFAULT_TOL = Fraction(1, 10**9)
DEFAULT_ORDER_BUDGET = 10_000


# ---------------------------------------------------------------------------
# matrices


def _square(A: Sequence[Sequence]) -> list[list]:
    rows = [list(r) for r in A]
    k = len(rows)
    if k == 0 or any(len(r) != k for r in rows):
        raise ParameterError("matrix must be square and non-empty")
    return rows


def integer_matrix(A: Sequence[Sequence]) -> list[list[int]]:
    """Validate that every entry is an exact integer and return plain ``int`` rows."""
    rows = _square(A)
    out = []
    for r in rows:
        row = []
        for x in r:
            if isinstance(x, bool):
                raise ParameterError("boolean matrix entries are not integers")
            if isinstance(x, Fraction):
                if x.denominator != 1:
                    raise ParameterError(f"matrix entry {x} is not an integer")
                x = x.numerator
            if not isinstance(x, int):
                raise ParameterError(f"matrix entry {x!r} is not an exact integer")
            row.append(x)
        out.append(row)
    return out


def _matmul(a, b):
    k = len(a)
    return [[sum(a[i][t] * b[t][j] for t in range(k)) for j in range(k)] for i in range(k)]


def _matpow(a, e):
    k = len(a)
    result = [[int(i == j) for j in range(k)] for i in range(k)]
    while e:
        if e & 1:
            result = _matmul(result, a)
        e >>= 1
        if e:
            a = _matmul(a, a)
    return result


def kronecker_product(a, b):
    n, m = len(a), len(b)
    return [[a[i // m][j // m] * b[i % m][j % m] for j in range(n * m)] for i in range(n * m)]


def char_poly(A: Sequence[Sequence[Number]]) -> Poly:
    """Monic characteristic polynomial ``det(xI - A)`` by Faddeev–LeVerrier.

    Every division is exact; integer input gives integer coefficients.
    """
    a = _square(A)
    k = len(a)
    integral = all(isinstance(x, int) or (isinstance(x, Fraction) and x.denominator == 1) for r in a for x in r)
    if integral:
        a = [[int(x) for x in r] for r in a]
    else:
        a = [[Fraction(x) for x in r] for r in a]
    coeffs = [1]
    M = [[0] * k for _ in range(k)]
    c = 1
    for j in range(1, k + 1):
        # M_j = A M_{j-1} + c_{j-1} I ;  c_j = -tr(A M_j) / j
        AM = _matmul(a, M)
        M = [[AM[r][s] + (c if r == s else 0) for s in range(k)] for r in range(k)]
        AM = _matmul(a, M)
        tr = sum(AM[r][r] for r in range(k))
        if integral:
            q, rem = divmod(-tr, j)
            if rem:
                raise ArithmeticError("non-exact division in Faddeev-LeVerrier")
            c = q
        else:
            c = Fraction(-tr, 1) / j
        coeffs.append(c)
    return coeffs


# ---------------------------------------------------------------------------
# polynomial arithmetic


def _trim(p: Poly) -> Poly:
    i = 0
    while i < len(p) - 1 and p[i] == 0:
        i += 1
    return p[i:]


def poly_eval(p: Poly, x):
    acc = 0
    for c in p:
        acc = acc * x + c
    return acc


def poly_derivative(p: Poly) -> Poly:
    d = len(p) - 1
    if d == 0:
        return [0]
    return [c * (d - i) for i, c in enumerate(p[:-1])]


def poly_divmod(p: Poly, q: Poly) -> tuple[Poly, Poly]:
    """Quotient and remainder over the rationals (exact integers when ``q`` is monic)."""
    p, q = _trim(list(p)), _trim(list(q))
    if q == [0]:
        raise ZeroDivisionError("polynomial division by zero")
    lead = q[0]
    monic = lead == 1
    out = []
    rem = list(p)
    while len(rem) >= len(q) and rem != [0]:
        f = rem[0] if monic else Fraction(rem[0]) / lead
        out.append(f)
        for i in range(len(q)):
            rem[i] -= f * q[i]
        rem.pop(0)
    return (out or [0]), _trim(rem or [0])


def poly_mul(p: Poly, q: Poly) -> Poly:
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                out[i + j] += a * b
    return out


def poly_gcd(p: Poly, q: Poly) -> Poly:
    p, q = _trim(list(p)), _trim(list(q))
    while q != [0]:
        _, r = poly_divmod(p, q)
        p, q = q, r
    lead = Fraction(p[0])
    return [Fraction(c) / lead for c in p]


def square_free(p: Poly) -> Poly:
    """``p / gcd(p, p')``, made monic."""
    g = poly_gcd(p, poly_derivative(p))
    q, _ = poly_divmod(p, g)
    lead = Fraction(q[0])
    return [Fraction(c) / lead for c in q]


def sturm_sequence(p: Poly) -> list[Poly]:
    seq = [_trim(list(p)), _trim(poly_derivative(p))]
    while seq[-1] != [0] and len(seq[-1]) > 1:
        _, r = poly_divmod(seq[-2], seq[-1])
        if r == [0]:
            break
        seq.append([-c for c in r])
    return seq


def _sign_changes(seq: list[Poly], x) -> int:
    signs = []
    for p in seq:
        v = poly_eval(p, x)
        if v:
            signs.append(v > 0)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def count_real_roots(seq: list[Poly], a, b) -> int:
    """Distinct real roots in ``(a, b]`` for the square-free polynomial heading ``seq``."""
    return _sign_changes(seq, a) - _sign_changes(seq, b)


def cauchy_bound(p: Poly) -> Fraction:
    lead = Fraction(p[0])
    return 1 + max((abs(Fraction(c) / lead) for c in p[1:]), default=Fraction(0))


def totient(m: int) -> int:
    out, n, d = m, m, 2
    while d * d <= n:
        if n % d == 0:
            while n % d == 0:
                n //= d
            out -= out // d
        d += 1
    if n > 1:
        out -= out // n
    return out


_CYCLOTOMIC: dict[int, Poly] = {}


def cyclotomic(m: int) -> Poly:
    """``Φ_m`` with integer coefficients."""
    if m in _CYCLOTOMIC:
        return _CYCLOTOMIC[m]
    p = [1] + [0] * (m - 1) + [-1]
    for d in range(1, m):
        if m % d == 0:
            p, r = poly_divmod(p, cyclotomic(d))
            assert r == [0]
    p = [int(c) for c in p]
    _CYCLOTOMIC[m] = p
    return p


def candidate_orders(k: int) -> list[int]:
    """All ``m`` with ``φ(m) <= k``, found by search up to ``k² + k``."""
    return [m for m in range(1, k * k + k + 1) if totient(m) <= k]


# ---------------------------------------------------------------------------
# unit circle


@dataclass(frozen=True)
class UnitCircleVerdict:
    on_circle: bool
    orders: tuple[int, ...]        # cyclotomic factors found (with multiplicity)
    certificate_power: Optional[int]
    reason: str


def unit_circle_certificate(A: Sequence[Sequence[int]]) -> UnitCircleVerdict:
    """Decide whether every eigenvalue of the integer matrix ``A`` has modulus one.

    An integer matrix with ``|det| = 1`` has all eigenvalues on the unit
    circle exactly when they are all roots of unity (Kronecker), i.e. when
    its characteristic polynomial is a product of cyclotomic polynomials
    ``Φ_m`` with ``φ(m) <= k``.  A positive verdict is certified by checking
    ``(A^M - I)^k = 0`` for ``M`` the lcm of the orders found.
    """
    a = integer_matrix(A)
    k = len(a)
    p = char_poly(a)
    det = p[-1] * (-1) ** k
    if abs(det) != 1:
        return UnitCircleVerdict(False, (), None, f"|det| = {abs(det)} != 1")
    rest = p
    orders = []
    for m in candidate_orders(k):
        phi = cyclotomic(m)
        while len(rest) >= len(phi):
            q, r = poly_divmod(rest, phi)
            if r != [0]:
                break
            rest = [int(c) for c in q]
            orders.append(m)
    if rest != [1]:
        return UnitCircleVerdict(False, tuple(orders), None,
                                 "characteristic polynomial has a non-cyclotomic factor")
    M = 1
    for m in set(orders):
        M = M * m // gcd(M, m)
    B = _matpow(a, M)
    D = [[B[i][j] - int(i == j) for j in range(k)] for i in range(k)]
    if any(any(row) for row in _matpow(D, k)):
        raise ArithmeticError("cyclotomic factorisation not confirmed by (A^M - I)^k = 0")
    return UnitCircleVerdict(True, tuple(orders), M, "all eigenvalues are roots of unity")


def unit_circle_test(A: Sequence[Sequence[int]]) -> bool:
    return unit_circle_certificate(A).on_circle


# ---------------------------------------------------------------------------
# spectral radius


def _sqrt_floor(x: Fraction, D: int) -> Fraction:
    if x <= 0:
        return Fraction(0)
    return Fraction(isqrt(math.floor(x * D * D)), D)


def _sqrt_ceil(x: Fraction, D: int) -> Fraction:
    if x <= 0:
        return Fraction(0)
    n = math.ceil(x * D * D)
    r = isqrt(n)
    return Fraction(r if r * r == n else r + 1, D)


def lambda_max(A: Sequence[Sequence[Number]], tol=DEFAULT_TOL) -> tuple[Fraction, Fraction]:
    """Rational enclosure ``[lo, hi]`` of the largest eigenvalue modulus, with ``hi - lo <= tol``.

    For a real matrix the eigenvalue products ``λ_i λ_j`` are the eigenvalues
    of ``A ⊗ A``; the largest real one is ``ρ(A)²``.  It is isolated by
    Sturm-sequence bisection and its square root enclosed with integer
    square roots.
    """
    tol = Fraction(tol)
    if tol <= 0:
        raise ParameterError("tol must be positive")
    a = _square(A)
    q = char_poly(kronecker_product(a, a))
    integral = all(isinstance(c, int) or Fraction(c).denominator == 1 for c in q)
    sf = square_free(q)
    seq = sturm_sequence(sf)
    hi = cauchy_bound(sf)
    lo = -hi
    D = 1
    while Fraction(1, D) > tol / 8:
        D *= 2
    checked_integer = False
    while True:
        width = hi - lo
        if integral and not checked_integer and width < Fraction(1, 2):
            checked_integer = True
            n = round((lo + hi) / 2)
            for c in (n - 1, n, n + 1):
                if lo <= c <= hi and poly_eval(q, c) == 0:
                    r = isqrt(c) if c >= 0 else None
                    if r is not None and r * r == c:
                        return Fraction(r), Fraction(r)
                    lo = hi = Fraction(c)
        s_lo, s_hi = _sqrt_floor(lo, D), _sqrt_ceil(hi, D)
        if s_hi - s_lo <= tol:
            return s_lo, s_hi
        if lo == hi:
            D *= 2
            continue
        mid = (lo + hi) / 2
        if count_real_roots(seq, mid, hi) >= 1:
            lo = mid
        else:
            hi = mid


def osin_lower_bound(enclosure) -> float:
    """``ln2 · lnλ / (ln2 + 5 lnλ)`` evaluated at the lower end of a λ enclosure.

    Accepts a single number or an enclosure ``(lo, hi)``.  The expression
    increases with λ, so the lower end keeps the value a lower bound; the
    float result is nudged down by one ulp against rounding.
    """
    if isinstance(enclosure, (tuple, list)):
        lo, hi = (Fraction(enclosure[0]), Fraction(enclosure[1]))
    else:
        lo = hi = Fraction(enclosure)
    if hi < 1:
        raise ParameterError(f"enclosure [{float(lo)}, {float(hi)}] lies below 1")
    if lo <= 1:
        return 0.0
    ll = math.log(lo.numerator) - math.log(lo.denominator)
    ln2 = math.log(2.0)
    v = ln2 * ll / (ln2 + 5.0 * ll)
    return max(0.0, math.nextafter(v, 0.0))


@dataclass(frozen=True)
class SpectralSummary:
    char_poly: tuple[int, ...]
    unit_circle: bool
    lambda_max: tuple[Fraction, Fraction]
    osin_bound: float

    def to_dict(self) -> dict:
        lo, hi = self.lambda_max
        return {"char_poly": [str(c) for c in self.char_poly], "unit_circle": self.unit_circle,
                "lambda_max_lo": format(float(lo), ".12g"), "lambda_max_hi": format(float(hi), ".12g"),
                "osin_bound": format(self.osin_bound, ".12g")}


def spectral_summary(A: Sequence[Sequence[int]], tol=DEFAULT_TOL) -> SpectralSummary:
    a = integer_matrix(A)
    uc = unit_circle_test(a)
    enc = lambda_max(a, tol)
    osin = 0.0 if uc else osin_lower_bound(enc)
    return SpectralSummary(tuple(char_poly(a)), uc, enc, osin)


# ---------------------------------------------------------------------------
# conjugation actions of split extensions


def _lambda_letter(ext: SplitExtensionModel, generator) -> int:
    if isinstance(generator, str):
        return ext.Lam.gens.index(generator)
    if not 0 <= generator < len(ext.Lam.gens):
        raise ParameterError(f"Lambda generator index {generator} out of range")
    return generator


def conjugation_matrix(ext: SplitExtensionModel, generator, stratum: int) -> list[list[int]]:
    """Matrix of ``γ`` acting on ``N_h / N_{h+1}`` (``stratum`` counts from 1).

    Column ``i`` holds the stratum-``h`` exponents of ``γ α_i γ⁻¹`` for the
    ``i``-th basis element of the stratum.
    """
    N = ext.N
    if not 1 <= stratum <= len(N.strata):
        raise ParameterError(f"stratum {stratum} out of range 1..{len(N.strata)}")
    a, b = N.strata[stratum - 1]
    if any(N.moduli[k] is not None for k in range(a, b)):
        raise UnsupportedStratumError(f"stratum {stratum} has torsion; its quotient is not free abelian")
    g = _lambda_letter(ext, generator)
    try:
        aut = ext.generator_automorphism(g)
    except IndexError:
        raise PresentationError(f"no action recorded for Lambda letter {g}") from None
    m = b - a
    return [[aut[a + i][a + p] for i in range(m)] for p in range(m)]


class Order(NamedTuple):
    kind: str                 # "finite", "infinite" or "unknown"
    value: Optional[int] = None


def element_order(model, g, budget: int = DEFAULT_ORDER_BUDGET) -> Order:
    """Order of ``g``.

    In a polycyclic presentation this is exact: a leading exponent on a
    basis element without modulus survives in every power, and a leading
    exponent on a torsion element is cleared by a known power.  Other models
    are powered up to ``budget`` and answer "unknown" if that runs out.
    """
    if isinstance(model, PolycyclicPresentation):
        total = 1
        x = g
        while True:
            k = next((i for i, e in enumerate(x) if e), None)
            if k is None:
                return Order("finite", total)
            m = model.moduli[k]
            if m is None:
                return Order("infinite")
            r = m // gcd(x[k], m)
            total *= r
            x = model.power(x, r)
    e = model.identity()
    x = g
    for m in range(1, budget + 1):
        if x == e:
            return Order("finite", m)
        x = model.multiply(x, g)
    return Order("unknown")


@dataclass
class ScreenEntry:
    generator: str
    stratum: int
    unit_circle: bool
    lambda_max: tuple[Fraction, Fraction]
    osin_bound: float
    matrix: list

    def to_dict(self) -> dict:
        lo, hi = self.lambda_max
        return {"generator": self.generator, "stratum": self.stratum, "unit_circle": self.unit_circle,
                "lambda_max_lo": format(float(lo), ".12g"), "lambda_max_hi": format(float(hi), ".12g"),
                "osin_bound": format(self.osin_bound, ".12g")}


@dataclass
class ScreenReport:
    entries: list[ScreenEntry] = field(default_factory=list)
    finite_order: dict = field(default_factory=dict)
    order_unknown: list[str] = field(default_factory=list)
    skipped_strata: list[int] = field(default_factory=list)

    @property
    def status(self) -> str:
        if any(not e.unit_circle for e in self.entries):
            return "fail"
        if self.order_unknown:
            return "inconclusive"
        return "pass"

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def failures(self) -> list[ScreenEntry]:
        return [e for e in self.entries if not e.unit_circle]

    def to_list(self) -> list[dict]:
        return [e.to_dict() for e in self.entries]

    def to_dict(self) -> dict:
        return {"status": self.status, "entries": self.to_list(),
                "finite_order": dict(self.finite_order), "order_unknown": list(self.order_unknown),
                "skipped_torsion_strata": list(self.skipped_strata)}


def virtual_nilpotency_screen(ext: SplitExtensionModel, order_budget: int = DEFAULT_ORDER_BUDGET,
                              tol=DEFAULT_TOL) -> ScreenReport:
    """Unit-circle test on every (Λ generator of infinite order, torsion-free stratum) pair.

    One generator per inverse pair is screened, since ``γ⁻¹`` acts by the
    inverse matrix.  Generators whose order stays undecided within the
    budget are screened as if infinite and listed as order-unknown, which
    makes a clean screen inconclusive rather than a pass.
    """
    if not isinstance(ext, SplitExtensionModel):
        raise ParameterError(f"screen needs a split extension, got a {ext.kind} model")
    rep = ScreenReport()
    N, Lam = ext.N, ext.Lam
    torsion_free = []
    for h, (a, b) in enumerate(N.strata, start=1):
        if any(N.moduli[k] is not None for k in range(a, b)):
            rep.skipped_strata.append(h)
        else:
            torsion_free.append(h)
    for g in Lam.gens.pair_representatives():
        label = Lam.gens.labels[g]
        order = element_order(Lam, Lam.generator(g), order_budget)
        if order.kind == "finite":
            rep.finite_order[label] = order.value
            continue
        if order.kind == "unknown":
            rep.order_unknown.append(label)
        for h in torsion_free:
            M = conjugation_matrix(ext, g, h)
            uc = unit_circle_test(M)
            enc = lambda_max(M, tol)
            osin = 0.0 if uc else osin_lower_bound(enc)
            rep.entries.append(ScreenEntry(label, h, uc, enc, osin, M))
    return rep
