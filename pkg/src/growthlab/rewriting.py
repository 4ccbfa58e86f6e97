"""Rewriting words in a group with a normal nilpotent subgroup.

Every routine works on a :class:`GradedExtension`: a polycyclic
presentation whose basis is split into a top part ``T`` (lifted quotient
generators, led by any torsion elements that form a finite quotient) and a
normal bottom part ``B`` spanning the subgroup ``N``.  Elements of ``N`` are
kept as exponent vectors, and the length of such a vector is the sum of its
absolute exponents.
"""

from __future__ import annotations

import csv
import io
import os
import random
from collections import OrderedDict
from dataclasses import dataclass, field
from itertools import product
from typing import Optional, Sequence

from .errors import ParameterError, PresentationError, ResourceError, StructuralError
from .growth import ExponentialFit, PolynomialBoundFit, fit_exponential_rate, fit_polynomial_degree, fmt
from .models.base import GroupModel
from .models.extension import SplitExtensionModel
from .models.polycyclic import PolycyclicPresentation
from .models.verify import verify_graded_series
from .words import Word

DEFAULT_CACHE_MB = 256
Syllables = list  # [(model letter index, exponent), ...]


def cache_entries_from_env(n_basis: int) -> int:
    """Memo capacity implied by ``GROWTHLAB_CACHE_MB`` for vectors of ``n_basis`` entries."""
    raw = os.environ.get("GROWTHLAB_CACHE_MB")
    try:
        mb = float(raw) if raw else DEFAULT_CACHE_MB
    except ValueError:
        raise ParameterError(f"GROWTHLAB_CACHE_MB must be a number, got {raw!r}") from None
    per_entry = 240 + 72 * n_basis
    return max(16, int(mb * 1024 * 1024 / per_entry))


class MemoCache:
    """Least-recently-used map with a fixed entry budget; thread use must be per worker."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._d: OrderedDict = OrderedDict()
        self.hits = 0
        self.misses = 0

    def get(self, key):
        v = self._d.get(key)
        if v is None:
            self.misses += 1
            return None
        self.hits += 1
        self._d.move_to_end(key)
        return v

    def put(self, key, value):
        self._d[key] = value
        self._d.move_to_end(key)
        if len(self._d) > self.capacity:
            self._d.popitem(last=False)

    def __len__(self):
        return len(self._d)


def _abs_len(v: Sequence[int]) -> int:
    return sum(abs(e) for e in v)


# ---------------------------------------------------------------------------
# graded extensions


@dataclass
class GradedExtension:
    model: GroupModel
    pres: PolycyclicPresentation
    n_top: int
    n_coset: int
    letter_map: tuple  # model letter -> (basis index, ±1)
    cache: MemoCache = field(default=None, repr=False)

    def __post_init__(self):
        if self.cache is None:
            self.cache = MemoCache(cache_entries_from_env(self.pres.n))
        self._basis_letter = {}
        for i, ks in enumerate(self.letter_map):
            self._basis_letter.setdefault(ks, i)
        for k in range(self.pres.n):
            if (k, 1) not in self._basis_letter:
                raise StructuralError(f"basis element {self.pres.basis_labels[k]} has no letter")
            self._basis_letter.setdefault((k, -1), self._basis_letter[(k, 1)])

    # construction ---------------------------------------------------------
    @classmethod
    def from_split(cls, ext: SplitExtensionModel) -> "GradedExtension":
        """Combine ``Λ``'s basis (top) with ``N``'s basis (bottom) into one presentation."""
        N, Lam = ext.N, ext.Lam
        if not isinstance(Lam, PolycyclicPresentation):
            raise PresentationError("rewriting needs Lambda given as a polycyclic presentation")
        nL, nN = Lam.n, N.n

        def pairs_of(p: PolycyclicPresentation):
            out = []
            for k in range(p.n):
                lab = p.gens.labels[p.letter_of(k, 1)]
                inv = p.gens.labels[p.gens.involution[p.letter_of(k, 1)]]
                out.append((lab, inv))
            return out

        table = {}
        for (i, s, j), syl in Lam._table.items():
            table[(i, s, j)] = syl
        for (i, s, j), syl in N._table.items():
            table[(nL + i, s, nL + j)] = tuple((nL + k, e) for k, e in syl)
        for i in range(nL):
            for s in (1, -1):
                f = ext.generator_automorphism(Lam.letter_of(i, s))
                for j in range(nN):
                    table[(i, s, nL + j)] = tuple((nL + k, e) for k, e in enumerate(f[j]) if e)
        strata = [(0, nL)] if nL else []
        if nN:
            strata.append((nL, nL + nN))
        pres = PolycyclicPresentation(pairs_of(Lam) + pairs_of(N), table, strata=strata,
                                      moduli=list(Lam.moduli) + list(N.moduli), name=ext.name)
        nLN = ext.n_letters_N
        lm = [(nL + N.letter_syllable(i)[0], N.letter_syllable(i)[1]) for i in range(nLN)]
        lm += [Lam.letter_syllable(i) for i in range(len(Lam.gens))]
        return cls(ext, pres, nL, _leading_torsion(pres, nL), tuple(lm))

    @classmethod
    def from_polycyclic(cls, pres: PolycyclicPresentation, tail_label: Optional[str] = None) -> "GradedExtension":
        """Use the tail subgroup starting at ``tail_label`` (default: the second stratum) as ``N``."""
        if tail_label is None:
            if len(pres.strata) < 2:
                raise ParameterError("presentation has one stratum; name the tail subgroup explicitly")
            n_top = pres.strata[1][0]
        else:
            if tail_label not in pres.basis_labels:
                raise ParameterError(f"{tail_label!r} is not a basis label")
            n_top = pres.basis_labels.index(tail_label)
        lm = tuple(pres.letter_syllable(i) for i in range(len(pres.gens)))
        return cls(pres, pres, n_top, _leading_torsion(pres, n_top), lm)

    # helpers ----------------------------------------------------------------
    def basis_letter(self, k: int, s: int) -> int:
        return self._basis_letter[(k, 1 if s > 0 else -1)]

    def is_bottom_letter(self, letter: int) -> bool:
        return self.letter_map[letter][0] >= self.n_top

    def unit(self, k: int, e: int = 1) -> tuple:
        return self.pres.mul_syllable(self.pres.identity(), k, e)

    def vector_syllables(self, v: Sequence[int]) -> Syllables:
        """Model-letter syllables spelling the normal form ``v``."""
        out = []
        for k, e in enumerate(v):
            if e:
                out.append((self.basis_letter(k, e), abs(e)))
        return out

    def bottom_vector(self, v: Sequence[int]) -> tuple:
        return tuple(v[self.n_top:])

    def word_vector(self, w: Word) -> tuple:
        vec = self.pres.identity()
        for i in w.letters:
            k, s = self.letter_map[i]
            vec = self.pres.mul_syllable(vec, k, s)
        return vec


def _leading_torsion(pres: PolycyclicPresentation, n_top: int) -> int:
    c = 0
    while c < n_top and pres.moduli[c] is not None:
        c += 1
    return c


def as_graded(model, tail: Optional[str] = None) -> GradedExtension:
    if isinstance(model, GradedExtension):
        return model
    if isinstance(model, SplitExtensionModel):
        if tail is not None:
            raise ParameterError("a split extension always uses its kernel N as the subgroup")
        return GradedExtension.from_split(model)
    if isinstance(model, PolycyclicPresentation):
        return GradedExtension.from_polycyclic(model, tail)
    raise ParameterError(f"rewriting is not available for {model.kind} models")


def evaluate_syllables(model: GroupModel, syllables: Syllables):
    g = model.identity()
    for letter, e in syllables:
        g = model.multiply(g, model.power(model.generator(letter), e))
    return g


# ---------------------------------------------------------------------------
# pushing N letters to the left


@dataclass
class RewriteTrace:
    input_length: int
    s: int = 0
    t: int = 0
    conj_ops: int = 0
    max_intermediate: int = 0

    def row(self) -> list[int]:
        return [self.input_length, self.s, self.t, self.conj_ops, self.max_intermediate]


TRACE_HEADER = ["input_length", "s", "t", "conj_ops", "max_intermediate"]


def traces_csv(traces: Sequence[RewriteTrace]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for tr in traces:
        w.writerow(tr.row())
    return buf.getvalue()


@dataclass
class PushRightResult:
    graded: GradedExtension
    nu: tuple        # normal form over the full basis; top entries are zero
    sigma: Word
    trace: RewriteTrace

    def nu_syllables(self) -> Syllables:
        return self.graded.vector_syllables(self.nu)

    def output_syllables(self) -> Syllables:
        return self.nu_syllables() + [(i, 1) for i in self.sigma.letters]


def push_right(G, w: Word, max_length: Optional[int] = None, collect: bool = True) -> PushRightResult:
    """Rewrite ``w`` as ``ν · σ`` with ``ν ∈ N`` and ``σ`` the non-``N`` letters of ``w`` in order.

    Each ``N`` letter ``α`` preceded by the letters ``γ_1 … γ_u`` of ``σ``
    is replaced by the conjugate ``(γ_1 ⋯ γ_u) α (γ_1 ⋯ γ_u)⁻¹``, one
    conjugate operation per such site.  ``trace.s`` adds up the lengths of
    these conjugates; ``ν`` is their collected product.  With
    ``collect=False`` only the trace is produced and ``ν`` is left as the
    identity.
    """
    G = as_graded(G)
    if w.gens != G.model.gens:
        raise StructuralError("word is not over the model's generating set")
    P, n_top = G.pres, G.n_top
    tr = RewriteTrace(len(w))
    prefix = P.identity()
    prefix_inv = P.identity()
    nu = P.identity()
    sigma = []
    for letter in w.letters:
        k, s = G.letter_map[letter]
        if k < n_top:
            sigma.append(letter)
            prefix = P.mul_syllable(prefix, k, s)
            prefix_inv = P.multiply(G.unit(k, -s), prefix_inv)
            continue
        if prefix == P.identity():
            piece = G.unit(k, s)
        else:
            key = (prefix, k, s)
            piece = G.cache.get(key)
            if piece is None:
                piece = P.multiply(P.multiply(prefix, G.unit(k, s)), prefix_inv)
                if any(piece[:n_top]):
                    raise PresentationError("conjugate of an N letter left N; the bottom part is not normal")
                G.cache.put(key, piece)
            tr.conj_ops += 1
        plen = _abs_len(piece)
        tr.s += plen
        if collect:
            nu = P.multiply(nu, piece)
            tr.max_intermediate = max(tr.max_intermediate, plen, _abs_len(nu))
        else:
            tr.max_intermediate = max(tr.max_intermediate, plen)
        if max_length is not None and tr.max_intermediate > max_length:
            tr.t = len(sigma)
            raise ResourceError(f"intermediate length {tr.max_intermediate} exceeds {max_length}", partial=tr)
    tr.t = len(sigma)
    return PushRightResult(G, nu, Word(w.gens, tuple(sigma)), tr)


# ---------------------------------------------------------------------------
# coset normal form


@dataclass
class CosetTable:
    """Transposition words for the finite quotient by the subgroup ``F`` after the torsion lead.

    ``reps`` lists the coset representatives as leading exponent tuples.
    ``step[(q, letter)] = (word over F ∩ S, q')`` records ``β_q s = α' β_q'``;
    ``product[(i, j)] = (word, l)`` records ``β_i β_j = α_ij β_l``.
    """

    graded: GradedExtension
    reps: list
    step: dict
    product: dict
    K: int


def _f_word(G: GradedExtension, target: tuple, budget: int) -> list[int]:
    """Shortest word over the letters of ``F ∩ S`` for an element of ``F``."""
    P = G.pres
    letters = [i for i, (k, _) in enumerate(G.letter_map) if k >= G.n_coset]
    e = P.identity()
    if target == e:
        return []
    parent = {e: None}
    frontier = [e]
    while frontier and len(parent) <= budget:
        new = []
        for x in frontier:
            for i in letters:
                k, s = G.letter_map[i]
                y = P.mul_syllable(x, k, s)
                if y not in parent:
                    parent[y] = (x, i)
                    if y == target:
                        out = []
                        while parent[y] is not None:
                            y, i = parent[y]
                            out.append(i)
                        return out[::-1]
                    new.append(y)
        frontier = new
    raise PresentationError("transposition table incomplete: an element of F is not reached by F ∩ S "
                            f"within {budget} elements")


def coset_table(G, budget: int = 200_000) -> CosetTable:
    G = as_graded(G)
    P, c = G.pres, G.n_coset
    reps = list(product(*[range(P.moduli[k]) for k in range(c)])) if c else [()]
    index = {r: q for q, r in enumerate(reps)}
    rep_vec = [tuple(r) + (0,) * (P.n - c) for r in reps]

    def split(x):
        head = tuple(x[:c])
        beta = rep_vec[index[head]]
        return P.multiply(x, P.inverse(beta)), index[head]

    step, prod_t = {}, {}
    for q, b in enumerate(rep_vec):
        for letter, (k, s) in enumerate(G.letter_map):
            alpha, q2 = split(P.mul_syllable(b, k, s))
            step[(q, letter)] = (_f_word(G, alpha, budget), q2)
        for j, b2 in enumerate(rep_vec):
            alpha, l = split(P.multiply(b, b2))
            prod_t[(q, j)] = (_f_word(G, alpha, budget), l)
    K = max([len(wd) for wd, _ in step.values()] + [len(wd) for wd, _ in prod_t.values()] + [1])
    return CosetTable(G, reps, step, prod_t, K)


@dataclass
class CosetResult:
    phi: Word
    coset: int
    K: int
    beta: tuple

    def output_syllables(self, G: GradedExtension) -> Syllables:
        beta = tuple(self.beta) + (0,) * (G.pres.n - len(self.beta))
        return [(i, 1) for i in self.phi.letters] + G.vector_syllables(beta)


def coset_normal_form(G, w: Word, table: Optional[CosetTable] = None) -> CosetResult:
    """Write ``w = φ · β_l`` with ``φ`` over ``F ∩ S``, so ``|φ| <= K · |w|``.

    Reads ``w`` left to right; each letter is moved past the current
    representative with one table lookup.
    """
    G = as_graded(G)
    if w.gens != G.model.gens:
        raise StructuralError("word is not over the model's generating set")
    table = table or _cached_coset_table(G)
    phi: list[int] = []
    q = 0
    for letter in w.letters:
        try:
            wd, q = table.step[(q, letter)]
        except KeyError:
            raise PresentationError(f"transposition table has no entry for coset {q} and letter {letter}") from None
        phi.extend(wd)
    return CosetResult(Word(w.gens, tuple(phi)), q, table.K, table.reps[q])


def _cached_coset_table(G: GradedExtension) -> CosetTable:
    t = getattr(G, "_coset_table", None)
    if t is None:
        t = coset_table(G)
        G._coset_table = t
    return t


# ---------------------------------------------------------------------------
# full collection


@dataclass
class CollectResult:
    graded: GradedExtension
    alpha: tuple               # normal form over the full basis; top entries are zero
    exponents: tuple           # a_1 … a_m for the top basis after the torsion lead
    coset: int
    beta: tuple
    trace: RewriteTrace
    K: int = 1

    def output_syllables(self) -> Syllables:
        """``α · τ_m^{a_m} ⋯ τ_1^{a_1} · β`` as model-letter syllables."""
        G = self.graded
        out = G.vector_syllables(self.alpha)
        for off in range(len(self.exponents) - 1, -1, -1):
            e = self.exponents[off]
            if e:
                out.append((G.basis_letter(G.n_coset + off, e), abs(e)))
        beta = tuple(self.beta) + (0,) * (G.pres.n - len(self.beta))
        return out + G.vector_syllables(beta)


def collect_normal_form(G, w: Word, max_length: Optional[int] = None) -> CollectResult:
    """Collect ``w`` into ``α · τ_m^{a_m} ⋯ τ_1^{a_1} · β_q``.

    The coset representative is split off first.  Then ``τ_1`` is swept to
    the right end, conjugating everything it passes, then ``τ_2`` is swept
    through what is left of it, and so on; what remains at the end lies in
    ``N`` and is collected into ``α``.
    """
    G = as_graded(G)
    if w.gens != G.model.gens:
        raise StructuralError("word is not over the model's generating set")
    P, n_top, c = G.pres, G.n_top, G.n_coset
    cr = coset_normal_form(G, w) if c else CosetResult(w, 0, 1, ())
    tr = RewriteTrace(len(w))
    # items: ("T", k, e) top syllables or ("N", vector)
    items: list = []
    for letter in cr.phi.letters:
        k, s = G.letter_map[letter]
        _append(items, ("T", k, s) if k < n_top else ("N", G.unit(k, s)), P)
    exps = []
    for i in range(c, n_top):
        acc = 0
        out: list = []
        m = P.moduli[i]
        for it in items:
            if it[0] == "T" and it[1] == i:
                acc += it[2]
                if m is not None:
                    acc %= m
                continue
            if acc == 0:
                _append(out, it, P)
                continue
            tr.conj_ops += 1
            for new in _conjugate_item(G, i, acc, it):
                _append(out, new, P)
        items = out
        exps.append(acc)
        size = sum(abs(it[2]) if it[0] == "T" else _abs_len(it[1]) for it in items) + abs(acc)
        tr.max_intermediate = max(tr.max_intermediate, size)
        if max_length is not None and size > max_length:
            raise ResourceError(f"intermediate length {size} exceeds {max_length}", partial=tr)
    alpha = P.identity()
    for it in items:
        if it[0] != "N":
            raise ArithmeticError("top letter left over after all sweeps")
        alpha = P.multiply(alpha, it[1])
    tr.s = _abs_len(alpha)
    tr.t = sum(abs(e) for e in exps)
    return CollectResult(G, alpha, tuple(exps), cr.coset, tuple(cr.beta), tr, cr.K)


def _append(items: list, it, P: PolycyclicPresentation) -> None:
    if items:
        last = items[-1]
        if it[0] == "N" and last[0] == "N":
            items[-1] = ("N", P.multiply(last[1], it[1]))
            return
        if it[0] == "T" and last[0] == "T" and it[1] == last[1]:
            e = last[2] + it[2]
            m = P.moduli[it[1]]
            if m is not None:
                e %= m
            items.pop()
            if e:
                items.append(("T", it[1], e))
            return
    items.append(it)


def _conjugate_item(G: GradedExtension, i: int, acc: int, it) -> list:
    """Items spelling ``τ_i^acc · x · τ_i^-acc`` (all on basis indices above ``i``)."""
    P = G.pres
    key = ("sweep", i, acc) + ((it[1], it[2]) if it[0] == "T" else (it[1],))
    vec = G.cache.get(key)
    if vec is None:
        x = G.unit(it[1], it[2]) if it[0] == "T" else it[1]
        vec = P.multiply(P.multiply(G.unit(i, acc), x), G.unit(i, -acc))
        G.cache.put(key, vec)
    out = [("T", k, vec[k]) for k in range(i + 1, G.n_top) if vec[k]]
    bottom = tuple(0 for _ in range(G.n_top)) + tuple(vec[G.n_top:])
    if any(bottom):
        out.append(("N", bottom))
    return out


# ---------------------------------------------------------------------------
# growth of the N prefix


@dataclass
class PrefixGrowthReport:
    mode: str                      # "screened" or "unscreened"
    seed: int
    samples: int
    lengths: tuple[int, ...]
    s_max: tuple[int, ...]
    s_mean: tuple[float, ...]
    fit: Optional[PolynomialBoundFit]
    semilog: Optional[ExponentialFit]
    traces: list = field(repr=False, default_factory=list)
    notes: list = field(default_factory=list)
    search: str = "uniform"

    @property
    def bound_claimed(self) -> bool:
        return self.mode == "screened"

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "bound_claimed": self.bound_claimed,
            "sampling": "uniform i.i.d. letters" if self.search == "uniform"
                        else "uniform i.i.d. letters, then seeded hill climbing on s",
            "length_function": "sum of absolute exponents of each conjugate",
            "seed": self.seed,
            "samples": self.samples,
            "rows": [{"length": R, "s_max": m, "s_mean": fmt(a)}
                     for R, m, a in zip(self.lengths, self.s_max, self.s_mean)],
            "fit": self.fit.to_dict() if self.fit else None,
            "semilog": self.semilog.to_dict() if self.semilog else None,
            "notes": list(self.notes),
        }


def random_word(model: GroupModel, length: int, rng: random.Random) -> Word:
    n = len(model.gens)
    return Word(model.gens, tuple(rng.randrange(n) for _ in range(length)))


def screen_passes(model) -> tuple[bool, str]:
    """Whether the unit-circle hypothesis holds, with a short reason."""
    from .spectra import virtual_nilpotency_screen

    base = model.model if isinstance(model, GradedExtension) else model
    if isinstance(base, SplitExtensionModel):
        rep = virtual_nilpotency_screen(base)
        return rep.passed, f"screen {rep.status}"
    if isinstance(base, PolycyclicPresentation):
        rep = verify_graded_series(base)
        return rep.ok, "graded nilpotent presentation" if rep.ok else "grading not verified"
    return False, f"no screen for {base.kind} models"


def _climb(G: GradedExtension, start: Word, start_s: int, steps: int, rng: random.Random):
    """Single-letter mutations that never lower ``s``; returns the best word, its ``s`` and trace."""
    n = len(G.model.gens)
    letters = list(start.letters)
    best = start_s
    for _ in range(steps):
        pos = rng.randrange(len(letters))
        new = rng.randrange(n)
        if new == letters[pos]:
            continue
        old = letters[pos]
        letters[pos] = new
        s = push_right(G, Word(start.gens, tuple(letters)), collect=False).trace.s
        if s >= best:
            best = s
        else:
            letters[pos] = old
    w = Word(start.gens, tuple(letters))
    return w, best, push_right(G, w).trace


def measure_prefix_growth(model, lengths: Sequence[int], samples: int, seed: int,
                          tail: Optional[str] = None, search: str = "uniform",
                          climb_steps: Optional[int] = None) -> PrefixGrowthReport:
    """Largest ``s`` over words of each length, with log-log and semi-log fits.

    ``search="uniform"`` draws ``samples`` uniform i.i.d. words per length,
    seeded per length from ``seed``.  ``search="climb"`` then continues from
    the best of them with ``climb_steps`` seeded single-letter mutations
    (default ``20 R``), keeping a change whenever ``s`` does not drop; it
    probes the worst case that a polynomial bound has to cover.  Without a
    passing screen the report runs "unscreened": the data and fits are
    produced but no polynomial bound is claimed.
    """
    if search not in ("uniform", "climb"):
        raise ParameterError(f"search must be 'uniform' or 'climb', got {search!r}")
    lengths = tuple(sorted(set(int(R) for R in lengths)))
    if not lengths or lengths[0] < 1:
        raise ParameterError("lengths must be positive")
    if samples < 1:
        raise ParameterError("samples must be at least 1")
    G = as_graded(model, tail)
    ok, why = screen_passes(G)
    notes = [why]
    s_max, s_mean, traces = [], [], []
    for R in lengths:
        rng = random.Random(f"{seed}:{R}")
        vals = []
        best_w, best_s = None, -1
        for _ in range(samples):
            w = random_word(G.model, R, rng)
            res = push_right(G, w)
            vals.append(res.trace.s)
            traces.append(res.trace)
            if res.trace.s > best_s:
                best_w, best_s = w, res.trace.s
        top = best_s
        if search == "climb":
            steps = 20 * R if climb_steps is None else climb_steps
            _, top, tr = _climb(G, best_w, best_s, steps, rng)
            traces.append(tr)
        s_max.append(top)
        s_mean.append(sum(vals) / len(vals))
    series = {R: v for R, v in zip(lengths, s_max) if v > 0}
    if len(series) < len(lengths):
        notes.append("lengths with s_max = 0 left out of the fits")
    window = (min(series), max(series)) if series else (lengths[0], lengths[-1])
    fit = semilog = None
    if len(series) >= 3:
        fit = fit_polynomial_degree(series, window)
        semilog = fit_exponential_rate(series, window)
    else:
        notes.append("fewer than 3 positive points; no fit")
    return PrefixGrowthReport("screened" if ok else "unscreened", seed, samples, lengths,
                              tuple(s_max), tuple(s_mean), fit, semilog, traces, notes, search)
