"""Ball enumeration and the growth analytics built on it.

Balls are grown breadth-first from the identity by right multiplication
with the generators.  Elements are canonical hashable values, so a single
dictionary both deduplicates and records the radius at which each element
first appeared.
"""

from __future__ import annotations

import csv
import io
import math
import resource
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Optional, Sequence

from .errors import ParameterError
from .models.base import GroupModel

DEFAULT_CAP_ELEMENTS = 10_000_000
DEFAULT_RESIDUAL_RATIO = 3.0
NUMBER_FORMAT = ".12g"


def fmt(x: float) -> str:
    """Decimal string with 12 significant digits (the report number format)."""
    return format(x, NUMBER_FORMAT)


# ---------------------------------------------------------------------------
# census


@dataclass(frozen=True)
class BallCensus:
    """Cumulative ball sizes ``c(0), …, c(R)`` over complete radii.

    ``requested_radius`` is what the caller asked for; when ``truncated`` is
    set the enumeration stopped early and ``radius`` is the last radius whose
    count is exact.
    """

    model_id: str
    fingerprint: str
    counts: tuple[int, ...]
    requested_radius: int
    truncated: bool = False

    @property
    def radius(self) -> int:
        return len(self.counts) - 1

    @property
    def spheres(self) -> tuple[int, ...]:
        c = self.counts
        return tuple(c[r] - (c[r - 1] if r else 0) for r in range(len(c)))

    def submultiplicative(self) -> bool:
        c = self.counts
        R = self.radius
        return all(c[r + s] <= c[r] * c[s] for r in range(R + 1) for s in range(R + 1 - r))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["radius", "cumulative", "sphere", "truncated"])
        last = self.radius
        for r, (c, s) in enumerate(zip(self.counts, self.spheres)):
            w.writerow([r, c, s, "true" if self.truncated and r == last else "false"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, model_id: str = "", fingerprint: str = "") -> "BallCensus":
        rows = list(csv.DictReader(io.StringIO(text)))
        counts = tuple(int(r["cumulative"]) for r in rows)
        trunc = any(r["truncated"] == "true" for r in rows)
        return cls(model_id, fingerprint, counts, len(counts) - 1, trunc)


@dataclass
class Ball:
    """An enumerated ball: the census plus the radius of every element."""

    model: GroupModel
    generators: tuple[int, ...]
    census: BallCensus
    distance: dict

    def length(self, g) -> Optional[int]:
        """``|g|`` if ``g`` lies in the ball, else ``None``."""
        return self.distance.get(g)

    def sphere(self, r: int) -> list:
        return [g for g, d in self.distance.items() if d == r]


def _peak_rss_mb() -> float:
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0


def _expand(model: GroupModel, chunk: Sequence, gens: Sequence[int]) -> list:
    mul = model.right_mul_gen
    return [mul(g, i) for g in chunk for i in gens]


def _chunks(seq: Sequence, parts: int) -> list[Sequence]:
    if parts <= 1 or len(seq) < 2 * parts:
        return [seq]
    step = -(-len(seq) // parts)
    return [seq[i:i + step] for i in range(0, len(seq), step)]


def enumerate_ball_elements(
    model: GroupModel,
    radius: int,
    cap_elements: int = DEFAULT_CAP_ELEMENTS,
    threads: int = 1,
    generators: Optional[Sequence[int]] = None,
    cap_memory_mb: Optional[float] = None,
) -> Ball:
    """Breadth-first ball of the given radius, keeping every element.

    The frontier of each radius is split into ``threads`` chunks whose
    products are merged back in chunk order, so both the counts and the
    frontier order are independent of the thread count.
    """
    if not isinstance(radius, int) or radius < 0:
        raise ParameterError(f"radius must be a non-negative integer, got {radius!r}")
    if cap_elements < 1:
        raise ParameterError("cap_elements must be at least 1")
    gens = tuple(range(len(model.gens))) if generators is None else tuple(generators)
    for i in gens:
        if not 0 <= i < len(model.gens):
            raise ParameterError(f"generator index {i} out of range")
    e = model.identity()
    dist = {e: 0}
    counts = [1]
    frontier = [e]
    truncated = False
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for r in range(1, radius + 1):
            if not frontier or not gens:
                counts.append(counts[-1])
                continue
            parts = _chunks(frontier, threads)
            if pool is None:
                results = [_expand(model, p, gens) for p in parts]
            else:
                results = list(pool.map(lambda p: _expand(model, p, gens), parts))
            new = []
            over = False
            for chunk in results:
                for g in chunk:
                    if g not in dist:
                        dist[g] = r
                        new.append(g)
                if len(dist) > cap_elements or (cap_memory_mb and _peak_rss_mb() > cap_memory_mb):
                    over = True
                    break
            if over:
                for g in new:
                    del dist[g]
                truncated = True
                break
            counts.append(counts[-1] + len(new))
            frontier = new
    finally:
        if pool is not None:
            pool.shutdown()
    fp = model.gens.fingerprint()
    if generators is not None:
        fp += "|" + ",".join(model.gens.labels[i] for i in gens)
    census = BallCensus(model.name or model.kind, fp, tuple(counts), radius, truncated)
    return Ball(model, gens, census, dist)


def enumerate_ball(model: GroupModel, radius: int, cap_elements: int = DEFAULT_CAP_ELEMENTS,
                   threads: int = 1, generators: Optional[Sequence[int]] = None,
                   cap_memory_mb: Optional[float] = None) -> BallCensus:
    return enumerate_ball_elements(model, radius, cap_elements, threads, generators, cap_memory_mb).census


def element_length(model: GroupModel, g, radius: int, cap_elements: int = DEFAULT_CAP_ELEMENTS,
                   generators: Optional[Sequence[int]] = None) -> Optional[int]:
    """Word length of ``g`` if it is at most ``radius``, otherwise ``None``."""
    gens = tuple(range(len(model.gens))) if generators is None else tuple(generators)
    e = model.identity()
    if g == e:
        return 0
    seen = {e}
    frontier = [e]
    for r in range(1, radius + 1):
        new = []
        for x in frontier:
            for i in gens:
                y = model.right_mul_gen(x, i)
                if y not in seen:
                    if y == g:
                        return r
                    seen.add(y)
                    new.append(y)
        if len(seen) > cap_elements or not new:
            return None
        frontier = new
    return None


# ---------------------------------------------------------------------------
# fits


def _least_squares(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float, list[float]]:
    n = len(xs)
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    slope = sxy / sxx
    icpt = my - slope * mx
    return slope, icpt, [y - (icpt + slope * x) for x, y in zip(xs, ys)]


def _rms(res: Sequence[float]) -> float:
    return math.sqrt(math.fsum(r * r for r in res) / len(res))


@dataclass(frozen=True)
class PolynomialBoundFit:
    """``f(R) ≈ C · R^degree`` fitted on log-log axes over ``window``."""

    degree: float
    leading_coefficient: float
    max_residual: float
    window: tuple[int, int]
    points: int

    def to_dict(self) -> dict:
        return {"degree": fmt(self.degree), "leading_coefficient": fmt(self.leading_coefficient),
                "max_residual": fmt(self.max_residual), "window": list(self.window), "points": self.points}


@dataclass(frozen=True)
class ExponentialFit:
    """``f(R) ≈ C · exp(rate · R)`` fitted on semi-log axes."""

    rate: float
    coefficient: float
    max_residual: float
    window: tuple[int, int]
    points: int

    def to_dict(self) -> dict:
        return {"rate": fmt(self.rate), "coefficient": fmt(self.coefficient),
                "max_residual": fmt(self.max_residual), "window": list(self.window), "points": self.points}


def _window_points(series, window) -> tuple[list[int], list[float]]:
    if isinstance(series, Mapping):
        items = sorted(series.items())
    else:
        items = list(enumerate(series))
    lo, hi = window
    pts = [(r, v) for r, v in items if lo <= r <= hi and v is not None]
    if len(pts) < 3:
        raise ParameterError(f"window {list(window)} holds {len(pts)} points; at least 3 are needed")
    for r, v in pts:
        if v <= 0:
            raise ParameterError(f"series must be positive on the window (value {v} at R={r})")
    return [r for r, _ in pts], [float(v) for _, v in pts]


def fit_polynomial_degree(series, window: tuple[int, int]) -> PolynomialBoundFit:
    """Least-squares slope of ``ln f(R)`` against ``ln R`` over ``window``.

    ``series`` is a sequence indexed by ``R`` or a mapping ``R -> f(R)``.
    """
    lo, hi = window
    if lo < 1 or hi < lo:
        raise ParameterError(f"degenerate window {list(window)}; need 1 <= lo <= hi")
    rs, vs = _window_points(series, window)
    slope, icpt, res = _least_squares([math.log(r) for r in rs], [math.log(v) for v in vs])
    return PolynomialBoundFit(slope, math.exp(icpt), max(abs(x) for x in res), (lo, hi), len(rs))


def fit_exponential_rate(series, window: tuple[int, int]) -> ExponentialFit:
    """Least-squares slope of ``ln f(R)`` against ``R`` over ``window``."""
    lo, hi = window
    if lo < 0 or hi < lo:
        raise ParameterError(f"degenerate window {list(window)}")
    rs, vs = _window_points(series, window)
    slope, icpt, res = _least_squares([float(r) for r in rs], [math.log(v) for v in vs])
    return ExponentialFit(slope, math.exp(icpt), max(abs(x) for x in res), (lo, hi), len(rs))


# ---------------------------------------------------------------------------
# entropy


@dataclass(frozen=True)
class EntropyReport:
    certified_upper: float
    certified_at: int
    regression_slope: float
    classification: str
    window: tuple[int, int]
    semilog_residual: float
    loglog_residual: float
    residual_ratio: float
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "certified_upper": fmt(self.certified_upper),
            "certified_at": self.certified_at,
            "regression_slope": fmt(self.regression_slope),
            "classification": self.classification,
            "window": list(self.window),
            "semilog_residual": fmt(self.semilog_residual),
            "loglog_residual": fmt(self.loglog_residual),
            "residual_ratio": fmt(self.residual_ratio),
            "warnings": list(self.warnings),
        }


def certified_entropy_upper(counts: Sequence[int]) -> tuple[float, int]:
    """``min_{r >= 1} ln c(r) / r`` and the radius attaining it.

    By submultiplicativity of ball sizes this bounds the growth rate from
    above.
    """
    if len(counts) < 2:
        raise ParameterError("need at least one positive radius")
    best = None
    for r in range(1, len(counts)):
        v = math.log(counts[r]) / r
        if best is None or v < best[0]:
            best = (v, r)
    return best


def classify_growth(counts: Sequence[int], window: tuple[int, int],
                    ratio: float = DEFAULT_RESIDUAL_RATIO) -> tuple[str, float, float]:
    """Compare the RMS residuals of straight-line fits on semi-log and log-log axes."""
    lo, hi = window
    ys = [math.log(counts[r]) for r in range(lo, hi + 1)]
    if max(ys) - min(ys) == 0:
        return "polynomial-consistent", 0.0, 0.0
    _, _, res_semi = _least_squares([float(r) for r in range(lo, hi + 1)], ys)
    _, _, res_log = _least_squares([math.log(r) for r in range(lo, hi + 1)], ys)
    semi, loglog = _rms(res_semi), _rms(res_log)
    if loglog * ratio < semi:
        verdict = "polynomial-consistent"
    elif semi * ratio < loglog:
        verdict = "exponential-consistent"
    else:
        verdict = "inconclusive"
    return verdict, semi, loglog


def entropy_report(census: BallCensus, ratio: float = DEFAULT_RESIDUAL_RATIO) -> EntropyReport:
    warnings = []
    if census.truncated:
        warnings.append(f"census truncated; report uses radii 0..{census.radius}")
    R = census.radius
    if R < 4:
        raise ParameterError(f"entropy report needs at least 4 complete radii, census has {R}")
    c = census.counts
    upper, at = certified_entropy_upper(c)
    window = (math.ceil(R / 2), R)
    if window[1] - window[0] + 1 < 3:
        window = (max(1, R - 2), R)
    slope, _, _ = _least_squares([float(r) for r in range(window[0], R + 1)],
                                 [math.log(c[r]) for r in range(window[0], R + 1)])
    verdict, semi, loglog = classify_growth(c, window, ratio)
    return EntropyReport(upper, at, slope, verdict, window, semi, loglog, ratio, tuple(warnings))


# ---------------------------------------------------------------------------
# closure and sandwich


@dataclass(frozen=True)
class ClosureResult:
    finite: bool
    order: Optional[int]
    explored: int
    cap: int

    def to_dict(self) -> dict:
        return {"finite": self.finite, "order": self.order, "explored": self.explored, "cap": self.cap}


def enumerate_closure(model: GroupModel, cap: int = DEFAULT_CAP_ELEMENTS,
                      generators: Optional[Sequence[int]] = None) -> ClosureResult:
    """Grow the generated subgroup until it stops changing or exceeds ``cap`` elements."""
    if cap < 1:
        raise ParameterError("cap must be at least 1")
    gens = tuple(range(len(model.gens))) if generators is None else tuple(generators)
    e = model.identity()
    seen = {e}
    frontier = [e]
    while frontier:
        new = []
        for g in frontier:
            for i in gens:
                h = model.right_mul_gen(g, i)
                if h not in seen:
                    seen.add(h)
                    new.append(h)
                    if len(seen) > cap:
                        return ClosureResult(False, None, len(seen), cap)
        frontier = new
    return ClosureResult(True, len(seen), len(seen), cap)


@dataclass(frozen=True)
class SandwichReport:
    kernel_order: int
    quotient_counts: tuple[int, ...]
    group_counts: tuple[int, ...]
    violations: tuple[int, ...]

    @property
    def holds(self) -> bool:
        return not self.violations

    def rows(self) -> list[tuple[int, int, int, int]]:
        F = self.kernel_order
        return [(r, q, g, F * q) for r, (q, g) in enumerate(zip(self.quotient_counts, self.group_counts))]

    def to_dict(self) -> dict:
        return {"kernel_order": self.kernel_order, "holds": self.holds,
                "violations": list(self.violations),
                "rows": [{"radius": r, "quotient": q, "group": g, "upper": u} for r, q, g, u in self.rows()]}


def kernel_order(model: GroupModel, cap: int = 10**6) -> int:
    """Order of the kernel of the model's quotient map, which must be finite."""
    N = getattr(model, "N", None)
    if N is not None:
        res = enumerate_closure(N, cap)
    elif hasattr(model, "p"):
        return model.p
    else:
        raise ParameterError(f"{model.kind} model exposes no kernel")
    if not res.finite:
        raise ParameterError("kernel is infinite (closure exceeded its cap)")
    return res.order


def quotient_sandwich_check(model: GroupModel, radius: int,
                            cap_elements: int = DEFAULT_CAP_ELEMENTS) -> SandwichReport:
    """Check ``|Λ(R)| <= |Γ(R)| <= |F| · |Λ(R)|`` for a finite kernel ``F`` and each ``R``."""
    if not hasattr(model, "quotient_data"):
        raise ParameterError(f"{model.kind} model has no quotient map")
    Lam, images = model.quotient_data()
    qgens = sorted({i for i in images if i is not None})
    F = kernel_order(model)
    qc = enumerate_ball(Lam, radius, cap_elements, generators=qgens)
    gc = enumerate_ball(model, radius, cap_elements)
    R = min(qc.radius, gc.radius)
    q, g = qc.counts[:R + 1], gc.counts[:R + 1]
    bad = tuple(r for r in range(R + 1) if not q[r] <= g[r] <= F * q[r])
    return SandwichReport(F, q, g, bad)


# ---------------------------------------------------------------------------
# distortion


@dataclass
class Subgroup:
    """A subgroup given by a membership test and its own generating elements.

    ``generators`` are model elements; their inverses are added
    automatically when lengths are measured inside the subgroup.
    """

    label: str
    contains: Callable[[Hashable], bool]
    generators: list = field(default_factory=list)


def kernel_subgroup(model: GroupModel) -> Subgroup:
    """``N`` inside ``N ⋊ Λ`` (or ``Z_p`` inside ``Z_p ⋊ Z``) with its generators from ``S``."""
    if hasattr(model, "n_letters_N"):
        gens = [model.generator(i) for i in range(model.n_letters_N)]
        return Subgroup("N", model.in_kernel, gens)
    if hasattr(model, "p"):
        return Subgroup("Z_p", model.in_kernel, [model.generator(0), model.generator(1)])
    raise ParameterError(f"{model.kind} model has no kernel subgroup")


def tail_subgroup(pres, label: str) -> Subgroup:
    """The subgroup generated by basis elements from ``label`` onward (normal in a polycyclic presentation)."""
    k = pres.basis_labels.index(label) if label in pres.basis_labels else None
    if k is None:
        raise ParameterError(f"{label!r} is not a basis label")
    gens = [pres.mul_syllable(pres.identity(), j, 1) for j in range(k, pres.n)]
    return Subgroup(f"<{','.join(pres.basis_labels[k:])}>",
                    lambda v, k=k: not any(v[:k]), gens)


@dataclass(frozen=True)
class DistortionProfile:
    subgroup: str
    values: tuple[int, ...]        # Δ(R) for R = 0..radius
    witnesses: tuple[bytes, ...]   # canonical key of a maximiser per R
    members: tuple[int, ...]       # subgroup elements of ambient length <= R
    truncated_from: Optional[int] = None

    @property
    def radius(self) -> int:
        return len(self.values) - 1

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["radius", "distortion", "members", "witness", "truncated"])
        for r, (d, m, wk) in enumerate(zip(self.values, self.members, self.witnesses)):
            t = self.truncated_from is not None and r >= self.truncated_from
            w.writerow([r, d, m, wk.decode(), "true" if t else "false"])
        return buf.getvalue()


def distortion_profile(model: GroupModel, subgroup: Subgroup, radius: int,
                       cap_elements: int = DEFAULT_CAP_ELEMENTS,
                       generators: Optional[Sequence[int]] = None,
                       subgroup_cap: int = 5_000_000, threads: int = 1) -> DistortionProfile:
    """``Δ(R) = max{|g|_N : g ∈ N, |g|_S <= R}`` for ``R = 0..radius``.

    Ambient lengths come from a breadth-first ball; intrinsic lengths from
    a second breadth-first search inside the subgroup, run until every
    member of the ball has been reached or ``subgroup_cap`` elements are
    stored.
    """
    ball = enumerate_ball_elements(model, radius, cap_elements, threads, generators)
    members = [(g, d) for g, d in ball.distance.items() if subgroup.contains(g)]
    pending = {g for g, _ in members}
    sub_len: dict = {}
    e = model.identity()
    hgens = []
    for h in subgroup.generators:
        for x in (h, model.inverse(h)):
            if x not in hgens and x != e:
                hgens.append(x)
    if e in pending:
        sub_len[e] = 0
        pending.discard(e)
    seen = {e}
    frontier = [e]
    n = 0
    while pending and frontier and len(seen) <= subgroup_cap:
        n += 1
        new = []
        for x in frontier:
            for h in hgens:
                y = model.multiply(x, h)
                if y not in seen:
                    seen.add(y)
                    new.append(y)
                    if y in pending:
                        sub_len[y] = n
                        pending.discard(y)
        frontier = new
    R = ball.census.radius
    best: list[Optional[tuple[int, bytes]]] = [None] * (R + 1)
    counts = [0] * (R + 1)
    unresolved = [False] * (R + 1)
    for g, d in members:
        counts[d] += 1
        if g in pending:
            unresolved[d] = True
            continue
        cand = (sub_len[g], model.key(g))
        cur = best[d]
        if cur is None or cand[0] > cur[0] or (cand[0] == cur[0] and cand[1] < cur[1]):
            best[d] = cand
    values, wits, cum = [], [], []
    run: Optional[tuple[int, bytes]] = None
    total = 0
    for r in range(R + 1):
        b = best[r]
        if b is not None and (run is None or b[0] > run[0] or (b[0] == run[0] and b[1] < run[1])):
            run = b
        total += counts[r]
        values.append(run[0] if run else 0)
        wits.append(run[1] if run else b"")
        cum.append(total)
    trunc = next((r for r in range(R + 1) if unresolved[r]), None)
    if ball.census.truncated and trunc is None:
        trunc = R + 1
    return DistortionProfile(subgroup.label, tuple(values), tuple(wits), tuple(cum), trunc)


# ---------------------------------------------------------------------------
# plain-text exports


def plot_data(xs: Iterable, ys: Iterable) -> str:
    """Two whitespace-separated columns, one point per line."""
    out = []
    for x, y in zip(xs, ys):
        out.append(f"{x} {fmt(y) if isinstance(y, float) else y}")
    return "\n".join(out) + "\n"
