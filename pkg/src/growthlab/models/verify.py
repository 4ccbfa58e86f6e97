"""Checks that a presentation's grading is a descending series with ``[N, N_h] ⊆ N_{h+1}``."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import GrowthLabError
from .base import GroupModel
from .extension import ModPExtensionModel, SplitExtensionModel
from .polycyclic import PolycyclicPresentation


@dataclass
class VerificationReport:
    subject: str
    checks: int = 0
    violations: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"subject": self.subject, "ok": self.ok, "checks": self.checks,
                "violations": list(self.violations), "notes": list(self.notes)}


def _first_nonzero(v) -> int:
    return next((k for k, e in enumerate(v) if e), len(v))


def _verify_polycyclic(pres: PolycyclicPresentation, rep: VerificationReport, prefix: str = "") -> None:
    lab = pres.basis_labels
    missing = pres.missing_entries()
    for i, s, j in missing:
        rep.violations.append(f"{prefix}missing conjugation entry {lab[i]}^{s} {lab[j]}")
    if missing:
        return
    for j in range(pres.n):
        h = pres.stratum_of[j]
        deeper = pres.strata[h][1]  # first index of N_{h+1}
        aj_inv = pres.inverse(pres.mul_syllable(pres.identity(), j, 1))
        for i in range(j):
            for s in (1, -1):
                rep.checks += 1
                try:
                    conj = pres.conj_vector(i, s, j)
                    comm = pres.multiply(conj, aj_inv)
                except GrowthLabError as exc:
                    rep.violations.append(f"{prefix}[{lab[i]}^{s}, {lab[j]}]: {exc}")
                    continue
                if _first_nonzero(comm) < deeper:
                    rep.violations.append(
                        f"{prefix}commutator [{lab[i]}^{s}, {lab[j]}] = {pres.vector_word(comm)} "
                        f"does not lie in stratum {h + 2} (N_{h + 2})")
    # power relations α^m = e must be compatible with conjugation
    for j, m in enumerate(pres.moduli):
        if m is None:
            continue
        for k in range(j + 1, pres.n):
            rep.checks += 1
            ak = pres.mul_syllable(pres.identity(), k, 1)
            img = ak
            for _ in range(m):
                img = _conjugate_tail(pres, j, img)
            if img != ak:
                rep.violations.append(
                    f"{prefix}{lab[j]}^{m} = e is inconsistent: conjugation by it moves {lab[k]}")
    for k, m in enumerate(pres.moduli):
        if m is None:
            continue
        for i in range(k):
            for s in (1, -1):
                rep.checks += 1
                pw = pres.power(pres.conj_vector(i, s, k), m)
                if pw != pres.identity():
                    rep.violations.append(
                        f"{prefix}conjugate of {lab[k]} by {lab[i]}^{s} does not have order dividing {m}")


def _conjugate_tail(pres: PolycyclicPresentation, j: int, v):
    """``α_j v α_j⁻¹`` for ``v`` supported on indices > j, read off the table."""
    out = pres.identity()
    for k, e in enumerate(v):
        if e:
            out = pres.multiply(out, pres.power(pres.conj_vector(j, 1, k), e))
    return out


def _verify_extension(ext: SplitExtensionModel, rep: VerificationReport) -> None:
    N, Lam = ext.N, ext.Lam
    _verify_polycyclic(N, rep, prefix="N: ")
    if isinstance(Lam, PolycyclicPresentation):
        _verify_polycyclic(Lam, rep, prefix="Lambda: ")
    if rep.violations:
        return
    ident = ext.identity_aut
    for g in range(len(Lam.gens)):
        glab = Lam.gens.labels[g]
        f = ext.generator_automorphism(g)
        f_inv = ext.generator_automorphism(Lam.gens.involution[g])
        rep.checks += 1
        if ext.compose(f, f_inv) != ident or ext.compose(f_inv, f) != ident:
            rep.violations.append(
                f"action of {glab} and of {Lam.gens.labels[Lam.gens.involution[g]]} are not mutually inverse")
            continue
        for k in range(N.n):
            rep.checks += 1
            h = N.stratum_of[k]
            start, end = N.strata[h]
            img = f[k]
            if _first_nonzero(img) < start:
                rep.violations.append(
                    f"action of {glab} sends {N.basis_labels[k]} (stratum {h + 1}) outside N_{h + 1}: "
                    f"{N.vector_word(img)}")
        # f must respect the conjugation relations of N
        for i in range(N.n):
            for j in range(i + 1, N.n):
                for s in (1, -1):
                    rep.checks += 1
                    lhs = ext.apply(f, N.conj_vector(i, s, j))
                    fi = N.power(f[i], s)
                    rhs = N.multiply(N.multiply(fi, f[j]), N.inverse(fi))
                    if lhs != rhs:
                        rep.violations.append(
                            f"action of {glab} does not respect the relation for "
                            f"{N.basis_labels[i]}^{s} {N.basis_labels[j]}")
        for k, m in enumerate(N.moduli):
            if m is not None:
                rep.checks += 1
                if N.power(f[k], m) != N.identity():
                    rep.violations.append(
                        f"action of {glab} does not preserve the order of {N.basis_labels[k]}")
    if isinstance(Lam, PolycyclicPresentation):
        # φ must respect Λ's relations too
        for i in range(Lam.n):
            for j in range(i + 1, Lam.n):
                for s in (1, -1):
                    rep.checks += 1
                    ti = Lam.power(Lam.mul_syllable(Lam.identity(), i, 1), s)
                    tj = Lam.mul_syllable(Lam.identity(), j, 1)
                    lhs = ext.automorphism(Lam.multiply(Lam.multiply(ti, tj), Lam.inverse(ti)))
                    ai = ext.automorphism(ti)
                    rhs = ext.compose(ext.compose(ai, ext.automorphism(tj)), ext.automorphism_inverse(ti))
                    if lhs != rhs:
                        rep.violations.append(
                            f"action is not a homomorphism on the relation for "
                            f"{Lam.basis_labels[i]}^{s} {Lam.basis_labels[j]}")
        for k, m in enumerate(Lam.moduli):
            if m is not None:
                rep.checks += 1
                tk = Lam.mul_syllable(Lam.identity(), k, 1)
                a = ext.aut_power(ext.automorphism(tk), ext.automorphism_inverse(tk), m)
                if a != ident:
                    rep.violations.append(
                        f"action of {Lam.basis_labels[k]}^{m} is not trivial although {Lam.basis_labels[k]}^{m} = e")


def verify_graded_series(model: GroupModel) -> VerificationReport:
    """Check the grading on generators; violations are report content, not errors."""
    rep = VerificationReport(subject=f"{model.kind}:{model.name}")
    if isinstance(model, SplitExtensionModel):
        _verify_extension(model, rep)
    elif isinstance(model, PolycyclicPresentation):
        _verify_polycyclic(model, rep)
    elif isinstance(model, ModPExtensionModel):
        rep.notes.append("N = Z_p is a single finite abelian stratum; nothing to check")
    else:
        rep.notes.append("no graded series attached to this model")
    return rep
