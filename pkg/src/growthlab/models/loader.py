"""Reading ``.group`` spec files (UTF-8 JSON)."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from ..errors import GrowthLabError, InconsistencyError, SchemaError, SpecParseError
from ..words import SymmetricGeneratingSet, parse_word
from .base import GroupModel
from .extension import ModPExtensionModel, SplitExtensionModel
from .matrix import MatrixGroupModel
from .polycyclic import PolycyclicPresentation, syllables_from_word
from .verify import VerificationReport, verify_graded_series

COMMON = {"model", "name", "description"}
FIELDS = {
    "matrix": COMMON | {"generators", "matrices"},
    "polycyclic": COMMON | {"generators", "strata", "moduli", "conjugation"},
    "split_extension": COMMON | {"N", "Lambda", "action"},
    "mod_p_extension": COMMON | {"generators", "p"},
}


def _require(obj: dict, name: str, where: str):
    if name not in obj:
        raise SchemaError("required field is missing", field=f"{where}{name}")
    return obj[name]


def _pairs(spec: dict, where: str) -> list[tuple[str, str]]:
    gens = _require(spec, "generators", where)
    if not isinstance(gens, list):
        raise SchemaError("must be a list", field=f"{where}generators")
    out = []
    for k, g in enumerate(gens):
        f = f"{where}generators[{k}]"
        if not isinstance(g, dict):
            raise SchemaError("must be an object", field=f)
        extra = set(g) - {"label", "inverse_label"}
        if extra:
            raise SchemaError(f"unknown fields {sorted(extra)}", field=f)
        lab, inv = _require(g, "label", f + "."), _require(g, "inverse_label", f + ".")
        if not isinstance(lab, str) or not isinstance(inv, str) or not lab or not inv:
            raise SchemaError("labels must be non-empty strings", field=f)
        if any(c.isspace() or c == "^" for c in lab + inv):
            raise SchemaError("labels may not contain whitespace or '^'", field=f)
        out.append((lab, inv))
    return out


def _build_matrix(spec: dict, where: str) -> MatrixGroupModel:
    pairs = _pairs(spec, where)
    gens = SymmetricGeneratingSet.from_pairs(pairs)
    mats = _require(spec, "matrices", where)
    if not isinstance(mats, dict):
        raise SchemaError("must map labels to matrices", field=f"{where}matrices")
    extra = set(mats) - set(gens.labels)
    if extra:
        raise SchemaError(f"matrices given for unknown labels {sorted(extra)}", field=f"{where}matrices")
    rows = []
    for lab in gens.labels:
        if lab not in mats:
            raise SchemaError(f"no matrix for generator {lab!r}", field=f"{where}matrices")
        rows.append(mats[lab])
    try:
        return MatrixGroupModel(gens, rows, name=spec.get("name", ""))
    except (ValueError, ZeroDivisionError) as exc:
        raise SchemaError(str(exc), field=f"{where}matrices") from None


def _conj_key(gens: SymmetricGeneratingSet, pres_letters, key: str, field: str):
    toks = key.split()
    if len(toks) != 2:
        raise SchemaError(f"key {key!r} must look like 'a b' or 'a^-1 b'", field=field)
    w = parse_word(gens, toks[0])
    if len(w) != 1:
        raise SchemaError(f"key {key!r} must conjugate by a single letter", field=field)
    i, s = pres_letters[w.letters[0]]
    wj = parse_word(gens, toks[1])
    if len(wj) != 1 or pres_letters[wj.letters[0]][1] != 1:
        raise SchemaError(f"key {key!r} must conjugate a basis element", field=field)
    return i, s, pres_letters[wj.letters[0]][0]


def _build_polycyclic(spec: dict, where: str) -> PolycyclicPresentation:
    pairs = _pairs(spec, where)
    n = len(pairs)
    gens = SymmetricGeneratingSet.from_pairs(pairs)
    letters = []
    for k, (lab, inv) in enumerate(pairs):
        letters.append((k, 1))
        if lab != inv:
            letters.append((k, -1))
    moduli = spec.get("moduli")
    if moduli is not None:
        if not isinstance(moduli, list) or len(moduli) != n or \
                not all(m is None or (isinstance(m, int) and not isinstance(m, bool)) for m in moduli):
            raise SchemaError("must be a list with one integer or null per generator", field=f"{where}moduli")
    strata = spec.get("strata")
    if strata is not None:
        if not isinstance(strata, list) or not all(
                isinstance(r, list) and len(r) == 2 and all(isinstance(x, int) for x in r) for r in strata):
            raise SchemaError("must be a list of [start, end) index ranges", field=f"{where}strata")
    conj_spec = spec.get("conjugation", {})
    if not isinstance(conj_spec, dict):
        raise SchemaError("must map 'a b' keys to words", field=f"{where}conjugation")
    # parse into syllables with a throwaway presentation for the letter map
    table = {}
    for key, val in conj_spec.items():
        f = f"{where}conjugation[{key!r}]"
        if not isinstance(val, str):
            raise SchemaError("value must be a word string", field=f)
        try:
            i, s, j = _conj_key(gens, letters, key, f)
            w = parse_word(gens, val)
        except GrowthLabError as exc:
            if isinstance(exc, SchemaError):
                raise
            raise SchemaError(str(exc), field=f) from None
        if i >= j:
            raise SchemaError("only conjugates of later basis elements by earlier ones are allowed", field=f)
        syl = []
        for li in w.letters:
            k, e = letters[li]
            if syl and syl[-1][0] == k:
                syl[-1][1] += e
            else:
                syl.append([k, e])
        table[(i, s, j)] = tuple((k, e) for k, e in syl if e)
    try:
        pres = PolycyclicPresentation(pairs, table, strata=strata, moduli=moduli, name=spec.get("name", ""))
    except GrowthLabError as exc:
        raise InconsistencyError(f"{where or 'polycyclic'}: {exc}") from None
    missing = pres.missing_entries()
    if missing:
        i, s, j = missing[0]
        lab = pres.basis_labels
        raise SchemaError(f"missing entry '{lab[i]}{'^-1' if s < 0 else ''} {lab[j]}' "
                          f"({len(missing)} missing in total)", field=f"{where}conjugation")
    return pres


def _build_split(spec: dict, where: str) -> SplitExtensionModel:
    N = _build_model(_require(spec, "N", where), f"{where}N.", allowed={"polycyclic"})
    Lam = _build_model(_require(spec, "Lambda", where), f"{where}Lambda.", allowed={"polycyclic", "matrix"})
    act_spec = _require(spec, "action", where)
    if not isinstance(act_spec, dict):
        raise SchemaError("must map 'gamma alpha' keys to words over N", field=f"{where}action")
    action = {}
    for key, val in act_spec.items():
        f = f"{where}action[{key!r}]"
        toks = key.split()
        if len(toks) != 2 or not isinstance(val, str):
            raise SchemaError("entries look like \"t a\": \"a^2 b\"", field=f)
        try:
            gw = parse_word(Lam.gens, toks[0])
            aw = parse_word(N.gens, toks[1])
            img = parse_word(N.gens, val)
        except GrowthLabError as exc:
            raise SchemaError(str(exc), field=f) from None
        if len(gw) != 1 or len(aw) != 1 or N.letter_syllable(aw.letters[0])[1] != 1:
            raise SchemaError("key must be one Lambda letter and one N basis element", field=f)
        k = N.letter_syllable(aw.letters[0])[0]
        action[(gw.letters[0], k)] = N.normal_form_of_syllables(syllables_from_word(N, img))
    for g in range(len(Lam.gens)):
        for k in range(N.n):
            if (g, k) not in action:
                raise SchemaError(f"missing image of {N.basis_labels[k]} under {Lam.gens.labels[g]}",
                                  field=f"{where}action")
    try:
        return SplitExtensionModel(N, Lam, action, name=spec.get("name", ""))
    except GrowthLabError as exc:
        raise InconsistencyError(str(exc)) from None


def _build_modp(spec: dict, where: str) -> ModPExtensionModel:
    pairs = _pairs(spec, where)
    p = _require(spec, "p", where)
    if not isinstance(p, int) or isinstance(p, bool):
        raise SchemaError("must be an integer", field=f"{where}p")
    try:
        return ModPExtensionModel(p, pairs, name=spec.get("name", ""))
    except GrowthLabError as exc:
        raise InconsistencyError(str(exc)) from None


BUILDERS = {
    "matrix": _build_matrix,
    "polycyclic": _build_polycyclic,
    "split_extension": _build_split,
    "mod_p_extension": _build_modp,
}


def _build_model(spec: Any, where: str = "", allowed=None) -> GroupModel:
    if not isinstance(spec, dict):
        raise SchemaError("must be a JSON object", field=where.rstrip(".") or "<root>")
    kind = _require(spec, "model", where)
    if kind not in FIELDS or (allowed and kind not in allowed):
        ok = sorted(allowed or FIELDS)
        raise SchemaError(f"unknown or disallowed model {kind!r}; expected one of {ok}", field=f"{where}model")
    extra = set(spec) - FIELDS[kind]
    if extra:
        raise SchemaError(f"unknown fields {sorted(extra)}", field=where.rstrip(".") or "<root>")
    return BUILDERS[kind](spec, where)


def model_from_dict(spec: dict) -> tuple[GroupModel, VerificationReport]:
    model = _build_model(spec)
    report = verify_graded_series(model)
    return model, report


def load_group_spec(path) -> GroupModel:
    """Load and validate a ``.group`` file; the verification report is attached as ``model.report``."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecParseError(exc.msg, exc.lineno, exc.colno) from None
    model, report = model_from_dict(spec)
    model.report = report
    model.source_path = str(path)
    return model
