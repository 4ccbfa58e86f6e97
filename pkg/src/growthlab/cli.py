"""``growthlab`` command line: one analytic task per subcommand, reports written to ``-o DIR``.

Exit codes: 0 success, 1 mathematical or validation failure (including an
unwritable output directory), 2 usage error, 3 resource cap hit with
partial output written.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path
from typing import Optional

from . import __version__
from .errors import GrowthLabError, ParameterError, ResourceError, SpecFileError
from .growth import (
    DEFAULT_CAP_ELEMENTS,
    distortion_profile,
    enumerate_ball,
    enumerate_closure,
    entropy_report,
    fit_exponential_rate,
    fit_polynomial_degree,
    kernel_subgroup,
    plot_data,
    quotient_sandwich_check,
    tail_subgroup,
)
from .models import PolycyclicPresentation, load_group_spec
from .rewriting import measure_prefix_growth, traces_csv
from .spectra import virtual_nilpotency_screen

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _non_negative(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {v}")
    return v


def _positive(text: str) -> int:
    v = _non_negative(text)
    if v == 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _range(text: str) -> tuple[int, int]:
    try:
        a, b = (int(x) for x in text.split(".."))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a range like 5..40, got {text!r}") from None
    if a < 1 or b < a:
        raise argparse.ArgumentTypeError(f"range {text} must satisfy 1 <= a <= b")
    return a, b


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="growthlab", description="Word growth experiments on finitely generated groups.")
    p.add_argument("--version", action="version", version=f"growthlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("spec", help="group spec file (.group)")
    common.add_argument("-o", "--output", default=".", metavar="DIR", help="report directory (default: .)")
    common.add_argument("--force", action="store_true", help="overwrite existing report files")
    common.add_argument("--seed", type=int, default=0, help="random seed recorded in every report (default: 0)")
    common.add_argument("--threads", type=_positive, default=os.cpu_count() or 1, metavar="N",
                        help="worker threads for ball enumeration (default: available CPUs)")
    common.add_argument("--cap-elements", type=_positive, default=DEFAULT_CAP_ELEMENTS, metavar="n",
                        help=f"maximum stored elements (default: {DEFAULT_CAP_ELEMENTS})")
    common.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="format for tabular reports (default: csv)")

    def radius_opt(sp, required=True):
        sp.add_argument("--radius", type=_non_negative, required=required, metavar="R")

    def gens_opt(sp):
        sp.add_argument("--generators", metavar="LABELS",
                        help="comma-separated labels to use instead of the full generating set")

    sp = sub.add_parser("ball", parents=[common], help="ball census c(R) up to a radius")
    radius_opt(sp)
    gens_opt(sp)
    sp = sub.add_parser("entropy", parents=[common], help="certified entropy upper bound and growth class")
    radius_opt(sp)
    gens_opt(sp)
    sp.add_argument("--ratio", type=float, default=3.0, help="residual ratio for classification (default: 3)")
    sp = sub.add_parser("fit", parents=[common], help="log-log degree fit of the ball census")
    radius_opt(sp)
    gens_opt(sp)
    sp.add_argument("--window", type=_range, metavar="a..b", help="fit window (default: ceil(R/2)..R)")
    sp = sub.add_parser("distortion", parents=[common], help="distortion of the kernel or a tail subgroup")
    radius_opt(sp)
    gens_opt(sp)
    sp.add_argument("--tail", metavar="LABEL", help="polycyclic models: subgroup generated from this basis label on")
    sp.add_argument("--window", type=_range, metavar="a..b", help="fit window (default: ceil(R/2)..R)")
    sp = sub.add_parser("closure", parents=[common], help="order of the group, if finite within the cap")
    gens_opt(sp)
    sub.add_parser("screen", parents=[common], help="unit-circle screen of the conjugation action")
    sp = sub.add_parser("rewrite", parents=[common], help="growth of the N prefix under rewriting")
    sp.add_argument("--lengths", type=_range, default=(5, 40), metavar="a..b", help="word lengths (default: 5..40)")
    sp.add_argument("--samples", type=_positive, default=100, metavar="k", help="words per length (default: 100)")
    sp.add_argument("--search", choices=("uniform", "climb"), default="uniform",
                    help="uniform random words, or hill climbing from them (default: uniform)")
    sp.add_argument("--tail", metavar="LABEL", help="polycyclic models: first basis label of N")
    sp = sub.add_parser("sandwich", parents=[common], help="ball sizes of the group against its quotient")
    radius_opt(sp)
    sub.add_parser("verify", parents=[common], help="check the graded series of the presentation")
    return p


# ---------------------------------------------------------------------------
# report bundle


class Bundle:
    """Collects report files and writes them, refusing to overwrite unless forced."""

    def __init__(self, outdir: Path, force: bool, spec_hash: str, seed: int):
        self.outdir = outdir
        self.force = force
        self.spec_hash = spec_hash
        self.seed = seed
        self.files: dict[str, str] = {}

    def add(self, name: str, text: str) -> None:
        self.files[name] = text

    def add_json(self, name: str, payload) -> None:
        if isinstance(payload, dict):
            payload = {**payload, "spec_sha256": self.spec_hash, "seed": self.seed}
        self.add(name, json.dumps(payload, indent=2, sort_keys=True) + "\n")

    def check_writable(self) -> None:
        names = list(self.files) + ["manifest.json"]
        if not self.force:
            clash = [n for n in names if (self.outdir / n).exists()]
            if clash:
                raise UsageError(f"refusing to overwrite {', '.join(clash)} in {self.outdir} (use --force)")

    def write(self, manifest: dict) -> None:
        self.check_writable()
        try:
            self.outdir.mkdir(parents=True, exist_ok=True)
            for name, text in self.files.items():
                (self.outdir / name).write_text(text, encoding="utf-8")
            manifest = {**manifest, "files": sorted(self.files)}
            (self.outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                                        encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write reports to {self.outdir}: {exc.strerror or exc}") from None


def _table(bundle: Bundle, fmt_: str, stem: str, csv_text: str) -> None:
    if fmt_ == "csv":
        bundle.add(stem + ".csv", csv_text)
        return
    import csv
    import io
    rows = []
    for row in csv.DictReader(io.StringIO(csv_text)):
        rows.append({k: _jsonish(v) for k, v in row.items()})
    bundle.add_json(stem + ".json", {"rows": rows})


def _jsonish(v: str):
    if v in ("true", "false"):
        return v == "true"
    try:
        return int(v)
    except ValueError:
        return v


def _generators(model, text: Optional[str]):
    if not text:
        return None
    return [model.gens.index(lab.strip()) for lab in text.split(",") if lab.strip()]


def _default_window(R: int) -> tuple[int, int]:
    return (max(1, math.ceil(R / 2)), R)


# ---------------------------------------------------------------------------
# subcommands; each returns (exit code, one-line summary)


def cmd_ball(model, args, bundle):
    census = enumerate_ball(model, args.radius, args.cap_elements, args.threads, _generators(model, args.generators))
    _table(bundle, args.format, "census", census.to_csv())
    bundle.add("census.dat", plot_data(range(census.radius + 1), census.counts))
    code = EXIT_CAP if census.truncated else EXIT_OK
    return code, f"c({census.radius}) = {census.counts[-1]}" + (" (truncated)" if census.truncated else "")


def cmd_entropy(model, args, bundle):
    census = enumerate_ball(model, args.radius, args.cap_elements, args.threads, _generators(model, args.generators))
    _table(bundle, args.format, "census", census.to_csv())
    rep = entropy_report(census, args.ratio)
    bundle.add_json("entropy.json", rep.to_dict())
    bundle.add("entropy.dat", plot_data(range(1, census.radius + 1),
                                        [math.log(c) / r for r, c in enumerate(census.counts) if r]))
    code = EXIT_CAP if census.truncated else EXIT_OK
    return code, f"certified_upper = {rep.certified_upper:.12g}, {rep.classification}"


def cmd_fit(model, args, bundle):
    census = enumerate_ball(model, args.radius, args.cap_elements, args.threads, _generators(model, args.generators))
    _table(bundle, args.format, "census", census.to_csv())
    window = args.window or _default_window(census.radius)
    fit = fit_polynomial_degree(census.counts, window)
    bundle.add_json("fit.json", {"series": "ball census", **fit.to_dict()})
    code = EXIT_CAP if census.truncated else EXIT_OK
    return code, f"degree = {fit.degree:.12g} over {list(window)}"


def cmd_distortion(model, args, bundle):
    if args.tail:
        if not isinstance(model, PolycyclicPresentation):
            raise ParameterError("--tail applies to polycyclic models only")
        sub = tail_subgroup(model, args.tail)
    else:
        sub = kernel_subgroup(model)
    prof = distortion_profile(model, sub, args.radius, args.cap_elements,
                              _generators(model, args.generators), threads=args.threads)
    _table(bundle, args.format, "distortion", prof.to_csv())
    bundle.add("distortion.dat", plot_data(range(prof.radius + 1), prof.values))
    window = args.window or _default_window(prof.radius)
    payload = {"subgroup": prof.subgroup, "window": list(window), "truncated_from": prof.truncated_from}
    try:
        payload["loglog"] = fit_polynomial_degree(prof.values, window).to_dict()
        payload["semilog"] = fit_exponential_rate(prof.values, window).to_dict()
    except ParameterError as exc:
        payload["fit_error"] = str(exc)
    bundle.add_json("fit.json", payload)
    code = EXIT_CAP if prof.truncated_from is not None else EXIT_OK
    return code, f"Δ({prof.radius}) = {prof.values[-1]}"


def cmd_closure(model, args, bundle):
    res = enumerate_closure(model, args.cap_elements, _generators(model, args.generators))
    bundle.add_json("closure.json", res.to_dict())
    return EXIT_OK, f"order {res.order}" if res.finite else f"cap of {res.cap} elements exceeded"


def cmd_screen(model, args, bundle):
    rep = virtual_nilpotency_screen(model)
    bundle.add("screen.json", json.dumps(rep.to_list(), indent=2, sort_keys=True) + "\n")
    bundle.add_json("screen_summary.json", rep.to_dict())
    worst = max((e.osin_bound for e in rep.entries), default=0.0)
    return EXIT_OK, f"screen {rep.status}; largest osin_bound = {worst:.12g}"


def cmd_rewrite(model, args, bundle):
    a, b = args.lengths
    rep = measure_prefix_growth(model, range(a, b + 1), args.samples, args.seed, tail=args.tail, search=args.search)
    _table(bundle, args.format, "rewrite_trace", traces_csv(rep.traces))
    bundle.add_json("fit.json", rep.to_dict())
    bundle.add("rewrite.dat", plot_data(rep.lengths, rep.s_max))
    deg = f"{rep.fit.degree:.12g}" if rep.fit else "n/a"
    return EXIT_OK, f"{rep.mode}: log-log degree of s_max = {deg}"


def cmd_sandwich(model, args, bundle):
    rep = quotient_sandwich_check(model, args.radius, args.cap_elements)
    lines = ["radius,quotient,group,upper"] + [f"{r},{q},{g},{u}" for r, q, g, u in rep.rows()]
    _table(bundle, args.format, "sandwich", "\n".join(lines) + "\n")
    bundle.add_json("sandwich.json", rep.to_dict())
    return (EXIT_OK if rep.holds else EXIT_FAIL), ("sandwich holds" if rep.holds else
                                                   f"sandwich violated at R = {list(rep.violations)}")


def cmd_verify(model, args, bundle):
    rep = model.report
    bundle.add_json("verify.json", rep.to_dict())
    return (EXIT_OK if rep.ok else EXIT_FAIL), ("graded series verified" if rep.ok else
                                                f"{len(rep.violations)} violation(s): {rep.violations[0]}")


COMMANDS = {
    "ball": cmd_ball, "entropy": cmd_entropy, "fit": cmd_fit, "distortion": cmd_distortion,
    "closure": cmd_closure, "screen": cmd_screen, "rewrite": cmd_rewrite, "sandwich": cmd_sandwich,
    "verify": cmd_verify,
}


def _config(args) -> dict:
    skip = {"spec", "output", "force", "threads"}
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        out[k] = list(v) if isinstance(v, tuple) else v
    return out


FIXTURES = Path(__file__).resolve().parent / "fixtures"


def resolve_spec(path: str) -> Path:
    """``path`` itself if it exists, else the bundled fixture of that name."""
    p = Path(path)
    if not p.exists() and p.parent == Path("."):
        bundled = FIXTURES / p.name
        if bundled.exists():
            return bundled
    return p


def run(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    start = time.perf_counter()
    spec_path = resolve_spec(args.spec)
    try:
        data = spec_path.read_bytes()
    except OSError as exc:
        print(f"growthlab: cannot read {args.spec}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_FAIL
    spec_hash = hashlib.sha256(data).hexdigest()
    bundle = Bundle(Path(args.output), args.force, spec_hash, args.seed)
    try:
        model = load_group_spec(spec_path)
        code, summary = COMMANDS[args.command](model, args, bundle)
        bundle.check_writable()
    except UsageError as exc:
        print(f"growthlab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SpecFileError as exc:
        print(f"growthlab: {args.spec}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ResourceError as exc:
        print(f"growthlab: resource limit: {exc}", file=sys.stderr)
        return EXIT_CAP
    except GrowthLabError as exc:
        print(f"growthlab: {exc}", file=sys.stderr)
        return EXIT_FAIL
    manifest = {
        "tool": "growthlab",
        "version": __version__,
        "command": args.command,
        "config": _config(args),
        "spec_file": os.path.basename(args.spec),
        "spec_sha256": spec_hash,
        "seed": args.seed,
        "exit_code": code,
        "wall_time_seconds": round(time.perf_counter() - start, 3),
    }
    try:
        bundle.write(manifest)
    except UsageError as exc:
        print(f"growthlab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"growthlab: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(f"{args.command}: {summary}")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
