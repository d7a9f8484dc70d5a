"""valleyspec command line: gamma-curve, transition, bounds, weyl, horn.

Exit codes: 0 success, 1 usage or hypothesis violation, 2 accuracy miss,
3 solver failure.  Each command writes its CSV tables and one JSON manifest
into --out.  A config file (--config) supplies defaults per command in
INI sections named after the subcommand; explicit flags win.
"""
from __future__ import annotations

import argparse
import configparser
import logging
import sys
from pathlib import Path

EXIT_OK, EXIT_USAGE, EXIT_ACCURACY, EXIT_SOLVER = 0, 1, 2, 3

log = logging.getLogger("valleyspec")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="valleyspec", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="INI file with per-command defaults")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gamma-curve", help="ground-state energy gamma_p over a p grid")
    g.add_argument("--p-min", type=float, default=1.0)
    g.add_argument("--p-max", type=float, default=10.0)
    g.add_argument("--points", type=int, default=30)
    g.add_argument("--scale", choices=("log", "linear"), default="log")
    g.add_argument("--target-err", type=float, default=1e-6)
    g.add_argument("--out", default=".")

    t = sub.add_parser("transition", help="truncated ground-state sweep and verdict")
    t.add_argument("--p", type=float, default=2.0)
    t.add_argument("--lambda", dest="lam", type=float, required=True)
    t.add_argument("--radii", type=float, nargs="+", required=True)
    t.add_argument("--h", type=float, default=0.02)
    t.add_argument("--out", default=".")

    b = sub.add_parser("bounds", help="partial sums against the lower bound")
    b.add_argument("--p", type=float, default=1.0)
    b.add_argument("--lambda", dest="lam", type=float, default=0.0)
    b.add_argument("--N-max", dest="N_max", type=int, default=50)
    b.add_argument("--C-p-prime", dest="C_p_prime", type=float, default=None,
                   help="defaults to the calibrated table value for p")
    b.add_argument("--R", type=float, default=None)
    b.add_argument("--h", type=float, default=None)
    b.add_argument("--out", default=".")

    w = sub.add_parser("weyl", help="sublevel measure and phase-space volume with brackets")
    w.add_argument("--p", type=float, default=1.0)
    w.add_argument("--lambda", dest="lam", type=float, nargs="+", default=[50.0, 200.0, 1000.0])
    w.add_argument("--out", default=".")

    hn = sub.add_parser("horn", help="Dirichlet spectrum of the horn region")
    hn.add_argument("--lambda", dest="lam", type=float, default=0.0)
    hn.add_argument("--R", type=float, default=8.0)
    hn.add_argument("--h", type=float, default=0.025)
    hn.add_argument("--k", type=int, default=150)
    hn.add_argument("--out", default=".")
    return ap


def _apply_config(ap: argparse.ArgumentParser, path: str) -> None:
    cfg = configparser.ConfigParser()
    if not cfg.read(path):
        raise UsageError(f"cannot read config file {path}")
    sub = next(a for a in ap._actions if isinstance(a, argparse._SubParsersAction))
    for name, parser in sub.choices.items():
        if not cfg.has_section(name):
            continue
        actions = {a.dest: a for a in parser._actions}
        actions.update({s.lstrip("-").replace("-", "_"): a for a in parser._actions for s in a.option_strings})
        values = {}
        for key, raw in cfg.items(name):
            act = actions.get(key)
            if act is None:
                raise UsageError(f"[{name}] unknown key {key!r}")
            conv = act.type or str
            try:
                if act.nargs == "+":
                    values[act.dest] = [conv(x) for x in raw.replace(",", " ").split()]
                else:
                    values[act.dest] = conv(raw)
            except ValueError:
                raise UsageError(f"[{name}] bad value for {key}: {raw!r}") from None
            act.required = False
        parser.set_defaults(**values)


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- commands -----------------------------------------------------------------------------

def cmd_gamma_curve(p_min, p_max, points, scale="log", out=".", target_err=1e-6) -> int:
    from .gamma import gamma_curve, p_grid, write_gamma_csv
    from .io import RunManifest
    if p_min < 1:
        raise UsageError(f"p_min must be >= 1, got {p_min}")
    if p_max < p_min or points < 1 or (points > 1 and p_max == p_min):
        raise UsageError("need p_max > p_min (or points = 1)")
    ps = p_grid(p_min, p_max, points, scale)
    curve = gamma_curve(ps, target_err)
    out = _out_dir(out)
    csv_path = out / "gamma_curve.csv"
    write_gamma_csv(curve.points, csv_path)
    m = RunManifest("gamma-curve", {"p_min": p_min, "p_max": p_max, "points": points, "scale": scale,
                                    "target_err": target_err})
    m.fingerprints = {"argmin": repr(curve.argmin), "argmin_refined": repr(curve.argmin_refined),
                      "minimum": repr(curve.minimum)}
    m.add_output(csv_path, "gamma")
    m.write(out / "gamma_curve.manifest.json")
    misses = [q.p for q in curve.points if q.accuracy_miss]
    print(f"min gamma {curve.minimum:.6f} at p = {curve.argmin_refined:.4f}")
    if misses:
        print(f"accuracy target missed at p = {misses}", file=sys.stderr)
        return EXIT_ACCURACY
    return EXIT_OK


def cmd_transition(p, lam, radii, h=0.02, out=".") -> int:
    from .io import RunManifest
    from .operators import CrossValley
    from .sectors import quadrant_problem
    from .transition import classify
    if p < 1:
        raise UsageError(f"p must be >= 1, got {p}")
    rep = classify(p, lam, radii, h)
    out = _out_dir(out)
    stem = f"transition_p{p:g}_lambda{lam:g}"
    rep.write_json(out / f"{stem}.json")
    rep.write_csv(out / f"{stem}.csv")
    m = RunManifest("transition", {"p": p, "lambda": lam, "radii": list(rep.radii), "h": h})
    m.fingerprints = {f"R={R:g}": quadrant_problem("NN", R, h, CrossValley(p, lam))[0].fingerprint()
                      for R in rep.radii}
    m.add_output(out / f"{stem}.csv", "transition")
    m.add_output(out / f"{stem}.json", "transition-report")
    m.write(out / f"{stem}.manifest.json")
    print(rep.verdict.value + ("  (near critical)" if rep.near_critical else ""))
    return EXIT_OK


def cmd_bounds(p, lam, N_max=50, C_p_prime=None, out=".", R=None, h=None) -> int:
    from .bounds import LAMBDA_MAX, build_constants, default_Cp_prime, reference_spectrum, verify_sum_bound
    from .io import RunManifest
    if not 0 <= lam < LAMBDA_MAX:
        raise UsageError(f"lambda must lie in [0, 1/alpha) = [0, {LAMBDA_MAX:.6f}), got {lam}")
    if N_max < 1:
        raise UsageError("N_max must be >= 1")
    if C_p_prime is None:
        try:
            C_p_prime = default_Cp_prime(p)
        except KeyError:
            raise UsageError(f"no default C'_p for p={p}; pass --C-p-prime") from None
    if not C_p_prime > 0:
        raise UsageError("C_p_prime must be positive")
    bc = build_constants(p, C_p_prime)
    spectrum = reference_spectrum(p, lam, N_max, R, h)
    reports = verify_sum_bound(spectrum, bc, lam)
    out = _out_dir(out)
    stem = f"bounds_p{p:g}_lambda{lam:g}"
    reports.write_csv(out / f"{stem}.csv")
    meta = spectrum.meta
    m = RunManifest("bounds", {"p": p, "lambda": lam, "N_max": N_max, "C_p_prime": C_p_prime,
                               "R": meta.get("R"), "h": meta.get("h")})
    m.fingerprints = {"constants": bc.fingerprint,
                      **{f"sector {s}": v["matrix"] for s, v in meta.get("sectors", {}).items()}}
    m.add_output(out / f"{stem}.csv", "bounds")
    m.write(out / f"{stem}.manifest.json")
    held = sum(r.holds for r in reports)
    print(f"bound holds for {held}/{len(reports)} N" + ("; truncation flag set" if reports.truncation_flag else ""))
    return EXIT_OK


def cmd_weyl(p, lambda_list, out=".") -> int:
    from .io import RunManifest
    from .weyl import weyl_report, write_weyl_csv
    if p < 1:
        raise UsageError(f"p must be >= 1, got {p}")
    if any(not x > 1 for x in lambda_list):
        raise UsageError("every lambda must exceed 1")
    reps = [weyl_report(float(x), p) for x in lambda_list]
    out = _out_dir(out)
    stem = f"weyl_p{p:g}"
    write_weyl_csv(reps, out / f"{stem}.csv")
    m = RunManifest("weyl", {"p": p, "lambda": [float(x) for x in lambda_list]})
    m.add_output(out / f"{stem}.csv", "weyl")
    m.write(out / f"{stem}.manifest.json")
    bad = [r.lambda_ for r in reps if not all(r.bracket_flags.values())]
    print("all bracket flags true" if not bad else f"bracket violated at lambda = {bad}")
    return EXIT_OK


def cmd_horn(lam, R=8.0, h=0.025, k=150, out=".") -> int:
    from .horn import HornSpec, beta_ratios, horn_spectrum, horn_sum_bound, write_beta_csv, write_horn_bound_csv
    from .io import RunManifest
    if not 0 <= lam < 1:
        raise UsageError(f"lambda must lie in [0, 1), got {lam}")
    if k < 2:
        raise UsageError("k must be >= 2")
    spec = HornSpec(lam, R, h)
    spectrum = horn_spectrum(spec, k)
    out = _out_dir(out)
    stem = f"horn_lambda{lam:g}"
    write_beta_csv(beta_ratios(spectrum), out / f"{stem}_beta.csv")
    rows = horn_sum_bound(spectrum, lam)
    write_horn_bound_csv(rows, out / f"{stem}_bound.csv")
    meta = spectrum.result.meta
    m = RunManifest("horn", {"lambda": lam, "R": R, "h": h, "k": k})
    m.fingerprints = {f"sector {s}": v["matrix"] for s, v in meta.get("sectors", {}).items()}
    m.add_output(out / f"{stem}_beta.csv", "beta")
    m.add_output(out / f"{stem}_bound.csv", "horn_bound")
    m.write(out / f"{stem}.manifest.json")
    print(f"beta_1 = {spectrum.result.eigenvalues[0]:.6f}; sum bound holds for "
          f"{sum(r.holds for r in rows)}/{len(rows)} N")
    return EXIT_OK


def _dispatch(a) -> int:
    if a.command == "gamma-curve":
        return cmd_gamma_curve(a.p_min, a.p_max, a.points, a.scale, a.out, a.target_err)
    if a.command == "transition":
        return cmd_transition(a.p, a.lam, a.radii, a.h, a.out)
    if a.command == "bounds":
        return cmd_bounds(a.p, a.lam, a.N_max, a.C_p_prime, a.out, a.R, a.h)
    if a.command == "weyl":
        return cmd_weyl(a.p, a.lam, a.out)
    return cmd_horn(a.lam, a.R, a.h, a.k, a.out)


def main(argv=None) -> int:
    from .eigensolve import ConvergenceError
    from .errors import HypothesisError, SpectrumError
    from .gamma import ResolutionError, TruncationError

    argv = sys.argv[1:] if argv is None else list(argv)
    ap = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    try:
        if known.config:
            _apply_config(ap, known.config)
    except UsageError as exc:
        print(f"valleyspec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        a = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _dispatch(a)
    except (UsageError, HypothesisError, ValueError) as exc:
        print(f"valleyspec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, SpectrumError, TruncationError, ResolutionError, RuntimeError) as exc:
        print(f"valleyspec: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
