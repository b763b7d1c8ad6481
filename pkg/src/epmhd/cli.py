"""Command-line entry points.

    epmhd run --case hartmann --n 20 --degrees 2,1,1 --out rows.csv
    epmhd reference --re 1000 --n 50 --guard-n 40 --out lid_re1000.npz
    epmhd verify --seed 0

`run` appends one CSV row per invocation so studies can be scripted; a
config file with the same keys can stand in for the flags.
"""

from __future__ import annotations

import argparse
import configparser
import sys

from .bench import RunConfig, generate_reference, run_case, write_rows
from .forms import QoISpec


def _parse_degrees(text):
    parts = [int(p) for p in text.replace(" ", "").split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("degrees must be three integers")
    return tuple(parts)


def _parse_box(text):
    parts = [float(p) for p in text.replace(" ", "").split(",")]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("box must be x0,x1,y0,y1")
    return tuple(parts)


def _add_run_flags(sub):
    sub.add_argument("--case", choices=("hartmann", "lid"), default=None)
    sub.add_argument("--n", type=int, default=None)
    sub.add_argument("--degrees", type=_parse_degrees, default=None)
    sub.add_argument("--re", dest="Re", type=float, default=None)
    sub.add_argument("--re-m", dest="Re_m", type=float, default=None)
    sub.add_argument("--kappa", type=float, default=None)
    sub.add_argument("--linearization",
                     choices=("computational", "exact"), default=None)
    sub.add_argument("--no-adjoint", action="store_true",
                     help="skip the dual solve; only the true error is reported")
    sub.add_argument("--reference", default=None,
                     help="stored reference file supplying the true value")
    sub.add_argument("--qoi-component", default=None)
    sub.add_argument("--qoi-box", type=_parse_box, default=None)
    sub.add_argument("--config", default=None,
                     help="INI file with a [run] section mirroring the flags")
    sub.add_argument("--out", required=True)
    sub.add_argument("--append", action="store_true")


def _config_overrides(path):
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise SystemExit(f"config file not found: {path}")
    section = parser["run"]
    out = {}
    for key in ("case", "linearization", "reference"):
        if key in section:
            out[key] = section[key]
    if "n" in section:
        out["n"] = section.getint("n")
    if "degrees" in section:
        out["degrees"] = _parse_degrees(section["degrees"])
    for key, attr in (("re", "Re"), ("re_m", "Re_m"), ("kappa", "kappa")):
        if key in section:
            out[attr] = section.getfloat(key)
    if "adjoint" in section:
        out["adjoint"] = section.getboolean("adjoint")
    if "qoi_component" in section:
        out["qoi_component"] = section["qoi_component"]
    if "qoi_box" in section:
        out["qoi_box"] = _parse_box(section["qoi_box"])
    return out


def _build_run_config(args):
    settings = {}
    if args.config:
        settings.update(_config_overrides(args.config))
    for key in ("case", "n", "degrees", "Re", "Re_m", "kappa",
                "linearization", "reference"):
        val = getattr(args, key)
        if val is not None:
            settings[key] = val
    if args.no_adjoint:
        settings["adjoint"] = False
    component = settings.pop("qoi_component", args.qoi_component)
    box = settings.pop("qoi_box", args.qoi_box)
    if (component is None) != (box is None):
        raise SystemExit("--qoi-component and --qoi-box go together")
    if component is not None:
        settings["qoi"] = QoISpec(component, box)
    settings.setdefault("case", "hartmann")
    settings.setdefault("n", 20)
    settings.setdefault("degrees", (2, 1, 1))
    settings.setdefault("linearization", "computational")
    return RunConfig(**settings)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="epmhd")
    subs = parser.add_subparsers(dest="verb", required=True)

    run = subs.add_parser("run", help="solve one configured case, append a CSV row")
    _add_run_flags(run)

    ref = subs.add_parser("reference", help="store a fine-mesh cavity reference")
    ref.add_argument("--re", type=float, default=1000.0)
    ref.add_argument("--n", type=int, default=50)
    ref.add_argument("--guard-n", type=int, default=40)
    ref.add_argument("--degrees", type=_parse_degrees, default=(3, 2, 2))
    ref.add_argument("--out", required=True)

    ver = subs.add_parser("verify", help="run the structural property checks")
    ver.add_argument("--seed", type=int, default=0)

    args = parser.parse_args(argv)

    if args.verb == "run":
        rc = _build_run_config(args)
        row = run_case(rc)
        write_rows(args.out, [row], append=args.append)
        err = row.get("true_error")
        eff = row.get("eff")
        print(f"{row['case']} n={row['n']} {row['space']}: "
              f"err={'n/a' if err is None else f'{err:+.3e}'} "
              f"eff={'n/a' if eff is None else f'{eff:.3f}'} [{row['status']}]")
        return 0 if row["status"] == "ok" else 1

    if args.verb == "reference":
        qoi, gap = generate_reference(Re=args.re, n=args.n,
                                      guard_n=args.guard_n,
                                      degrees=args.degrees, out=args.out)
        print(f"reference qoi={qoi:.10e} guard gap={gap:.3e} -> {args.out}")
        return 0

    if args.verb == "verify":
        from .verify import run_all  # deferred: imports solvers eagerly

        failures = 0
        for name, ok, detail in run_all(seed=args.seed):
            print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
            failures += 0 if ok else 1
        return 1 if failures else 0

    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
