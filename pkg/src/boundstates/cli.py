"""Command-line frontend with deterministic JSON and CSV output.

Six subcommands cover the main entry points of the library:

  eigs       merged negative spectrum of -d2/dx2 +- V from a potential file
  decompose  run (or replay) the interval decomposition and verify it
  ilt        inverse Lieb-Thirring checks, variant a or b
  sparse     build a sparse bump potential hitting prescribed eigenvalues
  scatter    reflection-coefficient sweep and trace-formula residual for W
  prufer     Prufer angle increments of a stored decomposition on a k grid

Exit codes: 0 success, 2 malformed input or violated precondition,
3 solver failure, 4 a verification or certificate check failed.

All output is reproducible byte for byte: JSON is emitted with sorted keys,
floats in CSV are printed with %.17g, and nothing depends on wall clock,
environment, or random state (``--seed none`` is the only accepted value,
kept as a flag so scripted invocations can state determinism explicitly).
A JSON config file may supply defaults for any long option of the chosen
subcommand; explicit flags win over the config file.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from typing import Optional

from .decompose import (
    CertificateError,
    DecompositionError,
    Domain,
    HypothesisError,
    decomposition_from_json,
    decomposition_to_json,
    run_decomposition,
    verify_decomposition,
)
from .eigen import DIRICHLET, NEUMANN, merged_spectrum, truncation_radius
from .inequalities import ilt_check_a, ilt_check_b
from .potentials import GridFunction, Interval, potential_from_json, potential_to_json
from .scattering import angle_increment_scan, profile_reflection, trace_formula_residual
from .sparse import place_bumps, verify_sparse

__all__ = ["main"]


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _load_json(path: str):
    with open(path, "r") as fh:
        return json.load(fh)


def _load_potential(path: str):
    return potential_from_json(_load_json(path))


def _print_json(doc: dict) -> None:
    sys.stdout.write(json.dumps(doc, sort_keys=True, indent=2))
    sys.stdout.write("\n")


def _opt(args, name: str, fallback):
    """Option value: explicit flag, else config file entry, else fallback."""
    val = getattr(args, name, None)
    if val is not None:
        return val
    cfg = getattr(args, "_cfg", {})
    if name in cfg:
        return cfg[name]
    return fallback


def _parse_range(text: str) -> Interval:
    lo_s, _, hi_s = text.partition(":")
    if not _:
        raise ValueError("expected LO:HI, got %r" % text)
    return Interval(float(lo_s), float(hi_s))


def _parse_domain(text: str) -> Domain:
    kind, _, x_s = text.partition(":")
    if not _:
        raise ValueError("expected KIND:X, got %r" % text)
    return Domain(kind, float(x_s))


def _fmt(value: float) -> str:
    return "%.17g" % value


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_eigs(args) -> int:
    V = _load_potential(args.potential)
    floor = float(_opt(args, "floor", 1e-8))
    tol = float(_opt(args, "tol", 1e-10))
    dom_s = _opt(args, "domain", None)
    if dom_s is None:
        R = truncation_radius(V, floor, 50.0)
        I = Interval(-R, R)
    else:
        I = _parse_range(dom_s)
    bc_name = _opt(args, "bc", "dirichlet")
    if bc_name not in ("dirichlet", "neumann"):
        raise ValueError("unknown boundary condition %r" % bc_name)
    bc = DIRICHLET if bc_name == "dirichlet" else NEUMANN
    spec = merged_spectrum(V, I, bc, E_floor=floor, tol=tol)
    _print_json({
        "schema": 1,
        "bc": bc_name,
        "domain": [I.lo, I.hi],
        "entries": spec.to_json(),
    })
    return 0


def _first_bad_interval(report: dict) -> Optional[dict]:
    for row in report["intervals"]:
        if not (row["ok"] and row["geometry_ok"]):
            return row
    return None


def _cmd_decompose(args) -> int:
    V = _load_potential(args.potential)
    floor = float(_opt(args, "floor", 1e-8))
    replay = _opt(args, "replay", None)
    if replay is not None:
        D = decomposition_from_json(_load_json(replay))
    else:
        dom_s = _opt(args, "domain", None)
        if dom_s is None:
            raise ValueError("--domain KIND:X is required unless --replay is given")
        D = run_decomposition(V, _parse_domain(dom_s), E_floor=floor)
    report = verify_decomposition(V, D)
    out_path = _opt(args, "out", None)
    doc = decomposition_to_json(D)
    if out_path is not None:
        with open(out_path, "w") as fh:
            json.dump(doc, fh, sort_keys=True, indent=2)
            fh.write("\n")
    top = {"schema": 1, "verification": report}
    if out_path is None:
        top["decomposition"] = doc
    _print_json(top)
    if not report["ok"]:
        row = _first_bad_interval(report)
        if row is not None:
            sys.stderr.write(
                "verification failed on interval [%s, %s] (n=%d, k=%d)\n"
                % (_fmt(row["lo"]), _fmt(row["hi"]), row["n"], row["k"]))
        else:
            sys.stderr.write("verification failed (reconstruction residual)\n")
        return 4
    return 0


def _cmd_ilt(args) -> int:
    V = _load_potential(args.potential)
    variant = _opt(args, "variant", "a")
    floor = float(_opt(args, "floor", 1e-8))
    dom_s = _opt(args, "domain", None)
    I = _parse_range(dom_s) if dom_s is not None else None
    if variant == "a":
        p = float(_opt(args, "p", 0.5))
        report = ilt_check_a(V, p, domain=I, E_floor=floor)
    elif variant == "b":
        p = float(_opt(args, "p", 0.5))
        E0 = float(_opt(args, "E0", 1.0))
        report = ilt_check_b(V, p, E0, domain=I, E_floor=floor)
    else:
        raise ValueError("unknown variant %r" % variant)
    report = dict(report)
    report["schema"] = 1
    report["variant"] = variant
    _print_json(report)
    return 0


def _cmd_sparse(args) -> int:
    doc = _load_json(args.targets)
    targets = doc["targets"] if isinstance(doc, dict) else doc
    targets = [float(t) for t in targets]
    kind = _opt(args, "kind", "square")
    rho = float(_opt(args, "rho", 10.0))
    slack = float(_opt(args, "slack", 0.25))
    V = place_bumps(targets, kind=kind, rho=rho, slack=slack)
    report = verify_sparse(V, targets)
    pot_doc = potential_to_json(V)
    out_path = _opt(args, "out", None)
    if out_path is not None:
        with open(out_path, "w") as fh:
            json.dump(pot_doc, fh, sort_keys=True, indent=2)
            fh.write("\n")
    top = {"schema": 1, "kind": kind, "verification": report}
    if out_path is None:
        top["potential"] = pot_doc
    _print_json(top)
    if not report["ok"]:
        sys.stderr.write("sparse build failed verification\n")
        return 4
    return 0


def _cmd_scatter(args) -> int:
    doc = _load_json(args.profile)
    W = GridFunction.from_json(doc)
    if W.values[0] != 0.0 or W.values[-1] != 0.0:
        raise ValueError("profile W must vanish at the ends of its grid")
    k_max = float(_opt(args, "kmax", 20.0))
    n_k = int(_opt(args, "nk", 4000))
    n_csv = min(n_k, 256)
    rows = []
    for j in range(1, n_csv + 1):
        k = k_max * j / n_csv
        r = profile_reflection(W, k)
        flux = 1.0 - abs(r) ** 2
        rows.append((k, r.real, r.imag, abs(r) ** 2,
                     math.log(flux) if flux > 0 else float("-inf")))
    with open(args.csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "re_r", "im_r", "abs_r2", "log_flux"])
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    report = trace_formula_residual(W, k_max=k_max, n_k=n_k)
    report = dict(report)
    report["schema"] = 1
    _print_json(report)
    return 0


def _cmd_prufer(args) -> int:
    D = decomposition_from_json(_load_json(args.decomposition))
    kgrid_s = _opt(args, "kgrid", None)
    if kgrid_s is None:
        raise ValueError("--kgrid K1,K2,... is required")
    ks = [float(s) for s in str(kgrid_s).split(",") if s.strip()]
    if not ks:
        raise ValueError("empty k grid")
    rows = angle_increment_scan(D, ks)
    writer = csv.writer(sys.stdout)
    writer.writerow(["n", "k", "increment", "err", "bound"])
    for row in rows:
        writer.writerow([
            "%d" % row["n"], _fmt(row["k"]), _fmt(row["increment"]),
            _fmt(row["err"]), _fmt(row["bound"]),
        ])
    return 0


# ---------------------------------------------------------------------------
# parser and dispatch
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boundstates",
        description="Numerics for -d2/dx2 +- V: spectra, decompositions, "
                    "inequalities, sparse builds, scattering.")
    parser.add_argument("--seed", choices=["none"], default="none",
                        help="randomness control; only 'none' is accepted "
                             "(all computations are deterministic)")
    parser.add_argument("--config", default=None, metavar="FILE",
                        help="JSON file supplying defaults for long options")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eigs", help="merged negative spectrum of a potential")
    p.add_argument("potential", help="potential JSON file")
    p.add_argument("--domain", default=None, metavar="LO:HI",
                   help="computation interval; write --domain=LO:HI when "
                        "LO is negative")
    p.add_argument("--bc", default=None, choices=["dirichlet", "neumann"])
    p.add_argument("--floor", type=float, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=_cmd_eigs)

    p = sub.add_parser("decompose", help="run and verify the decomposition")
    p.add_argument("potential", help="potential JSON file")
    p.add_argument("--domain", default=None, metavar="KIND:X",
                   help="whole:X, dirichlet:X, or neumann:X")
    p.add_argument("--floor", type=float, default=None)
    p.add_argument("--out", default=None, metavar="PATH",
                   help="write the decomposition JSON here instead of stdout")
    p.add_argument("--replay", default=None, metavar="PATH",
                   help="verify a stored decomposition instead of running")
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("ilt", help="inverse Lieb-Thirring check")
    p.add_argument("potential", help="potential JSON file")
    p.add_argument("--variant", default=None, choices=["a", "b"])
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--E0", type=float, default=None)
    p.add_argument("--domain", default=None, metavar="LO:HI")
    p.add_argument("--floor", type=float, default=None)
    p.set_defaults(func=_cmd_ilt)

    p = sub.add_parser("sparse", help="build bumps hitting target eigenvalues")
    p.add_argument("targets", help="JSON file: list of targets, descending")
    p.add_argument("--kind", default=None, choices=["square", "dipole"])
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--slack", type=float, default=None)
    p.add_argument("--out", default=None, metavar="PATH",
                   help="write the potential JSON here instead of stdout")
    p.set_defaults(func=_cmd_sparse)

    p = sub.add_parser("scatter", help="reflection sweep and trace residual")
    p.add_argument("profile", help="piecewise-linear W profile JSON file")
    p.add_argument("--csv", required=True, metavar="PATH",
                   help="write the k sweep as CSV here")
    p.add_argument("--kmax", type=float, default=None)
    p.add_argument("--nk", type=int, default=None)
    p.set_defaults(func=_cmd_scatter)

    p = sub.add_parser("prufer", help="angle increments of a decomposition")
    p.add_argument("decomposition", help="decomposition JSON file")
    p.add_argument("--kgrid", default=None, metavar="K1,K2,...")
    p.set_defaults(func=_cmd_prufer)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config is not None:
            cfg = _load_json(args.config)
            if not isinstance(cfg, dict):
                raise ValueError("config file must hold a JSON object")
            args._cfg = cfg
        return args.func(args)
    except CertificateError as err:
        sys.stderr.write("certificate failure: %s\n" % err)
        return 4
    except (HypothesisError, DecompositionError, RuntimeError, OverflowError) as err:
        sys.stderr.write("solver failure: %s\n" % err)
        return 3
    except (OSError, ValueError, KeyError, TypeError) as err:
        sys.stderr.write("error: %s\n" % err)
        return 2


if __name__ == "__main__":
    sys.exit(main())
