"""Command line driver.  Every subcommand writes one JSON document.

Exit status: 0 when every check in the output passed, 1 when one failed (or
was inconclusive), 2 on bad arguments.  Settings come from flags, then from
``--config file.json``, then from the defaults below.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

from gmpy2 import mpq

from . import battery, models, partitions, toda_lax
from . import fock_oracle as fo
from .exactnum import DomainError, rat, triple_product_check
from .operator_matrices import NumericPrincipal, SymbolicPrincipal, dump, matrix_of_g, verify_matrix_shift_symmetry
from .reports import dumps


class UsageError(Exception):
    pass


DEFAULTS = {
    "order": 10, "cutoff": None, "s": 0, "N": 6, "degree": 2, "kmax": 2, "kbar": 1, "window": None,
    "mode": "symbolic", "q": "1/4", "Q": "symbolic", "model": "ordinary", "variant": "1D", "name": "U",
    "grid": None, "arithmetic": "modular", "k": 1, "criteria": None, "lam": "3,2,1", "route": "hook",
    "supplementary": True,
}


# argument plumbing -----------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    # accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="JSON file with default settings")
    common.add_argument("--out", default=argparse.SUPPRESS, help="write the report here instead of stdout")
    common.add_argument("--pretty", action="store_true", default=argparse.SUPPRESS, help="indent the JSON")
    common.add_argument("--timing", action="store_true", default=argparse.SUPPRESS,
                        help="keep wall-clock fields in reports")
    p = argparse.ArgumentParser(prog="crystal-lab", description=__doc__.splitlines()[0], parents=[common])
    sub = p.add_subparsers(dest="command", required=True)
    add_parser = sub.add_parser
    sub.add_parser = lambda *a, **kw: add_parser(*a, parents=[common], **kw)

    def opt(sp, *names, **kw):
        kw.setdefault("default", None)
        sp.add_argument(*names, **kw)

    sp = sub.add_parser("macmahon", help="MacMahon coefficients, product and brute force")
    opt(sp, "--order", type=int)

    sp = sub.add_parser("slice", help="plane partition <-> (lambda, T, T') triple")
    sp.add_argument("--in", dest="infile", required=True, help="JSON plane partition or triple")

    sp = sub.add_parser("schur", help="principal specialization of a Schur function")
    opt(sp, "--lam", help="comma separated parts")
    opt(sp, "--cutoff", type=int)
    opt(sp, "--route", choices=["hook", "tableau"])

    sp = sub.add_parser("partition-function", help="deformed Z as a time polynomial")
    opt(sp, "--model", choices=["ordinary", "modified"])
    for name in ("--s", "--N", "--degree", "--kmax", "--kbar", "--cutoff"):
        opt(sp, name, type=int)

    sp = sub.add_parser("tau", help="tau function from matrix elements of g or g'")
    opt(sp, "--variant", choices=["1D", "2D"])
    for name in ("--s", "--N", "--degree", "--kmax", "--kbar", "--cutoff"):
        opt(sp, name, type=int)

    sp = sub.add_parser("dump-matrix", help="window matrix as JSON")
    opt(sp, "--name", choices=["U", "g", "W", "Wbar", "Winv", "L", "Lbar_inv"])
    for name in ("--window", "--cutoff"):
        opt(sp, name, type=int)
    opt(sp, "--mode", choices=["symbolic", "numeric"])
    opt(sp, "--q")
    opt(sp, "--Q")

    sp = sub.add_parser("verify", help="run one verifier")
    sp.add_argument("check", choices=sorted(CHECKS))
    for name in ("--s", "--N", "--degree", "--kmax", "--kbar", "--cutoff", "--window", "--k", "--order"):
        opt(sp, name, type=int)
    opt(sp, "--q")
    opt(sp, "--Q")
    opt(sp, "--grid", action="append", help="e.g. t1=0,0.125,0.25 (repeatable, tb1=... for tbar)")
    opt(sp, "--arithmetic", choices=["rational", "modular"])

    sp = sub.add_parser("suite", help="the acceptance battery, one entry per criterion")
    opt(sp, "--criteria", help="comma separated ids, default all")
    sp.add_argument("--no-supplementary", dest="supplementary", action="store_false", default=None)
    return p


_GLOBAL = ("config", "out", "pretty", "timing")


def _settings(ns: argparse.Namespace) -> dict:
    cfg = {}
    if getattr(ns, "config", None):
        try:
            with open(ns.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
    out = dict(DEFAULTS)
    out.update({k: v for k, v in cfg.items()})
    out.update({k: v for k, v in vars(ns).items() if v is not None and k not in _GLOBAL})
    for key in ("degree", "order", "window", "cutoff"):
        if out.get(key) is not None and out[key] <= 0:
            raise UsageError(f"--{key} must be positive")
    if out["N"] < 0:
        raise UsageError("--N must be non-negative")
    return out


def _exact(text: str):
    try:
        return rat(str(text))
    except (ValueError, TypeError, ZeroDivisionError):
        raise UsageError(f"not an exact rational: {text!r}") from None


def _parse_grid(specs) -> list:
    axes = {"t1": [mpq(0)], "tb1": [mpq(0)]}
    for spec in specs or ():
        if "=" not in spec:
            raise UsageError(f"grid spec {spec!r} is not name=v1,v2,...")
        name, values = spec.split("=", 1)
        if name not in axes:
            raise UsageError(f"grid axis must be t1 or tb1, not {name!r}")
        axes[name] = [_exact(v) for v in values.split(",") if v]
    if specs is None:
        return battery.THEOREM3_GRID
    return [({1: a}, {1: b}) for a in axes["t1"] for b in axes["tb1"]]


def _spec(o: dict):
    cutoff = o["cutoff"] or 20
    if o["mode"] == "symbolic":
        Q = o["Q"] if o["Q"] == "symbolic" else _exact(o["Q"])
        return SymbolicPrincipal(cutoff, Q)
    Q = _exact("1/3" if o["Q"] == "symbolic" else o["Q"])
    q = _exact(o["q"])
    if not 0 < q < 1 or not 0 < Q < 1:
        raise UsageError("numeric mode needs 0 < q, Q < 1")
    return NumericPrincipal(q, Q)


def _times(o: dict, modified: bool) -> models.Times:
    return models.Times(kmax=o["kmax"], kbar=o["kbar"] if modified else 0, degree=o["degree"])


def _lam(text) -> partitions.Partition:
    try:
        parts = [int(x) for x in str(text).split(",") if x.strip()] if not isinstance(text, list) else text
        return partitions.Partition(parts)
    except ValueError as exc:
        raise UsageError(f"bad partition {text!r}: {exc}") from None


# verifiers reachable from ``verify`` --------------------------------------------

CHECKS = {
    "macmahon": lambda o: battery._macmahon_report(o["order"]),
    "bijection": lambda o: partitions.verify_bijection(8),
    "schur": lambda o: partitions.verify_schur_routes(6, o["cutoff"] or 30),
    "cauchy": lambda o: _combined("cauchy", [partitions.verify_cauchy("same", 8, o["cutoff"] or 20),
                                             partitions.verify_cauchy("dual", 8, o["cutoff"] or 20)]),
    "z-routes": lambda o: models.verify_z_routes(6, o["cutoff"] or 20),
    "anticommutators": lambda o: fo.verify_anticommutators(fo.ModeWindow.symmetric(o["window"] or 6)),
    "h-eigenvalues": lambda o: fo.verify_h_eigenvalues(models.phi),
    "vertex-elements": lambda o: fo.verify_vertex_elements(4, o["cutoff"] or 16),
    "shift-fock": lambda o: fo.verify_shift_symmetries(o["k"], fo.ModeWindow.symmetric(o["window"] or 10),
                                                       [((), 0), ((1,), 0), ((), 1)], cutoff=o["cutoff"] or 20),
    "shift-matrix": lambda o: verify_matrix_shift_symmetry(o["k"], -(o["window"] or 24), o["window"] or 24,
                                                           SymbolicPrincipal(o["cutoff"] or 24, "symbolic")),
    "theorem1": lambda o: models.verify_theorem1(o["s"], o["N"], _times(o, False), o["cutoff"] or 16),
    "theorem2": lambda o: models.verify_theorem2(o["s"], o["N"], _times(o, True), o["cutoff"] or 16),
    "factorization": lambda o: toda_lax.verify_explicit_factorization(
        -(o["window"] or 24), o["window"] or 24, _spec(o)),
    "lu": lambda o: toda_lax.verify_lu_reproduces(-(o["window"] or 24), o["window"] or 24, _spec(o)),
    "initial-lax": lambda o: toda_lax.verify_initial_lax(-(o["window"] or 24), o["window"] or 24, _spec(o)),
    "initial-al": lambda o: toda_lax.verify_initial_al(-(o["window"] or 24), o["window"] or 24, _spec(o)),
    "theorem3": lambda o: toda_lax.verify_theorem3(_parse_grid(o["grid"]), M=o["window"] or 32, q=_exact(o["q"]),
                                                   Q=_exact("1/3" if o["Q"] == "symbolic" else o["Q"]),
                                                   arithmetic=o["arithmetic"]),
    "theorem3-formal": lambda o: toda_lax.verify_theorem3_formal(
        M=o["window"] or 10, cutoff=o["cutoff"] or 10, Q="1/3" if o["Q"] == "symbolic" else o["Q"],
        degree=1),
    "triple-product": lambda o: triple_product_check(o["cutoff"] or 40, 4),
}


def _combined(name, reports):
    return {"identity": name, "status": "pass" if all(r["status"] == "pass" for r in reports) else "fail",
            "reports": reports}


# subcommands -------------------------------------------------------------------------

def cmd_macmahon(o):
    return battery._macmahon_report(o["order"])


def cmd_slice(o):
    try:
        with open(o["infile"]) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read input: {exc}") from None
    try:
        if isinstance(data, dict):
            tri = partitions.SliceTriple(
                partitions.Partition(data["lambda"]),
                partitions.SSTableau(data["T"]["shape"], data["T"]["rows"]),
                partitions.SSTableau(data["Tprime"]["shape"], data["Tprime"]["rows"]))
            return {"plane_partition": partitions.unslice(tri).to_json(), "status": "pass"}
        pi = partitions.PlanePartition(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad input: {exc}") from None
    return {**partitions.slice(pi).to_json(), "size": pi.size, "status": "pass"}


def cmd_schur(o):
    lam = _lam(o["lam"])
    cutoff = o["cutoff"] or 20
    f = partitions.schur_principal if o["route"] == "hook" else partitions.schur_tableau_sum
    return {"lambda": list(lam), "route": o["route"], "value": f(lam, cutoff).to_json(), "status": "pass"}


def cmd_partition_function(o):
    modified = o["model"] == "modified"
    z = models.z_deformed(o["model"], o["s"], o["N"], _times(o, modified), o["cutoff"] or 16)
    return {**z.to_json(), "model": o["model"], "status": "pass"}


def cmd_tau(o):
    two = o["variant"] == "2D"
    t = models.tau(o["variant"], o["s"], o["N"], _times(o, two), o["cutoff"] or 16)
    return {**t.to_json(), "variant": o["variant"], "status": "pass"}


def cmd_dump_matrix(o):
    M = o["window"] or 12
    spec = _spec(o)
    name = o["name"]
    if name == "U":
        m = toda_lax.build_U(-M, M, spec)
    elif name == "g":
        m = matrix_of_g("g", -M, M, spec)
    else:
        p = toda_lax.explicit_initial_factorization(-M, M, spec)
        if name in ("L", "Lbar_inv"):
            m = getattr(toda_lax.lax_from_dressing(p), name)
        else:
            m = getattr(p, name)
    return {"name": name, **spec.describe(), **dump(m), "status": "pass"}


def cmd_verify(o):
    return CHECKS[o["check"]](o)


def _criterion(args):
    cid, supp = args
    return battery.run_criterion(cid, supp)


def cmd_suite(o):
    ids = sorted(battery.CRITERIA)
    if o["criteria"]:
        try:
            ids = [int(x) for x in str(o["criteria"]).split(",")]
        except ValueError:
            raise UsageError("--criteria takes comma separated integers") from None
        unknown = [i for i in ids if i not in battery.CRITERIA]
        if unknown:
            raise UsageError(f"unknown criteria {unknown}")
    threads = max(1, int(os.environ.get("CRYSTAL_LAB_THREADS", "1") or 1))
    jobs = [(i, o["supplementary"]) for i in ids]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as ex:
            results = list(ex.map(_criterion, jobs))
    else:
        results = [_criterion(j) for j in jobs]
    return {"criteria": results, "status": "pass" if all(r["status"] == "pass" for r in results) else "fail"}


COMMANDS = {
    "macmahon": cmd_macmahon, "slice": cmd_slice, "schur": cmd_schur,
    "partition-function": cmd_partition_function, "tau": cmd_tau, "dump-matrix": cmd_dump_matrix,
    "verify": cmd_verify, "suite": cmd_suite,
}


def _strip_timing(x):
    if isinstance(x, dict):
        return {k: _strip_timing(v) for k, v in x.items() if k != "seconds"}
    if isinstance(x, list):
        return [_strip_timing(v) for v in x]
    return x


def run(argv=None) -> int:
    parser = _parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    t0 = time.perf_counter()
    try:
        o = _settings(ns)
        report = COMMANDS[ns.command](o)
    except (UsageError, DomainError, ValueError) as exc:
        print(f"crystal-lab: error: {exc}", file=sys.stderr)
        return 2
    if getattr(ns, "timing", False):
        report["wall_seconds"] = round(time.perf_counter() - t0, 3)
    else:
        report = _strip_timing(report)
    text = dumps(report, pretty=getattr(ns, "pretty", False))
    if getattr(ns, "out", None):
        with open(ns.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0 if report.get("status") == "pass" else 1


def main() -> None:
    sys.exit(run())
