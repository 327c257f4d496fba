"""Command line entry point: ``sim check-algebra | run <cfg> | relax <cfg> | audit <snap...>``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .clifford import (
    ETA,
    IDENTITY,
    Vectorplet,
    anticommutator_table,
    boost,
    boost_vectorplet,
    dirac_representation,
    metric_from_pair,
    trace_metric,
)
from .config import load_config
from .errors import SimulationError
from .scenarios import RUNNERS, audit_snapshots, relax_scenario

ALGEBRA_TOL = 1e-12

log = logging.getLogger("vectorplet")


def check_algebra(rep: Vectorplet | None = None):
    """Residuals of the algebraic identities; returns a list of ``(name, residual)``.

    ``rep`` replaces the Dirac representation (used to exercise failure paths).
    """
    rep = dirac_representation() if rep is None else rep
    up = rep.components
    low = Vectorplet(np.einsum("mn,nab->mab", ETA, up), "covariant")
    out = []
    out.append(("anticommutator {g^m, g^n} = -2 eta^{mn}", float(anticommutator_table(rep).max())))
    g_up = trace_metric(up, up)
    out.append(("metric from pair (upper) = eta", float(np.abs(g_up - ETA).max())))
    g_low = trace_metric(low.components, low.components)
    out.append(("metric from pair (lower) = eta", float(np.abs(g_low - ETA).max())))
    out.append(("g(gamma) g(lambda) = 1", float(np.abs(g_low @ g_up - np.eye(4)).max())))
    herm = max(float(np.abs(up[0] - up[0].conj().T).max()),
               *(float(np.abs(up[i] + up[i].conj().T).max()) for i in (1, 2, 3)))
    out.append(("g^0 hermitian, g^i antihermitian", herm))
    out.append(("traceless generators", float(max(abs(np.trace(up[m])) for m in range(4)))))
    lam = boost([0.3, -0.2, 0.4])
    boosted = trace_metric(boost_vectorplet(lam, rep).components, boost_vectorplet(lam, rep).components)
    out.append(("boosted trace metric = L eta L^T", float(np.abs(boosted - lam @ ETA @ lam.T).max())))
    g5 = 1j * up[0] @ up[1] @ up[2] @ up[3]
    out.append(("gamma5 squares to identity", float(np.abs(g5 @ g5 - IDENTITY).max())))
    return out


def cmd_check_algebra(args, rep=None):
    rep = dirac_representation() if rep is None else rep
    results = check_algebra(rep)
    if args.verbose:
        table = anticommutator_table(rep)
        print("anticommutator residuals ||{g^m, g^n} + 2 eta^{mn}||:")
        for mu in range(4):
            print("  " + "  ".join(f"{table[mu, nu]:.2e}" for nu in range(4)))
    ok = True
    for name, res in results:
        passed = res < ALGEBRA_TOL
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {res:.3e}  {name}")
    try:
        metric_from_pair(rep, rep)
    except SimulationError as exc:
        print(f"FAIL  metric_from_pair: {exc}")
        ok = False
    print("check-algebra:", "PASS" if ok else "FAIL")
    return 0 if ok else 1


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _report(summary, out: Path):
    text = json.dumps(summary, indent=2, default=float, sort_keys=True)
    (out / "summary.json").write_text(text + "\n")
    print(text)


def cmd_run(args):
    cfg = load_config(args.config)
    out = _out_dir(args)
    every = args.snapshot_every if args.snapshot_every is not None else cfg.snapshot_every
    log.info("scenario %s: nx=%d dt=%g steps=%d", cfg.scenario, cfg.nx, cfg.dt, cfg.steps)
    summary = RUNNERS[cfg.scenario](cfg, out, seed=args.seed, snapshot_every=every)
    _report({"scenario": cfg.scenario, **summary}, out)
    return 0


def cmd_relax(args):
    cfg = load_config(args.config)
    out = _out_dir(args)
    summary = relax_scenario(cfg, out, seed=args.seed)
    _report({"scenario": cfg.scenario, **summary}, out)
    return 0 if summary["converged"] else 1


def cmd_audit(args):
    out = _out_dir(args)
    rows = audit_snapshots([Path(p) for p in args.snapshots], out)
    print(f"audited {len(rows)} snapshots -> {out / 'audit.csv'}")
    return 0


def _flags(suppress):
    """Shared flags; subcommand copies use SUPPRESS so they only override when given."""
    p = argparse.ArgumentParser(add_help=False)
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--out", default=d("out"), help="output directory (default: out)")
    p.add_argument("--snapshot-every", type=int, default=d(None), metavar="N",
                   help="write a snapshot every N steps (overrides the config)")
    p.add_argument("--threads", type=int, default=d(None), metavar="K",
                   help="limit BLAS/LAPACK worker threads")
    p.add_argument("--seed", type=int, default=d(0), metavar="S", help="random seed (default: 0)")
    p.add_argument("-v", "--verbose", action="store_true", default=d(False))
    return p


def build_parser():
    p = argparse.ArgumentParser(prog="sim", parents=[_flags(False)],
                                description="Bilinear Dirac / EM / proto-gravity lattice simulator")
    sub = p.add_subparsers(dest="command", required=True)
    common = [_flags(True)]
    sub.add_parser("check-algebra", parents=common, help="verify the Clifford and trace-metric identities")
    r = sub.add_parser("run", parents=common, help="evolve a configured scenario")
    r.add_argument("config")
    r = sub.add_parser("relax", parents=common, help="relax lambda onto the inverse metric of gamma")
    r.add_argument("config")
    r = sub.add_parser("audit", parents=common, help="conservation audit of consecutive snapshots")
    r.add_argument("snapshots", nargs="+")
    return p


COMMANDS = {"check-algebra": cmd_check_algebra, "run": cmd_run, "relax": cmd_relax, "audit": cmd_audit}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        with threadpool_limits(limits=args.threads):
            return COMMANDS[args.command](args)
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
