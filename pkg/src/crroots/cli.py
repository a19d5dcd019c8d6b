"""Command-line surface: precompute, roots, cond, bench.

Exit codes:
    0  success
    1  benchmark criteria failed
    2  usage error (argparse)
    3  ExpansionNotConverged
    4  MaxDepthExceeded
    5  QrBreakdown / NonConvergence
    6  EvaluationError
    7  expression parse error (syntax or unknown identifier)
    8  BasisBreakdown
    9  other package error
"""

import argparse
import json
import sys
import time

import numpy as np

from . import bench
from .basis import (
    BasisMatrix,
    BasisProvider,
    build_basis_matrix,
    condition_number,
    evaluate_basis,
    load_basis,
    orthogonalize,
    save_basis,
)
from .errors import (
    BasisBreakdown,
    CrrootsError,
    EvaluationError,
    ExpansionNotConverged,
    ExprSyntaxError,
    MaxDepthExceeded,
    NonConvergence,
    QrBreakdown,
    UnknownIdentifier,
)
from .frontend import CATALOG, analytic_fn
from .quadrature import boundary_nodes
from .rootfind import RootfindOptions, SquareDomain, default_seed, roots_adaptive, roots_nonadaptive

REPORT_VERSION = "crroots-report/1"


def _g17(x):
    """Round-trip through 17 significant digits (the serialization contract)."""
    return float(f"{float(x):.17g}")


def parse_complex(text):
    """Parse 'RE,IM' (or bare 'RE') into a complex number."""
    parts = text.split(",")
    if len(parts) == 1:
        return complex(float(parts[0]), 0.0)
    if len(parts) == 2:
        return complex(float(parts[0]), float(parts[1]))
    raise argparse.ArgumentTypeError(f"expected RE,IM, got {text!r}")


def _int_list(text):
    return [int(t) for t in text.split(",") if t]


class LoadedBasisProvider(BasisProvider):
    """Serve expansion orders up to the loaded basis order from a cache file."""

    def __init__(self, basis, bm, seed=None):
        super().__init__(basis.seed if seed is None else seed)
        self._loaded = basis
        self._bases[(basis.order, 0)] = basis
        self._matrices[(basis.order, 0, bm.order)] = bm

    def _bucket(self, order):
        if order <= self._loaded.order:
            return self._loaded.order
        return super()._bucket(order)


def cmd_precompute(args):
    n = args.order
    k = args.nodes_per_edge
    if k < (n + 1) // 2:
        msg = f"nodes-per-edge {k} is below the n/2 guidance for order {n}"
        if not args.allow_small_k:
            print(f"error: {msg}; pass --allow-small-k to proceed anyway", file=sys.stderr)
            return 2
        print(f"warning: {msg}", file=sys.stderr)
    boundary = boundary_nodes("square", k, "gauss")
    last = None
    for attempt in range(3):
        try:
            basis = orthogonalize(boundary, n, args.seed + attempt)
            break
        except BasisBreakdown as exc:
            last = exc
    else:
        raise last
    save_basis(args.out, basis)
    print(f"wrote {args.out}: order {n}, m {boundary.m}, seed {basis.seed}")
    return 0


def _roots_report(args, mode, outcome):
    d = outcome.diagnostics
    return {
        "version": REPORT_VERSION,
        "input": {
            "function": args.fn or args.expr,
            "center": [_g17(args.center.real), _g17(args.center.imag)],
            "half_side": _g17(args.half_side),
            "mode": mode,
            "order": d.expansion_order,
            "eps_exp": _g17(args.eps_exp),
            "eps_eig": _g17(args.eps_eig),
            "delta": _g17(args.delta),
            "newton_iters": args.newton,
            "seed": args.seed,
        },
        "roots": [
            {
                "re": _g17(r.value.real),
                "im": _g17(r.value.imag),
                "eta": _g17(r.eta),
                "square_id": r.square_id,
                "depth": r.depth,
            }
            for r in outcome.roots
        ],
        "diagnostics": {
            "n_roots": len(outcome.roots),
            "n_eigs": d.n_eigs,
            "n_levels": d.n_levels,
            "rotations": d.rotations,
            "max_rotation": _g17(d.max_rotation),
            "corrections": d.corrections,
            "q_norm": _g17(d.q_norm),
            "retries": d.retries,
            "wall_time_seconds": _g17(d.wall_time_seconds),
        },
    }


def cmd_roots(args):
    f = analytic_fn(args.fn if args.fn else args.expr)
    domain = SquareDomain(args.center, args.half_side)
    opts = RootfindOptions(
        eps_exp=args.eps_exp,
        eps_eig=args.eps_eig,
        delta=args.delta,
        n_exp=args.n_exp,
        newton_iters=args.newton,
        seed=args.seed,
        escalate=not args.fixed_order,
        threads=args.threads,
    )
    if args.basis:
        basis, bm = load_basis(args.basis)
        provider = LoadedBasisProvider(basis, bm, seed=args.seed)
    else:
        provider = BasisProvider(args.seed)
    if args.adaptive:
        outcome = roots_adaptive(f, domain, opts, provider=provider)
        mode = "adaptive"
    else:
        outcome = roots_nonadaptive(f, domain, opts, provider=provider)
        mode = "nonadaptive"
    if args.format == "csv":
        print("re,im,eta,square_id,depth")
        for r in outcome.roots:
            print(f"{r.value.real:.17g},{r.value.imag:.17g},{r.eta:.17g},{r.square_id},{r.depth}")
    else:
        print(json.dumps(_roots_report(args, mode, outcome), indent=2))
    return 0


def _cond_once(shape, order, spacing, seed):
    if shape == "circle":
        boundary = boundary_nodes("circle", 2 * order, "equispaced")
        basis = orthogonalize(boundary, order, seed)
        return condition_number(build_basis_matrix(basis))
    constr = boundary_nodes(shape, order, spacing)
    basis = orthogonalize(constr, order, seed)
    if spacing == "gauss":
        return condition_number(build_basis_matrix(basis))
    # equispaced construction: evaluate on Gauss nodes via the recurrence
    gauss_bd = boundary_nodes(shape, order, "gauss")
    vals = evaluate_basis(basis, gauss_bd.z)
    G = np.sqrt(gauss_bd.w_quad)[:, None] * vals.T
    qf, rf = np.linalg.qr(G, mode="reduced")
    bm = BasisMatrix(G=G, qfac=qf, rfac=rf, order=order, basis=basis)
    return condition_number(bm)


def cmd_cond(args):
    print("order,mean_cond")
    for order in args.orders:
        conds = []
        for trial in range(args.trials):
            seed = args.seed + 1009 * trial
            for attempt in range(3):
                try:
                    conds.append(_cond_once(args.shape, order, args.spacing, seed + attempt))
                    break
                except BasisBreakdown:
                    continue
            else:
                raise BasisBreakdown(0, f"persistent breakdown at order {order}, trial {trial}")
        print(f"{order},{np.mean(conds):.6g}")
    return 0


def cmd_bench(args):
    t0 = time.perf_counter()
    results = bench.run_suite(only=args.only, seed=args.seed)
    for res in results:
        print(res.line())
    if args.format == "json":
        doc = {
            "version": REPORT_VERSION,
            "suite": args.suite,
            "criteria": [
                {
                    "name": r.name,
                    "passed": r.passed,
                    "details": r.details,
                    "wall_time_seconds": _g17(r.wall_time_seconds),
                }
                for r in results
            ],
            "wall_time_seconds": _g17(time.perf_counter() - t0),
        }
        print(json.dumps(doc, indent=2))
    return 0 if all(r.passed for r in results) else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="crroots",
                                     description="roots of analytic functions in square domains")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("precompute", help="build and cache a basis (CRBASIS v1 file)")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--nodes-per-edge", type=int, required=True)
    p.add_argument("--seed", type=int, default=default_seed())
    p.add_argument("--out", required=True)
    p.add_argument("--allow-small-k", action="store_true",
                   help="demote the k >= n/2 check to a warning")
    p.set_defaults(func=cmd_precompute)

    p = sub.add_parser("roots", help="find roots on a square")
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--fn", choices=sorted(CATALOG), help="catalog function")
    grp.add_argument("--expr", help="expression in z, e.g. 'z^2+1'")
    p.add_argument("--center", type=parse_complex, required=True, metavar="RE,IM")
    p.add_argument("--half-side", type=float, required=True)
    p.add_argument("--adaptive", action="store_true")
    p.add_argument("--n-exp", type=int, default=None, help="expansion order (required for --adaptive)")
    p.add_argument("--fixed-order", action="store_true",
                   help="never escalate the non-adaptive expansion order")
    p.add_argument("--newton", type=int, default=0, choices=(0, 1, 2, 3))
    p.add_argument("--delta", type=float, default=1e-6)
    p.add_argument("--eps-exp", type=float, default=1e-15)
    p.add_argument("--eps-eig", type=float, default=1e-15)
    p.add_argument("--basis", default=None, help="CRBASIS v1 cache file")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--seed", type=int, default=default_seed())
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_roots)

    p = sub.add_parser("cond", help="condition-number experiment")
    p.add_argument("--shape", choices=("square", "triangle", "snake", "circle"), required=True)
    p.add_argument("--orders", type=_int_list, required=True, metavar="N1,N2,...")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--spacing", choices=("gauss", "equispaced"), default="gauss")
    p.add_argument("--seed", type=int, default=default_seed())
    p.set_defaults(func=cmd_cond)

    p = sub.add_parser("bench", help="run the reference-experiment checks")
    p.add_argument("--suite", choices=("paper",), default="paper")
    p.add_argument("--only", default=None, help="run a single suite member")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--seed", type=int, default=default_seed())
    p.set_defaults(func=cmd_bench)
    return parser


_ERROR_CODES = (
    (ExpansionNotConverged, 3),
    (MaxDepthExceeded, 4),
    ((QrBreakdown, NonConvergence), 5),
    (EvaluationError, 6),
    ((ExprSyntaxError, UnknownIdentifier), 7),
    (BasisBreakdown, 8),
    (CrrootsError, 9),
)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes below
        for types, code in _ERROR_CODES:
            if isinstance(exc, types):
                print(f"error: {exc}", file=sys.stderr)
                return code
        raise


if __name__ == "__main__":
    sys.exit(main())
