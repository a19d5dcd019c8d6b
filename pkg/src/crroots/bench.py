"""Desk-scale benchmark: the five catalog functions against their known answers.

Each criterion reruns one of the reference experiments (same orders, same
domains) and checks root counts, root locations where they are analytically
known, eta residuals, rank-one norms, and subdivision statistics, at the
tolerances pinned in the acceptance suite.  Outcomes are cached per
function/order so the winding-number cross-check can reuse them.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisProvider
from .complex_core import U
from .frontend import analytic_fn
from .oracle import argument_principle_count, pair_values
from .rootfind import RootfindOptions, SquareDomain, roots_adaptive, roots_nonadaptive

COSH_ROOTS = np.array([1j / 3, -1j / 3, 1j, -1j])
POLY_ROOTS = np.array([0.5, 0.9, -0.8, 0.7j, -0.1j])
MULT_ROOTS = ((0.5, 5), (0.9, 3), (-0.8, 1), (0.7j, 1), (-0.1j, 2))
ENTIRE_ROOTS = np.array([k / 3.0 for k in range(-45, 106) if k != 6])

UNIT_SQUARE = SquareDomain(0.0 + 0.0j, 1.0)
CLUST_SQUARE = SquareDomain(0.0 + 0.0j, 1.375)
ENTIRE_SQUARE = SquareDomain(10.0 - 20.0j, 25.0)


@dataclass
class CriterionResult:
    name: str
    passed: bool
    details: str
    wall_time_seconds: float

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name}: {self.details} ({self.wall_time_seconds:.2f}s)"


@dataclass
class BenchContext:
    """Shared basis cache and memoized experiment outcomes."""

    seed: int = 12345
    provider: BasisProvider = None
    _runs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.provider is None:
            self.provider = BasisProvider(self.seed)

    def nonadaptive(self, fn_name, order, domain=UNIT_SQUARE):
        key = (fn_name, order, "fixed")
        if key not in self._runs:
            f = analytic_fn(fn_name)
            opts = RootfindOptions(n_exp=order, escalate=False, seed=self.seed)
            self._runs[key] = roots_nonadaptive(f, domain, opts, provider=self.provider)
        return self._runs[key]

    def adaptive(self, fn_name, order, domain):
        key = (fn_name, order, "adaptive")
        if key not in self._runs:
            f = analytic_fn(fn_name)
            opts = RootfindOptions(n_exp=order, seed=self.seed)
            self._runs[key] = roots_adaptive(f, domain, opts, provider=self.provider)
        return self._runs[key]


def _located(reports):
    return np.array([r.value for r in reports], dtype=np.complex128)


def _max_eta(reports):
    return max((r.eta for r in reports), default=0.0)


def crit_f_cosh(ctx):
    """4 roots at {+-i/3, +-i} to 1e-9, eta <= 1e-9, reported ||q|| >= 1e15."""
    t0 = time.perf_counter()
    parts = []
    ok = True
    for order in (80, 100):
        out = ctx.nonadaptive("f_cosh", order)
        vals = _located(out.roots)
        n_ok = vals.shape[0] == 4
        if n_ok:
            _, diffs = pair_values(vals, COSH_ROOTS)
            loc_err = float(diffs.max())
        else:
            loc_err = np.inf
        eta = _max_eta(out.roots)
        qn = out.diagnostics.q_norm
        good = n_ok and loc_err <= 1e-9 and eta <= 1e-9 and qn >= 1e15
        ok &= good
        parts.append(
            f"n={order}: {vals.shape[0]} roots, locerr {loc_err:.1e}, eta {eta:.1e}, ||q|| {qn:.1e}"
        )
    return CriterionResult("f_cosh table", ok, "; ".join(parts), time.perf_counter() - t0)


def crit_f_poly(ctx):
    """5 roots to 1e-10 and eta <= 1e-11 at n = 5, 6, 50, 100."""
    t0 = time.perf_counter()
    parts = []
    ok = True
    for order in (5, 6, 50, 100):
        out = ctx.nonadaptive("f_poly", order)
        vals = _located(out.roots)
        n_ok = vals.shape[0] == 5
        if n_ok:
            _, diffs = pair_values(vals, POLY_ROOTS)
            loc_err = float(diffs.max())
        else:
            loc_err = np.inf
        eta = _max_eta(out.roots)
        good = n_ok and loc_err <= 1e-10 and eta <= 1e-11
        ok &= good
        parts.append(f"n={order}: {vals.shape[0]} roots, locerr {loc_err:.1e}, eta {eta:.1e}")
    return CriterionResult("f_poly table", ok, "; ".join(parts), time.perf_counter() - t0)


def crit_f_mult(ctx):
    """12 roots; multiplicity-m clusters within 100 * u^(1/m) of the true root."""
    t0 = time.perf_counter()
    out = ctx.nonadaptive("f_mult", 30)
    vals = _located(out.roots)
    ok = vals.shape[0] == 12
    parts = [f"{vals.shape[0]} roots"]
    if ok:
        true_pts = np.array([r for r, _ in MULT_ROOTS])
        owner = np.argmin(np.abs(vals[:, None] - true_pts[None, :]), axis=1)
        for t, (root, m) in enumerate(MULT_ROOTS):
            mine = vals[owner == t]
            tol = 100.0 * U ** (1.0 / m)
            worst = float(np.abs(mine - root).max()) if mine.size else np.inf
            good = mine.shape[0] == m and worst <= tol
            ok &= good
            parts.append(f"m={m}@{root}: {mine.shape[0]} roots, err {worst:.1e} (tol {tol:.1e})")
    return CriterionResult("f_mult clusters", ok, "; ".join(parts), time.perf_counter() - t0)


def crit_f_clust(ctx):
    """565 unique roots; eta <= 1e-12; levels/eigensolves near the reference run."""
    t0 = time.perf_counter()
    parts = []
    ok = True
    for order, lv_range, eigs_ref in ((30, (14, 18), 76864), (45, (12, 16), 8836)):
        out = ctx.adaptive("f_clust", order, CLUST_SQUARE)
        n = len(out.roots)
        eta = _max_eta(out.roots)
        lv = out.diagnostics.n_levels
        ne = out.diagnostics.n_eigs
        good = (
            n == 565
            and (eta <= 1e-12 if order == 30 else True)
            and lv_range[0] <= lv <= lv_range[1]
            and eigs_ref / 2 <= ne <= eigs_ref * 2
        )
        ok &= good
        parts.append(f"n_exp={order}: {n} roots, eta {eta:.1e}, {lv} levels, {ne} eigs")
    return CriterionResult("f_clust adaptive", ok, "; ".join(parts), time.perf_counter() - t0)


def crit_f_entire(ctx):
    """150 roots on the k/3 grid (k = 6 excluded) to 1e-10; eta <= 1e-11."""
    t0 = time.perf_counter()
    out = ctx.adaptive("f_entire", 30, ENTIRE_SQUARE)
    vals = _located(out.roots)
    n_ok = vals.shape[0] == 150
    if n_ok:
        _, diffs = pair_values(vals, ENTIRE_ROOTS)
        loc_err = float(diffs.max())
    else:
        loc_err = np.inf
    eta = _max_eta(out.roots)
    ne = out.diagnostics.n_eigs
    ok = n_ok and loc_err <= 1e-10 and eta <= 1e-11 and 16384 / 2 <= ne <= 16384 * 2
    details = (
        f"{vals.shape[0]} roots, locerr {loc_err:.1e}, eta {eta:.1e}, "
        f"{out.diagnostics.n_levels} levels, {ne} eigs"
    )
    return CriterionResult("f_entire adaptive", ok, details, time.perf_counter() - t0)


def crit_winding(ctx):
    """Winding counts match reported root counts (multiplicity included)."""
    t0 = time.perf_counter()
    # contours are pushed off the exactly-on-boundary roots (+-i for f_cosh,
    # -15 and 35 for f_entire) by margins that stay clear of the next root out
    cases = [
        ("f_cosh", ctx.nonadaptive("f_cosh", 100), SquareDomain(0.0 + 0.0j, 1.1)),
        ("f_poly", ctx.nonadaptive("f_poly", 100), SquareDomain(0.0 + 0.0j, 1.05)),
        ("f_mult", ctx.nonadaptive("f_mult", 30), SquareDomain(0.0 + 0.0j, 1.05)),
        ("f_entire", ctx.adaptive("f_entire", 30, ENTIRE_SQUARE),
         SquareDomain(10.0 - 20.0j, 25.0 + 1.0 / 6.0)),
    ]
    ok = True
    parts = []
    for name, out, contour in cases:
        count = argument_principle_count(analytic_fn(name), contour, points_per_edge=64)
        n = len(out.roots)
        good = count == n
        ok &= good
        parts.append(f"{name}: winding {count} vs reported {n}")
    return CriterionResult("argument-principle cross-check", ok, "; ".join(parts),
                           time.perf_counter() - t0)


SUITE = {
    "f_cosh": crit_f_cosh,
    "f_poly": crit_f_poly,
    "f_mult": crit_f_mult,
    "f_clust": crit_f_clust,
    "f_entire": crit_f_entire,
    "winding": crit_winding,
}


def run_suite(only=None, seed=12345):
    """Run the paper-table criteria; returns a list of CriterionResult."""
    ctx = BenchContext(seed=seed)
    names = [only] if only else list(SUITE)
    results = []
    for name in names:
        if name not in SUITE:
            raise KeyError(f"unknown suite member {name!r}; choose from {sorted(SUITE)}")
        results.append(SUITE[name](ctx))
    return results
