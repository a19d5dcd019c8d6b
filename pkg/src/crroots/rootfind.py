"""Non-adaptive and adaptive rootfinding on squares.

Both algorithms share one pipeline per square: map the square to the
canonical domain, sample the function at the boundary nodes, solve least
squares for expansion coefficients, estimate the tail error |c_n|/||c||,
build colleague generators, run the structured QR, keep eigenvalues inside
the delta-extended canonical square, and map them back.  The adaptive
version splits any square whose tail error exceeds eps_exp into four
congruent children (quadrants ordered SW, SE, NE, NW) until convergence or
the depth cap, then deduplicates roots found twice in neighboring
delta-overlaps.

The accuracy metric eta(z) = |f(z)/f'(z)| is the Newton-step size at the
computed root; it is attached to every reported root.  Newton refinement is
off by default (reported tables come from the raw eigenvalues) and never
accepts an iterate with larger eta.
"""

import os
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .basis import BasisProvider, least_squares_coeffs, least_squares_coeffs_many
from .colleague import colleague_from_coeffs
from .complex_core import stable_norm
from .errors import (
    DegenerateLeadingCoefficient,
    EvaluationError,
    ExpansionNotConverged,
    MaxDepthExceeded,
    NonConvergence,
    QrBreakdown,
)
from .structured_qr import (
    DEFAULT_ITER_CAP,
    QrDiagnostics,
    batch_colleague_roots,
    qr_eigenvalues,
)

DEFAULT_SEED = 12345
N_MAX = 200

# child quadrant centers relative to the parent, in units of the parent half-side
_CHILD_OFFSETS = np.array([-0.5 - 0.5j, 0.5 - 0.5j, 0.5 + 0.5j, -0.5 + 0.5j])


def default_seed():
    env = os.environ.get("CRROOTS_SEED")
    return int(env) if env else DEFAULT_SEED


@dataclass(frozen=True)
class SquareDomain:
    """Square centered at ``center`` with half side ``half_side``."""

    center: complex
    half_side: float

    def __post_init__(self):
        if not (self.half_side > 0 and np.isfinite(self.half_side)):
            raise ValueError("half_side must be positive and finite")


@dataclass
class RootfindOptions:
    eps_exp: float = 1e-15
    eps_eig: float = 1e-15
    delta: float = 1e-6
    n_exp: Optional[int] = None
    newton_iters: int = 0
    max_depth: int = 20
    seed: int = DEFAULT_SEED
    escalate: bool = True
    iter_cap: int = DEFAULT_ITER_CAP
    threads: Optional[int] = None

    def __post_init__(self):
        if min(self.eps_exp, self.eps_eig, self.delta) <= 0:
            raise ValueError("tolerances must be positive")
        if self.newton_iters not in (0, 1, 2, 3):
            raise ValueError("newton_iters must be in 0..3")

    @property
    def thread_count(self):
        return self.threads if self.threads else (os.cpu_count() or 1)


@dataclass(frozen=True)
class AnalyticFn:
    """Function with derivative: eval_pair(z) -> (f(z), f'(z)) elementwise.

    eval_value is an optional cheaper values-only path used for boundary
    sampling.  The evaluator must be deterministic; poles surface as
    non-finite entries and are handled by callers.
    """

    eval_pair: Callable
    eval_value: Optional[Callable] = None
    name: str = "f"

    def pair(self, z):
        v, d = self.eval_pair(np.asarray(z, dtype=np.complex128))
        return np.asarray(v, dtype=np.complex128), np.asarray(d, dtype=np.complex128)

    def value(self, z):
        zz = np.asarray(z, dtype=np.complex128)
        if self.eval_value is not None:
            return np.asarray(self.eval_value(zz), dtype=np.complex128)
        return self.pair(zz)[0]

    @classmethod
    def from_callables(cls, f, df, name="f"):
        return cls(eval_pair=lambda z: (f(z), df(z)), eval_value=f, name=name)


@dataclass
class RootReport:
    value: complex
    eta: float
    square_id: int = 0
    depth: int = 0
    refined: bool = False
    duplicate_of: Optional[int] = None


@dataclass
class SubdivisionTree:
    """Flat quadtree: children of square i partition it exactly."""

    centers: np.ndarray
    half_sides: np.ndarray
    depths: np.ndarray
    parents: np.ndarray
    converged: np.ndarray

    @property
    def n_squares(self):
        return self.centers.shape[0]

    @property
    def n_levels(self):
        if not self.converged.any():
            return int(self.depths.max()) + 1
        return int(self.depths[self.converged].max()) + 1


@dataclass
class RunDiagnostics:
    n_eigs: int = 0
    n_levels: int = 1
    rotations: int = 0
    max_rotation: float = 0.0
    corrections: int = 0
    q_norm: float = 0.0
    expansion_order: int = 0
    expansion_error: float = 0.0
    retries: int = 0
    wall_time_seconds: float = 0.0


@dataclass
class RootfindOutcome:
    roots: list
    diagnostics: RunDiagnostics
    tree: Optional[SubdivisionTree] = None


def expand_on_square(f, domain, basis, bm):
    """Expansion coefficients of f scaled to the canonical square, plus tail error.

    Samples g_i = sqrt(w_i) * f(l z_i + z0) at the boundary nodes, solves the
    least squares G c ~ g, and returns (c, |c_n|/||c||).  Raises
    EvaluationError (with the node index) on a non-finite sample.
    """
    pts = domain.center + domain.half_side * basis.boundary.z
    vals = f.value(pts)
    finite = np.isfinite(vals.real) & np.isfinite(vals.imag)
    if not finite.all():
        idx = int(np.argmin(finite))
        raise EvaluationError(complex(pts[idx]), index=idx)
    g = np.sqrt(basis.boundary.w_quad) * vals
    c = least_squares_coeffs(bm, g)
    err = _tail_error(c)
    return c, err


def _tail_error(c):
    """|c_n| / ||c||, guarded against overflow and the all-zero vector."""
    peak = float(np.abs(c).max())
    if peak == 0.0:
        return 0.0
    return float((abs(c[-1]) / peak) / stable_norm(c / peak))


def _eta(f, roots):
    """Newton-step size |f/f'| per root; exact zeros give 0, stationary points inf."""
    if len(roots) == 0:
        return np.empty(0, dtype=np.float64)
    v, d = f.pair(np.asarray(roots, dtype=np.complex128))
    with np.errstate(divide="ignore", invalid="ignore"):
        eta = np.abs(v / d)
    eta = np.where(np.abs(v) == 0.0, 0.0, eta)
    return np.where(np.isnan(eta), np.inf, eta)


def newton_refine(f, r, iters):
    """Up to ``iters`` guarded Newton steps from r; never returns a worse eta.

    Returns (refined_root, flag) where flag is True when at least one step
    was accepted.  A vanishing derivative stops the iteration.
    """
    if iters not in (1, 2, 3):
        raise ValueError("iters must be in 1..3")
    out, eta, moved = _newton_refine_many(f, np.array([r], dtype=np.complex128), iters)
    return complex(out[0]), bool(moved[0])


def _newton_refine_many(f, roots, iters):
    cur = roots.astype(np.complex128).copy()
    eta_cur = _eta(f, cur)
    moved = np.zeros(cur.shape, dtype=bool)
    for _ in range(iters):
        v, d = f.pair(cur)
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = cur - v / d
        ok = np.isfinite(cand.real) & np.isfinite(cand.imag)
        if not ok.any():
            break
        eta_cand = np.where(ok, _eta(f, np.where(ok, cand, cur)), np.inf)
        better = ok & (eta_cand <= eta_cur)
        cur = np.where(better, cand, cur)
        eta_cur = np.where(better, eta_cand, eta_cur)
        moved |= better
        if not better.any():
            break
    return cur, eta_cur, moved


def dedup_roots(roots, scale):
    """Merge duplicates found by neighboring squares; keep the smaller-eta copy.

    Two reports merge when they come from different squares and lie within
    max(10 * max(eta_a, eta_b), 1e-12 * scale) of each other.  Same-square
    pairs never merge: those are genuine multiple or clustered roots, which
    agree to far fewer digits than duplicates do.  Dropped reports get
    ``duplicate_of`` set to the input index of their survivor.
    """
    if not roots:
        return []
    order = sorted(
        range(len(roots)),
        key=lambda k: (roots[k].eta, roots[k].square_id, roots[k].value.real, roots[k].value.imag),
    )
    kept = []
    kept_vals = np.empty(len(roots), dtype=np.complex128)
    kept_eta = np.empty(len(roots), dtype=np.float64)
    kept_sq = np.empty(len(roots), dtype=np.int64)
    nkept = 0
    floor = 1e-12 * scale
    for idx in order:
        r = roots[idx]
        if nkept:
            dist = np.abs(kept_vals[:nkept] - r.value)
            tol = np.maximum(10.0 * np.maximum(kept_eta[:nkept], r.eta), floor)
            hit = (dist <= tol) & (kept_sq[:nkept] != r.square_id)
            if hit.any():
                r.duplicate_of = kept[int(np.argmax(hit))]
                continue
        kept.append(idx)
        kept_vals[nkept] = r.value
        kept_eta[nkept] = r.eta
        kept_sq[nkept] = r.square_id
        nkept += 1
    kept.sort()
    return [roots[k] for k in kept]


def _finish_reports(f, values, square_ids, depths, opts):
    """Attach eta (and optional Newton refinement) to mapped-back roots."""
    values = np.asarray(values, dtype=np.complex128)
    refined = np.zeros(values.shape, dtype=bool)
    if opts.newton_iters and values.size:
        values, eta, refined = _newton_refine_many(f, values, opts.newton_iters)
    else:
        eta = _eta(f, values)
    return [
        RootReport(
            value=complex(v),
            eta=float(e),
            square_id=int(s),
            depth=int(dp),
            refined=bool(rf),
        )
        for v, e, s, dp, rf in zip(values, eta, square_ids, depths, refined)
    ]


def _stage2_single(c, basis, opts):
    """Colleague + QR + delta filter for one coefficient vector, canonical coords."""
    try:
        gens = colleague_from_coeffs(c, basis)
    except DegenerateLeadingCoefficient:
        if np.abs(c).max() == 0.0:
            raise
        return np.empty(0, dtype=np.complex128), None, 0.0
    lam, diag = qr_eigenvalues(gens, eps=opts.eps_eig, iter_cap=opts.iter_cap)
    keep = (np.abs(lam.real) < 1.0 + opts.delta) & (np.abs(lam.imag) < 1.0 + opts.delta)
    return lam[keep], diag, gens.q_norm


def roots_nonadaptive(f, domain, opts=None, provider=None):
    """All roots of f in the delta-extended square, by one global expansion.

    The expansion order starts at opts.n_exp (default 100) and doubles up to
    200 while the tail error exceeds eps_exp, unless ``opts.escalate`` is
    off (fixed-order mode, used to reproduce reference tables).  Raises
    ExpansionNotConverged when the ladder is exhausted; a QR breakdown is
    retried once with a fresh-seed basis before being re-raised.
    """
    t0 = time.perf_counter()
    opts = opts or RootfindOptions()
    provider = provider or BasisProvider(opts.seed)
    n = opts.n_exp or 100
    if n > N_MAX:
        raise ValueError(f"expansion order {n} exceeds the maximum {N_MAX}")
    while True:
        basis, bm = provider.get(n)
        c, err = expand_on_square(f, domain, basis, bm)
        if err <= opts.eps_exp or not opts.escalate:
            break
        if n >= N_MAX:
            raise ExpansionNotConverged(n, err)
        n = min(2 * n, N_MAX)
    retries = 0
    try:
        lam, diag, q_norm = _stage2_single(c, basis, opts)
    except QrBreakdown:
        retries = 1
        basis, bm = provider.get(n, variant=1)
        c, err = expand_on_square(f, domain, basis, bm)
        lam, diag, q_norm = _stage2_single(c, basis, opts)
    values = domain.half_side * lam + domain.center
    reports = _finish_reports(f, values, np.zeros(len(values)), np.zeros(len(values)), opts)
    diagnostics = RunDiagnostics(
        n_eigs=1,
        n_levels=1,
        rotations=diag.rotations if diag else 0,
        max_rotation=diag.max_rotation_size if diag else 0.0,
        corrections=diag.corrections if diag else 0,
        q_norm=q_norm,
        expansion_order=n,
        expansion_error=err,
        retries=retries,
        wall_time_seconds=time.perf_counter() - t0,
    )
    return RootfindOutcome(roots=reports, diagnostics=diagnostics)


_BATCH_LIMIT = 4096


def roots_adaptive(f, domain, opts=None, provider=None):
    """All roots of f in the square by quadtree subdivision (fixed order n_exp).

    Stage 1 expands every pending square (level by level, batched) and
    splits non-converged ones into four children until eps_exp is met or
    max_depth is hit (MaxDepthExceeded lists the offenders).  Stage 2 runs
    the colleague/QR pipeline on every converged square, maps roots back,
    and removes duplicates from neighboring delta-overlaps.  The returned
    outcome carries the full subdivision tree.
    """
    t0 = time.perf_counter()
    opts = opts or RootfindOptions()
    if opts.n_exp is None:
        raise ValueError("adaptive mode requires n_exp")
    provider = provider or BasisProvider(opts.seed)
    basis, bm = provider.get(opts.n_exp)
    n = opts.n_exp
    m = basis.boundary.m
    nodes = basis.boundary.z
    sqw = np.sqrt(basis.boundary.w_quad)

    centers = [complex(domain.center)]
    halves = [float(domain.half_side)]
    depths = [0]
    parents = [-1]
    conv_ids = []
    conv_rows = []
    offenders = []
    pending = [0]
    while pending:
        batch = pending[:_BATCH_LIMIT]
        pending = pending[_BATCH_LIMIT:]
        ctr = np.array([centers[i] for i in batch])
        hlf = np.array([halves[i] for i in batch])
        pts = ctr[:, None] + hlf[:, None] * nodes[None, :]
        vals = f.value(pts)
        finite = np.isfinite(vals.real) & np.isfinite(vals.imag)
        if not finite.all():
            row, col = np.unravel_index(int(np.argmin(finite)), finite.shape)
            sid = batch[row]
            raise EvaluationError(
                complex(pts[row, col]),
                index=int(col),
                message=f"non-finite sample on square {sid} at z = {pts[row, col]} (node {col})",
            )
        coeffs = least_squares_coeffs_many(bm, (sqw[None, :] * vals).T)
        peaks = np.abs(coeffs).max(axis=0)
        safe = np.where(peaks > 0.0, peaks, 1.0)
        unrms = stable_norm(coeffs / safe, axis=0)
        errs = np.where(peaks > 0.0, (np.abs(coeffs[-1, :]) / safe) / unrms, 0.0)
        for idx, sid in enumerate(batch):
            if errs[idx] <= opts.eps_exp:
                conv_ids.append(sid)
                conv_rows.append(coeffs[:, idx])
            elif depths[sid] >= opts.max_depth:
                offenders.append((sid, centers[sid], halves[sid]))
            else:
                h = halves[sid]
                for off in _CHILD_OFFSETS:
                    pending.append(len(centers))
                    centers.append(centers[sid] + h * off)
                    halves.append(h / 2.0)
                    depths.append(depths[sid] + 1)
                    parents.append(sid)
    if offenders:
        raise MaxDepthExceeded(offenders)

    tree = SubdivisionTree(
        centers=np.array(centers, dtype=np.complex128),
        half_sides=np.array(halves, dtype=np.float64),
        depths=np.array(depths, dtype=np.int64),
        parents=np.array(parents, dtype=np.int64),
        converged=np.zeros(len(centers), dtype=bool),
    )
    tree.converged[conv_ids] = True

    values = []
    val_sids = []
    n_eigs = 0
    retries = 0
    q_norm_max = 0.0
    diag_total = QrDiagnostics()
    if conv_rows:
        coeff_mat = np.vstack(conv_rows)
        roots_pad, counts, kinds, indices, diag_total, q_norm_max = batch_colleague_roots(
            basis, coeff_mat, eps=opts.eps_eig, delta=opts.delta, iter_cap=opts.iter_cap,
            threads=opts.thread_count,
        )
        for row, sid in enumerate(conv_ids):
            kind = kinds[row]
            if kind == 2:
                raise DegenerateLeadingCoefficient(
                    f"square {sid}: expansion is identically zero; f vanishes on its boundary"
                )
            if kind in (3, 4):
                # single retry with a fresh-seed basis, per-square
                retries += 1
                basis_v, bm_v = provider.get(n, variant=1)
                dom_v = SquareDomain(centers[sid], halves[sid])
                c_v, _ = expand_on_square(f, dom_v, basis_v, bm_v)
                try:
                    lam, diag, qn = _stage2_single(c_v, basis_v, opts)
                except (QrBreakdown, NonConvergence) as exc:
                    exc.args = (f"square {sid}: {exc}",)
                    raise
                if diag is not None:
                    diag_total.merge(diag)
                    n_eigs += 1
                q_norm_max = max(q_norm_max, qn)
                vals_back = halves[sid] * lam + centers[sid]
                values.extend(vals_back.tolist())
                val_sids.extend([sid] * len(vals_back))
                continue
            if kind == 0:
                n_eigs += 1
                cnt = int(counts[row])
                if cnt:
                    vals_back = halves[sid] * roots_pad[row, :cnt] + centers[sid]
                    values.extend(vals_back.tolist())
                    val_sids.extend([sid] * cnt)

    val_depths = [depths[s] for s in val_sids]
    reports = _finish_reports(f, values, val_sids, val_depths, opts)
    reports = dedup_roots(reports, scale=domain.half_side)
    diagnostics = RunDiagnostics(
        n_eigs=n_eigs,
        n_levels=tree.n_levels,
        rotations=diag_total.rotations,
        max_rotation=diag_total.max_rotation_size,
        corrections=diag_total.corrections,
        q_norm=q_norm_max,
        expansion_order=n,
        expansion_error=float("nan"),
        retries=retries,
        wall_time_seconds=time.perf_counter() - t0,
    )
    return RootfindOutcome(roots=reports, diagnostics=diagnostics, tree=tree)
