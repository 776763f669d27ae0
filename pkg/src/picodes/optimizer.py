"""Multi-restart minimization of the KL cost.

Every parametrization is an affine map ``table = offset + basis @ x`` from
real free parameters ``x`` to the flattened coefficient table, so the cost
is a quartic polynomial in ``x`` whose gradient is ``2 J^T r`` with ``J``
obtained from the Wirtinger derivatives of the bilinear residuals.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.sparse as sp

from .kl import CodeParams, CodewordTable, kl_system, verify_distance

log = logging.getLogger(__name__)

KINDS = ("complex-free", "real-free", "pr-restricted", "symmetry-enforced", "coefficient-fixed")


@dataclass(frozen=True)
class SearchConfig:
    restarts: int = 1000
    max_iters: int = 1_200_000
    grad_tol: float = 1e-20
    cost_tol: float = 1e-18
    rng_seed: int = 0
    method: str = "lm"
    stop_at_first: bool = False
    stall_iters: int = 100
    stall_ratio: float = 1e-2

    def __post_init__(self):
        if self.restarts < 1 or self.max_iters < 1:
            raise ValueError("restarts and max_iters must be positive")
        if self.grad_tol <= 0 or self.cost_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.method not in ("lm", "bfgs"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass
class SolveResult:
    table: CodewordTable
    cost: float
    iters: int
    converged: bool
    seed: int
    restart: int = 0
    x: np.ndarray | None = field(default=None, repr=False)


@dataclass
class SearchOutcome:
    best: SolveResult
    restarts: list  # list of SolveResult (tables kept)

    @property
    def n_converged(self) -> int:
        return sum(r.converged for r in self.restarts)

    @property
    def converged(self) -> list:
        return [r for r in self.restarts if r.converged]


class Parametrization:
    """Affine map from real parameters to a coefficient table.

    ``fixed`` pins entries of row 0 (keys are column indices, i.e. the qubit
    weight ``j`` when ``q_p = 2``).  It is honoured by ``real-free``,
    ``symmetry-enforced`` and ``coefficient-fixed`` (an alias of real-free
    with pins).
    """

    def __init__(self, kind: str, params: CodeParams, fixed: Mapping[int, complex] | None = None):
        if kind not in KINDS:
            raise ValueError(f"unknown parametrization {kind!r}; choose from {KINDS}")
        self.kind = kind
        self.params = params
        self.fixed = {int(k): v for k, v in (fixed or {}).items()}
        n, ql, N = params.n, params.q_l, params.dim
        size = ql * N
        if kind in ("pr-restricted", "symmetry-enforced"):
            if params.q_p != 2 or params.q_l != 2:
                raise ValueError(f"{kind} needs q_p = q_l = 2")
        if kind == "pr-restricted":
            if n % 2 == 0:
                raise ValueError("pr-restricted needs odd n")
            if self.fixed:
                raise ValueError("pr-restricted does not take fixed coefficients")
        if kind == "complex-free" and self.fixed:
            raise ValueError("fixed coefficients need a real parametrization")
        if kind == "coefficient-fixed" and not self.fixed:
            raise ValueError("coefficient-fixed needs at least one pinned coefficient")
        for k in self.fixed:
            if not 0 <= k < N:
                raise ValueError(f"fixed index {k} out of range")
        self.real = kind != "complex-free"
        rows, cols, vals = [], [], []
        offset = np.zeros(size)
        m = 0
        if kind == "complex-free":
            for f in range(size):
                rows += [f, f]; cols += [m, m + size]; vals += [1.0, 1j]
                m += 1
            m = 2 * size
        elif kind in ("real-free", "coefficient-fixed"):
            for f in range(size):
                if f < N and f in self.fixed:
                    offset[f] = float(np.real(self.fixed[f]))
                    continue
                rows.append(f); cols.append(m); vals.append(1.0)
                m += 1
        elif kind == "pr-restricted":
            # alpha_j free for even j, beta_j = alpha_{n-j}
            for j in range(0, n + 1, 2):
                rows += [j, N + (n - j)]; cols += [m, m]; vals += [1.0, 1.0]
                m += 1
        else:  # symmetry-enforced: beta_i = (-1)^i alpha_{n-i}
            for j in range(n + 1):
                sign = -1.0 if (n - j) % 2 else 1.0
                if j in self.fixed:
                    offset[j] = float(np.real(self.fixed[j]))
                    offset[N + n - j] = sign * offset[j]
                    continue
                rows += [j, N + (n - j)]; cols += [m, m]; vals += [1.0, sign]
                m += 1
        self.n_free = m
        dtype = complex if kind == "complex-free" else float
        self.basis = sp.csr_matrix((np.array(vals, dtype=dtype), (rows, cols)), shape=(size, m))
        self.offset = offset
        self._system = kl_system(params)

    def __repr__(self):
        return f"Parametrization({self.kind!r}, {self.params}, fixed={self.fixed})"

    def table(self, x: np.ndarray) -> CodewordTable:
        return CodewordTable(self.params, self._flat(x).reshape(self.params.q_l, -1))

    def _flat(self, x):
        return self.offset + self.basis @ np.asarray(x, dtype=float)

    def random_point(self, rng: np.random.Generator) -> np.ndarray:
        """Gaussian draw rescaled so that row 0 of the table has unit norm."""
        x = rng.standard_normal(self.n_free)
        fixed_sq = float(np.sum(np.abs(self.offset[: self.params.dim]) ** 2))
        free_part = (self.basis @ x)[: self.params.dim]
        norm = float(np.linalg.norm(free_part))
        if norm == 0.0:
            free_part = (self.basis @ x)
            norm = float(np.linalg.norm(free_part)) or 1.0
        target = math.sqrt(max(1.0 - fixed_sq, 0.0)) if fixed_sq < 1.0 else 1.0
        return x * (target / norm)

    def residuals(self, x: np.ndarray) -> np.ndarray:
        r = self._system.residuals(self._flat(x).reshape(self.params.q_l, -1))
        return r.real.copy() if self.real else np.concatenate([r.real, r.imag])

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        A = self._flat(x).reshape(self.params.q_l, -1)
        hol, anti = self._system.wirtinger(A)
        L = self.basis
        J = hol @ L + anti @ L.conj()
        J = J.toarray()
        return J.real.copy() if self.real else np.vstack([J.real, J.imag])

    def cost(self, x: np.ndarray) -> float:
        r = self.residuals(x)
        return float(r @ r)

    def cost_and_gradient(self, x: np.ndarray):
        r = self.residuals(x)
        J = self.jacobian(x)
        return float(r @ r), 2.0 * (J.T @ r)


def analytic_gradient(parametrization: Parametrization, point: np.ndarray) -> np.ndarray:
    """Exact gradient of the cost over the free real parameters."""
    return parametrization.cost_and_gradient(point)[1]


def _levenberg_marquardt(par: Parametrization, x0: np.ndarray, config: SearchConfig):
    x = np.array(x0, dtype=float)
    r = par.residuals(x)
    f = float(r @ r)
    lam = 1e-3
    history = [f]
    it = 0
    while it < config.max_iters:
        if f < config.cost_tol:
            break
        J = par.jacobian(x)
        g = J.T @ r
        if 2.0 * np.linalg.norm(g) < config.grad_tol:
            break
        m, nfree = J.shape
        wide = m < nfree
        M = J @ J.T if wide else J.T @ J
        diag = np.diag_indices_from(M)
        base = M[diag].copy()
        accepted = False
        while not accepted:
            it += 1
            M[diag] = base + lam
            try:
                factor = scipy.linalg.cho_factor(M, check_finite=False)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            if wide:
                step = -J.T @ scipy.linalg.cho_solve(factor, r, check_finite=False)
            else:
                step = -scipy.linalg.cho_solve(factor, g, check_finite=False)
            x_new = x + step
            r_new = par.residuals(x_new)
            f_new = float(r_new @ r_new)
            if f_new < f:
                x, r, f = x_new, r_new, f_new
                lam = max(lam / 3.0, 1e-15)
                accepted = True
            else:
                lam *= 4.0
                if lam > 1e16 or it >= config.max_iters:
                    return x, f, it
        history.append(f)
        # accepted steps only; a run that loses less than stall_ratio of its
        # cost over stall_iters accepted steps is treated as stuck
        if len(history) > config.stall_iters and f > (1.0 - config.stall_ratio) * history[-1 - config.stall_iters]:
            break
    return x, f, it


def _bfgs(par: Parametrization, x0: np.ndarray, config: SearchConfig):
    res = scipy.optimize.minimize(
        par.cost_and_gradient,
        x0,
        jac=True,
        method="BFGS",
        options={"maxiter": config.max_iters, "gtol": config.grad_tol},
    )
    return res.x, float(res.fun), int(res.nit)


def restart_seed(rng_seed: int, restart: int) -> int:
    return int(np.random.SeedSequence([rng_seed, restart]).generate_state(1, np.uint64)[0])


def solve_once(par: Parametrization, config: SearchConfig, restart: int) -> SolveResult:
    seed = restart_seed(config.rng_seed, restart)
    rng = np.random.default_rng(seed)
    x0 = par.random_point(rng)
    runner = _levenberg_marquardt if config.method == "lm" else _bfgs
    x, f, iters = runner(par, x0, config)
    return SolveResult(par.table(x), f, iters, f < config.cost_tol, seed, restart, x)


def refine(par: Parametrization, result: SolveResult, max_iters: int = 500) -> SolveResult:
    """Continue LM from a result's point until the cost stops improving.

    Converged runs stop at ``cost_tol``; this drives residuals down to
    rounding level so the table can be reused under tighter tolerances.
    """
    if result.x is None:
        raise ValueError("result carries no parameter vector")
    cfg = SearchConfig(restarts=1, max_iters=max_iters, cost_tol=1e-300, grad_tol=1e-300, stall_iters=10)
    x, f, iters = _levenberg_marquardt(par, result.x, cfg)
    if f > result.cost:
        return result
    return SolveResult(par.table(x), f, result.iters + iters, result.converged, result.seed, result.restart, x)


def _solve_batch(args):
    par, config, ks = args
    return [solve_once(par, config, k) for k in ks]


def _restart_batches(par, config, workers):
    if workers <= 1:
        for k in range(config.restarts):
            yield [solve_once(par, config, k)]
        return
    from concurrent.futures import ProcessPoolExecutor

    # batches come back in restart order, so aggregation is independent of scheduling
    ks = list(range(config.restarts))
    size = max(1, min(16, len(ks) // (4 * workers) or 1))
    chunks = [ks[i:i + size] for i in range(0, len(ks), size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(_solve_batch, [(par, config, c) for c in chunks])


def minimize(par: Parametrization, config: SearchConfig, on_restart=None, workers: int = 1) -> SearchOutcome:
    """Independent restarts; the best result is the lowest cost.

    ``on_restart`` is called with each SolveResult in restart order.
    """
    results = []
    done = False
    for batch in _restart_batches(par, config, workers):
        for res in batch:
            results.append(res)
            if on_restart is not None:
                on_restart(res)
            if res.converged and config.stop_at_first:
                done = True
                break
        if done:
            break
    best = min(results, key=lambda r: (r.cost, r.restart))
    return SearchOutcome(best, results)


@dataclass
class MinNRow:
    n: int
    found: bool
    best_cost: float
    n_converged: int
    restarts_run: int
    note: str = ""


def singleton_bound(t: int) -> int:
    """Smallest n allowed by the quantum Singleton bound for one logical qudit."""
    return 4 * t + 1


def find_min_n(template: CodeParams, kind: str, config: SearchConfig, n_range: Iterable[int],
               full: bool = False, fixed: Mapping[int, complex] | None = None, on_restart=None,
               workers: int = 1):
    """Minimize for each n ascending; stop at the first n with a converged restart
    unless ``full``.  Returns ``(n_min or None, rows)``."""
    rows = []
    n_min = None
    ns = list(n_range)
    if not ns:
        raise ValueError("empty n range")
    for n in ns:
        if n < singleton_bound(template.t):
            rows.append(MinNRow(n, False, math.inf, 0, 0, "below Singleton bound"))
            continue
        if kind == "pr-restricted" and n % 2 == 0:
            rows.append(MinNRow(n, False, math.inf, 0, 0, "even n outside PR family"))
            continue
        par = Parametrization(kind, replace(template, n=n), fixed)
        outcome = minimize(par, config, on_restart=on_restart, workers=workers)
        found = outcome.n_converged > 0
        rows.append(MinNRow(n, found, outcome.best.cost, outcome.n_converged, len(outcome.restarts)))
        log.info("n=%d found=%s best=%.3e", n, found, outcome.best.cost)
        if found and n_min is None:
            n_min = n
            if not full:
                break
    return n_min, rows


def _sign_images(i: int, j: int):
    # global row sign and the parity map alpha_k -> (-1)^k alpha_k both preserve the KL cost
    out = {(1, 1), (-1, -1)}
    pi, pj = (-1) ** i, (-1) ** j
    out |= {(pi, pj), (-pi, -pj)}
    return out


@dataclass
class GridPoint:
    a_i: float
    a_j: float
    cost: float
    converged: bool
    derived: bool = False  # filled in by symmetry rather than minimized


def grid_scan(n: int, t: int, pair: tuple, step: float, config: SearchConfig,
              points: Sequence[tuple] | None = None) -> list:
    """Scan fixed values of row-0 entries ``pair`` on a grid inside the unit disc.

    Only the quadrants that the sign symmetries cannot reach are minimized;
    the rest are copied from their images.
    """
    i, j = pair
    if not 0 <= i < j <= n:
        raise ValueError("need 0 <= i < j <= n")
    if step <= 0:
        raise ValueError("step must be positive")
    params = CodeParams(n, 2, 2, t)
    if points is None:
        k = int(math.floor(1.0 / step + 1e-9))
        grid = [round(s * step, 12) for s in range(k + 1)]
        points = [(a, b) for a in grid for b in grid]
    images = _sign_images(i, j)
    quadrants = [(1, 1)]
    if (1, -1) not in images:
        quadrants.append((1, -1))
    out = []
    for a, b in points:
        if a * a + b * b > 1.0 + 1e-12:
            continue
        for sa, sb in quadrants:
            par = Parametrization("coefficient-fixed", params, {i: sa * a, j: sb * b})
            outcome = minimize(par, config)
            base = GridPoint(sa * a, sb * b, outcome.best.cost, outcome.best.converged)
            out.append(base)
            seen = {(base.a_i, base.a_j)}
            for ui, uj in images:
                key = (ui * base.a_i, uj * base.a_j)
                if key in seen:
                    continue
                seen.add(key)
                out.append(GridPoint(key[0], key[1], base.cost, base.converged, derived=True))
    return out


@dataclass
class SymmetryReport:
    mirror: bool
    phase_flip: bool
    mirror_dev: np.ndarray
    phase_dev: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    sign: int  # s in beta_i = s (-1)^i alpha_{n-i}


def _first_sign(v: np.ndarray, tol: float) -> float:
    nz = np.flatnonzero(np.abs(v) > tol)
    return 1.0 if nz.size == 0 or v[nz[0]] > 0 else -1.0


def symmetry_check(table: CodewordTable, tol: float = 1e-8) -> SymmetryReport:
    """Mirror and phase-flip symmetry of a real qubit code."""
    p = table.params
    if p.q_p != 2 or p.q_l != 2:
        raise ValueError("symmetry check needs q_p = q_l = 2")
    A = table.coeffs
    if np.max(np.abs(A.imag)) > tol:
        raise ValueError("symmetry check needs a real table")
    alpha = A[0].real.copy()
    beta = A[1].real.copy()
    alpha *= _first_sign(alpha, tol)
    beta *= _first_sign(beta, tol)
    mirrored = alpha[::-1]
    mirror_dev = np.abs(np.abs(beta) - np.abs(mirrored))
    parity = (-1.0) ** np.arange(p.n + 1)
    devs = {s: np.abs(beta - s * parity * mirrored) for s in (1, -1)}
    sign = min(devs, key=lambda s: devs[s].max())
    return SymmetryReport(bool(mirror_dev.max() < tol), bool(devs[sign].max() < tol), mirror_dev,
                          devs[sign], alpha, beta, sign)


def canonical_signs(A: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Flip each row so that its first non-negligible entry has positive real part."""
    out = np.array(A, dtype=complex)
    for row in out:
        nz = np.flatnonzero(np.abs(row) > tol)
        if nz.size and row[nz[0]].real < 0:
            row *= -1
    return out


@dataclass
class Clusters:
    count: int
    representatives: list
    labels: list


def cluster_solutions(results: Sequence, tol: float = 1e-6, canonicalize: bool = False) -> Clusters:
    """Group tables whose coefficients agree within ``tol`` (Euclidean).

    Sign-flipped rows count as distinct solutions unless ``canonicalize``
    is set, in which case every row is first brought to canonical sign.
    """
    tables = [r.table if isinstance(r, SolveResult) else r for r in results]
    if tables and len({t.params for t in tables}) > 1:
        raise ValueError("all results must share CodeParams")
    reps, vecs, labels = [], [], []
    for tab in tables:
        v = (canonical_signs(tab.coeffs) if canonicalize else np.asarray(tab.coeffs, dtype=complex)).ravel()
        for k, w in enumerate(vecs):
            if np.linalg.norm(v - w) < tol:
                labels.append(k)
                break
        else:
            labels.append(len(vecs))
            vecs.append(v)
            reps.append(tab)
    return Clusters(len(reps), reps, labels)


RESTART_FIELDS = ("n", "t", "restart", "cost", "iters")


def restart_rows(outcome: SearchOutcome) -> list:
    return [
        {"n": r.table.params.n, "t": r.table.params.t, "restart": r.restart, "cost": r.cost, "iters": r.iters}
        for r in outcome.restarts
    ]
