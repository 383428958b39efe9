"""Discretization and solution of the thin obstacle variational inequality.

Conforming multilinear (Q1) finite elements on the uniform grid, with
coefficients sampled at element midpoints (first-order consistent, which
is all a C^{0,alpha} coefficient supports).  Two solvers are provided:

* projected SOR with 2^d-coloring, whose sweeps are exact Gauss-Seidel
  steps (nodes of one color never couple through the Q1 stencil) and
  therefore parallelize without changing the fixed point;
* a penalized semilinear formulation solved by damped Newton on a C^1
  monotone penalty beta_eps.

The discrete solution is the unique minimizer of
(1/2) a(u,u) + (g, grad u) over the nodal convex set.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .coefficients import CoefficientField, check_condition_N
from .errors import EllipticityError, NonconvergenceError
from .grid import Grid, GridField

_UNIT_MASS = np.array([[1 / 3, 1 / 6], [1 / 6, 1 / 3]])
_UNIT_STIFF = np.array([[1.0, -1.0], [-1.0, 1.0]])
_UNIT_MIXED = np.array([[-0.5, -0.5], [0.5, 0.5]])  # int phi'_a phi_b


def _reference_matrices(dim: int, h: float) -> dict:
    """Element matrices K^{(p,q)}[A,B] = int_elem d_p phi_A d_q phi_B."""
    corners = list(itertools.product((0, 1), repeat=dim))
    mats = {}
    for p in range(dim):
        for q in range(dim):
            K = np.zeros((len(corners), len(corners)))
            for ia, A in enumerate(corners):
                for ib, B in enumerate(corners):
                    val = 1.0
                    for ax in range(dim):
                        if ax == p and ax == q:
                            val *= _UNIT_STIFF[A[ax], B[ax]] / h
                        elif ax == p:
                            val *= _UNIT_MIXED[A[ax], B[ax]]
                        elif ax == q:
                            val *= _UNIT_MIXED[B[ax], A[ax]]
                        else:
                            val *= h * _UNIT_MASS[A[ax], B[ax]]
                    K[ia, ib] = val
            mats[(p, q)] = K
    return mats


def _grad_integrals(dim: int, h: float) -> np.ndarray:
    """L[i, A] = int_elem d_i phi_A."""
    corners = list(itertools.product((0, 1), repeat=dim))
    L = np.zeros((dim, len(corners)))
    for i in range(dim):
        for ia, A in enumerate(corners):
            val = 1.0
            for ax in range(dim):
                val *= (1.0 if A[ax] else -1.0) if ax == i else 0.5 * h
            L[i, ia] = val
    return L


def _element_means(arr: np.ndarray, dim: int) -> np.ndarray:
    """Mean of the 2^d corner values per element (= midpoint value of the
    multilinear interpolant)."""
    out = arr
    for ax in range(dim):
        lo = [slice(None)] * dim
        hi = [slice(None)] * dim
        lo[ax] = slice(None, -1)
        hi[ax] = slice(1, None)
        out = 0.5 * (out[tuple(lo)] + out[tuple(hi)])
    return out


@dataclass
class DiscreteProblem:
    """Assembled stiffness stencil, load and constraint data."""

    grid: Grid
    coefficients: CoefficientField
    dirichlet: np.ndarray          # full nodal array; only boundary entries used
    obstacle: np.ndarray           # plane-shaped array
    stencil: dict                  # offset tuple -> nodal coupling array
    rhs: np.ndarray                # right-hand side (-load from g)
    _csr: tuple | None = field(default=None, repr=False)

    @property
    def plane_index(self) -> int:
        return self.grid.plane_index

    def interior_mask(self) -> np.ndarray:
        m = self.grid.npts
        mask = np.zeros(self.grid.shape, dtype=bool)
        mask[(slice(1, m - 1),) * self.grid.dim] = True
        return mask

    def apply_stiffness(self, u: np.ndarray) -> np.ndarray:
        """(A u) on interior nodes (boundary rows returned as 0)."""
        m = self.grid.npts
        out = np.zeros_like(u)
        core = tuple(slice(1, m - 1) for _ in range(self.grid.dim))
        acc = np.zeros_like(u[core])
        for off, w in self.stencil.items():
            src = tuple(slice(1 + o, m - 1 + o) for o in off)
            acc += w[core] * u[src]
        out[core] = acc
        return out

    def energy(self, u: np.ndarray) -> float:
        """(1/2) a(u,u) + (g, grad u) as a function of the interior values,
        up to a constant set by the fixed boundary trace."""
        interior = self.interior_mask()
        au = self.apply_stiffness(u)
        u_bnd = np.where(interior, 0.0, u)
        au_b = self.apply_stiffness(u_bnd)
        ui = np.where(interior, u, 0.0)
        return float(0.5 * np.sum(ui * au) + 0.5 * np.sum(ui * au_b)
                     - np.sum(ui * self.rhs))

    def csr_interior(self):
        """Interior-reduced CSR matrix and index bookkeeping (cached)."""
        if self._csr is not None:
            return self._csr
        shape = self.grid.shape
        size = int(np.prod(shape))
        m = self.grid.npts
        interior = self.interior_mask()
        rows, cols, data = [], [], []
        idx = np.arange(size).reshape(shape)
        core = tuple(slice(1, m - 1) for _ in range(self.grid.dim))
        for off, w in self.stencil.items():
            src = tuple(slice(1 + o, m - 1 + o) for o in off)
            rows.append(idx[core].ravel())
            cols.append(idx[src].ravel())
            data.append(w[core].ravel())
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        data = np.concatenate(data)
        A = scipy.sparse.coo_matrix((data, (rows, cols)), shape=(size, size)).tocsr()
        int_flat = idx[interior].ravel()
        bnd_flat = idx[~interior].ravel()
        A_ii = A[int_flat][:, int_flat].tocsc()
        A_ib = A[int_flat][:, bnd_flat].tocsr()
        self._csr = (A_ii, A_ib, int_flat, bnd_flat)
        return self._csr


@dataclass
class SolutionField:
    """Converged iterate with plane masks and flux residual."""

    w: GridField
    contact_mask: np.ndarray
    noncontact_mask: np.ndarray
    complementarity_residual: np.ndarray
    solver_stats: dict


@dataclass
class PenaltyConfig:
    """Penalty beta_eps: 0 for t>=0, -t^2/(4 eps^3) on [-2 eps^2, 0]
    (the monotone cubic Hermite with end data (-eps, 0) and slopes
    (1/eps, 0)), and eps + t/eps below.  Nondecreasing and <= 0."""

    epsilon: float
    newton_tol: float = 1e-11
    max_newton: int = 60

    def __post_init__(self):
        if not (1e-6 <= self.epsilon <= 1e-1):
            raise ValueError("epsilon must lie in [1e-6, 1e-1]")

    def beta(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        eps = self.epsilon
        knee = -2.0 * eps**2
        return np.where(
            t >= 0.0, 0.0,
            np.where(t <= knee, eps + t / eps, -t**2 / (4.0 * eps**3)),
        )

    def dbeta(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        eps = self.epsilon
        knee = -2.0 * eps**2
        return np.where(
            t >= 0.0, 0.0,
            np.where(t <= knee, 1.0 / eps, -t / (2.0 * eps**3)),
        )


def assemble(grid: Grid, coefficients: CoefficientField, dirichlet_data,
             obstacle=None, *, waive_condition_N: bool = False) -> DiscreteProblem:
    """Assemble the Q1 stencil and load for the variational inequality.

    ``dirichlet_data`` is a callable on points or a full nodal array; only
    its boundary trace is used.  ``obstacle`` is a plane-shaped nodal
    array (default 0).  Coefficients must satisfy the normalization
    condition unless explicitly waived.
    """
    d = grid.dim
    lam, _ = coefficients.ellipticity()
    if lam <= 0.0:
        raise EllipticityError(f"coefficient field not elliptic (lambda={lam:.3e})")
    if not waive_condition_N:
        report = check_condition_N(coefficients)
        if not report["pass"]:
            raise ValueError(
                "coefficients violate the normalization condition "
                f"({report['violations']}); pass waive_condition_N=True to force"
            )

    corners = list(itertools.product((0, 1), repeat=d))
    Kref = _reference_matrices(d, grid.h)
    Lref = _grad_integrals(d, grid.h)

    pair_mats = {}
    for p in range(d):
        pair_mats[(p, p)] = Kref[(p, p)]
        for q in range(p + 1, d):
            pair_mats[(p, q)] = Kref[(p, q)] + Kref[(q, p)]

    a_mid = {pq: _element_means(coefficients.a[pq[0], pq[1]], d) for pq in pair_mats}
    g_mid = [_element_means(coefficients.g[i], d) for i in range(d)]

    stencil = {}
    load = np.zeros(grid.shape)
    e_shape = tuple(s - 1 for s in grid.shape)
    for ia, A in enumerate(corners):
        node_sl = tuple(slice(A[ax], A[ax] + e_shape[ax]) for ax in range(d))
        for ib, B in enumerate(corners):
            off = tuple(B[ax] - A[ax] for ax in range(d))
            data = np.zeros(e_shape)
            for pq, K in pair_mats.items():
                coef = K[ia, ib]
                if coef != 0.0:
                    data += coef * a_mid[pq]
            if off not in stencil:
                stencil[off] = np.zeros(grid.shape)
            stencil[off][node_sl] += data
        gload = np.zeros(e_shape)
        for i in range(d):
            if Lref[i, ia] != 0.0:
                gload += Lref[i, ia] * g_mid[i]
        load[node_sl] += gload

    if callable(dirichlet_data):
        coords = grid.node_coords()
        pts = np.stack([x.ravel() for x in coords], axis=1)
        dirichlet = np.asarray(dirichlet_data(pts), dtype=float).reshape(grid.shape)
    else:
        dirichlet = np.asarray(dirichlet_data, dtype=float).reshape(grid.shape)

    if obstacle is None:
        obstacle = np.zeros((grid.npts,) * grid.n)
    else:
        obstacle = np.asarray(obstacle, dtype=float).reshape((grid.npts,) * grid.n)

    return DiscreteProblem(grid, coefficients, dirichlet, obstacle, stencil, -load)


def _initial_iterate(problem: DiscreteProblem, initial) -> np.ndarray:
    grid = problem.grid
    m = grid.npts
    if initial is None:
        u = np.zeros(grid.shape)
    elif isinstance(initial, GridField):
        u = initial.values.copy()
    else:
        u = np.asarray(initial, dtype=float).copy()
    # pin the boundary trace
    for ax in range(grid.dim):
        for side in (0, m - 1):
            sl = [slice(None)] * grid.dim
            sl[ax] = side
            u[tuple(sl)] = problem.dirichlet[tuple(sl)]
    # feasibility on interior plane nodes
    p = grid.plane_index
    plane = u[..., p]
    inner = tuple(slice(1, m - 1) for _ in range(grid.n))
    plane[inner] = np.maximum(plane[inner], problem.obstacle[inner])
    return u


def _plane_interior_slices(grid: Grid):
    m = grid.npts
    return tuple(slice(1, m - 1) for _ in range(grid.n))


def projected_residual(problem: DiscreteProblem, u: np.ndarray) -> np.ndarray:
    """Complementarity-aware residual: A u - rhs on free nodes, its
    negative part on contact nodes (full nodal array, 0 on boundary)."""
    grid = problem.grid
    r = problem.apply_stiffness(u) - _masked_rhs(problem)
    p = grid.plane_index
    inner = _plane_interior_slices(grid)
    plane_r = r[(*inner, p)]
    gap = u[(*inner, p)] - problem.obstacle[inner]
    at_contact = gap <= 1e-13 * (1.0 + np.abs(problem.obstacle[inner]))
    r[(*inner, p)] = np.where(at_contact, np.minimum(plane_r, 0.0), plane_r)
    return r


def _masked_rhs(problem: DiscreteProblem) -> np.ndarray:
    out = problem.rhs.copy()
    m = problem.grid.npts
    interior = problem.interior_mask()
    out[~interior] = 0.0
    return out


def solve_psor(problem: DiscreteProblem, tol: float | None = None,
               max_iters: int | None = None, *, omega: float = 1.5,
               initial=None, check_every: int = 10,
               track_energy: bool = False) -> SolutionField:
    """Projected SOR for the discrete variational inequality.

    Sweeps run over 2^d node colors; plane-node updates are clipped at the
    obstacle.  Terminates when both the projected residual norm and the
    per-sweep energy decrement fall below ``tol`` (default 1e-9 times the
    initial residual norm).  Raises NonconvergenceError past the
    iteration budget, carrying the last iterate.
    """
    grid = problem.grid
    d = grid.dim
    m = grid.npts
    if max_iters is None:
        max_iters = 100_000 if d == 2 else 10_000
    u = _initial_iterate(problem, initial)

    rhs = problem.rhs
    diag = problem.stencil[(0,) * d]
    p = grid.plane_index
    phi_full = np.full(grid.shape, -np.inf)
    sl_plane = [slice(None)] * d
    sl_plane[-1] = p
    phi_full[tuple(sl_plane)] = -np.inf
    inner = _plane_interior_slices(grid)
    phi_plane = np.full((m,) * grid.n, -np.inf)
    phi_plane[inner] = problem.obstacle[inner]
    phi_full[(*[slice(None)] * grid.n, p)] = phi_plane

    r0 = float(np.linalg.norm(projected_residual(problem, u)))
    if tol is None:
        # scale by the cold-start residual so a warm initial guess does not
        # tighten the effective tolerance
        r_cold = float(np.linalg.norm(
            projected_residual(problem, _initial_iterate(problem, None))))
        tol = 1e-9 * max(r_cold, r0, 1e-30)
    colors = list(itertools.product((0, 1), repeat=d))
    offs = [off for off in problem.stencil if off != (0,) * d]
    t_start = time.perf_counter()
    energy_prev = problem.energy(u)
    history = [r0]
    energy_history = [energy_prev]
    iters = 0
    converged = r0 <= tol
    while not converged and iters < max_iters:
        for color in colors:
            starts = tuple(1 + ((c - 1) % 2) for c in color)
            tgt = tuple(slice(s, m - 1, 2) for s in starts)
            acc = rhs[tgt].copy()
            for off in offs:
                src = tuple(slice(starts[ax] + off[ax], m - 1 + off[ax], 2)
                            for ax in range(d))
                acc -= problem.stencil[off][tgt] * u[src]
            unew = (1.0 - omega) * u[tgt] + omega * acc / diag[tgt]
            u[tgt] = np.maximum(unew, phi_full[tgt])
        iters += 1
        if track_energy:
            energy_history.append(problem.energy(u))
        if iters % check_every == 0 or iters == max_iters:
            res = float(np.linalg.norm(projected_residual(problem, u)))
            history.append(res)
            energy = problem.energy(u)
            decrement = abs(energy_prev - energy) / check_every
            energy_prev = energy
            if res <= tol and decrement <= tol * max(1.0, abs(energy)):
                converged = True

    stats = {
        "iterations": iters,
        "initial_residual": r0,
        "final_residual": history[-1],
        "tol": tol,
        "omega": omega,
        "wall_time": time.perf_counter() - t_start,
        "converged": converged,
    }
    if track_energy:
        stats["energy_history"] = energy_history
    sol = _make_solution(problem, u, stats)
    if not converged:
        raise NonconvergenceError(
            f"PSOR did not converge in {max_iters} sweeps "
            f"(residual {history[-1]:.3e}, tol {tol:.3e})",
            solution=sol, residual_history=history)
    return sol


def _make_solution(problem: DiscreteProblem, u: np.ndarray, stats: dict) -> SolutionField:
    grid = problem.grid
    h = grid.h
    p = grid.plane_index
    w = GridField(grid, u)
    lam = (problem.apply_stiffness(u) - _masked_rhs(problem))[..., p] / h**grid.n
    gap = u[..., p] - problem.obstacle
    wmax = float(np.max(np.abs(u)))
    tol_w = 10.0 * h**1.5 * max(wmax, 1e-30)
    tol_flux = 10.0 * h**0.5 * max(wmax, 1e-30)
    contact = (gap <= tol_w) & (lam >= tol_flux)
    noncontact = gap >= tol_w
    # boundary plane nodes are Dirichlet, not classified
    edge = np.ones((grid.npts,) * grid.n, dtype=bool)
    edge[_plane_interior_slices(grid)] = False
    contact[edge] = False
    noncontact[edge] = False
    stats = dict(stats, tol_w=tol_w, tol_flux=tol_flux)
    return SolutionField(w, contact, noncontact, lam, stats)


def solve_nested(problem_builder, h_levels, *, tol: float | None = None,
                 omega: float | str = "auto", max_iters: int | None = None) -> SolutionField:
    """Coarse-to-fine PSOR: solve on each grid in ``h_levels`` (coarse
    first), interpolating each solution as the next initial guess.

    ``problem_builder`` maps a spacing h to a DiscreteProblem.  The final
    level uses ``tol``; coarse levels use a relative 1e-8.
    """
    from .grid import _interp_values

    sol = None
    prev_field = None
    for k, h in enumerate(h_levels):
        problem = problem_builder(h)
        grid = problem.grid
        initial = None
        if prev_field is not None:
            coords = grid.node_coords()
            pts = np.stack([x.ravel() for x in coords], axis=1)
            initial = _interp_values(prev_field.values, prev_field.grid, pts).reshape(grid.shape)
        if omega == "auto":
            om = 2.0 / (1.0 + np.sin(np.pi * h))
        else:
            om = omega
        last = k == len(h_levels) - 1
        sol = solve_psor(problem, tol=tol if last else None,
                         max_iters=max_iters, omega=om, initial=initial)
        prev_field = sol.w
    return sol


def solve_penalized(problem: DiscreteProblem, cfg: PenaltyConfig) -> SolutionField:
    """Damped Newton on the penalized semilinear system.

    Requires a zero obstacle (the penalized formulation is stated for
    phi = 0).  Warm starts through a decreasing epsilon ladder internally
    when the target epsilon is small.
    """
    if float(np.max(np.abs(problem.obstacle))) > 0.0:
        raise ValueError("the penalized solver requires a zero obstacle")
    grid = problem.grid
    h = grid.h
    A_ii, A_ib, int_flat, bnd_flat = problem.csr_interior()
    u = _initial_iterate(problem, None)
    bflat = u.ravel()[bnd_flat]
    rhs_eff = problem.rhs.ravel()[int_flat] - A_ib @ bflat

    # plane nodes within the interior numbering and their lumped mass h^n
    shape = grid.shape
    size = int(np.prod(shape))
    idx = np.arange(size).reshape(shape)
    p = grid.plane_index
    plane_flat = idx[(*_plane_interior_slices(grid), p)].ravel()
    pos_in_interior = np.searchsorted(int_flat, plane_flat)
    mass = h**grid.n

    lu0 = scipy.sparse.linalg.splu(A_ii.tocsc())
    x = lu0.solve(rhs_eff)

    eps_ladder = []
    e = 1e-1
    while e > cfg.epsilon * 1.001:
        eps_ladder.append(e)
        e *= 0.1
    eps_ladder.append(cfg.epsilon)

    newton_steps = 0
    for eps in eps_ladder:
        sub = PenaltyConfig(eps, cfg.newton_tol, cfg.max_newton)
        scale = max(float(np.linalg.norm(rhs_eff)), 1e-30)
        for _ in range(cfg.max_newton):
            t = x[pos_in_interior]
            F = A_ii @ x + mass * _scatter(sub.beta(t), pos_in_interior, len(x)) - rhs_eff
            fn = float(np.linalg.norm(F))
            if fn <= cfg.newton_tol * scale:
                break
            J = A_ii + scipy.sparse.diags(
                _scatter(mass * sub.dbeta(t), pos_in_interior, len(x)), format="csc")
            dx = scipy.sparse.linalg.splu(J).solve(-F)
            step = 1.0
            while step > 1e-6:
                x_try = x + step * dx
                t_try = x_try[pos_in_interior]
                F_try = (A_ii @ x_try
                         + mass * _scatter(sub.beta(t_try), pos_in_interior, len(x))
                         - rhs_eff)
                if float(np.linalg.norm(F_try)) < fn:
                    x = x_try
                    break
                step *= 0.5
            else:
                raise NonconvergenceError(
                    f"penalized Newton stagnated at eps={eps:g}")
            newton_steps += 1

    u_full = u.copy()
    u_full.ravel()[int_flat] = x
    stats = {"newton_steps": newton_steps, "epsilon": cfg.epsilon,
             "converged": True}
    sol = _make_solution(problem, u_full, stats)
    # flux residual for the penalized problem is -beta_eps(w) on the plane
    t = u_full[..., p]
    sol.complementarity_residual = -cfg.beta(t)
    return sol


def _scatter(vals: np.ndarray, pos: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(n)
    out[pos] = vals
    return out


def derive_G(solution: SolutionField, coefficients: CoefficientField,
             a0: float, *, side: str = "up") -> np.ndarray:
    """Reduced divergence-form inhomogeneity of the subtracted solution.

    G^i = sum_j (delta^{ij} - a^{ij}) d_j(w - a0 x_{n+1})
          + g^i + a0 (delta^{i,n+1} - a^{i,n+1}).

    Returns an array of shape (dim,) + grid.shape.  The gradient is
    one-sided across the plane; ``side`` selects which trace the plane
    rows carry.
    """
    from .grid import _one_sided_normal_gradients

    fld = solution.w
    grid = fld.grid
    d = grid.dim
    tangential, up, dn = _one_sided_normal_gradients(fld)
    grads = list(tangential) + [up if side == "up" else dn]
    G = np.zeros((d,) + grid.shape)
    for i in range(d):
        for j in range(d):
            delta = 1.0 if i == j else 0.0
            dj_wt = grads[j] - (a0 if j == d - 1 else 0.0)
            G[i] += (delta - coefficients.a[i, j]) * dj_wt
        G[i] += coefficients.g[i]
        delta_in = 1.0 if i == d - 1 else 0.0
        G[i] += a0 * (delta_in - coefficients.a[i, d - 1])
    return G
