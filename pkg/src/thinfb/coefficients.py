"""Hoelder coefficient fields a^{ij}, g^i and the origin normalization.

The normalization condition requires a(0) = identity, g(0) = 0 and the
vanishing of the (i, n+1) matrix entries, i <= n, on the thin plane.
Generated fields satisfy the plane clause exactly by construction: those
entries carry an |x_{n+1}|^alpha envelope, which is itself of class
C^{0,alpha} and vanishes identically on the plane.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EllipticityError
from .grid import Grid, GridField

CONDITION_N_TOL = 1e-12


@dataclass
class HoelderEstimate:
    """Lower bound on a C^{0,alpha} seminorm from a finite pair scan."""

    exponent: float
    seminorm: float
    pair_count: int


@dataclass
class CoefficientField:
    """Symmetric elliptic matrix field a and drift field g on a grid.

    ``a`` has shape (d, d) + grid.shape with d = n+1 and must be symmetric
    in its first two axes; ``g`` has shape (d,) + grid.shape.  ``alpha``
    and ``delta0`` record the Hoelder class and the seminorm budget the
    field was built for (0 for exact data such as the identity).
    """

    grid: Grid
    a: np.ndarray
    g: np.ndarray
    alpha: float
    delta0: float = 0.0
    _ellipticity: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        d = self.grid.dim
        self.a = np.asarray(self.a, dtype=float)
        self.g = np.asarray(self.g, dtype=float)
        if self.a.shape != (d, d) + self.grid.shape:
            raise ValueError(f"a must have shape {(d, d) + self.grid.shape}")
        if self.g.shape != (d,) + self.grid.shape:
            raise ValueError(f"g must have shape {(d,) + self.grid.shape}")
        sym_defect = max(
            float(np.max(np.abs(self.a[i, j] - self.a[j, i])))
            for i in range(d) for j in range(i + 1, d)
        ) if d > 1 else 0.0
        if sym_defect > 1e-12:
            raise EllipticityError(f"a is not symmetric (defect {sym_defect:.2e})")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("Hoelder exponent must lie in (0,1)")

    @property
    def dim(self) -> int:
        return self.grid.dim

    def ellipticity(self) -> tuple:
        """(lambda, Lambda): extreme eigenvalues of a over all nodes."""
        if self._ellipticity is None:
            d = self.dim
            mats = np.moveaxis(self.a.reshape(d, d, -1), -1, 0)
            eigs = np.linalg.eigvalsh(mats)
            self._ellipticity = (float(eigs.min()), float(eigs.max()))
        return self._ellipticity

    def is_elliptic(self) -> bool:
        return self.ellipticity()[0] > 0.0

    def a_entry(self, i: int, j: int) -> GridField:
        return GridField(self.grid, self.a[i, j])

    def g_entry(self, i: int) -> GridField:
        return GridField(self.grid, self.g[i])

    def matrix_at(self, point) -> np.ndarray:
        """a interpolated at one point."""
        from .grid import _interp_values
        pt = np.asarray(point, dtype=float)[None, :]
        d = self.dim
        out = np.empty((d, d))
        for i in range(d):
            for j in range(i, d):
                out[i, j] = out[j, i] = _interp_values(self.a[i, j], self.grid, pt)[0]
        return out


def identity_coefficients(grid: Grid, alpha: float = 0.75) -> CoefficientField:
    d = grid.dim
    a = np.zeros((d, d) + grid.shape)
    for i in range(d):
        a[i, i] = 1.0
    g = np.zeros((d,) + grid.shape)
    return CoefficientField(grid, a, g, alpha, 0.0, _ellipticity=(1.0, 1.0))


def constant_coefficients(grid: Grid, a_mat, alpha: float = 0.75) -> CoefficientField:
    d = grid.dim
    a_mat = np.asarray(a_mat, dtype=float)
    a = np.zeros((d, d) + grid.shape)
    for i in range(d):
        for j in range(d):
            a[i, j] = a_mat[i, j]
    g = np.zeros((d,) + grid.shape)
    return CoefficientField(grid, a, g, alpha, 0.0)


def check_condition_N(c: CoefficientField) -> dict:
    """Check the origin/plane normalization clauses.

    Returns a dict with per-clause maximal violation magnitudes and a
    'pass' flag (all magnitudes <= 1e-12).
    """
    d = c.dim
    origin = tuple([c.grid.plane_index] * d)
    a0 = np.array([[c.a[i, j][origin] for j in range(d)] for i in range(d)])
    g0 = np.array([c.g[i][origin] for i in range(d)])
    p = c.grid.plane_index
    plane_offdiag = max(
        float(np.max(np.abs(c.a[i, d - 1][..., p]))) for i in range(d - 1)
    )
    violations = {
        "a(0) != identity": float(np.max(np.abs(a0 - np.eye(d)))),
        "g(0) != 0": float(np.max(np.abs(g0))),
        "off-diagonal on plane": plane_offdiag,
    }
    return {
        "pass": all(v <= CONDITION_N_TOL for v in violations.values()),
        "violations": violations,
    }


def normalize_at_origin(c: CoefficientField) -> CoefficientField:
    """Affine normalization x -> A(0)^{1/2} x and g -> g - g(0).

    The output has a(0) = identity and g(0) = 0; all values are the
    pointwise congruence A(0)^{-1/2} a A(0)^{-1/2} with the argument
    rescaled accordingly (clipped to the cube where the stretched
    argument leaves it).  The plane-wide off-diagonal clause is NOT
    enforced here; inputs violating it should go through
    :func:`check_condition_N`.
    """
    d = c.dim
    origin = tuple([c.grid.plane_index] * d)
    a0 = np.array([[c.a[i, j][origin] for j in range(d)] for i in range(d)])
    eigvals, eigvecs = np.linalg.eigh(a0)
    if eigvals.min() <= 0.0:
        raise EllipticityError("a(0) is not positive definite")
    if np.max(np.abs(a0 - np.eye(d))) <= 1e-14 and all(
        abs(c.g[i][origin]) <= 1e-14 for i in range(d)
    ):
        return c  # already normalized
    root = eigvecs @ np.diag(np.sqrt(eigvals)) @ eigvecs.T
    inv_root = eigvecs @ np.diag(1.0 / np.sqrt(eigvals)) @ eigvecs.T

    from .grid import _interp_values
    coords = c.grid.node_coords()
    pts = np.stack([x.ravel() for x in coords], axis=1)
    stretched = np.clip(pts @ root.T, -1.0, 1.0)

    a_vals = np.empty((d, d, len(pts)))
    for i in range(d):
        for j in range(i, d):
            a_vals[i, j] = a_vals[j, i] = _interp_values(c.a[i, j], c.grid, stretched)
    g_vals = np.stack(
        [_interp_values(c.g[i], c.grid, stretched) for i in range(d)], axis=0)

    a_new = np.einsum("ik,kl...,lj->ij...", inv_root, a_vals, inv_root)
    g_new = np.einsum("ik,k...->i...", inv_root, g_vals)
    origin_flat = np.ravel_multi_index(origin, c.grid.shape)
    g_new = g_new - g_new[:, origin_flat][:, None]
    a_new = a_new.reshape((d, d) + c.grid.shape)
    g_new = g_new.reshape((d,) + c.grid.shape)
    a_new = 0.5 * (a_new + np.swapaxes(a_new, 0, 1))  # round-off symmetrization
    return CoefficientField(c.grid, a_new, g_new, c.alpha, c.delta0)


def _fourier_modes(dim: int, max_mode: int) -> np.ndarray:
    axes = [np.arange(-max_mode, max_mode + 1)] * dim
    grids = np.meshgrid(*axes, indexing="ij")
    modes = np.stack([g.ravel() for g in grids], axis=1)
    norms = np.linalg.norm(modes, axis=1)
    keep = (norms > 0) & (norms <= max_mode)
    return modes[keep]


def _spectral_field(rng: np.random.Generator, grid: Grid, alpha: float,
                    max_mode: int = 8) -> np.ndarray:
    """One cube-periodic random field of class C^{0,alpha}.

    Truncated Fourier series sum_k m_k (A_k cos(pi k.x) + B_k sin(pi k.x))
    with amplitudes m_k = |k|^{-(alpha + d/2 + 0.01)}; the decay places the
    field in the Hoelder class almost surely.  Evaluated at the nodes by
    an inverse FFT (the nodes x_j = -1 + j h are period-2 lattice points).
    """
    d = grid.dim
    modes = _fourier_modes(d, max_mode)
    decay = np.linalg.norm(modes, axis=1) ** -(alpha + d / 2.0 + 0.01)
    amp_cos = rng.standard_normal(len(modes)) * decay
    amp_sin = rng.standard_normal(len(modes)) * decay
    N = grid.npts - 1
    coeff = np.zeros((N,) * d, dtype=complex)
    # pi k.x_j = 2 pi k.j / N - pi sum(k); fold the constant phase into c_k
    sign = (-1.0) ** np.sum(modes, axis=1)
    np.add.at(coeff, tuple((modes % N).T), sign * (amp_cos - 1j * amp_sin))
    vals = np.real(np.fft.ifftn(coeff)) * N**d
    return np.pad(vals, [(0, 1)] * d, mode="wrap")


def generate_field(alpha: float, delta0: float, seed: int, grid: Grid,
                   max_mode: int = 8) -> CoefficientField:
    """Deterministic seeded synthesis of a normalized coefficient field.

    The measured total seminorm (max over a-entries plus max over
    g-entries, via :func:`estimate_seminorm`) is rescaled to delta0.
    Every generated field passes check_condition_N exactly.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie in (0,1)")
    if delta0 >= 0.25:
        raise ValueError("delta0 >= 1/4 rejected: identity + perturbation may lose ellipticity")
    d = grid.dim
    a = np.zeros((d, d) + grid.shape)
    for i in range(d):
        a[i, i] = 1.0
    g = np.zeros((d,) + grid.shape)
    if delta0 == 0.0:
        return CoefficientField(grid, a, g, alpha, 0.0, _ellipticity=(1.0, 1.0))

    rng = np.random.default_rng(seed)
    origin = tuple([grid.plane_index] * d)
    envelope = np.abs(grid.node_coords()[-1]) ** alpha

    perturb = np.zeros_like(a)
    for i in range(d):
        for j in range(i, d):
            p = _spectral_field(rng, grid, alpha, max_mode)
            if j == d - 1 and i < d - 1:
                p = p * envelope  # plane clause holds exactly
            else:
                p = p - p[origin]
            perturb[i, j] = perturb[j, i] = p
    for i in range(d):
        p = _spectral_field(rng, grid, alpha, max_mode)
        g[i] = p - p[origin]

    a_semi = max(
        estimate_seminorm(GridField(grid, perturb[i, j]), alpha).seminorm
        for i in range(d) for j in range(i, d)
    )
    g_semi = max(estimate_seminorm(GridField(grid, g[i]), alpha).seminorm
                 for i in range(d))
    scale = delta0 / (a_semi + g_semi)
    a = a + scale * perturb
    g = scale * g
    return CoefficientField(grid, a, g, alpha, delta0)


def _pair_indices(grid: Grid, min_pairs: int, rng_seed: int = 0):
    """Deterministic node-pair sample: all axis-adjacent pairs at a few
    strides plus seeded long-range pairs."""
    shape = grid.shape
    size = int(np.prod(shape))
    idx = np.arange(size).reshape(shape)
    pairs = []
    for ax in range(grid.dim):
        for stride in (1, 4):
            if grid.npts <= stride:
                continue
            lo = [slice(None)] * grid.dim
            hi = [slice(None)] * grid.dim
            lo[ax] = slice(None, -stride)
            hi[ax] = slice(stride, None)
            a = idx[tuple(lo)].ravel()
            b = idx[tuple(hi)].ravel()
            if len(a) > min_pairs:
                step = max(1, len(a) // min_pairs)
                a, b = a[::step], b[::step]
            pairs.append((a, b))
    rng = np.random.default_rng(rng_seed)
    a = rng.integers(0, size, size=min_pairs)
    b = rng.integers(0, size, size=min_pairs)
    keep = a != b
    pairs.append((a[keep], b[keep]))
    left = np.concatenate([p[0] for p in pairs])
    right = np.concatenate([p[1] for p in pairs])
    return left, right


def estimate_seminorm(f: GridField, alpha: float, min_pairs: int = 100_000) -> HoelderEstimate:
    """Lower bound on [f]_{C^{0,alpha}} from a deterministic pair scan.

    Monotone in the pair set: enlarging ``min_pairs`` never decreases the
    estimate.
    """
    grid = f.grid
    left, right = _pair_indices(grid, min_pairs)
    coords = grid.node_coords()
    pts = np.stack([x.ravel() for x in coords], axis=1)
    vals = f.values.ravel()
    dist = np.linalg.norm(pts[left] - pts[right], axis=1)
    ratio = np.abs(vals[left] - vals[right]) / dist**alpha
    return HoelderEstimate(alpha, float(ratio.max()), len(left))


def total_seminorm(c: CoefficientField, min_pairs: int = 100_000) -> float:
    """Measured [a]_{C^{0,alpha}} + [g]_{C^{0,alpha}} (max over entries each)."""
    d = c.dim
    a_semi = max(
        estimate_seminorm(c.a_entry(i, j), c.alpha, min_pairs).seminorm
        for i in range(d) for j in range(i, d)
    )
    g_semi = max(estimate_seminorm(c.g_entry(i), c.alpha, min_pairs).seminorm
                 for i in range(d))
    return a_semi + g_semi
