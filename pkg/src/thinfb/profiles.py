"""Closed-form reference solutions: linear profiles, 3/2-homogeneous cones,
the slit-plane eigenfunction ladder, and the logarithmic borderline example.

Branch convention for the cone family: with s = x'.xi and t = |x_{n+1}|,
values are c * rho^{3/2} * cos(3*phi/2) where (rho, phi) are the polar
coordinates of (s, t), phi in [0, pi].  This makes the profile even in
x_{n+1} and identically zero on the contact ray {x'.xi <= 0, x_{n+1} = 0}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import SingularPointError
from .grid import Grid, GridField, sample_function


@dataclass(frozen=True)
class LinearProfile:
    """l(x) = a0 * x_{n+1}; odd in x_{n+1}."""

    a0: float

    parity = "odd"

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return self.a0 * pts[:, -1]


@dataclass(frozen=True)
class ConeProfile:
    """c * Re((x'.xi) + i|x_{n+1}|)^{3/2} with c >= 0 and |xi| = 1.

    The axis-aligned member (c=1, xi=e_n) is the model solution.
    """

    c: float
    xi: tuple

    parity = "even"

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("cone amplitude c must be nonnegative")
        xi = np.asarray(self.xi, dtype=float)
        if abs(np.linalg.norm(xi) - 1.0) > 1e-12:
            raise ValueError("cone direction xi must be a unit vector")

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        xi = np.asarray(self.xi, dtype=float)
        s = pts[:, :-1] @ xi
        t = np.abs(pts[:, -1])
        rho = np.hypot(s, t)
        phi = np.arctan2(t, s)  # in [0, pi] since t >= 0
        return self.c * rho**1.5 * np.cos(1.5 * phi)


def model_cone(n: int, c: float = 1.0) -> ConeProfile:
    """The axis-aligned member h_{3/2} (direction e_n)."""
    xi = tuple(0.0 if i < n - 1 else 1.0 for i in range(n))
    return ConeProfile(c, xi)


def _halfplane_polar(pts: np.ndarray) -> tuple:
    """Polar coordinates (rho, phi) of (x_n, |x_{n+1}|), phi in [0, pi]."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    s = pts[:, -2]
    t = np.abs(pts[:, -1])
    return np.hypot(s, t), np.arctan2(t, s)


@dataclass(frozen=True)
class EigenProfile:
    """Homogeneous solution q_k of the slit-plane mixed problem, degree k/2.

    kind 'cone-trace' (odd k): Re(x_n + i|x_{n+1}|)^{k/2}, even in x_{n+1}.
    kind 'interior-harmonic' (even k): Im((x_n + i x_{n+1})^{k/2}), odd.
    kind 'mixed-tangential' (k=3, n=2 only): x_1 * Re(x_n + i|x_{n+1}|)^{1/2},
    the tensorized 3/2-homogeneous family member.
    """

    k: int
    kind: str = ""

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("eigen index k must be >= 1")
        default = "cone-trace" if self.k % 2 == 1 else "interior-harmonic"
        kind = self.kind or default
        if kind not in ("cone-trace", "interior-harmonic", "mixed-tangential"):
            raise ValueError(f"unknown eigenprofile kind {kind!r}")
        if kind == "cone-trace" and self.k % 2 == 0:
            raise ValueError("cone-trace profiles have odd k")
        if kind == "interior-harmonic" and self.k % 2 == 1:
            raise ValueError("interior-harmonic profiles have even k")
        if kind == "mixed-tangential" and self.k != 3:
            raise ValueError("the tensorized member exists only at k=3")
        object.__setattr__(self, "kind", kind)

    @property
    def homogeneity(self) -> float:
        return self.k / 2.0

    @property
    def parity(self) -> str:
        return "even" if self.kind in ("cone-trace", "mixed-tangential") else "odd"

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.kind == "cone-trace":
            rho, phi = _halfplane_polar(pts)
            return rho ** (self.k / 2.0) * np.cos(self.k / 2.0 * phi)
        if self.kind == "mixed-tangential":
            rho, phi = _halfplane_polar(pts)
            return pts[:, 0] * np.sqrt(rho) * np.cos(0.5 * phi)
        z = pts[:, -2] + 1j * pts[:, -1]
        return np.imag(z ** (self.k // 2))


@dataclass(frozen=True)
class LogProfile:
    """w = -ln(rho) * rho^{3/2} * cos(3*phi/2), n=1 only.

    Polar coordinates as for the cone family, so the contact ray is the
    negative x_1 axis.  Singular at the origin; sampling puts 0 there.
    """

    parity = "even"

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if pts.shape[1] != 2:
            raise ValueError("the logarithmic example is two-dimensional")
        rho, phi = _halfplane_polar(pts)
        if np.any(rho == 0.0):
            raise SingularPointError("logarithmic profile is singular at the origin")
        return -np.log(rho) * rho**1.5 * np.cos(1.5 * phi)


Profile = LinearProfile | ConeProfile | EigenProfile | LogProfile


def evaluate(profile, point) -> float:
    """Closed-form value at a single point."""
    return float(profile(np.asarray(point, dtype=float)[None, :])[0])


def sample(profile, grid: Grid) -> GridField:
    """Nodal sampling with the profile's parity tag.

    The LogProfile value at the origin node is set to 0 by convention.
    """
    if isinstance(profile, LogProfile):
        def fn(pts):
            rho = np.hypot(pts[:, 0], pts[:, 1])
            out = np.zeros(len(pts))
            mask = rho > 0.0
            out[mask] = profile(pts[mask])
            return out
        return sample_function(grid, fn, parity_tag="even")
    return sample_function(grid, profile, parity_tag=profile.parity)


def laplacian_log_example(point) -> float:
    """Exact Laplacian of the logarithmic profile: -3 rho^{-1/2} cos(3 phi/2).

    Defined off the origin and off the contact ray; this inhomogeneity is of
    Hoelder class C^{0,1/2}, the borderline coefficient regularity.
    """
    pt = np.asarray(point, dtype=float)
    rho, phi = _halfplane_polar(pt[None, :])
    rho, phi = float(rho[0]), float(phi[0])
    if rho == 0.0 or (abs(phi - np.pi) < 1e-14):
        raise SingularPointError("Laplacian undefined on the slit and at the origin")
    return -3.0 * rho**-0.5 * np.cos(1.5 * phi)


def eigen_slit_spectrum(m: int, n: int = 1, n_nodes: int = 4096) -> np.ndarray:
    """First m homogeneities of the slit-circle eigenproblem (n=1).

    The angular part of a homogeneous solution solves -Theta'' = lam Theta
    on the circle cut along the contact ray, with Theta = 0 on both sides
    of the cut and free matching elsewhere; i.e. the Dirichlet problem on
    an interval of length 2*pi.  Solved by dense second-order finite
    differences; homogeneities are kappa with kappa*(kappa + n - 1) = lam.
    """
    if n != 1:
        raise ValueError("the dense slit eigensolve is implemented for n=1")
    if m > 20:
        raise ValueError("requested mode count exceeds the supported range (20)")
    if n_nodes < 4096:
        n_nodes = 4096
    dt = 2.0 * np.pi / (n_nodes + 1)
    main = np.full(n_nodes, 2.0 / dt**2)
    off = np.full(n_nodes - 1, -1.0 / dt**2)
    lams = scipy.linalg.eigh_tridiagonal(
        main, off, eigvals_only=True, select="i", select_range=(0, m - 1))
    # kappa solves kappa(kappa + n - 1) = lam; for n=1 simply sqrt(lam)
    half = 0.5 * (n - 1)
    return np.sqrt(lams + half**2) - half


def profile_to_json(profile) -> str:
    if isinstance(profile, LinearProfile):
        payload = {"type": "linear", "parameters": {"a0": profile.a0}}
    elif isinstance(profile, ConeProfile):
        payload = {"type": "cone", "parameters": {"c": profile.c, "xi": list(profile.xi)}}
    elif isinstance(profile, EigenProfile):
        payload = {"type": "eigen", "parameters": {"k": profile.k, "kind": profile.kind}}
    elif isinstance(profile, LogProfile):
        payload = {"type": "log", "parameters": {}}
    else:
        raise TypeError(f"not a profile: {type(profile)}")
    return json.dumps(payload)


def profile_from_json(text: str):
    payload = json.loads(text)
    kind, params = payload["type"], payload["parameters"]
    if kind == "linear":
        return LinearProfile(params["a0"])
    if kind == "cone":
        return ConeProfile(params["c"], tuple(params["xi"]))
    if kind == "eigen":
        return EigenProfile(params["k"], params.get("kind", ""))
    if kind == "log":
        return LogProfile()
    raise ValueError(f"unknown profile type {kind!r}")
