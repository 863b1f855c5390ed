"""Smooth dyadic bump, shell projectors and Sobolev/Besov/space-time norms.

The bump eta0 is radial, identically 1 for r <= 5/4 and 0 for r >= 8/5, built
from the standard smooth step psi(t) = g(t)/(g(t)+g(1-t)), g(t) = exp(-1/t).
Shell functions chi_k(r) = eta0(r/2^k) - eta0(r/2^{k-1}) tile (0, inf).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import SpectralField, TorusGrid, lp_norm

#: plateau and support radii of the bump profile
PLATEAU_RADIUS = 5.0 / 4.0
SUPPORT_RADIUS = 8.0 / 5.0


def _smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, strictly monotone between."""
    t = np.asarray(t, dtype=np.float64)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        g = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        g1 = np.where(1 - t > 0, np.exp(-1.0 / np.where(1 - t > 0, 1 - t, 1.0)), 0.0)
    denom = g + g1
    return np.where(denom > 0, g / np.where(denom > 0, denom, 1.0), 0.0)


def eta0(r):
    """Radial bump: 1 on [0, 5/4], 0 on [8/5, inf), monotone in between."""
    r = np.asarray(r, dtype=np.float64)
    out = _smooth_step((SUPPORT_RADIUS - r) / (SUPPORT_RADIUS - PLATEAU_RADIUS))
    return out if out.ndim else float(out)


def chi_k(r, k: int):
    """Dyadic shell function chi_k(r) = eta0(r/2^k) - eta0(r/2^{k-1})."""
    scale = 2.0**k
    out = np.asarray(eta0(np.asarray(r) / scale)) - np.asarray(
        eta0(np.asarray(r) / (scale / 2.0))
    )
    return out if out.ndim else float(out)


def chi_le(r, k: int):
    """Cumulative low-pass function chi_{<=k}(r) = eta0(r/2^k)."""
    return eta0(np.asarray(r) / 2.0**k)


def shell_range(grid: TorusGrid) -> tuple[int, int]:
    """Indices [k_min, k_max] outside which shells are empty on the lattice.

    k_min = floor(log2(2 pi / L)) - 1 sits just below the smallest nonzero
    frequency; k_max = ceil(log2(Nyquist)) + 1 just above the largest.
    """
    k_min = math.floor(math.log2(grid.dxi)) - 1
    k_max = math.ceil(math.log2(grid.dxi * (grid.n // 2))) + 1
    return k_min, k_max


def shell_indices(grid: TorusGrid) -> list[int]:
    k_min, k_max = shell_range(grid)
    return list(range(k_min, k_max + 1))


def project(f: SpectralField, k: int, kind: str = "shell") -> SpectralField:
    """Littlewood-Paley projector P_k (kind='shell') or P_{<=k} (kind='cumulative')."""
    if kind == "shell":
        w = f.grid.radial_eval(lambda r: chi_k(r, k))
    elif kind == "cumulative":
        w = f.grid.radial_eval(lambda r: chi_le(r, k))
    else:
        raise ValueError(f"kind must be 'shell' or 'cumulative', got {kind!r}")
    return SpectralField(f.grid, w * f.coefficients)


@dataclass(frozen=True)
class NormSpec:
    """A spatial norm recipe.

    With ``sobolev=True`` the norm is the exact Sobolev norm |<xi>^s f^|_2
    (p and q are ignored); otherwise the dyadic Besov norm B^s_{p,q}
    (homogeneous or inhomogeneous).  ``time_exponent`` tags the enclosing
    space-time norm when the spec travels with a trajectory.
    """

    s: float
    p: float = 2.0
    q: float = 2.0
    homogeneous: bool = False
    time_exponent: float | None = None
    sobolev: bool = False

    def __post_init__(self):
        if not self.sobolev:
            if not (1 <= self.p):
                raise ValueError(f"p must be in [1, inf], got {self.p}")
            if not (1 <= self.q):
                raise ValueError(f"q must be in [1, inf], got {self.q}")


def sobolev_norm(f: SpectralField, s: float) -> float:
    """H^s norm: l^2 norm of <xi>^s weighted coefficients, <xi> = (1+|xi|^2)^{1/2}."""
    w = (1.0 + f.grid.abs_xi_sq) ** (s / 2.0)
    return float(np.linalg.norm(w * f.coefficients))


def support_radius_range(f: SpectralField) -> tuple[float, float] | None:
    """(min, max) of |xi| over nonzero coefficients; None for the zero field."""
    nz = f.coefficients != 0
    if not np.any(nz):
        return None
    r = f.grid.abs_xi[nz]
    return float(r.min()), float(r.max())


def shell_touches(k: int, rng: tuple[float, float] | None) -> bool:
    """Whether the support of chi_k intersects the radius range."""
    if rng is None:
        return False
    return (5.0 / 8.0) * 2.0**k < rng[1] and (8.0 / 5.0) * 2.0**k > rng[0]


def _shell_lp(f: SpectralField, k: int, p: float, kind: str = "shell") -> float:
    g = project(f, k, kind)
    if not np.any(g.coefficients):
        return 0.0
    return lp_norm(g, p)


def besov_norm(f: SpectralField, spec: NormSpec) -> float:
    """Dyadic-shell Besov norm per ``spec``.

    Homogeneous: l^q over all nonempty shells of 2^{ks} |P_k f|_p.
    Inhomogeneous: |P_{<=0} f|_p + ( sum_{k>=1} (2^{ks} |P_k f|_p)^q )^{1/q}.
    L^p norms use physical-space rectangle-rule quadrature.  Shells whose
    support misses the coefficient support are skipped without projecting.
    """
    if spec.sobolev:
        return sobolev_norm(f, spec.s)
    k_min, k_max = shell_range(f.grid)
    rng = support_radius_range(f)
    if spec.homogeneous:
        terms = []
        for k in range(k_min, k_max + 1):
            if not shell_touches(k, rng):
                continue
            val = _shell_lp(f, k, spec.p)
            if val > 0.0:
                terms.append((2.0 ** (k * spec.s)) * val)
        return _lq(terms, spec.q)
    if rng is None:
        return 0.0
    low = lp_norm(project(f, 0, "cumulative"), spec.p) if rng[0] < 8.0 / 5.0 else 0.0
    terms = []
    for k in range(max(1, k_min), k_max + 1):
        if not shell_touches(k, rng):
            continue
        val = _shell_lp(f, k, spec.p)
        if val > 0.0:
            terms.append((2.0 ** (k * spec.s)) * val)
    return low + _lq(terms, spec.q)


def _lq(terms: Sequence[float], q: float) -> float:
    if not terms:
        return 0.0
    arr = np.asarray(terms, dtype=np.float64)
    if np.isinf(q):
        return float(arr.max())
    return float((arr**q).sum() ** (1.0 / q))


def norm_of(f: SpectralField, spec: NormSpec) -> float:
    return sobolev_norm(f, spec.s) if spec.sobolev else besov_norm(f, spec)


def quadrature_weights(times: np.ndarray) -> np.ndarray:
    """Composite Newton-Cotes weights on a uniform grid.

    Even interval counts use composite Simpson; odd counts >= 3 use Simpson on
    the head plus a 3/8 tail; a single interval falls back to the trapezoid
    rule.  Exact for cubics whenever no trapezoid segment is involved.
    """
    times = np.asarray(times, dtype=np.float64)
    m = times.size - 1
    if m < 1:
        raise ValueError("need at least two time nodes")
    dt = times[1] - times[0]
    if not np.allclose(np.diff(times), dt, rtol=1e-10, atol=1e-14):
        raise ValueError("time nodes must be uniformly spaced")
    w = np.zeros(times.size)
    if m == 1:
        w[:] = dt / 2.0
        return w
    if m % 2 == 0:
        w[0] = w[-1] = 1.0
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return w * dt / 3.0
    if m == 3:
        return np.array([1.0, 3.0, 3.0, 1.0]) * 3.0 * dt / 8.0
    head = quadrature_weights(times[: m - 2])
    w[: m - 2] = head
    w[m - 3 :] += np.array([1.0, 3.0, 3.0, 1.0]) * 3.0 * dt / 8.0
    return w


def spacetime_norm(
    fields: Sequence[SpectralField],
    times: np.ndarray,
    q_t: float,
    inner: NormSpec,
) -> float:
    """L^{q_t}_t of the inner spatial norm over a sampled trajectory.

    Finite q_t integrates |f(t)|^{q_t} by composite Simpson quadrature;
    q_t = inf takes the max over nodes.  Requires >= 3 uniform nodes.
    """
    times = np.asarray(times, dtype=np.float64)
    if len(fields) != times.size:
        raise ValueError("one field per time node required")
    if times.size < 3:
        raise ValueError("space-time norms need at least 3 time nodes")
    vals = np.array([norm_of(f, inner) for f in fields])
    if np.isinf(q_t):
        return float(vals.max())
    w = quadrature_weights(times)
    return float((w @ vals**q_t) ** (1.0 / q_t))


def shell_l2_profile(f: SpectralField) -> list[tuple[int, float]]:
    """Per-shell L^2 norms (k, |P_k f|_2) for reporting."""
    k_min, k_max = shell_range(f.grid)
    return [(k, _shell_lp(f, k, 2.0)) for k in range(k_min, k_max + 1)]
