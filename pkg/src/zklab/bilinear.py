"""Frequency-region paraproducts and the normal-form bilinear operators.

Region conventions (shell indices k1 for the first factor, k2 for the second,
separation parameter K, threshold beta):

    HH:      |k1 - k2| <= K - 1
    LH:      k1 <= k2 - K
    HL:      k2 <= k1 - K          (= alphaL for k1 <= beta, XL for k1 > beta)
    Lalpha:  LH with k2 <= beta    (roles of alphaL swapped)
    LX:      LH with k2 > beta

On a finite lattice the lowest shell k_min acts cumulatively (it carries the
zero mode and everything below the smallest nonzero frequency), so the pair
decomposition reproduces the product exactly, means included.

The operators omega / omega_tilde are evaluated as masked pair sums over the
lattice (no FFT shortcut exists: the resonance denominator couples input and
output frequencies).  Output frequencies falling outside the representable
lattice are dropped, matching spectral truncation of the exact product.  The
unrestricted double-loop oracle in the test suite mirrors these semantics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Iterator

import numpy as np

from .grid import ResonanceError, SpectralField, TorusGrid, dealias, product
from .littlewood_paley import chi_k, chi_le, shell_range

REGION_TAGS = ("HH", "LH", "HL", "alphaL", "XL", "Lalpha", "LX")

#: relative threshold below which a resonance denominator aborts the run
DENOMINATOR_GUARD = 1e-9


@dataclass(frozen=True)
class DecompositionParams:
    """Paraproduct parameters: separation K >= 5, threshold beta, speed alpha.

    beta defaults to ceil(K + |log2 alpha|), the smallest integer satisfying
    the non-resonance condition beta >= K + |log2 alpha|.
    """

    K: int = 5
    alpha: float = 1.0
    beta: int | None = None

    def __post_init__(self):
        if not isinstance(self.K, (int, np.integer)) or self.K < 5:
            raise ValueError(f"K must be an integer >= 5, got {self.K}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        floor_beta = self.K + abs(math.log2(self.alpha))
        if self.beta is None:
            object.__setattr__(self, "beta", math.ceil(floor_beta - 1e-12))
        else:
            if not isinstance(self.beta, (int, np.integer)):
                raise ValueError(f"beta must be an integer, got {self.beta!r}")
            if self.beta < floor_beta - 1e-12:
                raise ValueError(
                    f"beta = {self.beta} violates beta >= K + |log2 alpha| = {floor_beta}"
                )


def region_member(k1: int, k2: int, tag: str, params: DecompositionParams) -> bool:
    """Whether the shell pair (k1, k2) belongs to the named region."""
    K, beta = params.K, params.beta
    if tag == "HH":
        return abs(k1 - k2) <= K - 1
    if tag == "LH":
        return k1 <= k2 - K
    if tag == "HL":
        return k2 <= k1 - K
    if tag == "alphaL":
        return k2 <= k1 - K and k1 <= beta
    if tag == "XL":
        return k2 <= k1 - K and k1 > beta
    if tag == "Lalpha":
        return k1 <= k2 - K and k2 <= beta
    if tag == "LX":
        return k1 <= k2 - K and k2 > beta
    raise ValueError(f"unknown region tag {tag!r}")


def _shell_weight(grid: TorusGrid, k: int) -> np.ndarray:
    """chi_k on the lattice; the bottom shell is cumulative (holds the zero mode)."""
    k_min, _ = shell_range(grid)
    if k == k_min:
        return grid.radial_eval(lambda r: chi_le(r, k))
    return grid.radial_eval(lambda r: chi_k(r, k))


def _cum_weight(grid: TorusGrid, j: int) -> np.ndarray | None:
    """Sum of shell weights for shells <= j; None when no shell qualifies."""
    k_min, _ = shell_range(grid)
    if j < k_min:
        return None
    return grid.radial_eval(lambda r: chi_le(r, j))


def _band_weight(grid: TorusGrid, lo: int, hi: int) -> np.ndarray | None:
    """Sum of shell weights for lo <= k <= hi (telescoped)."""
    k_min, k_max = shell_range(grid)
    lo, hi = max(lo, k_min), min(hi, k_max)
    if hi < lo:
        return None
    high = grid.radial_eval(lambda r: chi_le(r, hi))
    if lo == k_min:
        return high
    return high - grid.radial_eval(lambda r: chi_le(r, lo - 1))


def _weighted(f: SpectralField, w: np.ndarray) -> SpectralField:
    return SpectralField(f.grid, w * f.coefficients)


def paraproduct(
    f: SpectralField, g: SpectralField, tag: str, params: DecompositionParams
) -> SpectralField:
    """Region-restricted product: sum of dealiased P_{k1} f * P_{k2} g over the region.

    Pairs are grouped so one factor carries a telescoped (cumulative or
    banded) weight, which is exact and costs one product per group.
    """
    f._check_grid(g)
    if tag not in REGION_TAGS:
        raise ValueError(f"unknown region tag {tag!r}")
    grid = f.grid
    k_min, k_max = shell_range(grid)
    K, beta = params.K, params.beta
    acc = np.zeros(grid.shape, dtype=np.complex128)

    def add_group(wf: np.ndarray | None, wg: np.ndarray | None) -> None:
        if wf is None or wg is None:
            return
        ff = wf * f.coefficients
        gg = wg * g.coefficients
        if not (np.any(ff) and np.any(gg)):
            return
        p = product(SpectralField(grid, ff), SpectralField(grid, gg), dealiased=True)
        np.add(acc, p.coefficients, out=acc)

    if tag == "HH":
        for k1 in range(k_min, k_max + 1):
            add_group(_shell_weight(grid, k1), _band_weight(grid, k1 - K + 1, k1 + K - 1))
    elif tag == "LH":
        for k2 in range(k_min, k_max + 1):
            add_group(_cum_weight(grid, k2 - K), _shell_weight(grid, k2))
    elif tag in ("HL", "alphaL", "XL"):
        for k1 in range(k_min, k_max + 1):
            if tag == "alphaL" and k1 > beta:
                continue
            if tag == "XL" and k1 <= beta:
                continue
            add_group(_shell_weight(grid, k1), _cum_weight(grid, k1 - K))
    else:  # Lalpha / LX
        for k2 in range(k_min, k_max + 1):
            if tag == "Lalpha" and k2 > beta:
                continue
            if tag == "LX" and k2 <= beta:
                continue
            add_group(_cum_weight(grid, k2 - K), _shell_weight(grid, k2))
    return SpectralField(grid, acc)


def region_sum(
    f: SpectralField, g: SpectralField, tags: tuple[str, ...], params: DecompositionParams
) -> SpectralField:
    out = SpectralField.zero(f.grid)
    for tag in tags:
        out = out + paraproduct(f, g, tag, params)
    return out


# -- masked pair sums ---------------------------------------------------------


def _high_shells(grid: TorusGrid, params: DecompositionParams) -> Iterator[tuple[int, int]]:
    """(k1, j) with k1 > beta, j = k1 - K >= k_min: shells carrying XL pairs."""
    k_min, k_max = shell_range(grid)
    for k1 in range(max(params.beta + 1, k_min), k_max + 1):
        j = k1 - params.K
        if j >= k_min:
            yield k1, j


def _index_matrix(grid: TorusGrid, flat: np.ndarray) -> np.ndarray:
    """(npoints, d) integer frequency indices for flattened lattice positions."""
    cols = []
    for m in grid.index_mesh:
        cols.append(np.broadcast_to(m, grid.shape).ravel()[flat])
    return np.stack(cols, axis=1)


def _pair_sum(
    f: SpectralField,
    g: SpectralField,
    params: DecompositionParams,
    denom_kind: str,
    swap_roles: bool,
) -> np.ndarray:
    """Accumulate masked sum_{a+eta=xi} w(a,eta) f^(a) g^(eta) / denom.

    ``swap_roles`` puts the high-shell mask on the second factor (the LX side
    of omega_tilde).  Summation is sequential over k1 and lexicographic in
    eta, so results are bit-reproducible.
    """
    grid = f.grid
    n, d = grid.n, grid.d
    alpha = params.alpha
    scale = 1.0 / grid.box_length ** (d / 2.0)
    fa = f.coefficients.ravel()
    ga = g.coefficients.ravel()
    abs_xi_flat = grid.abs_xi.ravel()
    out = np.zeros(n**d, dtype=np.complex128)

    hi_coeffs, lo_coeffs = (ga, fa) if swap_roles else (fa, ga)

    for k1, j in _high_shells(grid, params):
        w_hi = _shell_weight(grid, k1).ravel()
        w_lo = grid.radial_eval(lambda r: chi_le(r, j)).ravel()
        hi_idx = np.nonzero((w_hi > 0) & (hi_coeffs != 0))[0]
        lo_idx = np.nonzero((w_lo > 0) & (lo_coeffs != 0))[0]
        if hi_idx.size == 0 or lo_idx.size == 0:
            continue
        lo_idx = lo_idx[np.lexsort(_index_matrix(grid, lo_idx).T[::-1])]
        m_hi = _index_matrix(grid, hi_idx)
        abs_hi = abs_xi_flat[hi_idx]
        vals_hi = hi_coeffs[hi_idx] * w_hi[hi_idx]
        for p in lo_idx:
            m_lo = _index_matrix(grid, np.array([p]))[0]
            abs_lo = abs_xi_flat[p]
            val_lo = lo_coeffs[p] * w_lo[p]
            m_xi = m_hi + m_lo
            ok = np.all((m_xi >= -(n // 2)) & (m_xi <= n // 2 - 1), axis=1)
            if not np.any(ok):
                continue
            m_xi = m_xi[ok]
            abs_xi_out = grid.dxi * np.sqrt((m_xi.astype(np.float64) ** 2).sum(axis=1))
            if swap_roles:
                abs_a, abs_eta = abs_lo, abs_hi[ok]
            else:
                abs_a, abs_eta = abs_hi[ok], abs_lo
            if denom_kind == "omega":
                denom = -(abs_xi_out**2) + alpha * abs_a + abs_eta**2
            else:
                denom = abs_a**2 - abs_eta**2 - alpha * abs_xi_out
            guard = DENOMINATOR_GUARD * np.maximum(abs_xi_out**2, 1.0)
            bad = np.abs(denom) < guard
            if np.any(bad):
                b = int(np.nonzero(bad)[0][0])
                if swap_roles:
                    a_idx, eta_idx = m_lo, m_hi[ok][b]
                else:
                    a_idx, eta_idx = m_hi[ok][b], m_lo
                raise ResonanceError(
                    f"near-resonant denominator at xi={tuple((a_idx + eta_idx).tolist())}, "
                    f"eta={tuple(np.atleast_1d(eta_idx).tolist())}: "
                    f"|denom| = {abs(float(denom[b])):.3e}"
                )
            contrib = vals_hi[ok] * val_lo / denom
            flat_xi = np.ravel_multi_index(tuple((m_xi % n).T), grid.shape)
            # xi = a + eta is injective in a for fixed eta: no duplicate indices
            out[flat_xi] += contrib
    return out * scale


def omega(
    f: SpectralField, g: SpectralField, params: DecompositionParams
) -> SpectralField:
    """Normal-form operator for the Schroedinger part.

    Frequency-space sum over XL pairs (first factor in shells k1 > beta,
    second in shells <= k1 - K) of f^(xi-eta) g^(eta) divided by
    -|xi|^2 + alpha |xi-eta| + |eta|^2.  Raises ResonanceError when a summed
    pair has |denominator| < 1e-9 max(|xi|^2, 1).
    """
    f._check_grid(g)
    out = _pair_sum(f, g, params, "omega", swap_roles=False)
    return SpectralField(f.grid, out.reshape(f.grid.shape))


def omega_tilde(
    f: SpectralField, g: SpectralField, params: DecompositionParams
) -> SpectralField:
    """Normal-form operator for the wave part; the second factor enters conjugated.

    Region XL + LX, weight alpha, denominator |xi-eta|^2 - |eta|^2 - alpha |xi|.
    """
    f._check_grid(g)
    gbar = g.conj()
    out = _pair_sum(f, gbar, params, "omega_tilde", swap_roles=False)
    out += _pair_sum(f, gbar, params, "omega_tilde", swap_roles=True)
    coeffs = params.alpha * out.reshape(f.grid.shape)
    return SpectralField(f.grid, coeffs)


# -- denominator scan ---------------------------------------------------------


@dataclass
class DenominatorReport:
    """Exhaustive minima of |denominator| over the masked pair set."""

    which: str
    params: DecompositionParams
    grid_meta: dict
    per_shell: dict = dc_field(default_factory=dict)  # k1 -> (min, xi idx, eta idx)
    global_min: float = math.inf
    global_argmin: tuple | None = None

    @property
    def empty(self) -> bool:
        return not self.per_shell

    def rows(self) -> list[tuple]:
        out = []
        for k1 in sorted(self.per_shell):
            m, xi, eta = self.per_shell[k1]
            out.append(
                (k1, m, ";".join(map(str, xi)), ";".join(map(str, eta)))
            )
        return out


def denominator_scan(
    grid: TorusGrid, params: DecompositionParams, which: str = "omega"
) -> DenominatorReport:
    """Scan every masked pair on the lattice and record denominator minima.

    Reports the per-shell (shell of the high factor) and global minimum of
    |denominator|, with the offending frequency pair.  Report-only: omega and
    omega_tilde enforce the guard themselves.
    """
    if which not in ("omega", "omega_tilde"):
        raise ValueError(f"which must be 'omega' or 'omega_tilde', got {which!r}")
    report = DenominatorReport(
        which=which,
        params=params,
        grid_meta={"d": grid.d, "n": grid.n, "box_length": grid.box_length},
    )
    n, d = grid.n, grid.d
    alpha = params.alpha
    abs_xi_flat = grid.abs_xi.ravel()
    sides = [False] if which == "omega" else [False, True]

    for k1, j in _high_shells(grid, params):
        best = math.inf
        best_pair = None
        for swap in sides:
            w_hi = _shell_weight(grid, k1).ravel()
            w_lo = grid.radial_eval(lambda r: chi_le(r, j)).ravel()
            hi_idx = np.nonzero(w_hi > 0)[0]
            lo_idx = np.nonzero(w_lo > 0)[0]
            if hi_idx.size == 0 or lo_idx.size == 0:
                continue
            m_hi = _index_matrix(grid, hi_idx)
            abs_hi = abs_xi_flat[hi_idx]
            for p in lo_idx:
                m_lo = _index_matrix(grid, np.array([p]))[0]
                abs_lo = abs_xi_flat[p]
                m_xi = m_hi + m_lo
                ok = np.all((m_xi >= -(n // 2)) & (m_xi <= n // 2 - 1), axis=1)
                if not np.any(ok):
                    continue
                mm = m_xi[ok]
                abs_out = grid.dxi * np.sqrt((mm.astype(np.float64) ** 2).sum(axis=1))
                a_abs = abs_hi[ok] if not swap else np.full(mm.shape[0], abs_lo)
                e_abs = np.full(mm.shape[0], abs_lo) if not swap else abs_hi[ok]
                if which == "omega":
                    denom = -(abs_out**2) + alpha * a_abs + e_abs**2
                else:
                    denom = a_abs**2 - e_abs**2 - alpha * abs_out
                absd = np.abs(denom)
                b = int(np.argmin(absd))
                if absd[b] < best:
                    best = float(absd[b])
                    if swap:
                        eta_idx = m_hi[ok][b]
                        a_idx = m_lo
                    else:
                        eta_idx = m_lo
                        a_idx = m_hi[ok][b]
                    best_pair = (tuple(mm[b].tolist()), tuple(np.atleast_1d(eta_idx).tolist()))
        if best_pair is not None:
            report.per_shell[k1] = (best, best_pair[0], best_pair[1])
            if best < report.global_min:
                report.global_min = best
                report.global_argmin = best_pair
    return report
