"""Numerical stress-testing of the multilinear and Strichartz estimates.

Each registered estimate carries the left/right-hand-side recipes exactly as
displayed in its source inequality, an admissible-region predicate, and the
explicit T-power.  "<~" is operationalized as ratio boundedness plus
refinement stability; implicit constants (the C(beta) and 2^{-beta theta}
factors) are treated as outputs: ratios are reported without them and the
theta exponents are fitted from dyadic shell families.

Test families are time-constant fields and free flows S(t) phi / W_alpha(t)
phi only; genuine nonlinear trajectories live in the solver module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .bilinear import DecompositionParams, omega, omega_tilde, paraproduct, region_sum
from .grid import (
    SpectralField,
    TorusGrid,
    apply_D_power,
    dealias,
    product,
    schrodinger_propagate,
    wave_propagate,
)
from .littlewood_paley import (
    NormSpec,
    besov_norm,
    chi_k,
    norm_of,
    quadrature_weights,
    shell_range,
    sobolev_norm,
    spacetime_norm,
)
from .zakharov import duhamel


# -- regularity points and admissible regions ---------------------------------


@dataclass(frozen=True)
class RegularityPoint:
    s: float
    l: float
    d: int

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"regularity regions are defined for d in {{2,3}}, got {self.d}")


def _not_corner(pt: RegularityPoint, corners: tuple[tuple[float, float], ...]) -> bool:
    return all(not (pt.s == c[0] and pt.l == c[1]) for c in corners)


def region_membership(pt: RegularityPoint, which: str) -> bool:
    """Exact evaluation of the admissible-region inequalities.

    All boundary constants are dyadic rationals, so float comparisons are
    exact.  Excluded corner points return False for their lemma.
    """
    s, l, d = pt.s, pt.l, pt.d
    if which == "theorem":
        top = l + (1.25 if d == 3 else 1.5)
        return l >= 0 and max((l + 1) / 2, l - 1) <= s <= top
    if which == "quad-1":
        return s >= 0 and l >= 0
    if which == "quad-2":
        return 2 * s >= l + 1
    if d == 3:
        if which == "boundary-1":
            return l >= -0.5 and s <= l + 2 and _not_corner(pt, ((1.5, -0.5),))
        if which == "boundary-2":
            return l >= -0.5 and s <= l + 1.25 and _not_corner(pt, ((0.75, -0.5),))
        if which == "boundary-3":
            return s >= max(l - 1, l / 2 + 0.25) and _not_corner(pt, ((1.5, 2.5),))
        if which == "cubic-1":
            return (
                l >= -0.25
                and s <= min(l + 2, 2 * l + 1.25)
                and _not_corner(pt, ((1.75, -0.25), (2.75, 0.75), (0.75, -0.25)))
            )
        if which == "cubic-2":
            return s >= 0.5
        if which == "cubic-3":
            return (
                s >= 0.25
                and l <= min(s + 1, 2 * s + 0.25)
                and _not_corner(pt, ((0.25, 0.75), (0.75, 1.75)))
            )
    else:
        if which == "boundary-1":
            return l >= -1 and s <= l + 2 and _not_corner(pt, ((1.0, -1.0),))
        if which == "boundary-2":
            return l >= -1 and s <= l + 1.5 and _not_corner(pt, ((0.5, -1.0),))
        if which == "boundary-3":
            return s >= max(l - 1, l / 2) and _not_corner(pt, ((1.0, 2.0),))
        if which == "cubic-1":
            return (
                l >= -0.5
                and s <= min(l + 2, 2 * l + 1.5)
                and _not_corner(pt, ((1.5, -0.5), (2.5, 0.5), (0.5, -0.5)))
            )
        if which == "cubic-2":
            return s >= -0.25
        if which == "cubic-3":
            return (
                s >= 0
                and l <= min(s + 1, 2 * s + 0.5)
                and _not_corner(pt, ((0.5, 1.5), (0.0, 0.5)))
            )
    raise ValueError(f"unknown region id {which!r}")


# -- random field generation ----------------------------------------------------


@dataclass(frozen=True)
class FieldProfile:
    """Recipe for a random field: sobolev-random | dyadic-shell | gaussian-bump.

    ``coherent`` dyadic shells carry positive real coefficients (random
    amplitudes, aligned phases): wave-packet-like fields that saturate the
    Bernstein L^4/L^2 growth.  Random phases average Bernstein away and probe
    the estimates off their extremal configurations instead.
    """

    kind: str
    seed: int = 0
    decay: float | None = None
    shell: int | None = None
    width: float | None = None
    mean_zero: bool = False
    coherent: bool = False

    def __post_init__(self):
        if self.kind not in ("sobolev-random", "dyadic-shell", "gaussian-bump"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.kind == "dyadic-shell" and self.shell is None:
            raise ValueError("dyadic-shell profile needs a shell index")


def _raw_field(grid: TorusGrid, profile: FieldProfile, rng=None) -> SpectralField:
    rng = rng or np.random.default_rng(profile.seed)
    shape = grid.shape
    r = grid.abs_xi
    if profile.kind == "sobolev-random":
        decay = profile.decay if profile.decay is not None else grid.d / 2.0 + 1.0
        c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        c *= (1.0 + r**2) ** (-decay / 2.0)
    elif profile.kind == "dyadic-shell":
        j = profile.shell
        plateau = (r >= 0.8 * 2.0**j) & (r <= 1.25 * 2.0**j) & grid.dealias_mask
        if not np.any(plateau):
            raise ValueError(f"dyadic shell {j} has no plateau points on this grid")
        if profile.coherent:
            c = np.where(plateau, rng.uniform(0.5, 1.5, shape).astype(np.complex128), 0.0)
        else:
            c = np.where(
                plateau, rng.standard_normal(shape) + 1j * rng.standard_normal(shape), 0.0
            )
    else:  # gaussian-bump
        w = profile.width if profile.width is not None else grid.box_length / 16.0
        c = np.exp(-(r**2) * w**2 / 4.0).astype(np.complex128)
    if profile.mean_zero:
        c = c.copy()
        c[(0,) * grid.d] = 0.0
    return dealias(SpectralField(grid, c))


def random_field(
    grid: TorusGrid,
    profile: FieldProfile,
    target: NormSpec | None = None,
    value: float = 1.0,
    rng=None,
) -> SpectralField:
    """Dealiased random field rescaled so ``norm_of(field, target) == value``."""
    f = _raw_field(grid, profile, rng)
    if target is None:
        return f
    if value == 0.0:
        return SpectralField.zero(grid)
    current = norm_of(f, target)
    if current == 0.0:
        raise ValueError("profile produced a zero field; cannot hit a nonzero target norm")
    return (value / current) * f


def restrict_field(f: SpectralField, coarse: TorusGrid) -> SpectralField:
    """Spectral truncation onto a coarser grid with the same box length.

    Coefficient values at shared lattice frequencies are preserved, so a
    restricted sample is the same field with its high tail removed.
    """
    if coarse.box_length != f.grid.box_length or coarse.d != f.grid.d:
        raise ValueError("restriction requires the same box and dimension")
    if coarse.n > f.grid.n:
        raise ValueError("target grid must be coarser")
    nf = f.grid.n
    pos = [(m % nf) for m in coarse.index_1d]
    take = np.ix_(*([np.asarray(pos)] * f.grid.d))
    return SpectralField(coarse, f.coefficients[take])


# -- estimate registry ------------------------------------------------------------


@dataclass
class SampleContext:
    """Everything one ratio sample needs: trajectories per slot plus norm helpers."""

    grid: TorusGrid
    params: DecompositionParams
    pt: RegularityPoint
    T: float
    times: np.ndarray
    family: str
    traj: dict = dc_field(default_factory=dict)

    def st(self, fields: Sequence[SpectralField], q_t: float, inner: NormSpec) -> float:
        """Space-time norm; constant-in-time trajectories use the exact T-power."""
        if self.family == "constant" or all(f is fields[0] for f in fields):
            base = norm_of(fields[0], inner)
            if np.isinf(q_t):
                return base
            return self.T ** (1.0 / q_t) * base
        return spacetime_norm(fields, self.times, q_t, inner)

    def scalar_lq(self, values: np.ndarray, q_t: float) -> float:
        """L^{q_t}_t quadrature of a sampled scalar function of time."""
        if np.isinf(q_t):
            return float(np.max(values))
        w = quadrature_weights(self.times)
        return float((w @ values**q_t) ** (1.0 / q_t))

    def sup_h(self, fields: Sequence[SpectralField], s: float) -> float:
        return max(sobolev_norm(f, s) for f in fields)

    def per_node(self, fn: Callable[[int], SpectralField]) -> list:
        if self.family == "constant":
            one = fn(0)
            return [one] * self.times.size
        return [fn(i) for i in range(self.times.size)]


@dataclass(frozen=True)
class EstimateSpec:
    """A registered inequality: recipes, region, T-power, beta-factor flag."""

    name: str
    lemma: str
    d: int
    region: str
    t_power: Fraction
    beta_factor: bool
    slots: tuple[tuple[str, str], ...]  # (slot name, flavor "u" | "N")
    evaluate: Callable[[SampleContext], tuple[float, float]]
    pure_t_power: bool = True  # both sides scale as exact powers of T for constants


def _b(s: float, p: float) -> NormSpec:
    return NormSpec(s=s, p=p, q=2.0)


def build_registry(d: int) -> dict[str, EstimateSpec]:
    """All estimates for dimension d: Strichartz, quadratic, boundary, cubic."""
    if d not in (2, 3):
        raise ValueError("registry is defined for d in {2, 3}")
    q_main = Fraction(8, 3) if d == 3 else Fraction(4)
    qm = float(q_main)
    # dual exponents of the lemma displays
    if d == 3:
        q_lhs_quad1, t_quad1 = Fraction(8, 5), Fraction(1, 4)
        q_lhs_quad2, t_quad2 = Fraction(4, 3), Fraction(3, 8)
        t_cubic1 = t_cubic2 = t_cubic3 = Fraction(1, 4)
    else:
        q_lhs_quad1, t_quad1 = Fraction(4, 3), Fraction(1, 2)
        q_lhs_quad2, t_quad2 = Fraction(8, 7), Fraction(5, 8)
        t_cubic1, t_cubic2, t_cubic3 = Fraction(1, 2), Fraction(1, 4), Fraction(1, 2)

    def D(f):
        return apply_D_power(f, 1.0)

    registry: dict[str, EstimateSpec] = {}

    def register(name, lemma, region, t_power, beta_factor, slots, evaluate, pure=True):
        registry[name] = EstimateSpec(
            name, lemma, d, region, t_power, beta_factor, slots, evaluate, pure
        )

    # Strichartz homogeneous / inhomogeneous (free flows by construction)
    def ev_strich_s_hom(ctx):
        s = ctx.pt.s
        phi = ctx.traj["phi"][0]
        flow = [schrodinger_propagate(phi, float(t)) for t in ctx.times]
        lhs = max(
            ctx.sup_h(flow, s),
            spacetime_norm(flow, ctx.times, qm, _b(s, 4.0)),
        )
        return lhs, sobolev_norm(phi, s)

    register(
        "strichartz-S-hom", "strichartz(1)", "quad-1", Fraction(0), False,
        (("phi", "u"),), ev_strich_s_hom, pure=False,
    )

    def ev_strich_w_hom(ctx):
        l = ctx.pt.l
        phi = ctx.traj["phi"][0]
        flow = [wave_propagate(phi, float(t), ctx.params.alpha) for t in ctx.times]
        return ctx.sup_h(flow, l), sobolev_norm(phi, l)

    register(
        "strichartz-W-hom", "strichartz(2)", "quad-1", Fraction(0), False,
        (("phi", "N"),), ev_strich_w_hom, pure=False,
    )

    def ev_strich_s_inhom(ctx):
        s = ctx.pt.s
        f = ctx.traj["f"]
        integral = [
            duhamel("schrodinger", f, ctx.times, float(t)) for t in ctx.times
        ]
        lhs = max(
            ctx.sup_h(integral, s),
            spacetime_norm(integral, ctx.times, qm, _b(s, 4.0)),
        )
        rhs = ctx.st(f, float(q_lhs_quad1), _b(s, 4.0 / 3.0))
        return lhs, rhs

    register(
        "strichartz-S-inhom", "strichartz(1)", "quad-1", Fraction(0), False,
        (("f", "u"),), ev_strich_s_inhom, pure=False,
    )

    def ev_strich_w_inhom(ctx):
        l = ctx.pt.l
        f = ctx.traj["f"]
        integral = [
            duhamel("wave", f, ctx.times, float(t), ctx.params.alpha) for t in ctx.times
        ]
        rhs = ctx.st(f, 4.0 / 3.0, _b(l, 4.0 / 3.0))
        return ctx.sup_h(integral, l), rhs

    register(
        "strichartz-W-inhom", "strichartz(2)", "quad-1", Fraction(0), False,
        (("f", "N"),), ev_strich_w_inhom, pure=False,
    )

    # Quadratic lemmas
    def ev_quad_lhhh(ctx):
        s, l = ctx.pt.s, ctx.pt.l
        N, u = ctx.traj["N"], ctx.traj["u"]
        prods = ctx.per_node(
            lambda i: region_sum(N[i], u[i], ("LH", "HH"), ctx.params)
        )
        lhs = ctx.st(prods, float(q_lhs_quad1), _b(s, 4.0 / 3.0))
        rhs = float(ctx.T) ** float(t_quad1) * ctx.sup_h(N, l) * ctx.st(u, qm, _b(s, 4.0))
        return lhs, rhs

    register(
        "quad-LH-HH", "quadratic(1)", "quad-1", t_quad1, False,
        (("N", "N"), ("u", "u")), ev_quad_lhhh,
    )

    def ev_quad_alphal(ctx):
        s, l = ctx.pt.s, ctx.pt.l
        N, u = ctx.traj["N"], ctx.traj["u"]
        prods = ctx.per_node(lambda i: paraproduct(N[i], u[i], "alphaL", ctx.params))
        lhs = ctx.st(prods, float(q_lhs_quad1), _b(s, 4.0 / 3.0))
        rhs = float(ctx.T) ** float(t_quad1) * ctx.sup_h(N, l) * ctx.st(u, qm, _b(s, 4.0))
        return lhs, rhs

    register(
        "quad-alphaL", "quadratic(1)", "quad-1", t_quad1, True,
        (("N", "N"), ("u", "u")), ev_quad_alphal,
    )

    def ev_quad_d_hh(ctx):
        s, l = ctx.pt.s, ctx.pt.l
        u, v = ctx.traj["u"], ctx.traj["v"]
        prods = ctx.per_node(lambda i: D(paraproduct(u[i], v[i], "HH", ctx.params)))
        lhs = ctx.st(prods, float(q_lhs_quad2), _b(l, 4.0 / 3.0))
        rhs = float(ctx.T) ** float(t_quad2) * ctx.sup_h(u, s) * ctx.st(v, qm, _b(s, 4.0))
        return lhs, rhs

    register(
        "quad-D-HH", "quadratic(2)", "quad-2", t_quad2, False,
        (("u", "u"), ("v", "u")), ev_quad_d_hh,
    )

    def ev_quad_d_alphal(ctx):
        s, l = ctx.pt.s, ctx.pt.l
        u, v = ctx.traj["u"], ctx.traj["v"]
        prods = ctx.per_node(
            lambda i: D(region_sum(u[i], v[i], ("alphaL", "Lalpha"), ctx.params))
        )
        lhs = ctx.st(prods, float(q_lhs_quad2), _b(l, 4.0 / 3.0))
        rhs = float(ctx.T) ** float(t_quad2) * ctx.sup_h(u, s) * ctx.st(v, qm, _b(s, 4.0))
        return lhs, rhs

    register(
        "quad-D-alphaL-Lalpha", "quadratic(2)", "quad-2", t_quad2, True,
        (("u", "u"), ("v", "u")), ev_quad_d_alphal,
    )

    # Boundary lemmas
    def ev_boundary_1(ctx):
        s, l = ctx.pt.s, ctx.pt.l
        N, u = ctx.traj["N"], ctx.traj["u"]
        oms = ctx.per_node(lambda i: omega(N[i], u[i], ctx.params))
        return ctx.sup_h(oms, s), ctx.sup_h(N, l) * ctx.sup_h(u, s)

    register(
        "boundary-1", "boundary(1)", "boundary-1", Fraction(0), True,
        (("N", "N"), ("u", "u")), ev_boundary_1,
    )

    def ev_boundary_2(ctx):
        s, l = ctx.pt.s, ctx.pt.l
        N, u = ctx.traj["N"], ctx.traj["u"]
        oms = ctx.per_node(lambda i: omega(N[i], u[i], ctx.params))
        lhs = ctx.st(oms, qm, _b(s, 4.0))
        rhs = ctx.sup_h(N, l) * ctx.st(u, qm, _b(s, 4.0))
        return lhs, rhs

    register(
        "boundary-2", "boundary(2)", "boundary-2", Fraction(0), True,
        (("N", "N"), ("u", "u")), ev_boundary_2,
    )

    def ev_boundary_3(ctx):
        s, l = ctx.pt.s, ctx.pt.l
        u, v = ctx.traj["u"], ctx.traj["v"]
        oms = ctx.per_node(lambda i: D(omega_tilde(u[i], v[i], ctx.params)))
        return ctx.sup_h(oms, l), ctx.sup_h(u, s) * ctx.sup_h(v, s)

    register(
        "boundary-3", "boundary(3)", "boundary-3", Fraction(0), True,
        (("u", "u"), ("v", "u")), ev_boundary_3,
    )

    # Cubic lemmas
    def ev_cubic_1(ctx):
        s, l = ctx.pt.s, ctx.pt.l
        M, N, u = ctx.traj["M"], ctx.traj["N"], ctx.traj["u"]
        oms = ctx.per_node(lambda i: omega(M[i], product(N[i], u[i]), ctx.params))
        lhs = ctx.st(oms, float(q_lhs_quad1), _b(s, 4.0 / 3.0))
        rhs = (
            float(ctx.T) ** float(t_cubic1)
            * ctx.sup_h(M, l)
            * ctx.sup_h(N, l)
            * ctx.st(u, qm, _b(s, 4.0))
        )
        return lhs, rhs

    register(
        "cubic-1", "cubic(1)", "cubic-1", t_cubic1, False,
        (("M", "N"), ("N", "N"), ("u", "u")), ev_cubic_1,
    )

    def ev_cubic_2(ctx):
        s = ctx.pt.s
        u, v, w = ctx.traj["u"], ctx.traj["v"], ctx.traj["w"]
        oms = ctx.per_node(
            lambda i: omega(D(product(u[i], v[i])), w[i], ctx.params)
        )
        lhs = ctx.st(oms, float(q_lhs_quad1), _b(s, 4.0 / 3.0))
        if d == 3:
            mixed = np.array(
                [
                    sobolev_norm(u[i], s) * besov_norm(v[i], _b(s, 4.0))
                    + besov_norm(u[i], _b(s, 4.0)) * sobolev_norm(v[i], s)
                    for i in range(ctx.times.size)
                ]
            )
            rhs = float(ctx.T) ** float(t_cubic2) * ctx.scalar_lq(mixed, qm) * ctx.sup_h(w, s)
        else:
            rhs = (
                float(ctx.T) ** float(t_cubic2)
                * ctx.st(u, qm, _b(s, 4.0))
                * ctx.st(v, qm, _b(s, 4.0))
                * ctx.sup_h(w, s)
            )
        return lhs, rhs

    register(
        "cubic-2", "cubic(2)", "cubic-2", t_cubic2, False,
        (("u", "u"), ("v", "u"), ("w", "u")), ev_cubic_2,
    )

    def ev_cubic_3(ctx):
        s, l = ctx.pt.s, ctx.pt.l
        N, u, v = ctx.traj["N"], ctx.traj["u"], ctx.traj["v"]
        om1 = ctx.per_node(lambda i: D(omega_tilde(product(N[i], u[i]), v[i], ctx.params)))
        om2 = ctx.per_node(lambda i: D(omega_tilde(v[i], product(N[i], u[i]), ctx.params)))
        lhs = ctx.st(om1, 1.0, NormSpec(s=l, sobolev=True)) + ctx.st(
            om2, 1.0, NormSpec(s=l, sobolev=True)
        )
        rhs = (
            float(ctx.T) ** float(t_cubic3)
            * ctx.sup_h(N, l)
            * ctx.st(u, qm, _b(s, 4.0))
            * ctx.st(v, qm, _b(s, 4.0))
        )
        return lhs, rhs

    register(
        "cubic-3", "cubic(3)", "cubic-3", t_cubic3, False,
        (("N", "N"), ("u", "u"), ("v", "u")), ev_cubic_3,
    )

    return registry


#: interior admissible sample points used by the acceptance suite and CLI defaults
INTERIOR_POINTS: dict[str, tuple[tuple[float, float], tuple[float, float]]] = {
    "quad-1": ((1.0, 0.5), (1.5, 1.0)),
    "quad-2": ((1.0, 0.5), (1.5, 1.0)),
    "boundary-1": ((1.0, 0.5), (1.5, 1.0)),
    "boundary-2": ((1.0, 0.5), (1.25, 1.0)),
    "boundary-3": ((1.0, 0.5), (1.5, 1.0)),
    "cubic-1": ((1.0, 0.5), (1.25, 1.0)),
    "cubic-2": ((1.0, 0.5), (1.5, 1.0)),
    "cubic-3": ((1.0, 0.5), (1.5, 1.0)),
}


def _slot_decay(flavor: str, pt: RegularityPoint) -> float:
    base = pt.s if flavor == "u" else pt.l
    return max(base, 0.0) + pt.d / 2.0 + 0.51


def build_sample(
    spec: EstimateSpec,
    pt: RegularityPoint,
    grid: TorusGrid,
    params: DecompositionParams,
    T: float,
    times: np.ndarray,
    family: str,
    rng,
) -> SampleContext:
    """Draw one sample: unit-normalized random fields per slot, flowed or constant."""
    ctx = SampleContext(grid=grid, params=params, pt=pt, T=T, times=times, family=family)
    for slot, flavor in spec.slots:
        profile = FieldProfile(kind="sobolev-random", decay=_slot_decay(flavor, pt))
        target = NormSpec(s=pt.s if flavor == "u" else pt.l, sobolev=True)
        f0 = random_field(grid, profile, target, 1.0, rng=rng)
        if family == "constant":
            ctx.traj[slot] = [f0] * times.size
        elif flavor == "u":
            ctx.traj[slot] = [schrodinger_propagate(f0, float(t)) for t in times]
        else:
            ctx.traj[slot] = [wave_propagate(f0, float(t), params.alpha) for t in times]
    return ctx


def estimate_ratio(
    spec: EstimateSpec,
    pt: RegularityPoint,
    T: float,
    grid: TorusGrid,
    params: DecompositionParams,
    samples: int,
    seed: int = 0,
    nodes: int = 5,
    flow_every: int = 4,
) -> dict:
    """Per-sample LHS/RHS ratios for one estimate at one regularity point.

    The RHS omits the unknowable 2^{-beta theta} / C(beta) factor; beta is
    recorded so theta can be fitted downstream.  Points outside the
    admissible region are tagged exploratory rather than rejected.
    """
    times = np.linspace(0.0, T, nodes)
    rng = np.random.default_rng(seed)
    ratios = []
    for i in range(samples):
        family = "flow" if flow_every and i % flow_every == 0 else "constant"
        ctx = build_sample(spec, pt, grid, params, T, times, family, rng)
        lhs, rhs = spec.evaluate(ctx)
        if rhs > 0:
            ratios.append(lhs / rhs)
        else:
            ratios.append(0.0 if lhs == 0 else math.inf)
    return {
        "spec": spec.name,
        "lemma": spec.lemma,
        "s": pt.s,
        "l": pt.l,
        "d": pt.d,
        "T": T,
        "seed": seed,
        "beta": params.beta,
        "exploratory": not region_membership(pt, spec.region),
        "ratios": ratios,
        "sup_ratio": max(ratios) if ratios else 0.0,
    }


# -- dyadic shell families and region scans ---------------------------------------


def _shell_l4_table(f: SpectralField) -> dict[int, float]:
    """Per-shell L^4 norms, skipping empty shells."""
    from .littlewood_paley import project
    from .grid import lp_norm

    k_min, k_max = shell_range(f.grid)
    out = {}
    for k in range(k_min, k_max + 1):
        g = project(f, k, "shell")
        if np.any(g.coefficients):
            out[k] = lp_norm(g, 4.0)
    return out


def _besov4_from_table(table: dict[int, float], low: float, s: float) -> float:
    acc = sum((2.0 ** (k * s) * v) ** 2 for k, v in table.items() if k >= 1)
    return low + acc**0.5


def hl_family_tables(
    grid: TorusGrid,
    params: DecompositionParams,
    j_values: Sequence[int],
    low_shell: int,
    samples: int,
    seed: int = 0,
) -> list[dict]:
    """Cached norm tables for the HL-aligned dyadic family.

    For each high shell j: N random on the shell-j plateau, u random on the
    fixed low shell; tables hold everything needed to evaluate the
    boundary-estimate ratio at any (s, l) afterwards.
    """
    rng = np.random.default_rng(seed)
    out = []
    from .grid import lp_norm
    from .littlewood_paley import project

    for j in j_values:
        for it in range(samples):
            # coherent shells saturate Bernstein: the configuration whose
            # dyadic sums diverge exactly past the admissible boundary
            N = _raw_field(
                grid, FieldProfile(kind="dyadic-shell", shell=j, coherent=True), rng=rng
            )
            u = _raw_field(
                grid,
                FieldProfile(kind="dyadic-shell", shell=low_shell, coherent=True),
                rng=rng,
            )
            om = omega(N, u, params)
            # keep only what (s, l) sweeps need: per-shell L^4 tables and the
            # weighted coefficient magnitudes for H^l norms of N at any l
            w2 = 1.0 + grid.abs_xi_sq
            mag2 = np.abs(N.coefficients) ** 2
            nz = mag2 > 0
            out.append(
                {
                    "j": j,
                    "sample": it,
                    "om_l4": _shell_l4_table(om),
                    "om_low_l4": lp_norm(project(om, 0, "cumulative"), 4.0),
                    "u_l4": _shell_l4_table(u),
                    "u_low_l4": lp_norm(project(u, 0, "cumulative"), 4.0),
                    "om_zero": not np.any(om.coefficients),
                    "_n_mag2": mag2[nz],
                    "_n_w2": w2[nz],
                }
            )
    return out


def _family_ratio(entry: dict, s: float, l: float) -> float:
    lhs = _besov4_from_table(entry["om_l4"], entry["om_low_l4"], s)
    n_h = float(np.sqrt(np.sum(entry["_n_w2"] ** l * entry["_n_mag2"])))
    u_b = _besov4_from_table(entry["u_l4"], entry["u_low_l4"], s)
    rhs = n_h * u_b
    return lhs / rhs if rhs > 0 else 0.0


def fit_growth_exponent(js: Sequence[int], ratios: Sequence[float]) -> float:
    """Least-squares slope of log2(ratio) against the shell index."""
    js = np.asarray(js, dtype=np.float64)
    r = np.asarray(ratios, dtype=np.float64)
    good = r > 0
    if good.sum() < 2:
        return math.nan
    return float(np.polyfit(js[good], np.log2(r[good]), 1)[0])


def scan_region(
    grid: TorusGrid,
    params: DecompositionParams,
    d: int,
    s_values: Sequence[float],
    l_values: Sequence[float],
    j_values: Sequence[int],
    low_shell: int,
    samples: int = 2,
    seed: int = 0,
    region: str = "boundary-2",
) -> list[dict]:
    """Fitted ratio-growth exponents over an (s, l) grid for the HL dyadic family.

    Returns one row per (s, l): the exponent of the per-shell ratio in 2^j and
    whether the point lies inside the named admissible region.
    """
    tables = hl_family_tables(grid, params, j_values, low_shell, samples, seed)
    rows = []
    for s in s_values:
        for l in l_values:
            js, ratios = [], []
            for j in j_values:
                vals = [
                    _family_ratio(e, s, l)
                    for e in tables
                    if e["j"] == j and not e["om_zero"]
                ]
                if vals:
                    js.append(j)
                    ratios.append(float(np.mean(vals)))
            exponent = fit_growth_exponent(js, ratios)
            rows.append(
                {
                    "s": s,
                    "l": l,
                    "exponent": exponent,
                    "inside": region_membership(RegularityPoint(s, l, d), region),
                }
            )
    return rows


# -- Strichartz admissibility -------------------------------------------------------


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, int):
        return Fraction(x)
    if math.isinf(x):
        raise TypeError("use math.inf only through the float path")
    return Fraction(x).limit_denominator(10**6)


def validate_admissible(kind: str, q, r, d: int) -> None:
    """Exact check of the admissibility identities; raises naming the violation."""
    inf_q = q == math.inf
    inf_r = r == math.inf
    qf = None if inf_q else _as_fraction(q)
    rf = None if inf_r else _as_fraction(r)
    if (not inf_q and qf < 2) or (not inf_r and rf < 2):
        raise ValueError(f"inadmissible ({q}, {r}): exponents must satisfy 2 <= q, r <= inf")
    lhs = Fraction(0) if inf_q else 1 / qf
    half_minus = Fraction(1, 2) - (Fraction(0) if inf_r else 1 / rf)
    if kind == "schrodinger":
        rhs = Fraction(d, 2) * half_minus
        if lhs != rhs:
            raise ValueError(
                f"inadmissible ({q}, {r}, d={d}): 1/q = {lhs} but d/2 (1/2 - 1/r) = {rhs}"
            )
        if d == 2 and inf_r:
            if not inf_q and qf == 2:
                raise ValueError("the endpoint (q, r, d) = (2, inf, 2) is excluded")
            raise ValueError("d = 2 requires r < inf")
        if d == 3 and (inf_r or rf > 6):
            raise ValueError("d = 3 requires 2 <= r <= 6")
    elif kind == "wave":
        rhs = Fraction(d - 1, 2) * half_minus
        if lhs != rhs:
            raise ValueError(
                f"inadmissible ({q}, {r}, d={d}): 1/q = {lhs} but (d-1)/2 (1/2 - 1/r) = {rhs}"
            )
        if d == 3 and inf_r:
            if not inf_q and qf == 2:
                raise ValueError("the endpoint (q, r, d) = (2, inf, 3) is excluded")
            raise ValueError("d = 3 requires r < inf for the wave flow")
    else:
        raise ValueError(f"kind must be 'schrodinger' or 'wave', got {kind!r}")


def strichartz_check(
    kind: str,
    pt: RegularityPoint,
    q,
    r,
    samples: int,
    grid: TorusGrid,
    T: float = 1.0,
    nodes: int = 9,
    seed: int = 0,
    alpha: float = 1.0,
) -> dict:
    """Homogeneous and inhomogeneous Strichartz ratios for an admissible pair."""
    validate_admissible(kind, q, r, pt.d)
    s = pt.s if kind == "schrodinger" else pt.l
    qf = math.inf if q == math.inf else float(_as_fraction(q))
    rf = math.inf if r == math.inf else float(_as_fraction(r))
    times = np.linspace(0.0, T, nodes)
    rng = np.random.default_rng(seed)
    hom, inhom = [], []
    for _ in range(samples):
        phi = random_field(
            grid,
            FieldProfile(kind="sobolev-random", decay=s + grid.d / 2.0 + 0.51),
            NormSpec(s=s, sobolev=True),
            1.0,
            rng=rng,
        )
        if kind == "schrodinger":
            flow = [schrodinger_propagate(phi, float(t)) for t in times]
        else:
            flow = [wave_propagate(phi, float(t), alpha) for t in times]
        lhs = max(sobolev_norm(f, s) for f in flow)
        if not math.isinf(qf):
            lhs = max(lhs, spacetime_norm(flow, times, qf, _b(s, rf)))
        elif not math.isinf(rf):
            lhs = max(lhs, max(besov_norm(f, _b(s, rf)) for f in flow))
        hom.append(lhs)
        integral = [duhamel(kind, flow, times, float(t), alpha) for t in times]
        lhs_i = max(sobolev_norm(f, s) for f in integral)
        if kind == "schrodinger" and not math.isinf(qf):
            lhs_i = max(lhs_i, spacetime_norm(integral, times, qf, _b(s, rf)))
        qd = qf / (qf - 1.0) if not math.isinf(qf) else 1.0
        rd = rf / (rf - 1.0) if not math.isinf(rf) else 1.0
        rhs_i = spacetime_norm(flow, times, qd, _b(s, rd))
        inhom.append(lhs_i / rhs_i if rhs_i > 0 else 0.0)
    return {
        "kind": kind,
        "q": str(q),
        "r": str(r),
        "d": pt.d,
        "seed": seed,
        "homogeneous_ratios": hom,
        "sup_homogeneous": max(hom),
        "inhomogeneous_ratios": inhom,
        "sup_inhomogeneous": max(inhom),
    }
