"""zklab: pseudospectral laboratory for the Zakharov system on periodic tori.

Grid and propagators, Littlewood-Paley machinery, frequency-region
paraproducts with the normal-form bilinear operators, a reference solver plus
the Duhamel fixed-point scheme, and a ratio harness for the multilinear and
Strichartz estimates the construction rests on.
"""

__version__ = "0.1.0"

from .bilinear import (
    DecompositionParams,
    DenominatorReport,
    denominator_scan,
    omega,
    omega_tilde,
    paraproduct,
    region_member,
    region_sum,
)
from .estimates import (
    EstimateSpec,
    FieldProfile,
    RegularityPoint,
    build_registry,
    estimate_ratio,
    random_field,
    region_membership,
    restrict_field,
    scan_region,
    strichartz_check,
)
from .grid import (
    BlowUpError,
    ResonanceError,
    SpectralField,
    TorusGrid,
    apply_D_power,
    dealias,
    fourier_multiplier,
    lp_norm,
    make_grid,
    product,
    schrodinger_propagate,
    transform,
    wave_propagate,
)
from .littlewood_paley import (
    NormSpec,
    besov_norm,
    chi_k,
    chi_le,
    eta0,
    norm_of,
    project,
    shell_range,
    sobolev_norm,
    spacetime_norm,
)
from .zakharov import (
    Trajectory,
    ZakharovState,
    contraction_diagnostics,
    duhamel,
    from_first_order,
    hamiltonian,
    mass,
    normal_form_residual,
    picard_solve,
    reference_solve,
    rhs,
    to_first_order,
)

__all__ = [name for name in dir() if not name.startswith("_")]
