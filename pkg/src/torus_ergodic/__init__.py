"""Quantized symbols on the flat torus and their Schrodinger ergodic averages."""

from .dynamics import (
    AveragingReport,
    average_factor,
    averaging_defect,
    classical_flow_symbol,
    conjugate_operator,
    ergodic_average,
    evolve_symbol,
    finite_time_average,
    quantum_correction,
)
from .errors import (
    BoundViolation,
    BoxMismatchError,
    BoxTooSmallError,
    ConvergenceError,
    DimensionError,
    DivergenceError,
    ResolutionError,
    SizeLimitError,
    TorusError,
)
from .lattice import (
    ModeBox,
    count_states,
    eigenvalue,
    enumerate_energy_shell,
    mode_box,
    resonance_set,
)
from .operators import (
    OperatorMatrix,
    StateVector,
    adjoint,
    apply,
    compose,
    compress,
    operator_norm,
    quantize,
    rank,
    singular_values,
)
from .semiclassical import (
    AverageDecomposition,
    DecayCurve,
    decompose_average,
    geometric_grid,
    n1_rank_certificate,
    sn_ideal_checks,
    sn_scan,
    tau_E,
    tau_E_state,
)
from .symbols import (
    SymbolCoefficients,
    SymbolGrid,
    analyze,
    bessel_constant,
    classical_average,
    norm_r,
    random_symbol,
    sobolev_sup,
    sup_norm,
    symbol_from_terms,
    synthesize,
    synthesize_grid,
    truncate_frequencies,
)

__version__ = "0.1.0"
