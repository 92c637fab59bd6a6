"""Conditional optical state engineering: squeezed-vacuum ancillas, homodyne post-selection and feedforward."""

__version__ = "0.1.0"

from .errors import (
    CondStateError,
    ContractError,
    DegenerateOutcomeError,
    DimensionError,
    InsufficientStatisticsError,
    TruncationError,
)
from .fock import (
    DEFAULT_NMAX,
    DensityOperator,
    FockDim,
    PureState,
    TwoModeState,
    apply_displacement,
    apply_squeeze,
    make_coherent,
    make_fock,
    make_squeezed_vacuum,
    make_vacuum,
)
from .wigner import WignerGrid, fidelity_overlap, fidelity_wigner, wigner_grid, wigner_point
from .protocol import (
    ProtocolConfig,
    apply_beam_splitter,
    average_fidelity,
    average_state,
    condition_on_x,
    probability_density,
    success_probability,
)
from .targets import (
    ScsSpec,
    coherent_transform,
    fidelity_scs_closed,
    make_scs,
    output_squeezing,
    squeezed_single_photon,
)
from .gaussian_experiment import (
    ExperimentConfig,
    ExperimentReport,
    GaussianState,
    classical_limit,
    predict_experiment,
    run_experiment,
)
from .feedforward import FeedforwardConfig, compare_vs_postselection, feedforward_output
from .optimize import SweepSpec, maximize_over_s, maximize_over_s_and_gamma, run_sweep
