"""Distillable entanglement of maximally-entangled-state mixtures in d x d.

Builds the generalized Bell states and their four-party and multi-copy
mixtures, checks entropy and PPT bounds, and simulates the LOCC
discrimination protocols that distill them.
"""

from .distill import DistillationReport, distill_four_party, distill_multi_copy, ed_summary
from .entropy import (
    INFINITE,
    EntropyResult,
    er_candidate_report,
    formal_count_bound,
    kl_label,
    relative_entropy,
    support_contained,
    von_neumann_entropy,
)
from .linalg_core import (
    DensityOperator,
    SubsystemLayout,
    partial_trace,
    partial_transpose,
    spectral_decompose,
    tensor_product,
)
from .locc import (
    LoccTranscript,
    PureState,
    discriminate_single_copy,
    discriminate_two_copy,
    measure_local,
    teleport,
)
from .mixtures import (
    LabelDistribution,
    four_party_state,
    multi_copy_state,
    pairing_product,
    uniform_full_mixture,
)
from .qudit_states import (
    BellLabel,
    Ket,
    MesFamily,
    bell_state,
    fidelity,
    fourier_basis,
    is_maximally_entangled,
    weyl_operator,
)
from .separability import Cut, enumerate_cuts, negativity, ppt_check

__version__ = "0.1.0"
