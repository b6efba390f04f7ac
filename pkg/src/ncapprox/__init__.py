"""Random linear network coding over GF(2^r) for correlated sources.

Exact decoding when enough innovative packets arrive, similarity-constrained
approximate decoding when they do not, a closed-form analysis of the optimal
coding-field size, loss-channel simulation, and a reproducible experiment
harness (see the ``ncapprox`` command line tool).
"""

from .analysis import (
    ErrorDistribution,
    ErrorModelParams,
    Property2Result,
    expected_abs_error,
    optimal_z,
    pmf_decoding_error,
    pmf_info_loss,
    pmf_total_error,
    property2_enumeration,
    xor_distance_pmf,
)
from .channel import ChannelModel, Topology, bsc_mask, gec_mask, run_topology
from .codec import (
    DecoderState,
    Packet,
    draw_coeffs,
    encode,
    flatten_positionwise,
    recode,
)
from .decoder import (
    ConstraintSet,
    DecodeResult,
    EnumerationBudgetError,
    InsufficientModelError,
    RetryPolicy,
    SimilarityModel,
    build_constraints,
    decode,
    error_bound_l1,
    mle_decode,
    reference_solution,
    similarity_score,
)
from .gf import (
    FieldMismatchError,
    GFElement,
    GaloisField,
    embed,
    field,
    gf_add,
    gf_inv,
    gf_mul,
    lift,
)
from .linalg import GFMatrix, RowBasis, SingularMatrixError, invert, rank, solve
from .sources import (
    PatchSet,
    SignalWindow,
    block_match,
    block_match_similarity,
    frame_pair_similarity,
    gen_gaussian_correlated,
    gen_shifted_scaled,
    read_pgm,
    split_into_patches,
    write_pgm,
)

__version__ = "0.1.0"
