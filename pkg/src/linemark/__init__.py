"""linemark: multi-bit text watermarking over GF(2^n).

An author identity is encoded as the coefficients of a line (or a
higher-degree polynomial) over GF(2^n).  Points of that polynomial are
embedded into a token stream through hash-derived x-coordinates and
parity-biased sampling, and recovered from edited streams by solving a
maximum-collinear-points instance.
"""

from .field import (
    CANONICAL_MODULI,
    SUPPORTED_WIDTHS,
    FieldElement,
    FieldMismatchError,
    FieldSpec,
    UnsupportedWidthError,
    field_spec,
)
from .poly import InconsistentPointsError, Point, Polynomial, evaluate, interpolate
from .codec import (
    Identity,
    SecretKey,
    bits_value,
    decode_identity,
    derive_x,
    encode_identity,
    partition_bit,
    partition_ids,
    value_bits,
)
from .embed import (
    CapacityError,
    EmbedParams,
    MockSource,
    TokenSource,
    TokenStream,
    embed,
    embed_multi,
)
from .geometry import (
    LineFit,
    NoLineError,
    PointSet,
    PolyFit,
    SizeGuardError,
    TopLines,
    expected_trials,
    mcp_bruteforce,
    mcp_hashing,
    mcpp_bruteforce,
    mcpp_ransac,
    order_identities,
    top_t_lines,
)
from .extract import (
    InsufficientTokensError,
    RecoveryConfig,
    RecoveryResult,
    build_candidates,
    extract_bits,
    recover,
)
from .adversary import (
    AttackSpec,
    BudgetRow,
    ExperimentReport,
    Theorem1Report,
    attack,
    budget_table,
    expected_spurious_max,
    fail_probability,
    fail_term,
    random_point_experiment,
    theorem1_validation,
)

__version__ = "0.1.0"
