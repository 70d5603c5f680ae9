"""Spanning forests, sandpile groups, and harmonic invariants on finite group quotients.

The library builds convolution Laplacians of symmetric integer group-ring
elements on finite quotients of Z^d, free groups, and the discrete Heisenberg
group, and computes: exact spanning-tree counts, the cokernel (sandpile /
harmonic component) group, spectra and log-determinant estimates, tree
entropy series, truncated lattice Green functions and homoclinic points,
spectral-radius probes, and uniform spanning tree samples with window
marginal statistics along quotient chains.
"""

from .errors import (
    DisconnectedGraphError,
    FamilyMismatchError,
    GroupForestsError,
    IdentityMismatchError,
    NotWellBalancedError,
    ResourceLimitError,
    UnsupportedFamilyError,
    WindowError,
)
from .groups import (
    FiniteQuotient,
    GroupFamily,
    GroupWord,
    QuotientChain,
    format_word,
    free_ball_quotient,
    injectivity_radius,
    parse_word,
    word_ball,
)
from .forests import (
    MARGINAL_CSV_HEADER,
    DegreeStatistics,
    MarginalRow,
    MarginalTable,
    OrientedForestConfig,
    QuotientMultigraph,
    SpanningTree,
    degree_statistics,
    lift_marginals,
    orient_to_root,
    rng_stream,
    wilson_sample,
)
from .linalg import (
    ComponentGroup,
    QuotientLaplacian,
    SpectrumSummary,
    build_laplacian,
    fk_estimate_eigen,
    fk_estimate_tree,
    free_abelian_spectrum,
    harmonic_component_group,
    spanning_tree_count,
    spectrum,
)
from .runner import ExperimentConfig, Report, resolve_config, run
from .walks import (
    GreenTruncation,
    GroupRingElement,
    HomoclinicResult,
    ReturnSeries,
    SpectralRadiusProbe,
    TreeEntropyResult,
    WalkDistribution,
    WellBalancedReport,
    convolve,
    convolve_powers,
    formal_inverse_residual,
    format_group_ring,
    green_truncation,
    homoclinic_point,
    is_well_balanced,
    laplacian_element,
    parse_group_ring,
    require_well_balanced,
    return_probability,
    return_series,
    spectral_radius_probe,
    tree_entropy,
    walk_distribution,
)

__version__ = "0.1.0"
