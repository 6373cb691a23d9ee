"""coarsedim: exact certificates for scale-connected covers, weighted word
norms, quasi-ultrametric direct sums and dimension bounds on finite
truncations of countable groups."""

from .metric import (
    Cover,
    FiniteMetricSpace,
    ScaleChain,
    component_diameter_bound,
    scale_components,
    verify_control_function,
)
from .control import (
    CoarseEmbeddingProfile,
    ControlFunction,
    LinearControl,
    LogAffineControl,
    PolynomialControl,
    PowerAffineControl,
    TabulatedControl,
    identity_profile,
    parse_control,
    transport_control,
)
from .groups import (
    AscendingChain,
    FiniteGroupTable,
    TwoTorsionCubeFamily,
    WeightedGeneratingSet,
    adversarial_metric,
    chain_cardinality_check,
    extend_norm,
    word_norm,
    word_norm_table,
)
from .direct_sum import (
    DirectSumElement,
    DirectSumTruncation,
    ScaleSequence,
    SummandSpec,
    pullback_cover,
    quasi_norm,
    quasi_ultrametric_check,
    truncation_from_zk_powers,
    verify_quasi_norm_axioms,
)
from .covers import (
    DilatedCube,
    LatticeWindow,
    ProductFamily,
    ZkTorus,
    dimension_report,
    find_dilated_cube,
    lattice_cover,
    reflection_cover,
    verify_dilated_cube,
)
from .cone_shadows import (
    EpsilonForm,
    PairFloorStats,
    epsilon_hypothesis_check,
    log_rescale,
    ultrametric_defect,
)
from .wreath import (
    FreeGroupElement,
    LamplighterElement,
    LamplighterGroup,
    growth_function,
    kernel_zero_dim_control,
)

__version__ = "0.1.0"
