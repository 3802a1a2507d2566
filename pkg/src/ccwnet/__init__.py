"""Two-step estimation of a nonparametric logistic model from case-control
data fused with external summary information.

Step one recovers the marginal case proportion from a known covariate moment
through the total-expectation identity, with delta-method inference; step two
minimizes an inverse-probability-weighted logistic loss over a ReLU MLP.
"""

from .data import (
    CaseControlSample,
    Dataset,
    SplitSpec,
    SummarySpec,
    read_dataset_csv,
    split_dataset,
    write_dataset_csv,
)
from .dgp import (
    GFunction,
    PopulationSpec,
    TrueProportion,
    g_eval,
    get_g,
    make_external_summary,
    register_g,
    sample_case_control,
    sample_population,
    true_p1,
)
from .errors import (
    CcwnetError,
    ConstantColumnError,
    DegenerateTruthError,
    DivergenceError,
    DomainError,
    ExperimentError,
    RareClassExhaustionError,
    SchemaError,
    StratumUnderflowError,
    SummaryNonIdentifyingError,
)
from .ingest import (
    ColumnSchema,
    PreprocessReport,
    adult_schema,
    case_control_subsample,
    load_csv,
    preprocess,
    schema_from_dict,
    schema_to_dict,
)
from .mlp import (
    Architecture,
    Gradients,
    Network,
    TrainConfig,
    forward,
    forward_batch,
    gradient,
    init_network,
    load_network,
    network_from_dict,
    network_to_dict,
    save_network,
    train,
    weighted_loss,
)
from .numerics import log1m_sigmoid, log_sigmoid, sigmoid
from .pipeline import (
    FitResult,
    GridSpec,
    evaluation_grid,
    fit,
    gamma_shift,
    network_predictor,
    relative_error,
    validation_accuracy,
)
from .proportion import (
    DEFAULT_EPSILON,
    ExternalSummary,
    ProportionEstimate,
    Z_95,
    conditional_means,
    delta_variance,
    estimate_p1,
    estimate_weights,
)
from .replication import (
    ReplicationResult,
    ReplicationSummary,
    Scenario,
    emit_table,
    replicate_rows,
    run_experiment,
    run_replication,
)
from .seeding import derive_seed, rng_from

__version__ = "0.1.0"
