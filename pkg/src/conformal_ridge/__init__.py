"""Bayesian and conformalized ridge regression prediction intervals."""

from .asymptotics import (
    CurveTable,
    TheoremVarianceSpec,
    curve_table,
    mu_alpha,
    normal_cdf,
    normal_pdf,
    normal_quantile,
    std_asymptote,
    theorem1_variance,
)
from .bayes import Method, PredictionInterval, brr_conditional_density_params, brr_predict
from .conformal import (
    GridPredictionSet,
    OnlineStep,
    RayDirection,
    RayPredictionSet,
    conformity_scores,
    crr_predict,
    crr_predict_grid,
    crr_pvalue,
    crr_thresholds,
    hat_matrix_AB,
    lower_crr_predict,
    online_protocol,
    regularity_check,
    smoothed_pvalue,
    upper_crr_predict,
)
from .dataset import Dataset
from .errors import (
    DomainError,
    EmptyIntersection,
    IrregularConfiguration,
    NotSymmetric,
    SingularSystem,
    TooFewSamples,
)
from .linalg import (
    LeverageProfile,
    RidgeConfig,
    is_positive_definite,
    leverage_profile,
    quadform_identity,
    ridge_solve,
)
from .simulation import (
    ExperimentReport,
    GenerativeSpec,
    ObjectLaw,
    WeightLaw,
    coverage_experiment,
    endpoint_diff_experiment,
    generate_dataset,
    ks_statistic,
    summarize,
)

__version__ = "0.1.0"
