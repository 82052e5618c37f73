"""Adapted Wasserstein distance and related tools for finite filtered processes."""

from .process import (
    FilteredProcess,
    PathLaw,
    ValidationReport,
    full_info_process,
    independent_coin_extension,
    plain_process,
    validate,
)
from .canonical import (
    NestedAtom,
    NestedDistribution,
    canonical_process,
    information_process,
    nested_distribution,
    nested_equal,
    unfold,
)
from .metric import (
    BicausalCoupling,
    RawCoupling,
    adapted_distance,
    aw_between_laws,
    coupling_cost,
    flatten,
    is_causal,
    nested_distance,
)
from .logic import equivalent_rank, evaluate, expectation, prediction_process, rank_separating_pair
from .analytics import StoppingCost, control_value, doob, martingale_deviation, snell
from .geometry import BarycenterProblem, InterpolationFamily, barycenter, check_constant_speed, crr_model, interpolate
from .approximation import (
    QuantizationGrid,
    adapted_empirical,
    block_approximate,
    covering_grid,
    pullback_coupling,
    quantize,
    quantize_with_bound,
)
from .ot import BACKEND, set_backend, solve_ot

__version__ = "0.1.0"
