"""Dynamic multimodal multiobjective optimisation: benchmark suite, niching NSGA-II,
cluster-and-transfer change response, metrics and an experiment harness."""

from .baselines import VARIANTS, AlgorithmVariant, get_variant
from .cae import CAEParams, cae_generate_initpop, dbscan, fit_transfer, match_clusters
from .core import CONFIGS, ContractError, DynamicConfig, Population, dominates, get_config, time_of_generation
from .harness import ExperimentSpec, RunRecord, RunSettings, run_experiment, run_single
from .metrics import hypervolume, igd, igdx, migd, migdx
from .moea import GAParams, NicheParams, NichingNSGA2, adaptive_niche_radius, crowding_distance, nondominated_sort
from .problems import DynamicProblem, get_problem, list_problems
from .stats import summarize, wilcoxon_rank_sum

__version__ = "0.1.0"

__all__ = [
    "VARIANTS", "AlgorithmVariant", "get_variant",
    "CAEParams", "cae_generate_initpop", "dbscan", "fit_transfer", "match_clusters",
    "CONFIGS", "ContractError", "DynamicConfig", "Population", "dominates", "get_config", "time_of_generation",
    "ExperimentSpec", "RunRecord", "RunSettings", "run_experiment", "run_single",
    "hypervolume", "igd", "igdx", "migd", "migdx",
    "GAParams", "NicheParams", "NichingNSGA2", "adaptive_niche_radius", "crowding_distance", "nondominated_sort",
    "DynamicProblem", "get_problem", "list_problems",
    "summarize", "wilcoxon_rank_sum",
]
