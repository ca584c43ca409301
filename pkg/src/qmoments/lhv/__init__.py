from .factor import GRAPH_CASES, FactorModel, FourCycleError, cluster_model, factor_model, match_case, measurable_subsets
from .fit import FitError, LHVFit, fit, fit_moments
from .kernel import KernelReductionError, is_split_form, kernel_reduce, nonmeasurable_mask
from .models import GaussianLHV, ModelError, PeakedLHV, gaussian_model, model_from_json, model_moment, peaked_model, sample

__all__ = [
    "GRAPH_CASES", "FactorModel", "FourCycleError", "cluster_model", "factor_model", "match_case",
    "measurable_subsets", "FitError", "LHVFit", "fit", "fit_moments", "KernelReductionError",
    "is_split_form", "kernel_reduce", "nonmeasurable_mask", "GaussianLHV", "ModelError", "PeakedLHV",
    "gaussian_model", "model_from_json", "model_moment", "peaked_model", "sample",
]
