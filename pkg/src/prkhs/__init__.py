"""Product-kernel learning of discrete-time nonlinear system operators."""

from .gram import (
    CholeskyFactor,
    SingularGramError,
    build_gram,
    factorize,
    kron_matrix,
    kron_vector,
    min_eigenvalue,
    solve,
)
from .kernels import KernelConfig, KernelFamily, ProductKernelConfig, eval_kernel, eval_product
from .metrics import CostCounters, RmsReport, count_standard_cost, rms_per_step, rms_report
from .operator import (
    Dataset,
    ProductOperator,
    StandardOperator,
    fit_product,
    fit_standard,
    load_operator,
    predict_product,
    predict_product_batch,
    predict_product_explicit,
    predict_standard,
    save_operator,
    solve_fundamental,
)
from .signals import MultisineConfig, StateSamplerConfig, hankel_sequences, multisine, sample_states
from .systems import VanDerPolParams, generate_dataset, simulate, van_der_pol, vdp_step

__all__ = [
    "CholeskyFactor",
    "CostCounters",
    "Dataset",
    "KernelConfig",
    "KernelFamily",
    "MultisineConfig",
    "ProductKernelConfig",
    "ProductOperator",
    "RmsReport",
    "SingularGramError",
    "StandardOperator",
    "StateSamplerConfig",
    "VanDerPolParams",
    "build_gram",
    "count_standard_cost",
    "eval_kernel",
    "eval_product",
    "factorize",
    "fit_product",
    "fit_standard",
    "generate_dataset",
    "hankel_sequences",
    "kron_matrix",
    "kron_vector",
    "load_operator",
    "min_eigenvalue",
    "multisine",
    "predict_product",
    "predict_product_batch",
    "predict_product_explicit",
    "predict_standard",
    "rms_per_step",
    "rms_report",
    "sample_states",
    "save_operator",
    "simulate",
    "solve",
    "solve_fundamental",
    "van_der_pol",
    "vdp_step",
]

__version__ = "0.1.0"
