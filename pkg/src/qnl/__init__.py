"""Highly nonlinear functions F_q^n -> F_q from coset constructions.

Finite-field arithmetic and Gauss sums (``ff``, ``characters``, ``numth``),
constructive balanced partitions (``discrepancy``), the construction itself
(``construction``), and spectral nonlinearity with certificates (``spectral``).
"""

from .characters import MultChar, dht_check, gauss_direct, gauss_sums, lift_char
from .construction import ConstructionParams, CosetPlan, assemble, build_f_S, construct, eval_f_T, plan_T
from .discrepancy import (
    Partition,
    SetSystem,
    brute_force_best_partition,
    k_partition,
    measure_imbalance,
    signed_coloring,
    theta_subset,
)
from .errors import (
    BudgetError,
    DegenerateParameterError,
    DomainError,
    FormatError,
    ParameterError,
    QnlError,
    RetryCapError,
)
from .ff import Embedding, FieldCtx, coset_map, make_field, norm_to, trace_to
from .numth import (
    artin_constant,
    class_number,
    density_recursion,
    find_odd_degree,
    gauss_closed_form,
    moree_density,
    scan_r,
    semiprimitive_check,
)
from .spectral import (
    certify_construction,
    fourier_full,
    fourier_restricted,
    mu_bruteforce,
    mu_spectral,
    rho_exhaustive,
)
from .tableio import FunctionTable, read_table, write_table

__version__ = "0.1.0"
