"""Numerical laboratory for divisor sums in arithmetic progressions,
higher-rank sieve weights, and almost-prime k-tuples."""

__version__ = "0.1.0"

from .arith import (
    ArithTables,
    CapacityError,
    build_tables,
    is_smooth,
    is_squarefree_product,
    load_or_build,
    tau_k,
)
from .admissible import (
    AdmissibleTuple,
    AdmissibilityViolation,
    greedy_admissible,
    is_admissible,
    w_trick,
)
from .divisor_ap import (
    APErrorReport,
    TwistedErrorReport,
    bv_scan,
    divisor_error,
    smooth_scan,
    twisted_error,
)
from .testfn import (
    F_eval,
    F_mixed_derivative,
    FunctionalEstimates,
    SmoothedF,
    PolynomialF,
    SmoothHandle,
    TestFunction,
    c_integral,
    c_star_j,
    functionals_mc,
    g_eval,
    gram_integrals,
    mu_ratio,
    polynomial_functionals,
    rho_asymptotic_constant,
    rho_bound,
)
from .sieve import (
    H2PrimeDecomposition,
    SieveConfig,
    WeightSystem,
    h2prime_decompose,
    inner_sums,
    lambda_weight,
    predict_s1,
    predict_s2,
    s1_direct,
    s2_direct,
    s_of_rho,
)
from .hunt import HuntResult, density_report, hunt
