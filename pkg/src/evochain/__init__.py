"""Two-parameter families of evolution algebras and their composition law.

The package builds matrix families M(s, t) from closed-form recipes, checks
the composition identity M(s, t) = M(s, tau) M(tau, t) numerically, and
analyzes the algebra each snapshot defines: nilpotency, characters, absolute
nilpotents, idempotents, and where those properties change as (s, t) moves.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .analysis import (
    AnalysisReport,
    SweepReport,
    analyze_snapshot,
    classify_idempotents,
    det_condition,
    discriminants,
    expected_idempotent_count,
    sweep,
)
from .chain import (
    ChainFamily,
    CkReport,
    Entry,
    TriplePlan,
    ck_residuals,
    direct_sum,
    is_time_homogeneous,
    relabeled_chain,
    verify_ck,
)
from .config import build_chain, list_presets, load_chain, load_config
from .errors import (
    ChainDomainError,
    ConfigError,
    DimensionError,
    DomainError,
    EvochainError,
    ExpressionSyntaxError,
    NotTriangularError,
    SymmetryError,
)
from .evolution_algebra import (
    Algebra,
    absolute_nilpotents,
    find_characters,
    idempotents_triangular,
    is_nilpotent,
    power_sequences,
)
from .generators import (
    PermutationSpec,
    SymmetricParams,
    Triangular111Params,
    Triangular112Params,
    Triangular122Params,
    Triangular222Params,
    constant_chain,
    permutation_chain,
    row_sum_diagnostics,
    symmetric_chain,
    triangular3_case111,
    triangular3_case112,
    triangular3_case122,
    triangular3_case222,
)
from .scalar_fn import ScalarFn, StepSpec, cantor2_step, evaluate, parse

__all__ = [
    "__version__",
    "Algebra",
    "AnalysisReport",
    "ChainDomainError",
    "ChainFamily",
    "CkReport",
    "ConfigError",
    "DimensionError",
    "DomainError",
    "Entry",
    "EvochainError",
    "ExpressionSyntaxError",
    "NotTriangularError",
    "PermutationSpec",
    "ScalarFn",
    "StepSpec",
    "SweepReport",
    "SymmetricParams",
    "SymmetryError",
    "Triangular111Params",
    "Triangular112Params",
    "Triangular122Params",
    "Triangular222Params",
    "TriplePlan",
    "absolute_nilpotents",
    "analyze_snapshot",
    "build_chain",
    "cantor2_step",
    "ck_residuals",
    "classify_idempotents",
    "constant_chain",
    "det_condition",
    "direct_sum",
    "discriminants",
    "evaluate",
    "expected_idempotent_count",
    "find_characters",
    "idempotents_triangular",
    "is_nilpotent",
    "is_time_homogeneous",
    "list_presets",
    "load_chain",
    "load_config",
    "parse",
    "permutation_chain",
    "power_sequences",
    "relabeled_chain",
    "row_sum_diagnostics",
    "sweep",
    "symmetric_chain",
    "triangular3_case111",
    "triangular3_case112",
    "triangular3_case122",
    "triangular3_case222",
    "verify_ck",
]
