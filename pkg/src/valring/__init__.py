"""Exact workbench for ramification invariants of value-group extensions,
Perron transforms on monomial ring skeletons, and essential finite
generation certificates."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    InfiniteInitialIndexError,
    MalformedSpecError,
    NotEssentiallyFinitelyGenerated,
    NotInValuationRing,
    PrecisionLimitError,
    PreconditionError,
    ScenarioError,
    StepCapExceeded,
    ValringError,
)
from .exact_reals import QuadExt, parse_quadext, qx_arith, qx_sign, set_precision_rounds  # noqa: E402
from .monomial import Monomial  # noqa: E402
from .value_groups import (  # noqa: E402
    GroupElement,
    Ordering,
    SubgroupEmbedding,
    ValueGroupSpec,
    vg_compare,
    vg_convex_level,
    vg_first_level_lattice,
    vg_fg_module_test,
    vg_initial_index,
    vg_initial_index_bruteforce,
    vg_ramification_index,
)
from .ring_state import (  # noqa: E402
    Parameter,
    Replacement,
    RingState,
    make_state,
    rs_change_of_parameters,
    rs_monomial_value,
    rs_validate,
)
from .records import TransformRecord  # noqa: E402
from .perron import (  # noqa: E402
    pe_monomial_divide,
    pe_reexpress,
    pe_replay,
    pe_type1_step,
    pe_type2,
    pe_type3,
)
from .extension import (  # noqa: E402
    MonomialExtension,
    ex_certify_division,
    ex_efg_decide,
    ex_lift_gmts,
    ex_normalize,
    ex_validate,
)
