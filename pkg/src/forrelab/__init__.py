"""forrelab: exact and sampled computations around k-fold Forrelation."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConvergenceError,
    DegenerateQueryError,
    DomainError,
    ForrelabError,
    PreconditionError,
    ResourceError,
    ShapeError,
)
from .hadamard import apply_phase, fwht, fwht_raw, hadamard_matrix  # noqa: E402
from .instances import (  # noqa: E402
    InstanceTuple,
    check_goodness,
    corrupt,
    load_tuple,
    multipliers,
    sample_boolean_tuple,
    sample_kfold_hybrid,
    sample_real_pair,
    save_tuple,
    sign_round,
)
from .phi import PhiResult, kfold_state, phi, phi_bruteforce  # noqa: E402
from .qquery import decide, decide_probability, halfk_accept_probability  # noqa: E402
