"""n-photon blockade under n-photon parametric driving: models, steady states, correlations."""

from .errors import *  # noqa: F401,F403
from .hilbert import (
    CompositeSpace,
    ModeSpace,
    Operator,
    annihilation,
    boson,
    commutator,
    dagger,
    embed,
    identity,
    qubit,
    sigma_minus,
)
from .liouvillian import (
    CollapseChannel,
    DensityMatrix,
    Liouvillian,
    build_liouvillian,
    dissipator_apply,
    evolve,
    steady_state,
    trace_distance,
)
from .models import (
    CoupledKerrParams,
    DriveSpec,
    JCParams,
    KerrParams,
    build_model,
    coherent,
    parametric,
)
from .observables import classify_blockade, correlation_report, expectation, fock_populations, g_n

__version__ = "0.1.0"
