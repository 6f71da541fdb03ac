"""Multiparty quantum information quantities and distributed-compression rate regions."""

from .errors import (
    CapacityError,
    DimensionError,
    DomainError,
    InvariantError,
    LabelError,
    QRegionError,
    StateFormatError,
)
from .qstate import (
    MultipartiteState,
    PureState,
    UnitaryMatrix,
    bell,
    build_named_state,
    fidelity,
    ghz,
    haar_unitary,
    partial_trace,
    purify,
    separable,
    tensor,
    trace_distance,
    w_state,
)
from .entropy import (
    Distribution,
    PartyPartition,
    cond_entropy,
    cond_multiparty_info,
    cond_mutual_info,
    multiparty_info,
    mutual_info,
    shannon,
    von_neumann,
)

from . import classical, decouple, entropy, qstate, rateregion, rescalc, squashed

__version__ = "0.1.0"
