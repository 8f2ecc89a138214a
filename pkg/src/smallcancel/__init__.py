"""smallcancel: computing with graphical small cancellation groups.

The package verifies Gr'(lambda) / C'(lambda) small cancellation conditions,
solves the word problem by Dehn's algorithm, builds Cayley balls with exact
word metric, measures contraction behaviour of geodesics and translation
lengths, constructs the explicit defining-graph families used throughout,
and enumerates and classifies combinatorial geodesic polygons.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    BudgetError,
    CertificationError,
    ClassificationViolation,
    ConstructionError,
    PreconditionError,
    SmallCancelError,
    UncertifiedRegionError,
    ValidationError,
)
from .words import Alphabet  # noqa: F401
from .labelled_graph import (  # noqa: F401
    GraphFamily,
    LabelledGraph,
    graph_from_text,
    graph_to_text,
)
