"""Exception types shared across flowlab modules."""


class FlowlabError(Exception):
    """Base class for all flowlab errors."""


class OutOfAtlas(FlowlabError):
    """A point cannot be assigned to any chart of the atlas."""


class InvalidParameter(FlowlabError):
    """A construction parameter is outside its admissible range."""


class InconsistentHamiltonian(FlowlabError):
    """Chart values of a scalar function disagree on chart overlaps."""


class OverlapError(FlowlabError):
    """Two surgery zero sets intersect; stacked surgeries must be disjoint."""


class WrongBase(FlowlabError):
    """A surgery was applied to a base field it does not support."""


class StiffnessAbort(FlowlabError):
    """Adaptive step size underflowed away from any declared zero set."""


class NotTransverse(FlowlabError):
    """A section is not transverse to the field along its length."""


class InsufficientData(FlowlabError):
    """Not enough samples or hits to run a diagnostic."""


class InfiniteSingularSet(FlowlabError):
    """The located zero set is not a finite collection of points."""


class LocallyDenseObstruction(FlowlabError):
    """A locally dense probe orbit blocks the orbit-graph construction."""


class UnresolvedConnection(FlowlabError):
    """Separatrix matching was ambiguous at the configured tolerance."""


class ConfigError(FlowlabError):
    """A run configuration failed validation; message carries a key pointer."""


class IoError(FlowlabError):
    """An output file could not be written."""
