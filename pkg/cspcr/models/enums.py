"""
Enumerations shared across the package.
"""
import enum


class Population(str, enum.Enum):
    """Which population a sample comes from."""

    SOURCE = "source"
    TARGET = "target"


class TestMethod(str, enum.Enum):
    """Conditional independence test variants."""

    __test__ = False

    CSPCR = "cspcr"
    CSPCR_PE = "cspcr-pe"
    PCR = "pcr"
    IS = "is"


class GammaEstimator(str, enum.Enum):
    """How the control-variate coefficient is estimated."""

    COVARIANCE = "covariance"
    WEIGHTED_REGRESSION = "weighted-regression"


class RatioProvenance(str, enum.Enum):
    """Where a density ratio came from."""

    ANALYTIC = "analytic"
    CLASSIFIER = "classifier"
    FACTORIZED = "factorized"
    USER_SUPPLIED = "user-supplied"


class RatioMode(str, enum.Enum):
    """Density ratio used by simulation trials."""

    ANALYTIC = "analytic"
    ESTIMATED = "estimated"


class ControlVariateKind(str, enum.Enum):
    """Control variate used by simulated csPCR-pe trials."""

    SURROGATE_RANK = "surrogate-rank"
    FIRST_SURROGATE = "v1"
