import enum


class DistributionKind(enum.Enum):
    """Scalar entry laws"""
    UNIFORM = "uniform"
    GAUSSIAN = "gaussian"
    BERNOULLI_SYM = "bernoulli_sym"   # +-1 each with probability 1/2
    BERNOULLI = "bernoulli"           # values 0/1, uncentered
    POINT_MASS = "point_mass"

    @property
    def is_continuous(self) -> bool:
        """Check if the law has a bounded density"""
        return self in (DistributionKind.UNIFORM, DistributionKind.GAUSSIAN)


class SymmetryClass(enum.Enum):
    """Symmetry of a sampled matrix"""
    IID = "iid"
    SYMMETRIC = "symmetric"
    SKEW_SYMMETRIC = "skew_symmetric"


class TensorizationKind(enum.Enum):
    Z1Z2 = "Z1Z2"
    PRODUCT = "product"


class BraessMode(enum.Enum):
    EXACT = "exact"
    SAMPLED = "sampled"


class ExperimentKind(enum.Enum):
    """Experiment kinds dispatched by the command line"""
    DELOC_SURVEY = "deloc_survey"
    SMALLBALL_AUDIT = "smallball_audit"
    DENSITY_CURVE = "density_curve"
    GRAPH_AUDIT = "graph_audit"
    BRAESS = "braess"
    NODAL = "nodal"
