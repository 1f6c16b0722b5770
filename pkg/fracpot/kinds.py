from aenum import Enum


class LabeledEnum(Enum):
    """Enumeration whose first tuple entry is the external (config / output) label"""

    @classmethod
    def from_label(cls, label: str) -> 'LabeledEnum':
        for member in cls:
            if member.label == label:
                return member
        valid = [member.label for member in cls]
        raise ValueError(f"Invalid {cls.__name__} '{label}'. Must be one of: {valid}")


class VolumeKind(LabeledEnum):
    """Volume growth models r -> V(r)"""
    POWER_LAW = ('power-law', True)
    PIECEWISE_POWER = ('piecewise-power', True)
    TABLE = ('table', False)

    def __init__(self, label, exact_exponents):
        self.label: str = label
        # exact_exponents: asymptotic exponents are known without sampling
        self.exact_exponents: bool = exact_exponents


class MeasureKind(LabeledEnum):
    """Radial models of the measure sigma"""
    POWER_DENSITY = ('power-density', True)
    DIRAC_AT_ORIGIN = ('dirac-at-origin', False)
    SAME_AS_VOLUME = ('same-as-volume', True)
    TABLE = ('table', False)

    def __init__(self, label, absolutely_continuous):
        self.label: str = label
        self.absolutely_continuous: bool = absolutely_continuous


class IntegralStatus(LabeledEnum):
    FINITE = ('finite', True)
    DIVERGENT_BY_EXPONENT = ('divergent-by-exponent', False)
    NUMERIC_DIVERGENT = ('numeric-divergent', False)
    FINITE_NUMERIC = ('finite-numeric', True)

    def __init__(self, label, is_finite):
        self.label: str = label
        self.is_finite: bool = is_finite


class GreenRoute(LabeledEnum):
    RIESZ_EXACT = ('riesz-exact', True)
    SUBORDINATION = ('subordination', False)
    VOLUME_ESTIMATE = ('volume-estimate', False)

    def __init__(self, label, exact):
        self.label: str = label
        self.exact: bool = exact


class SupVerdict(LabeledEnum):
    BOUNDED = ('bounded', True)
    UNBOUNDED_TREND = ('unbounded-trend', False)

    def __init__(self, label, bounded):
        self.label: str = label
        self.bounded: bool = bounded


class Existence(LabeledEnum):
    EXISTS = ('exists', True)
    NOT_EXISTS = ('not-exists', False)
    INCONCLUSIVE = ('inconclusive', None)

    def __init__(self, label, exists):
        self.label: str = label
        self.exists: bool = exists
