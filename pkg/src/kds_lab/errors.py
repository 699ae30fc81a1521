"""Exception hierarchy.

Every error carries a stable ``code`` string that the CLI writes into its
machine-readable error report.
"""


class KdsLabError(Exception):
    code = "KdsLabError"

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        return {"error": self.code, "message": str(self), "details": self.details}


class SubextremalityViolated(KdsLabError):
    code = "SubextremalityViolated"


class SpinTooLarge(KdsLabError):
    code = "SpinTooLarge"


class InvalidParameter(KdsLabError):
    code = "InvalidParameter"


class RootFindingFailed(KdsLabError):
    code = "RootFindingFailed"


class ChartDomainViolation(KdsLabError):
    code = "ChartDomainViolation"


class SpacelikenessLost(KdsLabError):
    code = "SpacelikenessLost"


class StencilOutOfDomain(KdsLabError):
    code = "StencilOutOfDomain"


class EpsilonUnderflow(KdsLabError):
    code = "EpsilonUnderflow"


class DegenerateLapse(KdsLabError):
    code = "DegenerateLapse"


class GridTooCoarse(KdsLabError):
    code = "GridTooCoarse"


class UnsupportedBackground(KdsLabError):
    code = "UnsupportedBackground"


class SignatureLost(KdsLabError):
    code = "SignatureLost"


class NonFiniteState(KdsLabError):
    code = "NonFiniteState"


class TimelikenessLost(KdsLabError):
    code = "TimelikenessLost"


class NonPositiveEnergy(KdsLabError):
    code = "NonPositiveEnergy"


class WindowTooShort(KdsLabError):
    code = "WindowTooShort"


class RegularityBudgetExceeded(KdsLabError):
    code = "RegularityBudgetExceeded"


class NonMonotoneRefinement(KdsLabError):
    code = "NonMonotoneRefinement"


class ConfigError(KdsLabError):
    code = "ConfigError"
