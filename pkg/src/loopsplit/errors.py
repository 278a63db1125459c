"""Exception types shared across the package."""


class LoopsplitError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(LoopsplitError):
    pass


class ZeroLambda(LoopsplitError):
    pass


class SingularLoop(LoopsplitError):
    """Truncated inversion failed (residual above tolerance or singular solve)."""


class BigCellViolation(LoopsplitError):
    """Birkhoff factorization failed: singular/ill-conditioned system or large residual.

    Cannot distinguish numerically between a loop genuinely off the big cell
    and one whose factors need a larger window; the condition number is
    attached so callers can retry with a larger window.
    """

    def __init__(self, msg, residual=None, condition=None):
        super().__init__(msg)
        self.residual = residual
        self.condition = condition


class NotInIwasawaCell(LoopsplitError):
    """The constant middle term admits no solution of k^{-1} (QkQ^{-1}) = a."""


class IntegrabilityViolation(LoopsplitError):
    """A connection form fails its structure equations beyond tolerance."""

    def __init__(self, msg, residuals=None):
        super().__init__(msg)
        self.residuals = residuals or {}


class NonRealFrame(LoopsplitError):
    """Frame evaluated off the reality locus of its reality condition."""


class DegenerateLambda(LoopsplitError):
    pass


class ConfigError(LoopsplitError):
    pass


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    pass
