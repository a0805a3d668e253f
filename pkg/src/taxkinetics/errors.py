"""Exception hierarchy shared across the package."""


class TaxKineticsError(Exception):
    pass


class ConfigurationError(TaxKineticsError, ValueError):
    """Invalid model, enforcement or run configuration."""


class ConstraintViolation(ConfigurationError):
    """Penalty bound broken: the model needs tau_n <= 0.5 and 1 < xi <= 2."""


class IntegrationError(TaxKineticsError, RuntimeError):
    """Conservation drift beyond tolerance during time stepping."""


class NegativityError(IntegrationError):
    pass


class DegenerateDistributionError(TaxKineticsError, ValueError):
    pass


class FitError(TaxKineticsError, ValueError):
    pass


class SingularInversionError(TaxKineticsError, ZeroDivisionError):
    pass
