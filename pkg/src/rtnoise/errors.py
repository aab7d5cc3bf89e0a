"""Exception types raised across the package."""


class ModelDomainError(ValueError):
    """Parameters fall outside the domain where the model is defined."""


class UndefinedSNRError(ZeroDivisionError):
    """Both parasitic rates vanish, so the signal-to-noise ratio is undefined."""


class UndefinedRatioError(ZeroDivisionError):
    """The SPDC parasitic rate vanishes, so R = CC_f / CC_s is undefined."""


class UndefinedFidelityError(ZeroDivisionError):
    """No coincidence events at all; the post-selected fidelity is undefined."""


class DatasetNotFoundError(KeyError):
    """Requested embedded dataset does not exist."""
