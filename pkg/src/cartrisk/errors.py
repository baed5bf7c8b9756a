"""Exception types shared across the package.

Each class maps to one CLI exit code (see ``cartrisk.cli``).
"""


class CartRiskError(Exception):
    exit_code = 1


class InputError(CartRiskError, ValueError):
    """Malformed or out-of-range argument."""

    exit_code = 1


class ConfigError(InputError):
    """Malformed sweep/distribution configuration."""

    exit_code = 1


class StateError(CartRiskError):
    """Operation called on an object in the wrong state (e.g. an unfitted tree)."""

    exit_code = 1


class IntegrityError(CartRiskError):
    """An exact cross-check between two independent routes disagreed."""

    exit_code = 2


class ResourceCapError(CartRiskError):
    """Enumeration would exceed its configured cap."""

    exit_code = 3

    def __init__(self, message, count=None):
        super().__init__(message)
        self.count = count
