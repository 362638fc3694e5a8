"""
Exceptions raised by array-pooling.
"""


class DomainError(ValueError):
    """Argument outside its mathematical domain (prevalence, pool size)."""


class RegionError(ValueError):
    """Prevalence outside the region where the requested quantity exists."""


class NoSignChangeError(ValueError):
    """Root bracket whose endpoints do not change sign."""


class ConvergenceError(RuntimeError):
    """Iterative method exhausted its iteration budget."""


class QuadratureError(ConvergenceError):
    """Adaptive quadrature reached its depth limit."""


class ShapeError(ValueError):
    """Cohort length incompatible with the testing scheme."""
