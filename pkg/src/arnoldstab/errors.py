"""Exception types shared across the package."""


class GridError(ValueError):
    """Invalid geometry: bad mask, bad labels, or too-coarse resolution."""


class ConfigError(ValueError):
    """Invalid run configuration (CLI flags or config file)."""


class SolverError(RuntimeError):
    """A linear or nonlinear solve failed structurally (singular, resonant)."""


class ConvergenceError(SolverError):
    """An iteration hit its cap without reaching the requested tolerance."""


class DynamicsError(SolverError):
    """Time integration aborted (NaN detection or solver failure mid-run)."""
