"""Exception types shared across the package."""


class FluxDegenerateError(ValueError):
    """Flux within tolerance of an integer: the Hardy constant vanishes and
    every derived bound constant diverges."""


class HypothesisError(ValueError):
    """Potential violates a theorem hypothesis (monotonicity, sign, shape);
    the bound is not asserted."""


class IndeterminateCountError(RuntimeError):
    """Factorization pivots kept breaking down near a spectral crossing even
    after shift jitter; the count is not reported."""


class DegeneratePartitionError(RuntimeError):
    """Interval partition undefined: potential mass below the
    Birman-Schwinger threshold, or the final root-find is infeasible."""


class GridBudgetError(ValueError):
    """Requested discretization exceeds the desk-scale memory budget."""
