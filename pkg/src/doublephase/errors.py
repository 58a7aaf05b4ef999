class SolverError(RuntimeError):
    pass


class NonConvergence(SolverError):
    """Iteration budget exhausted; ``result`` holds the last iterate's report."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class InfeasibleLambda(SolverError):
    """lambda does not exceed beta times the discrete principal eigenvalue."""

    def __init__(self, message, threshold):
        super().__init__(message)
        self.threshold = threshold


class NotProjectable(SolverError):
    pass
