"""Exception types shared across the package."""


class FraccolorError(Exception):
    pass


class InstanceError(FraccolorError, ValueError):
    """Malformed graph or hypergraph input."""


class DomainError(FraccolorError, ValueError):
    """Parameters outside the domain where a formula is defined."""


class StructureError(FraccolorError):
    """Instance fails a structural precondition (linearity, girth, local coloring)."""


class RetryExhausted(FraccolorError):
    """A rejection sampler hit its retry cap."""


class LocalColoringError(FraccolorError):
    def __init__(self, vertex: int, exhausted: bool, nodes: int):
        self.vertex = vertex
        self.exhausted = exhausted
        self.nodes = nodes
        why = "exhausted: not r-colorable" if exhausted else "budget hit"
        super().__init__(f"neighborhood of vertex {vertex}: {why} after {nodes} search nodes")


class NotColorable(LocalColoringError):
    def __init__(self, vertex: int, nodes: int):
        super().__init__(vertex, True, nodes)


class BudgetExhausted(LocalColoringError):
    def __init__(self, vertex: int, nodes: int):
        super().__init__(vertex, False, nodes)


class RegimeError(FraccolorError, RuntimeError):
    """Both the upper- and lower-threshold conditions held for one update."""

    def __init__(self, iteration: int, color: int, vertex: int):
        self.iteration = iteration
        self.color = color
        self.vertex = vertex
        super().__init__(
            f"upper and lower threshold violations coincide at iteration {iteration}, "
            f"color {color}, vertex {vertex}; parameters are outside the regime where "
            "the thresholds are separated (see check_regime)"
        )


class InvariantViolation(FraccolorError, AssertionError):
    pass


class StatisticalFailure(FraccolorError):
    pass
