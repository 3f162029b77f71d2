"""Exception types shared across the package."""


class PoleError(ValueError):
    """Evaluation requested at a pole (lattice point or coincident particles)."""


class WindowOverflow(RuntimeError):
    """A term or dependency fell outside an explicitly declared exponent window."""


class ResonanceObstruction(RuntimeError):
    """The constraint at a resonant lattice site is violated."""

    def __init__(self, order, mu, residual):
        super().__init__(
            f"resonance constraint violated at l={order}, mu={tuple(mu)}: residual {residual}"
        )
        self.order = order
        self.mu = tuple(mu)
        self.residual = residual


class CutoffInsufficient(RuntimeError):
    """A plane-wave or Galerkin cutoff is too small for a converged result."""


class ConfigError(ValueError):
    """Invalid job configuration; ``field`` names the offending option."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
