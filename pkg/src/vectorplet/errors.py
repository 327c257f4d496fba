"""Exception types raised by the simulator."""


class SimulationError(Exception):
    """Base class for all simulator errors."""


class ImaginaryResidue(SimulationError):
    """A quantity that must be real carries a non-negligible imaginary part."""

    def __init__(self, message, site=None, residue=None):
        super().__init__(message)
        self.site = site
        self.residue = residue


class NotLorentz(SimulationError):
    pass


class DegenerateMetric(SimulationError):
    def __init__(self, message, site=None):
        super().__init__(message)
        self.site = site


class DegenerateTimeDirection(SimulationError):
    """The time-coefficient matrix of the first-order system is (near) singular."""

    def __init__(self, message, site=None):
        super().__init__(message)
        self.site = site


class StepRejected(SimulationError):
    pass


class InsufficientHistory(SimulationError):
    pass


class PacketTooNarrow(SimulationError):
    pass


class PacketTooWide(SimulationError):
    pass


class EmptyPacket(SimulationError):
    pass


class LeftDomain(SimulationError):
    pass


class Stalled(SimulationError):
    def __init__(self, message, iteration=None, penalty=None):
        super().__init__(message)
        self.iteration = iteration
        self.penalty = penalty


class ConfigError(SimulationError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
