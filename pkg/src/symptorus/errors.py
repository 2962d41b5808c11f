"""Exception types raised by the toolkit."""


class SymptorusError(ValueError):
    """Base class for all domain errors."""


class NotClosed(SymptorusError):
    """A 1-form failed the spectral closedness test, so it is not a symplectic generator."""


class ResolutionMismatch(SymptorusError):
    """Two fields or isotopies were combined on incompatible grids."""


class NotHamiltonian(SymptorusError):
    """A generator expected to be exact carries a nonzero harmonic part or flux."""


class NotHarmonic(SymptorusError):
    """A generator expected to be harmonic carries a nonzero exact part."""


class BaseNormContract(SymptorusError):
    """A user supplied base norm does not vanish on the identity."""
