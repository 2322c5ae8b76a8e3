"""extflow: extension flows on the von Neumann parameter ball of symmetric
operators, their fixed points, spectral oracles, and grid-level checks of
restricted Weyl commutation relations."""

__version__ = "0.1.0"
