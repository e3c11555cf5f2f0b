"""Typed failures raised across the simulator.

Library code raises these; only ``rydssh.run.main`` turns them into exit codes.
"""

from __future__ import annotations


EXIT_OK: int = 0
EXIT_CONFIG: int = 2
EXIT_NUMERICAL: int = 3
EXIT_IO: int = 4


class RydSSHError(Exception):
    """Base class for every error the package raises on purpose."""

    exit_code: int = 1


class ConfigError(RydSSHError):
    """Invalid configuration file entry or command-line flag."""

    exit_code = EXIT_CONFIG


class OutputError(RydSSHError):
    """Results could not be written."""

    exit_code = EXIT_IO


class NumericalError(RydSSHError):
    """A computation could not produce a trustworthy result."""

    exit_code = EXIT_NUMERICAL


class RangeError(NumericalError):
    """A geometry parameter lies outside its allowed interval."""


class DegenerateGeometry(NumericalError):
    """Two atoms coincide (or nearly so) and the dipolar coupling diverges."""


class DegeneratePoint(NumericalError):
    """The two bands touch where a gapped state was required."""


class NotGapped(NumericalError):
    """A gapped-phase invariant was requested in a gapless phase."""


class NonQuantized(NumericalError):
    """A Zak phase that should be 0 or pi is not."""


class LoopThroughNode(NumericalError):
    """A winding loop passes through (or too close to) a zero of n(k)."""


class NonInteger(NumericalError):
    """A winding number is too far from an integer to round safely."""


class DegenerateCone(NumericalError):
    """The local cone has a vanishing velocity (merging point)."""


class FitFailure(NumericalError):
    """A scaling fit did not reach the required quality."""


class NoConvergence(NumericalError):
    """The eigensolver did not converge."""
