"""Harmonic chain with conservative momentum-exchange noise.

Simulation and verification suite for a one-dimensional harmonic lattice
whose momenta are stirred by nearest-triple random rotations.  The package
provides the microscopic integrators, the limiting linear scattering
(kinetic) equation, exact Ornstein-Uhlenbeck samplers for the per-mode
limits, a closed second-moment oracle at finite lattice size, and sweep
harnesses that compare all of the above.
"""

__version__ = "0.1.0"

from . import model

__all__ = ["model", "__version__"]
