"""ionspec2d: two-dimensional phase-cycled spectroscopy of ion Coulomb crystals.

From trap parameters the package derives the chain's normal modes and
anharmonic Coulomb couplings, simulates the four-displacement phase-cycled
pulse protocol under unitary or Lindblad dynamics, and produces 2D spectra
with identified peaks.
"""

__version__ = "0.1.0"

from . import anharmonic, crystal, dynamics, fock, matio, phasenoise, protocol, scenarios, spectrum  # noqa: F401
