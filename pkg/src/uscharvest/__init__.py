"""Numerical toolkit for harvesting multiqubit entanglement from
ultrastrongly coupled circuit QED systems.

Subpackages cover the truncated Hilbert space and operators
(``statespace``), the extended collective-spin Hamiltonians (``model``),
eigen-analysis and target-state constructions (``spectral``), control
pulses (``schedules``), coherent and dissipative propagation
(``evolve``), scalar diagnostics (``observables``), scenario drivers
(``experiments``), the four-junction flux-qubit physical layer
(``fluxqubit``), and a command-line front end (``cli``).
"""

from .kernels import BACKEND, HAVE_EXTENSION

__version__ = "0.1.0"
__all__ = ["BACKEND", "HAVE_EXTENSION", "__version__"]
