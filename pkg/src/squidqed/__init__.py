"""Cavity-QED simulation toolkit for inductively coupled flux qubits.

Subpackages solve the single-loop flux-qubit spectrum, assemble the coupled
qubit-cavity and drive Hamiltonians, run pulse schedules on analytic and
Hamiltonian backends, quantify the rotating-wave and dispersive
approximations, and evaluate cavity quality-factor requirements.
"""

__version__ = "0.1.0"
