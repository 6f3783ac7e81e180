"""Physical constants used throughout the package (SI units)."""

import math

#: Reduced Planck constant, J s (2019 SI exact h / 2pi).
HBAR = 1.054571817e-34

#: Magnetic flux quantum h / 2e, Wb.
PHI0 = 2.067833848e-15

#: Vacuum permeability, N / A^2.
MU0 = 1.25663706212e-6

TWO_PI = 2.0 * math.pi
