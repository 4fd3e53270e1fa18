"""frontlab: numerical laboratory for front speed selection.

Computes spreading speeds, minimal traveling waves, tail decay rates, the
linear-to-nonlinear selection threshold, and certifies piecewise
super-solution constructions for local and nonlocal dispersal.
"""

__version__ = "0.1.0"
