"""Space-time spline discretization of the acoustic wave equation.

Library layout:

* :mod:`chronospline.splines` -- B-spline / cardinal-spline evaluation and
  quadrature (the ground truth for every matrix entry).
* :mod:`chronospline.temporal` -- temporal Galerkin matrices, their
  nearly-Toeplitz structure, and the exact-rational invertibility oracle.
* :mod:`chronospline.symbols` -- matrix symbols on the unit circle and the
  CFL-type constants of the equal-degree variant.
* :mod:`chronospline.conditioning` -- associated polynomials, root censuses,
  corner perturbations, and empirical condition-number growth.
* :mod:`chronospline.ode`, :mod:`chronospline.spatial`,
  :mod:`chronospline.spacetime`, :mod:`chronospline.analysis` -- the actual
  solver: temporal ODE system, spatial assembly, the Kronecker-structured
  direct space-time solver, and error/energy/dispersion diagnostics.
* :mod:`chronospline.experiments`, :mod:`chronospline.cli` -- desk-scale
  reproduction harness and command-line interface.
"""

__version__ = "0.1.0"
