"""Exact-arithmetic toolkit for unimodular L-infinity and A-infinity algebras.

Everything is computed over the rationals with ``fractions.Fraction``; there
is no floating point anywhere.  The main entry points are:

* :mod:`ulinf.grading` -- graded vector spaces, Koszul and unshuffle signs;
* :mod:`ulinf.multimaps` -- sparse graded multilinear maps, insertion, traces;
* :mod:`ulinf.structures` -- (unimodular) L-infinity structures and their
  structure-equation residuals;
* :mod:`ulinf.transfer` -- homotopy transfer along a retract via decorated
  tree and wheel sums;
* :mod:`ulinf.formal_geom` -- the dictionary to homological vector fields,
  divergences and invariant measures;
* :mod:`ulinf.defcomplex` -- deformation complex, Maurer-Cartan checks and
  the obstruction solver for unimodular extensions;
* :mod:`ulinf.cyclic` -- A-infinity structures, cyclic cochains and the
  cyclic obstruction class;
* :mod:`ulinf.cli` -- the ``ulinf`` command line front end.
"""

from fractions import Fraction

__all__ = ["Fraction", "__version__"]

__version__ = "0.1.0"
