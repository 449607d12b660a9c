"""Rational-interpolation and resolvent-sampling eigensolvers for nonlinear eigenvalue problems.

Typical use::

    from nepsolve import loaded_string, rsrr_solve, Interval
    res = rsrr_solve(loaded_string(400), Interval(3, 10000), N=100)
"""

from .errors import (GapNotFound, InterpolationInaccurate, NearSingularWarning, NepError, RankCollapse,
                     SingularMatrix, Stage1Empty)
from .problems import BUILTIN, NepProblem, ScalarFunction, gun_form, loaded_string, quadratic, rational_damping
from .probing import ProbeTable, extend_probe, make_probe
from .rsrr import project, rsrr_solve, rsrr_two_stage
from .sampling import (Ellipse, Interval, Rectangle, SamplingSet, boundary_sampling, chebyshev_points,
                       default_sampling, ellipse_trapezoid, rectangle_gauss)
from .ss import EigResult, detect_count, ss_full, ss_ri, ss_solve

__version__ = "0.1.0"

__all__ = [
    "NepProblem", "ScalarFunction", "BUILTIN", "loaded_string", "quadratic", "rational_damping", "gun_form",
    "Interval", "Ellipse", "Rectangle", "SamplingSet", "chebyshev_points", "ellipse_trapezoid",
    "rectangle_gauss", "boundary_sampling", "default_sampling",
    "ProbeTable", "make_probe", "extend_probe",
    "EigResult", "detect_count", "ss_ri", "ss_full", "ss_solve",
    "project", "rsrr_solve", "rsrr_two_stage",
    "NepError", "SingularMatrix", "RankCollapse", "InterpolationInaccurate", "Stage1Empty",
    "GapNotFound", "NearSingularWarning",
]
