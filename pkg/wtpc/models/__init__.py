from .core import ModelClass, ModelSpec, FittedModel, constrain_input, training_data
from .logistic import Logistic5PL, MStukel
from .piecewise import PiecewiseLinear
from .polynomial import Polynomial
from .spline import BSpline, bspline_basis, basis_matrix, reallocate_knots
from .fitting import fit
