"""Certified bounds on approximate satisfaction of equational theories
on finite simplicial complexes."""
from .complex import Carrier, Complex, MetricSpec
from .lam import SupInterval, decide_within, lambda_algebra, sup_equation
from .plmap import Algebra
from .theory import Theory, parse_theory

__version__ = "0.1.0"

__all__ = ["Algebra", "Carrier", "Complex", "MetricSpec", "SupInterval", "Theory",
           "decide_within", "lambda_algebra", "parse_theory", "sup_equation"]
