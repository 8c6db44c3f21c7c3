"""
rankprover: saturation prover for projective incidence geometry
"""

__version__ = "1.0.0"
__author__ = "rankprover developers"
__description__ = "Matroid rank-interval prover with replayable certificates"
