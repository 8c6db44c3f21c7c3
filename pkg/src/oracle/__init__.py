"""
Finite projective models and countermodel search
"""
