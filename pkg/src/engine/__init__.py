"""
Saturation engine for rankprover
"""
