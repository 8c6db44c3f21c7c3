"""
Utilities module for rankprover
"""
