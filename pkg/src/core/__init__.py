"""
Core module for rankprover
"""
