"""
Logging and metrics for rankprover
"""
