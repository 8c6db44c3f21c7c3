"""
Command-line front end for rankprover
"""
