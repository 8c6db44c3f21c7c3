"""
Certificates: extraction, serialization and independent checking
"""
