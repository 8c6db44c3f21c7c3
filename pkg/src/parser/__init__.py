"""
Statement language: parsing and canonical printing
"""
