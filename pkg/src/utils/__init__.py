# src/utils/__init__.py

"""
Settings and CSV/JSON artifact helpers.
"""
