# src/mod/__init__.py

"""
Numerical core: weight schemes, Mittag-Leffler references, Volterra limits,
solvers, benchmark problems, decay diagnostics and the experiment runner.
"""
