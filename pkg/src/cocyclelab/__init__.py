# ABOUTME: cocycle-lab - limit theorems for random matrix products, checked numerically
# ABOUTME: Package root; the numerical modules are imported directly by name

__version__ = "0.1.0"
