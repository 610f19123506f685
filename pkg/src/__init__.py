"""
M2O hybrid group authentication: HGAKA/HGA simulator and cost model
"""

__version__ = "1.0.0"
