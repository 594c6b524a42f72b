"""
fbmpersist - persistence of fractional Brownian motion with a random Hurst exponent
"""

__version__ = "0.1.0"
__author__ = "fbmpersist developers"
__description__ = "Exact FBM simulation, persistence Monte Carlo and numerical bound checks"
