"""Error analysis of clustered molecular communication networks.

Modules
-------
numerics      quadrature, Lambert W, compositions
channel       diffusion channel with degradation and absorbing receivers
geometry      distance distributions of Thomas-cluster offspring
interference  mean interference and its Laplace transform
detector      maximum-likelihood thresholds
analysis      exact error probability and its upper bound
simulator     Monte Carlo oracle
cli           command-line front end
"""
from molnet.params import SystemParams, table1

__all__ = ["SystemParams", "table1"]
__version__ = "0.1.0"
