"""
quantdim - thermodynamic formalism and optimal quantization for cookie-cutter sets
"""

__version__ = '1.0.0'
