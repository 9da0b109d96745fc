"""Variational search for optimal pure-state ensembles of mixed states.

Subpackages are imported on demand; ``opsevqa.kernels.BACKEND`` reports
whether the numba or the numpy kernels are active.
"""
__version__ = "0.1.0"
