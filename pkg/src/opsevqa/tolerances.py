"""Numerical tolerances shared by every module."""

#: unit-norm / trace-one / Hermiticity checks
NORM_TOL = 1e-9
#: exact algebraic identities (trace preservation, closed forms)
ALGEBRA_TOL = 1e-12
#: measurement outcomes below this probability are dropped
PRUNE_TOL = 1e-12
#: ensemble branches with q_i below this weight have no defined state
Q_PRUNE = 1e-12
#: eigenvalues above -PSD_TOL count as non-negative
PSD_TOL = 1e-9
#: eigenvalues are clipped here before taking logarithms
ENTROPY_EPS = 1e-15
