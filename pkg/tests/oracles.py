"""Reference implementations used only as test oracles.

They share no code with the package: Wootters' closed form for two-qubit
mixed-state concurrence, and Weingarten values obtained by inverting the
Gram matrix ``G(s, t) = d^{#cycles(s^-1 t)}`` over ``S_p``.
"""
import itertools
from fractions import Fraction

import numpy as np
import sympy

_YY = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))


def wootters_concurrence(rho):
    """``max(0, l1 - l2 - l3 - l4)``, ``l`` the square roots of the eigenvalues of ``rho rho~``.

    Those square roots are the singular values of ``sqrt(rho) YY sqrt(rho)^*``,
    which stay accurate for nearly pure inputs.
    """
    rho = np.asarray(rho, dtype=complex)
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    lam = np.linalg.svd(root @ _YY @ root.conj(), compute_uv=False)
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def wootters_eof(rho):
    c = wootters_concurrence(rho)
    x = (1 + np.sqrt(max(0.0, 1 - c * c))) / 2
    return float(-sum(t * np.log2(t) for t in (x, 1 - x) if t > 0))


def _cycles(perm):
    seen, n = set(), 0
    for s in range(len(perm)):
        if s in seen:
            continue
        n += 1
        k = s
        while k not in seen:
            seen.add(k)
            k = perm[k]
    return n


def _cycle_type(perm):
    seen, out = set(), []
    for s in range(len(perm)):
        if s in seen:
            continue
        k, n = s, 0
        while k not in seen:
            seen.add(k)
            k = perm[k]
            n += 1
        out.append(n)
    return tuple(sorted(out, reverse=True))


def weingarten_by_gram_inverse(p, d):
    """``{cycle type: Wg}`` at integer ``d`` from the inverse Gram matrix (needs ``d >= p``)."""
    perms = list(itertools.permutations(range(p)))
    inv = {s: tuple(np.argsort(s)) for s in perms}
    gram = sympy.Matrix(len(perms), len(perms), lambda a, b: sympy.Integer(d) ** _cycles(tuple(inv[perms[a]][v] for v in perms[b])))
    wg = gram.inv()
    out = {}
    for b, t in enumerate(perms):
        out[_cycle_type(t)] = Fraction(int(sympy.fraction(wg[0, b])[0]), int(sympy.fraction(wg[0, b])[1]))
    return out
