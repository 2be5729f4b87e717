"""Cyclic Jacobi eigensolver for real symmetric and complex Hermitian matrices."""

from __future__ import annotations

import numpy as np


class EigenSolverError(RuntimeError):
    pass


def _round_robin(n):
    """Pairings for the ``n - 1`` rounds of one sweep (``n`` even).

    Each round is returned as an ordering of ``0..n-1`` in which positions
    ``2k`` and ``2k + 1`` form a pair; together the rounds cover every pair
    exactly once.
    """
    idx = list(range(n))
    rounds = []
    for _ in range(n - 1):
        order = []
        for i in range(n // 2):
            order.extend((idx[i], idx[n - 1 - i]))
        rounds.append(np.array(order))
        idx = [idx[0]] + [idx[-1]] + idx[1:-1]
    return rounds


def off_norm(a):
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def _round(a, rel):
    """Permute ``a`` by ``rel`` and annihilate every ``(2k, 2k+1)`` entry.

    Returns ``R P A P^T R^T`` where ``P`` is the permutation and ``R`` the
    block-diagonal product of the round's plane rotations. Only row gathers
    and batched 2x2 products are used, which keeps every pass contiguous.
    """
    m = a.shape[0]
    b = a[rel]
    app = b[2 * np.arange(m // 2), rel[0::2]]
    aqq = b[2 * np.arange(m // 2) + 1, rel[1::2]]
    apq = b[2 * np.arange(m // 2), rel[1::2]]
    nonzero = apq != 0.0
    safe = np.where(nonzero, apq, 1.0)
    # smaller of the two annihilating angles, |phi| <= pi/4
    theta = (aqq - app) / (2.0 * safe)
    t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
    t = np.where(nonzero, t, 0.0)
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c
    r = np.empty((m // 2, 2, 2))
    r[:, 0, 0] = c
    r[:, 0, 1] = -s
    r[:, 1, 0] = s
    r[:, 1, 1] = c
    b = np.matmul(r, b.reshape(m // 2, 2, m)).reshape(m, m)
    b = b.T[rel]
    b = np.matmul(r, b.reshape(m // 2, 2, m)).reshape(m, m)
    k = np.arange(0, m, 2)
    b[k, k + 1] = 0.0
    b[k + 1, k] = 0.0
    return b


def jacobi_symmetric(a, tol=1e-12, max_sweeps=100):
    """Eigenvalues of a real symmetric matrix, ascending.

    Each sweep visits every off-diagonal pair once in round-robin order; the
    rotations within a round touch disjoint rows and columns and are applied
    together. Stops when the off-diagonal Frobenius norm is at most
    ``tol * ||A||_F``.

    Returns ``(eigenvalues, sweeps)``.
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    n = a.shape[0]
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    if not np.allclose(a, a.T, rtol=0, atol=1e-14 * max(1.0, np.abs(a).max())):
        raise ValueError("matrix must be symmetric")
    a = 0.5 * (a + a.T)
    if n == 1:
        return a.diagonal().copy(), 0
    if n % 2:
        # a decoupled zero row and column; it is never mixed with the rest
        b = np.zeros((n + 1, n + 1))
        b[:n, :n] = a
        a = b
    m = a.shape[0]
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n), 0
    rounds = _round_robin(m)
    # the working matrix lives in the frame of the current round's ordering
    frame = np.arange(m)
    for sweep in range(max_sweeps + 1):
        if off_norm(a) <= tol * scale:
            values = np.empty(m)
            values[frame] = a.diagonal()
            return np.sort(values[:n]), sweep
        if sweep == max_sweeps:
            break
        for order in rounds:
            # move from the current frame to ``order``
            where = np.empty(m, dtype=int)
            where[frame] = np.arange(m)
            rel = where[order]
            a = _round(a, rel)
            frame = order
    raise EigenSolverError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")


def jacobi_hermitian(h, tol=1e-12, max_sweeps=100):
    """Eigenvalues of a Hermitian matrix via its real symmetric doubling.

    ``A + iB`` maps to ``[[A, -B], [B, A]]``, whose spectrum is that of the
    Hermitian matrix with every eigenvalue repeated twice.
    """
    h = np.asarray(h, dtype=complex)
    if not np.allclose(h, h.conj().T, rtol=0, atol=1e-14 * max(1.0, np.abs(h).max())):
        raise ValueError("matrix must be Hermitian")
    a, b = h.real, h.imag
    doubled = np.block([[a, -b], [b, a]])
    values, sweeps = jacobi_symmetric(doubled, tol=tol, max_sweeps=max_sweeps)
    return values[::2].copy(), sweeps
