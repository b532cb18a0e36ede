"""Sobol low-discrepancy points for collocation sampling.

Direction numbers are the first two dimensions of the standard Joe-Kuo
D6 table, embedded as constants (dimension 1 is the van der Corput
sequence in base 2; dimension 2 uses the primitive polynomial x + 1 with
initial direction integer m_1 = 1).  Points are produced in natural
index order, and the all-zeros term at index 0 is skipped: the first
returned point is the sequence element of index 1.
"""

from __future__ import annotations

import numpy as np

_BITS = 52  # exact in IEEE double
_SCALE = float(2**_BITS)

# Joe-Kuo D6 initial direction integers per dimension: (s, a, (m_1..m_s))
_JOE_KUO = {
    1: (1, 0, (1,)),
    2: (1, 0, (1,)),
}


def _direction_integers(dim):
    """Right-justified direction integers v_1..v_BITS for one dimension."""
    if dim == 1:
        # van der Corput: m_j = 1 for all j
        m = [1] * _BITS
    else:
        s, a, m_init = _JOE_KUO[dim]
        m = list(m_init)
        while len(m) < _BITS:
            k = len(m)
            val = m[k - s] ^ (m[k - s] << s)
            for i in range(1, s):
                if (a >> (s - 1 - i)) & 1:
                    val ^= m[k - i] << i
            m.append(val)
    return np.array([m[j] << (_BITS - (j + 1)) for j in range(_BITS)],
                    dtype=np.uint64)


def _raw_points(dimension, start, count):
    """Sequence elements with indices start..start+count-1, zero term included."""
    idx = np.arange(start, start + count, dtype=np.uint64)
    out = np.zeros((count, dimension))
    for d in range(1, dimension + 1):
        v = _direction_integers(d)
        acc = np.zeros(count, dtype=np.uint64)
        for j in range(_BITS):
            bit = (idx >> np.uint64(j)) & np.uint64(1)
            acc ^= v[j] * bit
        out[:, d - 1] = acc / _SCALE
    return out


def sobol_points(dimension, count):
    """First ``count`` Sobol points in [0, 1)^d, zero term skipped.

    Parameters
    ----------
    dimension : int
        1 or 2.
    count : int
        Number of points, >= 1.

    Returns
    -------
    (count, dimension) ndarray
    """
    if dimension not in (1, 2):
        raise ValueError(f"unsupported dimension {dimension}")
    if count < 1:
        raise ValueError("count must be >= 1")
    return _raw_points(dimension, 1, count)


class SobolStream:
    """Stateful Sobol point source over [0, 1)^d.

    Successive :meth:`take` calls continue the sequence; two streams with
    the same dimension always produce identical points for identical
    index ranges.
    """

    def __init__(self, dimension):
        if dimension not in (1, 2):
            raise ValueError(f"unsupported dimension {dimension}")
        self.dimension = dimension
        self.index = 1  # zero term skipped

    def take(self, count):
        pts = _raw_points(self.dimension, self.index, count)
        self.index += count
        return pts


def map_to_domain(points, x_lo, x_hi):
    """Affine map of unit-interval samples onto [x_lo, x_hi]."""
    if not x_hi > x_lo:
        raise ValueError(f"degenerate interval [{x_lo}, {x_hi}]")
    return x_lo + np.asarray(points, dtype=float) * (x_hi - x_lo)
