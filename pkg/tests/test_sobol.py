"""Sobol sequence construction and equidistribution."""

import numpy as np
import pytest

from slabpn import SobolStream, map_to_domain, sobol_points
from slabpn.sobol import _raw_points


def dyadic_counts_exact(points, k, max_level):
    """Check the 1D dyadic counting property for 2^k points."""
    for j in range(max_level + 1):
        counts = np.bincount((points * 2**j).astype(int), minlength=2**j)
        if not np.all(counts == 2 ** (k - j)):
            return False
    return True


class TestSobolPoints:
    def test_first_point_is_half(self):
        assert sobol_points(1, 1)[0, 0] == 0.5

    def test_first_points_dim1(self):
        pts = sobol_points(1, 4).ravel()
        assert pts.tolist() == [0.5, 0.25, 0.75, 0.125]

    def test_range(self):
        pts = sobol_points(2, 1000)
        assert np.all(pts >= 0.0) and np.all(pts < 1.0)

    @pytest.mark.parametrize("k", [4, 6, 8, 10])
    def test_dyadic_counting_dim1(self, k):
        pts = sobol_points(1, 2**k).ravel()
        assert dyadic_counts_exact(pts, k, k)

    def test_dim2_elementary_intervals_on_aligned_block(self):
        # aligned index blocks of the underlying sequence are (0, k, 2)-nets
        k = 8
        pts = _raw_points(2, 2**k, 2**k)
        for j1 in range(k + 1):
            j2 = k - j1
            box = (pts[:, 0] * 2**j1).astype(int) * 2**j2 \
                + (pts[:, 1] * 2**j2).astype(int)
            counts = np.bincount(box, minlength=2**k)
            assert np.all(counts == 1)

    def test_qmc_integral_u_squared(self):
        pts = sobol_points(1, 4096).ravel()
        assert abs(np.mean(pts**2) - 1.0 / 3.0) < 1e-3

    def test_determinism(self):
        assert np.array_equal(sobol_points(2, 100), sobol_points(2, 100))

    def test_stream_matches_functional(self):
        stream = SobolStream(2)
        a = stream.take(10)
        b = stream.take(10)
        full = sobol_points(2, 20)
        assert np.array_equal(np.vstack([a, b]), full)

    def test_unsupported_dimension(self):
        with pytest.raises(ValueError):
            sobol_points(3, 10)
        with pytest.raises(ValueError):
            sobol_points(1, 0)


class TestMapToDomain:
    def test_endpoints(self):
        assert map_to_domain(0.0, 2.0, 6.0) == 2.0
        assert map_to_domain(0.5, 0.0, 10.0) == 5.0

    def test_degenerate_interval(self):
        with pytest.raises(ValueError):
            map_to_domain(0.5, 1.0, 1.0)

    def test_dyadic_counts_preserved(self):
        k = 8
        u = sobol_points(1, 2**k).ravel()
        x = map_to_domain(u, 3.0, 7.0)
        for j in range(k + 1):
            counts = np.bincount(((x - 3.0) / 4.0 * 2**j).astype(int),
                                 minlength=2**j)
            assert np.all(counts == 2 ** (k - j))
