import numpy as np
import pytest
from helpers import brute_force_fps

from ripoint import PointCloud, Prng, fps, gen_cloud, knn_group, random_rotation


class TestFps:
    def test_square_corners(self):
        cloud = PointCloud(points=[[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], id="sq")
        np.testing.assert_array_equal(fps(cloud, 2), [0, 3])

    def test_matches_brute_force_oracle(self):
        cloud = gen_cloud("two_lobes", 40, Prng(8))
        assert list(fps(cloud, 10)) == brute_force_fps(cloud.points, 10)

    def test_exhaustion(self):
        cloud = gen_cloud("helix", 12, Prng(1))
        idx = fps(cloud, 12)
        assert sorted(idx) == list(range(12))

    def test_rotation_invariant_indices(self):
        cloud = gen_cloud("two_lobes", 100, Prng(3))
        r = random_rotation(Prng(4))
        rotated = PointCloud(points=cloud.points @ r, id="r")
        np.testing.assert_array_equal(fps(cloud, 16), fps(rotated, 16))

    def test_too_few_points(self):
        cloud = gen_cloud("helix", 5, Prng(2))
        with pytest.raises(ValueError, match="at least"):
            fps(cloud, 6)

    def test_coverage_non_increasing(self):
        cloud = gen_cloud("ellipsoid", 80, Prng(5))
        prev = np.inf
        for g in (2, 4, 8, 16, 32):
            centers = cloud.points[fps(cloud, g)]
            cover = max(
                np.linalg.norm(centers - p, axis=1).min() for p in cloud.points
            )
            assert cover <= prev + 1e-12
            prev = cover


class TestKnnGroup:
    def test_collinear_tie_breaks_by_index(self):
        pts = [[float(i), 0, 0] for i in range(4)]
        cloud = PointCloud(points=pts, id="line")
        ps = knn_group(cloud, np.array([1]), 2)
        # 0 and 2 are both at distance 1; the smaller index wins
        np.testing.assert_array_equal(ps.source_indices[0], [1, 0])

    def test_k1_patch_is_origin(self):
        cloud = gen_cloud("helix", 20, Prng(1))
        ps = knn_group(cloud, fps(cloud, 4), 1)
        np.testing.assert_array_equal(ps.patches, np.zeros((4, 1, 3)))

    def test_rotation_invariant_indices(self):
        cloud = gen_cloud("two_lobes", 100, Prng(6))
        r = random_rotation(Prng(7))
        rotated = PointCloud(points=cloud.points @ r, id="r")
        centers = fps(cloud, 8)
        a = knn_group(cloud, centers, 5)
        b = knn_group(rotated, centers, 5)
        np.testing.assert_array_equal(a.source_indices, b.source_indices)

    def test_rotation_equivariant_patches(self):
        cloud = gen_cloud("helix", 100, Prng(9))
        r = random_rotation(Prng(10))
        rotated = PointCloud(points=cloud.points @ r, id="r")
        centers = fps(cloud, 8)
        a = knn_group(cloud, centers, 5)
        b = knn_group(rotated, centers, 5)
        np.testing.assert_allclose(b.patches, a.patches @ r, atol=1e-12)

    def test_k_exceeds_cloud(self):
        cloud = gen_cloud("helix", 5, Prng(2))
        with pytest.raises(ValueError, match="at least"):
            knn_group(cloud, np.array([0]), 6)

    def test_patch_consistency_invariant(self):
        cloud = gen_cloud("box_surface", 60, Prng(3))
        ps = knn_group(cloud, fps(cloud, 6), 7)
        for i in range(ps.n_patches):
            np.testing.assert_allclose(
                ps.patches[i],
                cloud.points[ps.source_indices[i]] - ps.centers[i],
                atol=1e-15,
            )
