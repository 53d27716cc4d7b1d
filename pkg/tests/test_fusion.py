import numpy as np
import pytest

from xdomrec import FeatureKind, FeatureMatrix, PcaModel, fit_pca, fuse
from xdomrec.fusion import load_pca, save_pca


class TestFitPca:
    def test_rank_one_line(self):
        # all points on the line y = x: single direction (1,1)/sqrt(2),
        # nothing left over
        data = np.array([[t, t] for t in (-2.0, -1.0, 0.0, 1.0, 2.0)])
        pca = fit_pca(data, out_dim=1)
        np.testing.assert_allclose(pca.components[0], [1 / np.sqrt(2), 1 / np.sqrt(2)],
                                   atol=1e-12)
        reconstructed = pca.transform(data) @ pca.components + pca.mean
        np.testing.assert_allclose(reconstructed, data, atol=1e-12)

    def test_axis_aligned_matches_covariance_eigen(self):
        # centered, axis-aligned cloud; the 2x2 sample covariance is diagonal,
        # so its eigen-decomposition can be read off by hand
        data = np.array([[2.0, 0.0], [-2.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        cov = np.cov(data, rowvar=False)  # diag(8/3, 2/3)
        assert cov[0, 1] == pytest.approx(0.0, abs=1e-12)
        pca = fit_pca(data, out_dim=2)
        np.testing.assert_allclose(pca.explained_variance, [cov[0, 0], cov[1, 1]],
                                   rtol=1e-12)
        np.testing.assert_allclose(np.abs(pca.components), np.eye(2), atol=1e-12)
        # sign convention: the largest-magnitude entry of each row is positive
        assert pca.components[0, 0] > 0 and pca.components[1, 1] > 0

    def test_full_dim_projection_lossless(self, rng):
        data = rng.normal(size=(20, 4))
        pca = fit_pca(data, out_dim=4)
        reconstructed = pca.transform(data) @ pca.components + pca.mean
        np.testing.assert_allclose(reconstructed, data, atol=1e-8)

    def test_out_dim_too_large_rejected(self, rng):
        data = rng.normal(size=(5, 3))
        with pytest.raises(ValueError):
            fit_pca(data, out_dim=4)  # > dim
        with pytest.raises(ValueError):
            fit_pca(rng.normal(size=(2, 6)), out_dim=3)  # > n

    def test_non_finite_rejected(self):
        data = np.zeros((4, 2))
        data[0, 0] = np.inf
        with pytest.raises(ValueError):
            fit_pca(data, out_dim=1)

    def test_variances_descending_nonnegative(self, rng):
        data = rng.normal(size=(50, 8)) * rng.uniform(0.1, 3.0, size=8)
        pca = fit_pca(data, out_dim=8)
        assert np.all(np.diff(pca.explained_variance) <= 1e-12)
        assert np.all(pca.explained_variance >= 0)

    def test_reconstruction_error_monotone_in_out_dim(self, rng):
        data = rng.normal(size=(30, 6)) @ rng.normal(size=(6, 6))
        errors = []
        for out_dim in range(1, 7):
            pca = fit_pca(data, out_dim=out_dim)
            recon = pca.transform(data) @ pca.components + pca.mean
            errors.append(np.linalg.norm(recon - data))
        assert all(errors[i + 1] <= errors[i] + 1e-9 for i in range(5))

    def test_deterministic(self, rng):
        data = rng.normal(size=(25, 5))
        a = fit_pca(data, out_dim=3)
        b = fit_pca(data, out_dim=3)
        assert np.array_equal(a.components, b.components)


class TestPcaModelValidation:
    def test_rejects_non_orthonormal(self):
        with pytest.raises(ValueError, match="orthonormal"):
            PcaModel(mean=np.zeros(2), components=np.array([[1.0, 1.0]]),
                     explained_variance=np.array([1.0]))

    def test_rejects_ascending_variance(self):
        with pytest.raises(ValueError):
            PcaModel(mean=np.zeros(2), components=np.eye(2),
                     explained_variance=np.array([1.0, 2.0]))


class TestFuse:
    def test_row_equal_to_mean_projects_to_zero(self, rng):
        data = rng.normal(size=(10, 4))
        pca = fit_pca(data, out_dim=2)
        textual = FeatureMatrix(pca.mean[None, :2], FeatureKind.TEXTUAL)
        visual = FeatureMatrix(pca.mean[None, 2:], FeatureKind.VISUAL)
        fused = fuse(textual, visual, pca)
        np.testing.assert_allclose(fused.values, 0.0, atol=1e-12)

    def test_projection_onto_declared_axes(self):
        pca = PcaModel(mean=np.zeros(4), components=np.eye(4)[:2],
                       explained_variance=np.array([1.0, 1.0]))
        textual = FeatureMatrix([[1.0, 0.0]], FeatureKind.TEXTUAL)
        visual = FeatureMatrix([[0.0, 1.0]], FeatureKind.VISUAL)
        fused = fuse(textual, visual, pca)
        assert fused.values[0].tolist() == [1.0, 0.0]
        assert fused.kind is FeatureKind.FUSED

    def test_full_rank_fusion_preserves_geometry(self, rng):
        # out_dim equal to the concatenated width: distances are preserved
        tex = rng.normal(size=(12, 2))
        vis = rng.normal(size=(12, 2))
        stacked = np.hstack([tex, vis])
        pca = fit_pca(stacked, out_dim=4)
        fused = fuse(FeatureMatrix(tex, FeatureKind.TEXTUAL),
                     FeatureMatrix(vis, FeatureKind.VISUAL), pca)
        orig = np.linalg.norm(stacked[:, None] - stacked[None, :], axis=2)
        proj = np.linalg.norm(fused.values[:, None] - fused.values[None, :], axis=2)
        np.testing.assert_allclose(proj, orig, atol=1e-8)

    def test_output_width_and_finiteness(self, rng):
        tex = rng.normal(size=(30, 5))
        vis = rng.normal(size=(30, 5))
        pca = fit_pca(np.hstack([tex, vis]), out_dim=5)
        fused = fuse(FeatureMatrix(tex, FeatureKind.TEXTUAL),
                     FeatureMatrix(vis, FeatureKind.VISUAL), pca)
        assert fused.dim == 5
        assert np.all(np.isfinite(fused.values))

    def test_shape_mismatches_rejected(self, rng):
        pca = fit_pca(rng.normal(size=(10, 4)), out_dim=2)
        tex3 = FeatureMatrix(rng.normal(size=(3, 2)), FeatureKind.TEXTUAL)
        vis4 = FeatureMatrix(rng.normal(size=(4, 2)), FeatureKind.VISUAL)
        with pytest.raises(ValueError, match="row count"):
            fuse(tex3, vis4, pca)
        wide = FeatureMatrix(rng.normal(size=(3, 5)), FeatureKind.VISUAL)
        with pytest.raises(ValueError, match="width"):
            fuse(tex3, wide, pca)


class TestPcaSerialization:
    def test_roundtrip_exact(self, tmp_path, rng):
        pca = fit_pca(rng.normal(size=(40, 6)), out_dim=3)
        save_pca(pca, tmp_path / "pca.txt")
        again = load_pca(tmp_path / "pca.txt")
        assert np.array_equal(again.mean, pca.mean)
        assert np.array_equal(again.components, pca.components)
        assert np.array_equal(again.explained_variance, pca.explained_variance)
