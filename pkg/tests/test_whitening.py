import numpy as np
import pytest
import scipy.sparse as sp

from momcf.errors import RankDeficient, WhiteningError
from momcf.moments import estimate_m2
from momcf.synth import population_m2, random_planted, sample_dataset
from momcf.whitening import (
    build_whitener,
    canonicalize_signs,
    topk_eig,
    whitening_residuals,
)

from conftest import jacobi_eigh


class TestTopkEig:
    def test_diagonal(self):
        vals, vecs = topk_eig(np.diag([0.5, 0.3, 0.2]), 2)
        np.testing.assert_allclose(vals, [0.5, 0.3], atol=1e-15)
        np.testing.assert_allclose(vecs, np.eye(3)[:, :2], atol=1e-15)

    def test_rank_one(self):
        vals, vecs = topk_eig(np.array([[0.36, 0.48], [0.48, 0.64]]), 1)
        np.testing.assert_allclose(vals, [1.0], atol=1e-14)
        np.testing.assert_allclose(vecs[:, 0], [0.6, 0.8], atol=1e-14)

    def test_matches_jacobi_oracle(self, rng):
        a = rng.standard_normal((20, 20))
        psd = a @ a.T / 20
        ref_vals, _ = jacobi_eigh(psd)
        vals, vecs = topk_eig(psd, 5)
        np.testing.assert_allclose(vals, ref_vals[:5], atol=1e-8)
        np.testing.assert_allclose(vecs.T @ vecs, np.eye(5), atol=1e-10)

    def test_sparse_lanczos_path(self, rng):
        # above the dense cutoff: Lanczos on a sparse banded PSD matrix
        d = 400
        diag = np.linspace(1.0, 2.0, d)
        off = np.full(d - 1, 0.3)
        a = sp.diags([off, diag, off], [-1, 0, 1]).tocsr()
        vals, vecs = topk_eig(a, 4, seed=3)
        ref = np.linalg.eigvalsh(a.toarray())[::-1][:4]
        np.testing.assert_allclose(vals, ref, atol=1e-8)
        resid = np.linalg.norm(a @ vecs - vecs * vals, axis=0)
        assert np.all(resid <= 1e-10 * vals[0])
        again, _ = topk_eig(a, 4, seed=3)
        assert np.array_equal(vals, again)

    def test_sign_canonical(self, rng):
        a = rng.standard_normal((8, 8))
        _, vecs = topk_eig(a @ a.T, 3)
        idx = np.argmax(np.abs(vecs), axis=0)
        assert np.all(vecs[idx, np.arange(3)] > 0)
        np.testing.assert_array_equal(canonicalize_signs(-vecs), vecs)

    def test_rank_deficient(self):
        m = np.outer([0.6, 0.8, 0.0], [0.6, 0.8, 0.0])
        with pytest.raises(RankDeficient) as info:
            topk_eig(m, 2)
        assert info.value.achieved == 1
        assert "rank 1" in str(info.value)

    def test_bad_k(self):
        with pytest.raises(ValueError):
            topk_eig(np.eye(3), 4)
        with pytest.raises(ValueError):
            topk_eig(np.eye(3), 0)


class TestBuildWhitener:
    def test_unit_eigenvalue(self):
        wt = build_whitener([1.0], np.array([[0.6], [0.8]]))
        np.testing.assert_allclose(wt.w[:, 0], [0.6, 0.8])
        np.testing.assert_allclose(wt.w_pinv[:, 0], [0.6, 0.8])

    def test_scaled(self):
        wt = build_whitener([4.0], np.array([[1.0], [0.0]]))
        np.testing.assert_allclose(wt.w[:, 0], [0.5, 0.0])
        np.testing.assert_allclose(wt.w_pinv[:, 0], [2.0, 0.0])

    def test_identity_spectrum(self, rng):
        q, _ = np.linalg.qr(rng.standard_normal((5, 3)))
        wt = build_whitener(np.ones(3), q)
        np.testing.assert_allclose(wt.w, q)
        np.testing.assert_allclose(wt.w_pinv, q)

    def test_nonpositive(self):
        with pytest.raises(WhiteningError):
            build_whitener([1.0, 0.0], np.eye(2))

    def test_pinv_is_pseudo_inverse_formula(self, rng):
        q, _ = np.linalg.qr(rng.standard_normal((7, 3)))
        wt = build_whitener([0.5, 0.2, 0.1], q)
        np.testing.assert_allclose(wt.w_pinv, wt.w @ np.linalg.inv(wt.w.T @ wt.w), atol=1e-12)


class TestWhiteningIdentities:
    def test_on_sampled_data(self):
        p = random_planted(30, 4, seed=2, concentration=0.7)
        m2 = estimate_m2(sample_dataset(p, 3000, seed=1))
        wt = build_whitener(*topk_eig(m2, 4))
        white, pinv = whitening_residuals(wt, m2)
        assert white <= 1e-8
        assert pinv <= 1e-10
        np.testing.assert_allclose(wt.eigvecs.T @ wt.eigvecs, np.eye(4), atol=1e-10)

    def test_spectral_norms(self, rng):
        a = rng.standard_normal((12, 12))
        vals, vecs = topk_eig(a @ a.T, 4)
        wt = build_whitener(vals, vecs)
        assert abs(np.linalg.norm(wt.w, 2) - 1 / np.sqrt(vals[-1])) <= 1e-8 * np.linalg.norm(wt.w, 2)
        assert abs(np.linalg.norm(wt.w_pinv, 2) - np.sqrt(vals[0])) <= 1e-8

    def test_whitened_components_orthonormal(self):
        # sqrt(pi_k) W^T mu_k are orthonormal for an exact M2
        p = random_planted(20, 3, seed=5, pi=[0.5, 0.3, 0.2])
        wt = build_whitener(*topk_eig(population_m2(p), 3))
        comp = np.sqrt(p.pi_true) * (wt.w.T @ p.o_true)
        np.testing.assert_allclose(comp @ comp.T, np.eye(3), atol=1e-6)
        np.testing.assert_allclose(comp.T @ comp, np.eye(3), atol=1e-6)
