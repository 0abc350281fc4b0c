import numpy as np
import pytest

from clarkit.graphs import LaplacianKind, build_graph, laplacian
from clarkit.spectral import (
    DimensionMismatchError,
    EmptySelectionError,
    FilterFn,
    FilterKind,
    NonSymmetricError,
    ResponseKind,
    apply_spectral_filter,
    artificial_filter,
    band_select,
    eig_sym,
    frequency_response,
)


def p2():
    return build_graph(2, [(0, 1)])


def k3():
    return build_graph(3, [(0, 1), (0, 2), (1, 2)])


def random_graph(rng, n, p=0.4):
    return build_graph(n, [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p])


def random_sym(rng, n):
    b = rng.standard_normal((n, n))
    return (b + b.T) / 2.0


class TestEigSym:
    def test_p2_laplacian(self):
        es = eig_sym(laplacian(p2(), LaplacianKind.UNNORMALIZED))
        assert np.allclose(es.eigenvalues, [0.0, 2.0], atol=1e-12)
        # eigenvector directions up to sign
        v0, v1 = es.eigenvectors[:, 0], es.eigenvectors[:, 1]
        assert np.allclose(np.abs(v0), [1, 1] / np.sqrt(2), atol=1e-12)
        assert np.allclose(np.abs(v1), [1, 1] / np.sqrt(2), atol=1e-12)
        assert abs(v0 @ v1) < 1e-12

    def test_identity(self):
        es = eig_sym(np.eye(3))
        assert np.allclose(es.eigenvalues, [1, 1, 1], atol=1e-12)
        assert np.allclose(es.eigenvectors.T @ es.eigenvectors, np.eye(3), atol=1e-12)

    def test_k3_normalized(self):
        es = eig_sym(laplacian(k3(), LaplacianKind.SYM_NORMALIZED))
        assert np.allclose(es.eigenvalues, [0.0, 1.5, 1.5], atol=1e-8)

    def test_reconstruction_and_orthonormality(self):
        rng = np.random.default_rng(21)
        for n in (2, 5, 17, 40):
            m = random_sym(rng, n)
            es = eig_sym(m)
            recon = es.eigenvectors @ np.diag(es.eigenvalues) @ es.eigenvectors.T
            assert np.linalg.norm(recon - m) / np.linalg.norm(m) < 1e-8
            assert np.linalg.norm(es.eigenvectors.T @ es.eigenvectors - np.eye(n)) < 1e-8
            assert np.all(np.diff(es.eigenvalues) >= -1e-12)

    def test_rejects_nonsymmetric(self):
        with pytest.raises(NonSymmetricError):
            eig_sym(np.array([[0.0, 1.0], [0.0, 0.0]]))
        with pytest.raises(NonSymmetricError):
            eig_sym(np.zeros((2, 3)))


class TestApplyFilter:
    def test_identity_filter(self):
        rng = np.random.default_rng(1)
        g = random_graph(rng, 8)
        x = rng.standard_normal((8, 3))
        h = FilterFn(fn=lambda lam: np.ones_like(lam))
        assert np.allclose(apply_spectral_filter(g, LaplacianKind.SYM_NORMALIZED, x, h), x, atol=1e-8)

    def test_eigenvalue_gain_on_eigenvector(self):
        # [1,-1] spans the eigenvalue-2 direction of P2's Laplacian
        h = FilterFn(fn=lambda lam: lam)
        out = apply_spectral_filter(p2(), LaplacianKind.UNNORMALIZED, [[1.0], [-1.0]], h)
        assert np.allclose(out, [[2.0], [-2.0]], atol=1e-10)

    def test_zero_filter(self):
        h = FilterFn(fn=lambda lam: np.zeros_like(lam))
        out = apply_spectral_filter(p2(), LaplacianKind.UNNORMALIZED, [[1.0], [2.0]], h)
        assert np.allclose(out, 0.0, atol=1e-12)

    def test_linearity(self):
        rng = np.random.default_rng(3)
        g = random_graph(rng, 10)
        x = rng.standard_normal((10, 2))
        h1 = FilterFn(fn=lambda lam: lam)
        h2 = FilterFn(fn=lambda lam: np.exp(-lam))
        combo = FilterFn(fn=lambda lam: 2.0 * lam + 0.5 * np.exp(-lam))
        kind = LaplacianKind.SYM_NORMALIZED
        lhs = apply_spectral_filter(g, kind, x, combo)
        rhs = 2.0 * apply_spectral_filter(g, kind, x, h1) + 0.5 * apply_spectral_filter(g, kind, x, h2)
        assert np.allclose(lhs, rhs, atol=1e-8)

    def test_dimension_mismatch(self):
        h = FilterFn(fn=lambda lam: lam)
        with pytest.raises(DimensionMismatchError):
            apply_spectral_filter(p2(), LaplacianKind.UNNORMALIZED, np.zeros((3, 1)), h)


class TestArtificialFilters:
    def test_frozen_values(self):
        hp = artificial_filter(FilterKind.HIGH_PASS)
        lp = artificial_filter(FilterKind.LOW_PASS)
        bp = artificial_filter(FilterKind.BAND_PASS)
        br = artificial_filter(FilterKind.BAND_REJECT)
        assert hp(0.0) == 0.0
        assert lp(0.0) == 1.0
        assert bp(1.0) == 1.0
        assert br(1.0) == 0.0
        # complementary pairs sum to 1 pointwise
        lam = np.linspace(0, 2, 9)
        assert np.allclose(hp(lam) + lp(lam), 1.0, atol=1e-12)
        assert np.allclose(bp(lam) + br(lam), 1.0, atol=1e-12)

    def test_formula_spot_checks(self):
        hp = artificial_filter(FilterKind.HIGH_PASS)
        assert np.isclose(float(hp(0.5)), 1.0 - np.exp(-2.5))
        bp = artificial_filter(FilterKind.BAND_PASS)
        assert np.isclose(float(bp(0.5)), np.exp(-2.5))

    def test_custom_kind_rejected(self):
        with pytest.raises(ValueError):
            artificial_filter(FilterKind.CUSTOM)


class TestFrequencyResponses:
    def test_frozen_values(self):
        assert float(frequency_response(ResponseKind.PREG)(2.0)) == -3.0
        assert float(frequency_response(ResponseKind.MADREG)(0.0)) == -2.0
        assert float(frequency_response(ResponseKind.CLAR_HIGH_PASS)(2.0)) == 1.0
        assert float(frequency_response(ResponseKind.GCN)(0.0)) == 1.0
        assert float(frequency_response(ResponseKind.NETWORK_LASSO)(1.0)) == 0.0
        assert float(frequency_response(ResponseKind.MADREG)(1.0)) == 0.0

    def test_clar_negates_gcn(self):
        lam = np.linspace(0, 2, 11)
        gcn = frequency_response(ResponseKind.GCN)
        clar = frequency_response(ResponseKind.CLAR_HIGH_PASS)
        assert np.allclose(clar(lam), -gcn(lam), atol=1e-12)

    def test_propagation_response_consistency(self):
        # I - L acts on each eigenvector with gain 1 - lambda
        rng = np.random.default_rng(8)
        for _ in range(20):
            g = random_graph(rng, int(rng.integers(2, 50)))
            lap = laplacian(g, LaplacianKind.SELF_LOOP_SYM_NORMALIZED)
            es = eig_sym(lap)
            prop = np.eye(g.n) - lap
            prop2 = np.eye(g.n) - lap @ lap
            for i in range(g.n):
                u, lam = es.eigenvectors[:, i], es.eigenvalues[i]
                assert np.linalg.norm(prop @ u - (1 - lam) * u) < 1e-8
                assert np.linalg.norm(prop2 @ u - (1 - lam**2) * u) < 1e-8


class TestBandSelect:
    def test_full_window_recovers_signal(self):
        rng = np.random.default_rng(2)
        g = random_graph(rng, 12)
        x = rng.standard_normal((12, 4))
        es = eig_sym(laplacian(g, LaplacianKind.SYM_NORMALIZED))
        assert np.allclose(band_select(es, x, "window", (0, 12)), x, atol=1e-8)

    def test_prefix_zero_on_connected_graph(self):
        # only the constant eigenvector has eigenvalue 0
        n = 6
        ring = build_graph(n, [(i, (i + 1) % n) for i in range(n)])
        x = np.random.default_rng(0).standard_normal((n, 2))
        es = eig_sym(laplacian(ring, LaplacianKind.SYM_NORMALIZED))
        got = band_select(es, x, "prefix", 0.0)
        const = np.full((n, n), 1.0 / n)
        assert np.allclose(got, const @ x, atol=1e-8)

    def test_disjoint_windows_are_orthogonal(self):
        rng = np.random.default_rng(4)
        g = random_graph(rng, 15)
        x = rng.standard_normal((15, 3))
        es = eig_sym(laplacian(g, LaplacianKind.SYM_NORMALIZED))
        p1 = band_select(es, x, "window", (0, 5))
        p2_ = band_select(es, x, "window", (5, 5))
        assert abs(float((p1 * p2_).sum())) < 1e-8

    def test_empty_selection(self):
        es = eig_sym(np.eye(3))
        with pytest.raises(EmptySelectionError):
            band_select(es, np.zeros((3, 1)), "prefix", -1.0)

    def test_window_too_large(self):
        es = eig_sym(np.eye(3))
        with pytest.raises(DimensionMismatchError):
            band_select(es, np.zeros((3, 1)), "window", (0, 4))
