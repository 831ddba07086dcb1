import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linear_sum_assignment

from prodspec import _kernels, linalg
from prodspec.linalg import ConvergenceError


def random_complex(rng, n, scale=None):
    scale = 1 / np.sqrt(2 * n) if scale is None else scale
    return scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))


def matched_error(a, b):
    cost = np.abs(np.asarray(a)[:, None] - np.asarray(b)[None, :])
    r, c = linear_sum_assignment(cost)
    return cost[r, c].max()


def lu_log_abs_det2(a):
    """ln|det A|^2 by Gaussian elimination with partial pivoting (test oracle)."""
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    total = 0.0
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        a[[k, p]] = a[[p, k]]
        piv = a[k, k]
        total += 2 * np.log(abs(piv))
        a[k + 1:, k:] -= np.outer(a[k + 1:, k] / piv, a[k, k:])
    return total


class TestEigenvalues:
    def test_involution(self):
        ev = linalg.eigenvalues([[0, 1], [1, 0]]).values
        assert matched_error(ev, [1, -1]) < 1e-14

    def test_antidiagonal_char_poly(self):
        # lambda^2 - ab = 0
        ev = linalg.eigenvalues([[0, 2], [3, 0]]).values
        assert matched_error(ev, [np.sqrt(6), -np.sqrt(6)]) < 1e-14

    def test_companion_cube_roots(self):
        c = np.array([[0, 0, 1], [1, 0, 0], [0, 1, 0]], dtype=complex)
        ev = linalg.eigenvalues(c).values
        roots = np.exp(2j * np.pi * np.arange(3) / 3)
        assert matched_error(ev, roots) < 1e-12
        assert np.allclose(np.abs(ev), 1, atol=1e-12)

    def test_sample_metadata(self):
        s = linalg.eigenvalues(np.eye(3), meta={"trial": 4})
        assert s.kind == "eigenvalues" and s.dim == 3 and len(s.values) == 3
        assert s.meta == {"trial": 4}

    @pytest.mark.parametrize("n", [1, 2, 7, 40, 128])
    def test_matches_lapack(self, n):
        a = random_complex(np.random.default_rng(n), n)
        assert matched_error(linalg.eigenvalues(a).values, np.linalg.eigvals(a)) < 1e-11

    def test_backward_error_within_budget(self):
        a = random_complex(np.random.default_rng(3), 60)
        ev = linalg.eigenvalues(a).values
        # each computed eigenvalue is (nearly) a singular point of A - lambda I
        smin = [np.linalg.svd(a - lam * np.eye(60), compute_uv=False)[-1] for lam in ev]
        assert max(smin) <= linalg.backward_tolerance(a)

    def test_defective_jordan_block(self):
        j = np.diag(np.ones(5), 1)[:6, :6] * 1.0 + 2 * np.eye(6)
        ev = linalg.eigenvalues(j).values
        assert np.allclose(ev, 2, atol=1e-2)

    def test_zero_matrix(self):
        assert np.all(linalg.eigenvalues(np.zeros((5, 5))).values == 0)

    def test_non_square(self):
        with pytest.raises(ValueError):
            linalg.eigenvalues(np.ones((2, 3)))

    def test_non_finite(self):
        with pytest.raises(ValueError):
            linalg.eigenvalues([[np.nan, 0], [0, 1]])

    def test_sweep_budget_reported(self, monkeypatch):
        h = random_complex(np.random.default_rng(0), 20)
        _kernels.hessenberg_reduce(h)
        _, sweeps = _kernels.hessenberg_qr_eigvals(h, 1)
        assert sweeps == -1
        monkeypatch.setattr(_kernels, "hessenberg_qr_eigvals", lambda h, budget: (None, -1))
        with pytest.raises(ConvergenceError):
            linalg.eigenvalues(np.eye(3))

    @settings(max_examples=25, deadline=None)
    @given(n=st.integers(1, 64), seed=st.integers(0, 2**32 - 1))
    def test_trace(self, n, seed):
        a = random_complex(np.random.default_rng(seed), n)
        ev = linalg.eigenvalues(a).values
        assert abs(ev.sum() - np.trace(a)) <= 1e-8 * n * max(np.linalg.norm(a, 2), 1)

    @settings(max_examples=15, deadline=None)
    @given(n=st.integers(2, 32), seed=st.integers(0, 2**32 - 1))
    def test_similarity_invariance(self, n, seed):
        rng = np.random.default_rng(seed)
        a = random_complex(rng, n)
        u, _ = np.linalg.qr(random_complex(rng, n))
        e1 = linalg.eigenvalues(a).values
        e2 = linalg.eigenvalues(u.conj().T @ a @ u).values
        assert matched_error(e1, e2) < 1e-8

    def test_backward_stability_smoke(self):
        rng = np.random.default_rng(9)
        u, _ = np.linalg.qr(random_complex(rng, 16))
        lam = np.exp(2j * np.pi * np.arange(16) / 16) * np.linspace(1, 2, 16)
        a = u @ np.diag(lam) @ u.conj().T
        e = random_complex(rng, 16)
        e /= np.linalg.norm(e, 2)
        shift = matched_error(linalg.eigenvalues(a).values, linalg.eigenvalues(a + 1e-13 * e).values)
        assert shift < 1e-10


class TestHermitian:
    def test_diagonal(self):
        assert np.allclose(linalg.hermitian_eigenvalues(np.diag([3.0, 1.0, 2.0])).values, [1, 2, 3])

    def test_two_by_two(self):
        ev = linalg.hermitian_eigenvalues([[2, 1j], [-1j, 2]]).values
        assert np.allclose(ev, [1, 3], atol=1e-14)

    def test_psd(self):
        r = random_complex(np.random.default_rng(1), 50)
        h = r.conj().T @ r
        ev = linalg.hermitian_eigenvalues(h).values
        assert ev.min() >= -1e-10 * np.linalg.norm(h, 2)
        assert np.all(np.diff(ev) >= 0)

    def test_psd_clamp(self):
        h = np.zeros((4, 4))
        h[0, 0] = 1.0
        ev = linalg.hermitian_eigenvalues(h, psd=True).values
        assert np.all(ev >= 0)

    @pytest.mark.parametrize("n", [1, 2, 3, 33, 200])
    def test_matches_lapack(self, n):
        r = random_complex(np.random.default_rng(n + 100), n)
        h = r + r.conj().T
        ref = np.linalg.eigvalsh(h)
        assert np.max(np.abs(linalg.hermitian_eigenvalues(h).values - ref)) < 1e-12 * max(n, 1) * 10

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            linalg.hermitian_eigenvalues([[1, 2], [0, 1]])


class TestSingularValues:
    def test_unitary_dft(self):
        f = np.fft.fft(np.eye(4)) / 2
        s = linalg.singular_values(f).values
        assert np.allclose(s, 1, atol=1e-12)

    def test_diagonal_modulus(self):
        s = linalg.singular_values(np.diag([-2.0, 1.0]))
        assert s.kind == "singular-values"
        assert np.allclose(s.values, [2, 1])

    def test_duality_with_inverse(self):
        a = random_complex(np.random.default_rng(8), 8)
        smin = linalg.singular_values(a).values[-1]
        inv_norm = linalg.singular_values(np.linalg.inv(a)).values[0]
        assert abs(smin * inv_norm - 1) < 1e-8

    def test_descending_and_matches_lapack(self):
        a = random_complex(np.random.default_rng(2), 30)
        s = linalg.singular_values(a).values
        assert np.all(np.diff(s) <= 0)
        assert np.allclose(s, np.linalg.svd(a, compute_uv=False), atol=1e-12)


class TestLogAbsDet:
    def test_identity(self):
        assert linalg.log_abs_det(np.eye(5)) == pytest.approx(0, abs=1e-14)

    def test_diag_e(self):
        assert linalg.log_abs_det(np.diag([np.e, np.e])) == pytest.approx(4.0, abs=1e-14)

    def test_against_lu_oracle(self):
        a = random_complex(np.random.default_rng(6), 6, scale=1.0)
        assert abs(linalg.log_abs_det(a) - lu_log_abs_det2(a)) < 1e-8

    def test_singular_sentinel(self):
        assert linalg.log_abs_det(np.zeros((3, 3))) == -np.inf


@settings(max_examples=20, deadline=None)
@given(n=st.integers(1, 40), seed=st.integers(0, 2**32 - 1))
def test_weyl_horn(n, seed):
    a = random_complex(np.random.default_rng(seed), n)
    lam = np.sort(np.abs(linalg.eigenvalues(a).values))[::-1]
    s = linalg.singular_values(a).values
    assert np.all(np.cumsum(lam**2) <= np.cumsum(s**2) + 1e-8)
