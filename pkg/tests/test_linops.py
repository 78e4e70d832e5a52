import numpy as np
import pytest

from conekit import linops
from conekit.linops import (
    herm_eig,
    kernel_projector,
    kron,
    matrix_from_json,
    matrix_to_json,
    partial_trace,
    support_projector,
    trace_distance,
)

from conftest import basis_proj, random_density, random_hermitian


def kron_oracle(a, b):
    """Entrywise quadruple-loop Kronecker product."""
    ra, ca = a.shape
    rb, cb = b.shape
    out = np.zeros((ra * rb, ca * cb), dtype=complex)
    for i in range(ra):
        for j in range(ca):
            for k in range(rb):
                for l in range(cb):
                    out[i * rb + k, j * cb + l] = a[i, j] * b[k, l]
    return out


def partial_trace_oracle_over2(m, d1, d2):
    """Explicit index sum: out[i, j] = sum_k M[(i,k),(j,k)]."""
    out = np.zeros((d1, d1), dtype=complex)
    for i in range(d1):
        for j in range(d1):
            for k in range(d2):
                out[i, j] += m[i * d2 + k, j * d2 + k]
    return out


class TestKron:
    def test_identity(self):
        assert np.array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))

    def test_basis_projectors(self):
        out = kron(basis_proj(0, 2), basis_proj(1, 2))
        expected = np.zeros((4, 4))
        expected[1, 1] = 1.0
        assert np.array_equal(out, expected)

    def test_matches_quadruple_loop(self, rng):
        for _ in range(5):
            a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            b = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            assert np.abs(kron(a, b) - kron_oracle(a, b)).max() < 1e-14

    def test_associativity(self, rng):
        for _ in range(10):
            a, b, c = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)) for _ in range(3))
            left = kron(kron(a, b), c)
            right = kron(a, kron(b, c))
            assert np.abs(left - right).max() < 1e-12


class TestPartialTrace:
    def test_product_state(self, rng):
        for _ in range(10):
            a = random_hermitian(rng, 2)
            b = random_hermitian(rng, 2)
            out = partial_trace(kron(a, b), (2, 2), over=2)
            assert np.abs(out - a * np.trace(b)).max() < 1e-10

    def test_identity_over_first(self):
        out = partial_trace(np.eye(4), (2, 2), over=1)
        assert np.abs(out - 2 * np.eye(2)).max() < 1e-15

    def test_index_sum_oracle(self, rng):
        m = random_hermitian(rng, 4)
        out = partial_trace(m, (2, 2), over=2)
        assert np.abs(out - partial_trace_oracle_over2(m, 2, 2)).max() < 1e-14

    def test_trace_preserved(self, rng):
        m = random_hermitian(rng, 6)
        for over, dims in ((1, (2, 3)), (2, (2, 3))):
            out = partial_trace(m, dims, over=over)
            assert abs(np.trace(out) - np.trace(m)) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            partial_trace(np.eye(4), (2, 3), over=2)
        with pytest.raises(ValueError):
            partial_trace(np.eye(4), (2, 2), over=3)


class TestHermEig:
    def test_identity(self):
        w, v = herm_eig(np.eye(2))
        assert np.allclose(w, [1.0, 1.0])
        assert np.abs(v @ v.conj().T - np.eye(2)).max() < 1e-12

    def test_diagonal(self):
        w, v = herm_eig(np.diag([0.7, 0.3]))
        assert np.allclose(w, [0.7, 0.3])
        assert np.abs(np.abs(v[0, 0]) - 1.0) < 1e-12
        assert np.abs(np.abs(v[1, 1]) - 1.0) < 1e-12

    def test_degenerate_tiebreak_prefers_first_axis(self):
        # maximally mixed: deterministic choice must put e0 first
        w, v = herm_eig(np.eye(2) / 2)
        assert np.allclose(v[:, 0], [1.0, 0.0])

    def test_reconstruction(self, rng):
        for dim in (2, 3, 5, 8, 16):
            a = random_hermitian(rng, dim)
            w, v = herm_eig(a)
            recon = v @ np.diag(w) @ v.conj().T
            assert np.abs(recon - a).max() < 1e-10
            assert np.all(np.diff(w) <= 1e-10)  # descending
            assert np.abs(v.conj().T @ v - np.eye(dim)).max() < 1e-8

    def test_phase_fix(self, rng):
        a = random_hermitian(rng, 4)
        _, v = herm_eig(a)
        for k in range(4):
            first = next(x for x in v[:, k] if abs(x) > 1e-10)
            assert abs(first.imag) < 1e-10 and first.real > 0

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            herm_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestProjectors:
    def test_support_of_pure(self):
        p = basis_proj(0, 2)
        assert np.abs(support_projector(p) - p).max() < 1e-12

    def test_support_full_rank(self):
        assert np.abs(support_projector(np.eye(2) / 2) - np.eye(2)).max() < 1e-12

    def test_support_scaled_pure(self):
        plus = linops.ket_projector(np.array([1.0, 1.0]) / np.sqrt(2))
        assert np.abs(support_projector(0.6 * plus) - plus).max() < 1e-12

    def test_kernel_of_pure(self):
        assert np.abs(kernel_projector(basis_proj(0, 2)) - basis_proj(1, 2)).max() < 1e-12

    def test_kernel_full_rank(self):
        for d in (2, 3):
            assert np.abs(kernel_projector(np.eye(d) / d)).max() < 1e-12

    def test_kernel_of_bell_mixture(self):
        # generic-coefficient mixture of Bell-frame states spans a 3-dim
        # subspace; the kernel is the remaining singlet direction
        v0 = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
        v1 = np.array([1, 0, 0, -1], dtype=complex) / np.sqrt(2)
        v2 = np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2)
        v3 = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
        k1 = 0.8 * v1 + 0.6 * v2
        k2 = -0.6 * v1 + 0.8 * v2
        sigma0 = 0.3 * linops.ket_projector(v0) + 0.4 * linops.ket_projector(k1) + 0.3 * linops.ket_projector(k2)
        kernel = kernel_projector(sigma0)
        assert np.abs(kernel - linops.ket_projector(v3)).max() < 1e-10

    def test_support_plus_kernel_is_identity(self, rng):
        for dim in (2, 3, 4):
            rho = random_density(rng, dim)
            total = support_projector(rho) + kernel_projector(rho)
            assert np.abs(total - np.eye(dim)).max() < 1e-12

    def test_projector_idempotent_and_absorbing(self, rng):
        rho = random_density(rng, 4)
        p = support_projector(rho)
        assert np.abs(p @ p - p).max() < 1e-10
        assert np.abs(p @ rho - rho).max() < 1e-8

    def test_rejects_non_psd(self):
        with pytest.raises(ValueError):
            support_projector(np.diag([1.0, -1.0]))


class TestTraceDistance:
    def test_self(self, rng):
        rho = random_density(rng, 3)
        assert trace_distance(rho, rho) == 0.0

    def test_orthogonal_pure(self):
        assert abs(trace_distance(basis_proj(0, 2), basis_proj(1, 2)) - 1.0) < 1e-12

    def test_pure_vs_mixed(self):
        assert abs(trace_distance(basis_proj(0, 2), np.eye(2) / 2) - 0.5) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            trace_distance(np.eye(2) / 2, np.eye(3) / 3)

    def test_triangle_inequality(self, rng):
        for _ in range(20):
            a, b, c = (random_density(rng, 3) for _ in range(3))
            assert trace_distance(a, c) <= trace_distance(a, b) + trace_distance(b, c) + 1e-12


class TestMatrixJson:
    def test_roundtrip(self, rng):
        m = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
        out = matrix_from_json(matrix_to_json(m))
        assert np.abs(out - m).max() < 1e-15

    def test_entry_count_mismatch(self):
        with pytest.raises(ValueError):
            matrix_from_json({"rows": 2, "cols": 2, "re": [1, 2, 3], "im": [0, 0, 0]})

    def test_missing_keys(self):
        with pytest.raises(ValueError):
            matrix_from_json({"rows": 1, "cols": 1, "re": [1.0]})

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            matrix_from_json({"rows": 1, "cols": 1, "re": [float("nan")], "im": [0.0]})
