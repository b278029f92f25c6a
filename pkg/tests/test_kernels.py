import time

import numpy as np
import pytest
import scipy.sparse as sp

from conftest import cgauss, random_factors, rel_err
from scalht import oracle
from scalht.hankel import adjoint_G, lift_G, make_space
from scalht.kernels import (
    FactorizedZ,
    conv_tensor_W,
    dehankel_factored,
    joint12_contract,
    matrix_B,
    mode3_lift_mul,
    scaled_grams,
    single_mode_mul,
)
from scalht.tensor_core import assemble, mode_product, multi_mode_product


class TestConvTensor:
    def test_all_ones_r1(self):
        spc = make_space(2, 2, 1)
        W = conv_tensor_W(np.ones((2, 1)), np.ones((2, 1)), spc)
        assert np.allclose(W[0, 0], [1.0, np.sqrt(2.0), 1.0])

    def test_delta_columns(self):
        spc = make_space(3, 3, 1)
        e0 = np.zeros((3, 1))
        e0[0] = 1
        W = conv_tensor_W(e0, e0, spc)
        expected = np.zeros(5)
        expected[0] = 1.0 / spc.sqrt_w[0]
        assert np.allclose(W[0, 0], expected)

    def test_against_oracle(self, rng):
        spc = make_space(5, 4, 1)
        L, R = cgauss(rng, 5, 3), cgauss(rng, 4, 3)
        assert rel_err(conv_tensor_W(L, R, spc), oracle.oracle_conv_W(L, R, spc)) < 1e-12

    def test_bilinearity(self, rng):
        spc = make_space(4, 3, 1)
        L1, L2, R = cgauss(rng, 4, 2), cgauss(rng, 4, 2), cgauss(rng, 3, 2)
        lhs = conv_tensor_W(L1 + 2 * L2, R, spc)
        rhs = conv_tensor_W(L1, R, spc) + 2 * conv_tensor_W(L2, R, spc)
        assert np.allclose(lhs, rhs, atol=1e-12)

    def test_shape_mismatch(self, rng):
        with pytest.raises(ValueError):
            conv_tensor_W(cgauss(rng, 4, 2), cgauss(rng, 4, 2), make_space(5, 4, 1))

    def test_subquadratic_scaling(self):
        # wall time from n ~ 2^10 to n ~ 2^14 grows like n log n, far below 256x
        def timed(n):
            n1 = (n + 2) // 2
            spc = make_space(n1, n + 1 - n1, 1)
            L = np.random.default_rng(0).standard_normal((spc.n1, 3))
            R = np.random.default_rng(1).standard_normal((spc.n2, 3))
            conv_tensor_W(L, R, spc)  # warm up
            best = np.inf
            for _ in range(5):
                t0 = time.perf_counter()
                conv_tensor_W(L, R, spc)
                best = min(best, time.perf_counter() - t0)
            return best

        assert timed(2**14) / timed(2**10) <= 24


class TestMatrixB:
    def test_scalar_core(self):
        spc = make_space(2, 2, 1)
        W = conv_tensor_W(np.ones((2, 1)), np.ones((2, 1)), spc)
        B = matrix_B(W, np.ones((1, 1, 1)))
        assert np.allclose(B[:, 0], [1.0, np.sqrt(2.0), 1.0])

    def test_zero_core(self, rng):
        spc = make_space(4, 3, 1)
        W = conv_tensor_W(cgauss(rng, 4, 2), cgauss(rng, 3, 2), spc)
        assert np.allclose(matrix_B(W, np.zeros((2, 2, 2))), 0)

    def test_factored_dehankel_identity(self, rng):
        spc = make_space(4, 3, 2)
        F = random_factors(rng, 4, 3, 2, 2)
        fz = dehankel_factored(F, spc)
        assert rel_err(fz.materialize(), oracle.oracle_dehankel(F, spc)) < 1e-12

    def test_rank_mismatch(self, rng):
        with pytest.raises(ValueError):
            matrix_B(cgauss(rng, 2, 2, 5), cgauss(rng, 3, 3, 3))


class TestDehankelFactored:
    def test_rank_one_ones(self):
        spc = make_space(2, 2, 1)
        from scalht.tensor_core import TuckerFactors

        F = TuckerFactors(
            np.ones((2, 1), dtype=complex),
            np.ones((2, 1), dtype=complex),
            np.ones((1, 1), dtype=complex),
            np.ones((1, 1, 1), dtype=complex),
        )
        assert np.allclose(dehankel_factored(F, spc).materialize(), [[1, np.sqrt(2), 1]])

    def test_zero_V(self, rng):
        spc = make_space(4, 3, 2)
        F = random_factors(rng, 4, 3, 2, 2)
        F.V[:] = 0
        assert np.allclose(dehankel_factored(F, spc).materialize(), 0)

    def test_random_against_oracle(self, rng):
        spc = make_space(6, 5, 4)
        F = random_factors(rng, 6, 5, 4, 2)
        assert rel_err(dehankel_factored(F, spc).materialize(), oracle.oracle_dehankel(F, spc)) < 1e-11

    def test_entries_match_materialized(self, rng):
        fz = FactorizedZ(cgauss(rng, 4, 2), cgauss(rng, 6, 2))
        Z = fz.materialize()
        rows = np.array([0, 3, 1])
        cols = np.array([5, 0, 2])
        assert np.allclose(fz.entries(rows, cols), Z[rows, cols])


class TestMode3LiftMul:
    def test_identity_V(self, rng):
        spc = make_space(4, 3, 3)
        E = cgauss(rng, 3, 6)
        out = mode3_lift_mul(E, np.eye(3, dtype=complex), spc)
        assert np.allclose(out, lift_G(E, spc))

    def test_zero(self, rng):
        spc = make_space(4, 3, 3)
        out = mode3_lift_mul(np.zeros((3, 6), dtype=complex), cgauss(rng, 2, 3), spc)
        assert np.allclose(out, 0)

    def test_sparse_against_oracle(self, rng):
        spc = make_space(4, 4, 3)
        dense = np.zeros((3, 7), dtype=complex)
        idx = rng.choice(21, size=7, replace=False)
        dense[idx // 7, idx % 7] = cgauss(rng, 7)
        V = cgauss(rng, 3, 2)
        out = mode3_lift_mul(sp.csr_matrix(dense), V.conj().T, spc)
        expected = mode_product(lift_G(dense, spc), V.conj().T, 3)
        assert rel_err(out, expected) < 1e-12

    def test_dual_identity(self, rng):
        # G*(T x3 V) = V G*(T) for T of thin third dimension
        spc = make_space(5, 4, 3)
        r = 2
        T = cgauss(rng, 5, 4, r)
        V = cgauss(rng, 3, r)
        lifted_space = make_space(5, 4, 3)
        lhs = adjoint_G(mode_product(T, V, 3), lifted_space)
        rhs = V @ adjoint_G(T, make_space(5, 4, r))
        assert rel_err(lhs, rhs) < 1e-11


class TestJoint12Contract:
    def test_selector_row(self, rng):
        spc = make_space(4, 3, 1)
        W = conv_tensor_W(cgauss(rng, 4, 2), cgauss(rng, 3, 2), spc)
        a = 3
        E = np.zeros((1, spc.n), dtype=complex)
        E[0, a] = 1.0
        out = joint12_contract(W, E)
        assert np.allclose(out[:, :, 0], np.conj(W)[:, :, a])

    def test_zero(self, rng):
        spc = make_space(4, 3, 1)
        W = conv_tensor_W(cgauss(rng, 4, 2), cgauss(rng, 3, 2), spc)
        assert np.allclose(joint12_contract(W, np.zeros((2, spc.n))), 0)

    def test_against_lifted_contraction(self, rng):
        spc = make_space(5, 4, 2)
        L, R = cgauss(rng, 5, 2), cgauss(rng, 4, 2)
        W = conv_tensor_W(L, R, spc)
        E = cgauss(rng, 2, spc.n)
        out = joint12_contract(W, E)
        lifted = lift_G(E, make_space(5, 4, 2))
        expected = multi_mode_product(lifted, L.conj().T, R.conj().T, None)
        assert rel_err(out, expected) < 1e-11


class TestSingleModeMul:
    def test_delta_factor(self, rng):
        # factor = e_0 picks the inverse-weighted entries E(., i2)
        spc = make_space(3, 3, 1)
        E = cgauss(rng, 1, spc.n)
        F = np.zeros((3, 1), dtype=complex)
        F[0, 0] = 1.0
        out = single_mode_mul(E, F, 1, spc)
        expected = oracle.oracle_single_mode(E, F, 1, spc)
        assert rel_err(out, expected) < 1e-12
        assert np.allclose(out[0, :, 0], E[0, :3] / spc.sqrt_w[:3])

    def test_zero(self, rng):
        spc = make_space(4, 3, 1)
        out = single_mode_mul(np.zeros((2, spc.n)), cgauss(rng, 4, 2), 1, spc)
        assert np.allclose(out, 0)

    @pytest.mark.parametrize("mode", [1, 2])
    def test_random_against_oracle(self, rng, mode):
        spc = make_space(6, 5, 3)
        E = cgauss(rng, 3, spc.n)
        F = cgauss(rng, 6 if mode == 1 else 5, 3)
        out = single_mode_mul(E, F, mode, spc)
        expected = oracle.oracle_single_mode(E, F, mode, spc)
        assert rel_err(out, expected) < 1e-11

    def test_asymmetric_spaces(self, rng):
        # n1 != n2 exercises the lag offsets on both modes
        for n1, n2 in [(7, 3), (2, 6), (1, 5), (5, 1)]:
            spc = make_space(n1, n2, 1)
            E = cgauss(rng, 2, spc.n)
            for mode, rows in ((1, n1), (2, n2)):
                F = cgauss(rng, rows, 2)
                assert rel_err(
                    single_mode_mul(E, F, mode, spc),
                    oracle.oracle_single_mode(E, F, mode, spc),
                ) < 1e-11


class TestScaledGrams:
    def test_hosvd_structure(self, rng):
        # orthonormal R, V and a core with orthogonal mode-1 rows: GL = Sigma^2
        r = 2
        sig = np.array([3.0, 1.5])
        Q = np.linalg.qr(cgauss(rng, r * r, r))[0]  # (r^2, r) orthonormal
        M1S = (Q * sig).conj().T  # M1(S) M1(S)^H = Sigma^2
        from scalht.tensor_core import TuckerFactors, dematricize

        S = dematricize(M1S, 1, (r, r, r))
        F = TuckerFactors(
            np.linalg.qr(cgauss(rng, 5, r))[0],
            np.linalg.qr(cgauss(rng, 4, r))[0],
            np.linalg.qr(cgauss(rng, 4, r))[0],
            S,
        )
        GL, _, _ = scaled_grams(F)
        assert np.allclose(GL, np.diag(sig**2), atol=1e-12)

    def test_zero_core(self, rng):
        F = random_factors(rng, 5, 4, 3, 2)
        F.S[:] = 0
        for G in scaled_grams(F):
            assert np.allclose(G, 0)

    def test_against_materialized_breves(self, rng):
        F = random_factors(rng, 5, 4, 3, 2)
        fast = scaled_grams(F)
        slow = oracle.oracle_breve_grams(F)
        for a, b in zip(fast, slow):
            assert rel_err(a, b) < 1e-12
            assert np.abs(a - a.conj().T).max() < 1e-12

    def test_mode1_unfolding_is_L_breveH(self, rng):
        # M1(assemble(F)) = L breve(L)^H ties the breve definition to the unfolding
        from scalht.tensor_core import matricize

        F = random_factors(rng, 5, 4, 3, 2)
        Lb, Rb, Vb = oracle.oracle_breve_matrices(F)
        Z = assemble(F)
        assert rel_err(matricize(Z, 1), F.L @ Lb.conj().T) < 1e-12
        assert rel_err(matricize(Z, 2), F.R @ Rb.conj().T) < 1e-12
        assert rel_err(matricize(Z, 3), F.V @ Vb.conj().T) < 1e-12


class TestKernelLinearity:
    def test_superposition(self, rng):
        spc = make_space(5, 4, 3)
        L, R = cgauss(rng, 5, 2), cgauss(rng, 4, 2)
        W = conv_tensor_W(L, R, spc)
        E1, E2 = cgauss(rng, 2, spc.n), cgauss(rng, 2, spc.n)
        alpha = 1.7 - 0.3j
        assert np.allclose(
            joint12_contract(W, E1 + alpha * E2),
            joint12_contract(W, E1) + alpha * joint12_contract(W, E2),
            atol=1e-11,
        )
        assert np.allclose(
            single_mode_mul(E1 + alpha * E2, L, 1, spc),
            single_mode_mul(E1, L, 1, spc) + alpha * single_mode_mul(E2, L, 1, spc),
            atol=1e-11,
        )
