"""Stacked quasi-linear equations, matrix assembly, geodesic matrix, spectra,
and the Egorov certificate."""

import math

import numpy as np
import pytest

import magtorus as mt
from helpers import (exact_family, manufactured_rescaled,
                     transcription_n1, transcription_n2)


def random_state(rng, n):
    vals = np.concatenate([[rng.uniform(0.5, 3.0)],
                           rng.uniform(-0.8, 0.8, 2 * n - 1)])
    return mt.StateVector(vals)


def test_state_vector_validation():
    with pytest.raises(ValueError):
        mt.StateVector(np.array([1.0, 2.0, 3.0]))  # odd length
    with pytest.raises(mt.DomainError):
        mt.StateVector(np.array([-1.0, 0.0]))
    sv = mt.StateVector.coerce([2.0, 0.1, 0.2, 0.3])
    assert sv.n == 2 and sv.lam == 2.0


def test_homogeneity_in_derivatives():
    rng = np.random.default_rng(73)
    for n in (1, 2, 3, 4):
        state = random_state(rng, n)
        zero = np.zeros(2 * n)
        assert np.all(mt.stacked_residual(state, zero, zero) == 0.0)


def test_linearity_in_derivative_slots():
    rng = np.random.default_rng(79)
    for n in (1, 2, 3):
        state = random_state(rng, n)
        p1 = rng.uniform(-1, 1, 2 * n)
        p2 = rng.uniform(-1, 1, 2 * n)
        q = rng.uniform(-1, 1, 2 * n)
        a, b = 0.7, -1.3
        zero = np.zeros(2 * n)
        lhs = mt.stacked_residual(state, a * p1 + b * p2, q)
        rhs = (a * mt.stacked_residual(state, p1, zero)
               + b * mt.stacked_residual(state, p2, zero)
               + mt.stacked_residual(state, zero, q))
        assert np.max(np.abs(lhs - rhs)) < 1e-13


def test_assemble_reproduces_residual():
    rng = np.random.default_rng(83)
    for n in (1, 2, 3, 4):
        state = random_state(rng, n)
        mats = mt.assemble(state)
        for _ in range(20):
            p = rng.uniform(-1, 1, 2 * n)
            q = rng.uniform(-1, 1, 2 * n)
            direct = mt.stacked_residual(state, p, q)
            assert np.max(np.abs(mats.apply(p, q) - direct)) < 1e-13


def test_n1_matrices_match_hand_derivation():
    # At U = (1, 0.3): the harmonic-0 row is Lambda_x / sqrt(Lambda) and the
    # constraint row is 2 Lambda (u_0)_x (the Lambda_x coefficient vanishes
    # because N - 1 = 0).
    mats = mt.assemble([1.0, 0.3])
    assert np.allclose(mats.a, [[1.0, 0.0], [0.0, 2.0]], atol=1e-15)
    assert np.allclose(mats.b, [[0.0, 0.0], [0.0, 0.0]], atol=1e-15)


def test_matches_independent_transcriptions():
    rng = np.random.default_rng(89)
    for _ in range(5):
        s1 = random_state(rng, 1)
        p, q = rng.uniform(-1, 1, (2, 2))
        expect = transcription_n1(s1.values, p, q)
        assert np.max(np.abs(mt.stacked_residual(s1, p, q) - expect)) < 1e-12

        s2 = random_state(rng, 2)
        p, q = rng.uniform(-1, 1, (2, 4))
        expect = transcription_n2(s2.values, p, q)
        assert np.max(np.abs(mt.stacked_residual(s2, p, q) - expect)) < 1e-12


def test_constraint_row_depends_only_on_top_pair():
    # Feeding derivative slots consistent with the rescaled variables, the
    # last row reduces to 2 Lambda^((N+1)/2) (f_x + g_y): the Lambda slots
    # are absorbed exactly.
    rng = np.random.default_rng(97)
    for n in (2, 3):
        state = random_state(rng, n)
        lam = state.lam
        u_top = state.values[n]          # u_{N-1}
        v_top = state.values[2 * n - 1]  # v_{N-1}
        f_val = u_top * lam ** (-(n - 1) / 2.0)
        g_val = v_top * lam ** (-(n - 1) / 2.0)
        fx, gy = rng.uniform(-1, 1, 2)
        for lam_x, lam_y in rng.uniform(-1, 1, (3, 2)):
            ux = np.zeros(2 * n)
            uy = np.zeros(2 * n)
            ux[0], uy[0] = lam_x, lam_y
            # chain rule: u_{N-1} = f Lambda^((N-1)/2)
            scale = lam ** ((n - 1) / 2.0)
            dscale_x = (n - 1) / 2.0 * lam ** ((n - 3) / 2.0) * lam_x
            dscale_y = (n - 1) / 2.0 * lam ** ((n - 3) / 2.0) * lam_y
            ux[n] = fx * scale + f_val * dscale_x
            uy[n] = 0.0 * scale + f_val * dscale_y          # f_y slot = 0
            ux[2 * n - 1] = 0.0 * scale + g_val * dscale_x  # g_x slot = 0
            uy[2 * n - 1] = gy * scale + g_val * dscale_y
            row = mt.stacked_residual(state, ux, uy)[2 * n - 1]
            expect = 2.0 * lam ** ((n + 1) / 2.0) * (fx + gy)
            assert row == pytest.approx(expect, abs=1e-12)


def test_stacked_residual_domain_error():
    with pytest.raises(mt.DomainError):
        mt.stacked_residual([0.0, 1.0], np.zeros(2), np.zeros(2))


def test_manufactured_state_annihilates_top_rows():
    # State and true derivative slots from a manufactured N=3 configuration
    # (leading-harmonic block exact): the k = N-1 rows and the constraint row
    # must vanish; the lower harmonics are unconstrained.
    rng = np.random.default_rng(101)
    psi = mt.random_trig_field(rng, n_modes=3, max_mode=2, amplitude=0.25)
    lam = mt.random_trig_field(rng, n_modes=3, max_mode=2, amplitude=0.15, offset=2.0)
    resc = manufactured_rescaled(3, psi, lam)
    u_fields, v_fields = mt.unrescale(resc)

    def slot(fn, x, y):
        return np.array([fn(lam, x, y)] + [fn(u, x, y) for u in u_fields]
                        + [fn(v, x, y) for v in v_fields[1:]])

    for _ in range(5):
        x, y = rng.uniform(0, 2 * math.pi, 2)
        state = slot(lambda h, a, b: h.eval(a, b), x, y)
        ux = slot(lambda h, a, b: h.d_dx(a, b), x, y)
        uy = slot(lambda h, a, b: h.d_dy(a, b), x, y)
        rows = mt.stacked_residual(state, ux, uy)
        assert np.max(np.abs(rows[3:])) < 1e-10


# ---------------------------------------------------------------------------
# geodesic matrix
# ---------------------------------------------------------------------------


def test_geodesic_matrix_n2():
    mat = mt.geodesic_matrix(2, [0.0, 1.0, 1.0])
    assert np.array_equal(mat, [[0.0, 1.0], [1.0, 2.0]])
    eigs = np.sort(np.linalg.eigvals(mat).real)
    assert eigs[0] == pytest.approx(1.0 - math.sqrt(2.0), abs=1e-12)
    assert eigs[1] == pytest.approx(1.0 + math.sqrt(2.0), abs=1e-12)


def test_geodesic_matrix_n3_cells():
    a = [0.1, 0.2, 0.3, 1.0]
    mat = mt.geodesic_matrix(3, a)
    # subdiagonal carries a_{n-1}
    assert mat[1, 0] == a[2] and mat[2, 1] == a[2]
    # last column: a_1, 2 a_2 - n a_0, n a_n - 2 a_{n-2}
    assert mat[0, 2] == pytest.approx(0.2)
    assert mat[1, 2] == pytest.approx(2 * 0.3 - 3 * 0.1)
    assert mat[2, 2] == pytest.approx(3 * 1.0 - 2 * 0.2)
    # all remaining entries vanish
    mask = np.ones((3, 3), dtype=bool)
    mask[1, 0] = mask[2, 1] = False
    mask[:, 2] = False
    assert np.all(mat[mask] == 0.0)


def test_geodesic_matrix_validation():
    with pytest.raises(ValueError):
        mt.geodesic_matrix(1, [0.0, 1.0])
    with pytest.raises(ValueError):
        mt.geodesic_matrix(2, [0.0, 1.0])


def test_geodesic_matrix_entries_affine_in_coefficients():
    # second differences with respect to every a_k vanish
    rng = np.random.default_rng(103)
    n = 4
    base = rng.uniform(-1, 1, n + 1)
    for k in range(n + 1):
        step = np.zeros(n + 1)
        step[k] = 0.37
        m0 = mt.geodesic_matrix(n, base)
        m1 = mt.geodesic_matrix(n, base + step)
        m2 = mt.geodesic_matrix(n, base + 2 * step)
        assert np.max(np.abs(m2 - 2 * m1 + m0)) < 1e-12


# ---------------------------------------------------------------------------
# spectra
# ---------------------------------------------------------------------------


def test_spectrum_diagonal_hyperbolic():
    rep = mt.spectrum((np.eye(2), np.diag([1.0, 2.0])))
    assert rep.classification == "hyperbolic"
    assert np.allclose(np.sort(rep.eigenvalues.real), [1.0, 2.0], atol=1e-12)


def test_spectrum_single_matrix_input():
    rep = mt.spectrum(np.array([[0.0, 1.0], [1.0, 2.0]]))
    assert rep.classification == "hyperbolic"
    vals = np.sort(rep.eigenvalues.real)
    assert vals[0] == pytest.approx(1 - math.sqrt(2), abs=1e-12)
    assert vals[1] == pytest.approx(1 + math.sqrt(2), abs=1e-12)


def test_spectrum_rotation_elliptic():
    rep = mt.spectrum((np.eye(2), np.array([[0.0, -1.0], [1.0, 0.0]])))
    assert rep.classification == "elliptic/mixed"
    assert np.allclose(np.sort(rep.eigenvalues.imag), [-1.0, 1.0], atol=1e-12)


def test_spectrum_repeated_eigenvalue_degenerate():
    rep = mt.spectrum((np.eye(2), np.eye(2)))
    assert rep.classification == "degenerate"


def test_spectrum_both_singular_no_exception():
    rep = mt.spectrum((np.zeros((2, 2)), np.zeros((2, 2))))
    assert rep.classification == "degenerate"
    assert rep.diagnostics["n_indeterminate"] == 2


def test_spectrum_infinite_eigenvalues():
    # singular A: one finite eigenvalue, one at infinity
    rep = mt.spectrum((np.diag([1.0, 0.0]), np.eye(2)))
    assert rep.diagnostics["n_infinite"] == 1
    assert rep.classification == "hyperbolic"
    assert np.allclose(rep.eigenvalues, [1.0], atol=1e-12)


def test_spectrum_invariant_under_row_scaling():
    rng = np.random.default_rng(107)
    state = random_state(rng, 2)
    mats = mt.assemble(state)
    rep0 = mt.spectrum(mats)
    d = np.diag(rng.uniform(0.5, 2.0, 4))
    rep1 = mt.spectrum((d @ mats.a, d @ mats.b))
    assert rep0.classification == rep1.classification
    if rep0.eigenvalues.size:
        e0 = np.sort_complex(rep0.eigenvalues)
        e1 = np.sort_complex(rep1.eigenvalues)
        assert np.max(np.abs(e0 - e1)) < 1e-10


def test_crafted_state_with_both_matrices_singular():
    # N = 2, u_1 = v_1 = 0 annihilates one row of each matrix
    mats = mt.assemble([1.0, 0.3, 0.0, 0.0])
    assert abs(np.linalg.det(mats.a)) < 1e-14
    assert abs(np.linalg.det(mats.b)) < 1e-14
    assert mt.spectrum(mats).classification == "degenerate"


def test_state_from_ansatz():
    ansatz, _ = exact_family()
    sv = mt.state_from_ansatz(ansatz, 0.4, 1.1)
    assert sv.n == 1
    assert sv.values[0] == pytest.approx(ansatz.lam.eval(0.4, 1.1))
    assert sv.values[1] == pytest.approx(ansatz.u[0].eval(0.4, 1.1))


# ---------------------------------------------------------------------------
# Egorov certificate
# ---------------------------------------------------------------------------


def test_certificate_exact_family():
    ansatz, _ = exact_family()
    cert = mt.egorov_certificate(mt.rescale(ansatz), ansatz.lam, 1, tol=1e-10)
    assert cert.certified
    assert "N=1 degenerate" in cert.flags
    assert set(cert.fluxes) == {"density", "flux_1", "flux_2"}
    assert all(s < 1e-10 for s in cert.residual_sups.values())


def test_certificate_refused_for_generic_fields():
    rng = np.random.default_rng(109)
    lam = mt.random_trig_field(rng, n_modes=3, max_mode=2, amplitude=0.15, offset=2.0)
    f = [mt.random_trig_field(rng, n_modes=3, max_mode=2, amplitude=0.4)
         for _ in range(2)]
    g = [mt.random_trig_field(rng, n_modes=3, max_mode=2, amplitude=0.4)
         for _ in range(2)]
    resc = mt.RescaledAnsatz(2, tuple(f), tuple(g), lam, lam.geometry)
    cert = mt.egorov_certificate(resc, lam, 2, tol=1e-10)
    assert not cert.certified
    assert max(cert.residual_sups.values()) > 1e-3


def test_certificate_manufactured_solution():
    rng = np.random.default_rng(113)
    psi = mt.random_trig_field(rng, n_modes=3, max_mode=2, amplitude=0.25)
    lam = mt.random_trig_field(rng, n_modes=3, max_mode=2, amplitude=0.15, offset=2.0)
    resc = manufactured_rescaled(3, psi, lam)
    cert = mt.egorov_certificate(resc, lam, 3, tol=1e-10)
    assert cert.certified
    assert not cert.flags
