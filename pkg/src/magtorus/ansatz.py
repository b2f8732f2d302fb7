"""Trigonometric first-integral ansatz and its residual identities.

On H = 1/2 a candidate first integral is sought as

    F(x, y, phi) = sum_{k=-N..N} a_k(x, y) exp(i k phi),
    a_k = u_k + i v_k,   a_{-k} = conj(a_k),

so F is real and equals u_0 + 2 sum_{k=1..N} (u_k cos(k phi) - v_k sin(k phi)).
Conservation of F along the flow is the stationarity equation

    F_x cos(phi) + F_y sin(phi)
      + F_phi (Lambda_y cos(phi)/(2 Lambda) - Lambda_x sin(phi)/(2 Lambda)
               - Omega / sqrt(Lambda)) = 0,

and equating each exp(i k phi) coefficient to zero yields one complex relation
per harmonic k = 0 .. N+1 (with a_k = 0 for k > N).  The top harmonic forces
the normalization u_N = Lambda^(N/2), v_N = 0; the k = N harmonic splits into
a closed expression for the magnetic field Omega and a divergence constraint
on the leading coefficients.  In the rescaled variables f_k = u_k
Lambda^(-k/2), g_k = v_k Lambda^(-k/2) the k = N-1 harmonic becomes a pair of
flux-divergence conservation laws, which is what the Egorov certificate
checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as _dc_field

import numpy as np

from .fields import (AnalyticField, DomainError, Field, LAMBDA_FLOOR,
                     SamplingGrid, TorusGeometry, TrigField, rms_norm,
                     sup_norm, zero_field)
from .flow import MagneticSystem


# ---------------------------------------------------------------------------
# Residual reporting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EquationResidual:
    """Norms of one residual equation over the sampling set.

    Relative values divide pointwise by (1 + max magnitude of the equation's
    individual terms), so identically satisfied equations report 0 and
    large-field cases stay comparable.
    """

    label: str
    sup: float
    rms: float
    rel_sup: float
    rel_rms: float


@dataclass
class ResidualReport:
    entries: list
    periodic: bool = True
    flags: list = _dc_field(default_factory=list)

    def entry(self, label: str) -> EquationResidual:
        for e in self.entries:
            if e.label == label:
                return e
        raise KeyError(label)

    @property
    def max_sup(self) -> float:
        return max(e.sup for e in self.entries)

    @property
    def max_rel_sup(self) -> float:
        return max(e.rel_sup for e in self.entries)

    def summary(self) -> str:
        return "; ".join(f"{e.label}: sup={e.sup:.3e} rel={e.rel_sup:.3e}"
                         for e in self.entries)


def _residual_entry(label, residual, term_mags) -> EquationResidual:
    denom = 1.0 + np.max(np.stack(term_mags), axis=0)
    rel = np.abs(residual) / denom
    return EquationResidual(label, sup_norm(residual), rms_norm(residual),
                            sup_norm(rel), rms_norm(rel))


def _all_periodic(fields) -> bool:
    return all(f.periodic for f in fields)


# ---------------------------------------------------------------------------
# Ansatz containers
# ---------------------------------------------------------------------------


class Ansatz:
    """Degree-N ansatz: conformal factor plus coefficient fields u_k, v_k.

    The constructor takes the free lower coefficients u_0 .. u_{N-1} and
    v_1 .. v_{N-1}; v_0 is identically zero (a_0 is real) and the top pair is
    pinned to u_N = Lambda^(N/2), v_N = 0.  Pass ``normalize=False`` only to
    inject explicit top coefficients for testing.
    """

    def __init__(self, n: int, lam: Field, u_lower, v_lower=(),
                 geometry: TorusGeometry | None = None, *,
                 normalize: bool = True, u_top: Field | None = None,
                 v_top: Field | None = None, check_grid: SamplingGrid | None = None):
        if n < 1:
            raise ValueError("ansatz degree must be >= 1")
        self.n = int(n)
        self.geometry = geometry if geometry is not None else lam.geometry
        self.lam = lam
        u_lower = list(u_lower)
        v_lower = list(v_lower)
        if len(u_lower) != n:
            raise ValueError(f"expected {n} fields u_0..u_{n - 1}, got {len(u_lower)}")
        if len(v_lower) != max(n - 1, 0):
            raise ValueError(f"expected {n - 1} fields v_1..v_{n - 1}, got {len(v_lower)}")
        grid = check_grid if check_grid is not None else SamplingGrid(64, 64, self.geometry)
        lam_min = lam.min_on_grid(grid)
        if not lam_min > LAMBDA_FLOOR:
            raise DomainError(f"conformal factor must be positive on the grid "
                              f"(min = {lam_min:g})")
        zero = zero_field(self.geometry)
        if normalize:
            u_top = lam ** (n / 2.0)
            v_top = zero
        else:
            u_top = u_top if u_top is not None else lam ** (n / 2.0)
            v_top = v_top if v_top is not None else zero
        self.u = tuple(u_lower) + (u_top,)
        self.v = (zero,) + tuple(v_lower) + (v_top,)

    def fields(self):
        return (self.lam,) + self.u + self.v


@dataclass
class RescaledAnsatz:
    """Rescaled coefficient fields f_k = u_k Lambda^(-k/2), g_k = v_k Lambda^(-k/2)."""

    n: int
    f: tuple
    g: tuple
    lam: Field
    geometry: TorusGeometry

    def __post_init__(self):
        if len(self.f) != self.n or len(self.g) != self.n:
            raise ValueError(f"need {self.n} rescaled fields f_0..f_{self.n - 1} "
                             f"and g_0..g_{self.n - 1}")


def rescale(ansatz: Ansatz) -> RescaledAnsatz:
    """Exact pointwise transformation; derivatives propagate by the chain rule."""
    f = []
    g = []
    for k in range(ansatz.n):
        if k == 0:
            f.append(ansatz.u[0])
            g.append(ansatz.v[0])
        else:
            scale = ansatz.lam ** (-k / 2.0)
            f.append(ansatz.u[k] * scale)
            g.append(ansatz.v[k] * scale)
    return RescaledAnsatz(ansatz.n, tuple(f), tuple(g), ansatz.lam, ansatz.geometry)


def unrescale(rescaled: RescaledAnsatz, lam: Field | None = None,
              n: int | None = None) -> tuple:
    """Recover (u_0.., v_0..) coefficient fields from the rescaled variables."""
    lam = lam if lam is not None else rescaled.lam
    n = n if n is not None else rescaled.n
    u = []
    v = []
    for k in range(n):
        if k == 0:
            u.append(rescaled.f[0])
            v.append(rescaled.g[0])
        else:
            scale = lam ** (k / 2.0)
            u.append(rescaled.f[k] * scale)
            v.append(rescaled.g[k] * scale)
    return tuple(u), tuple(v)


# ---------------------------------------------------------------------------
# Evaluation of F
# ---------------------------------------------------------------------------


def eval_F(ansatz: Ansatz, x, y, phi):
    """Real value of the ansatz: u_0 + 2 sum_k (u_k cos(k phi) - v_k sin(k phi))."""
    phi = np.asarray(phi, dtype=float) if not isinstance(phi, (int, float)) else phi
    total = ansatz.u[0].eval(x, y)
    for k in range(1, ansatz.n + 1):
        ck = np.cos(k * phi)
        sk = np.sin(k * phi)
        total = total + 2.0 * (ansatz.u[k].eval(x, y) * ck - ansatz.v[k].eval(x, y) * sk)
    return total


def first_integral_observable(ansatz: Ansatz):
    """Observable callable obs(x, y, phi) for trajectory monitoring."""
    return lambda x, y, phi: eval_F(ansatz, x, y, phi)


# ---------------------------------------------------------------------------
# Stationarity residual
# ---------------------------------------------------------------------------


def default_phi_count(n: int) -> int:
    # Resolves harmonics up to N+1 (needs 2N+3 samples) with aliasing margin.
    return 4 * n + 4


def stationarity_residual_values(ansatz: Ansatz, omega: Field,
                                 grid: SamplingGrid, phis: np.ndarray):
    """Residual of the stationarity equation on grid x phi samples.

    Returns (residual, term_magnitude) arrays of shape (n_phi, nx, ny).
    """
    X, Y = grid.mesh_x, grid.mesh_y
    lam = np.asarray(ansatz.lam.eval(X, Y), dtype=float)
    lam_x = np.asarray(ansatz.lam.d_dx(X, Y), dtype=float)
    lam_y = np.asarray(ansatz.lam.d_dy(X, Y), dtype=float)
    om = np.asarray(omega.eval(X, Y), dtype=float)
    u = [np.asarray(f.eval(X, Y), dtype=float) for f in ansatz.u]
    v = [np.asarray(f.eval(X, Y), dtype=float) for f in ansatz.v]
    ux = [np.asarray(f.d_dx(X, Y), dtype=float) for f in ansatz.u]
    uy = [np.asarray(f.d_dy(X, Y), dtype=float) for f in ansatz.u]
    vx = [np.asarray(f.d_dx(X, Y), dtype=float) for f in ansatz.v]
    vy = [np.asarray(f.d_dy(X, Y), dtype=float) for f in ansatz.v]

    coef = lam_y / (2.0 * lam)
    coef_x = lam_x / (2.0 * lam)
    om_term = om / np.sqrt(lam)

    res = np.empty((len(phis),) + X.shape)
    mags = np.empty_like(res)
    for i, phi in enumerate(phis):
        c, s = math.cos(phi), math.sin(phi)
        f_x = ux[0].copy()
        f_y = uy[0].copy()
        f_phi = np.zeros_like(f_x)
        for k in range(1, ansatz.n + 1):
            ck, sk = math.cos(k * phi), math.sin(k * phi)
            f_x += 2.0 * (ux[k] * ck - vx[k] * sk)
            f_y += 2.0 * (uy[k] * ck - vy[k] * sk)
            f_phi += 2.0 * (-k * u[k] * sk - k * v[k] * ck)
        t1 = f_x * c
        t2 = f_y * s
        t3 = f_phi * (coef * c - coef_x * s - om_term)
        res[i] = t1 + t2 + t3
        mags[i] = np.maximum(np.abs(t1), np.maximum(np.abs(t2), np.abs(t3)))
    return res, mags


def residual_stationarity(ansatz: Ansatz, omega: Field,
                          grid: SamplingGrid | None = None,
                          n_phi: int | None = None) -> ResidualReport:
    """Norms of the stationarity residual over grid x equispaced angles."""
    grid = grid if grid is not None else SamplingGrid(64, 64, ansatz.geometry)
    n_phi = n_phi if n_phi is not None else default_phi_count(ansatz.n)
    phis = 2.0 * np.pi * np.arange(n_phi) / n_phi
    res, mags = stationarity_residual_values(ansatz, omega, grid, phis)
    entry = _residual_entry("stationarity", res, [mags])
    return ResidualReport([entry],
                          periodic=_all_periodic(ansatz.fields() + (omega,)))


# ---------------------------------------------------------------------------
# Harmonic residuals
# ---------------------------------------------------------------------------


def harmonic_residual_values(ansatz: Ansatz, omega: Field, k: int,
                             grid: SamplingGrid):
    """Complex residual of harmonic k on the grid, plus per-term magnitudes."""
    if k < 0 or k > ansatz.n + 1:
        raise ValueError(f"harmonic index k must lie in 0..{ansatz.n + 1}, got {k}")
    X, Y = grid.mesh_x, grid.mesh_y
    lam = np.asarray(ansatz.lam.eval(X, Y), dtype=float)
    lam_x = np.asarray(ansatz.lam.d_dx(X, Y), dtype=float)
    lam_y = np.asarray(ansatz.lam.d_dy(X, Y), dtype=float)

    def coeff(j):
        # u_j, v_j and first derivatives, with a_{-j} = conj(a_j) and a_j = 0 above N
        if abs(j) > ansatz.n:
            zero = np.zeros_like(lam)
            return zero, zero, zero, zero, zero, zero
        sign = 1.0 if j >= 0 else -1.0
        uf, vf = ansatz.u[abs(j)], ansatz.v[abs(j)]
        a = np.asarray(uf.eval(X, Y), dtype=float)
        b = sign * np.asarray(vf.eval(X, Y), dtype=float)
        a_x = np.asarray(uf.d_dx(X, Y), dtype=float)
        b_x = sign * np.asarray(vf.d_dx(X, Y), dtype=float)
        a_y = np.asarray(uf.d_dy(X, Y), dtype=float)
        b_y = sign * np.asarray(vf.d_dy(X, Y), dtype=float)
        return a, b, a_x, b_x, a_y, b_y

    um, vm, umx, vmx, umy, vmy = coeff(k - 1)
    up, vp, upx, vpx, upy, vpy = coeff(k + 1)
    akm = um + 1j * vm
    akp = up + 1j * vp
    dakm_x = umx + 1j * vmx
    dakp_x = upx + 1j * vpx
    dakm_y = umy + 1j * vmy
    dakp_y = upy + 1j * vpy

    t1 = (lam_y / (2.0 * lam)) * (1j * (k - 1) * akm + 1j * (k + 1) * akp) / 2.0
    t2 = -(lam_x / (2.0 * lam)) * (1j * (k - 1) * akm - 1j * (k + 1) * akp) / (2.0j)
    t3 = (dakm_x + dakp_x) / 2.0
    t4 = (dakm_y - dakp_y) / (2.0j)
    if k == 0 or k > ansatz.n:
        t5 = np.zeros_like(akm)
    else:
        om = np.asarray(omega.eval(X, Y), dtype=float)
        ak = (np.asarray(ansatz.u[k].eval(X, Y), dtype=float)
              + 1j * np.asarray(ansatz.v[k].eval(X, Y), dtype=float))
        t5 = -1j * k * om * ak / np.sqrt(lam)
    residual = t1 + t2 + t3 + t4 + t5
    mags = np.max(np.stack([np.abs(t1), np.abs(t2), np.abs(t3),
                            np.abs(t4), np.abs(t5)]), axis=0)
    return residual, mags


def residual_harmonic(ansatz: Ansatz, omega: Field, k: int,
                      grid: SamplingGrid | None = None) -> ResidualReport:
    """Real and imaginary norms of the harmonic-k relation."""
    grid = grid if grid is not None else SamplingGrid(64, 64, ansatz.geometry)
    res, mags = harmonic_residual_values(ansatz, omega, k, grid)
    entries = [_residual_entry(f"harmonic_{k}_real", res.real, [mags]),
               _residual_entry(f"harmonic_{k}_imag", res.imag, [mags])]
    return ResidualReport(entries,
                          periodic=_all_periodic(ansatz.fields() + (omega,)))


# ---------------------------------------------------------------------------
# Magnetic field from the ansatz
# ---------------------------------------------------------------------------


def omega_raw(ansatz: Ansatz) -> AnalyticField:
    """Magnetic field from the unrescaled leading coefficients:

        Omega = [(N-1)(Lambda_y u_{N-1} - Lambda_x v_{N-1})
                 + 2 Lambda ((v_{N-1})_x - (u_{N-1})_y)] / (4 N Lambda^((N+1)/2))

    The result is an evaluation-only field (its own derivatives would need
    second derivatives of the inputs, which the field contract excludes).
    """
    n = ansatz.n
    lam = ansatz.lam
    u_top = ansatz.u[n - 1]
    v_top = ansatz.v[n - 1]

    def value(x, y):
        lam_v = lam.eval(x, y)
        if not np.all(np.asarray(lam_v) > LAMBDA_FLOOR):
            raise DomainError("conformal factor at or below the positivity floor")
        num = ((n - 1) * (lam.d_dy(x, y) * u_top.eval(x, y)
                          - lam.d_dx(x, y) * v_top.eval(x, y))
               + 2.0 * lam_v * (v_top.d_dx(x, y) - u_top.d_dy(x, y)))
        return num / (4.0 * n * lam_v ** ((n + 1) / 2.0))

    return AnalyticField(value, geometry=ansatz.geometry,
                         periodic=_all_periodic((lam, u_top, v_top)),
                         label="omega_raw")


def omega_rescaled(rescaled: RescaledAnsatz, n: int | None = None) -> AnalyticField:
    """Magnetic field from the rescaled leading coefficients:
    Omega = ((g_{N-1})_x - (f_{N-1})_y) / (2 N)."""
    n = n if n is not None else rescaled.n
    f_top = rescaled.f[n - 1]
    g_top = rescaled.g[n - 1]

    def value(x, y):
        return (g_top.d_dx(x, y) - f_top.d_dy(x, y)) / (2.0 * n)

    return AnalyticField(value, geometry=rescaled.geometry,
                         periodic=_all_periodic((f_top, g_top)),
                         label="omega_rescaled")


# ---------------------------------------------------------------------------
# Constraint and conservation-law residuals
# ---------------------------------------------------------------------------


def constraint_residual(obj, grid: SamplingGrid | None = None) -> ResidualReport:
    """Residuals of the leading-coefficient divergence constraint, in both the
    unrescaled form 2 Lambda ((u_{N-1})_x + (v_{N-1})_y) = (N-1)(v_{N-1}
    Lambda_y + u_{N-1} Lambda_x) and the rescaled form (f_{N-1})_x +
    (g_{N-1})_y = 0.  The two agree pointwise up to the factor
    2 Lambda^((N+1)/2)."""
    if isinstance(obj, Ansatz):
        rescaled = rescale(obj)
        n = obj.n
        lam = obj.lam
        u_top, v_top = obj.u[n - 1], obj.v[n - 1]
    elif isinstance(obj, RescaledAnsatz):
        rescaled = obj
        n = obj.n
        lam = obj.lam
        u_all, v_all = unrescale(obj)
        u_top, v_top = u_all[n - 1], v_all[n - 1]
    else:
        raise TypeError("expected an Ansatz or RescaledAnsatz")
    grid = grid if grid is not None else SamplingGrid(64, 64, rescaled.geometry)
    X, Y = grid.mesh_x, grid.mesh_y

    lam_v = np.asarray(lam.eval(X, Y), dtype=float)
    lam_x = np.asarray(lam.d_dx(X, Y), dtype=float)
    lam_y = np.asarray(lam.d_dy(X, Y), dtype=float)
    t_lhs = 2.0 * lam_v * (np.asarray(u_top.d_dx(X, Y), dtype=float)
                           + np.asarray(v_top.d_dy(X, Y), dtype=float))
    t_rhs = (n - 1) * (np.asarray(v_top.eval(X, Y), dtype=float) * lam_y
                       + np.asarray(u_top.eval(X, Y), dtype=float) * lam_x)
    res_unscaled = t_lhs - t_rhs

    f_top = rescaled.f[n - 1]
    g_top = rescaled.g[n - 1]
    tf = np.asarray(f_top.d_dx(X, Y), dtype=float)
    tg = np.asarray(g_top.d_dy(X, Y), dtype=float)
    res_rescaled = tf + tg

    entries = [
        _residual_entry("divergence_unscaled", res_unscaled,
                        [np.abs(t_lhs), np.abs(t_rhs)]),
        _residual_entry("divergence_rescaled", res_rescaled,
                        [np.abs(tf), np.abs(tg)]),
    ]
    return ResidualReport(entries,
                          periodic=_all_periodic((lam, u_top, v_top, f_top, g_top)))


N1_DEGENERATE_FLAG = "N=1 degenerate"


def _second_block(rescaled: RescaledAnsatz, lam: Field, n: int):
    """f_{N-2}, g_{N-2}; for N = 1 these are the conjugation-forced values
    f_{-1} = u_1 Lambda^(1/2) = Lambda and g_{-1} = -v_1 Lambda^(1/2) = 0
    under the top normalization."""
    if n >= 2:
        return rescaled.f[n - 2], rescaled.g[n - 2], False
    return lam, zero_field(lam.geometry), True


def conservation_flux_fields(rescaled: RescaledAnsatz, lam: Field | None = None,
                             n: int | None = None):
    """The density R and the two flux fields of the conservation-law pair

        R_x + [ (N-1)/2 (g^2 - f^2) - N^2 Lambda + N f_{N-2} ]_y = 0
        R_y + [ (N-1)/2 (f^2 - g^2) - N^2 Lambda - N f_{N-2} ]_x = 0

    with R = (N-1) f g - N g_{N-2}, f = f_{N-1}, g = g_{N-1}.
    Returns (R, flux_1, flux_2, degenerate_flag)."""
    lam = lam if lam is not None else rescaled.lam
    n = n if n is not None else rescaled.n
    f = rescaled.f[n - 1]
    g = rescaled.g[n - 1]
    fm2, gm2, degenerate = _second_block(rescaled, lam, n)
    r_field = (n - 1) * (f * g) - n * gm2
    half = (n - 1) / 2.0
    flux1 = half * (g * g - f * f) - float(n * n) * lam + n * fm2
    flux2 = half * (f * f - g * g) - float(n * n) * lam - n * fm2
    return r_field, flux1, flux2, degenerate


def conservation_residuals(rescaled: RescaledAnsatz, lam: Field | None = None,
                           n: int | None = None,
                           grid: SamplingGrid | None = None) -> ResidualReport:
    """Residual norms of the two conservation laws.  All outer derivatives are
    expanded by the product/chain rule onto first derivatives of the inputs."""
    lam = lam if lam is not None else rescaled.lam
    n = n if n is not None else rescaled.n
    grid = grid if grid is not None else SamplingGrid(64, 64, rescaled.geometry)
    X, Y = grid.mesh_x, grid.mesh_y
    r_field, flux1, flux2, degenerate = conservation_flux_fields(rescaled, lam, n)

    r_x = np.asarray(r_field.d_dx(X, Y), dtype=float)
    r_y = np.asarray(r_field.d_dy(X, Y), dtype=float)
    f1_y = np.asarray(flux1.d_dy(X, Y), dtype=float)
    f2_x = np.asarray(flux2.d_dx(X, Y), dtype=float)

    entries = [
        _residual_entry("conservation_1", r_x + f1_y, [np.abs(r_x), np.abs(f1_y)]),
        _residual_entry("conservation_2", r_y + f2_x, [np.abs(r_y), np.abs(f2_x)]),
    ]
    flags = [N1_DEGENERATE_FLAG] if degenerate else []
    involved = list(rescaled.f) + list(rescaled.g) + [lam]
    return ResidualReport(entries, periodic=_all_periodic(involved), flags=flags)


# ---------------------------------------------------------------------------
# Exact degree-1 family
# ---------------------------------------------------------------------------


def _assert_y_only(field: Field, name: str, geometry: TorusGeometry):
    grid = SamplingGrid(16, 16, geometry)
    vals = np.abs(np.asarray(field.d_dx(grid.mesh_x, grid.mesh_y)))
    scale = 1.0 + np.max(np.abs(np.asarray(field.on_grid(grid))))
    if np.max(vals) > 1e-12 * scale:
        raise ValueError(f"{name} must depend on y only")


def build_linear_family(lambda_profile: Field, a_profile: Field,
                        geometry: TorusGeometry | None = None):
    """Exact degree-1 configuration from profiles Lambda(y) > 0 and A(y):

        u_0 = 2 A(y),  u_1 = Lambda^(1/2),  v_1 = 0,  Omega = -A'(y).

    Every harmonic relation then holds identically and
    F = 2 sqrt(Lambda) cos(phi) + 2 A(y) is conserved by the flow.
    Returns (Ansatz with N = 1, MagneticSystem).
    """
    geometry = geometry if geometry is not None else lambda_profile.geometry
    _assert_y_only(lambda_profile, "lambda profile", geometry)
    _assert_y_only(a_profile, "A profile", geometry)
    ansatz = Ansatz(1, lambda_profile, [2.0 * a_profile], [], geometry)
    if isinstance(a_profile, TrigField):
        omega = -1.0 * a_profile.dy_field()
    else:
        omega = AnalyticField(
            lambda x, y, a=a_profile: -a.d_dy(x, y),
            lambda x, y: 0.0 * (x + y),   # Omega depends on y only
            None,
            geometry=geometry, periodic=a_profile.periodic, label="minus_A_prime")
    system = MagneticSystem(lambda_profile, omega, geometry)
    return ansatz, system
