"""Smooth scalar fields on a flat 2-torus with exact point values and exact
first partial derivatives.

Two backends:

* trigonometric polynomials -- a finite table of complex Fourier coefficients
  with conjugate symmetry c[-m,-n] = conj(c[m,n]), so evaluation is real and
  differentiation is exact (multiply mode (m, n) by i*2*pi*m/period_x, and
  analogously in y);
* analytic closed forms -- a value rule plus closed-form first-derivative
  rules, admitting non-periodic profiles such as a linear ramp in y.

Fields are immutable after construction; evaluation is pure and accepts
scalars or same-shaped numpy arrays.  Sums, differences, products and real
powers of fields carry exact first derivatives via the product/chain rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

#: Positivity floor for conformal factors; evaluation below it is a domain error.
LAMBDA_FLOOR = 1e-8


class FieldError(ValueError):
    """Invalid field construction or field specification."""


class DomainError(ValueError):
    """Evaluation left the admissible domain (e.g. conformal factor <= 0)."""


class DerivativeUnavailable(FieldError):
    """The backend holds no exact rule for the requested derivative."""


@dataclass(frozen=True)
class TorusGeometry:
    """Fundamental domain [0, period_x) x [0, period_y)."""

    period_x: float = TWO_PI
    period_y: float = TWO_PI

    def __post_init__(self):
        if not (self.period_x > 0.0 and self.period_y > 0.0):
            raise FieldError("torus periods must be strictly positive")

    def wavenumbers(self, m: int, n: int) -> tuple[float, float]:
        return TWO_PI * m / self.period_x, TWO_PI * n / self.period_y


class SamplingGrid:
    """Uniform nodes over one fundamental domain (endpoints excluded)."""

    def __init__(self, nx: int = 64, ny: int = 64, geometry: TorusGeometry | None = None):
        if nx < 4 or ny < 4:
            raise FieldError("sampling grid needs nx, ny >= 4")
        self.nx = int(nx)
        self.ny = int(ny)
        self.geometry = geometry if geometry is not None else TorusGeometry()
        self.xs = self.geometry.period_x * np.arange(self.nx) / self.nx
        self.ys = self.geometry.period_y * np.arange(self.ny) / self.ny
        self.mesh_x, self.mesh_y = np.meshgrid(self.xs, self.ys, indexing="ij")

    def __repr__(self):
        return f"SamplingGrid({self.nx}x{self.ny})"


def sup_norm(values) -> float:
    return float(np.max(np.abs(values)))


def rms_norm(values) -> float:
    v = np.asarray(values, dtype=float)
    return float(np.sqrt(np.mean(v * v)))


# ---------------------------------------------------------------------------
# Field base class and algebra
# ---------------------------------------------------------------------------


class Field:
    """Base class: value and exact first derivatives at (x, y)."""

    geometry: TorusGeometry
    periodic: bool = True

    def eval(self, x, y):
        raise NotImplementedError

    def d_dx(self, x, y):
        raise NotImplementedError

    def d_dy(self, x, y):
        raise NotImplementedError

    def __call__(self, x, y):
        return self.eval(x, y)

    def on_grid(self, grid: SamplingGrid):
        return self.eval(grid.mesh_x, grid.mesh_y)

    def min_on_grid(self, grid: SamplingGrid) -> float:
        return float(np.min(self.on_grid(grid)))

    # -- algebra: results carry exact first derivatives --------------------

    def _check_geometry(self, other: "Field"):
        if (other.geometry.period_x != self.geometry.period_x
                or other.geometry.period_y != self.geometry.period_y):
            raise FieldError("cannot combine fields on different tori")

    def __add__(self, other):
        if isinstance(other, (int, float)):
            c = float(other)
            return AnalyticField(
                lambda x, y, s=self: s.eval(x, y) + c,
                lambda x, y, s=self: s.d_dx(x, y),
                lambda x, y, s=self: s.d_dy(x, y),
                geometry=self.geometry, periodic=self.periodic)
        if not isinstance(other, Field):
            return NotImplemented
        self._check_geometry(other)
        return AnalyticField(
            lambda x, y, a=self, b=other: a.eval(x, y) + b.eval(x, y),
            lambda x, y, a=self, b=other: a.d_dx(x, y) + b.d_dx(x, y),
            lambda x, y, a=self, b=other: a.d_dy(x, y) + b.d_dy(x, y),
            geometry=self.geometry, periodic=self.periodic and other.periodic)

    __radd__ = __add__

    def __neg__(self):
        return self * (-1.0)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Field) else -float(other))

    def __rsub__(self, other):
        return (-self) + float(other)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            c = float(other)
            return AnalyticField(
                lambda x, y, s=self: c * s.eval(x, y),
                lambda x, y, s=self: c * s.d_dx(x, y),
                lambda x, y, s=self: c * s.d_dy(x, y),
                geometry=self.geometry, periodic=self.periodic)
        if not isinstance(other, Field):
            return NotImplemented
        self._check_geometry(other)
        return AnalyticField(
            lambda x, y, a=self, b=other: a.eval(x, y) * b.eval(x, y),
            lambda x, y, a=self, b=other: a.d_dx(x, y) * b.eval(x, y) + a.eval(x, y) * b.d_dx(x, y),
            lambda x, y, a=self, b=other: a.d_dy(x, y) * b.eval(x, y) + a.eval(x, y) * b.d_dy(x, y),
            geometry=self.geometry, periodic=self.periodic and other.periodic)

    __rmul__ = __mul__

    def __pow__(self, p):
        p = float(p)
        if p == 1.0:
            return self
        return AnalyticField(
            lambda x, y, s=self: s.eval(x, y) ** p,
            lambda x, y, s=self: p * s.eval(x, y) ** (p - 1.0) * s.d_dx(x, y),
            lambda x, y, s=self: p * s.eval(x, y) ** (p - 1.0) * s.d_dy(x, y),
            geometry=self.geometry, periodic=self.periodic)


class TrigField(Field):
    """Real trigonometric polynomial stored as a conjugate-symmetric table.

    Internally keeps the constant term plus one coefficient per canonical
    mode pair (m, n) with m > 0 or (m == 0 and n > 0); the mirrored modes
    are implied by conjugation, which makes real-valued evaluation
    structural rather than a runtime check.
    """

    periodic = True

    def __init__(self, table: dict, geometry: TorusGeometry | None = None):
        self.geometry = geometry if geometry is not None else TorusGeometry()
        c0, half = _canonicalize_table(table)
        self._c0 = c0
        items = sorted(half.items())
        self._modes = tuple(mn for mn, _ in items)
        self._cre = np.array([c.real for _, c in items], dtype=float)
        self._cim = np.array([c.imag for _, c in items], dtype=float)
        kx = np.empty(len(items))
        ky = np.empty(len(items))
        for i, (m, n) in enumerate(self._modes):
            kx[i], ky[i] = self.geometry.wavenumbers(m, n)
        self._kx = kx
        self._ky = ky
        self._dx = None
        self._dy = None

    # -- evaluation ---------------------------------------------------------

    def eval(self, x, y):
        if self._kx.size == 0:
            if isinstance(x, (int, float)) and isinstance(y, (int, float)):
                return self._c0
            return np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, self._c0)
        if isinstance(x, (int, float)) and isinstance(y, (int, float)):
            theta = self._kx * x + self._ky * y
            return self._c0 + 2.0 * (self._cre @ np.cos(theta) - self._cim @ np.sin(theta))
        xa = np.asarray(x, dtype=float)
        ya = np.asarray(y, dtype=float)
        xa, ya = np.broadcast_arrays(xa, ya)
        theta = np.multiply.outer(self._kx, xa) + np.multiply.outer(self._ky, ya)
        out = np.tensordot(self._cre, np.cos(theta), axes=(0, 0))
        out -= np.tensordot(self._cim, np.sin(theta), axes=(0, 0))
        return self._c0 + 2.0 * out

    def _eval_complex(self, x, y):
        # Full two-sided sum; imaginary part should vanish to roundoff.
        total = complex(self._c0)
        for (m, n), cre, cim in zip(self._modes, self._cre, self._cim):
            kx, ky = self.geometry.wavenumbers(m, n)
            c = complex(cre, cim)
            z = np.exp(1j * (kx * x + ky * y))
            total += c * z + np.conj(c) * np.conj(z)
        return total

    # -- exact spectral differentiation --------------------------------------

    def dx_field(self) -> "TrigField":
        if self._dx is None:
            table = {mn: complex(cre, cim) * 1j * kx
                     for mn, cre, cim, kx in zip(self._modes, self._cre, self._cim, self._kx)}
            self._dx = TrigField(table, self.geometry)
        return self._dx

    def dy_field(self) -> "TrigField":
        if self._dy is None:
            table = {mn: complex(cre, cim) * 1j * ky
                     for mn, cre, cim, ky in zip(self._modes, self._cre, self._cim, self._ky)}
            self._dy = TrigField(table, self.geometry)
        return self._dy

    def d_dx(self, x, y):
        return self.dx_field().eval(x, y)

    def d_dy(self, x, y):
        return self.dy_field().eval(x, y)

    # -- table access --------------------------------------------------------

    def coefficients(self) -> dict:
        """Full two-sided coefficient table {(m, n): complex}."""
        table = {}
        if self._c0 != 0.0 or not self._modes:
            table[(0, 0)] = complex(self._c0, 0.0)
        for (m, n), cre, cim in zip(self._modes, self._cre, self._cim):
            table[(m, n)] = complex(cre, cim)
            table[(-m, -n)] = complex(cre, -cim)
        return table

    # -- trig-exact algebra ---------------------------------------------------

    def __add__(self, other):
        if isinstance(other, (int, float)):
            table = self.coefficients()
            table[(0, 0)] = table.get((0, 0), 0.0) + float(other)
            return TrigField(table, self.geometry)
        if isinstance(other, TrigField):
            self._check_geometry(other)
            table = self.coefficients()
            for mn, c in other.coefficients().items():
                table[mn] = table.get(mn, 0.0) + c
            return TrigField(table, self.geometry)
        return super().__add__(other)

    __radd__ = __add__

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            table = {mn: c * float(other) for mn, c in self.coefficients().items()}
            return TrigField(table, self.geometry)
        if isinstance(other, TrigField):
            self._check_geometry(other)
            table = {}
            for mn1, c1 in self.coefficients().items():
                for mn2, c2 in other.coefficients().items():
                    mn = (mn1[0] + mn2[0], mn1[1] + mn2[1])
                    table[mn] = table.get(mn, 0.0) + c1 * c2
            return TrigField(table, self.geometry)
        return super().__mul__(other)

    __rmul__ = __mul__

    def __repr__(self):
        return f"TrigField({1 + 2 * len(self._modes)} modes)"


def _canonical(m: int, n: int) -> bool:
    return m > 0 or (m == 0 and n > 0)


def _canonicalize_table(table: dict):
    """Validate conjugate symmetry and fold onto the canonical half-spectrum."""
    clean = {}
    for key, val in table.items():
        m, n = int(key[0]), int(key[1])
        clean[(m, n)] = complex(val)

    c00 = clean.pop((0, 0), 0.0)
    if abs(c00.imag) > 1e-13 * (1.0 + abs(c00.real)):
        raise FieldError("mode (0, 0) must be real (it is its own conjugate)")

    half = {}
    seen = set()
    for (m, n), c in clean.items():
        if (m, n) in seen:
            continue
        mirror = (-m, -n)
        if mirror in clean:
            cm = clean[mirror]
            if abs(cm - c.conjugate()) > 1e-13 * (1.0 + abs(c)):
                raise FieldError(f"modes {(m, n)} and {mirror} are not conjugate")
            seen.add(mirror)
        seen.add((m, n))
        if _canonical(m, n):
            half[(m, n)] = c
        else:
            half[mirror] = c.conjugate()
    # Drop exact zeros to keep tables minimal.
    half = {mn: c for mn, c in half.items() if c != 0.0}
    return c00.real, half


class AnalyticField(Field):
    """Closed-form field: a value rule plus optional first-derivative rules."""

    def __init__(self, value_fn, dx_fn=None, dy_fn=None, *,
                 geometry: TorusGeometry | None = None, periodic: bool = True,
                 label: str = ""):
        self.geometry = geometry if geometry is not None else TorusGeometry()
        self._value = value_fn
        self._dx = dx_fn
        self._dy = dy_fn
        self.periodic = periodic
        self.label = label

    def eval(self, x, y):
        return self._value(x, y)

    def d_dx(self, x, y):
        if self._dx is None:
            raise DerivativeUnavailable(f"no d/dx rule for field {self.label!r}")
        return self._dx(x, y)

    def d_dy(self, x, y):
        if self._dy is None:
            raise DerivativeUnavailable(f"no d/dy rule for field {self.label!r}")
        return self._dy(x, y)

    def __repr__(self):
        return f"AnalyticField({self.label or 'derived'})"


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------


def make_trig_field(coeff_table: dict, geometry: TorusGeometry | None = None) -> TrigField:
    """Build a real trig-polynomial field from {(m, n): complex coefficient}.

    Missing conjugate partners are completed automatically; an inconsistent
    pair (both present but not conjugate) raises FieldError.
    """
    return TrigField(coeff_table, geometry)


def constant_field(value: float, geometry: TorusGeometry | None = None) -> TrigField:
    return TrigField({(0, 0): float(value)}, geometry)


def zero_field(geometry: TorusGeometry | None = None) -> TrigField:
    return TrigField({}, geometry)


def random_trig_field(rng, geometry: TorusGeometry | None = None, *,
                      n_modes: int = 5, max_mode: int = 3,
                      amplitude: float = 1.0, offset: float = 0.0) -> TrigField:
    """Random real trig polynomial with n_modes canonical modes, |m|,|n| <= max_mode."""
    geometry = geometry if geometry is not None else TorusGeometry()
    pool = [(m, n) for m in range(-max_mode, max_mode + 1)
            for n in range(-max_mode, max_mode + 1) if _canonical(m, n)]
    idx = rng.choice(len(pool), size=min(n_modes, len(pool)), replace=False)
    table = {(0, 0): offset}
    for i in np.sort(idx):
        m, n = pool[int(i)]
        table[(m, n)] = amplitude * complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
    return TrigField(table, geometry)


# ---------------------------------------------------------------------------
# Analytic presets (referenced by name in scenario files)
# ---------------------------------------------------------------------------

_PRESETS = {}


def register_analytic_preset(name: str, factory):
    """factory(params: dict, geometry) -> Field"""
    _PRESETS[name] = factory


def analytic_preset(name: str, params: dict | None = None,
                    geometry: TorusGeometry | None = None) -> Field:
    if name not in _PRESETS:
        raise FieldError(f"unknown analytic preset {name!r}")
    return _PRESETS[name](params or {}, geometry if geometry is not None else TorusGeometry())


def _affine_axis(axis: str):
    def factory(params, geometry):
        offset = float(params.get("offset", 0.0))
        slope = float(params.get("slope", 0.0))
        if axis == "y":
            value = lambda x, y: offset + slope * y + 0.0 * x
            dx = lambda x, y: 0.0 * (x + y)
            dy = lambda x, y: slope + 0.0 * (x + y)
        else:
            value = lambda x, y: offset + slope * x + 0.0 * y
            dx = lambda x, y: slope + 0.0 * (x + y)
            dy = lambda x, y: 0.0 * (x + y)
        return AnalyticField(value, dx, dy, geometry=geometry,
                             periodic=(slope == 0.0), label=f"affine_{axis}")
    return factory


register_analytic_preset("affine_x", _affine_axis("x"))
register_analytic_preset("affine_y", _affine_axis("y"))


# ---------------------------------------------------------------------------
# JSON field specifications
# ---------------------------------------------------------------------------


def trig_records(field: TrigField) -> list:
    """Serialize the full coefficient table as [{m, n, re, im}, ...]."""
    recs = []
    for (m, n), c in sorted(field.coefficients().items()):
        recs.append({"m": m, "n": n, "re": c.real, "im": c.imag})
    return recs


def field_from_spec(spec, geometry: TorusGeometry | None = None, *,
                    seed_override: int | None = None) -> Field:
    """Build a field from a JSON-style specification.

    Supported forms::

        {"type": "constant", "value": 2.0}
        {"type": "trig", "coeffs": [{"m": 0, "n": 1, "re": 0.15, "im": 0.0}, ...]}
        {"type": "analytic", "name": "affine_y", "params": {"slope": -2.0}}
        {"type": "random_trig", "seed": 1, "modes": 5, "max_mode": 3,
         "amplitude": 0.3, "offset": 0.0}

    A bare number is shorthand for a constant field.
    """
    geometry = geometry if geometry is not None else TorusGeometry()
    if isinstance(spec, (int, float)):
        return constant_field(float(spec), geometry)
    if not isinstance(spec, dict):
        raise FieldError(f"field spec must be a number or an object, got {type(spec).__name__}")
    kind = spec.get("type")
    if kind == "constant":
        return constant_field(float(spec["value"]), geometry)
    if kind == "trig":
        table = {}
        for rec in spec.get("coeffs", []):
            key = (int(rec["m"]), int(rec["n"]))
            if key in table:
                raise FieldError(f"duplicate mode {key} in trig spec")
            table[key] = complex(float(rec.get("re", 0.0)), float(rec.get("im", 0.0)))
        return TrigField(table, geometry)
    if kind == "analytic":
        return analytic_preset(spec["name"], spec.get("params"), geometry)
    if kind == "random_trig":
        seed = seed_override if seed_override is not None else spec.get("seed")
        if seed is None:
            raise FieldError("random_trig spec needs a seed")
        rng = np.random.default_rng(int(seed))
        return random_trig_field(
            rng, geometry,
            n_modes=int(spec.get("modes", 5)),
            max_mode=int(spec.get("max_mode", 3)),
            amplitude=float(spec.get("amplitude", 1.0)),
            offset=float(spec.get("offset", 0.0)))
    raise FieldError(f"unknown field spec type {kind!r}")
