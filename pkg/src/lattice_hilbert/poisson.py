"""Half-space extension of torus signals and its deterministic identity layer.

A signal f on Z_N extends to u(x, y) = (e^{-y A} f)(x), A = sqrt(-Laplacian),
on the semidiscrete upper half space.  Mode k decays at rate
a_k = 2 |sin(pi k / N)|, so u solves d2u/dy2 + Lap_x u = 0 exactly and every
derivative is available analytically in the spectral sum; x-derivatives are
exact site differences.  This module carries the weighted upper-half-space
pairings that reproduce the l2 inner product (Littlewood-Paley) and the
centered Hilbert pairing (through a fixed 4x4 rotation of the gradient),
plus the Cauchy-Riemann residual report.

The one-sided Cauchy-Riemann orientation is fixed by the defining relation
(one-sided transform) o A = (one-sided difference) together with
h+ h- = -Id, which force

    d/dy (h_pm f) = - d_pm f      and      d_mp (h_pm f) = d/dy f.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .signals import LatticeSignal, require_mean_zero
from .transforms import H_CENTERED, H_MINUS, H_PLUS, apply_spectral_torus

#: Orthogonal matrix pairing the gradient of f with the gradient of g in the
#: weak form of the centered transform; squares to minus the identity.
ROTATION_MATRIX = np.array([
    [0, 0, 0, -1],
    [0, 0, 1, 0],
    [0, -1, 0, 0],
    [1, 0, 0, 0],
], dtype=int)


@dataclass(frozen=True)
class HarmonicExtension:
    """Spectral form of the half-space extension of a torus signal."""

    base: LatticeSignal
    coeffs: np.ndarray   # DFT of the boundary values
    decay: np.ndarray    # per-mode decay rates, 2|sin(pi k/N)|

    @property
    def n(self) -> int:
        return self.base.n

    # All evaluators accept scalar or array y >= 0.

    def _site_phase(self, x: int) -> np.ndarray:
        k = np.arange(self.n)
        return np.exp(2j * np.pi * k * (x % self.n) / self.n)

    def _eval(self, x: int, y, mode_factor) -> float | np.ndarray:
        y = np.asarray(y, dtype=float)
        if np.any(y < 0):
            raise ValueError("height y must be >= 0")
        damp = np.exp(-np.multiply.outer(y, self.decay))
        acc = damp * (mode_factor * self.coeffs * self._site_phase(x))
        out = acc.sum(axis=-1).real / self.n
        return float(out) if out.ndim == 0 else out

    def value(self, x: int, y) -> float | np.ndarray:
        return self._eval(x, y, 1.0)

    def dy(self, x: int, y) -> float | np.ndarray:
        return self._eval(x, y, -self.decay)

    def dy2(self, x: int, y) -> float | np.ndarray:
        return self._eval(x, y, self.decay ** 2)

    def dx_plus(self, x: int, y) -> float | np.ndarray:
        return self.value(x + 1, y) - self.value(x, y)

    def dx_minus(self, x: int, y) -> float | np.ndarray:
        return self.value(x, y) - self.value(x - 1, y)

    def dx_centered(self, x: int, y) -> float | np.ndarray:
        return 0.5 * (self.dx_plus(x, y) + self.dx_minus(x, y))

    def lap_x(self, x: int, y) -> float | np.ndarray:
        return self.dx_plus(x, y) - self.dx_minus(x, y)

    # Whole-boundary evaluation at one height; the workhorse for pairings.

    def sites_at(self, y: float, mode_factor=1.0) -> np.ndarray:
        return np.fft.ifft(mode_factor * self.coeffs
                           * np.exp(-self.decay * y)).real

    def gradient_sites(self, y: float) -> np.ndarray:
        """Rows (dy, dx+, dy, dx-) sampled at every site of the torus."""
        vals = self.sites_at(y)
        dy = self.sites_at(y, -self.decay)
        dxp = np.roll(vals, -1) - vals
        dxm = vals - np.roll(vals, 1)
        return np.stack([dy, dxp, dy, dxm])

    def gradient_vector(self, x: int, y: float) -> np.ndarray:
        """The 4-vector (dy, dx+, dy, dx-) at one point (dy repeats)."""
        return np.array([self.dy(x, y), self.dx_plus(x, y),
                         self.dy(x, y), self.dx_minus(x, y)])


def extend(f: LatticeSignal) -> HarmonicExtension:
    """Half-space extension of a torus signal (window signals must be
    embedded into a torus first, see embed_window_in_torus)."""
    if not f.is_torus:
        raise ValueError("extend expects a torus signal")
    n = f.n
    coeffs = np.fft.fft(f.values)
    decay = 2.0 * np.abs(np.sin(np.pi * np.arange(n) / n))
    return HarmonicExtension(f, coeffs, decay)


def embed_window_in_torus(f: LatticeSignal, factor: int = 4) -> LatticeSignal:
    """Place a window signal on a torus of size >= factor * length.

    The wrap-around error of subsequent operator applications is of order
    norm1(f)/N for 1/n-decay kernels; tests measure it, nothing hides it.
    """
    if not f.is_window:
        raise ValueError("embed_window_in_torus expects a window signal")
    if f.length == 0:
        raise ValueError("cannot embed an empty signal")
    n = max(int(factor) * f.length, 8)
    vals = np.zeros(n)
    for i, v in enumerate(f.values):
        vals[(f.offset + i) % n] += v
    return LatticeSignal.torus(vals)


# -- quadrature over the height variable --------------------------------------


@dataclass(frozen=True)
class YQuadrature:
    """Rule for integrals int_0^inf F(y) y dy.

    ``closed`` collapses the integral analytically in the spectral sum
    (int_0^inf y e^{-(a_j + a_k) y} dy = 1/(a_j + a_k)^2, finite on mean-zero
    spectra).  ``numeric`` evaluates F on positive nodes with positive
    weights that already include the y dy factor.
    """

    kind: str
    nodes: np.ndarray | None = None
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("closed", "numeric"):
            raise ValueError("quadrature kind must be 'closed' or 'numeric'")
        if self.kind == "numeric":
            nodes = np.asarray(self.nodes, dtype=float)
            weights = np.asarray(self.weights, dtype=float)
            if nodes.size == 0 or nodes.size != weights.size:
                raise ValueError("numeric rule needs matching nodes/weights")
            if np.any(nodes <= 0) or np.any(weights <= 0):
                raise ValueError("numeric rule needs positive nodes & weights")
            object.__setattr__(self, "nodes", nodes)
            object.__setattr__(self, "weights", weights)

    @staticmethod
    def closed_form() -> "YQuadrature":
        return YQuadrature("closed")

    @staticmethod
    def exp_gauss(slowest_rate: float, n: int = 80) -> "YQuadrature":
        """Gauss-Legendre after u = exp(-slowest_rate * y).

        Mean-zero integrands decay at least like exp(-2*slowest_rate*y), so
        the substitution turns them into near-polynomials on (0, 1).
        """
        if slowest_rate <= 0:
            raise ValueError("slowest decay rate must be positive")
        xg, wg = np.polynomial.legendre.leggauss(n)
        u = 0.5 * (xg + 1.0)
        du = 0.5 * wg
        y = -np.log(u) / slowest_rate
        w = du * y / (slowest_rate * u)
        return YQuadrature("numeric", y, w)

    @staticmethod
    def default_numeric(f: LatticeSignal, n: int = 80) -> "YQuadrature":
        a1 = 2.0 * math.sin(math.pi / f.n)
        return YQuadrature.exp_gauss(a1, n)


def _pair_modes(f: LatticeSignal, g: LatticeSignal) -> tuple:
    if not (f.is_torus and g.is_torus and f.n == g.n):
        raise ValueError("pairing needs torus signals of equal size")
    require_mean_zero(f, "pairing input f")
    require_mean_zero(g, "pairing input g")
    ef, eg = extend(f), extend(g)
    cross = ef.coeffs * np.conj(eg.coeffs)
    return ef, eg, cross


def littlewood_paley_pairing(f: LatticeSignal, g: LatticeSignal,
                             quad: YQuadrature | None = None) -> float:
    """int_0^inf sum_x (grad f, grad g)(x, y) y dy, which equals (f, g)."""
    if quad is None:
        quad = YQuadrature.closed_form()
    ef, eg, cross = _pair_modes(f, g)
    if quad.kind == "closed":
        a = ef.decay
        mask = a > 0
        num = 4.0 * a[mask] ** 2 * cross[mask].real
        return float(np.sum(num / (2.0 * a[mask]) ** 2) / f.n)
    total = 0.0
    for y, w in zip(quad.nodes, quad.weights):
        gf = ef.gradient_sites(y)
        gg = eg.gradient_sites(y)
        total += w * float(np.sum(gf * gg))
    return total


def lp_component_pairing(f: LatticeSignal, g: LatticeSignal,
                         component: str) -> float:
    """Closed form of 4 int (d f, d g) y dy for one gradient component
    ('dy', 'dx+', 'dx-'); all three agree with the full averaged form."""
    ef, eg, cross = _pair_modes(f, g)
    n = f.n
    k = np.arange(n)
    if component == "dy":
        mult = ef.decay.astype(complex)
    elif component == "dx+":
        mult = np.exp(2j * np.pi * k / n) - 1.0
    elif component == "dx-":
        mult = 1.0 - np.exp(-2j * np.pi * k / n)
    else:
        raise ValueError("component must be 'dy', 'dx+' or 'dx-'")
    a = ef.decay
    mask = a > 0
    num = 4.0 * np.abs(mult[mask]) ** 2 * cross[mask].real
    return float(np.sum(num / (2.0 * a[mask]) ** 2) / n)


def hilbert_weak_pairing(f: LatticeSignal, g: LatticeSignal,
                         quad: YQuadrature | None = None) -> float:
    """int_0^inf sum_x (A grad f, grad g) y dy with the fixed rotation A;
    equals the centered-transform pairing (h f, g)."""
    if quad is None:
        quad = YQuadrature.closed_form()
    ef, eg, cross = _pair_modes(f, g)
    n = f.n
    if quad.kind == "closed":
        a = ef.decay
        theta = 2.0 * np.pi * np.arange(n) / n
        mask = a > 0
        num = (4.0 * a[mask] * np.sin(theta[mask]) * (1j * cross[mask]).real)
        return float(np.sum(num / (2.0 * a[mask]) ** 2) / n)
    total = 0.0
    for y, w in zip(quad.nodes, quad.weights):
        gf = ef.gradient_sites(y)
        gg = eg.gradient_sites(y)
        total += w * float(np.sum((ROTATION_MATRIX @ gf) * gg))
    return total


# -- residual reports ---------------------------------------------------------


def default_sample_points(n: int, n_x: int = 16, n_y: int = 8,
                          y_lo: float = 0.1, y_hi: float = 4.0) -> list:
    xs = np.unique(np.linspace(0, n - 1, min(n_x, n)).astype(int))
    ys = np.linspace(y_lo, y_hi, n_y)
    return [(int(x), float(y)) for x in xs for y in ys]


def harmonicity_residuals(f: LatticeSignal, sample_points=None) -> dict:
    """max |d2u/dy2 + Lap_x u| over the sample grid, relative to norm2(f)."""
    if not f.is_torus:
        raise ValueError("harmonicity check expects a torus signal")
    ext = extend(f)
    pts = sample_points or default_sample_points(f.n)
    worst = 0.0
    for x, y in pts:
        worst = max(worst, abs(ext.dy2(x, y) + ext.lap_x(x, y)))
    return {"max_residual": worst, "norm2": f.norm2(), "points": len(pts)}


_CR_RELATIONS = ("dy_hplus", "dxminus_hplus", "dy_hminus", "dxplus_hminus",
                 "dy_centered", "dx0_centered")


def cauchy_riemann_residuals(f: LatticeSignal, sample_points=None) -> dict:
    """Residuals of the six conjugate-gradient relations.

    With u the extension of f and v(+-/c) the extensions of the one-sided
    and centered transforms:

        dy v+ + dx+ u = 0          dx- v+ - dy u = 0
        dy v- + dx- u = 0          dx+ v- - dy u = 0
        dy vc + dx0 u = 0          dx0 vc - (S-/4 + Id/2 + S+/4) dy u = 0
    """
    if not f.is_torus:
        raise ValueError("cauchy_riemann_residuals expects a torus signal")
    require_mean_zero(f)
    u = extend(f)
    vp = extend(apply_spectral_torus(f, H_PLUS))
    vm = extend(apply_spectral_torus(f, H_MINUS))
    vc = extend(apply_spectral_torus(f, H_CENTERED))

    pts = sample_points or default_sample_points(f.n)
    ys = sorted({y for _, y in pts})
    res = dict.fromkeys(_CR_RELATIONS, 0.0)
    for y in ys:
        xs = np.array(sorted({x for x, yy in pts if yy == y}), dtype=int)
        u_g = u.gradient_sites(y)          # rows: dy, dx+, dy, dx-
        dy_u, dxp_u, _, dxm_u = u_g
        dx0_u = 0.5 * (dxp_u + dxm_u)
        vp_g = vp.gradient_sites(y)
        vm_g = vm.gradient_sites(y)
        vc_g = vc.gradient_sites(y)
        smooth_dy = (0.25 * np.roll(dy_u, -1) + 0.5 * dy_u
                     + 0.25 * np.roll(dy_u, 1))
        rel = {
            "dy_hplus": vp_g[0] + dxp_u,
            "dxminus_hplus": vp_g[3] - dy_u,
            "dy_hminus": vm_g[0] + dxm_u,
            "dxplus_hminus": vm_g[1] - dy_u,
            "dy_centered": vc_g[0] + dx0_u,
            "dx0_centered": 0.5 * (vc_g[1] + vc_g[3]) - smooth_dy,
        }
        for name, arr in rel.items():
            res[name] = max(res[name], float(np.abs(arr[xs]).max()))
    return {"residuals": res, "norm2": f.norm2(),
            "max_residual": max(res.values()), "points": len(pts)}
