"""Minimal immersions from Weierstrass data.

A surface is described by a meromorphic Gauss-map function ``h`` and a
one-form coefficient ``g`` (the form is ``g(z) dz``).  The immersion is the
real part of the path integral of

    ((1 - h^2) g,  i (1 + h^2) g,  2 h g)

from a base point.  Integrals are evaluated with composite Gauss-Legendre
quadrature along straight segments, or along log-linear spirals for annular
domains that must stay clear of a pole at the origin.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import PathSingularityError
from .geometry import ImmersionChart

PATH_CLEARANCE = 1e-8


@dataclass
class WeierstrassData:
    """Meromorphic data ``(h, g)`` describing a minimal immersion."""

    name: str
    gauss_map: Callable
    form_coefficient: Callable
    singularities: tuple = field(default_factory=tuple)

    def phi(self, z: np.ndarray) -> np.ndarray:
        """Integrand components, shape ``z.shape + (3,)`` complex."""
        z = np.asarray(z, dtype=complex)
        h = np.asarray(self.gauss_map(z), dtype=complex)
        g = np.asarray(self.form_coefficient(z), dtype=complex)
        return np.stack(
            [(1.0 - h * h) * g, 1j * (1.0 + h * h) * g, 2.0 * h * g], axis=-1
        )


def enneper_data() -> WeierstrassData:
    return WeierstrassData("enneper", lambda z: z, lambda z: np.ones_like(z))


def catenoid_data() -> WeierstrassData:
    """Catenoid of neck radius 2, with a double pole at the origin."""
    return WeierstrassData(
        "catenoid", lambda z: z, lambda z: z ** -2, singularities=(0.0 + 0.0j,)
    )


def _gauss_nodes(segments: int, order: int):
    xi, w = np.polynomial.legendre.leggauss(order)
    starts = np.arange(segments) / segments
    half = 0.5 / segments
    t = (starts[:, None] + half * (xi[None, :] + 1.0)).ravel()
    weights = np.tile(w * half, segments)
    return t, weights


def _segment_clearance(z0: complex, z1: np.ndarray, points) -> np.ndarray:
    """Min distance from each straight segment [z0, z1[k]] to the points."""
    z1 = np.asarray(z1, dtype=complex)
    d = z1 - z0
    den = np.abs(d) ** 2
    out = np.full(z1.shape, np.inf)
    for s in points:
        t = np.clip(
            np.real((s - z0) * np.conj(d)) / np.where(den == 0, 1.0, den), 0.0, 1.0
        )
        out = np.minimum(out, np.abs(z0 + t * d - s))
    return out


def integrate_phi(
    data: WeierstrassData,
    z0: complex,
    z1: np.ndarray,
    segments: int = 16,
    order: int = 10,
    log_path: bool = False,
) -> np.ndarray:
    """Path integral of the immersion integrand from ``z0`` to each ``z1``.

    Straight paths by default; with ``log_path`` the path is a straight line
    in ``log z`` (a spiral that never meets the origin), in which case both
    endpoints must be nonzero.  Returns complex values, shape
    ``z1.shape + (3,)``.
    """
    z1 = np.asarray(z1, dtype=complex)
    flat = z1.ravel()
    t, w = _gauss_nodes(segments, order)

    if log_path:
        if z0 == 0 or np.any(flat == 0):
            raise PathSingularityError("log path endpoint at the origin")
        w0 = np.log(z0)
        w1 = np.log(flat)
        # unwrap so that the spiral takes the short way around
        w1 = w1 + 2j * np.pi * np.round((w0.imag - w1.imag) / (2 * np.pi))
        dw = w1 - w0
        zs = np.exp(w0 + dw[:, None] * t[None, :])
        dz = zs * dw[:, None]
        sing = [s for s in data.singularities if s != 0]
        if sing:
            clear = min(np.abs(zs - s).min() for s in sing)
            if clear < PATH_CLEARANCE * max(1.0, np.abs(flat).max()):
                raise PathSingularityError(
                    f"integration path passes within {clear:.2e} of a singularity"
                )
    else:
        if data.singularities:
            scale = max(1.0, abs(z0), float(np.abs(flat).max()))
            clear = _segment_clearance(z0, flat, data.singularities)
            if np.any(clear < PATH_CLEARANCE * scale):
                k = int(np.argmin(clear))
                raise PathSingularityError(
                    f"straight path to {flat[k]:.6g} passes within "
                    f"{clear[k]:.2e} of a singularity; use a log path or "
                    "move the base point"
                )
        d = flat - z0
        zs = z0 + d[:, None] * t[None, :]
        dz = np.broadcast_to(d[:, None], zs.shape)

    vals = data.phi(zs)  # (N, K, 3)
    out = np.einsum("k,nkc,nk->nc", w, vals, dz)
    return out.reshape(z1.shape + (3,))


def immersion_points(
    data: WeierstrassData,
    z: np.ndarray,
    base: complex = 0.0 + 0.0j,
    offset=None,
    segments: int = 16,
    order: int = 10,
    log_path: bool = False,
) -> np.ndarray:
    """Immersion images X(z) = offset + Re integral(phi), shape z.shape + (3,)."""
    vals = integrate_phi(data, base, z, segments=segments, order=order,
                         log_path=log_path)
    pts = np.real(vals)
    if offset is not None:
        pts = pts + np.asarray(offset, dtype=float)
    return pts


def disk_point_fn(data: WeierstrassData, base: complex = 0j,
                  segments: int = 16, order: int = 10):
    """Polar point function (rho, phi) -> R^3 for disk-type data."""

    def pt(rho, phi):
        z = np.asarray(rho, dtype=float) * np.exp(1j * np.asarray(phi, dtype=float))
        return immersion_points(data, z, base=base, segments=segments, order=order)

    return pt


def annulus_chart(
    data: WeierstrassData,
    s_lo: float,
    s_hi: float,
    base: complex | None = None,
    segments: int = 16,
    order: int = 10,
) -> ImmersionChart:
    """Chart over (s, theta) -> z = exp(s + i theta) with log-spiral paths.

    Suitable when the data has its only pole at the origin.  The immersion is
    single-valued only when the real periods vanish; use ``check_periods``
    first.  Derivatives are exact (no quadrature): dX/ds = Re(phi(z) z),
    dX/dtheta = Re(i phi(z) z).
    """
    if base is None:
        base = np.exp(0.5 * (s_lo + s_hi)) + 0j

    def ev(s, th):
        z = np.exp(np.asarray(s, dtype=float) + 1j * np.asarray(th, dtype=float))
        return immersion_points(data, z, base=base, segments=segments,
                                order=order, log_path=True)

    def de(s, th):
        z = np.exp(np.asarray(s, dtype=float) + 1j * np.asarray(th, dtype=float))
        pz = data.phi(z) * z[..., None]
        return np.real(pz), np.real(1j * pz)

    return ImmersionChart(
        f"weierstrass_{data.name}", (s_lo, s_hi, 0.0, 2.0 * np.pi),
        ev, de, periodic_v=True,
    )


def check_periods(data: WeierstrassData, radius: float = 1.0,
                  center: complex = 0j, samples: int = 1024) -> dict:
    """Loop integral of the integrand around a circle.

    The immersion is single-valued iff the real part vanishes.  Uses the
    trapezoid rule on the periodic parametrization, which converges
    spectrally for analytic integrands.
    """
    th = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    z = center + radius * np.exp(1j * th)
    dz = 1j * radius * np.exp(1j * th)
    vals = data.phi(z) * dz[:, None]
    period = vals.mean(axis=0) * 2.0 * np.pi
    real = np.real(period)
    scale = max(1.0, float(np.abs(period).max()))
    return {
        "period": period,
        "real_period": real,
        "single_valued": bool(np.abs(real).max() <= 1e-9 * scale),
    }


def conformality_residual(chart: ImmersionChart, grid=(24, 24)) -> float:
    """Max relative deviation from |X_u| = |X_v|, X_u . X_v = 0 on a grid."""
    u0, u1, v0, v1 = chart.domain
    us = np.linspace(u0, u1, grid[0])
    vs = np.linspace(v0, v1, grid[1], endpoint=not chart.periodic_v)
    uu, vv = np.meshgrid(us, vs, indexing="ij")
    xu, xv = chart.derivatives(uu, vv)
    E = np.sum(xu * xu, axis=-1)
    F = np.sum(xu * xv, axis=-1)
    G = np.sum(xv * xv, axis=-1)
    scale = 0.5 * (E + G)
    if np.any(scale <= 0):
        return np.inf
    res = np.maximum(np.abs(E - G), np.abs(F)) / scale
    return float(res.max())
