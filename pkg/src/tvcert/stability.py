"""Shape derivatives of the prescribed-curvature objective on discrete curves.

The objective J(E) = P(E) - int_E eta has, at a critical set E (where the
curvature H equals eta on the boundary), the second shape derivative

    j2(psi) = int_dE [ |grad_tau psi|^2 - (H eta + d eta/d nu) psi^2 ] dH^1

over scalar fields psi on the boundary. Coercivity of j2 in H^1(dE) is
the strict-stability notion used by the certificate checks; on circles it
diagonalizes over Fourier modes, and an explicit non-coercivity witness
exists whenever H^2 + d eta/d nu >= alpha on an arc longer than
pi/sqrt(alpha) (first Dirichlet eigenvalue of the arc).
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidSegment


@dataclass(frozen=True)
class CurveSample:
    """Closed planar curve sampled in arc-length order.

    points[k] is the k-th vertex; arclength[k] the length of the segment
    from vertex k to vertex k+1 (cyclically); normal[k] the unit outward
    normal and curvature[k] the signed curvature at vertex k.
    """

    points: np.ndarray
    arclength: np.ndarray
    normal: np.ndarray
    curvature: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        ds = np.asarray(self.arclength, dtype=float)
        nrm = np.asarray(self.normal, dtype=float)
        H = np.asarray(self.curvature, dtype=float)
        m = pts.shape[0]
        if pts.shape != (m, 2) or nrm.shape != (m, 2) or ds.shape != (m,) or H.shape != (m,):
            raise DimensionMismatch("inconsistent curve sample arrays")
        if m < 3:
            raise ValueError("a closed curve needs at least 3 samples")
        if np.any(ds <= 0):
            raise ValueError("segment lengths must be positive")
        lens = np.linalg.norm(nrm, axis=1)
        if np.max(np.abs(lens - 1.0)) > 1e-10:
            raise ValueError("normals must be unit vectors")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "arclength", ds)
        object.__setattr__(self, "normal", nrm)
        object.__setattr__(self, "curvature", H)

    @property
    def size(self):
        return self.points.shape[0]

    @property
    def node_weights(self):
        """Trapezoidal quadrature weight of each vertex on the closed curve."""
        ds = self.arclength
        return 0.5 * (ds + np.roll(ds, 1))

    @property
    def total_length(self):
        return float(np.sum(self.arclength))

    @property
    def total_turning(self):
        """sum H ds; equals 2 pi for a simple positively oriented curve."""
        return float(np.sum(self.curvature * self.node_weights))

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("x,y,H\n")
            for (x, y), H in zip(self.points, self.curvature):
                fh.write(f"{x:.17g},{y:.17g},{H:.17g}\n")


@dataclass(frozen=True)
class FieldOnCurve:
    """A scalar function sampled at the vertices of a CurveSample."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1:
            raise DimensionMismatch("field values must be a 1-D array")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def size(self):
        return self.values.size


def circle_sample(R, m):
    """Uniform sample of the circle of radius R with exact arc lengths."""
    theta = 2.0 * math.pi * np.arange(m) / m
    pts = R * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    ds = np.full(m, 2.0 * math.pi * R / m)
    nrm = pts / R
    H = np.full(m, 1.0 / R)
    return CurveSample(pts, ds, nrm, H)


def _as_values(f, m):
    vals = f.values if isinstance(f, FieldOnCurve) else np.asarray(f, dtype=float)
    if vals.shape != (m,):
        raise DimensionMismatch(f"field has length {vals.shape}, curve has {m}")
    return vals


def tangential_gradient(curve, psi):
    """Centered arc-length differences of psi along the closed curve."""
    vals = _as_values(psi, curve.size)
    ds = curve.arclength
    return (np.roll(vals, -1) - np.roll(vals, 1)) / (ds + np.roll(ds, 1))


def j1(curve, eta, psi):
    """First shape derivative: int (H - eta) psi dH^1 (trapezoidal)."""
    m = curve.size
    e = _as_values(eta, m)
    p = _as_values(psi, m)
    return float(np.sum((curve.curvature - e) * p * curve.node_weights))


def j2(curve, eta, deta_dnu, psi):
    """Second shape derivative quadratic form at psi.

    int [ |grad_tau psi|^2 - (H eta + deta_dnu) psi^2 ] dH^1, with the
    tangential gradient by centered arc-length differences (second-order
    accurate on smoothly sampled curves).
    """
    m = curve.size
    e = _as_values(eta, m)
    de = _as_values(deta_dnu, m)
    p = _as_values(psi, m)
    gp = tangential_gradient(curve, p)
    integrand = gp * gp - (curve.curvature * e + de) * p * p
    return float(np.sum(integrand * curve.node_weights))


def h1_norm_sq(curve, psi):
    """Discrete H^1(dE) squared norm: int psi^2 + |grad_tau psi|^2."""
    p = _as_values(psi, curve.size)
    gp = tangential_gradient(curve, p)
    return float(np.sum((p * p + gp * gp) * curve.node_weights))


def circle_spectrum(R, c, k_max):
    """H^1-normalized Rayleigh quotients of j2 on the circle of radius R.

    On a circle with constant c = H^2 + d eta/d nu, the form diagonalizes
    over the modes cos(k theta):

        quotient(k) = (pi k^2 / R - pi R c) / (pi R + pi k^2 / R)

    (sine modes give the same values by rotational symmetry). Returns the
    list of (k, quotient) for k = 0..k_max; the form is coercive iff the
    minimum over modes is positive, which for c < 0 is -c at k = 0.
    """
    if not R > 0:
        raise ValueError("R must be positive")
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    out = []
    for k in range(int(k_max) + 1):
        t = math.pi * k * k / R
        out.append((k, (t - math.pi * R * c) / (math.pi * R + t)))
    return out


def coercive_on_circle(R, c, k_max=64):
    """True when every Fourier-mode quotient up to k_max is positive."""
    return min(q for _, q in circle_spectrum(R, c, k_max)) > 0.0


def _contiguous_indices(curve, segment):
    m = curve.size
    idx = np.asarray(list(segment), dtype=int)
    if idx.size < 2:
        raise InvalidSegment("segment must contain at least two vertices")
    if np.any(idx < 0) or np.any(idx >= m):
        raise InvalidSegment("segment index out of range")
    steps = np.diff(idx) % m
    if np.any(steps != 1):
        raise InvalidSegment("segment indices must be consecutive along the curve")
    if idx.size > m:
        raise InvalidSegment("segment wraps past the full curve")
    return idx


def noncoercivity_witness(curve, c_field, alpha, segment):
    """First Dirichlet eigenfunction of an arc, when it defeats coercivity.

    segment is a contiguous run of vertex indices (wrap-around allowed)
    on which c_field = H^2 + d eta/d nu must be >= alpha > 0. If alpha >=
    (pi / L)^2 with L the arc length, returns psi(s) = sin(pi s / L)
    supported on the arc (zero elsewhere), for which j2 <= 0 up to
    quadrature error; otherwise returns None.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    idx = _contiguous_indices(curve, segment)
    c = _as_values(c_field, curve.size)
    if np.any(c[idx] < alpha):
        raise ValueError("c_field must be >= alpha on the whole segment")
    # arc length from the first to the last vertex of the segment
    seg_lengths = curve.arclength[idx[:-1]]
    L = float(np.sum(seg_lengths))
    if alpha < (math.pi / L) ** 2:
        return None
    s = np.concatenate([[0.0], np.cumsum(seg_lengths)])
    vals = np.zeros(curve.size)
    vals[idx] = np.sin(math.pi * s / L)
    return FieldOnCurve(vals)
