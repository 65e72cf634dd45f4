"""Area-preserving quasi-rotation of the unit square, in closed form.

The map equals the rigid quarter-turn about the square's center on the
inner square [2^-nu, 1 - 2^-nu]^2 and the identity near the boundary, and
preserves Lebesgue measure exactly.  Construction: foliate a thin band
near the boundary by rounded squares (straight sides, circular corners of
radius c(d) that vanishes smoothly at both ends of the band), and move
points along their leaf by a fraction tau(d) of the leaf, measured in the
Liouville (area-flux) parametrization.  In leaf/flux coordinates (d, sigma)
Lebesgue measure is |A'(d)| dd dsigma, so (d, sigma) -> (d, sigma + tau(d))
has Jacobian determinant exactly 1.  Where tau is locked at 0 or 1/4 the
leaves may have corners (the map is the identity / the exact rotation
there); in between the leaves are C^1 curves with piecewise-analytic
parametrization, so every evaluation reduces to elementary formulas plus
two bracketed one-dimensional solves.

All evaluation is scalar float; array entry points loop over the band
points only (the rigid and identity zones are handled vectorized).
"""

from __future__ import annotations

import math
from typing import Tuple

import numpy as np

HALF_PI = math.pi / 2.0
_FOUR_MINUS_PI_2 = 2.0 * (4.0 - math.pi)


def _estep(t: float) -> float:
    if t <= 0.0:
        return 0.0
    return math.exp(-1.0 / t)


def smoothstep(t: float) -> float:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, flat at both ends."""
    if t <= 0.0:
        return 0.0
    if t >= 1.0:
        return 1.0
    a = _estep(t)
    b = _estep(1.0 - t)
    return a / (a + b)


def smoothstep_d012(t: float) -> Tuple[float, float, float]:
    """(value, first, second derivative) of smoothstep."""
    if t <= 0.0:
        return 0.0, 0.0, 0.0
    if t >= 1.0:
        return 1.0, 0.0, 0.0
    a = _estep(t)
    b = _estep(1.0 - t)
    u = 1.0 - t
    da = a / (t * t)
    db = -b / (u * u)
    d2a = a * (1.0 / t ** 4 - 2.0 / t ** 3)
    d2b = b * (1.0 / u ** 4 - 2.0 / u ** 3)
    s = a + b
    n = da * b - a * db
    val = a / s
    d1 = n / (s * s)
    dn = d2a * b - a * d2b
    ds = da + db
    d2 = (dn * s - 2.0 * n * ds) / (s ** 3)
    return val, d1, d2


class QuasiRotation:
    """Quarter-turn quasi-rotation of [0,1]^2 with sharpness index nu.

    rigid on [2^-nu, 1 - 2^-nu]^2, identity within 2^-nu/4 of the boundary,
    det(Jacobian) = 1 up to floating-point roundoff everywhere.
    """

    def __init__(self, nu: int):
        if nu < 1:
            raise ValueError("nu >= 1 required")
        self.nu = nu
        m = 0.5 ** nu
        self.margin = m
        self.d_a = m / 4.0
        self.d_b = 3.0 * m / 4.0
        self.wd = self.d_b - self.d_a
        self.c_amp = self.wd / 16.0
        self.sup_rigid = 0.5 - self.d_b   # sup <= this -> exact rotation
        self.sup_ident = 0.5 - self.d_a   # sup >= this -> identity
        self.collar = self.d_a            # exact-identity collar width

    # -- profiles ---------------------------------------------------------

    def _tau(self, d: float) -> Tuple[float, float]:
        t = (d - self.d_a) / self.wd
        val, d1, _ = smoothstep_d012(t)
        return 0.25 * val, 0.25 * d1 / self.wd

    def _cprof(self, d: float) -> Tuple[float, float, float]:
        """Corner radius c(d) and two derivatives."""
        t = (d - self.d_a) / self.wd
        z, dz, d2z = smoothstep_d012(t)
        c = self.c_amp * 4.0 * z * (1.0 - z)
        dc = self.c_amp * 4.0 * (1.0 - 2.0 * z) * dz / self.wd
        d2c = self.c_amp * 4.0 * ((1.0 - 2.0 * z) * d2z - 2.0 * dz * dz) / (self.wd ** 2)
        return c, dc, d2c

    def _frame(self, d: float) -> dict:
        """All leaf-level quantities used by the chart at level d."""
        s = 0.5 - d
        c, dc, d2c = self._cprof(d)
        kappa = s - c
        dkappa = -1.0 - dc
        aw = 2.0 * (1.0 + dc) - dc * HALF_PI          # arc weight / c
        daw = d2c * (2.0 - HALF_PI)
        w_total = 8.0 * s + _FOUR_MINUS_PI_2 * c * dc  # |A'(d)|
        dw_total = -8.0 + _FOUR_MINUS_PI_2 * (dc * dc + c * d2c)
        tau, dtau = self._tau(d)
        return {
            "d": d, "s": s, "c": c, "dc": dc, "d2c": d2c,
            "kappa": kappa, "dkappa": dkappa,
            "aw": aw, "daw": daw, "W": w_total, "dW": dw_total,
            "Wq": 0.25 * w_total, "tau": tau, "dtau": dtau,
        }

    # -- leaf location ----------------------------------------------------

    def _signed_level(self, d: float, U: float, V: float) -> Tuple[float, float]:
        """Signed distance of (U, V) to the leaf at level d, and d-derivative."""
        s = 0.5 - d
        c, dc, _ = self._cprof(d)
        kappa = s - c
        du = U - kappa
        dv = V - kappa
        if du > 0.0 and dv > 0.0:
            h = math.hypot(du, dv)
            if h == 0.0:
                return -c, 1.0
            return h - c, (1.0 + dc) * (du + dv) / h - dc
        return max(U, V) - s, 1.0

    def _solve_level(self, U: float, V: float) -> float:
        """Leaf through (U, V): closed-form on edge zones, else bracketed solve."""
        if U >= V:
            d = 0.5 - U
            c, _, _ = self._cprof(d)
            if V <= 0.5 - d - c:
                return d
        else:
            d = 0.5 - V
            c, _, _ = self._cprof(d)
            if U <= 0.5 - d - c:
                return d
        lo, hi = self.d_a, self.d_b
        d = 0.5 * (lo + hi)
        for _ in range(80):
            val, deriv = self._signed_level(d, U, V)
            if val > 0.0:
                hi = d
            else:
                lo = d
            if deriv > 0.0:
                step = val / deriv
                cand = d - step
                if lo < cand < hi:
                    if abs(step) < 1e-17:
                        return cand
                    d = cand
                    continue
            d = 0.5 * (lo + hi)
            if hi - lo < 1e-17:
                break
        return d

    # -- flux coordinate --------------------------------------------------

    def _omega_of_point(self, fr: dict, U: float, V: float) -> Tuple[float, int, float]:
        """In-quarter flux position omega in [0, Wq], zone (0 edge-right,
        1 corner, 2 edge-top) and theta (corner only)."""
        kappa, c = fr["kappa"], fr["c"]
        du = U - kappa
        dv = V - kappa
        if du > 0.0 and dv > 0.0 and c > 0.0:
            theta = math.atan2(dv, du)
            theta = min(max(theta, 0.0), HALF_PI)
            g_int = math.sin(theta) - math.cos(theta) + 1.0
            omega = kappa + c * ((1.0 + fr["dc"]) * g_int - fr["dc"] * theta)
            return omega, 1, theta
        if U >= V:
            return min(V, kappa), 0, 0.0
        return kappa + c * fr["aw"] + (kappa - U), 2, 0.0

    def _solve_theta(self, fr: dict, target: float) -> float:
        """Solve c[(1 + c')G(theta) - c' theta] = target on [0, pi/2]."""
        c, dc = fr["c"], fr["dc"]
        lo, hi = 0.0, HALF_PI
        th = HALF_PI * max(0.0, min(1.0, target / max(c * fr["aw"], 1e-300)))
        for _ in range(80):
            g_int = math.sin(th) - math.cos(th) + 1.0
            val = c * ((1.0 + dc) * g_int - dc * th) - target
            if val > 0.0:
                hi = th
            else:
                lo = th
            deriv = c * ((1.0 + dc) * (math.cos(th) + math.sin(th)) - dc)
            if deriv > 0.0:
                step = val / deriv
                cand = th - step
                if lo < cand < hi:
                    if abs(step) < 1e-16:
                        return cand
                    th = cand
                    continue
            th = 0.5 * (lo + hi)
            if hi - lo < 1e-16:
                break
        return th

    def _point_of_omega(self, fr: dict, omega: float) -> Tuple[float, float, int, float]:
        """(U, V), zone, theta at flux position omega in [0, Wq]."""
        kappa, c, s = fr["kappa"], fr["c"], fr["s"]
        w1 = kappa
        w2 = kappa + c * fr["aw"]
        if omega <= w1 or c <= 0.0:
            if omega > w1:           # c underflowed to 0: treat seam as edge
                return kappa - (omega - w2), s, 2, 0.0
            return s, omega, 0, 0.0
        if omega < w2:
            th = self._solve_theta(fr, omega - w1)
            return kappa + c * math.cos(th), kappa + c * math.sin(th), 1, th
        return kappa - (omega - w2), s, 2, 0.0

    # -- chart derivatives -------------------------------------------------

    def _point_derivs(self, fr: dict, omega: float, zone: int, theta: float):
        """Columns (dP/dd, dP/dsigma) of the chart at (d, omega-in-quarter).

        sigma is the global flux fraction, so d(omega)/d(sigma) = W and, at
        fixed sigma, d(omega)/dd = omega * W'/W.
        """
        w_tot, dw = fr["W"], fr["dW"]
        om_d = omega * dw / w_tot
        if zone == 0:
            return (-1.0, om_d), (0.0, w_tot)
        if zone == 2:
            kappa, c = fr["kappa"], fr["c"]
            dkappa, dc, d2c = fr["dkappa"], fr["dc"], fr["d2c"]
            w2_d = dkappa + dc * fr["aw"] + c * fr["daw"]
            return (dkappa + w2_d - om_d, -1.0), (-w_tot, 0.0)
        c, dc, d2c = fr["c"], fr["dc"], fr["d2c"]
        dkappa = fr["dkappa"]
        ct, st = math.cos(theta), math.sin(theta)
        g = ct + st
        g_int = st - ct + 1.0
        v_speed = (1.0 + dc) * g - dc
        f_d = ((dc * (1.0 + dc) + c * d2c) * g_int
               - (dc * dc + c * d2c) * theta
               - (om_d - dkappa))
        theta_d = -f_d / (c * v_speed)
        theta_sigma = w_tot / (c * v_speed)
        p_d = (dkappa + dc * ct - c * st * theta_d,
               dkappa + dc * st + c * ct * theta_d)
        p_sigma = (-st * w_tot / v_speed, ct * w_tot / v_speed)
        return p_d, p_sigma

    # -- scalar map --------------------------------------------------------

    @staticmethod
    def _quarter(u: float, v: float) -> int:
        if u > 0.0 and v >= 0.0:
            return 0
        if v > 0.0:
            return 1
        if u < 0.0:
            return 2
        return 3

    @staticmethod
    def _rot(u: float, v: float, k: int) -> Tuple[float, float]:
        k &= 3
        if k == 0:
            return u, v
        if k == 1:
            return -v, u
        if k == 2:
            return -u, -v
        return v, -u

    def _analyze(self, x: float, y: float, eps: int):
        u = x - 0.5
        v = y - 0.5
        sup = max(abs(u), abs(v))
        if sup >= self.sup_ident:
            return None
        if sup <= self.sup_rigid:
            return "rigid"
        k_in = self._quarter(u, v)
        U, V = self._rot(u, v, -k_in)
        d = self._solve_level(U, V)
        fr = self._frame(d)
        omega_in, zone_in, theta_in = self._omega_of_point(fr, U, V)
        sigma = 0.25 * k_in + omega_in / fr["W"]
        sigma_out = (sigma + eps * fr["tau"]) % 1.0
        k_out = min(int(sigma_out * 4.0), 3)
        omega_out = (sigma_out - 0.25 * k_out) * fr["W"]
        omega_out = min(max(omega_out, 0.0), fr["Wq"])
        u_loc, v_loc, zone_out, theta_out = self._point_of_omega(fr, omega_out)
        return (fr, k_in, omega_in, zone_in, theta_in,
                k_out, omega_out, zone_out, theta_out, u_loc, v_loc)

    def map_one(self, x: float, y: float, eps: int = 1) -> Tuple[float, float]:
        res = self._analyze(x, y, eps)
        if res is None:
            return x, y
        if res == "rigid":
            u = x - 0.5
            v = y - 0.5
            if eps > 0:
                return 0.5 - v, 0.5 + u
            return 0.5 + v, 0.5 - u
        fr, k_in, om_in, z_in, th_in, k_out, om_out, z_out, th_out, ul, vl = res
        u2, v2 = self._rot(ul, vl, k_out)
        return u2 + 0.5, v2 + 0.5

    def jacobian_one(self, x: float, y: float, eps: int = 1):
        res = self._analyze(x, y, eps)
        if res is None:
            return ((1.0, 0.0), (0.0, 1.0))
        if res == "rigid":
            if eps > 0:
                return ((0.0, -1.0), (1.0, 0.0))
            return ((0.0, 1.0), (-1.0, 0.0))
        fr, k_in, om_in, z_in, th_in, k_out, om_out, z_out, th_out, ul, vl = res
        pd_in, ps_in = self._point_derivs(fr, om_in, z_in, th_in)
        pd_out, ps_out = self._point_derivs(fr, om_out, z_out, th_out)
        dtau = eps * fr["dtau"]
        col1 = (pd_out[0] + dtau * ps_out[0], pd_out[1] + dtau * ps_out[1])
        a, c_ = self._rot(col1[0], col1[1], k_out)
        b, d_ = self._rot(ps_out[0], ps_out[1], k_out)
        m_out = ((a, b), (c_, d_))
        a, c_ = self._rot(pd_in[0], pd_in[1], k_in)
        b, d_ = self._rot(ps_in[0], ps_in[1], k_in)
        det = a * d_ - b * c_
        m_inv = ((d_ / det, -b / det), (-c_ / det, a / det))
        j00 = m_out[0][0] * m_inv[0][0] + m_out[0][1] * m_inv[1][0]
        j01 = m_out[0][0] * m_inv[0][1] + m_out[0][1] * m_inv[1][1]
        j10 = m_out[1][0] * m_inv[0][0] + m_out[1][1] * m_inv[1][0]
        j11 = m_out[1][0] * m_inv[0][1] + m_out[1][1] * m_inv[1][1]
        return ((j00, j01), (j10, j11))

    # -- array entry points -------------------------------------------------

    def map_points(self, pts: np.ndarray, eps: int = 1) -> np.ndarray:
        """pts: (N, 2) array in [0,1]^2; returns the mapped array."""
        pts = np.asarray(pts, dtype=float)
        out = pts.copy()
        u = pts[:, 0] - 0.5
        v = pts[:, 1] - 0.5
        sup = np.maximum(np.abs(u), np.abs(v))
        rigid = sup <= self.sup_rigid
        if eps > 0:
            out[rigid, 0] = 0.5 - v[rigid]
            out[rigid, 1] = 0.5 + u[rigid]
        else:
            out[rigid, 0] = 0.5 + v[rigid]
            out[rigid, 1] = 0.5 - u[rigid]
        band = (~rigid) & (sup < self.sup_ident)
        for i in np.nonzero(band)[0]:
            out[i] = self.map_one(pts[i, 0], pts[i, 1], eps)
        return out

    def jacobians(self, pts: np.ndarray, eps: int = 1) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        n = len(pts)
        jac = np.empty((n, 2, 2))
        jac[:] = np.eye(2)
        u = pts[:, 0] - 0.5
        v = pts[:, 1] - 0.5
        sup = np.maximum(np.abs(u), np.abs(v))
        rigid = sup <= self.sup_rigid
        rot = np.array([[0.0, -1.0], [1.0, 0.0]]) if eps > 0 else \
            np.array([[0.0, 1.0], [-1.0, 0.0]])
        jac[rigid] = rot
        band = (~rigid) & (sup < self.sup_ident)
        for i in np.nonzero(band)[0]:
            jac[i] = self.jacobian_one(pts[i, 0], pts[i, 1], eps)
        return jac
