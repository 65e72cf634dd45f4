"""Evaluable measure-preserving self-maps of the closed annulus [0,1] x T^1.

Every map exposes vectorized forward / inverse / Jacobian evaluation plus
a lift variant that reports the continuous vertical displacement (used for
rotation-number estimates).  The stage conjugacy is assembled from three
primitives:

* a vertical shear that rigidly rotates each slice column by a multiple of
  1/q_n (exactly area-preserving, exactly equivariant);
* a per-cell conjugated quasi-rotation that exchanges the two factors of a
  cell, sending slice columns onto the stacked components of R;
* stacked quasi-rotations inside each component, which shrink the scale at
  which vertical bands pull back (the generation step).

Jacobians are analytic throughout (chain rule over the primitives), so the
determinant is 1 up to roundoff by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .partitions import RnDecomposition, build_Rn
from .smooth import QuasiRotation
from .stages import Stage


def _as_points(pts) -> np.ndarray:
    a = np.asarray(pts, dtype=float)
    if a.ndim == 1:
        a = a.reshape(1, 2)
    return a


def smoothstep_np(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    out[t >= 1.0] = 1.0
    mid = (t > 0.0) & (t < 1.0)
    tm = t[mid]
    a = np.exp(-1.0 / tm)
    b = np.exp(-1.0 / (1.0 - tm))
    out[mid] = a / (a + b)
    return out


def smoothstep_np_d1(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    mid = (t > 0.0) & (t < 1.0)
    tm = t[mid]
    a = np.exp(-1.0 / tm)
    b = np.exp(-1.0 / (1.0 - tm))
    out[mid] = a * b * (1.0 / tm ** 2 + 1.0 / (1.0 - tm) ** 2) / (a + b) ** 2
    return out


class PlanarMap:
    """Base class; subclasses fill in forward/inverse/jacobian/lift."""

    name: str = "map"
    equivariance_q: Optional[int] = None   # commutes with S_{1/q}
    equivariance_any: bool = False         # commutes with every S_t
    collar: float = 0.0                    # identity for x within collar of {0,1}

    def forward(self, pts) -> np.ndarray:
        return self.forward_with_lift(pts)[0]

    def inverse(self, pts) -> np.ndarray:
        return self.inverse_with_lift(pts)[0]

    def forward_with_lift(self, pts) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def inverse_with_lift(self, pts) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def jacobian(self, pts) -> np.ndarray:
        raise NotImplementedError

    def jacobian_det(self, pts) -> np.ndarray:
        """det DJ at pts.

        Overridden by compositions to multiply factor determinants along
        the chain: the full product matrix is so anisotropic that its
        float determinant is pure cancellation noise, while the factor
        determinants are each accurate.
        """
        return np.linalg.det(self.jacobian(pts))

    def inverse_jacobian(self, pts) -> np.ndarray:
        """Jacobian of the inverse map at pts."""
        pre = self.inverse(pts)
        jac = self.jacobian(pre)
        return np.linalg.inv(jac)


class IdentityMap(PlanarMap):
    name = "identity"
    collar = 1.0
    equivariance_any = True

    def forward_with_lift(self, pts):
        p = _as_points(pts)
        return p.copy(), np.zeros(len(p))

    inverse_with_lift = forward_with_lift

    def jacobian(self, pts):
        p = _as_points(pts)
        return np.broadcast_to(np.eye(2), (len(p), 2, 2)).copy()


class RotationMap(PlanarMap):
    """Rigid vertical rotation S_t, t exact rational."""

    equivariance_any = True

    def __init__(self, angle: Fraction):
        self.exact_angle = Fraction(angle)
        self.t = float(self.exact_angle)
        self.name = f"S[{self.exact_angle}]"

    def forward_with_lift(self, pts):
        p = _as_points(pts).copy()
        p[:, 1] = (p[:, 1] + self.t) % 1.0
        return p, np.full(len(p), self.t)

    def inverse_with_lift(self, pts):
        p = _as_points(pts).copy()
        p[:, 1] = (p[:, 1] - self.t) % 1.0
        return p, np.full(len(p), -self.t)

    def jacobian(self, pts):
        p = _as_points(pts)
        return np.broadcast_to(np.eye(2), (len(p), 2, 2)).copy()


class ShearMap(PlanarMap):
    """Vertical shear (x, s) -> (x, s + psi(x)): exactly area-preserving.

    psi is piecewise: constant k_i/q on each slice, a smoothstep ramp on
    each gap.  Regions are given by exact rational breakpoints; floats are
    derived once.
    """

    def __init__(self, regions: Sequence[Tuple[Fraction, Fraction, Fraction, Fraction]],
                 q: int, name: str = "shear"):
        # region = (left, right, v0, v1); v0 == v1 means constant
        self.regions = list(regions)
        self.q = q
        self.equivariance_q = q
        self.name = name
        self._lefts = np.array([float(r[0]) for r in regions])
        self._rights = np.array([float(r[1]) for r in regions])
        self._v0 = np.array([float(r[2]) for r in regions])
        self._v1 = np.array([float(r[3]) for r in regions])
        # identity collar: maximal zero-shift runs touching x = 0 and x = 1
        left = 0.0
        for lo, hi, v0, v1 in regions:
            if v0 != 0 or v1 != 0:
                break
            left = float(hi)
        right = 1.0
        for lo, hi, v0, v1 in reversed(regions):
            if v0 != 0 or v1 != 0:
                break
            right = float(lo)
        self.collar = min(left, 1.0 - right)

    def psi(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self._rights, x, side="left"),
                      0, len(self.regions) - 1)
        left = self._lefts[idx]
        right = self._rights[idx]
        v0 = self._v0[idx]
        v1 = self._v1[idx]
        width = np.maximum(right - left, 1e-300)
        tt = (x - left) / width
        return v0 + (v1 - v0) * smoothstep_np(tt)

    def psi_d1(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self._rights, x, side="left"),
                      0, len(self.regions) - 1)
        left = self._lefts[idx]
        right = self._rights[idx]
        v0 = self._v0[idx]
        v1 = self._v1[idx]
        width = np.maximum(right - left, 1e-300)
        tt = (x - left) / width
        return (v1 - v0) * smoothstep_np_d1(tt) / width

    def forward_with_lift(self, pts):
        p = _as_points(pts).copy()
        d = self.psi(p[:, 0])
        p[:, 1] = (p[:, 1] + d) % 1.0
        return p, d

    def inverse_with_lift(self, pts):
        p = _as_points(pts).copy()
        d = self.psi(p[:, 0])
        p[:, 1] = (p[:, 1] - d) % 1.0
        return p, -d

    def jacobian(self, pts):
        p = _as_points(pts)
        jac = np.broadcast_to(np.eye(2), (len(p), 2, 2)).copy()
        jac[:, 1, 0] = self.psi_d1(p[:, 0])
        return jac


class StackedQuasiRotation(PlanarMap):
    """Conjugated quasi-rotations on a family of horizontal bands.

    Bands are disjoint [lo, hi) vertical intervals with rational endpoints;
    points outside every band are fixed.  On a band of height h the map is
    C_h^{-1} phi C_h where C_h rescales the band to the unit square, so it
    is measure-preserving with det J = det J_phi.
    """

    def __init__(self, bands: Sequence[Tuple[Fraction, Fraction]], nu: int,
                 equivariance_q: Optional[int] = None, name: str = "stacked-qr"):
        bands = sorted(bands)
        for (a0, b0), (a1, b1) in zip(bands, bands[1:]):
            if b0 > a1:
                raise ValueError("bands overlap")
        for lo, hi in bands:
            if hi - lo > Fraction(1, 2):
                raise ValueError("band height > 1/2: conjugation scale < 2")
        self.bands = list(bands)
        self.phi = QuasiRotation(nu)
        self.nu = nu
        self.equivariance_q = equivariance_q
        self.name = name
        self._los = np.array([float(lo) for lo, _ in bands])
        self._his = np.array([float(hi) for _, hi in bands])
        self.collar = self.phi.collar  # phi is the identity near box edges

    def _locate(self, y: np.ndarray):
        idx = np.searchsorted(self._los, y, side="right") - 1
        inside = idx >= 0
        idx = np.maximum(idx, 0)
        inside &= y < self._his[idx]
        return idx, inside

    def _apply(self, pts, eps: int):
        p = _as_points(pts).copy()
        y = p[:, 1] % 1.0
        idx, inside = self._locate(y)
        dlift = np.zeros(len(p))
        for i in np.nonzero(inside)[0]:
            lo = self._los[idx[i]]
            h = self._his[idx[i]] - lo
            yy = (y[i] - lo) / h
            x2, y2 = self.phi.map_one(p[i, 0], yy, eps)
            ynew = lo + y2 * h
            dlift[i] = ynew - y[i]
            p[i, 0] = x2
            p[i, 1] = ynew % 1.0
        return p, dlift

    def forward_with_lift(self, pts):
        return self._apply(pts, 1)

    def inverse_with_lift(self, pts):
        return self._apply(pts, -1)

    def jacobian(self, pts):
        p = _as_points(pts)
        jac = np.broadcast_to(np.eye(2), (len(p), 2, 2)).copy()
        y = p[:, 1] % 1.0
        idx, inside = self._locate(y)
        for i in np.nonzero(inside)[0]:
            lo = self._los[idx[i]]
            h = self._his[idx[i]] - lo
            yy = (y[i] - lo) / h
            (a, b), (c, d) = self.phi.jacobian_one(p[i, 0], yy, 1)
            jac[i] = ((a, b / h), (c * h, d))
        return jac


class CellQuasiRotation(PlanarMap):
    """The same conjugated quasi-rotation on every cell I x [j/q, (j+1)/q).

    Exactly S_{1/q}-equivariant; on the exact-rotation core of each cell it
    acts as the rigid quarter-turn composed with the (1/q, q) rescaling,
    sending vertical columns onto horizontal bands.
    """

    def __init__(self, q: int, nu: int, name: str = "cell-qr"):
        if q < 2:
            raise ValueError("cell map needs q >= 2")
        self.q = q
        self.phi = QuasiRotation(nu)
        self.nu = nu
        self.equivariance_q = q
        self.name = name
        self.collar = self.phi.collar

    def _apply(self, pts, eps: int):
        p = _as_points(pts).copy()
        y = p[:, 1] % 1.0
        j = np.minimum((y * self.q).astype(int), self.q - 1)
        dlift = np.zeros(len(p))
        for i in range(len(p)):
            lo = j[i] / self.q
            yy = (y[i] - lo) * self.q
            x2, y2 = self.phi.map_one(p[i, 0], min(max(yy, 0.0), 1.0), eps)
            ynew = lo + y2 / self.q
            dlift[i] = ynew - y[i]
            p[i, 0] = x2
            p[i, 1] = ynew % 1.0
        return p, dlift

    def forward_with_lift(self, pts):
        return self._apply(pts, 1)

    def inverse_with_lift(self, pts):
        return self._apply(pts, -1)

    def jacobian(self, pts):
        p = _as_points(pts)
        jac = np.empty((len(p), 2, 2))
        y = p[:, 1] % 1.0
        j = np.minimum((y * self.q).astype(int), self.q - 1)
        for i in range(len(p)):
            lo = j[i] / self.q
            yy = (y[i] - lo) * self.q
            (a, b), (c, d) = self.phi.jacobian_one(p[i, 0], min(max(yy, 0.0), 1.0), 1)
            jac[i] = ((a, b * self.q), (c / self.q, d))
        return jac


class ComposedMap(PlanarMap):
    """maps[0] applied first."""

    def __init__(self, maps: Sequence[PlanarMap], name: str = "composed"):
        flat: List[PlanarMap] = []
        for m in maps:
            if isinstance(m, ComposedMap):
                flat.extend(m.maps)
            elif not isinstance(m, IdentityMap):
                flat.append(m)
        self.maps = flat
        self.name = name
        qs = {m.equivariance_q for m in flat
              if not m.equivariance_any and m.equivariance_q is not None}
        if any(not m.equivariance_any and m.equivariance_q is None
               for m in flat):
            self.equivariance_q = None
        elif not qs:
            self.equivariance_any = True
            self.equivariance_q = None
        elif all(q % min(qs) == 0 for q in qs):
            # stage periods form a divisibility chain: S_{1/q_min} is a
            # power of every finer S_{1/q}
            self.equivariance_q = min(qs)
        else:
            self.equivariance_q = None
        self.collar = min((m.collar for m in flat), default=1.0)

    def forward_with_lift(self, pts):
        p = _as_points(pts)
        total = np.zeros(len(p))
        for m in self.maps:
            p, d = m.forward_with_lift(p)
            total += d
        return p, total

    def inverse_with_lift(self, pts):
        p = _as_points(pts)
        total = np.zeros(len(p))
        for m in reversed(self.maps):
            p, d = m.inverse_with_lift(p)
            total += d
        return p, total

    def jacobian(self, pts):
        p = _as_points(pts)
        jac = np.broadcast_to(np.eye(2), (len(p), 2, 2)).copy()
        for m in self.maps:
            jac = np.matmul(m.jacobian(p), jac)
            p = m.forward(p)
        return jac

    def jacobian_det(self, pts):
        p = _as_points(pts)
        det = np.ones(len(p))
        for m in self.maps:
            det = det * m.jacobian_det(p)
            p = m.forward(p)
        return det


class InverseOf(PlanarMap):
    def __init__(self, inner: PlanarMap):
        self.inner = inner
        self.name = f"inv({inner.name})"
        self.equivariance_q = inner.equivariance_q
        self.equivariance_any = inner.equivariance_any
        self.collar = inner.collar

    def forward_with_lift(self, pts):
        return self.inner.inverse_with_lift(pts)

    def inverse_with_lift(self, pts):
        return self.inner.forward_with_lift(pts)

    def jacobian(self, pts):
        pre = self.inner.inverse(pts)
        return np.linalg.inv(self.inner.jacobian(pre))

    def jacobian_det(self, pts):
        pre = self.inner.inverse(pts)
        return 1.0 / self.inner.jacobian_det(pre)


def quasi_rotation(nu: int) -> QuasiRotation:
    """The unit-square quasi-rotation primitive (sharpness index nu)."""
    return QuasiRotation(nu)


def conjugate_scale(phi: QuasiRotation, p) -> StackedQuasiRotation:
    """C_p^{-1} phi C_p on the thin rectangle [0,1] x [0, 1/p], p >= 2."""
    p = Fraction(p)
    if p < 2:
        raise ValueError("p >= 2 required")
    return StackedQuasiRotation([(Fraction(0), 1 / p)], nu=phi.nu,
                                name=f"qr-scaled[1/{p}]")


def conjugate_rotation(b_map: PlanarMap, angle: Fraction,
                       name: str = "T") -> ComposedMap:
    """T = B^{-1} S_angle B, with the exact angle kept for oracles."""
    t = ComposedMap([b_map, RotationMap(angle), InverseOf(b_map)], name=name)
    t.exact_angle = Fraction(angle)
    t.conjugacy = b_map
    return t


# ---------------------------------------------------------------------------
# stage geometry and the three step maps
# ---------------------------------------------------------------------------

@dataclass
class StageGeometry:
    """Exact-rational geometry shared by the three step maps of stage n."""

    n: int
    q: int
    q_next: int
    a_next: int
    b_next: int
    dec: RnDecomposition
    eps1: Fraction
    eps1_nominal: Fraction
    slice_x: List[Fraction]        # X_0 = 0 < ... < X_b = 1 (column edges)
    shifts: List[int]              # k(l_i), cell shift of column i
    w: int
    stacks: List[Tuple[Fraction, Fraction]]   # global A3 band list (tiles T^1)
    nu: int
    sharp_target_applicable: bool  # w >= 2^n q_n ||B_n||_1 (measured)

    @property
    def e1_complement(self) -> Fraction:
        return self.b_next * self.eps1

    @property
    def e2_complement(self) -> Fraction:
        m2 = Fraction(1, 2 ** (self.n + 2))
        return 1 - (1 - 2 * m2) ** 2

    @property
    def e3_complement(self) -> Fraction:
        m3 = Fraction(1, 2 ** (self.n + 1))
        kept = max(Fraction(0), 1 - 2 * m3)
        return 1 - kept ** 2

    def e_complement_bound(self) -> Fraction:
        """Exact superset measure of the complement of E_{n+1}."""
        return self.e1_complement + self.e2_complement + self.e3_complement

    # -- float membership tests (used by sampled checks) -------------------

    def e1_contains(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        ok = np.zeros(x.shape, dtype=bool)
        e1 = float(self.eps1)
        for x0, x1 in zip(self.slice_x, self.slice_x[1:]):
            ok |= (x >= float(x0)) & (x <= float(x1) - e1)
        return ok

    def e2_contains(self, pts: np.ndarray) -> np.ndarray:
        p = _as_points(pts)
        m2 = 0.5 ** (self.n + 2)
        y = p[:, 1] % 1.0
        j = np.minimum((y * self.q).astype(int), self.q - 1)
        yy = y * self.q - j
        return ((p[:, 0] >= m2) & (p[:, 0] <= 1 - m2)
                & (yy >= m2) & (yy <= 1 - m2))

    def e3_contains(self, pts: np.ndarray) -> np.ndarray:
        p = _as_points(pts)
        m3 = 0.5 ** (self.n + 1)
        if m3 >= 0.5:
            return np.zeros(len(p), dtype=bool)
        los = np.array([float(lo) for lo, _ in self.stacks])
        his = np.array([float(hi) for _, hi in self.stacks])
        y = p[:, 1] % 1.0
        idx = np.clip(np.searchsorted(los, y, side="right") - 1, 0, len(los) - 1)
        h = his[idx] - los[idx]
        yy = (y - los[idx]) / h
        return ((p[:, 0] >= m3) & (p[:, 0] <= 1 - m3)
                & (yy >= m3) & (yy <= 1 - m3) & (y >= los[idx]) & (y < his[idx]))


def make_geometry(st: Stage, nxt: Stage, w: int,
                  sharp_target_applicable: bool = False) -> StageGeometry:
    """Exact slice/stack layout for the stage pair (n, n+1)."""
    if st.q < 2:
        raise ValueError("map construction needs q_n >= 2")
    dec = build_Rn(st, nxt)
    n = st.n
    q, q_next, b_next = st.q, nxt.q, nxt.b
    comps = dec.components          # sorted by r
    xs = [Fraction(c.r * q, q_next) for c in comps] + [Fraction(1)]
    widths = [x1 - x0 for x0, x1 in zip(xs, xs[1:])]
    eps_nom = Fraction(1, (2 ** n) * b_next)
    eps1 = min(eps_nom, min(widths) / 2)
    shifts = [c.k % q for c in comps]
    if w < 1 or 2 * w > q_next:
        raise ValueError("need 1 <= w and 2w <= q_{n+1}")
    stacks: List[Tuple[Fraction, Fraction]] = []
    for j in range(q):
        base_j = Fraction(j, q)
        for c in comps:
            y0 = base_j + Fraction(c.r, q_next)
            h_full, t = divmod(c.f, w)
            if h_full == 0:
                stacks.append((y0, y0 + Fraction(c.f, q_next)))
                continue
            for x in range(h_full - 1):
                stacks.append((y0 + Fraction(x * w, q_next),
                               y0 + Fraction((x + 1) * w, q_next)))
            stacks.append((y0 + Fraction((h_full - 1) * w, q_next),
                           y0 + Fraction(c.f, q_next)))
    stacks.sort()
    total = sum((hi - lo for lo, hi in stacks), Fraction(0))
    if total != 1:
        raise AssertionError("A3 stacks do not tile the annulus")
    return StageGeometry(n=n, q=q, q_next=q_next, a_next=nxt.a, b_next=b_next,
                         dec=dec, eps1=eps1, eps1_nominal=eps_nom,
                         slice_x=xs, shifts=shifts, w=w, stacks=stacks,
                         nu=n + 2, sharp_target_applicable=sharp_target_applicable)


def build_a1(geom: StageGeometry) -> ShearMap:
    """Slice shear: rotates column i vertically by k(l_i)/q_n, with smooth
    ramps inside the width-eps1 gaps between columns (the last gap ramps
    back to 0).  Ramps occupy the middle 8/10 of each gap so the shear is
    constant on a neighborhood of every column, including the boundary."""
    if geom.eps1 >= min(x1 - x0 for x0, x1 in zip(geom.slice_x, geom.slice_x[1:])):
        raise ValueError("eps1 must be smaller than the narrowest column")
    q = geom.q
    regions = []
    b = len(geom.shifts)
    pad = geom.eps1 / 10
    for i in range(b):
        x0, x1 = geom.slice_x[i], geom.slice_x[i + 1]
        v = Fraction(geom.shifts[i], q)
        v_next = Fraction(geom.shifts[i + 1], q) if i + 1 < b else Fraction(0)
        regions.append((x0, x1 - geom.eps1 + pad, v, v))
        regions.append((x1 - geom.eps1 + pad, x1 - pad, v, v_next))
        regions.append((x1 - pad, x1, v_next, v_next))
    return ShearMap(regions, q=q, name=f"A1[n={geom.n}]")


def build_a2(geom: StageGeometry) -> CellQuasiRotation:
    return CellQuasiRotation(q=geom.q, nu=geom.nu, name=f"A2[n={geom.n}]")


def build_a3(geom: StageGeometry) -> StackedQuasiRotation:
    return StackedQuasiRotation(geom.stacks, nu=geom.nu,
                                equivariance_q=geom.q, name=f"A3[n={geom.n}]")


@dataclass
class StageBuild:
    geometry: StageGeometry
    a1: ShearMap
    a2: CellQuasiRotation
    a3: StackedQuasiRotation
    a: ComposedMap
    b_norm_used: float

    def e_contains(self, pts: np.ndarray) -> np.ndarray:
        """Sampled membership in E_{n+1} = E3 /\\ A3(E2) /\\ A3 A2(E1)."""
        p = _as_points(pts)
        ok = self.geometry.e3_contains(p)
        pre3 = self.a3.inverse(p)
        ok &= self.geometry.e2_contains(pre3)
        pre2 = self.a2.inverse(pre3)
        ok &= self.geometry.e1_contains(pre2[:, 0])
        return ok


def choose_w(st: Stage, nxt: Stage, b_norm: float) -> Tuple[int, bool]:
    """Generation column width from the measured norm, with a x2 safety
    factor; clamped to [1, q_next//4] so stacks stay conjugation-scalable."""
    denom = (2 ** (st.n + 1)) * st.q ** 2 * max(1.0, b_norm) * 2.0
    w = int(nxt.q / denom)
    w = max(1, min(w, nxt.q // 4 if nxt.q >= 8 else 1))
    applicable = w >= (2 ** st.n) * st.q * max(1.0, b_norm)
    return w, applicable


def compose_stage(st: Stage, nxt: Stage, b_norm: float = 1.0,
                  w_override: Optional[int] = None) -> StageBuild:
    """A_{n+1} = A3 A2 A1 for the stage pair, with w from the measured
    ||B_n||_1 unless overridden."""
    if w_override is not None:
        w, applicable = w_override, False
    else:
        w, applicable = choose_w(st, nxt, b_norm)
    geom = make_geometry(st, nxt, w, sharp_target_applicable=applicable)
    a1 = build_a1(geom)
    a2 = build_a2(geom)
    a3 = build_a3(geom)
    a = ComposedMap([a1, a2, a3], name=f"A[n={geom.n}]")
    return StageBuild(geometry=geom, a1=a1, a2=a2, a3=a3, a=a,
                      b_norm_used=b_norm)


@dataclass
class RunBuild:
    """All maps of a finite run: B_0 = id, B_{n+1} = A_{n+1} B_n,
    T_n = B_n^{-1} S_{p_n/q_n} B_n."""

    stages: List[Stage]
    builds: List[StageBuild]
    conjugacies: List[PlanarMap]       # B_0 .. B_N
    transforms: List[ComposedMap]      # T_0 .. T_N
    norm_grid: int = 24
    _norm_cache: dict = field(default_factory=dict)

    def stage_pair_build(self, n: int) -> StageBuild:
        return self.builds[n]

    def norm_b(self, n: int, k: int = 1) -> float:
        """Measured ||B_n||_k (finite differences, cached)."""
        key = (n, k)
        if key not in self._norm_cache:
            self._norm_cache[key] = estimate_norm(
                self.conjugacies[n], k=k, grid=self.norm_grid)
        return self._norm_cache[key]


def build_run(stages: Sequence[Stage], norm_grid: int = 24) -> RunBuild:
    """Build every stage map of the run (relaxed-scale stages expected)."""
    stages = list(stages)
    b_maps: List[PlanarMap] = [IdentityMap()]
    builds: List[StageBuild] = []
    run = RunBuild(stages=stages, builds=builds, conjugacies=b_maps,
                   transforms=[], norm_grid=norm_grid)
    for n in range(len(stages) - 1):
        bn = run.norm_b(n)
        sb = compose_stage(stages[n], stages[n + 1], b_norm=bn)
        builds.append(sb)
        b_maps.append(ComposedMap([b_maps[-1], sb.a], name=f"B[{n + 1}]"))
    run.transforms = [conjugate_rotation(b_maps[n], stages[n].angle(),
                                         name=f"T[{n}]")
                      for n in range(len(stages))]
    return run


# ---------------------------------------------------------------------------
# norm estimation (finite differences on a grid)
# ---------------------------------------------------------------------------

def _wrap_delta(d: np.ndarray) -> np.ndarray:
    """Reduce vertical displacement differences to the nearest lift."""
    return (d + 0.5) % 1.0 - 0.5


def _fd_jacobian(fn, pts: np.ndarray, step: float) -> np.ndarray:
    n = len(pts)
    jac = np.empty((n, 2, 2))
    for axis in range(2):
        dp = np.zeros_like(pts)
        dp[:, axis] = step
        hi = fn(pts + dp)
        lo = fn(pts - dp)
        jac[:, 0, axis] = (hi[:, 0] - lo[:, 0]) / (2 * step)
        jac[:, 1, axis] = _wrap_delta(hi[:, 1] - lo[:, 1]) / (2 * step)
    return jac


def estimate_norm(m: PlanarMap, k: int = 1, grid: int = 32,
                  step: float = 1e-5, include_inverse: bool = True) -> float:
    """Grid-sampled finite-difference estimate of ||m||_k.

    max over grid points and directions of |D^j| for 0 < j <= k, forward
    and (optionally) inverse; matrix norm is the max row sum.
    """
    if k < 1:
        raise ValueError("k >= 1")
    xs = np.linspace(2 * step, 1 - 2 * step, grid)
    ys = np.linspace(0.0, 1.0, grid, endpoint=False)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    fns = [m.forward]
    if include_inverse:
        fns.append(m.inverse)
    best = 0.0
    for fn in fns:
        jac = _fd_jacobian(fn, pts, step)
        row = np.abs(jac).sum(axis=2).max()
        best = max(best, float(row))
        if k >= 2:
            for axis in range(2):
                dp = np.zeros_like(pts)
                dp[:, axis] = step
                jhi = _fd_jacobian(fn, pts + dp, step)
                jlo = _fd_jacobian(fn, pts - dp, step)
                d2 = np.abs(jhi - jlo).max() / (2 * step)
                best = max(best, float(d2))
    return best
