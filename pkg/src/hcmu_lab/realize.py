"""Realize the existing non-minimal immersions by frame integration.

The one-parameter family solved here is the diagonal shape operator
h = diag(k1, k2) in the coframe w1 = mu dx, w2 = mu dy, with

    k1 = (K - c) / k2            (Gauss equation, exact by construction)
    dk2/dx = mu mu' (k1 - k2)/2  (Codazzi equation for the diagonal ansatz)

Given such a field, the first-order frame system for the position X and the
adapted frame (e1, e2, xi) in the flat model is integrated by RK4:

    along x:  X' = mu e1,  e1' = mu k1 xi - c mu X,  e2' = 0,
              xi' = -mu k1 e1
    along y:  X' = mu e2,  e1' = s e2,
              e2' = -s e1 + mu k2 xi - c mu X,      xi' = -mu k2 e2

with s = mu' mu / 2 the tangential rotation rate of the frame.  The ambient
model is R^3 for c = 0, the quadric <X, X> = 1/c in R^4 for c > 0, and the
same quadric in Minkowski space (signature -+++) for c < 0; the system
preserves the quadric and frame orthonormality exactly, so drift measures
integration error and Gauss-Codazzi failure.  Re-orthonormalization is
deliberately never applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, FrameDrift, PathLeavesDomain
from .fields import GridDomain, ShapeField
from .profile import CurvatureProfile, HcmuParams, curvature_at
from .textio import fmt17


# -- the diagonal Codazzi family ------------------------------------------------


@dataclass(frozen=True, eq=False)
class DiagonalFamily:
    """Sampled diagonal solution (k1, k2) over a curvature profile grid."""

    params: HcmuParams
    c: float
    k2_init: float
    xs: np.ndarray
    Ks: np.ndarray
    k1s: np.ndarray
    k2s: np.ndarray
    truncated: bool

    @property
    def x_min(self) -> float:
        return float(self.xs[0])

    @property
    def x_max(self) -> float:
        return float(self.xs[-1])


def _family_rhs(params: HcmuParams, c: float, K: float, k2: float):
    dK = 0.5 * params.mu_sq(K)
    mumup = 0.5 * params.mu_sq_prime(K)  # mu mu'
    k1 = (K - c) / k2
    dk2 = 0.5 * mumup * (k1 - k2)
    return dK, dk2


def _march_pair(params: HcmuParams, c: float, K: float, k2: float,
                h: float) -> tuple[float, float]:
    """One RK4 step of the coupled (K, k2) system."""
    f = lambda s: _family_rhs(params, c, s[0], s[1])
    s0 = (K, k2)
    a1 = f(s0)
    s1 = (K + 0.5 * h * a1[0], k2 + 0.5 * h * a1[1])
    a2 = f(s1)
    s2 = (K + 0.5 * h * a2[0], k2 + 0.5 * h * a2[1])
    a3 = f(s2)
    s3 = (K + h * a3[0], k2 + h * a3[1])
    a4 = f(s3)
    return (
        K + (h / 6.0) * (a1[0] + 2 * a2[0] + 2 * a3[0] + a4[0]),
        k2 + (h / 6.0) * (a1[1] + 2 * a2[1] + 2 * a3[1] + a4[1]),
    )


def solve_codazzi_family(profile: CurvatureProfile, c: float,
                         k2_init: float) -> DiagonalFamily:
    """Sample the diagonal family on the profile grid, anchored at x = 0.

    If k2 reaches zero inside the range, the family is truncated to the
    maximal subinterval around the anchor and flagged.
    """
    if k2_init == 0:
        raise ValueError("k2_init must be nonzero")
    xs = profile.xs
    anchor = int(np.argmin(np.abs(xs)))
    if abs(xs[anchor]) > 1e-9 * profile.step:
        raise ValueError("profile grid does not contain the anchor x = 0")
    h = profile.step
    n = xs.size

    Ks = np.empty(n)
    k2s = np.empty(n)
    Ks[anchor] = profile.k0
    k2s[anchor] = float(k2_init)
    lo_ok, hi_ok = 0, n - 1

    def dead(k2_old: float, k2_new: float) -> bool:
        # stop at a sign change, and already when the fixed step stops
        # resolving the local scale (k2 -> 0 makes k1 = (K-c)/k2 singular)
        return (not math.isfinite(k2_new) or k2_new * k2_init <= 0
                or abs(k2_new - k2_old) > 0.25 * abs(k2_old))

    K, k2 = profile.k0, float(k2_init)
    for i in range(anchor + 1, n):
        K, k2_new = _march_pair(profile.params, c, K, k2, h)
        if dead(k2, k2_new):
            hi_ok = i - 1
            break
        k2 = k2_new
        Ks[i], k2s[i] = K, k2
    K, k2 = profile.k0, float(k2_init)
    for i in range(anchor - 1, -1, -1):
        K, k2_new = _march_pair(profile.params, c, K, k2, -h)
        if dead(k2, k2_new):
            lo_ok = i + 1
            break
        k2 = k2_new
        Ks[i], k2s[i] = K, k2

    sl = slice(lo_ok, hi_ok + 1)
    Ks, k2s, xs_out = Ks[sl], k2s[sl], xs[sl]
    k1s = (Ks - c) / k2s
    truncated = (lo_ok, hi_ok) != (0, n - 1)
    return DiagonalFamily(profile.params, float(c), float(k2_init), xs_out,
                          Ks, k1s, k2s, truncated)


def family_shape_field(family: DiagonalFamily, grid: GridDomain) -> ShapeField:
    """Broadcast the family onto a grid whose columns sit on family samples."""
    idx = np.rint((grid.xs - family.xs[0]) / (family.xs[1] - family.xs[0]))
    idx = idx.astype(int)
    step = family.xs[1] - family.xs[0]
    if np.any(idx < 0) or np.any(idx >= family.xs.size) or np.any(
        np.abs(family.xs[np.clip(idx, 0, family.xs.size - 1)] - grid.xs)
        > 1e-9 * step
    ):
        raise ValueError("grid columns do not sit on family sample points")
    ones = np.ones((1, grid.ny))
    return ShapeField(grid, family.k1s[idx][:, None] * ones,
                      np.zeros((grid.nx, grid.ny)),
                      family.k2s[idx][:, None] * ones)


def minimal_attempt_inconsistency(params: HcmuParams, c: float,
                                  xs: np.ndarray, k0: float):
    """Force the minimal diagonal ansatz k1 = -k2 and report what breaks.

    k2 follows its Codazzi equation dk2/dx = -mu mu' k2 from the umbilic
    Gauss value at the left end; the returned defect is the leftover rate

        | 2 k2 k2' + mu^2/2 + 2 mu mu' k2^2 |

    (the amount by which the Gauss constraint k2^2 = c - K fails to be
    preserved), which reduces to mu^2/2 and so cannot vanish on any compact
    subinterval of (K2, K1).
    """
    xs = np.asarray(xs, dtype=float)
    Kl = curvature_at(params, k0, xs[0])
    if c <= Kl:
        raise ValueError("need c > K on the range for a real minimal seed")
    k2 = math.sqrt(c - Kl)
    k2s = np.empty(xs.size)
    k2s[0] = k2
    for i in range(xs.size - 1):
        h = xs[i + 1] - xs[i]
        # RK4 for dk2/dx = -mu mu' k2 with K(x) exact at the stage points
        Ka = curvature_at(params, k0, xs[i])
        Kb = curvature_at(params, k0, xs[i] + 0.5 * h)
        Kc = curvature_at(params, k0, xs[i + 1])
        ra = -0.5 * params.mu_sq_prime(Ka)
        rb = -0.5 * params.mu_sq_prime(Kb)
        rc = -0.5 * params.mu_sq_prime(Kc)
        s1 = ra * k2
        s2 = rb * (k2 + 0.5 * h * s1)
        s3 = rb * (k2 + 0.5 * h * s2)
        s4 = rc * (k2 + h * s3)
        k2 = k2 + (h / 6.0) * (s1 + 2 * s2 + 2 * s3 + s4)
        k2s[i + 1] = k2
    Ks = np.array([curvature_at(params, k0, x) for x in xs])
    mumup = 0.5 * params.mu_sq_prime(Ks)
    dk2 = -mumup * k2s
    defect = np.abs(2.0 * k2s * dk2 + 0.5 * params.mu_sq(Ks)
                    + 2.0 * mumup * k2s * k2s)
    return k2s, Ks, defect


# -- frame integration ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FrameState:
    """Position and adapted orthonormal frame in the flat model."""

    X: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    xi: np.ndarray

    def as_matrix(self) -> np.ndarray:
        return np.stack([self.X, self.e1, self.e2, self.xi])


@dataclass(frozen=True, eq=False)
class FrameTables:
    """Coefficients on the half-step grid along x: index k is x0 + k hx/2."""

    mu: np.ndarray
    s: np.ndarray   # mu' mu / 2
    k1: np.ndarray
    k2: np.ndarray
    K: np.ndarray


@dataclass(eq=False)
class Mesh:
    """Immersed grid: vertex (i, j) |-> flat index i*ny + j, two triangles
    per grid cell, outward normal per vertex."""

    vertices: np.ndarray
    faces: np.ndarray
    normals: np.ndarray
    nx: int
    ny: int
    hx: float
    hy: float
    x0: float
    y0: float
    c: float

    def __post_init__(self):
        if self.vertices.shape[0] != self.nx * self.ny:
            raise ValueError("vertex count disagrees with nx * ny")
        if self.faces.size and (
            self.faces.min() < 0 or self.faces.max() >= self.nx * self.ny
        ):
            raise ValueError("face references an invalid vertex")


def ambient_signature(c: float, dim: int) -> np.ndarray:
    sig = np.ones(dim)
    if c < 0:
        sig[0] = -1.0
    return sig


def ambient_inner(u: np.ndarray, v: np.ndarray, sig: np.ndarray):
    return np.sum(sig * u * v, axis=-1)


def _initial_frame(c: float) -> FrameState:
    if c == 0:
        return FrameState(np.zeros(3), np.array([1.0, 0, 0]),
                          np.array([0, 1.0, 0]), np.array([0, 0, 1.0]))
    if c > 0:
        r = 1.0 / math.sqrt(c)
        return FrameState(np.array([0, 0, 0, r]), np.array([1.0, 0, 0, 0]),
                          np.array([0, 1.0, 0, 0]), np.array([0, 0, 1.0, 0]))
    r = 1.0 / math.sqrt(-c)
    return FrameState(np.array([r, 0, 0, 0]), np.array([0, 1.0, 0, 0]),
                      np.array([0, 0, 1.0, 0]), np.array([0, 0, 0, 1.0]))


def _dstate_x(S: np.ndarray, mu: float, k1: float, c: float) -> np.ndarray:
    X, e1, e2, xi = S
    out = np.empty_like(S)
    out[0] = mu * e1
    out[1] = mu * k1 * xi - c * mu * X
    out[2] = 0.0
    out[3] = -mu * k1 * e1
    return out


def _dstate_y(S: np.ndarray, mu: float, s: float, k2: float,
              c: float) -> np.ndarray:
    X, e1, e2, xi = S
    out = np.empty_like(S)
    out[0] = mu * e2
    out[1] = s * e2
    out[2] = -s * e1 + mu * k2 * xi - c * mu * X
    out[3] = -mu * k2 * e2
    return out


def _rk4_x(S, h, c, tab: FrameTables, k: int, direction: int = 1) -> np.ndarray:
    """Step one full hx from half-grid index k (signed h, matching stages)."""
    k0, k1i, k2i = k, k + direction, k + 2 * direction
    m0, m1, m2 = tab.mu[k0], tab.mu[k1i], tab.mu[k2i]
    a0, a1, a2 = tab.k1[k0], tab.k1[k1i], tab.k1[k2i]
    s1 = _dstate_x(S, m0, a0, c)
    s2 = _dstate_x(S + 0.5 * h * s1, m1, a1, c)
    s3 = _dstate_x(S + 0.5 * h * s2, m1, a1, c)
    s4 = _dstate_x(S + h * s3, m2, a2, c)
    return S + (h / 6.0) * (s1 + 2 * s2 + 2 * s3 + s4)


def _rk4_y(S, h, c, mu, s, k2) -> np.ndarray:
    s1 = _dstate_y(S, mu, s, k2, c)
    s2 = _dstate_y(S + 0.5 * h * s1, mu, s, k2, c)
    s3 = _dstate_y(S + 0.5 * h * s2, mu, s, k2, c)
    s4 = _dstate_y(S + h * s3, mu, s, k2, c)
    return S + (h / 6.0) * (s1 + 2 * s2 + 2 * s3 + s4)


def _frame_defect(S: np.ndarray, c: float, sig: np.ndarray) -> float:
    frame = S[1:]
    gram = np.array([[ambient_inner(a, b, sig) for b in frame] for a in frame])
    worst = float(np.max(np.abs(gram - np.eye(3))))
    if c != 0:
        worst = max(worst, abs(ambient_inner(S[0], S[0], sig) - 1.0 / c))
        worst = max(worst, float(np.max(np.abs(
            [ambient_inner(S[0], v, sig) for v in frame]
        ))))
    return worst


def family_tables(family: DiagonalFamily, x0: float, hx: float,
                  nx: int) -> FrameTables:
    """Coefficients on the half-step lattice x0 + k hx/2, 0 <= k <= 2(nx-1).

    K comes from the exact closed-form inversion at every lattice point;
    k2 is marched there with the coupled RK4 (K reset to the exact value at
    each recorded point so no secular drift accumulates).
    """
    params, c = family.params, family.c
    xs_half = x0 + 0.5 * hx * np.arange(2 * nx - 1)
    if xs_half[0] < family.x_min - 1e-12 or xs_half[-1] > family.x_max + 1e-12:
        raise ValueError("grid leaves the family range")
    anchor_k0 = float(family.Ks[int(np.argmin(np.abs(family.xs)))])
    K_half = np.array([curvature_at(params, anchor_k0, x) for x in xs_half])

    # march k2 from the anchor to the left edge, then across the lattice
    k2 = family.k2_init
    K = anchor_k0
    x = 0.0
    target = xs_half[0]
    n0 = max(1, int(math.ceil(abs(target - x) / (0.5 * hx))))
    for _ in range(n0):
        K, k2 = _march_pair(params, c, K, k2, (target - x) / n0)
    k2_half = np.empty(xs_half.size)
    k2_half[0] = k2
    K = K_half[0]
    for k in range(xs_half.size - 1):
        K, k2 = _march_pair(params, c, K, k2, 0.5 * hx)
        k2_half[k + 1] = k2
        K = K_half[k + 1]

    mu = params.mu(K_half)
    s = 0.25 * params.mu_sq_prime(K_half)  # mu' mu / 2
    k1_half = (K_half - c) / k2_half
    return FrameTables(mu, s, k1_half, k2_half, K_half)


def _mesh_faces(nx: int, ny: int) -> np.ndarray:
    i, j = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1), indexing="ij")
    a = (i * ny + j).ravel()
    b = ((i + 1) * ny + j).ravel()
    cidx = ((i + 1) * ny + j + 1).ravel()
    d = (i * ny + j + 1).ravel()
    return np.concatenate([np.stack([a, b, cidx], 1),
                           np.stack([a, cidx, d], 1)]).astype(np.int64)


def integrate_frame_tables(tables: FrameTables, nx: int, ny: int, hx: float,
                           hy: float, x0: float, y0: float, c: float,
                           frame_tol: float = 1e-6) -> Mesh:
    """Integrate the frame system over the grid from the given coefficients.

    The spine runs along x at j = 0, columns run along y.  Orthonormality
    and (for c != 0) the quadric constraint are monitored at every node and
    drift beyond frame_tol raises FrameDrift; drift is a diagnostic, so it
    is never silently corrected.
    """
    dim = 3 if c == 0 else 4
    sig = ambient_signature(c, dim)
    init = _initial_frame(c)
    verts = np.empty((nx * ny, dim))
    norms = np.empty((nx * ny, dim))

    spine = init.as_matrix()
    for i in range(nx):
        if i > 0:
            spine = _rk4_x(spine, hx, c, tables, 2 * (i - 1))
        S = spine.copy()
        mu_i = tables.mu[2 * i]
        s_i = tables.s[2 * i]
        k2_i = tables.k2[2 * i]
        for j in range(ny):
            if j > 0:
                S = _rk4_y(S, hy, c, mu_i, s_i, k2_i)
            defect = _frame_defect(S, c, sig)
            if defect > frame_tol:
                raise FrameDrift(
                    f"frame drift {defect:.3e} at node ({i}, {j}) exceeds "
                    f"{frame_tol:g}; reduce the step"
                )
            verts[i * ny + j] = S[0]
            norms[i * ny + j] = S[3]
    return Mesh(verts, _mesh_faces(nx, ny), norms, nx, ny, hx, hy, x0, y0, c)


def integrate_frame(family: DiagonalFamily, grid: GridDomain,
                    frame_tol: float = 1e-6,
                    residual_gate: float = 1e-6) -> Mesh:
    """Realize the family over a grid; requires the family to be integrable.

    The Codazzi rate of the sampled family is checked by finite differences
    before any integration happens.
    """
    span = (grid.x0 - grid.hx, grid.x0 + grid.nx * grid.hx)
    gap = family_codazzi_gap(family, x_range=span)
    if gap > residual_gate:
        raise ValueError(
            f"family Codazzi gap {gap:.3e} exceeds the integrability gate "
            f"{residual_gate:g}"
        )
    tables = family_tables(family, grid.x0, grid.hx, grid.nx)
    return integrate_frame_tables(tables, grid.nx, grid.ny, grid.hx, grid.hy,
                                  grid.x0, grid.y0, family.c, frame_tol)


def family_codazzi_gap(family: DiagonalFamily, x_range=None) -> float:
    """max |dk2/dx - mu mu' (k1 - k2)/2| along the family, by central diff.

    x_range restricts the check (residuals near a zero-crossing truncation
    edge are meaningless for a mesh that never goes there).
    """
    if family.xs.size < 5:
        raise ValueError("family too short to difference")
    h = family.xs[1] - family.xs[0]
    k2 = family.k2s
    dk2 = (-k2[4:] + 8.0 * k2[3:-1] - 8.0 * k2[1:-3] + k2[:-4]) / (12.0 * h)
    mumup = 0.5 * family.params.mu_sq_prime(family.Ks[2:-2])
    rhs = 0.5 * mumup * (family.k1s[2:-2] - family.k2s[2:-2])
    gap = np.abs(dk2 - rhs)
    if x_range is not None:
        xs = family.xs[2:-2]
        sel = (xs >= x_range[0]) & (xs <= x_range[1])
        if not np.any(sel):
            raise ValueError("x_range contains no family sample")
        gap = gap[sel]
    return float(np.max(gap))


def transport_frame(family: DiagonalFamily, grid: GridDomain,
                    nodes) -> FrameState:
    """Integrate the frame from the grid origin along a lattice polyline."""
    tables = family_tables(family, grid.x0, grid.hx, grid.nx)
    c = family.c
    S = _initial_frame(c).as_matrix()
    nodes = list(nodes)
    if nodes and nodes[0] != (0, 0):
        raise PathLeavesDomain("frame transport must start at the grid origin")
    for (i0, j0), (i1, j1) in zip(nodes, nodes[1:]):
        for i, j in ((i0, j0), (i1, j1)):
            if not (0 <= i < grid.nx and 0 <= j < grid.ny):
                raise PathLeavesDomain(f"node ({i}, {j}) outside the grid")
        if i0 != i1 and j0 != j1:
            raise PathLeavesDomain("path segments must follow lattice lines")
        if j0 == j1:
            step = 1 if i1 > i0 else -1
            for i in range(i0, i1, step):
                S = _rk4_x(S, step * grid.hx, c, tables, 2 * i, direction=step)
        else:
            mu_i = tables.mu[2 * i0]
            s_i = tables.s[2 * i0]
            k2_i = tables.k2[2 * i0]
            step = 1 if j1 > j0 else -1
            for _ in range(abs(j1 - j0)):
                S = _rk4_y(S, step * grid.hy, c, mu_i, s_i, k2_i)
    return FrameState(S[0], S[1], S[2], S[3])


# -- mesh verification ----------------------------------------------------------


@dataclass(frozen=True)
class ImmersionReport:
    metric_rel_err: float
    offdiag_err: float
    k1_rel_err: float
    k2_rel_err: float
    weingarten_spread: float
    mean_curv_range: float
    cmc_flag: bool
    quadric_drift: float
    gauss_defect_rel_err: float

    def to_lines(self) -> list[str]:
        return [
            f"metric_rel_err={fmt17(self.metric_rel_err)}",
            f"offdiag_err={fmt17(self.offdiag_err)}",
            f"k1_rel_err={fmt17(self.k1_rel_err)}",
            f"k2_rel_err={fmt17(self.k2_rel_err)}",
            f"weingarten_spread={fmt17(self.weingarten_spread)}",
            f"mean_curv_range={fmt17(self.mean_curv_range)}",
            f"cmc_flag={'true' if self.cmc_flag else 'false'}",
            f"quadric_drift={fmt17(self.quadric_drift)}",
            f"gauss_defect_rel_err={fmt17(self.gauss_defect_rel_err)}",
        ]


def angle_defect_curvature(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """Discrete Gauss curvature (angle defect over barycentric area).

    Returns (K_disc, valid_mask), both over all vertices; only interior
    vertices carry the full triangle ring and are marked valid.
    """
    dim = mesh.vertices.shape[1]
    sig = ambient_signature(mesh.c, dim)
    V = mesh.vertices
    angle_sum = np.zeros(V.shape[0])
    area_sum = np.zeros(V.shape[0])
    F = mesh.faces
    for corner in range(3):
        p = V[F[:, corner]]
        q = V[F[:, (corner + 1) % 3]]
        r = V[F[:, (corner + 2) % 3]]
        u = q - p
        w = r - p
        uu = ambient_inner(u, u, sig)
        ww = ambient_inner(w, w, sig)
        uw = ambient_inner(u, w, sig)
        cosang = np.clip(uw / np.sqrt(uu * ww), -1.0, 1.0)
        np.add.at(angle_sum, F[:, corner], np.arccos(cosang))
        gram = uu * ww - uw * uw
        np.add.at(area_sum, F[:, corner], 0.5 * np.sqrt(np.maximum(gram, 0.0)) / 3.0)
    K_disc = (2.0 * math.pi - angle_sum) / area_sum
    valid = np.zeros(V.shape[0], dtype=bool)
    idx = np.arange(V.shape[0]).reshape(mesh.nx, mesh.ny)
    valid[idx[1:-1, 1:-1].ravel()] = True
    return K_disc, valid


def _d4(A: np.ndarray, h: float, axis: int) -> np.ndarray:
    """4th-order central first derivative; output loses two nodes per side."""
    A = np.moveaxis(A, axis, 0)
    out = (-A[4:] + 8.0 * A[3:-1] - 8.0 * A[1:-3] + A[:-4]) / (12.0 * h)
    return np.moveaxis(out, 0, axis)


@dataclass(frozen=True, eq=False)
class RecoveredForms:
    """First/second fundamental form data re-derived from mesh differences.

    g11, k1_est live on rows 2..nx-3 (full columns); g22, k2_est on columns
    2..ny-3 (full rows); g12 and H on the common interior.
    """

    g11: np.ndarray
    g22: np.ndarray
    g12: np.ndarray
    k1_est: np.ndarray
    k2_est: np.ndarray
    H: np.ndarray


def recover_fundamental_forms(mesh: Mesh) -> RecoveredForms:
    nx, ny = mesh.nx, mesh.ny
    if nx < 5 or ny < 5:
        raise ValueError("mesh too small for the 4th-order recovery stencils")
    dim = mesh.vertices.shape[1]
    sig = ambient_signature(mesh.c, dim)
    V = mesh.vertices.reshape(nx, ny, dim)
    Nrm = mesh.normals.reshape(nx, ny, dim)
    Xx = _d4(V, mesh.hx, 0)          # (nx-4, ny, dim)
    Xy = _d4(V, mesh.hy, 1)          # (nx, ny-4, dim)
    g11 = ambient_inner(Xx, Xx, sig)
    g22 = ambient_inner(Xy, Xy, sig)
    g12 = ambient_inner(Xx[:, 2:-2], Xy[2:-2, :], sig)
    Nx = _d4(Nrm, mesh.hx, 0)
    Ny = _d4(Nrm, mesh.hy, 1)
    k1_est = -ambient_inner(Nx, Xx, sig) / g11
    k2_est = -ambient_inner(Ny, Xy, sig) / g22
    H = 0.5 * (k1_est[:, 2:-2] + k2_est[2:-2, :])
    return RecoveredForms(g11, g22, g12, k1_est, k2_est, H)


def verify_immersion(mesh: Mesh, family: DiagonalFamily,
                     cmc_tol: float = 1e-6) -> ImmersionReport:
    """Re-derive the two fundamental forms from the mesh and compare.

    The induced metric comes from differences of the vertices, the shape
    operator from differences of the stored normals.  The sampled (K, H)
    pairs are grouped per grid column (K is a function of x alone), so
    single-valuedness of the mean curvature is the column spread.
    """
    nx, ny = mesh.nx, mesh.ny
    forms = recover_fundamental_forms(mesh)
    tables = family_tables(family, mesh.x0, mesh.hx, nx)
    mu = tables.mu[::2]
    k1_ref = tables.k1[::2]
    k2_ref = tables.k2[::2]

    mu_sq_i = (mu * mu)[2:-2, None]
    metric_rel = max(
        float(np.max(np.abs(forms.g11 - mu_sq_i) / mu_sq_i)),
        float(np.max(np.abs(forms.g22 - (mu * mu)[:, None]) / (mu * mu)[:, None])),
    )
    offdiag = float(np.max(np.abs(forms.g12) / mu_sq_i))

    k1_rel = float(np.max(np.abs(forms.k1_est - k1_ref[2:-2, None])
                          / np.abs(k1_ref[2:-2, None])))
    k2_rel = float(np.max(np.abs(forms.k2_est - k2_ref[:, None])
                          / np.abs(k2_ref[:, None])))

    H = forms.H
    spread = float(np.max(H.max(axis=1) - H.min(axis=1)))
    H_cols = H.mean(axis=1)
    h_range = float(H_cols.max() - H_cols.min())
    cmc = h_range < cmc_tol * max(1.0, float(np.max(np.abs(H_cols))))

    drift = 0.0
    if mesh.c != 0:
        sig = ambient_signature(mesh.c, mesh.vertices.shape[1])
        drift = float(np.max(np.abs(
            ambient_inner(mesh.vertices, mesh.vertices, sig) - 1.0 / mesh.c
        )))

    K_disc, valid = angle_defect_curvature(mesh)
    K_ref = np.repeat(tables.K[::2], ny)
    gauss_rel = float(np.max(
        np.abs(K_disc[valid] - K_ref[valid]) / np.abs(K_ref[valid])
    ))

    return ImmersionReport(metric_rel, offdiag, k1_rel, k2_rel, spread,
                           h_range, cmc, drift, gauss_rel)


# -- mesh text format -----------------------------------------------------------


def export_mesh(mesh: Mesh, path):
    """Header comments, then v / vn / f records at 17 significant digits."""
    with open(path, "w") as fh:
        fh.write("# hcmu-mesh 1\n")
        fh.write(f"# nx,ny,hx,hy = {mesh.nx},{mesh.ny},{fmt17(mesh.hx)},"
                 f"{fmt17(mesh.hy)}\n")
        fh.write(f"# origin = {fmt17(mesh.x0)},{fmt17(mesh.y0)}\n")
        fh.write(f"# c = {fmt17(mesh.c)}\n")
        for row in mesh.vertices:
            fh.write("v " + " ".join(fmt17(v) for v in row) + "\n")
        for row in mesh.normals:
            fh.write("vn " + " ".join(fmt17(v) for v in row) + "\n")
        for tri in mesh.faces:
            fh.write(f"f {tri[0] + 1} {tri[1] + 1} {tri[2] + 1}\n")


def parse_mesh(path) -> Mesh:
    meta: dict = {}
    verts: list[list[float]] = []
    norms: list[list[float]] = []
    faces: list[list[int]] = []
    stage = 0  # 0: v, 1: vn, 2: f
    with open(path) as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("hcmu-mesh"):
                    continue
                if "=" not in body:
                    raise FormatError(f"bad header comment {line!r}", ln)
                key, value = (t.strip() for t in body.split("=", 1))
                try:
                    if key == "nx,ny,hx,hy":
                        nx, ny, hx, hy = value.split(",")
                        meta.update(nx=int(nx), ny=int(ny), hx=float(hx),
                                    hy=float(hy))
                    elif key == "origin":
                        x0, y0 = value.split(",")
                        meta.update(x0=float(x0), y0=float(y0))
                    elif key == "c":
                        meta["c"] = float(value)
                    else:
                        raise FormatError(f"unknown header key {key!r}", ln)
                except ValueError:
                    raise FormatError(f"bad header value {value!r}", ln) from None
                continue
            parts = line.split()
            try:
                if parts[0] == "v":
                    if stage != 0:
                        raise FormatError("vertex after normals or faces", ln)
                    if len(parts) not in (4, 5):
                        raise FormatError("vertex needs 3 or 4 coordinates", ln)
                    verts.append([float(t) for t in parts[1:]])
                elif parts[0] == "vn":
                    if stage > 1:
                        raise FormatError("normal after faces", ln)
                    stage = 1
                    norms.append([float(t) for t in parts[1:]])
                elif parts[0] == "f":
                    stage = 2
                    if len(parts) != 4:
                        raise FormatError("face needs exactly 3 indices", ln)
                    tri = [int(t) - 1 for t in parts[1:]]
                    if min(tri) < 0 or max(tri) >= len(verts):
                        raise FormatError("face index out of range", ln)
                    faces.append(tri)
                else:
                    raise FormatError(f"unknown record {parts[0]!r}", ln)
            except ValueError:
                raise FormatError(f"bad number in {line!r}", ln) from None
    for key in ("nx", "ny", "hx", "hy", "x0", "y0", "c"):
        if key not in meta:
            raise FormatError(f"missing header entry for {key}")
    if norms and len(norms) != len(verts):
        raise FormatError("normal count disagrees with vertex count")
    dim = len(verts[0]) if verts else (3 if meta["c"] == 0 else 4)
    if any(len(v) != dim for v in verts) or any(len(v) != dim for v in norms):
        raise FormatError("inconsistent coordinate dimension")
    vertices = np.array(verts).reshape(len(verts), dim)
    normals = (np.array(norms).reshape(len(norms), dim)
               if norms else np.zeros((len(verts), dim)))
    face_arr = (np.array(faces, dtype=np.int64)
                if faces else np.zeros((0, 3), dtype=np.int64))
    return Mesh(vertices, face_arr, normals, meta["nx"], meta["ny"],
                meta["hx"], meta["hy"], meta["x0"], meta["y0"], meta["c"])
