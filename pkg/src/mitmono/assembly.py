"""Loop-network assembly: incidence, resistance, partial inductance, coil coupling.

Branch ``b`` is a grid edge; its current is the flux crossing that edge and
flows along a straight filament joining the centres of the two cells sharing
the edge (boundary edges reach into a mirrored ghost cell and never carry
current). Loop ``k`` circulates counter-clockwise through the four cells
around interior node ``k``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .constants import MU0
from .errors import ValidationError
from .geometry import CoilSet, GridSpec, ResistivityMap, Scenario

_KM = MU0 / (4 * np.pi)


@dataclass(frozen=True)
class BranchNetwork:
    grid: GridSpec
    start: np.ndarray  # (n_b, 3)
    end: np.ndarray  # (n_b, 3)
    length: np.ndarray  # (n_b,)
    axis: np.ndarray  # (n_b,) 0 = x-directed filament, 1 = y-directed
    cells: np.ndarray  # (n_b, 2) adjacent cells, -1 where the edge is on the boundary

    @property
    def n_branches(self) -> int:
        return self.length.size

    @property
    def cross_section(self) -> float:
        return self.grid.d * self.grid.h

    @property
    def interior(self) -> np.ndarray:
        return np.all(self.cells >= 0, axis=1)


@dataclass(frozen=True)
class LoopBasis:
    W: np.ndarray  # (n_b, n_c) entries in {-1, 0, 1}

    @property
    def n_loops(self) -> int:
        return self.W.shape[1]


def _x_branch(grid, i, j):
    return j * (grid.nx + 1) + i


def _y_branch(grid, i, j):
    return grid.ny * (grid.nx + 1) + j * grid.nx + i


def assemble_loop_basis(grid: GridSpec):
    nx, ny, h = grid.nx, grid.ny, grid.h
    ox, oy = grid.origin
    starts, ends, axes, cells = [], [], [], []
    for j in range(ny):
        for i in range(nx + 1):
            y = oy + (j + 0.5) * h
            starts.append((ox + (i - 0.5) * h, y, 0.0))
            ends.append((ox + (i + 0.5) * h, y, 0.0))
            axes.append(0)
            cells.append((grid.cell_index(i - 1, j) if i > 0 else -1,
                          grid.cell_index(i, j) if i < nx else -1))
    for j in range(ny + 1):
        for i in range(nx):
            x = ox + (i + 0.5) * h
            starts.append((x, oy + (j - 0.5) * h, 0.0))
            ends.append((x, oy + (j + 0.5) * h, 0.0))
            axes.append(1)
            cells.append((grid.cell_index(i, j - 1) if j > 0 else -1,
                          grid.cell_index(i, j) if j < ny else -1))
    start, end = np.array(starts), np.array(ends)
    net = BranchNetwork(
        grid, start, end, np.linalg.norm(end - start, axis=1), np.array(axes), np.array(cells)
    )

    W = np.zeros((net.n_branches, grid.n_loops))
    for j in range(1, ny):
        for i in range(1, nx):
            k = (j - 1) * (nx - 1) + (i - 1)
            W[_x_branch(grid, i, j - 1), k] = 1.0
            W[_y_branch(grid, i, j), k] = 1.0
            W[_x_branch(grid, i, j), k] = -1.0
            W[_y_branch(grid, i - 1, j), k] = -1.0
    W.setflags(write=False)
    return net, LoopBasis(W)


def branch_resistivity(network: BranchNetwork, eta: ResistivityMap) -> np.ndarray:
    """Arithmetic mean of the resistivities of the cells adjacent to each branch."""
    vals = np.asarray(eta.values)
    c = network.cells
    a = np.where(c[:, 0] >= 0, vals[np.maximum(c[:, 0], 0)], 0.0)
    b = np.where(c[:, 1] >= 0, vals[np.maximum(c[:, 1], 0)], 0.0)
    return (a + b) / (c >= 0).sum(axis=1)


def assemble_resistance(network: BranchNetwork, loop_basis: LoopBasis, eta_map) -> np.ndarray:
    if not isinstance(eta_map, ResistivityMap):
        eta_map = ResistivityMap(eta_map)
    if len(eta_map) != network.grid.n_cells:
        raise ValidationError("resistivity map does not match the grid", "resistivity")
    r_b = branch_resistivity(network, eta_map) * network.length / network.cross_section
    W = loop_basis.W
    R = W.T @ (r_b[:, None] * W)
    return (R + R.T) / 2


def self_partial_inductance(length, radius):
    """Self partial inductance of a straight round filament, ``(mu0 l / 2pi)(ln(2l/r) - 1)``."""
    length = np.asarray(length, dtype=float)
    return MU0 * length / (2 * np.pi) * (np.log(2 * length / radius) - 1.0)


def _g(u, dist):
    # Second antiderivative of 1/sqrt(u^2 + dist^2); at dist = 0 the log(dist)
    # terms cancel across the four-term combination and are dropped.
    u = np.asarray(u, dtype=float)
    dist = np.broadcast_to(np.asarray(dist, dtype=float), u.shape)
    out = np.empty_like(u)
    pos = dist > 0
    up, dp = u[pos], dist[pos]
    out[pos] = up * np.arcsinh(up / dp) - np.hypot(up, dp)
    au = np.abs(u[~pos])
    with np.errstate(divide="ignore", invalid="ignore"):
        out[~pos] = np.where(au > 0, au * np.log(au), 0.0) - au
    return out


def parallel_mutual_inductance(l1, l2, offset, dist):
    """Mutual partial inductance of two parallel, equally oriented filaments.

    Filament 1 spans ``[0, l1]`` and filament 2 spans ``[offset, offset + l2]``
    along a common direction; ``dist`` is their perpendicular separation.
    Collinear filaments (``dist == 0``) must not overlap.
    """
    l1, l2, s, dist = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (l1, l2, offset, dist)))
    overlap = (dist == 0) & (s < l1) & (s + l2 > 0)
    if np.any(overlap):
        raise ValidationError("collinear filaments overlap", "filaments")
    m = _g(s + l2, dist) - _g(s + l2 - l1, dist) - _g(s, dist) + _g(s - l1, dist)
    return _KM * m


def partial_inductance_matrix(network: BranchNetwork, radius) -> np.ndarray:
    n = network.n_branches
    Lb = np.zeros((n, n))
    for ax in (0, 1):
        idx = np.flatnonzero(network.axis == ax)
        along = network.start[idx, ax]
        across = network.start[idx, 1 - ax]
        ln = network.length[idx]
        s = along[None, :] - along[:, None]
        dist = np.abs(across[None, :] - across[:, None])
        off = ~np.eye(idx.size, dtype=bool)
        block = np.zeros((idx.size, idx.size))
        l1 = np.broadcast_to(ln[:, None], s.shape)
        l2 = np.broadcast_to(ln[None, :], s.shape)
        block[off] = parallel_mutual_inductance(l1[off], l2[off], s[off], dist[off])
        block[~off] = self_partial_inductance(ln, radius)
        Lb[np.ix_(idx, idx)] = block
    return (Lb + Lb.T) / 2


def assemble_inductance(network: BranchNetwork, loop_basis: LoopBasis, wire_radius=None) -> np.ndarray:
    if wire_radius is None:
        wire_radius = network.grid.h / 4
    lmin = float(network.length.min())
    if not (np.isfinite(wire_radius) and 0 < wire_radius < lmin / 2):
        raise ValidationError(
            f"wire radius must lie in (0, {lmin / 2:g}), got {wire_radius!r}", "wire_radius"
        )
    Lb = partial_inductance_matrix(network, wire_radius)
    W = loop_basis.W
    L = W.T @ Lb @ W
    return (L + L.T) / 2


# --- Neumann line integrals -------------------------------------------------

def line_potential(P, A, B):
    """Exact ``int_seg dl / |P - x|`` for points ``P (m,3)`` and segments ``A->B (k,3)``."""
    seg = B - A
    ls = np.linalg.norm(seg, axis=1)
    ra = np.linalg.norm(P[:, None, :] - A[None, :, :], axis=2)
    rb = np.linalg.norm(P[:, None, :] - B[None, :, :], axis=2)
    s = ra + rb
    return np.log((s + ls) / (s - ls))


def _point_segment_distance(P, A, B):
    seg = B - A
    ll = np.einsum("ij,ij->i", seg, seg)
    t = np.einsum("mkj,kj->mk", P[:, None, :] - A[None, :, :], seg) / ll
    t = np.clip(t, 0.0, 1.0)
    closest = A[None, :, :] + t[..., None] * seg[None, :, :]
    return np.linalg.norm(P[:, None, :] - closest, axis=2)


def _pieces(A, B, inner_A, inner_B, piece_ratio=0.5, max_pieces=256):
    """Subdivision count per outer segment so each piece is short relative to its clearance."""
    ls = np.linalg.norm(B - A, axis=1)
    probe = np.concatenate([A, (A + B) / 2, B])
    clear = _point_segment_distance(probe, inner_A, inner_B).min(axis=1)
    clear = clear.reshape(3, -1).min(axis=0)
    if np.any(clear <= 0):
        raise ValidationError("filaments intersect", "coils")
    return np.clip(np.ceil(ls / (piece_ratio * clear)), 1, max_pieces).astype(int)


def _gauss_points(A, B, pieces, order):
    """Quadrature points, weights and owner index along a set of segments."""
    xi, wi = np.polynomial.legendre.leggauss(order)
    pts, wts, own = [], [], []
    for k, (a, b, n) in enumerate(zip(A, B, pieces)):
        edges = np.linspace(0.0, 1.0, n + 1)
        lo, hi = edges[:-1, None], edges[1:, None]
        t = (lo + (hi - lo) * (xi[None, :] + 1) / 2).ravel()
        w = ((hi - lo) / 2 * wi[None, :]).ravel() * np.linalg.norm(b - a)
        pts.append(a + t[:, None] * (b - a))
        wts.append(w)
        own.append(np.full(t.size, k))
    return np.concatenate(pts), np.concatenate(wts), np.concatenate(own)


def segment_set_mutual(A, B, inner_A, inner_B, order=8):
    """Neumann mutual inductance between each outer segment ``A->B`` and a polyline.

    Returns a vector with one entry per outer segment. Gauss-Legendre runs
    along the outer segments; the inner integral is exact per segment.
    """
    A, B = np.atleast_2d(A).astype(float), np.atleast_2d(B).astype(float)
    pieces = _pieces(A, B, inner_A, inner_B)
    pts, wts, own = _gauss_points(A, B, pieces, order)
    t_out = (B - A) / np.linalg.norm(B - A, axis=1)[:, None]
    t_in = (inner_B - inner_A) / np.linalg.norm(inner_B - inner_A, axis=1)[:, None]
    dots = t_out @ t_in.T  # (n_out, n_in)
    kern = line_potential(pts, inner_A, inner_B)  # (m, n_in)
    per_point = np.einsum("mk,mk->m", kern, dots[own])
    return _KM * np.bincount(own, weights=wts * per_point, minlength=A.shape[0])


def neumann_mutual(poly_a, poly_b, order=8) -> float:
    """Mutual inductance of two closed filament polylines (vertex arrays, closed)."""
    pa, pb = np.asarray(poly_a, dtype=float), np.asarray(poly_b, dtype=float)
    return float(segment_set_mutual(pa[:-1], pa[1:], pb[:-1], pb[1:], order).sum())


def assemble_coupling(network: BranchNetwork, loop_basis: LoopBasis, coils: CoilSet,
                      workers: int = 1, order: int = 8) -> np.ndarray:
    """Loop-to-coil mutual inductances ``M (n_c, n_s)``."""
    from .geometry import check_coils_clear

    check_coils_clear(network.grid, coils)
    active = np.flatnonzero(np.any(loop_basis.W != 0, axis=1))
    A, B = network.start[active], network.end[active]

    def column(coil):
        ca, cb = coil.segments()
        col = np.zeros(network.n_branches)
        col[active] = segment_set_mutual(A, B, ca, cb, order)
        return col

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            cols = list(ex.map(column, coils.coils))
    else:
        cols = [column(c) for c in coils.coils]
    Mb = np.column_stack(cols)
    return loop_basis.W.T @ Mb


@dataclass(frozen=True)
class OperatorMatrices:
    """Loop-space matrices: ``L`` (H), ``R`` (Ohm), ``M`` (H, loops x coils).

    ``M`` plays the source-to-conductor coupling and ``M.T`` the
    conductor-to-source coupling, so the two are adjoint by construction.
    """

    L: np.ndarray
    R: np.ndarray
    M: np.ndarray

    @property
    def n_c(self) -> int:
        return self.L.shape[0]

    @property
    def n_s(self) -> int:
        return self.M.shape[1]

    @property
    def A_cs(self) -> np.ndarray:
        return self.M

    @property
    def A_sc(self) -> np.ndarray:
        return self.M.T

    @cached_property
    def modes(self):
        from .spectral import solve_modes

        return solve_modes(self.L, self.R)

    def with_resistance(self, R) -> "OperatorMatrices":
        return OperatorMatrices(self.L, R, self.M)


@dataclass(frozen=True)
class Assembled:
    """Resistivity-independent parts of a scenario, reusable across maps."""

    network: BranchNetwork
    loops: LoopBasis
    L: np.ndarray
    M: np.ndarray

    def operators(self, eta: ResistivityMap) -> OperatorMatrices:
        return OperatorMatrices(self.L, assemble_resistance(self.network, self.loops, eta), self.M)


def assemble_geometry(scenario: Scenario, workers: int = 1) -> Assembled:
    net, loops = assemble_loop_basis(scenario.grid)
    L = assemble_inductance(net, loops, scenario.radius)
    M = assemble_coupling(net, loops, scenario.coils, workers=workers)
    return Assembled(net, loops, L, M)


def assemble_operators(scenario: Scenario, workers: int = 1) -> OperatorMatrices:
    return assemble_geometry(scenario, workers).operators(scenario.eta)


def sesquilinear_norm_bound(network: BranchNetwork, loop_basis: LoopBasis, eta, L, lam) -> float:
    """Upper bound on ``||R + lam L||_2``: ``max(eta)/d * deg + |lam| ||L||_2``.

    ``deg`` is the largest row sum of ``|W^T||W|``, bounding ``||W^T W||_2``.
    """
    eta = np.asarray(getattr(eta, "values", eta))
    absW = np.abs(loop_basis.W)
    deg = float((absW.T @ absW).sum(axis=1).max())
    lmax = float(network.length.max())
    r_max = eta.max() * lmax / network.cross_section
    return r_max * deg + abs(lam) * float(np.linalg.norm(L, 2))
