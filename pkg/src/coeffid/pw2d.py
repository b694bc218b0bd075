"""Piecewise-constant coefficients on the unit square: P1 FEM forward solves,
discrete H^-1 block norms, verification of the per-block stability bound

    |a_i - b_i| * |f|_{H^-1(D_i)}  <=  Lam^2 * |grad(u_a - u_b)|_{L2(D_i)},

and per-block coefficient recovery by coordinate descent.

The mesh is uniform, m x m square cells split into two right triangles each.
When m resolves the block partition, multiplying a test function supported in
one block by a constant keeps it in the discrete space, so the inequality
above holds exactly at the discrete level (up to solver tolerance) when the
H^-1 norm is realized by its discrete Riesz representative on the same mesh.
The verification report still carries the documented slack factor 1 + c/m for
the continuum reading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg

from .grids import CoefficientBounds
from .report import ExperimentReport

__all__ = [
    "Partition2D",
    "PwConstCoefficient",
    "FemSystem",
    "PwRecovery",
    "fem_solve",
    "build_system",
    "hminus1_norm",
    "grad_norm_by_block",
    "verify_pw_bound",
    "recover_pw",
    "field_to_json_dict",
]

CG_RTOL = 1e-10

_G1 = np.array([[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]])
_G2 = np.array([[1.0, 0.0, -1.0], [0.0, 1.0, -1.0], [-1.0, -1.0, 2.0]])
_MASS = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


@dataclass(frozen=True)
class Partition2D:
    """nx by ny axis-aligned blocks tiling the unit square. Blocks are indexed
    row-major in y: block (bx, by) has id by*nx + bx."""

    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("partition must have at least one block per axis")

    @property
    def n_blocks(self) -> int:
        return self.nx * self.ny

    def block_rect(self, block: int) -> tuple:
        by, bx = divmod(block, self.nx)
        return (bx / self.nx, (bx + 1) / self.nx, by / self.ny, (by + 1) / self.ny)


@dataclass(frozen=True, eq=False)
class PwConstCoefficient:
    """One constant per partition block, id order as in Partition2D."""

    partition: Partition2D
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.partition.n_blocks,):
            raise ValueError(
                f"expected {self.partition.n_blocks} coefficients, got {c.shape}"
            )
        if not np.all(np.isfinite(c)) or np.any(c <= 0):
            raise ValueError("coefficients must be finite and positive")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    def admissible(self, bounds: CoefficientBounds) -> bool:
        return bool(np.all((self.coeffs >= bounds.lam) & (self.coeffs <= bounds.Lam)))

    def to_json_dict(self) -> dict:
        return {"nx": self.partition.nx, "ny": self.partition.ny,
                "coeffs": list(self.coeffs)}

    @classmethod
    def from_json_dict(cls, d: dict) -> "PwConstCoefficient":
        return cls(Partition2D(int(d["nx"]), int(d["ny"])), np.asarray(d["coeffs"], dtype=float))


def _box_triangles(mx: int, my: int) -> np.ndarray:
    """Triangle node triples for an mx x my cell box, nodes indexed
    iy*(mx+1) + ix. Each cell yields (n00,n10,n11) and (n00,n11,n01)."""
    cx, cy = np.meshgrid(np.arange(mx), np.arange(my), indexing="xy")
    cx = cx.ravel()
    cy = cy.ravel()
    n00 = cy * (mx + 1) + cx
    n10 = n00 + 1
    n01 = n00 + (mx + 1)
    n11 = n01 + 1
    t1 = np.stack([n00, n10, n11], axis=1)
    t2 = np.stack([n00, n11, n01], axis=1)
    tri = np.empty((2 * cx.size, 3), dtype=np.int64)
    tri[0::2] = t1
    tri[1::2] = t2
    return tri


def _assemble(tri: np.ndarray, local: np.ndarray, coef: np.ndarray, nnodes: int) -> sp.csr_matrix:
    """Sum coef[t] * local over triangles t into a sparse matrix; local
    alternates between the two triangle orientations when given shape (2,3,3)."""
    ntri = tri.shape[0]
    if local.ndim == 2:
        local = np.stack([local, local])
    per_tri = local[np.arange(ntri) % 2] * coef[:, None, None]
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    mat = sp.coo_matrix((per_tri.ravel(), (rows, cols)), shape=(nnodes, nnodes))
    return mat.tocsr()


class _Workspace:
    """Mesh-level structures for one (nx, ny, m) combination."""

    def __init__(self, nx: int, ny: int, m: int):
        if m < 2:
            raise ValueError("mesh resolution m must be at least 2")
        if m > 512:
            raise ValueError("mesh resolution m must not exceed 512")
        if m % nx or m % ny:
            raise ValueError("mesh must resolve partition: m must be a multiple of nx and ny")
        self.partition = Partition2D(nx, ny)
        self.m = m
        self.h = 1.0 / m
        nn = (m + 1) * (m + 1)
        self.n_nodes = nn

        tri = _box_triangles(m, m)
        self.tri = tri
        # block of each triangle, via its cell
        cell = np.arange(m * m)
        cx = cell % m
        cy = cell // m
        bx = cx // (m // nx)
        by = cy // (m // ny)
        cell_block = by * nx + bx
        self.tri_block = np.repeat(cell_block, 2)

        pattern = np.stack([_G1, _G2]) * 0.5
        ntri = tri.shape[0]
        self.stiff_blocks = []
        for blk in range(nx * ny):
            coef = (self.tri_block == blk).astype(float)
            self.stiff_blocks.append(_assemble(tri, pattern, coef, nn))
        area = 0.5 * self.h * self.h
        self.mass = _assemble(tri, _MASS * area, np.ones(ntri), nn)

        ix = np.arange(nn) % (m + 1)
        iy = np.arange(nn) // (m + 1)
        self.boundary = (ix == 0) | (ix == m) | (iy == 0) | (iy == m)
        self.interior = np.nonzero(~self.boundary)[0]
        self.stiff_blocks_int = [K[self.interior][:, self.interior].tocsr() for K in self.stiff_blocks]

    def stiffness(self, coeffs: np.ndarray) -> sp.csr_matrix:
        K = coeffs[0] * self.stiff_blocks_int[0]
        for c, Kb in zip(coeffs[1:], self.stiff_blocks_int[1:]):
            K = K + c * Kb
        return K


@lru_cache(maxsize=16)
def _workspace(nx: int, ny: int, m: int) -> _Workspace:
    return _Workspace(nx, ny, m)


@dataclass(eq=False)
class FemSystem:
    """Assembled interior system K u = b for one coefficient field.

    K is symmetric positive definite on the (m-1)^2 interior nodes; boundary
    nodes carry the homogeneous Dirichlet constraint.
    """

    m: int
    stiffness: sp.csr_matrix
    load: np.ndarray
    interior: np.ndarray


def as_nodal_field(f, m: int) -> np.ndarray:
    """Normalize a source input (constant, callable of (x, y), or nodal array)
    to an (m+1, m+1) array indexed [iy, ix]."""
    if callable(f):
        xs = np.linspace(0.0, 1.0, m + 1)
        X, Y = np.meshgrid(xs, xs, indexing="xy")
        return np.asarray(f(X, Y), dtype=float)
    arr = np.asarray(f, dtype=float)
    if arr.ndim == 0:
        return np.full((m + 1, m + 1), float(arr))
    if arr.shape != (m + 1, m + 1):
        raise ValueError(f"nodal field must have shape {(m + 1, m + 1)}, got {arr.shape}")
    return arr


def build_system(a: PwConstCoefficient, f, m: int) -> FemSystem:
    ws = _workspace(a.partition.nx, a.partition.ny, m)
    K = ws.stiffness(a.coeffs)
    b_full = ws.mass @ as_nodal_field(f, m).ravel()
    return FemSystem(m=m, stiffness=K, load=b_full[ws.interior], interior=ws.interior)


def _cg_solve(K: sp.csr_matrix, b: np.ndarray, rtol: float, x0=None) -> np.ndarray:
    if not b.any():
        return np.zeros_like(b)
    d = K.diagonal()
    precond = sp.diags(1.0 / d)
    x, info = cg(K, b, x0=x0, rtol=rtol, atol=0.0, M=precond, maxiter=20 * b.size)
    if info != 0:
        raise RuntimeError(f"conjugate gradient failed to converge (info={info})")
    return x


def fem_solve(a: PwConstCoefficient, f, m: int, rtol: float = CG_RTOL) -> np.ndarray:
    """P1 Galerkin solution with homogeneous Dirichlet data, returned as an
    (m+1, m+1) nodal array (zeros on the boundary)."""
    ws = _workspace(a.partition.nx, a.partition.ny, m)
    system = build_system(a, f, m)
    u = np.zeros(ws.n_nodes)
    u[system.interior] = _cg_solve(system.stiffness, system.load, rtol)
    return u.reshape(m + 1, m + 1)


def grad_norm_by_block(u: np.ndarray, partition: Partition2D, m: int) -> np.ndarray:
    """|grad u|_{L2(D_i)} per block for a nodal field u."""
    ws = _workspace(partition.nx, partition.ny, m)
    v = np.asarray(u, dtype=float).ravel()
    tri = ws.tri
    u0 = v[tri[:, 0]]
    u1 = v[tri[:, 1]]
    u2 = v[tri[:, 2]]
    # gradient energies per orientation; h cancels for right isoceles triangles
    e_lower = 0.5 * ((u1 - u0) ** 2 + (u2 - u1) ** 2)
    e_upper = 0.5 * ((u1 - u2) ** 2 + (u2 - u0) ** 2)
    energy = np.where(np.arange(tri.shape[0]) % 2 == 0, e_lower, e_upper)
    per_block = np.bincount(ws.tri_block, weights=energy, minlength=partition.n_blocks)
    return np.sqrt(per_block)


def hminus1_norm(f, partition: Partition2D, block: int, m: int, rtol: float = CG_RTOL) -> float:
    """Discrete H^-1 norm of f on one block: solve -Lap w = f with zero data
    on the block boundary and return |grad w|_{L2(block)}."""
    if not 0 <= block < partition.n_blocks:
        raise ValueError(f"block must lie in [0, {partition.n_blocks})")
    if m % partition.nx or m % partition.ny:
        raise ValueError("mesh must resolve partition: m must be a multiple of nx and ny")
    mx = m // partition.nx
    my = m // partition.ny
    by, bx = divmod(block, partition.nx)

    field = as_nodal_field(f, m)
    sub = field[by * my : by * my + my + 1, bx * mx : bx * mx + mx + 1]

    tri = _box_triangles(mx, my)
    nn = (mx + 1) * (my + 1)
    pattern = np.stack([_G1, _G2]) * 0.5
    K = _assemble(tri, pattern, np.ones(tri.shape[0]), nn)
    h = 1.0 / m
    M = _assemble(tri, _MASS * (0.5 * h * h), np.ones(tri.shape[0]), nn)

    ix = np.arange(nn) % (mx + 1)
    iy = np.arange(nn) // (mx + 1)
    interior = np.nonzero((ix > 0) & (ix < mx) & (iy > 0) & (iy < my))[0]
    b = (M @ sub.ravel())[interior]
    K_int = K[interior][:, interior].tocsr()
    w = _cg_solve(K_int, b, rtol)
    return float(math.sqrt(max(w @ (K_int @ w), 0.0)))


def verify_pw_bound(
    a: PwConstCoefficient,
    b: PwConstCoefficient,
    f,
    m: int,
    bounds: CoefficientBounds | None = None,
    slack_coef: float = 5.0,
    rtol: float = CG_RTOL,
    block_hminus1: np.ndarray | None = None,
) -> ExperimentReport:
    """Per-block two-sided check of the stability bound.

    Reports lhs = |a_i - b_i| |f|_{H^-1(D_i)}, rhs = Lam^2 |grad(u_a-u_b)|_{L2(D_i)}
    and the ratio lhs/rhs, which must not exceed 1 + slack_coef/m. Lam defaults
    to the largest coefficient present. block_hminus1 lets sweeps reuse the
    f-only norms.
    """
    if a.partition != b.partition:
        raise ValueError("coefficient pair must share one partition")
    part = a.partition
    Lam = bounds.Lam if bounds is not None else float(max(a.coeffs.max(), b.coeffs.max()))

    u_a = fem_solve(a, f, m, rtol)
    u_b = fem_solve(b, f, m, rtol)
    rhs = Lam * Lam * grad_norm_by_block(u_a - u_b, part, m)
    if block_hminus1 is None:
        block_hminus1 = np.array(
            [hminus1_norm(f, part, i, m, rtol) for i in range(part.n_blocks)]
        )
    lhs = np.abs(a.coeffs - b.coeffs) * block_hminus1

    tiny = 1e-300
    ratios = np.where(lhs <= tiny, 0.0, lhs / np.maximum(rhs, tiny))
    slack = 1.0 + slack_coef / m
    passed = bool(np.all(ratios <= slack))

    return ExperimentReport(
        name="pw_bound",
        inputs={"nx": part.nx, "ny": part.ny, "m": m, "Lambda": Lam, "slack": slack},
        metrics={"max_ratio": float(ratios.max()), "min_hminus1": float(block_hminus1.min())},
        curves={
            "block": list(range(part.n_blocks)),
            "lhs": list(lhs),
            "rhs": list(rhs),
            "ratio": list(ratios),
        },
        passed=passed,
    )


@dataclass(eq=False)
class PwRecovery:
    """Recovered piecewise-constant coefficient plus descent diagnostics."""

    coeff: PwConstCoefficient
    converged: bool
    warning: str | None
    sweeps: int
    objective: float


def _golden_min(fun, lo: float, hi: float, tol: float = 1e-7):
    """Golden-section minimizer on [lo, hi], deterministic."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc = fun(c)
    fd = fun(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return (a + b) / 2.0


def recover_pw(
    u_meas: np.ndarray,
    f,
    partition: Partition2D,
    bounds: CoefficientBounds,
    m: int,
    max_sweeps: int = 50,
    sweep_tol: float = 1e-10,
    rtol: float = CG_RTOL,
) -> PwRecovery:
    """Coordinate descent over blocks: golden-section search of each a_i in
    [lam, Lam] minimizing the block-local gradient misfit against u_meas.

    Blocks are visited in id (row-major) order; sweeps stop when the global
    misfit improves by less than sweep_tol or after max_sweeps. When f carries
    no energy on some block (min block H^-1 norm is zero) the problem is not
    identifiable there; the result then holds midpoint values and a warning.
    """
    ws = _workspace(partition.nx, partition.ny, m)
    u_flat = np.asarray(u_meas, dtype=float).ravel()
    if u_flat.size != ws.n_nodes:
        raise ValueError("u_meas does not match the mesh")

    hm = np.array([hminus1_norm(f, partition, i, m, rtol) for i in range(partition.n_blocks)])
    mid = 0.5 * (bounds.lam + bounds.Lam)
    if hm.min() <= 1e-12 * (1.0 + hm.max()):
        return PwRecovery(
            coeff=PwConstCoefficient(partition, np.full(partition.n_blocks, mid)),
            converged=False,
            warning="source has no energy on at least one block: coefficients there are arbitrary",
            sweeps=0,
            objective=0.0,
        )

    b_int = (ws.mass @ as_nodal_field(f, m).ravel())[ws.interior]
    coeffs = np.full(partition.n_blocks, mid)
    state = {"x0": None}

    def misfit_by_block(c: np.ndarray) -> np.ndarray:
        K = ws.stiffness(c)
        x = _cg_solve(K, b_int, rtol, x0=state["x0"])
        state["x0"] = x
        u = np.zeros(ws.n_nodes)
        u[ws.interior] = x
        return grad_norm_by_block(u - u_flat, partition, m)

    def total(c: np.ndarray) -> float:
        return float(np.sqrt((misfit_by_block(c) ** 2).sum()))

    objective = total(coeffs)
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        for blk in range(partition.n_blocks):

            def local(ai: float, blk=blk) -> float:
                trial = coeffs.copy()
                trial[blk] = ai
                return float(misfit_by_block(trial)[blk])

            coeffs[blk] = _golden_min(local, bounds.lam, bounds.Lam)
        cur = total(coeffs)
        improvement = objective - cur
        objective = min(objective, cur)
        if improvement < sweep_tol:
            converged = True
            break

    return PwRecovery(
        coeff=PwConstCoefficient(partition, coeffs),
        converged=converged,
        warning=None if converged else f"descent did not settle within {max_sweeps} sweeps",
        sweeps=sweeps,
        objective=objective,
    )


def field_to_json_dict(u: np.ndarray) -> dict:
    """Flat serialization of a nodal field: {m, values row-major in y}."""
    arr = np.asarray(u, dtype=float)
    side = arr.shape[0]
    return {"m": side - 1, "values": list(arr.ravel())}
