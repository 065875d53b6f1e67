"""Diagonalization, labelling and branch continuation over the coupling g.

Eigenpairs at a single g are labelled by maximal overlap with the product
basis. Families of eigenpairs over a g-grid are tracked by continuity:
consecutive eigenvectors are matched through an assignment problem on the
overlap matrix, with automatic grid bisection near avoided crossings and
a positive-overlap phase convention along each branch.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .fockmodel import BasisIndex, LabeledOperator, ModelParams, basis_order, build_rabi

__all__ = [
    "Spectrum",
    "BranchFamily",
    "SolverError",
    "GridRefinementError",
    "diagonalize",
    "track_branches",
    "hellmann_feynman_check",
    "convergence_scan",
    "ConvergenceReport",
]

RESIDUAL_TOL = 1e-10
AMBIGUITY_TOL = 1e-6
OVERLAP_THRESHOLD = 1 / math.sqrt(2)


class SolverError(RuntimeError):
    """Eigensolver failed to meet the residual or orthonormality bound."""


class GridRefinementError(RuntimeError):
    """Branch continuation could not reach the overlap floor."""


@dataclass
class Spectrum:
    """Eigenpairs of one operator at one parameter point."""

    params: ModelParams | None
    operator_name: str
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    labels: dict[int, BasisIndex]
    ambiguous: list[int]
    trust_cutoff: int

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def spectral_diameter(self) -> float:
        return float(self.eigenvalues[-1] - self.eigenvalues[0])

    def level_of(self, label: BasisIndex) -> int:
        for k, lab in self.labels.items():
            if lab == label:
                return k
        raise KeyError(f"no level labelled {label}")


def _check_eigenpairs(h: np.ndarray, w: np.ndarray, v: np.ndarray) -> None:
    scale = max(1.0, float(np.max(np.abs(w))))
    residual = np.linalg.norm(h @ v - v * w, axis=0)
    if np.max(residual) > RESIDUAL_TOL * scale:
        raise SolverError(
            f"eigenpair residual {np.max(residual):.3e} exceeds {RESIDUAL_TOL * scale:.3e}"
        )
    ortho = np.max(np.abs(v.T @ v - np.eye(len(w))))
    if ortho > RESIDUAL_TOL:
        raise SolverError(f"eigenvector orthonormality defect {ortho:.3e}")


def _attach_labels(
    v: np.ndarray, basis: list[BasisIndex], at_zero: bool
) -> tuple[dict[int, BasisIndex], list[int]]:
    labels: dict[int, BasisIndex] = {}
    ambiguous: list[int] = []
    used: dict[BasisIndex, int] = {}
    overlaps = np.abs(v)
    for k in range(v.shape[1]):
        col = overlaps[:, k]
        order = np.argsort(col)[::-1]
        best, second = col[order[0]], col[order[1]]
        if best - second < AMBIGUITY_TOL:
            ambiguous.append(k)
            continue
        if not at_zero and best < OVERLAP_THRESHOLD:
            continue
        lab = basis[order[0]]
        if lab in used:
            # keep the stronger claim, demote the other to ambiguous
            other = used[lab]
            if overlaps[order[0], k] > overlaps[lab.k, other]:
                del labels[other]
                ambiguous.append(other)
            else:
                ambiguous.append(k)
                continue
        labels[k] = lab
        used[lab] = k
    return labels, ambiguous


def diagonalize(
    op: LabeledOperator,
    params: ModelParams | None = None,
    trust_cutoff: int | None = None,
) -> Spectrum:
    """Dense symmetric eigensolve with labelling and residual certification."""
    if not op.is_symmetric():
        raise ValueError(f"operator {op.name} is not symmetric")
    try:
        w, v = np.linalg.eigh(op.entries)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"eigensolver did not converge on {op.name}") from exc
    _check_eigenpairs(op.entries, w, v)
    at_zero = params is not None and params.g == 0
    labels, ambiguous = _attach_labels(v, op.basis, at_zero)
    if trust_cutoff is None:
        trust_cutoff = len(op.basis) // 2 // 4 if params is None else params.n_fock // 4
    return Spectrum(params, op.name, w, v, labels, ambiguous, trust_cutoff)


@dataclass
class BranchFamily:
    """Label-consistent eigenpair curves of H_Rabi over a g-grid."""

    params_base: ModelParams
    g_grid: np.ndarray
    labels: list[BasisIndex]
    energies: np.ndarray  # (n_branch, n_grid)
    vectors: np.ndarray  # (dim, n_branch, n_grid)
    overlap_floor: float

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    def branch_index(self, label: BasisIndex) -> int:
        return self.labels.index(label)

    def grid_index(self, g: float) -> int:
        idx = int(np.argmin(np.abs(self.g_grid - g)))
        if not math.isclose(self.g_grid[idx], g, rel_tol=0, abs_tol=1e-14):
            raise KeyError(f"g={g} is not a grid point")
        return idx

    def energy(self, label: BasisIndex, g: float) -> float:
        return float(self.energies[self.branch_index(label), self.grid_index(g)])

    def vector(self, label: BasisIndex, g: float) -> np.ndarray:
        return self.vectors[:, self.branch_index(label), self.grid_index(g)]

    def to_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["g", "label_n", "label_s", "eigenvalue"])
            for gi, g in enumerate(self.g_grid):
                for b, lab in enumerate(self.labels):
                    w.writerow(
                        [f"{g:.17g}", lab.n, lab.s, f"{self.energies[b, gi]:.17g}"]
                    )

    def vectors_to_json(self, g: float) -> str:
        """Eigenvector columns at one grid point, in the operator JSON format."""
        gi = self.grid_index(g)
        return json.dumps(
            {
                "name": f"branch_vectors(g={g:.17g})",
                "dim": self.dim,
                "basis_convention": "columns ordered as the branch labels",
                "entries": self.vectors[:, :, gi].ravel().tolist(),
            }
        )


def _degenerate_seed(n_fock: int) -> tuple[list[BasisIndex], np.ndarray, np.ndarray]:
    """Symmetric/antisymmetric seed basis for omega = Omega at g = 0.

    The branch labelled (j, +1) starts from (Phi_{j,1} + Phi_{j+1,-1})/sqrt(2)
    and (j+1, -1) from (Phi_{j,1} - Phi_{j+1,-1})/sqrt(2); (0, -1) stays bare.
    """
    dim = 2 * n_fock
    labels = basis_order(n_fock)
    vecs = np.zeros((dim, dim))
    vecs[BasisIndex(0, -1).k, BasisIndex(0, -1).k] = 1.0
    inv = 1 / math.sqrt(2)
    for j in range(n_fock - 1):
        up = BasisIndex(j, 1).k
        dn = BasisIndex(j + 1, -1).k
        vecs[up, up] = inv
        vecs[dn, up] = inv
        vecs[up, dn] = inv
        vecs[dn, dn] = -inv
    # top branch (N-1, +1) has no partner inside the truncation; keep it bare
    top = BasisIndex(n_fock - 1, 1).k
    vecs[top, top] = 1.0
    return labels, vecs, np.zeros(dim)


def _seed_at_zero(params: ModelParams) -> tuple[list[BasisIndex], np.ndarray, np.ndarray]:
    dim = params.dim
    labels = basis_order(params.n_fock)
    energies = np.array(
        [params.omega * (lab.n + 0.5) + lab.s * params.Omega / 2 for lab in labels]
    )
    if params.omega == params.Omega:
        labels, vecs, _ = _degenerate_seed(params.n_fock)
        return labels, vecs, energies
    return labels, np.eye(dim), energies


def _advance(
    params: ModelParams,
    g0: float,
    v0: np.ndarray,
    g1: float,
    floor: float,
    depth: int,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Continue all branches from g0 to g1, bisecting when overlap drops."""
    h = build_rabi(params.with_g(g1))
    w, v = np.linalg.eigh(h.entries)
    _check_eigenpairs(h.entries, w, v)
    overlap = v0.T @ v
    rows, cols = linear_sum_assignment(-np.abs(overlap))
    matched = np.abs(overlap[rows, cols])
    worst = float(np.min(matched))
    if worst >= floor:
        signs = np.sign(overlap[rows, cols])
        signs[signs == 0] = 1.0
        return w[cols], v[:, cols] * signs, worst
    if depth <= 0:
        raise GridRefinementError(
            f"overlap {worst:.3f} below floor {floor} between g={g0} and g={g1} "
            "after maximal bisection; refine the grid near this interval"
        )
    gm = 0.5 * (g0 + g1)
    _, vm, o1 = _advance(params, g0, v0, gm, floor, depth - 1)
    w1, v1, o2 = _advance(params, gm, vm, g1, floor, depth - 1)
    return w1, v1, min(o1, o2)


def track_branches(
    params_base: ModelParams,
    g_grid,
    overlap_floor: float = 0.8,
    max_refine: int = 6,
) -> BranchFamily:
    """Track every eigenpair of H_Rabi over the grid, seeded at g = 0."""
    grid = np.asarray(g_grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise ValueError("g_grid must be a nonempty 1-d sequence")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("g_grid must be strictly increasing")
    zero_idx = np.where(grid == 0.0)[0]
    if len(zero_idx) == 0:
        raise ValueError("g_grid must contain g = 0 to anchor the labelling")
    i0 = int(zero_idx[0])

    labels, v_seed, e_seed = _seed_at_zero(params_base)
    dim = params_base.dim
    energies = np.empty((dim, len(grid)))
    vectors = np.empty((dim, dim, len(grid)))
    energies[:, i0] = e_seed
    vectors[:, :, i0] = v_seed
    floor_seen = 1.0

    for direction in (1, -1):
        v_prev = v_seed
        g_prev = 0.0
        rng = range(i0 + 1, len(grid)) if direction == 1 else range(i0 - 1, -1, -1)
        for gi in rng:
            w, v, worst = _advance(
                params_base, g_prev, v_prev, float(grid[gi]), overlap_floor, max_refine
            )
            energies[:, gi] = w
            vectors[:, :, gi] = v
            floor_seen = min(floor_seen, worst)
            v_prev, g_prev = v, float(grid[gi])

    return BranchFamily(params_base, grid, labels, energies, vectors, floor_seen)


def hellmann_feynman_check(
    branch: BranchFamily,
    v_op: LabeledOperator,
    g: float,
    tol: float = 1e-6,
) -> list[dict]:
    """Compare dE/dg (finite differences) against the Rayleigh value <v, V v>.

    Uses a 4th-order centered stencil with step h = 1e-3 * max(1, |g|); each
    stencil point is diagonalized fresh and matched to the branch by overlap.
    """
    gi = branch.grid_index(g)
    if gi == 0 or gi == len(branch.g_grid) - 1:
        if len(branch.g_grid) > 1:
            raise ValueError("g must be interior to the branch grid")
    h = 1e-3 * max(1.0, abs(g))
    params = branch.params_base

    stencil = {}
    for delta in (-2 * h, -h, h, 2 * h):
        op = build_rabi(params.with_g(g + delta))
        w, v = np.linalg.eigh(op.entries)
        stencil[delta] = (w, v)

    rows = []
    v_mat = v_op.entries
    for b, lab in enumerate(branch.labels):
        vec = branch.vectors[:, b, gi]
        e_at = {}
        for delta, (w, v) in stencil.items():
            k = int(np.argmax(np.abs(vec @ v)))
            e_at[delta] = w[k]
        fd = (e_at[-2 * h] - 8 * e_at[-h] + 8 * e_at[h] - e_at[2 * h]) / (12 * h)
        rayleigh = float(vec @ (v_mat @ vec))
        disc = abs(fd - rayleigh)
        rows.append(
            {
                "label_n": lab.n,
                "label_s": lab.s,
                "fd_slope": fd,
                "rayleigh": rayleigh,
                "discrepancy": disc,
                "ok": disc <= tol,
            }
        )
    return rows


@dataclass
class ConvergenceReport:
    """Per-level eigenvalue drift across increasing truncation sizes."""

    sizes: list[int]
    drifts: np.ndarray
    tol: float
    trust_cutoff: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "sizes": self.sizes,
                "tol": self.tol,
                "trust_cutoff": self.trust_cutoff,
                "drifts": [float(d) for d in self.drifts],
            }
        )


def convergence_scan(
    params: ModelParams, sizes, tol: float = 1e-8
) -> ConvergenceReport:
    """Galerkin trust certification: eigenvalue drift across truncation sizes."""
    sizes = [int(n) for n in sizes]
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be strictly increasing")
    spectra = []
    for n in sizes:
        p = ModelParams(params.omega, params.Omega, params.g, n)
        w = np.linalg.eigvalsh(build_rabi(p).entries)
        spectra.append(w)
    n_levels = 2 * sizes[0]
    drifts = np.zeros(n_levels)
    for a, b in zip(spectra, spectra[1:]):
        m = min(len(a), n_levels)
        drifts[:m] = np.maximum(drifts[:m], np.abs(a[:m] - b[:m]))
    trusted = 0
    while trusted < n_levels and drifts[trusted] <= tol:
        trusted += 1
    return ConvergenceReport(sizes, drifts, tol, trusted)
