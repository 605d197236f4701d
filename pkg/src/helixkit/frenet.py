"""Frenet frames and generalized curvatures for unit-speed curves in E^n.

The frame V_1..V_{n-1} comes from Gram-Schmidt on the derivative jet
(d1..d^{n-1}); V_n completes the basis with positive orientation.  The first
n-2 curvatures are ratios of consecutive Gram-Schmidt norms and are positive
by construction; the last curvature takes its sign from the oriented V_n, so
in E^3 it is the usual signed torsion.

A sample where some curvature magnitude drops below eps_curv gets a
degenerate_rank marker: the frame vectors past that rank are not determined
by the curve, so they are filled with an arbitrary orthonormal completion
(keeping the orthonormality and det=+1 invariants) and the remaining
curvatures are reported as zero.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .curve import Curve
from .errors import DegenerateCurveError, NotUnitSpeedError

__all__ = [
    "FrenetApparatus", "FrenetGrid", "frenet_at", "frenet_grid",
    "frenet_ode_residual", "generalized_cross", "EPS_CURV",
]

EPS_CURV = 1e-9

ORTHONORMALITY_TOL = 1e-8
DET_TOL = 1e-6


def generalized_cross(vectors):
    """Vector orthogonal to n-1 given vectors in E^n, batched.

    `vectors` has shape (m, n-1, n).  Each output row is computed by cofactor
    expansion; for orthonormal inputs it is a unit vector.  The caller fixes
    the overall sign via the orientation check.
    """
    vectors = np.asarray(vectors, dtype=float)
    m, n1, n = vectors.shape
    if n1 != n - 1:
        raise ValueError(f"need {n - 1} vectors in dimension {n}")
    out = np.empty((m, n))
    for k in range(n):
        cols = [c for c in range(n) if c != k]
        out[:, k] = (-1.0) ** k * np.linalg.det(vectors[:, :, cols])
    return out


@dataclass(frozen=True)
class FrenetApparatus:
    """Frame and curvatures at one arc-length value.

    frame[i] is V_{i+1}; curvatures[i] is k_{i+1}.  degenerate_rank, when
    set, is the smallest i with |k_i| < eps_curv.
    """
    s: float
    frame: np.ndarray
    curvatures: np.ndarray
    degenerate_rank: Optional[int] = None

    @property
    def dim(self):
        return self.frame.shape[0]

    def orthonormality_error(self):
        g = self.frame @ self.frame.T
        return float(np.max(np.abs(g - np.eye(self.dim))))

    def orientation(self):
        return float(np.linalg.det(self.frame))


class FrenetGrid:
    """Frames and curvatures at m arc-length samples, stored as arrays.

    Iterating yields FrenetApparatus records.  `valid` marks samples with no
    degeneracy; `fd_curvatures` is the independent estimate obtained by
    differencing the frame across the grid (a cross-check on the primary
    Gram-Schmidt extraction, not an input to classification).
    """

    def __init__(self, svals, frames, curvatures, ranks):
        self.svals = svals
        self.frames = frames
        self.curvatures = curvatures
        self._ranks = ranks
        self.dim = frames.shape[1]

    def __len__(self):
        return len(self.svals)

    def __getitem__(self, i):
        r = int(self._ranks[i])
        return FrenetApparatus(float(self.svals[i]), self.frames[i],
                               self.curvatures[i], r if r else None)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def valid(self):
        return self._ranks == 0

    @property
    def degenerate_ranks(self):
        return self._ranks

    def fd_curvatures(self):
        """Curvatures re-estimated as <dV_i/ds, V_{i+1}> with grid differences."""
        n = self.dim
        dV = np.gradient(self.frames, self.svals, axis=0)
        out = np.empty((len(self), n - 1))
        for i in range(n - 1):
            out[:, i] = np.sum(dV[:, i, :] * self.frames[:, i + 1, :], axis=1)
        return out


def _orthonormal_completion(rows, n):
    """Extend orthonormal rows (list of 1-D arrays) to a full basis of E^n."""
    basis = [np.asarray(r, dtype=float) for r in rows]
    for threshold in (0.25, 1e-10):
        for col in range(n):
            if len(basis) == n:
                return np.array(basis)
            cand = np.zeros(n)
            cand[col] = 1.0
            for b in basis:
                cand = cand - (cand @ b) * b
            nrm = np.linalg.norm(cand)
            if nrm > threshold:
                basis.append(cand / nrm)
    return np.array(basis)


def _frames_from_jets(svals, jets):
    """Batched frame and curvature extraction.

    jets: (m, n, n) with jets[i, k-1] the k-th derivative at svals[i].
    Returns (frames (m,n,n), curvatures (m,n-1), ranks (m,) with 0 = valid).
    """
    m, order, n = jets.shape
    if order != n:
        raise ValueError("need a full order-n jet per sample")
    frames = np.zeros((m, n, n))
    norms = np.zeros((m, n - 1))

    for i in range(n - 1):
        E = jets[:, i, :].copy()
        for j in range(i):
            E -= np.sum(E * frames[:, j, :], axis=1, keepdims=True) \
                * frames[:, j, :]
        e = np.linalg.norm(E, axis=1)
        norms[:, i] = e
        safe = np.maximum(e, 1e-300)
        frames[:, i, :] = E / safe[:, None]

    last = generalized_cross(frames[:, : n - 1, :])
    frames[:, n - 1, :] = last
    # enforce det = +1
    dets = np.linalg.det(frames)
    frames[dets < 0, n - 1, :] *= -1.0

    curv = np.zeros((m, n - 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(n - 2):
            curv[:, i] = norms[:, i + 1] / norms[:, i]
    curv[:, n - 2] = np.sum(jets[:, n - 1, :] * frames[:, n - 1, :], axis=1) \
        / np.maximum(norms[:, n - 2], 1e-300)
    curv[~np.isfinite(curv)] = 0.0

    ranks = np.zeros(m, dtype=int)
    for i in range(n - 2):
        hit = (ranks == 0) & (curv[:, i] < EPS_CURV)
        ranks[hit] = i + 1
    hit = (ranks == 0) & (np.abs(curv[:, n - 2]) < EPS_CURV)
    ranks[hit] = n - 1

    # past the degenerate rank the frame is not determined by the curve;
    # substitute an orthonormal completion and zero curvatures
    for idx in np.nonzero((ranks > 0) & (ranks < n - 1))[0]:
        r = ranks[idx]
        frames[idx] = _orthonormal_completion(list(frames[idx, :r, :]), n)
        if np.linalg.det(frames[idx]) < 0:
            frames[idx, n - 1, :] *= -1.0
        curv[idx, r:] = 0.0

    return frames, curv, ranks


def _require_unit_speed(c):
    if not getattr(c, "unit_speed", False):
        raise NotUnitSpeedError(
            f"curve is not unit speed (max |speed - 1| = "
            f"{getattr(c, 'unit_speed_error', float('nan')):.3g}); "
            "reparametrize by arc length first")


def frenet_at(c: Curve, s: float) -> FrenetApparatus:
    """Frenet apparatus of a unit-speed curve at one parameter value."""
    _require_unit_speed(c)
    jets = c.jet(s, c.dim).derivatives[None, :, :]
    frames, curv, ranks = _frames_from_jets(np.array([s]), jets)
    r = int(ranks[0])
    return FrenetApparatus(float(s), frames[0], curv[0], r if r else None)


def frenet_grid(c: Curve, m: int, domain=None, margin: float = 0.0) -> FrenetGrid:
    """Frames at m uniform parameter values.

    `margin` trims that fraction of the domain length off each end before
    sampling; `domain` overrides the sampling interval outright.
    """
    _require_unit_speed(c)
    if m < 16:
        raise ValueError("need at least 16 grid samples")
    if domain is None:
        a, b = c.domain
        trim = margin * (b - a)
        a, b = a + trim, b - trim
    else:
        a, b = float(domain[0]), float(domain[1])
        if not (a < b):
            raise ValueError(f"bad grid domain [{a}, {b}]")
    svals = np.linspace(a, b, m)
    jets = c.jet_grid(svals, c.dim)
    frames, curv, ranks = _frames_from_jets(svals, jets)
    return FrenetGrid(svals, frames, curv, ranks)


def frenet_ode_residual(grid: FrenetGrid) -> float:
    """Max residual of the frame against the structural ODE of the frame.

    Differences each V_i across the grid and compares with
    -k_{i-1} V_{i-1} + k_i V_{i+1} (first and last rows truncated
    accordingly).  Samples whose difference stencil touches a degenerate
    record are skipped, as are the one-sided endpoints; returns 0 if nothing
    can be checked.
    """
    n = grid.dim
    if len(grid) < 3:
        raise DegenerateCurveError("need at least 3 samples for the residual")
    dV = np.gradient(grid.frames, grid.svals, axis=0)
    k = grid.curvatures
    rhs = np.zeros_like(grid.frames)
    for i in range(n):
        if i > 0:
            rhs[:, i, :] -= k[:, i - 1, None] * grid.frames[:, i - 1, :]
        if i < n - 1:
            rhs[:, i, :] += k[:, i, None] * grid.frames[:, i + 1, :]
    resid = np.linalg.norm(dV - rhs, axis=2).max(axis=1)

    ok = grid.valid
    usable = ok.copy()
    usable[1:-1] &= ok[:-2] & ok[2:]
    usable[0] = usable[-1] = False
    if not np.any(usable):
        return 0.0
    return float(resid[usable].max())
