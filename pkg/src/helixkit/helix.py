"""Helix characterizations: recursion functions, invariants, axes, indicatrix.

Two families of curves are detected.  A general helix keeps a constant angle
between its tangent V_1 and a fixed direction; a slant helix keeps a constant
angle between its principal normal V_2 and a fixed direction.  Both admit a
characterization through recursively defined functions of the curvatures:

  slant:    G_1 = integral of k_1 plus a constant, G_2 = 1,
            G_3 = (k_1/k_2) G_1,
            G_i = (k_{i-2} G_{i-2} + G'_{i-1}) / k_{i-1}          (i >= 4)
  general:  G*_1 = 1, G*_2 = 0,
            G*_i = (k_{i-2} G*_{i-2} + (G*_{i-1})') / k_{i-1}     (i >= 3)
  harmonic: H_0 = 0, H_1 = k_1/k_2,
            H_i = (H'_{i-1} + H_{i-2} k_i) / k_{i+1}              (i >= 2)

The curve is a slant helix exactly when sum G_i^2 is a (non-zero) constant
C = sec^2(theta), and then B = sum G_i V_i is the fixed direction; the
general-helix test works the same way with the starred functions, whose
axis field is A = sum G*_i V_i = V_1 + H_1 V_3 + ... + H_{n-2} V_n.

Detection inverts the axis formulas: a classification is positive when the
unit axis field is constant to tol_axis and the tested scalar is constant to
tol_const.  Constant-angle tests against a caller-supplied hint direction
cover the degenerate cos(theta) = 0 cases the recursions cannot see.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import curve as curvemod
from .curve import AnalyticCurve, Curve, ReparametrizedCurve, SampledCurve
from .errors import (
    ClassificationError, DegenerateCurveError, NonRegularCurveError,
    UnreliableResultError,
)
from .frenet import EPS_CURV, FrenetGrid, frenet_grid
from . import expr

__all__ = [
    "HelixFunctions", "HelixReport", "PathResult", "HintResult",
    "AxisComparison", "recursion_mask", "slant_functions",
    "general_functions", "harmonic_curvatures", "axis_field",
    "slant_invariant_3d", "indicatrix_curvatures_3d", "helix_axis_field_3d",
    "classify", "tangent_indicatrix", "verify_same_axis",
    "EPS_MASK", "TOL_AXIS", "TOL_CONST",
]

EPS_MASK = 1e-6          # |k_i| below this excludes a sample from statistics
TOL_AXIS = 1e-3          # default max angular deviation of the unit axis field
TOL_CONST = 1e-4         # default relative std of the tested constant
TOL_PLANAR = 1e-4        # max angular wobble of V_n on a hyperplane curve


@dataclass
class HelixFunctions:
    """Values of one recursion family on a frame grid.

    kind is "slant" (columns G_1..G_n), "general" (G*_1..G*_n) or
    "harmonic" (H_0..H_{n-2}).  mask marks the samples where every division
    performed by the recursion was safe; values at masked-out samples are
    still stored but meaningless.
    """
    kind: str
    svals: np.ndarray
    values: np.ndarray
    mask: np.ndarray
    integration_constant: Optional[float] = None

    @property
    def masked_fraction(self):
        return 1.0 - float(np.mean(self.mask))


def recursion_mask(grid: FrenetGrid, eps: float = EPS_MASK):
    """Samples on which the curvature recursions are numerically safe.

    The recursions divide by k_2..k_{n-1}; a sample is masked out when any
    of those magnitudes falls below eps, or when the frame itself is
    degenerate there.
    """
    mask = grid.valid.copy()
    if grid.dim >= 3:
        mask &= np.all(np.abs(grid.curvatures[:, 1:]) >= eps, axis=1)
    return mask


def _check_reliability(mask, what):
    frac = 1.0 - float(np.mean(mask))
    if frac > 0.5:
        raise UnreliableResultError(
            f"{what}: {frac:.0%} of samples masked by near-zero curvatures",
            masked_fraction=frac)


def _slant_components(grid: FrenetGrid):
    """Affine decomposition G_i(c) = P_i + c Q_i, plus the mask.

    G_1 = I + c with I the zero-mean cumulative trapezoid of k_1 (anchoring
    the integral at zero mean makes the variance-minimizing constant land at
    the natural one); every later G_i is affine in c as well, so the search
    for c only recombines these two precomputed parts.
    """
    s = grid.svals
    k = grid.curvatures
    m, n = len(s), grid.dim
    mask = recursion_mask(grid)
    _check_reliability(mask, "slant recursion")

    I = np.concatenate([[0.0], np.cumsum(
        0.5 * (k[1:, 0] + k[:-1, 0]) * np.diff(s))])
    I -= np.mean(I[mask])

    P = np.zeros((m, n))
    Q = np.zeros((m, n))
    P[:, 0] = I
    Q[:, 0] = 1.0
    P[:, 1] = 1.0          # G_2 = 1 exactly; carries no c
    if n >= 3:
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(np.abs(k[:, 1]) > 0, k[:, 0] / k[:, 1], 0.0)
        ratio[~np.isfinite(ratio)] = 0.0
        P[:, 2] = ratio * P[:, 0]
        Q[:, 2] = ratio * Q[:, 0]
    for i in range(3, n):
        # G_{i+1} = (k_{i-1} G_{i-1} + G'_i) / k_i   (1-based i+1)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = np.where(np.abs(k[:, i - 1]) > 0, 1.0 / k[:, i - 1], 0.0)
        inv[~np.isfinite(inv)] = 0.0
        P[:, i] = inv * (k[:, i - 2] * P[:, i - 2] + np.gradient(P[:, i - 1], s, edge_order=2))
        Q[:, i] = inv * (k[:, i - 2] * Q[:, i - 2] + np.gradient(Q[:, i - 1], s, edge_order=2))
    return P, Q, mask


def _golden_min(f, a, b, tol=1e-10):
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - inv_phi * (b - a)
    x2 = a + inv_phi * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - inv_phi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + inv_phi * (b - a)
            f2 = f(x2)
    return 0.5 * (a + b)


def slant_functions(grid: FrenetGrid) -> HelixFunctions:
    """Slant-helix recursion functions with the fitted integration constant.

    The constant c in G_1 is chosen to minimize the variance of sum G_i^2
    over the unmasked samples: a coarse scan over the bracket (the variance
    need not be unimodal globally) followed by a golden-section refinement
    to 1e-10.
    """
    P, Q, mask = _slant_components(grid)
    Pm, Qm = P[mask], Q[mask]

    def variance(c):
        tot = np.sum((Pm + c * Qm) ** 2, axis=1)
        return float(np.var(tot))

    span = 10.0 * float(np.max(np.abs(P[mask, 0]))) if np.any(mask) else 1.0
    span = max(span, 1e-6)
    scan = np.linspace(-span, span, 201)
    best = int(np.argmin([variance(c) for c in scan]))
    lo = scan[max(best - 1, 0)]
    hi = scan[min(best + 1, len(scan) - 1)]
    c_star = _golden_min(variance, float(lo), float(hi))

    values = P + c_star * Q
    values[:, 1] = 1.0
    return HelixFunctions("slant", grid.svals, values, mask,
                          integration_constant=float(c_star))


def general_functions(grid: FrenetGrid) -> HelixFunctions:
    """General-helix recursion functions (no integration constant)."""
    s = grid.svals
    k = grid.curvatures
    m, n = len(s), grid.dim
    mask = recursion_mask(grid)
    _check_reliability(mask, "general recursion")

    G = np.zeros((m, n))
    G[:, 0] = 1.0
    for i in range(2, n):
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = np.where(np.abs(k[:, i - 1]) > 0, 1.0 / k[:, i - 1], 0.0)
        inv[~np.isfinite(inv)] = 0.0
        G[:, i] = inv * (k[:, i - 2] * G[:, i - 2] + np.gradient(G[:, i - 1], s, edge_order=2))
    return HelixFunctions("general", s, G, mask)


def harmonic_curvatures(grid: FrenetGrid) -> HelixFunctions:
    """Harmonic curvature functions H_0..H_{n-2}."""
    s = grid.svals
    k = grid.curvatures
    m, n = len(s), grid.dim
    if n < 3:
        raise DegenerateCurveError("harmonic curvatures need dimension >= 3")
    mask = recursion_mask(grid)
    _check_reliability(mask, "harmonic recursion")

    H = np.zeros((m, n - 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        H1 = np.where(np.abs(k[:, 1]) > 0, k[:, 0] / k[:, 1], 0.0)
    H1[~np.isfinite(H1)] = 0.0
    H[:, 1] = H1
    for i in range(2, n - 1):
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = np.where(np.abs(k[:, i]) > 0, 1.0 / k[:, i], 0.0)
        inv[~np.isfinite(inv)] = 0.0
        H[:, i] = inv * (np.gradient(H[:, i - 1], s, edge_order=2) + H[:, i - 2] * k[:, i - 1])
    return HelixFunctions("harmonic", s, H, mask)


def axis_field(funcs: HelixFunctions, grid: FrenetGrid):
    """Ambient axis field of a recursion family; shape (m, n).

    slant:    B = sum G_i V_i
    general:  A = sum G*_i V_i
    harmonic: X = V_1 + sum_{i>=1} H_i V_{i+2}
    """
    if funcs.kind in ("slant", "general"):
        return np.einsum("mi,mij->mj", funcs.values, grid.frames)
    if funcs.kind == "harmonic":
        out = grid.frames[:, 0, :].copy()
        for i in range(1, grid.dim - 1):
            out += funcs.values[:, i, None] * grid.frames[:, i + 1, :]
        return out
    raise ValueError(f"unknown kind {funcs.kind!r}")


def _axis_statistics(field_rows, mask):
    """Mean unit direction and max angular deviation over unmasked samples."""
    rows = field_rows[mask]
    norms = np.linalg.norm(rows, axis=1)
    good = norms > 1e-12
    if not np.any(good):
        return None, float("inf")
    units = rows[good] / norms[good, None]
    mean = units.mean(axis=0)
    nm = np.linalg.norm(mean)
    if nm < 1e-12:
        return None, float("inf")
    mean /= nm
    dots = np.clip(units @ mean, -1.0, 1.0)
    return mean, float(np.max(np.arccos(dots)))


def _dds(values, s):
    """First derivative of a sampled function, five-point stencils."""
    m = len(s)
    if m < 5:
        return np.gradient(values, s, edge_order=2 if m >= 3 else 1)
    out = np.empty_like(values, dtype=float)
    for i in range(m):
        j = min(max(i - 2, 0), m - 5)
        w = curvemod.finite_difference_weights(s[i], s[j:j + 5], 1)
        out[i] = w[1] @ values[j:j + 5]
    return out


def slant_invariant_3d(grid: FrenetGrid):
    """The scalar invariant whose constancy characterizes 3D slant helices.

    Computed in the expanded form (k t' - k' t) / (k^2 + t^2)^(3/2) with the
    curvature derivatives taken by five-point differences; algebraically this
    equals k^2/(k^2+t^2)^(3/2) * (t/k)', but the expanded form stays accurate
    where t/k blows up.  Samples with k_1 below eps_curv come back as nan.
    """
    if grid.dim != 3:
        raise DegenerateCurveError("the scalar invariant is defined in E^3")
    s = grid.svals
    kappa = grid.curvatures[:, 0]
    tau = grid.curvatures[:, 1]
    dk = _dds(kappa, s)
    dt = _dds(tau, s)
    denom = (kappa ** 2 + tau ** 2) ** 1.5
    with np.errstate(divide="ignore", invalid="ignore"):
        sigma = (kappa * dt - dk * tau) / denom
    sigma[kappa < EPS_CURV] = np.nan
    return sigma


def indicatrix_curvatures_3d(grid: FrenetGrid):
    """Curvature and torsion of the tangent indicatrix, from the curve's own.

    kappa_b = sqrt(k^2 + t^2)/k and t_b = (k t' - k' t)/(k (k^2 + t^2)),
    with derivatives by five-point differences.  Valid where k_1 > 0.
    """
    if grid.dim != 3:
        raise DegenerateCurveError("indicatrix formulas are for E^3")
    s = grid.svals
    kappa = grid.curvatures[:, 0]
    tau = grid.curvatures[:, 1]
    dk = _dds(kappa, s)
    dt = _dds(tau, s)
    with np.errstate(divide="ignore", invalid="ignore"):
        kb = np.sqrt(kappa ** 2 + tau ** 2) / kappa
        tb = (kappa * dt - dk * tau) / (kappa * (kappa ** 2 + tau ** 2))
    return kb, tb


def helix_axis_field_3d(grid: FrenetGrid):
    """Direct axis field (t V_1 + k V_3)/sqrt(k^2+t^2) for 3D general helices."""
    if grid.dim != 3:
        raise DegenerateCurveError("direct axis formula is for E^3")
    kappa = grid.curvatures[:, 0]
    tau = grid.curvatures[:, 1]
    denom = np.sqrt(kappa ** 2 + tau ** 2)
    denom = np.maximum(denom, 1e-300)
    return (tau[:, None] * grid.frames[:, 0, :]
            + kappa[:, None] * grid.frames[:, 2, :]) / denom[:, None]


# ---------------------------------------------------------- classification

@dataclass
class PathResult:
    """Outcome of one detection path (slant or general)."""
    passed: bool
    cos_theta: Optional[float] = None
    C: Optional[float] = None
    axis: Optional[np.ndarray] = None
    constancy_residual: float = float("inf")
    axis_residual: float = float("inf")
    integration_constant: Optional[float] = None
    error: Optional[str] = None

    def to_dict(self):
        d = {
            "passed": bool(self.passed),
            "cos_theta": _num(self.cos_theta),
            "C": _num(self.C),
            "axis": None if self.axis is None else list(map(float, self.axis)),
            "constancy_residual": _num(self.constancy_residual),
            "axis_residual": _num(self.axis_residual),
            "error": self.error,
        }
        if self.integration_constant is not None:
            d["integration_constant"] = float(self.integration_constant)
        return d


@dataclass
class HintResult:
    """Constancy of the frame angles against a supplied direction."""
    direction: np.ndarray
    v1_mean: float
    v1_std: float
    v2_mean: Optional[float]
    v2_std: Optional[float]

    def to_dict(self):
        return {
            "direction": list(map(float, self.direction)),
            "v1_mean": _num(self.v1_mean), "v1_std": _num(self.v1_std),
            "v2_mean": _num(self.v2_mean), "v2_std": _num(self.v2_std),
        }


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


@dataclass
class HelixReport:
    """Joint result of both detection paths on one curve."""
    classification: str
    slant: PathResult
    general: PathResult
    masked_fraction: float
    planar: bool = False
    planar_normal: Optional[np.ndarray] = None
    hint: Optional[HintResult] = None
    grid: Optional[FrenetGrid] = field(default=None, repr=False)

    @property
    def _primary(self):
        if self.classification == "general-helix":
            return self.general
        return self.slant

    @property
    def cos_theta(self):
        return self._primary.cos_theta

    @property
    def theta(self):
        c = self._primary.cos_theta
        return None if c is None else math.acos(max(-1.0, min(1.0, c)))

    @property
    def C(self):
        return self._primary.C

    @property
    def axis(self):
        return self._primary.axis

    @property
    def constancy_residual(self):
        return self._primary.constancy_residual

    @property
    def axis_residual(self):
        return self._primary.axis_residual

    def to_dict(self):
        d = {
            "classification": self.classification,
            "cos_theta": _num(self.cos_theta),
            "C": _num(self.C),
            "axis": None if self.axis is None
                    else list(map(float, self.axis)),
            "constancy_residual": _num(self.constancy_residual),
            "axis_residual": _num(self.axis_residual),
            "masked_fraction": _num(self.masked_fraction),
            "planar": bool(self.planar),
            "slant": self.slant.to_dict(),
            "general": self.general.to_dict(),
        }
        if self.planar_normal is not None:
            d["planar_normal"] = list(map(float, self.planar_normal))
        if self.hint is not None:
            d["hint"] = self.hint.to_dict()
        return d


def _constancy(x):
    mean = float(np.mean(x))
    std = float(np.std(x))
    return std / max(abs(mean), 1e-300), mean


def _run_path(kind, grid, tol_axis, tol_const):
    try:
        funcs = (slant_functions if kind == "slant"
                 else general_functions)(grid)
    except UnreliableResultError as exc:
        return PathResult(False, error=str(exc))
    totals = np.sum(funcs.values ** 2, axis=1)
    residual, C = _constancy(totals[funcs.mask])
    rows = axis_field(funcs, grid)
    axis, axis_resid = _axis_statistics(rows, funcs.mask)
    passed = (residual <= tol_const and axis_resid <= tol_axis
              and axis is not None)
    cos_theta = 1.0 / math.sqrt(C) if C >= 1.0 else None
    r = PathResult(passed, cos_theta, C, axis, residual, axis_resid)
    if kind == "slant":
        r.integration_constant = funcs.integration_constant
    return r


def _detect_hyperplane(grid):
    """Decide whether the curve stays in a hyperplane; return (flag, normal).

    The direct signal is the jet rank dropping to n-1 (last curvature under
    EPS_CURV).  Sampled curves can hide that drop in derivative noise, so a
    constant last frame vector V_n also counts: it needs one derivative less
    than the last curvature and is the hyperplane normal in both cases.
    """
    n = grid.dim
    ranks = grid.degenerate_ranks
    flat = ranks == n - 1
    usable = (ranks == 0) | flat
    if not np.any(usable):
        return False, None
    rows = grid.frames[usable, n - 1, :]
    rows = rows * np.where(rows @ rows[0] < 0.0, -1.0, 1.0)[:, None]
    mean = rows.mean(axis=0)
    nm = np.linalg.norm(mean)
    if nm <= 1e-12:
        return False, None
    normal = mean / nm
    if np.mean(flat) > 0.9:
        return True, normal
    if np.mean(usable) > 0.9:
        dots = np.clip(np.abs(rows @ normal), -1.0, 1.0)
        if float(np.arccos(dots).max()) <= TOL_PLANAR:
            return True, normal
    return False, None


def classify(c: Curve, axis_hint=None, grid_size: int = 512, domain=None,
             margin: float = 0.0, tol_axis: float = TOL_AXIS,
             tol_const: float = TOL_CONST) -> HelixReport:
    """Run both helix detection paths on a curve.

    The curve is reparametrized by arc length first if needed.  When an
    axis_hint direction is given, the report additionally carries the
    constancy statistics of the frame angles against that direction, which
    is the only way to see the cos(theta) = 0 degenerate helices.
    Heavy masking or degeneracy is reported in the result, not raised.
    """
    uc = curvemod.arclength_reparametrize(c)
    grid = frenet_grid(uc, grid_size, domain=domain, margin=margin)
    n = grid.dim

    mask = recursion_mask(grid)
    masked_fraction = 1.0 - float(np.mean(mask))

    slant = _run_path("slant", grid, tol_axis, tol_const)
    general = _run_path("general", grid, tol_axis, tol_const)

    if slant.passed and general.passed:
        classification = "both"
    elif slant.passed:
        classification = "slant-helix"
    elif general.passed:
        classification = "general-helix"
    else:
        classification = "neither"

    planar, planar_normal = _detect_hyperplane(grid)

    hint = None
    if axis_hint is not None:
        d = np.asarray(axis_hint, dtype=float)
        d = d / np.linalg.norm(d)
        ranks = grid.degenerate_ranks
        v1 = grid.frames[:, 0, :] @ d       # V_1 defined at every sample
        ok2 = (ranks == 0) | (ranks >= 2)   # V_2 needs rank at least 2
        v2 = grid.frames[ok2, 1, :] @ d if np.any(ok2) else None
        hint = HintResult(
            d, float(np.mean(v1)), float(np.std(v1)),
            None if v2 is None else float(np.mean(v2)),
            None if v2 is None else float(np.std(v2)),
        )

    return HelixReport(classification, slant, general, masked_fraction,
                       planar, planar_normal, hint, grid)


# ------------------------------------------------------------- indicatrix

def _restrict_domain(c, domain, margin):
    a, b = c.domain
    if domain is not None:
        a, b = float(domain[0]), float(domain[1])
    trim = margin * (b - a)
    return a + trim, b - trim


def tangent_indicatrix(c: Curve, domain=None, margin: float = 0.0) -> Curve:
    """Unit tangent image of the curve, reparametrized by its own arc length.

    The indicatrix consumes arc length at rate k_1, so the construction
    needs k_1 > 0 on the (optionally restricted) domain; a vanishing first
    curvature is reported as degeneracy.  Every returned point lies on the
    unit sphere.
    """
    uc = curvemod.arclength_reparametrize(c)
    a, b = _restrict_domain(uc, domain, margin)

    try:
        if isinstance(uc, AnalyticCurve):
            beta = AnalyticCurve(uc.derivative_expressions(1), (a, b),
                                 uc.parameter)
            return curvemod.arclength_reparametrize(beta)
        if isinstance(uc, ReparametrizedCurve):
            src = uc.source
            v = src.speed_expression()
            comps = tuple(expr.Div(e, v)
                          for e in src.derivative_expressions(1))
            t0 = float(uc.parameter_of_arclength(a))
            t1 = float(uc.parameter_of_arclength(b))
            beta = AnalyticCurve(comps, (t0, t1), src.parameter)
            return curvemod.arclength_reparametrize(beta)
        if isinstance(uc, SampledCurve):
            keep = (uc.params >= a) & (uc.params <= b)
            params = uc.params[keep]
            rows = uc.jet_grid(params, 1)[:, 0, :]
            rows /= np.linalg.norm(rows, axis=1, keepdims=True)
            beta = SampledCurve(params, rows)
            return curvemod.arclength_reparametrize(beta)
    except NonRegularCurveError as exc:
        raise DegenerateCurveError(
            f"tangent indicatrix needs k_1 > 0 on the domain: {exc}") from exc
    raise DegenerateCurveError(
        f"cannot build an indicatrix for {type(uc).__name__}")


@dataclass
class AxisComparison:
    """Axes recovered from a curve and from its tangent indicatrix."""
    axis_of_curve: np.ndarray
    axis_of_indicatrix: np.ndarray
    angle_between: float
    curve_report: HelixReport = field(repr=False, default=None)
    indicatrix_report: HelixReport = field(repr=False, default=None)

    def to_dict(self):
        return {
            "axis_of_curve": list(map(float, self.axis_of_curve)),
            "axis_of_indicatrix": list(map(float, self.axis_of_indicatrix)),
            "angle_between": float(self.angle_between),
        }


def verify_same_axis(c: Curve, grid_size: int = 512, domain=None,
                     margin: float = 0.0, tol_axis: float = TOL_AXIS,
                     tol_const: float = TOL_CONST) -> AxisComparison:
    """Compare the slant axis of a curve with its indicatrix's general axis.

    The curve must classify as a slant helix; its tangent indicatrix is then
    classified as a general helix and the two ambient directions are
    compared.  A failed precondition raises with the offending report
    attached.
    """
    report = classify(c, grid_size=grid_size, domain=domain, margin=margin,
                      tol_axis=tol_axis, tol_const=tol_const)
    if report.classification not in ("slant-helix", "both"):
        raise ClassificationError(
            f"curve classifies as {report.classification}, not slant-helix",
            report=report)

    beta = tangent_indicatrix(c, domain=domain, margin=margin)
    beta_report = classify(beta, grid_size=grid_size, margin=0.02,
                           tol_axis=tol_axis, tol_const=tol_const)
    if beta_report.general.axis is None:
        raise ClassificationError(
            "indicatrix did not yield a general-helix axis",
            report=beta_report)

    a1 = report.slant.axis
    a2 = beta_report.general.axis
    angle = float(np.arccos(np.clip(a1 @ a2, -1.0, 1.0)))
    return AxisComparison(a1, a2, angle, report, beta_report)
