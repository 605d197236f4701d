"""Parametric hypersurfaces, the constant-normal-angle test, and geodesics.

A hypersurface in E^n carries a candidate fixed direction d.  The surface
keeps a constant angle when <d, xi> is constant over the parameter box, xi
being the unit normal from the generalized cross product of the coordinate
tangents in index order.  Geodesics integrate the ambient equation
alpha'' = lambda * xi with a classical fourth-order scheme, projecting back
onto the surface after every step.

Along a geodesic of such a surface the normal coincides with the curve's
principal normal up to sign, so the geodesic is a slant helix for d and its
tangent indicatrix is a spherical general helix about the same direction;
verify_geodesic_theorems checks all of that numerically, including that the
indicatrix axes of different geodesics agree pairwise.
"""

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import expr
from .curve import SampledCurve, _load_json
from .errors import CurveFormatError, SurfaceError
from .frenet import generalized_cross
from .helix import classify, tangent_indicatrix

__all__ = [
    "Hypersurface", "GeodesicSample", "GeodesicCheck", "SurfaceGeodesicReport",
    "load_surface", "is_helix_surface", "geodesic", "samples_to_curve",
    "verify_geodesic_theorems", "GEODESIC_STEP",
]

GEODESIC_STEP = 1e-3

HELIX_SURFACE_TOL = 1e-6
PROJECTION_TOL = 1e-10
_IMMERSION_GRID = 8

# parameter offset for directional derivatives of the normal: the normal is
# exact to machine precision, so the classic cube-root-of-eps balance applies
_FD_EPS = float(np.finfo(float).eps) ** (1.0 / 3.0)


def _fmt(u):
    return "(" + ", ".join(f"{float(x):g}" for x in u) + ")"


class Hypersurface:
    """Immersed parametric hypersurface with a candidate fixed direction.

    components map n-1 parameters to a point of E^n; domain is one (lo, hi)
    interval per parameter; direction is the unit vector whose angle against
    the surface normal is under investigation.
    """

    def __init__(self, components, parameters, domain, direction):
        self.parameters = tuple(str(p) for p in parameters)
        if len(set(self.parameters)) != len(self.parameters):
            raise SurfaceError("parameter names must be distinct")
        n = len(self.parameters) + 1
        if len(components) != n:
            raise SurfaceError(
                f"{len(self.parameters)} parameters need {n} components, "
                f"got {len(components)}")
        self.components = tuple(
            c if isinstance(c, expr.Expression) else expr.parse(c, self.parameters)
            for c in components)
        self.dim = n

        box = []
        for pair in domain:
            lo, hi = float(pair[0]), float(pair[1])
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise SurfaceError(f"bad parameter interval ({lo}, {hi})")
            box.append((lo, hi))
        if len(box) != n - 1:
            raise SurfaceError("need one parameter interval per parameter")
        self.domain = tuple(box)

        d = np.asarray(direction, dtype=float)
        if d.shape != (n,) or not np.all(np.isfinite(d)):
            raise SurfaceError(f"direction must be a finite vector of length {n}")
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise SurfaceError("direction must be a unit vector")
        self.direction = d

        self._point_fns = [expr.compile_scalar(c, self.parameters)
                           for c in self.components]
        self._jac_fns = [[expr.compile_scalar(expr.differentiate(c, p),
                                              self.parameters)
                          for p in self.parameters] for c in self.components]
        self._verify_immersion()

    def point(self, u):
        u = np.asarray(u, dtype=float)
        return np.array([f(*u) for f in self._point_fns])

    def jacobian(self, u):
        """Matrix of coordinate tangents, component i by parameter j."""
        u = np.asarray(u, dtype=float)
        return np.array([[f(*u) for f in row] for row in self._jac_fns])

    def normal(self, u):
        return self._unit_normal(self.jacobian(u), u)

    def _unit_normal(self, jac, u):
        w = generalized_cross(jac.T[np.newaxis])[0]
        scale = float(np.prod(np.maximum(np.linalg.norm(jac, axis=0), 1e-300)))
        norm = float(np.linalg.norm(w))
        if norm <= 1e-10 * max(scale, 1e-30):
            raise SurfaceError(f"rank-deficient tangent map at {_fmt(u)}")
        return w / norm

    def contains_parameters(self, u):
        u = np.asarray(u, dtype=float)
        for value, (lo, hi) in zip(u, self.domain):
            tol = 1e-9 * (hi - lo)
            if not (lo - tol <= value <= hi + tol):
                return False
        return True

    def _verify_immersion(self):
        axes = [np.linspace(lo, hi, _IMMERSION_GRID) for lo, hi in self.domain]
        for u in itertools.product(*axes):
            jac = self.jacobian(u)
            if not np.all(np.isfinite(jac)):
                raise SurfaceError(f"non-finite tangent map at {_fmt(u)}")
            sv = np.linalg.svd(jac, compute_uv=False)
            if sv[-1] <= 1e-10 * max(1.0, sv[0]):
                raise SurfaceError(
                    f"rank-deficient tangent map at {_fmt(u)}; "
                    "shrink the parameter box away from the singular set")


def load_surface(source) -> Hypersurface:
    """Build a hypersurface from a spec dict, a JSON string, or a file path.

    Schema: {"dim": n, "parameters": ["u", "v"], "components": [n exprs],
    "domain": [[u0, u1], [v0, v1]], "direction": [d1..dn]}
    """
    data = _load_json(source)
    if not isinstance(data, dict):
        raise CurveFormatError("surface spec must be a JSON object")
    try:
        dim = int(data["dim"])
    except (KeyError, TypeError, ValueError):
        raise CurveFormatError('surface spec needs an integer "dim"') from None
    if dim < 2:
        raise CurveFormatError("surface dimension must be at least 2")

    params = data.get("parameters")
    if (not isinstance(params, list) or len(params) != dim - 1
            or not all(isinstance(p, str) for p in params)):
        raise CurveFormatError(f'"parameters" must list {dim - 1} names')
    comps = data.get("components")
    if not isinstance(comps, list) or len(comps) != dim:
        raise CurveFormatError(f'"components" must list {dim} expressions')
    if not all(isinstance(c, str) for c in comps):
        raise CurveFormatError("surface components must be strings")
    box = data.get("domain")
    if (not isinstance(box, list) or len(box) != dim - 1
            or not all(isinstance(pair, list) and len(pair) == 2 for pair in box)):
        raise CurveFormatError(f'"domain" must list {dim - 1} intervals')
    direction = data.get("direction")
    if not isinstance(direction, list) or len(direction) != dim:
        raise CurveFormatError(f'"direction" must be a vector of length {dim}')

    try:
        return Hypersurface(comps, params, box, direction)
    except expr.ExprParseError as exc:
        raise CurveFormatError(f"bad component expression: {exc}") from exc
    except SurfaceError as exc:
        raise CurveFormatError(str(exc)) from exc


def is_helix_surface(h: Hypersurface, grid_size: int = 64) -> dict:
    """Test whether <direction, normal> is constant over the parameter box.

    Returns mean value, absolute standard deviation, and the verdict at
    tolerance 1e-6.  The grid has grid_size points per parameter.
    """
    axes = [np.linspace(lo, hi, grid_size) for lo, hi in h.domain]
    dots = np.empty([grid_size] * len(axes))
    for idx in np.ndindex(dots.shape):
        u = np.array([axes[j][idx[j]] for j in range(len(axes))])
        dots[idx] = float(h.normal(u) @ h.direction)
    value = float(dots.mean())
    residual = float(dots.std())
    return {"constant": residual <= HELIX_SURFACE_TOL,
            "value": value, "residual": residual}


@dataclass(frozen=True)
class GeodesicSample:
    """One integration node: arc length, state, and the normal acceleration.

    The acceleration along a geodesic is normal_accel * normal; the sign
    is meaningful (negative when the surface curves away from the normal).
    """
    s: float
    position: np.ndarray
    velocity: np.ndarray
    normal_accel: float
    parameters: np.ndarray


def _parameter_velocity(jac, v):
    # least-squares pullback of an ambient tangent vector to parameter space
    return np.linalg.solve(jac.T @ jac, jac.T @ v)


def _geodesic_rhs(h: Hypersurface, p, v):
    jac = h.jacobian(p)
    pdot = _parameter_velocity(jac, v)
    xi = h._unit_normal(jac, p)
    step = _FD_EPS / max(1.0, float(np.linalg.norm(pdot)))
    xi_fwd = h.normal(p + step * pdot)
    xi_bwd = h.normal(p - step * pdot)
    dxi = (xi_fwd - xi_bwd) / (2.0 * step)
    lam = -float(v @ dxi)
    return pdot, lam * xi, lam


def _project(h: Hypersurface, p, x):
    """Newton steps in parameter space toward the closest surface point."""
    for _ in range(12):
        r = h.point(p) - x
        if np.linalg.norm(r) <= 1e-13:
            break
        jac = h.jacobian(p)
        p = p - np.linalg.solve(jac.T @ jac, jac.T @ r)
    if np.linalg.norm(h.point(p) - x) > PROJECTION_TOL:
        raise SurfaceError("surface projection diverged")
    return p


def geodesic(h: Hypersurface, start, tangent, length: float,
             steps: Optional[int] = None):
    """Integrate a unit-speed geodesic; returns a list of GeodesicSample.

    start is a parameter point, tangent a unit ambient vector orthogonal to
    the normal there.  The default step count keeps the step at most
    GEODESIC_STEP.  Raises if the path leaves the parameter box or the
    on-surface projection stops converging.
    """
    p = np.asarray(start, dtype=float)
    if p.shape != (h.dim - 1,):
        raise SurfaceError(f"start must be a parameter point of length {h.dim - 1}")
    if not h.contains_parameters(p):
        raise SurfaceError("start lies outside the parameter box")
    v = np.asarray(tangent, dtype=float)
    if v.shape != (h.dim,):
        raise SurfaceError(f"tangent must be an ambient vector of length {h.dim}")
    if abs(np.linalg.norm(v) - 1.0) > 1e-8:
        raise SurfaceError("tangent must be a unit vector")
    xi = h.normal(p)
    if abs(float(v @ xi)) > 1e-10:
        raise SurfaceError("tangent is not orthogonal to the surface normal")
    if not (length > 0.0 and math.isfinite(length)):
        raise SurfaceError("length must be positive")
    if steps is None:
        steps = max(1, int(math.ceil(length / GEODESIC_STEP)))
    elif steps < 1:
        raise SurfaceError("steps must be positive")
    dt = length / steps

    x = h.point(p)
    samples = []
    for i in range(steps):
        pd1, a1, lam = _geodesic_rhs(h, p, v)
        samples.append(GeodesicSample(i * dt, x.copy(), v.copy(), lam, p.copy()))

        pd2, a2, _ = _geodesic_rhs(h, p + 0.5 * dt * pd1, v + 0.5 * dt * a1)
        pd3, a3, _ = _geodesic_rhs(h, p + 0.5 * dt * pd2, v + 0.5 * dt * a2)
        pd4, a4, _ = _geodesic_rhs(h, p + dt * pd3, v + dt * a3)
        p_new = p + (dt / 6.0) * (pd1 + 2.0 * pd2 + 2.0 * pd3 + pd4)
        x_new = x + dt * v + (dt * dt / 6.0) * (a1 + a2 + a3)
        v_new = v + (dt / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)

        p = _project(h, p_new, x_new)
        if not h.contains_parameters(p):
            raise SurfaceError(
                f"geodesic left the parameter box near s={(i + 1) * dt:.6g}")
        x = h.point(p)
        xi = h.normal(p)
        v = v_new - float(v_new @ xi) * xi
        v = v / np.linalg.norm(v)

    _, _, lam = _geodesic_rhs(h, p, v)
    samples.append(GeodesicSample(length, x.copy(), v.copy(), lam, p.copy()))
    return samples


def samples_to_curve(samples, spacing: float = 5e-3) -> SampledCurve:
    """Thin integration output to roughly the given arc-length spacing."""
    if len(samples) < 2:
        raise SurfaceError("need at least two geodesic samples")
    svals = np.array([smp.s for smp in samples])
    pts = np.stack([smp.position for smp in samples])
    step = float(np.median(np.diff(svals)))
    stride = max(1, int(round(spacing / step)))
    idx = list(range(0, len(samples), stride))
    if idx[-1] != len(samples) - 1:
        idx.append(len(samples) - 1)
    return SampledCurve(svals[idx], pts[idx])


@dataclass
class GeodesicCheck:
    """Verification detail for one geodesic."""
    index: int
    lambda_mean: float
    lambda_std: float
    normal_dot_mean: Optional[float] = None
    normal_dot_std: Optional[float] = None
    indicatrix_axis: Optional[np.ndarray] = None
    indicatrix_angle: Optional[float] = None
    sphere_residual: Optional[float] = None
    classification: Optional[str] = None
    error: Optional[str] = None
    passed: bool = False

    def to_dict(self):
        axis = None
        if self.indicatrix_axis is not None:
            axis = [float(a) for a in self.indicatrix_axis]
        return {
            "index": self.index,
            "lambda_mean": self.lambda_mean,
            "lambda_std": self.lambda_std,
            "normal_dot_mean": self.normal_dot_mean,
            "normal_dot_std": self.normal_dot_std,
            "indicatrix_axis": axis,
            "indicatrix_angle": self.indicatrix_angle,
            "sphere_residual": self.sphere_residual,
            "classification": self.classification,
            "error": self.error,
            "passed": self.passed,
        }


@dataclass
class SurfaceGeodesicReport:
    """Joint verdict for a surface and a family of its geodesics."""
    surface: dict
    checks: list
    pairwise_axis_angle: Optional[float]
    passed: bool

    def to_dict(self):
        return {
            "surface": self.surface,
            "geodesics": [c.to_dict() for c in self.checks],
            "pairwise_axis_angle": self.pairwise_axis_angle,
            "passed": self.passed,
        }


def _axis_angle(a, b):
    # axes are directions without orientation; fold the angle accordingly
    dot = abs(float(np.dot(a, b)))
    return math.acos(min(1.0, dot))


NORMAL_DOT_TOL = 1e-5
INDICATRIX_AXIS_TOL = 1e-3
PAIRWISE_AXIS_TOL = 2e-3


def verify_geodesic_theorems(h: Hypersurface, geodesics) -> SurfaceGeodesicReport:
    """Check the three geodesic consequences of a constant-angle surface.

    For each geodesic (list of GeodesicSample): (a) the principal normal
    keeps a constant inner product with the direction; (b) the tangent
    indicatrix lies on the unit sphere and is a general helix whose axis
    matches the direction within 1e-3; (c) indicatrix axes of different
    geodesics agree pairwise within 2e-3.  Straight segments are reported
    as degenerate and excluded.  The overall verdict also requires the
    surface itself to pass the constant-angle test.
    """
    surface = is_helix_surface(h)
    checks = []
    axes = []
    for i, samples in enumerate(geodesics):
        lam = np.array([smp.normal_accel for smp in samples])
        check = GeodesicCheck(index=i, lambda_mean=float(lam.mean()),
                              lambda_std=float(lam.std()))
        checks.append(check)
        try:
            curve = samples_to_curve(samples)
            rep = classify(curve, axis_hint=h.direction, margin=0.02)
        except Exception as exc:
            check.error = f"classification failed: {exc}"
            continue
        check.classification = rep.classification
        hint = rep.hint
        if hint is None or hint.v2_std is None:
            check.error = "degenerate: principal normal undefined (straight segment)"
            continue
        check.normal_dot_mean = hint.v2_mean
        check.normal_dot_std = hint.v2_std

        try:
            beta = tangent_indicatrix(curve, margin=0.02)
            rep_b = classify(beta, margin=0.02)
        except Exception as exc:
            check.error = f"indicatrix failed: {exc}"
            continue
        grid = np.linspace(beta.domain[0], beta.domain[1], 64)
        radii = np.linalg.norm(beta.point_grid(grid), axis=1)
        check.sphere_residual = float(np.abs(radii - 1.0).max())

        if rep_b.general.passed:
            axis = np.asarray(rep_b.general.axis)
        elif rep_b.planar and rep_b.planar_normal is not None:
            # a planar indicatrix is the cos(theta)=0 case: the tangent keeps
            # a right angle to the plane normal, which is then the axis
            axis = np.asarray(rep_b.planar_normal)
        else:
            check.error = ("indicatrix did not classify as a general helix: "
                           f"{rep_b.general.error or rep_b.classification}")
            continue
        check.indicatrix_axis = axis
        check.indicatrix_angle = _axis_angle(axis, h.direction)
        axes.append(axis)

        check.passed = (check.normal_dot_std <= NORMAL_DOT_TOL
                        and check.indicatrix_angle <= INDICATRIX_AXIS_TOL)

    pairwise = None
    if len(axes) >= 2:
        pairwise = max(_axis_angle(a, b)
                       for a, b in itertools.combinations(axes, 2))
    evaluated = [c for c in checks if c.error is None]
    passed = (surface["constant"]
              and all(c.passed for c in evaluated)
              and (pairwise is None or pairwise <= PAIRWISE_AXIS_TOL))
    return SurfaceGeodesicReport(surface=surface, checks=checks,
                                 pairwise_axis_angle=pairwise, passed=passed)
