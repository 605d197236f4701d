"""Curves in E^n and their derivative jets.

Two representations: analytic (one closed-form expression per coordinate,
differentiated symbolically) and sampled (ordered points with strictly
increasing parameter values, differentiated by finite-difference stencils on
the sample nodes).  Both expose the same `jet` interface feeding the frame
computation, which needs derivatives up to order n.

A curve carries a measured `unit_speed` flag: it is established on a
1000-point verification grid at construction, never taken from input
metadata.  `arclength_reparametrize` converts any regular curve to unit
speed and is a no-op on curves that already are.
"""

import json
import math
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import expr
from .errors import CurveError, CurveFormatError, NonRegularCurveError

__all__ = [
    "Curve", "AnalyticCurve", "SampledCurve", "ReparametrizedCurve",
    "DerivativeJet", "jet", "arclength_reparametrize", "load_curve",
    "finite_difference_weights",
]

UNIT_SPEED_TOL_ANALYTIC = 1e-8
UNIT_SPEED_TOL_SAMPLED = 1e-4
EPS_REGULAR = 1e-10

_VERIFY_GRID = 1000


def finite_difference_weights(x0, nodes, maxorder):
    """Weights for derivatives 0..maxorder at x0 from values on `nodes`.

    Classic recursive construction on arbitrary (distinct) nodes.  Returns an
    array of shape (maxorder+1, len(nodes)); row k dotted with the function
    values gives the k-th derivative approximation at x0.
    """
    x = np.asarray(nodes, dtype=float)
    n = x.size
    if maxorder >= n:
        raise ValueError("need more nodes than derivative order")
    w = np.zeros((maxorder + 1, n))
    w[0, 0] = 1.0
    c1 = 1.0
    c4 = x[0] - x0
    for i in range(1, n):
        mn = min(i, maxorder)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    w[k, i] = c1 * (k * w[k - 1, i - 1] - c5 * w[k, i - 1]) / c2
                w[0, i] = -c1 * c5 * w[0, i - 1] / c2
            for k in range(mn, 0, -1):
                w[k, j] = (c4 * w[k, j] - k * w[k - 1, j]) / c3
            w[0, j] = c4 * w[0, j] / c3
        c1 = c2
    return w


@dataclass(frozen=True)
class DerivativeJet:
    """Derivatives 1..order of a curve at one parameter value.

    `derivatives[i]` is the (i+1)-th derivative vector.
    """
    s: float
    derivatives: np.ndarray

    @property
    def order(self):
        return self.derivatives.shape[0]

    def __post_init__(self):
        if not np.all(np.isfinite(self.derivatives)):
            raise CurveError(f"non-finite derivative at s={self.s}")


class Curve:
    """Common interface: dim, domain, unit_speed, point/jet evaluation."""

    dim: int
    domain: tuple
    unit_speed: bool
    unit_speed_error: float

    def point(self, s):
        raise NotImplementedError

    def jet(self, s, order):
        raise NotImplementedError

    def jet_grid(self, svals, order):
        """Derivatives 1..order at each of svals; shape (m, order, dim)."""
        svals = np.asarray(svals, dtype=float)
        out = np.empty((svals.size, order, self.dim))
        for i, s in enumerate(svals):
            out[i] = self.jet(float(s), order).derivatives
        return out

    def point_grid(self, svals):
        svals = np.asarray(svals, dtype=float)
        return np.array([self.point(float(s)) for s in svals])

    def length(self):
        raise NotImplementedError

    def _check_domain(self, s):
        a, b = self.domain
        tol = 1e-9 * max(1.0, abs(a), abs(b))
        if s < a - tol or s > b + tol:
            raise CurveError(f"parameter {s} outside domain [{a}, {b}]")

    def _measure_unit_speed(self, tol):
        a, b = self.domain
        grid = np.linspace(a, b, _VERIFY_GRID)
        d1 = self.jet_grid(grid, 1)[:, 0, :]
        err = float(np.max(np.abs(np.linalg.norm(d1, axis=1) - 1.0)))
        self.unit_speed_error = err
        self.unit_speed = err <= tol


class AnalyticCurve(Curve):
    """Curve given by closed-form coordinate expressions in one parameter."""

    def __init__(self, components, domain, parameter="s"):
        comps = []
        for c in components:
            comps.append(c if isinstance(c, expr.Expression)
                         else expr.parse(c, variables=(parameter,)))
        if len(comps) < 2:
            raise CurveError("need at least 2 components")
        a, b = float(domain[0]), float(domain[1])
        if not (math.isfinite(a) and math.isfinite(b) and a < b):
            raise CurveError(f"bad domain [{a}, {b}]")
        self.components = tuple(comps)
        self.dim = len(comps)
        self.domain = (a, b)
        self.parameter = parameter
        self._deriv_exprs = [self.components]   # order 0
        self._compiled = {}
        self._measure_unit_speed(UNIT_SPEED_TOL_ANALYTIC)

    def derivative_expressions(self, order):
        """Tuple of coordinate expressions for the order-th derivative."""
        while len(self._deriv_exprs) <= order:
            prev = self._deriv_exprs[-1]
            self._deriv_exprs.append(tuple(
                expr.differentiate(e, self.parameter) for e in prev))
        return self._deriv_exprs[order]

    def _fns(self, order):
        if order not in self._compiled:
            self._compiled[order] = tuple(
                expr.compile_array(e, (self.parameter,))
                for e in self.derivative_expressions(order))
        return self._compiled[order]

    def point(self, s):
        self._check_domain(s)
        return np.array([expr.evaluate(e, {self.parameter: s})
                         for e in self.components])

    def jet(self, s, order):
        self._check_domain(s)
        if order < 1:
            raise CurveError("jet order must be >= 1")
        rows = [[expr.evaluate(e, {self.parameter: s})
                 for e in self.derivative_expressions(k)]
                for k in range(1, order + 1)]
        return DerivativeJet(s, np.array(rows, dtype=float))

    def jet_grid(self, svals, order):
        svals = np.asarray(svals, dtype=float)
        out = np.empty((svals.size, order, self.dim))
        for k in range(1, order + 1):
            for j, f in enumerate(self._fns(k)):
                out[:, k - 1, j] = f(svals)
        if not np.all(np.isfinite(out)):
            raise CurveError("non-finite derivative on grid")
        return out

    def point_grid(self, svals):
        svals = np.asarray(svals, dtype=float)
        return np.stack([f(svals) for f in self._fns(0)], axis=1)

    def speed_expression(self):
        total = None
        for e in self.derivative_expressions(1):
            p = expr.Pow(e, 2.0)
            total = p if total is None else expr.Add(total, p)
        return expr.Call("sqrt", total)

    def length(self):
        f = expr.compile_scalar(self.speed_expression(), (self.parameter,))
        return _adaptive_simpson(f, *self.domain, 1e-10)


# windows for sampled-curve stencils: 5 nodes covers d1/d2, 7 covers d3/d4
_WINDOW = {0: 5, 1: 5, 2: 5, 3: 7, 4: 7}


class SampledCurve(Curve):
    """Curve given by sample points at strictly increasing parameter values.

    Derivatives come from polynomial stencils on nearby samples.  The stencil
    stride widens with derivative order: the k-th derivative divides by h^k,
    so reading adjacent samples at fine spacing amplifies roundoff; spacing
    the stencil nodes ~eps^(1/(k+4)) apart balances truncation against noise.
    Orders above 4 are not supported; use an analytic curve for n >= 5.
    """

    def __init__(self, params, points):
        params = np.asarray(params, dtype=float)
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or params.ndim != 1 or len(params) != len(points):
            raise CurveError("need parallel arrays of parameters and points")
        n = points.shape[1]
        if n < 2:
            raise CurveError("need at least 2 coordinates")
        if len(params) < 2 * (n + 2):
            raise CurveError(
                f"need at least {2 * (n + 2)} samples for dimension {n}")
        if not np.all(np.diff(params) > 0):
            raise CurveError("parameter values must be strictly increasing")
        if not (np.all(np.isfinite(params)) and np.all(np.isfinite(points))):
            raise CurveError("non-finite sample data")
        self.params = params
        self.points = points
        self.dim = n
        self.domain = (float(params[0]), float(params[-1]))
        self._h_med = float(np.median(np.diff(params)))
        self._measure_unit_speed(UNIT_SPEED_TOL_SAMPLED)

    def _stencil(self, s, k):
        """Node indices for the order-k stencil at s."""
        m = len(self.params)
        w = _WINDOW[k]
        if k == 0:
            stride = 1
        else:
            h_target = np.finfo(float).eps ** (1.0 / (k + 4))
            stride = int(round(h_target / self._h_med))
            stride = max(1, min(stride, (m - 1) // (w - 1)))
        center = bisect_left(self.params, s)
        first = center - (w // 2) * stride
        span = (w - 1) * stride
        first = max(0, min(first, m - 1 - span))
        return np.arange(first, first + span + 1, stride)

    def point(self, s):
        self._check_domain(s)
        idx = self._stencil(s, 0)
        w = finite_difference_weights(s, self.params[idx], 0)
        return w[0] @ self.points[idx]

    def jet(self, s, order):
        self._check_domain(s)
        if order < 1:
            raise CurveError("jet order must be >= 1")
        if order > 4:
            raise CurveError(
                "sampled curves support derivatives up to order 4; "
                "use an analytic curve for higher order")
        rows = np.empty((order, self.dim))
        for k in range(1, order + 1):
            idx = self._stencil(s, k)
            w = finite_difference_weights(s, self.params[idx], k)
            rows[k - 1] = w[k] @ self.points[idx]
        return DerivativeJet(s, rows)

    def length(self):
        speeds = np.linalg.norm(self.jet_grid(self.params, 1)[:, 0, :], axis=1)
        return float(np.trapezoid(speeds, self.params))


def _adaptive_simpson(f, a, b, tol):
    """Adaptive Simpson quadrature of a scalar function."""
    def simp(a, fa, m, fm, b, fb):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, fa, m, fm, b, fb, whole, tol, depth):
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm = f(lm)
        frm = f(rm)
        left = simp(a, fa, lm, flm, m, fm)
        right = simp(m, fm, rm, frm, b, fb)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return (recurse(a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1)
                + recurse(m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1))

    m = 0.5 * (a + b)
    fa, fm, fb = f(a), f(m), f(b)
    return recurse(a, fa, m, fm, b, fb, simp(a, fa, m, fm, b, fb), tol, 48)


# inverse-function derivatives of t(s) given speed v = ds/dt and its
# t-derivatives, evaluated at t; primes are d/dt
#   t'    = 1/v
#   t''   = -v'/v^3
#   t'''  = -v''/v^4 + 3 v'^2/v^5
#   t'''' = -v'''/v^5 + 10 v'v''/v^6 - 15 v'^3/v^7
def _inverse_derivs(v, v1, v2, v3):
    g1 = 1.0 / v
    g2 = -v1 / v ** 3
    g3 = -v2 / v ** 4 + 3.0 * v1 ** 2 / v ** 5
    g4 = -v3 / v ** 5 + 10.0 * v1 * v2 / v ** 6 - 15.0 * v1 ** 3 / v ** 7
    return g1, g2, g3, g4


class ReparametrizedCurve(Curve):
    """Arc-length reparametrization of an analytic curve.

    Keeps the source curve and composes its t-jets with the derivatives of
    the inverse arc-length function t(s).  Supports jets up to order 4, which
    covers frames in dimensions up to 4.
    """

    _TABLE = 4096

    def __init__(self, source: AnalyticCurve):
        self.source = source
        self.dim = source.dim
        self.parameter = source.parameter

        v_expr = source.speed_expression()
        var = source.parameter
        v1_expr = expr.differentiate(v_expr, var)
        v2_expr = expr.differentiate(v1_expr, var)
        v3_expr = expr.differentiate(v2_expr, var)
        self._speed_fns = tuple(expr.compile_array(e, (var,))
                                for e in (v_expr, v1_expr, v2_expr, v3_expr))

        a, b = source.domain
        t = np.linspace(a, b, self._TABLE + 1)
        v = self._speed_fns[0](t)
        if not np.all(np.isfinite(v)) or np.min(v) < EPS_REGULAR:
            i = int(np.argmin(v))
            raise NonRegularCurveError(
                f"speed {v[i]:.3e} at t={t[i]:.6g} below {EPS_REGULAR}")
        # cumulative arc length at the table nodes, each panel to 1e-12
        fscalar = expr.compile_scalar(v_expr, (var,))
        panels = [_adaptive_simpson(fscalar, t[i], t[i + 1], 1e-12 / self._TABLE)
                  for i in range(self._TABLE)]
        svals = np.concatenate([[0.0], np.cumsum(panels)])
        self._t_nodes = t
        self._s_nodes = svals
        self._forward = PchipInterpolator(t, svals)
        self._inverse = PchipInterpolator(svals, t)
        self.total_length = float(svals[-1])
        self.domain = (0.0, self.total_length)
        self._measure_unit_speed(UNIT_SPEED_TOL_ANALYTIC)

    def parameter_of_arclength(self, s):
        """Source parameter t at arc length s (interpolated + one Newton step)."""
        s = np.asarray(s, dtype=float)
        t = self._inverse(s)
        t = t - (self._forward(t) - s) / self._speed_fns[0](t)
        a, b = self.source.domain
        return np.clip(t, a, b)

    def point(self, s):
        self._check_domain(s)
        t = float(self.parameter_of_arclength(s))
        return self.source.point(t)

    def jet(self, s, order):
        self._check_domain(s)
        ders = self.jet_grid(np.array([s]), order)[0]
        return DerivativeJet(s, ders)

    def jet_grid(self, svals, order):
        if order < 1:
            raise CurveError("jet order must be >= 1")
        if order > 4:
            raise CurveError(
                "arc-length reparametrization supports derivatives up to "
                "order 4; supply a unit-speed analytic curve for higher order")
        svals = np.asarray(svals, dtype=float)
        t = self.parameter_of_arclength(svals)
        f = self.source.jet_grid(t, order)          # (m, order, dim) in t
        v = [fn(t) for fn in self._speed_fns]
        g1, g2, g3, g4 = _inverse_derivs(*v)
        out = np.empty((svals.size, order, self.dim))
        # chain rule for derivatives of alpha(t(s)) through order 4
        out[:, 0, :] = f[:, 0, :] * g1[:, None]
        if order >= 2:
            out[:, 1, :] = (f[:, 1, :] * (g1 ** 2)[:, None]
                            + f[:, 0, :] * g2[:, None])
        if order >= 3:
            out[:, 2, :] = (f[:, 2, :] * (g1 ** 3)[:, None]
                            + 3.0 * f[:, 1, :] * (g1 * g2)[:, None]
                            + f[:, 0, :] * g3[:, None])
        if order >= 4:
            out[:, 3, :] = (f[:, 3, :] * (g1 ** 4)[:, None]
                            + 6.0 * f[:, 2, :] * (g1 ** 2 * g2)[:, None]
                            + f[:, 1, :] * (3.0 * g2 ** 2 + 4.0 * g1 * g3)[:, None]
                            + f[:, 0, :] * g4[:, None])
        if not np.all(np.isfinite(out)):
            raise CurveError("non-finite derivative on grid")
        return out

    def point_grid(self, svals):
        t = self.parameter_of_arclength(np.asarray(svals, dtype=float))
        return self.source.point_grid(t)

    def length(self):
        return self.total_length


def jet(c: Curve, s: float, order: int) -> DerivativeJet:
    """Derivatives 1..order of the curve at s."""
    return c.jet(s, order)


def arclength_reparametrize(c: Curve) -> Curve:
    """Return a unit-speed version of the curve (the curve itself if already).

    Analytic curves get an exact quadrature table with interpolated inverse;
    sampled curves get their parameter values replaced by cumulative arc
    length.  Raises NonRegularCurveError where the speed drops below 1e-10.
    """
    if c.unit_speed:
        return c
    if isinstance(c, AnalyticCurve):
        return ReparametrizedCurve(c)
    if isinstance(c, SampledCurve):
        speeds = np.linalg.norm(c.jet_grid(c.params, 1)[:, 0, :], axis=1)
        if np.min(speeds) < EPS_REGULAR:
            i = int(np.argmin(speeds))
            raise NonRegularCurveError(
                f"speed {speeds[i]:.3e} at t={c.params[i]:.6g} "
                f"below {EPS_REGULAR}")
        s = np.concatenate([[0.0],
                            np.cumsum(np.diff(c.params)
                                      * 0.5 * (speeds[1:] + speeds[:-1]))])
        return SampledCurve(s, c.points)
    raise CurveError(f"cannot reparametrize {type(c).__name__}")


def load_curve(source) -> Curve:
    """Build a curve from a spec dict, a JSON string, or a file path.

    Analytic: {"dim": n, "parameter": "s", "components": [...], "domain": [a, b]}
    Sampled:  {"dim": n, "samples": [[t, x1, .., xn], ...]}
    """
    data = _load_json(source)
    if not isinstance(data, dict):
        raise CurveFormatError("curve spec must be a JSON object")
    try:
        dim = int(data["dim"])
    except (KeyError, TypeError, ValueError):
        raise CurveFormatError('curve spec needs an integer "dim"') from None

    if "components" in data:
        comps = data["components"]
        domain = data.get("domain")
        if not isinstance(comps, list) or len(comps) != dim:
            raise CurveFormatError(f'"components" must list {dim} expressions')
        if (not isinstance(domain, list)) or len(domain) != 2:
            raise CurveFormatError('"domain" must be [a, b]')
        parameter = data.get("parameter", "s")
        if not isinstance(parameter, str):
            raise CurveFormatError('"parameter" must be a string')
        try:
            return AnalyticCurve(comps, domain, parameter)
        except (CurveError, expr.ExprParseError) as exc:
            raise CurveFormatError(f"bad analytic curve: {exc}") from exc

    if "samples" in data:
        rows = data["samples"]
        if not isinstance(rows, list) or not rows:
            raise CurveFormatError('"samples" must be a non-empty list')
        try:
            arr = np.asarray(rows, dtype=float)
        except (TypeError, ValueError):
            raise CurveFormatError("samples must be numeric rows") from None
        if arr.ndim != 2 or arr.shape[1] != dim + 1:
            raise CurveFormatError(
                f"each sample row must hold [t, x1..x{dim}]")
        try:
            return SampledCurve(arr[:, 0], arr[:, 1:])
        except CurveError as exc:
            raise CurveFormatError(f"bad sampled curve: {exc}") from exc

    raise CurveFormatError(
        'curve spec needs either "components"/"domain" or "samples"')


def _load_json(source):
    if isinstance(source, dict):
        return source
    text = str(source)
    if text.lstrip().startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise CurveFormatError(f"invalid JSON: {exc}") from exc
    try:
        with open(text) as fh:
            return json.load(fh)
    except OSError as exc:
        raise CurveFormatError(f"cannot read {text}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CurveFormatError(f"invalid JSON in {text}: {exc}") from exc
