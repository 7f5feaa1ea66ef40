"""Horizontal curves in graded groups: lifting through the layer-triangular
contact ODE, horizontality checks, difference quotients of Pansu type,
group-valued Riemann sums, and variation.

A curve Gamma = exp(gamma) is horizontal iff for every layer i >= 2

    dgamma_i/dt = sum_{n=2}^{step} ((-1)^n / n!) pi_i([gamma, dgamma/dt]_{n-1}),

and the right side at layer i only involves derivative components of layers
below i, so the lift integrates layer by layer.  The integrator is classical
RK4 with a Richardson halving check; the system is polynomial and non-stiff.
"""

import math
from dataclasses import dataclass

import numpy as np

from .algebra import GroupElement, EmpiricalConstant
from .bch import _bch_terms, _FloatRecOps
from .metric import quasi_norm, default_metric


# ---------------------------------------------------------------------------
# data containers
# ---------------------------------------------------------------------------

class SampledCurve:
    """Discretized curve: strictly increasing time grid and per-sample
    exponential coordinates, shape (n, dim)."""

    def __init__(self, algebra, ts, coords, control=None):
        self.algebra = algebra
        self.ts = np.asarray(ts, dtype=float)
        self.coords = np.asarray(coords, dtype=float)
        assert self.ts.ndim == 1 and self.coords.shape == (len(self.ts), algebra.dim)
        assert np.all(np.diff(self.ts) > 0), "time grid must be strictly increasing"
        assert np.all(np.isfinite(self.coords)), "coordinates must be finite"
        self.control = control

    @property
    def domain(self):
        return float(self.ts[0]), float(self.ts[-1])

    def eval(self, t):
        """Linear interpolation; exact at grid points."""
        return np.array([np.interp(t, self.ts, self.coords[:, k])
                         for k in range(self.algebra.dim)])

    def derivative_grid(self):
        """Central differences in the interior, one-sided at the ends."""
        return np.gradient(self.coords, self.ts, axis=0)


@dataclass
class HorizontalControl:
    """First-layer velocity t -> coordinates on the layer-1 basis (length
    dim V_1); `breakpoints` mark the discontinuities of piecewise controls."""
    fn: object
    domain: tuple
    smoothness: str = "smooth"
    breakpoints: tuple = ()
    name: str = ""

    def __call__(self, t):
        return np.asarray(self.fn(t), dtype=float)


def control_from_csv(algebra, path):
    """Sampled control from a CSV with column t followed by one column per
    first-layer coordinate; linear interpolation between samples."""
    m = len(algebra.layer_indices(1))
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    ts, vals = data[:, 0], data[:, 1:]
    assert vals.shape[1] == m, "expected %d control columns" % m
    assert np.all(np.diff(ts) > 0)

    def fn(t):
        return np.array([np.interp(t, ts, vals[:, k]) for k in range(m)])

    return HorizontalControl(fn, (float(ts[0]), float(ts[-1])), "sampled",
                             name="csv")


def make_control(algebra, name, **params):
    """Built-ins: line, circle, square, parabola (the last three use the
    first two horizontal directions)."""
    m = len(algebra.layer_indices(1))
    if name == "line":
        direction = np.asarray(params.get("direction", [1.0] + [0.0] * (m - 1)))
        return HorizontalControl(lambda t: direction, params.get("domain", (0.0, 1.0)),
                                 "smooth", name="line")
    assert m >= 2, "control %r needs at least two horizontal directions" % name
    if name == "circle":
        r = float(params.get("radius", 1.0))

        def fn(t):
            out = np.zeros(m)
            out[0], out[1] = -r * math.sin(t), r * math.cos(t)
            return out
        return HorizontalControl(fn, params.get("domain", (0.0, 2 * math.pi)),
                                 "smooth", name="circle")
    if name == "square":
        def fn(t):
            out = np.zeros(m)
            s = t % 4.0
            if s < 1:
                out[0] = 1.0
            elif s < 2:
                out[1] = 1.0
            elif s < 3:
                out[0] = -1.0
            else:
                out[1] = -1.0
            return out
        return HorizontalControl(fn, (0.0, 4.0), "piecewise",
                                 breakpoints=(1.0, 2.0, 3.0), name="square")
    if name == "parabola":
        def fn(t):
            out = np.zeros(m)
            out[0], out[1] = 1.0, 2.0 * t
            return out
        return HorizontalControl(fn, params.get("domain", (0.0, 1.0)),
                                 "smooth", name="parabola")
    raise ValueError("unknown control %r" % name)


# ---------------------------------------------------------------------------
# the contact ODE and the lift
# ---------------------------------------------------------------------------

def _embed_layer1(algebra, v1):
    out = np.zeros(algebra.dim)
    for pos, k in enumerate(algebra.layer_indices(1)):
        out[k] = v1[pos]
    return out


def contact_derivative(algebra, gamma, v1):
    """Full velocity of a horizontal curve through gamma with first-layer
    velocity v1: ascending through the layers, each correction only reads the
    lower ones."""
    ops = algebra.float_ops()
    gdot = _embed_layer1(algebra, v1)
    for i in range(2, algebra.step + 1):
        acc = np.zeros(algebra.dim)
        power = gdot
        for n in range(2, algebra.step + 1):
            power = ops.bracket(gamma, power)   # [gamma, gdot]_{n-1}
            acc += ((-1) ** n / math.factorial(n)) * power
        gdot = gdot + ops.project_layer(acc, i)
    return gdot


def horizontal_residuals(algebra, gamma, gdot):
    """Residual of the contact system on layers >= 2, batched."""
    ops = algebra.float_ops()
    rhs = np.zeros_like(np.asarray(gamma, dtype=float))
    power = np.asarray(gdot, dtype=float)
    for n in range(2, algebra.step + 1):
        power = ops.bracket(gamma, power)
        rhs += ((-1) ** n / math.factorial(n)) * power
    resid = np.asarray(gdot, dtype=float) - rhs
    out = np.zeros_like(resid)
    for i in range(2, algebra.step + 1):
        out += ops.project_layer(resid, i)
    return out


def _rk4_path(algebra, control, start_coords, t0, t1, steps):
    v1probe = control(0.5 * (t0 + t1))
    assert len(v1probe) == len(algebra.layer_indices(1)), "control must take values in layer 1"
    ts = np.linspace(t0, t1, steps + 1)
    h = (t1 - t0) / steps
    out = np.empty((steps + 1, algebra.dim))
    out[0] = start_coords
    g = np.array(start_coords, dtype=float)

    def f(t, y):
        return contact_derivative(algebra, y, control(t))

    for i in range(steps):
        t = ts[i]
        k1 = f(t, g)
        k2 = f(t + h / 2, g + h / 2 * k1)
        k3 = f(t + h / 2, g + h / 2 * k2)
        k4 = f(t + h, g + h * k3)
        g = g + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i + 1] = g
    return ts, out


def horizontal_lift(control, start, steps=256, tol=1e-8):
    """Integrate the contact ODE for the given first-layer control.

    Piecewise controls are integrated segment by segment between их
    breakpoints.  A Richardson halving pass estimates the endpoint error and
    raises if it exceeds `tol` (so callers can trust the advertised
    accuracy); the returned curve carries the fine grid.
    """
    algebra = start.algebra
    assert steps >= 2
    t0, t1 = control.domain
    cuts = [t0] + [b for b in control.breakpoints if t0 < b < t1] + [t1]
    grids, paths = [], []
    g = np.asarray(start.to_float().coords, dtype=float)
    coarse_end = None
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        seg_steps = max(2, int(round(steps * (hi - lo) / (t1 - t0))))
        # clamp below the right endpoint so stage evaluations stay on this
        # smooth piece (the RK4 k4 stage sits exactly on the breakpoint)
        eps = 1e-12 * max(1.0, hi - lo)
        seg_control = (lambda hi=hi, eps=eps: lambda t: control(min(t, hi - eps)))()
        ts_f, path_f = _rk4_path(algebra, seg_control, g, lo, hi, 2 * seg_steps)
        _, path_c = _rk4_path(algebra, seg_control, g, lo, hi, seg_steps)
        coarse_end = path_c[-1]
        err = np.max(np.abs(path_f[-1] - coarse_end)) / 15.0
        if err > tol:
            raise RuntimeError("integrator error estimate %.3g above tol %.3g; "
                               "increase steps" % (err, tol))
        grids.append(ts_f if not grids else ts_f[1:])
        paths.append(path_f if not paths else path_f[1:])
        g = path_f[-1]
    curve = SampledCurve(algebra, np.concatenate(grids), np.concatenate(paths),
                         control=control)
    return curve


@dataclass
class HorizontalityReport:
    max_residual: float
    tol: float
    n_points: int

    @property
    def ok(self):
        return self.max_residual <= self.tol


def is_horizontal(curve, tol=1e-6):
    """Max residual of the contact system over interior grid points, using
    central differences.  Grid points next to declared control breakpoints
    are excluded: the system only holds at smoothness points."""
    if len(curve.ts) < 3:
        raise ValueError("need at least 3 samples")
    gdot = curve.derivative_grid()
    keep = np.ones(len(curve.ts), dtype=bool)
    keep[0] = keep[-1] = False
    if curve.control is not None and curve.control.breakpoints:
        dt = float(np.min(np.diff(curve.ts)))
        for b in curve.control.breakpoints:
            keep &= np.abs(curve.ts - b) > 1.5 * dt
    res = horizontal_residuals(curve.algebra, curve.coords[keep], gdot[keep])
    return HorizontalityReport(float(np.max(np.abs(res))) if res.size else 0.0,
                               tol, int(keep.sum()))


# ---------------------------------------------------------------------------
# difference quotients and averages
# ---------------------------------------------------------------------------

def _gamma_dot1(curve, t):
    if curve.control is not None:
        return _embed_layer1(curve.algebra, curve.control(t))
    d = np.gradient(curve.coords, curve.ts, axis=0)
    ops = curve.algebra.float_ops()
    return ops.project_layer(np.array([np.interp(t, curve.ts, d[:, k])
                                       for k in range(curve.algebra.dim)]), 1)


def pansu_quotient(curve, t, h):
    """delta_{1/h}( (-h gdot_1(t)) o (-gamma(t)) o gamma(t+h) ): the rescaled
    group-difference defect of the curve against its one-parameter tangent.
    Decays to 0 with h at continuity points of the first-layer velocity."""
    a, b = curve.domain
    if not (a <= t <= b and a <= t + h <= b) or h == 0:
        raise ValueError("window outside the curve domain")
    alg = curve.algebra
    ops = _FloatRecOps(alg)
    g_t = curve.eval(t)
    g_th = _refined_eval(curve, t, t + h)
    v = _gamma_dot1(curve, t)
    inner = sum(_bch_terms(ops, -g_t, g_th, alg.step)[1:])
    full = sum(_bch_terms(ops, -h * v, inner, alg.step)[1:])
    # coordinate form of delta_{1/h}, valid for either sign of h
    return full * (1.0 / h) ** np.asarray(alg.float_ops().layer_of, dtype=float)


def _refined_eval(curve, t, s):
    """gamma(s), re-integrated from gamma(t) when a control is attached (the
    grid alone cannot support h^2-level accuracy at very small h)."""
    if curve.control is None or s == t:
        return curve.eval(s)
    _, path = _rk4_path(curve.algebra, curve.control, curve.eval(t), t, s, 64)
    return path[-1]


def pansu_quotient_norms(curve, t, hs):
    return np.array([float(np.linalg.norm(pansu_quotient(curve, t, h))) for h in hs])


def decay_order(hs, values, floor=1e-14):
    """Least-squares slope of log(values) against log(hs)."""
    hs = np.asarray(hs, dtype=float)
    values = np.maximum(np.asarray(values, dtype=float), floor)
    return float(np.polyfit(np.log(hs), np.log(values), 1)[0])


def sup_average(ts, values, t, lam):
    """sup over 0 <= tau <= lam (or lam <= tau <= 0) of the integral mean of
    `values` on [t, t+tau], trapezoid quadrature on the given grid."""
    ts = np.asarray(ts, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = (t, t + lam) if lam > 0 else (t + lam, t)
    if lo < ts[0] - 1e-12 or hi > ts[-1] + 1e-12:
        raise ValueError("window escapes the grid")
    mask = (ts >= lo - 1e-12) & (ts <= hi + 1e-12)
    sub_t = ts[mask]
    sub_v = values[mask]
    if lam < 0:
        sub_t, sub_v = sub_t[::-1], sub_v[::-1]
        sub_t = sub_t[0] - (sub_t - sub_t[0])
    best = float(sub_v[0])
    acc = 0.0
    for i in range(1, len(sub_t)):
        dt = abs(sub_t[i] - sub_t[i - 1])
        acc += 0.5 * dt * (sub_v[i] + sub_v[i - 1])
        tau = abs(sub_t[i] - sub_t[0])
        if tau > 0:
            best = max(best, acc / tau)
    return best


def sup_average_of_control(curve, t, lam, reference=None, n=512):
    """A_t^lam(|gdot_1 - X|) for the curve's control; `reference` defaults to
    the zero vector."""
    sgn = 1.0 if lam > 0 else -1.0
    taus = t + sgn * np.linspace(0, abs(lam), n)
    ref = np.zeros_like(_gamma_dot1(curve, t)) if reference is None else reference
    vals = np.array([np.linalg.norm(_gamma_dot1(curve, tau) - ref) for tau in taus])
    return sup_average(np.linspace(0, abs(lam), n), vals, 0.0, abs(lam))


# ---------------------------------------------------------------------------
# group Riemann sums
# ---------------------------------------------------------------------------

def group_riemann_sum(curve, partition):
    """Vector sum over the partition of the group increments
    log(Gamma(t_k)^{-1} Gamma(t_{k+1}))."""
    alg = curve.algebra
    ts = np.asarray(partition, dtype=float)
    a, b = curve.domain
    if ts[0] < a - 1e-12 or ts[-1] > b + 1e-12 or np.any(np.diff(ts) <= 0):
        raise ValueError("invalid partition")
    pts = np.stack([curve.eval(t) for t in ts])
    ops = _FloatRecOps(alg)
    inc = sum(_bch_terms(ops, -pts[:-1], pts[1:], alg.step)[1:])
    return inc.sum(axis=0)


def riemann_limit(curve, upto=None):
    """The mesh -> 0 limit of the group Riemann sum:
    gamma(s) - gamma(0) + sum_{n>=2} ((-1)^{n-1}/n!) int [gamma, dgamma]_{n-1}."""
    alg = curve.algebra
    ops = alg.float_ops()
    coords = curve.coords
    ts = curve.ts
    if upto is not None:
        mask = ts <= upto + 1e-12
        coords, ts = coords[mask], ts[mask]
    gdot = np.gradient(coords, ts, axis=0)
    out = coords[-1] - coords[0]
    power = gdot
    for n in range(2, alg.step + 1):
        power = ops.bracket(coords, power)
        integrand = power
        integral = np.trapezoid(integrand, ts, axis=0)
        out = out + ((-1) ** (n - 1) / math.factorial(n)) * integral
    return out


# ---------------------------------------------------------------------------
# variation
# ---------------------------------------------------------------------------

def variation(curve, metric=None, max_level=16, tol=1e-6):
    """Total variation two ways: (A) sup of partition sums over dyadic
    refinements, (B) quadrature of rho(exp(gdot_1)).  For a smooth horizontal
    curve the two agree; non-horizontal input makes them legitimately
    disagree and is flagged."""
    metric = metric or default_metric(curve.algebra)
    alg = curve.algebra
    a, b = curve.domain
    prev = None
    var_a = 0.0
    for level in range(4, max_level + 1):
        n = 2 ** level
        ts = np.linspace(a, b, n + 1)
        pts = np.stack([curve.eval(t) for t in ts])
        d = metric.distance_np(pts[:-1], pts[1:])
        var_a = float(np.sum(d))
        if prev is not None and abs(var_a - prev) <= tol * max(var_a, 1e-12):
            break
        prev = var_a
        if n >= len(curve.ts) * 4:
            break
    if curve.control is not None:
        speeds = np.array([float(metric.quasi_norm_np(
            _embed_layer1(alg, curve.control(t)))) for t in curve.ts])
    else:
        gdot = curve.derivative_grid()
        ops = alg.float_ops()
        speeds = metric.quasi_norm_np(ops.project_layer(gdot, 1))
    var_b = float(np.trapezoid(speeds, curve.ts))
    rep = is_horizontal(curve, tol=1e-5)
    return {"partition": var_a, "first_layer_integral": var_b,
            "horizontal": rep.ok, "agreement": abs(var_a - var_b) /
            max(abs(var_b), 1e-12)}


@dataclass
class LipReport:
    lip_gamma1: float
    lip_curve: float
    contact_residual: float
    ratio_upper: float
    ratio_lower: float

    @property
    def group_lipschitz_compatible(self):
        return self.contact_residual <= 1e-5


def verify_ac_lip_characterization(curve, metric=None):
    """Discrete Lipschitz constants of the first-layer part and of the curve
    under the homogeneous metric, plus the contact-system residual.  The
    two-sided comparison Lip(gamma_1) ~ Lip(Gamma) is meaningful exactly when
    the residual vanishes."""
    metric = metric or default_metric(curve.algebra)
    alg = curve.algebra
    ops = alg.float_ops()
    dt = np.diff(curve.ts)
    d1 = np.linalg.norm(ops.project_layer(np.diff(curve.coords, axis=0), 1), axis=-1)
    lip1 = float(np.max(d1 / dt))
    dgrp = metric.distance_np(curve.coords[:-1], curve.coords[1:])
    lipg = float(np.max(dgrp / dt))
    res = is_horizontal(curve, tol=1e-6).max_residual
    return LipReport(lip1, lipg, res,
                     ratio_upper=lipg / max(lip1, 1e-300),
                     ratio_lower=lip1 / max(lipg, 1e-300))


# ---------------------------------------------------------------------------
# layerwise lift estimate driver
# ---------------------------------------------------------------------------

def lift_layer_bound(control, algebra, lambdas, reference=None, steps=512):
    """Sampled sup over the lambda grid and layers i >= 2 of
    |int_0^lam gdot_i| / (A_0^lam(gdot_1 - X) * lam^i), for lifts from the
    identity; X defaults to gdot_1(0)."""
    from .algebra import GroupElement as GE
    start = GE(algebra, np.zeros(algebra.dim))
    curve = horizontal_lift(control, start, steps=steps)
    t0 = control.domain[0]
    x_ref = _embed_layer1(algebra, control(t0)) if reference is None else reference
    ops = algebra.float_ops()
    sup = 0.0
    for lam in lambdas:
        mask = curve.ts <= t0 + lam + 1e-12
        ts = curve.ts[mask]
        gdot = np.gradient(curve.coords[mask], ts, axis=0)
        avg = sup_average(ts, np.linalg.norm(
            ops.project_layer(gdot, 1) - x_ref, axis=-1), ts[0], ts[-1] - ts[0])
        if avg <= 1e-14:
            continue
        for i in range(2, algebra.step + 1):
            integ = float(np.linalg.norm(np.trapezoid(
                ops.project_layer(gdot, i), ts, axis=0)))
            sup = max(sup, integ / (avg * lam ** i))
    return EmpiricalConstant("lift_layer_bound[%s,%s]" % (algebra.name,
                                                          control.name or "control"),
                             sup, len(lambdas))
