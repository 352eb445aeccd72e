"""Solve a weight sequence for its spectral constants and classify it.

The two unknowns (c_+, r) satisfy the harmonicity of the order-0 h
function at arguments 1 and 2,

    R1(c, r) = sum_{k>=-1} q_{k+2} c^k h(0, k+1) - h(0, 1) = 0,
    R2(c, r) = 2/c^2 + sum_{k>=-1} q_{k+2} c^k h(0, k+2) - h(0, 2) = 0,

with bipartite sequences pinned at r = 1 (R1 is then trivially zero).
The admissibility margin is 1 - sum_{l>=0} h(1, l+1) nu(l); it is
nonnegative for admissible sequences and zero exactly at criticality.

At a critical sequence the Jacobian of (R1, R2) is rank deficient (the
solution sits on a fold of the system), so plain Newton stalls at ~1e-6
accuracy.  The solver therefore finishes near-critical points on the
well-conditioned companion system (R1 = 0, margin = 0), whose Jacobian is
regular at the fold, and accepts the result only if R2 vanishes there.
The boundary tuner uses the same idea with the overall scale of the
weights as a third unknown (a bordered fold-tracking system).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundaryNotFoundError, SolverFailureError
from .hfun import HCache
from .weights import WeightSequence, validate

RESIDUAL_TOL = 1e-12
MARGIN_TOL = 1e-9
_C_FLOOR = 2.0 + 1e-9


@dataclass
class CriticalData:
    c_plus: float
    c_minus: float
    r: float
    z_plus: float
    z_diamond: float
    margin: float
    classification: str
    g: float = 1.0
    residuals: dict = field(default_factory=dict)

    def to_report(self):
        out = {
            "c_plus": self.c_plus,
            "c_minus": self.c_minus,
            "r": self.r,
            "z_plus": self.z_plus,
            "z_diamond": self.z_diamond,
            "margin": self.margin,
            "classification": self.classification,
            "g": self.g,
            "residuals": dict(self.residuals),
        }
        return out


def _make_data(c, r, margin, classification, g, residuals):
    c = float(c)
    r = float(r)
    return CriticalData(
        c_plus=c,
        c_minus=-r * c,
        r=r,
        z_plus=((1.0 + r) * c / 4.0) ** 2,
        z_diamond=(1.0 - r) * c / 2.0,
        margin=float(margin),
        classification=classification,
        g=float(g),
        residuals={k: (float(v) if isinstance(v, (int, float, np.floating)) else v)
                   for k, v in residuals.items()},
    )


class _System:
    """Float evaluation of R1, R2 and the margin sum for a fixed sequence."""

    def __init__(self, q: WeightSequence):
        self.q = q
        if q.is_finite:
            self.c_max = math.inf
        else:
            self.c_max = (1.0 - 1e-9) / q.tail_ratio

    def _terms(self, c):
        return self.q.positive_terms(c, deg=2)

    def _h_arrays(self, r, k_max):
        hc = HCache(float(r), mode="float")
        h0 = hc.array(0, k_max + 2)
        h1 = hc.array(1, k_max + 2)
        return h0, h1

    def residuals(self, c, r):
        ks, vals, _ = self._terms(c)
        k_max = ks[-1] if ks else 0
        h0, _ = self._h_arrays(r, k_max)
        s1 = sum(v * h0[k + 1] for k, v in zip(ks, vals))
        s2 = sum(v * h0[k + 2] for k, v in zip(ks, vals))
        return s1 - h0[1], 2.0 / c**2 + s2 - h0[2]

    def margin_sum(self, c, r):
        """sum_{l>=0} h(1, l+1) nu(l); margin = 1 - this."""
        ks, vals, _ = self._terms(c)
        k_max = ks[-1] if ks else 0
        _, h1 = self._h_arrays(r, k_max)
        return sum(v * h1[k + 1] for k, v in zip(ks, vals) if k >= 0)

    def margin(self, c, r):
        return 1.0 - self.margin_sum(c, r)

    # -- 1D helpers for the bipartite case --------------------------------

    def r2_and_prime(self, c, r=1.0):
        ks, vals, _ = self._terms(c)
        k_max = ks[-1] if ks else 0
        h0, _ = self._h_arrays(r, k_max)
        f = 2.0 / c**2 + sum(v * h0[k + 2] for k, v in zip(ks, vals)) - h0[2]
        fp = -4.0 / c**3 + sum(k * v / c * h0[k + 2] for k, v in zip(ks, vals))
        return f, fp

    def margin_and_prime(self, c, r=1.0):
        ks, vals, _ = self._terms(c)
        k_max = ks[-1] if ks else 0
        _, h1 = self._h_arrays(r, k_max)
        s = sum(v * h1[k + 1] for k, v in zip(ks, vals) if k >= 0)
        sp = sum(k * v / c * h1[k + 1] for k, v in zip(ks, vals) if k >= 1)
        return 1.0 - s, -sp


def _newton_1d(f_and_fp, x0, lo, hi, tol=1e-14, max_iter=80):
    """Safeguarded Newton inside a bracket known to contain a simple root."""
    x = min(max(x0, lo), hi)
    flo, _ = f_and_fp(lo)
    for _ in range(max_iter):
        f, fp = f_and_fp(x)
        if f == 0.0:
            return x
        # maintain the bracket
        if (f > 0) == (flo > 0):
            lo = x
        else:
            hi = x
        if fp != 0.0:
            step = f / fp
            xn = x - step
        else:
            xn = 0.5 * (lo + hi)
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= tol * max(1.0, abs(x)):
            return xn
        x = xn
    return x


def _minimize_convex(f_and_fp, lo, hi, tol=1e-13):
    """Arg-min of a smooth strictly convex function on (lo, hi).

    Works on the derivative, which is increasing; returns lo or hi when the
    minimum sits on the boundary.
    """
    glo = f_and_fp(lo)[1]
    ghi = f_and_fp(hi)[1]
    if glo >= 0:
        return lo
    if ghi <= 0:
        return hi
    a, b = lo, hi
    for _ in range(200):
        m = 0.5 * (a + b)
        g = f_and_fp(m)[1]
        if g < 0:
            a = m
        else:
            b = m
        if b - a <= tol * max(1.0, abs(m)):
            break
    return 0.5 * (a + b)


def _classify_from(q, margin, tol=MARGIN_TOL):
    if margin < -tol:
        return "not_admissible"
    if margin > tol:
        return "subcritical"
    if q.is_finite:
        return "regular_critical"
    fam = q.family[0] if q.family else None
    if fam == "geometric":
        return "regular_critical"
    if fam == "symmetric_critical":
        return "critical_non_regular"
    if q.tail_ratio is not None and q.tail_ratio > 0:
        return "critical"
    return "critical"


def _solve_bipartite(q, sys, g, tol):
    hi0 = 8.0 if math.isinf(sys.c_max) else sys.c_max
    # bracket a sign change of R2' to locate the convex minimum
    hi = hi0
    if math.isinf(sys.c_max):
        while sys.r2_and_prime(hi)[1] <= 0 and hi < 1e12:
            hi *= 2.0
    c_min = _minimize_convex(sys.r2_and_prime, _C_FLOOR, hi)
    v_min = sys.r2_and_prime(c_min)[0]

    if v_min > 10 * tol:
        margin = sys.margin(c_min, 1.0)
        return _make_data(
            c_min, 1.0, margin, "not_admissible", g,
            {"R1": 0.0, "R2": v_min, "path": "bipartite-no-root"},
        )

    # candidate critical point: the margin root, checked against R2
    m_lo = sys.margin_and_prime(_C_FLOOR)[0]
    crit = None
    if m_lo > 0:
        m_hi_x = c_min
        while sys.margin_and_prime(m_hi_x)[0] > 0 and m_hi_x < hi:
            m_hi_x = min(2.0 * m_hi_x, hi)
            if m_hi_x >= hi and sys.margin_and_prime(hi)[0] > 0:
                break
        if sys.margin_and_prime(m_hi_x)[0] <= 0:
            c_m = _newton_1d(sys.margin_and_prime, c_min, _C_FLOOR, m_hi_x)
            r2_at = sys.r2_and_prime(c_m)[0]
            if abs(r2_at) <= max(1e-10, 2.0 * abs(v_min)):
                crit = (c_m, r2_at)
    if crit is not None and v_min > -1e-10:
        c_m, r2_at = crit
        cls = _classify_from(q, 0.0)
        return _make_data(
            c_m, 1.0, 0.0, cls, g,
            {"R1": 0.0, "R2": r2_at, "path": "bipartite-critical"},
        )

    # genuinely subcritical: smaller root of R2
    c_root = _newton_1d(sys.r2_and_prime, 0.5 * (_C_FLOOR + c_min), _C_FLOOR, c_min)
    margin = sys.margin(c_root, 1.0)
    cls = _classify_from(q, margin)
    return _make_data(
        c_root, 1.0, margin, cls, g,
        {"R1": 0.0, "R2": sys.r2_and_prime(c_root)[0], "path": "bipartite-subcritical"},
    )


def _damped_newton_2d(F, x0, lo_c, hi_c, tol=1e-13, max_iter=80, fd=1e-7):
    """Damped Newton with finite-difference Jacobian on x = (c, s), r = tanh(s)."""
    x = np.array(x0, dtype=float)
    fx = np.array(F(x))
    best = (np.max(np.abs(fx)), x.copy())
    for _ in range(max_iter):
        n0 = np.max(np.abs(fx))
        if n0 < tol:
            return x, n0
        J = np.empty((2, 2))
        for j in range(2):
            h = fd * max(1.0, abs(x[j]))
            xp = x.copy()
            xp[j] += h
            J[:, j] = (np.array(F(xp)) - fx) / h
        try:
            step = np.linalg.solve(J, -fx)
        except np.linalg.LinAlgError:
            break
        lam = 1.0
        moved = False
        for _ in range(16):
            xn = x + lam * step
            xn[0] = min(max(xn[0], _C_FLOOR), hi_c)
            xn[1] = min(max(xn[1], -20.0), 20.0)
            try:
                fn = np.array(F(xn))
            except Exception:
                lam *= 0.5
                continue
            if np.max(np.abs(fn)) < n0 or lam < 1e-3:
                x, fx = xn, fn
                moved = True
                break
            lam *= 0.5
        if not moved:
            break
        if np.max(np.abs(fx)) < best[0]:
            best = (np.max(np.abs(fx)), x.copy())
    n = np.max(np.abs(fx))
    if n < best[0]:
        best = (n, x)
    return best[1], best[0]


def _start_points(q, sys):
    if q.is_finite:
        c0 = max(2.5, 2.0 * math.sqrt(q.max_support))
        c0 = min(c0, 0.9 * sys.c_max) if not math.isinf(sys.c_max) else c0
    else:
        c0 = 0.5 * (2.0 + sys.c_max)
    starts = [(c0, 0.0)]
    for r0 in (0.5, -0.5, 0.9, -0.9, 0.0, 0.3, -0.3):
        cc = c0 if len(starts) % 2 else min(max(2.3, 0.8 * c0), c0)
        starts.append((cc, r0))
    if not math.isinf(sys.c_max):
        starts.append((0.25 * (2.0 + 3.0 * sys.c_max), 0.0))
    return starts


def _feasible_hi(sys, hi):
    """Largest c at (or below) hi where the series evaluation is tractable."""
    from .errors import DivergentSeriesError

    for _ in range(80):
        try:
            sys.r2_and_prime(hi, 0.0)
            return hi
        except (DivergentSeriesError, OverflowError):
            hi = 2.0 + 0.9 * (hi - 2.0)
    raise SolverFailureError("no evaluable c range")


def _solve_general(q, sys, g, tol, initial=None):
    from .errors import DivergentSeriesError

    hi_c = 1e9 if math.isinf(sys.c_max) else _feasible_hi(sys, sys.c_max)

    def F_main(x):
        c, s = x
        r = math.tanh(s)
        return sys.residuals(c, r)

    def F_polish(x):
        c, s = x
        r = math.tanh(s)
        r1, _ = sys.residuals(c, r)
        return (r1, sys.margin_sum(c, r) - 1.0)

    starts = _start_points(q, sys)
    if initial is not None:
        starts = [initial] + starts

    def _finish(c, r, path, force_margin=None):
        margin = sys.margin(c, r) if force_margin is None else force_margin
        r1, r2 = sys.residuals(c, r)
        cls = _classify_from(q, margin)
        return _make_data(
            c, r, margin, cls, g, {"R1": r1, "R2": r2, "path": path},
        )

    def _try_polish(x_init):
        try:
            xp, resp = _damped_newton_2d(F_polish, x_init, _C_FLOOR, hi_c)
        except DivergentSeriesError:
            return None
        if resp < 1e-11:
            cp, rp = xp[0], math.tanh(xp[1])
            _, r2p = sys.residuals(cp, rp)
            return cp, rp, r2p
        return None

    # multi-start Newton on (R1, R2); the fold pairs an admissible solution
    # with an inadmissible mirror image, so candidates are kept and filtered
    # by the margin rather than accepted first-come
    admissible = None
    inadmissible = None
    for c0, r0 in starts:
        try:
            x, res = _damped_newton_2d(
                F_main, (c0, math.atanh(min(max(r0, -0.999), 0.999))),
                _C_FLOOR, hi_c,
            )
        except DivergentSeriesError:
            continue
        if res >= 1e-10:
            continue
        c, r = x[0], math.tanh(x[1])
        margin = sys.margin(c, r)
        if margin >= -MARGIN_TOL:
            admissible = (x, c, r, margin)
            break
        if inadmissible is None:
            inadmissible = (x, c, r, margin)

    if admissible is None and inadmissible is not None:
        # reflect the bad branch through the critical point of the fold
        x_bad = inadmissible[0]
        polished = _try_polish(x_bad)
        if polished is not None:
            cp, rp, _ = polished
            x0 = np.array([2.0 * cp - x_bad[0],
                           2.0 * math.atanh(min(max(rp, -0.999999), 0.999999))
                           - x_bad[1]])
            x0[0] = min(max(x0[0], _C_FLOOR), hi_c)
            try:
                x, res = _damped_newton_2d(F_main, x0, _C_FLOOR, hi_c)
                if res < 1e-10:
                    c, r = x[0], math.tanh(x[1])
                    margin = sys.margin(c, r)
                    if margin >= -MARGIN_TOL:
                        admissible = (x, c, r, margin)
            except DivergentSeriesError:
                pass

    if admissible is not None:
        x, c, r, margin = admissible
        if abs(margin) < 1e-5:
            polished = _try_polish(x)
            if polished is not None and abs(polished[2]) <= 1e-9:
                cp, rp, r2p = polished
                r1p, _ = sys.residuals(cp, rp)
                return _make_data(
                    cp, rp, 0.0, _classify_from(q, 0.0), g,
                    {"R1": r1p, "R2": r2p, "path": "newton+critical-polish"},
                )
        return _finish(c, r, "newton")

    # no Newton route: the input may sit exactly on the fold
    for c0, r0 in starts:
        polished = _try_polish((c0, math.atanh(min(max(r0, -0.999), 0.999))))
        if polished is not None and abs(polished[2]) <= 1e-9:
            cp, rp, r2p = polished
            r1p, _ = sys.residuals(cp, rp)
            return _make_data(
                cp, rp, 0.0, _classify_from(q, 0.0), g,
                {"R1": r1p, "R2": r2p, "path": "critical-polish"},
            )

    # nested scan: smallest root of R2 in c at fixed r, outer sign change
    # of R1 along that branch
    def _smallest_root(r):
        def f1d(c, _r=r):
            return sys.r2_and_prime(c, _r)

        try:
            c_min = _minimize_convex(f1d, _C_FLOOR, min(hi_c, 1e6))
            v = f1d(c_min)[0]
        except (DivergentSeriesError, OverflowError):
            return None
        if v > 0.0:
            return None
        return _newton_1d(f1d, 0.5 * (_C_FLOOR + c_min), _C_FLOOR, c_min)

    grid = np.linspace(-0.995, 0.995, 161)
    phi = np.full(grid.shape, np.nan)
    any_root = False
    for i, r in enumerate(grid):
        c_root = _smallest_root(r)
        if c_root is not None:
            any_root = True
            phi[i] = sys.residuals(c_root, r)[0]
    sign_change = None
    for i in range(len(grid) - 1):
        if np.isfinite(phi[i]) and np.isfinite(phi[i + 1]) and phi[i] * phi[i + 1] < 0:
            sign_change = i
            break
    if sign_change is not None:
        a, b = grid[sign_change], grid[sign_change + 1]
        sig = phi[sign_change]
        for _ in range(200):
            m = 0.5 * (a + b)
            c_root = _smallest_root(m)
            if c_root is None:
                break
            val = sys.residuals(c_root, m)[0]
            if val * sig > 0:
                a = m
            else:
                b = m
            if b - a < 1e-13:
                break
        r = 0.5 * (a + b)
        c_root = _smallest_root(r)
        if c_root is not None:
            margin = sys.margin(c_root, r)
            if margin >= -MARGIN_TOL:
                return _finish(c_root, r, "nested-bisection")

    if not any_root:
        return _make_data(
            float("nan"), float("nan"), float("nan"), "not_admissible", g,
            {"path": "grid-no-solution"},
        )
    raise SolverFailureError("no admissible solution found by any strategy")


def solve_boltzmann(q: WeightSequence, g=1.0, tol=RESIDUAL_TOL, initial=None):
    """Spectral constants (c_+, r) of a weight sequence, deformed by g.

    Returns CriticalData; a sequence beyond the admissibility boundary
    yields classification 'not_admissible' rather than an exception.
    Newton divergence on an admissible input raises SolverFailureError.
    """
    rep = validate(q)
    if not rep.ok:
        raise ValueError(f"invalid weight sequence: {rep.messages}")
    if not (0.0 < g <= 1.0):
        raise ValueError("g must lie in (0, 1]")

    if g == 1.0 and q.family and q.family[0] == "symmetric_critical":
        from .walk import symmetric_family

        law = symmetric_family(**q.family[1])
        margin = law.margin
        cls = _classify_from(q, margin)
        return _make_data(
            law.c_plus, law.r, margin, cls, 1.0,
            {"R1": law.residuals.get("harmonic_h0_k1", 0.0),
             "R2": law.residuals.get("harmonic_h0_k2", 0.0),
             "path": "symmetric-closed-form"},
        )

    qg = q.deformed(g)
    sys = _System(qg)
    if qg.bipartite:
        data = _solve_bipartite(qg, sys, g, tol)
    else:
        data = _solve_general(qg, sys, g, tol, initial=initial)
    return data


def classify(q: WeightSequence, cd: CriticalData, tol=MARGIN_TOL):
    """Re-derive the admissibility class from the margin and the tail."""
    if cd.classification == "not_admissible":
        return "not_admissible"
    return _classify_from(q, cd.margin, tol)


# -- Miermont cross-check ------------------------------------------------------


@dataclass
class MiermontReport:
    f_dot_residual: float
    f_diamond_residual: float
    A0: float
    A1: float
    scalar: float
    truncation: float
    ok: bool
    messages: list = field(default_factory=list)

    def to_report(self):
        return {
            "f_dot_residual": self.f_dot_residual,
            "f_diamond_residual": self.f_diamond_residual,
            "A0": self.A0,
            "A1": self.A1,
            "A1_plus_2sqrtzp_A0": self.scalar,
            "truncation": self.truncation,
            "ok": self.ok,
            "messages": list(self.messages),
        }


def _inner_sums(zp, zd, n):
    """Inner binomial sums at total degree n for f_dot, f_diamond, d/dx, d/dy."""
    fd = 0.0
    fdot = 0.0
    dx = 0.0
    dy = 0.0
    for k in range(n // 2 + 1):
        rest = n - 2 * k
        base = math.comb(n, k) * math.comb(n - k, k)
        zpow = zp**k * (zd**rest if rest else 1.0)
        fd += base * zpow
        fdot += math.comb(n + 1, k + 1) * math.comb(n - k, k) * zpow
        if k >= 1:
            dx += k * base * zp ** (k - 1) * (zd**rest if rest else 1.0)
        if rest >= 1:
            dy += rest * base * zp**k * (zd ** (rest - 1) if rest - 1 else 1.0)
    return fd, fdot, dx, dy


def miermont_check(q: WeightSequence, cd: CriticalData, tol=1e-8, n_max=4000):
    """Verify the mobile-counting fixed point and the scalar stability bound.

    Evaluates the two fixed-point residuals and A1 + 2 sqrt(z+) A0 directly
    from the double binomial sums; these must reproduce the solver output
    independently of the h-function route.  Heavy-tailed families converge
    only like N^(-1/2), so their partial sums are Richardson-extrapolated
    on dyadic checkpoints.
    """
    from .seriesutil import richardson_limit

    if cd.classification == "not_admissible":
        return MiermontReport(
            math.nan, math.nan, math.nan, math.nan, math.nan, math.nan,
            False, ["input not admissible"],
        )
    zp, zd = cd.z_plus, cd.z_diamond
    heavy = bool(q.family and q.family[0] == "symmetric_critical")
    if q.is_finite:
        n_hi = q.max_support
    elif heavy:
        n_hi = 512
    else:
        n_hi = n_max
    acc = np.zeros(4)  # f_diamond, f_dot, A0, A1
    trunc = 0.0
    messages = []
    ckpt_ns = [n for n in (64, 128, 256, 512) if n <= n_hi]
    ckpts = []
    prev_term = math.inf
    small_streak = 0
    for n in range(0, n_hi + 1):
        q1 = float(q.value(n + 1))
        q2 = float(q.value(n + 2))
        if q1 != 0.0 or q2 != 0.0:
            fd, fdot, dx, dy = _inner_sums(zp, zd, n)
            if fd > 1e280 or fdot > 1e280:
                messages.append(
                    "inner sums overflow before the tail certifies; "
                    "truncation estimated"
                )
                trunc = max(trunc, prev_term * n)
                break
            acc += (q1 * fd, q2 * fdot, 0.5 * q1 * dx, q1 * dy)
            term = q1 * fd + q2 * fdot
            if term > 1e6:
                messages.append("divergent truncation; input looks inadmissible")
                return MiermontReport(
                    math.nan, math.nan, math.nan, math.nan, math.nan,
                    math.inf, False, messages,
                )
            # parity zeros must not masquerade as convergence
            small_streak = small_streak + 1 if term < 1e-15 else 0
            if not q.is_finite and not heavy and n > 64 and small_streak >= 2:
                trunc = max(term, prev_term) * 10.0
                break
            prev_term = max(term, 1e-300)
        if n in ckpt_ns:
            ckpts.append(acc.copy())
    else:
        if not q.is_finite and not heavy:
            trunc = prev_term * n_hi
    if heavy and len(ckpts) == len(ckpt_ns) >= 3:
        expos = [0.5, 1.5, 2.5][: len(ckpt_ns) - 1]
        fine = np.array([
            richardson_limit(ckpt_ns, [c[i] for c in ckpts], expos)
            for i in range(4)
        ])
        coarse = np.array([
            richardson_limit(ckpt_ns[:-1], [c[i] for c in ckpts[:-1]],
                             expos[:-1])
            for i in range(4)
        ])
        trunc = float(np.max(np.abs(fine - coarse)))
        acc = fine
        messages.append("heavy tail: partial sums extrapolated")
    f_diamond, f_dot, A0, A1 = acc
    res_dot = float(f_dot - (1.0 - 1.0 / zp))
    res_dia = float(f_diamond - zd)
    scalar = float(A1 + 2.0 * math.sqrt(zp) * A0)
    ok = bool(
        abs(res_dot) <= tol + trunc
        and abs(res_dia) <= tol + trunc
        and scalar <= 1.0 + tol + trunc
    )
    return MiermontReport(
        res_dot, res_dia, float(A0), float(A1), scalar, float(trunc), ok, messages
    )


# -- boundary tuner -------------------------------------------------------------


@dataclass
class TuneResult:
    t_star: float
    data: CriticalData


def _fold_side(shape, t, bipartite, warm):
    """Which side of the admissibility boundary t * shape sits on.

    Solves the well-conditioned companion system (R1 = 0, margin = 0) and
    inspects the sign of R2 there: negative means admissible slack remains
    (t below the boundary), positive or unsolvable means t is beyond it.
    Returns (side, state) with side < 0 below the fold.
    """
    from .errors import DivergentSeriesError

    sys = _System(shape.scaled(t))
    hi_c = 1e9 if math.isinf(sys.c_max) else _feasible_hi(sys, sys.c_max)
    if bipartite:
        try:
            if sys.margin_and_prime(_C_FLOOR)[0] <= 0:
                return 1.0, None
            hi = warm[0] * 2.0 if warm is not None else 8.0
            while sys.margin_and_prime(min(hi, hi_c))[0] > 0 and hi < hi_c:
                hi = min(2.0 * hi, hi_c)
            if sys.margin_and_prime(min(hi, hi_c))[0] > 0:
                return 1.0, None
            c = _newton_1d(sys.margin_and_prime, warm[0] if warm else 2.5,
                           _C_FLOOR, min(hi, hi_c))
            return sys.r2_and_prime(c)[0], (c,)
        except (DivergentSeriesError, OverflowError):
            return 1.0, None

    def F(x):
        c, s = x
        r = math.tanh(s)
        r1, _ = sys.residuals(c, r)
        return (r1, sys.margin_sum(c, r) - 1.0)

    starts = [warm] if warm is not None else []
    starts += [(2.6, 0.0), (3.5, 0.5), (2.2, -0.5), (5.0, 0.3)]
    for c0, s0 in starts:
        try:
            x, res = _damped_newton_2d(F, (c0, s0), _C_FLOOR, hi_c)
        except (DivergentSeriesError, OverflowError):
            continue
        if res < 1e-11:
            c, r = x[0], math.tanh(x[1])
            return sys.residuals(c, r)[1], (x[0], x[1])
    return 1.0, None


def tune_critical(shape: WeightSequence, tol=1e-10):
    """Scale t* at which t * shape sits on the admissibility boundary.

    Bisection on the fold-side indicator (the sign of R2 on the pinned
    margin = 0 companion curve) brackets the boundary; a bordered Newton
    solve in (c, r, t) then locates the fold to near machine precision.
    """
    rep = validate(shape)
    if not rep.ok:
        raise ValueError(f"invalid shape: {rep.messages}")

    bipartite = shape.bipartite
    warm = None
    t_lo = None
    t = 1.0
    for _ in range(120):
        side, state = _fold_side(shape, t, bipartite, warm)
        if side < 0:
            t_lo, warm = t, state
            break
        t *= 0.5
        if t < 1e-30:
            break
    if t_lo is None:
        raise BoundaryNotFoundError("no admissible scale found below the bracket")
    t_hi = t_lo
    for _ in range(120):
        t_hi *= 2.0
        side, _ = _fold_side(shape, t_hi, bipartite, warm)
        if side >= 0:
            break
    else:
        raise BoundaryNotFoundError("weights remain admissible at huge scales")

    for _ in range(64):
        tm = 0.5 * (t_lo + t_hi)
        side, state = _fold_side(shape, tm, bipartite, warm)
        if side < 0:
            t_lo = tm
            if state is not None:
                warm = state
        else:
            t_hi = tm
        if t_hi - t_lo <= 1e-8 * t_lo:
            break

    cd0_c = warm[0]
    cd0_r = 1.0 if bipartite else math.tanh(warm[1])

    def F(x):
        if bipartite:
            c, t = x
            r = 1.0
        else:
            c, s, t = x
            r = math.tanh(s)
        sys = _System(shape.scaled(t))
        r1, r2 = sys.residuals(c, r)
        m = sys.margin_sum(c, r) - 1.0
        if bipartite:
            return np.array([r2, m])
        return np.array([r1, r2, m])

    if bipartite:
        x = np.array([cd0_c, t_lo])
    else:
        r0 = min(max(cd0_r, -0.999999), 0.999999)
        x = np.array([cd0_c, math.atanh(r0), t_lo])
    fx = F(x)
    for _ in range(60):
        if np.max(np.abs(fx)) < 1e-13:
            break
        J = np.empty((len(x), len(x)))
        for j in range(len(x)):
            h = 1e-7 * max(1.0, abs(x[j]))
            xp = x.copy()
            xp[j] += h
            J[:, j] = (F(xp) - fx) / h
        try:
            step = np.linalg.solve(J, -fx)
        except np.linalg.LinAlgError:
            break
        lam = 1.0
        for _ in range(12):
            xn = x + lam * step
            xn[0] = max(xn[0], _C_FLOOR)
            xn[-1] = max(xn[-1], 1e-300)
            try:
                fn = F(xn)
            except Exception:
                lam *= 0.5
                continue
            if np.max(np.abs(fn)) < np.max(np.abs(fx)) or lam < 1e-3:
                x, fx = xn, fn
                break
            lam *= 0.5

    t_star = float(x[-1])
    if not (0.5 * t_lo <= t_star <= 2.0 * t_hi):
        raise SolverFailureError("bordered polish left the bisection bracket")
    c = float(x[0])
    r = 1.0 if bipartite else math.tanh(float(x[1]))
    sys = _System(shape.scaled(t_star))
    r1, r2 = sys.residuals(c, r)
    cls = _classify_from(shape.scaled(t_star), 0.0)
    data = _make_data(
        c, r, 0.0, cls, 1.0,
        {"R1": r1, "R2": r2, "path": "tune-bordered-newton"},
    )
    return TuneResult(t_star, data)


def full_report(q: WeightSequence, cd: CriticalData = None):
    """JSON-able analysis document: constants, residuals, Miermont block."""
    if cd is None:
        cd = solve_boltzmann(q)
    out = cd.to_report()
    out["miermont"] = miermont_check(q, cd).to_report()
    return out
