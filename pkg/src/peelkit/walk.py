"""Complete the positive step law to a full two-sided walk law.

The negative jump probabilities of a critical law are linear images of the
positive ones through the kernel

    R_r(k, m) = sum_{p=0}^{m-1} h(1, m-p) [ h(-2, k+p-1) + r h(-2, k+p-2) ],
    nu(-k)    = sum_{m>=1} R_r(k, m) nu(m),

which also produces the disk coefficients W(l) = nu(-l-2) c_+^(l+2) / 2 and
the derived constants: the perimeter constant L = sum nu(k) h(2, k+1), the
volume constant B = 4 nu(-2) / (3 (1+r) L) and the negative-tail constant
3 L sqrt(1+r) / (4 sqrt(pi)).

The module also hosts the symmetric critical family, whose step law is
prescribed directly through its characteristic function
phi(theta) = 1 - 2 a sqrt(1 + r^2 + 2 r cos theta) |sin(theta/2)|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate

from .errors import InconsistentCriticalityError, RangeError
from .hfun import HCache
from .seriesutil import accelerated_lattice_sum
from .weights import StepLawPositive

DEFAULT_K_NEG = 512


@dataclass
class StepLaw:
    """Two-sided step distribution nu on k in [-k_neg, k_pos]."""

    r: float
    c_plus: float
    k_neg: int
    k_pos: int
    probs: np.ndarray          # probs[i] = nu(i - k_neg)
    L_nu: float
    B_nu: float
    tail_const: float
    trunc_neg: float = 0.0
    trunc_pos: float = 0.0
    exact: dict = None
    family: tuple = None
    heavy_tail: bool = False
    critical: bool = True
    margin: float = 0.0
    residuals: dict = field(default_factory=dict)
    _hcache: HCache = None

    def nu(self, k):
        """nu(k); exact rational when the law carries exact values."""
        if self.exact is not None and k in self.exact:
            return self.exact[k]
        if -self.k_neg <= k <= self.k_pos:
            return float(self.probs[k + self.k_neg])
        return 0.0

    @property
    def ks(self):
        return np.arange(-self.k_neg, self.k_pos + 1)

    def hcache(self):
        if self._hcache is None:
            object.__setattr__(self, "_hcache", HCache(self.r, mode="float"))
        return self._hcache

    def total_mass(self):
        return float(self.probs.sum())

    def mean(self):
        return float(np.dot(self.ks, self.probs))

    def char_function(self, thetas):
        """phi(theta) = sum nu(k) exp(i k theta) over the materialized range."""
        thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
        phase = np.exp(1j * np.outer(thetas, self.ks))
        return phase @ self.probs

    def digest(self):
        import hashlib

        h = hashlib.sha256()
        h.update(self.probs.tobytes())
        h.update(f"{self.r!r}|{self.c_plus!r}".encode())
        return h.hexdigest()[:16]

    def to_csv(self, path):
        """Columnar export: metadata block in '#' comments, then k, nu_k."""
        with open(path, "w") as fh:
            fh.write(f"# r={self.r!r}\n# c_plus={self.c_plus!r}\n")
            fh.write(f"# L_nu={self.L_nu!r}\n# B_nu={self.B_nu!r}\n")
            fh.write(f"# trunc_neg={self.trunc_neg!r}\n")
            fh.write(f"# trunc_pos={self.trunc_pos!r}\n")
            fh.write("k,nu_k\n")
            for k, p in zip(self.ks, self.probs):
                fh.write(f"{int(k)},{float(p)!r}\n")


# -- kernel -----------------------------------------------------------------


def kernel_R(r, k, m, cache=None):
    """The linear kernel mapping positive step mass to negative jumps."""
    if k < 1 or m < 1:
        raise ValueError("kernel arguments start at 1")
    if cache is None:
        cache = HCache(float(r), mode="float")
    r_val = cache.r
    total = 0 if cache.mode == "exact" else 0.0
    for p in range(m):
        neg = cache.value(-2, k + p - 1) + r_val * cache.value(-2, k + p - 2)
        total += cache.value(1, m - p) * neg
    return total


def kernel_R_bipartite_closed(k2, m2):
    """Closed form of the kernel at r = 1 on even arguments (2k, 2m)."""
    if k2 % 2 or m2 % 2:
        raise ValueError("closed form lives on even arguments")
    k, m = k2 // 2, m2 // 2
    num = Fraction(m * (2 * m + 1), (m + k) * (2 * k - 1))
    return num * Fraction(math.comb(2 * k, k) * math.comb(2 * m, m), 4 ** (m + k))


def complete_nu(pos: StepLawPositive, k_neg=DEFAULT_K_NEG, exact=None,
                critical=True) -> StepLaw:
    """Extend a positive law to the full two-sided step law.

    With critical=True (the default) the negative side comes from the
    kernel R_r, whose derivation replaces nu(0) using the harmonicity of
    h(1, .); the reconstruction of nu(-2) must then reproduce 2/c_+^2 (to
    1e-9) and a mismatch raises InconsistentCriticalityError.  With
    critical=False the completion uses the generating-function identity
    before that substitution,

        nu(-k) = -G(k-1) + sum_{l>=0} G(l+k-1) sum_{m>=l} nu(m) h(0, m-l),
        G(j)   = h(-1, j) + r h(-1, j-1),

    which only needs admissibility and also covers subcritical laws.
    """
    r = pos.r
    c = pos.c_plus
    k_pos = max((k for k in pos.nu if k >= 1), default=0)
    if exact is None:
        exact = pos.exact and k_pos <= 64 and critical

    cache = HCache(r, mode="float")
    h1 = cache.array(1, k_pos + 1)
    hm2 = np.asarray(cache.batch(-2, k_neg + k_pos + 2), dtype=float)

    nu_pos_vec = np.zeros(k_pos + 1)
    for k, v in pos.nu.items():
        if k >= 0:
            nu_pos_vec[k] = float(v)

    nu_neg = np.zeros(k_neg + 1)  # nu_neg[k] = nu(-k)
    ks = np.arange(1, k_neg + 1)
    if critical:
        # A[p] = sum_{m>p} nu(m) h(1, m-p)
        A = np.zeros(k_pos)
        for p in range(k_pos):
            ms = np.arange(p + 1, k_pos + 1)
            A[p] = np.dot(nu_pos_vec[p + 1 :], h1[ms - p])
        for p in range(k_pos):
            # h(-2, k+p-1) + r h(-2, k+p-2) at array offset l+2
            nu_neg[1:] += A[p] * (hm2[ks + p + 1] + r * hm2[ks + p])
    else:
        h0 = cache.array(0, k_pos + 1)
        hm1 = np.asarray(cache.batch(-1, k_neg + k_pos + 1), dtype=float)
        # G[j+1] = h(-1, j) + r h(-1, j-1) for j >= -1
        j_len = k_neg + k_pos + 1
        G = np.zeros(j_len + 1)
        G[0] = 1.0  # j = -1: h(-1,-1) = 1, h(-1,-2) = 0
        js = np.arange(0, j_len)
        G[1:] = hm1[js + 1] + r * np.concatenate([[1.0], hm1[1:j_len]])
        # Atil[l] = sum_{m >= l} nu(m) h(0, m-l)
        Atil = np.zeros(k_pos + 1)
        for l in range(k_pos + 1):
            Atil[l] = np.dot(nu_pos_vec[l:], h0[: k_pos + 1 - l])
        for l in range(k_pos + 1):
            nu_neg[1:] += Atil[l] * G[ks + l]
        nu_neg[1:] -= G[ks]

    # parity zeros cancel only to rounding level in float; snap them
    nu_neg[np.abs(nu_neg) < 1e-14] = 0.0
    nu_m2_target = 2.0 / c**2
    if critical and abs(nu_neg[2] - nu_m2_target) > 1e-9:
        raise InconsistentCriticalityError(
            f"kernel nu(-2)={nu_neg[2]!r} vs 2/c^2={nu_m2_target!r}; "
            "the positive law is not critical"
        )

    exact_map = None
    if exact and pos.r_exact is not None:
        cache_x = HCache(pos.r_exact)
        exact_map = {}
        for k, v in pos.nu.items():
            exact_map[k] = Fraction(v)
        exact_map[-2] = Fraction(pos.nu_m2)
        for k in range(1, min(k_neg, 64) + 1):
            if k == 2:
                continue
            val = sum(
                kernel_R(cache_x.r, k, m, cache_x) * Fraction(pos.nu[m])
                for m in pos.nu
                if m >= 1
            )
            if val != 0:
                exact_map[-k] = val

    probs = np.zeros(k_neg + k_pos + 1)
    probs[k_neg - 1 :: -1] = nu_neg[1:]
    probs[k_neg - 2] = nu_m2_target
    nu_m1_kernel = nu_neg[1]
    for k, v in pos.nu.items():
        probs[k + k_neg] = float(v)

    h2 = cache.array(2, k_pos + 2)
    kk = np.arange(1, k_pos + 1)
    # the positive truncation carried by the materialization already covers
    # the degree-3/2 growth of h(2, k+1)
    L_nu = float(np.dot(nu_pos_vec[1:], h2[kk + 1]))
    B_nu = 4.0 * nu_m2_target / (3.0 * (1.0 + r) * L_nu)
    tail_const = 3.0 * L_nu * math.sqrt(1.0 + r) / (4.0 * math.sqrt(math.pi))
    # estimated mass beyond the materialized negative range (k^{-5/2} tail)
    trunc_neg = tail_const * (2.0 / 3.0) * k_neg ** (-1.5)

    law = StepLaw(
        r=r,
        c_plus=c,
        k_neg=k_neg,
        k_pos=k_pos,
        probs=probs,
        L_nu=L_nu,
        B_nu=B_nu,
        tail_const=tail_const,
        trunc_neg=trunc_neg,
        trunc_pos=pos.trunc_pos,
        exact=exact_map,
        family=None,
        heavy_tail=False,
        critical=critical,
    )
    law.residuals = {
        "nu_m2_kernel": nu_neg[2] - nu_m2_target,
        "nu_m1_kernel": nu_m1_kernel - float(pos.nu.get(-1, 0.0)),
    }
    return law


def deepen_negative(law: StepLaw, k_neg) -> StepLaw:
    """Rebuild the law with a deeper materialized negative range."""
    if k_neg <= law.k_neg:
        return law
    pos = StepLawPositive(
        c_plus=law.c_plus,
        r=law.r,
        nu={k: float(law.probs[k + law.k_neg])
            for k in range(-1, law.k_pos + 1)
            if law.probs[k + law.k_neg] > 0},
        nu_m2=2.0 / law.c_plus**2,
        trunc_pos=law.trunc_pos,
        exact=False,
    )
    return complete_nu(pos, k_neg=k_neg, exact=False, critical=law.critical)


def disk_coefficient(law: StepLaw, l):
    """Disk weight W(l) = nu(-l-2) c_+^(l+2) / 2."""
    if l < 0:
        raise ValueError("degree must be nonnegative")
    if l + 2 > law.k_neg:
        raise RangeError(f"need nu(-{l + 2}); law materialized to {law.k_neg}")
    v = law.nu(-(l + 2))
    if isinstance(v, Fraction) and isinstance(law.exact.get(-2), Fraction):
        c_sq = 2 / law.exact[-2]
        if (l + 2) % 2 == 0:
            return v * c_sq ** ((l + 2) // 2) / 2
    return float(v) * law.c_plus ** (l + 2) / 2.0


def expected_volume(law: StepLaw, l):
    """Mean vertex count of a Boltzmann map with root-face degree l."""
    if l < 1:
        raise ValueError("degree must be positive")
    if l + 2 > law.k_neg:
        raise RangeError(f"need nu(-{l + 2}); law materialized to {law.k_neg}")
    denom = float(law.nu(-(l + 2)))
    if denom == 0.0:
        raise RangeError(f"nu(-{l + 2}) vanishes (parity); degenerate degree")
    h0 = law.hcache().value(0, l)
    return h0 * float(law.nu(-2)) / denom


# -- symmetric critical family -------------------------------------------------


def symmetric_a_max(r):
    """Largest amplitude a for which the symmetric law stays a probability."""
    r = float(r)
    if not (-1.0 < r <= 1.0):
        raise ValueError("ratio must lie in (-1, 1]")
    if r == 0.0 or r == 1.0:
        return math.pi / 4.0
    if 0.0 < r < 1.0:
        d = 2.0 * (r + 1.0) + (r - 1.0) ** 2 / math.sqrt(r) * math.atanh(
            2.0 * math.sqrt(r) / (r + 1.0)
        )
        return math.pi / d
    d = 2.0 * (r + 1.0) + (r - 1.0) ** 2 / math.sqrt(-r) * math.atan(
        2.0 * math.sqrt(-r) / (r + 1.0)
    )
    return math.pi / d


def symmetric_nu_value(r, a, k, epsabs=1e-13):
    """Fourier coefficient (1/2pi) int phi(theta) e^(-ik theta) dtheta.

    phi is even around pi, so this reduces to a cosine integral on [0, pi];
    the |sin(theta/2)| kink sits at the endpoint where the quadrature is
    comfortable.
    """
    r = float(r)
    a = float(a)
    k = abs(int(k))

    def phi(theta):
        return 1.0 - 2.0 * a * np.sqrt(
            1.0 + r * r + 2.0 * r * np.cos(theta)
        ) * np.abs(np.sin(theta / 2.0))

    if k == 0:
        val, _ = integrate.quad(phi, 0.0, math.pi, epsabs=epsabs, limit=400)
    else:
        val, _ = integrate.quad(
            phi, 0.0, math.pi, weight="cos", wvar=k, epsabs=epsabs, limit=400
        )
    return val / math.pi


def symmetric_nu_closed_r1(a, k):
    """Bipartite closed form: nu(k) = delta_{k0}(1 - 4a/pi) + (4a/pi)/(k^2-1)."""
    k = abs(int(k))
    if k == 0:
        return 1.0 - 4.0 * a / math.pi
    if k % 2:
        return 0.0
    return (4.0 * a / math.pi) / (k * k - 1.0)


def symmetric_family(r, a, k_pos=512, quadrature=True) -> StepLaw:
    """The symmetric critical step law with amplitude a at ratio r.

    Symmetric by construction (nu(-k) = nu(k)); critical but heavy-tailed:
    nu(k) ~ const / k^2, so the perimeter constant diverges.  Amplitudes
    beyond a_max(r) would make nu(0) negative and are refused.
    """
    r = float(r)
    a = float(a)
    amax = symmetric_a_max(r)
    if not (0.0 < a <= amax + 1e-12):
        raise ValueError(
            f"amplitude {a} outside (0, {amax:.12g}]: nu(0) would go negative"
        )
    ks = np.arange(0, k_pos + 1)
    if quadrature:
        vals = np.array([symmetric_nu_value(r, a, int(k)) for k in ks])
    else:
        if r != 1.0:
            raise ValueError("closed-form construction only exists at r = 1")
        vals = np.array([symmetric_nu_closed_r1(a, int(k)) for k in ks])
    vals = np.where(np.abs(vals) < 1e-15, 0.0, vals)
    if vals[0] < -1e-12:
        raise ValueError("nu(0) negative: amplitude out of range")
    vals[0] = max(vals[0], 0.0)
    nu_m2 = vals[2]
    c_plus = math.sqrt(2.0 / nu_m2)

    probs = np.concatenate([vals[:0:-1], vals])
    law = StepLaw(
        r=r,
        c_plus=c_plus,
        k_neg=k_pos,
        k_pos=k_pos,
        probs=probs,
        L_nu=math.inf,
        B_nu=math.nan,
        tail_const=math.nan,
        trunc_neg=float(2.0 * a * (1.0 + r) / math.pi / k_pos),
        trunc_pos=float(2.0 * a * (1.0 + r) / math.pi / k_pos),
        exact=None,
        family=("symmetric_critical", {"r": r, "a": a}),
        heavy_tail=True,
    )
    law.margin = 1.0 - _heavy_renewal_sum(law, 1, shift=1)
    law.residuals = {
        "harmonic_h0_k1": harmonic_residual(law, 0, 1),
        "harmonic_h0_k2": harmonic_residual(law, 0, 2),
    }
    return law


def _heavy_tail_model(law):
    """Fit nu(l) ~ c2/l^2 + c4/l^4 on the outer materialized window."""
    k_hi = law.k_pos
    k_lo = max(k_hi // 2, 8)
    ks, vs = [], []
    for k in range(k_lo, k_hi + 1):
        v = float(law.probs[k + law.k_neg])
        if v > 0:
            ks.append(k)
            vs.append(v)
    ks = np.asarray(ks, dtype=float)
    vs = np.asarray(vs)
    A = np.vstack([ks**-2.0, ks**-4.0]).T
    c2, c4 = np.linalg.lstsq(A, vs, rcond=None)[0]
    lattice = 2 if law.r == 1.0 else 1
    return (lambda l: c2 * l**-2.0 + c4 * l**-4.0), lattice


def _heavy_positive_sum(law, h_array, k_shift, l_direct=1 << 18):
    """sum_{l >= 1} h[l + k_shift] nu(l) with tail acceleration."""
    model, lattice = _heavy_tail_model(law)
    K = law.k_pos
    direct = 0.0
    for l in range(1, K + 1):
        v = float(law.probs[l + law.k_neg])
        if v:
            direct += h_array[l + k_shift] * v
    start = K + lattice - (K % lattice) if K % lattice else K + lattice
    ls = np.arange(start, l_direct, lattice, dtype=np.int64)
    terms = h_array[ls + k_shift] * model(ls.astype(float))
    tail, _err = accelerated_lattice_sum(terms, float(ls[0]), float(lattice))
    return direct + tail


_HEAVY_H_LEN = (1 << 18) + 64


def _heavy_renewal_sum(law, order, shift):
    """sum_{l>=0} h(order, l+shift) nu(l) for heavy-tailed symmetric laws."""
    cache = law.hcache()
    h = cache.array(order, _HEAVY_H_LEN)
    total = float(law.probs[law.k_neg]) * h[shift]  # l = 0 term
    total += _heavy_positive_sum(law, h, shift)
    return total


def harmonic_residual(law: StepLaw, order, k, l_pos_max=None):
    """|sum_l h(order, l+k) nu(l) - h(order, k)| for the materialized law.

    The negative side is finite because h vanishes below its order; the
    positive side is summed directly for regular laws and tail-accelerated
    for heavy-tailed symmetric laws.
    """
    cache = law.hcache()
    if law.heavy_tail:
        h = cache.array(order, _HEAVY_H_LEN)
        total = 0.0
        for l in range(-(k - order), 0):
            if l < -law.k_neg:
                continue
            v = float(law.probs[l + law.k_neg])
            if v:
                total += h[l + k] * v
        total += float(law.probs[law.k_neg]) * h[k]
        total += _heavy_positive_sum(law, h, k)
        return abs(total - h[k])
    l_hi = law.k_pos if l_pos_max is None else min(l_pos_max, law.k_pos)
    h = cache.array(order, l_hi + k + 1)
    ls = np.arange(-law.k_neg, l_hi + 1)
    idx = ls + k
    mask = idx >= 0
    total = float(np.dot(h[idx[mask]], law.probs[mask]))
    return abs(total - h[k])
