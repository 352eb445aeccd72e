"""Perimeter/volume simulators for finite pointed maps and the infinite map.

Both chains are reweightings of the same step law nu:

    finite map:   P(l -> l+k) = h(0, l+k) / h(0, l) * nu(k),
    infinite map: P(l -> l+k) = h(1, l+k) / h(1, l) * nu(k),

the first conditioning the walk to be absorbed at zero, the second to stay
positive (only meaningful for critical laws).  On a pruning jump
k = -l'-2 <= -2 the volume grows by the vertex count of a Boltzmann map
with root-face degree l', sampled exactly from enumeration tables for
small l', or through the universal limit V ~ xi * B * l'^2 with xi an
inverse-Gamma(3/2, 1/2) variable, or deterministically as the rounded
mean.  Face-exploration steps leave the volume unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import RangeError
from .hfun import HCache
from .walk import StepLaw, disk_coefficient, expected_volume

VOLUME_MODES = ("exact_small", "asymptotic_xi", "expectation")
DEFAULT_L_EXACT = 6
ALIAS_CACHE_SIZE = 4096


def _rng(seed, chain_index=0):
    return np.random.Generator(
        np.random.Philox(key=np.array([seed, chain_index], dtype=np.uint64))
    )


class AliasTable:
    """Vose alias table: O(n) build, O(1) draws, vectorized or scalar."""

    def __init__(self, values, probs):
        p = np.asarray(probs, dtype=np.float64)
        total = p.sum()
        if total <= 0:
            raise ValueError("alias table needs positive mass")
        p = p / total
        n = len(p)
        self.values = np.asarray(values)
        self.keep = np.ones(n)
        self.alias = np.arange(n)
        scaled = p * n
        small = [i for i in range(n) if scaled[i] < 1.0]
        large = [i for i in range(n) if scaled[i] >= 1.0]
        while small and large:
            s = small.pop()
            g = large.pop()
            self.keep[s] = scaled[s]
            self.alias[s] = g
            scaled[g] -= 1.0 - scaled[s]
            (small if scaled[g] < 1.0 else large).append(g)
        self.n = n

    def draw(self, rng, size=None):
        idx = rng.integers(0, self.n, size=size)
        take_alias = rng.random(size) >= self.keep[idx]
        idx = np.where(take_alias, self.alias[idx], idx)
        return self.values[idx]


# -- single-step laws ------------------------------------------------------------


@dataclass
class JumpDistribution:
    ks: np.ndarray
    probs: np.ndarray
    exact: dict = None

    def prob(self, k):
        if self.exact is not None and k in self.exact:
            return self.exact[k]
        hits = np.nonzero(self.ks == k)[0]
        return float(self.probs[hits[0]]) if len(hits) else 0.0

    def total(self):
        return float(self.probs.sum())


def _doob_distribution(l, law: StepLaw, order):
    cache = law.hcache()
    h = cache.array(order, l + law.k_pos + 1)
    ks = law.ks
    idx = ks + l
    mask = (idx >= 0) & (law.probs > 0)
    weights = np.zeros_like(law.probs)
    weights[mask] = h[idx[mask]] * law.probs[mask]
    hl = h[l]
    if hl <= 0:
        raise ValueError(f"conditioning weight vanishes at l={l}")
    probs = weights / hl
    exact = None
    if law.exact is not None:
        try:
            r_exact = Fraction(law.r)
        except (ValueError, OverflowError):
            r_exact = None
        if r_exact is not None:
            ec = HCache(r_exact)
            hl_e = ec.value(order, l)
            exact = {}
            for k, v in law.exact.items():
                if l + k >= 0 and hl_e != 0:
                    p = ec.value(order, l + k) * v / hl_e
                    if p != 0:
                        exact[k] = p
    return JumpDistribution(ks[mask], probs[mask], exact)


def step_finite(l, law: StepLaw) -> JumpDistribution:
    """Jump law of the finite-map perimeter chain at perimeter l >= 1."""
    if l < 1:
        raise ValueError("the chain is absorbed at zero")
    return _doob_distribution(l, law, 0)


def step_ibpm(l, law: StepLaw) -> JumpDistribution:
    """Jump law of the infinite-map perimeter chain at perimeter l >= 1."""
    if l < 1:
        raise ValueError("perimeter must stay positive")
    if not law.critical:
        raise ValueError("the stay-positive transform needs a critical law")
    return _doob_distribution(l, law, 1)


def sample_xi(rng, size=None):
    """The limit volume factor: density exp(-1/(2x)) x^(-5/2) / sqrt(2 pi).

    Equal in law to the reciprocal of a Gamma(3/2, scale 2) variable; the
    change of variables is exact and is pinned down by the quadrature tests.
    """
    return 1.0 / rng.gamma(1.5, 2.0, size=size)


# -- volume increments -----------------------------------------------------------


class VolumeSampler:
    """Draws the vertex count added when a hole of degree l' is filled in."""

    def __init__(self, law: StepLaw, mode="exact_small", l_exact=DEFAULT_L_EXACT,
                 d_max=24):
        if mode not in VOLUME_MODES:
            raise ValueError(f"volume mode must be one of {VOLUME_MODES}")
        self.law = law
        self.mode = mode
        self.l_exact = 0
        self.flags = {"exact_fallback": False, "residual_draws": 0}
        self.tables = {}
        self.expectation = {}
        if mode == "exact_small":
            self._build_exact_tables(l_exact, d_max)
        if mode == "expectation":
            for lp in range(1, 64):
                try:
                    self.expectation[lp] = max(1, round(expected_volume(law, lp)))
                except (RangeError, ValueError):
                    continue

    def _build_exact_tables(self, l_exact, d_max):
        from .oracle import volume_tables
        from .weights import q_from_nu

        q = q_from_nu(self.law)
        if not q.support or q.min_support <= 2:
            self.flags["exact_fallback"] = True
            return
        step = 2 if q.bipartite else 1
        start = 2 if q.bipartite else 1
        for lp in range(start, l_exact + 1, step):
            try:
                vt = volume_tables(q, lp, d_max)
                total = disk_coefficient(self.law, lp)
            except (ValueError, RangeError):
                self.flags["exact_fallback"] = True
                return
            if not vt.complete or float(total) <= 0:
                self.flags["exact_fallback"] = True
                return
            Vs = sorted(V for V in vt.values if V <= vt.V_star)
            probs = np.array([float(vt.values[V]) / float(total) for V in Vs])
            residual = max(0.0, 1.0 - probs.sum())
            self.tables[lp] = (np.array(Vs), np.cumsum(probs), residual,
                               vt.V_star)
        self.l_exact = l_exact

    def draw(self, rng, l_prime):
        """Vertex count of the filled-in hole; l' = 0 is the one-vertex map."""
        if l_prime == 0:
            return 1
        if self.mode == "expectation":
            val = self.expectation.get(l_prime)
            if val is None:
                val = max(1, round(expected_volume(self.law, l_prime)))
                self.expectation[l_prime] = val
            return val
        if self.mode == "exact_small" and l_prime in self.tables:
            Vs, cdf, residual, v_star = self.tables[l_prime]
            u = rng.random()
            if u < cdf[-1]:
                return int(Vs[np.searchsorted(cdf, u, side="right")])
            self.flags["residual_draws"] += 1
            xi = sample_xi(rng)
            return max(v_star + 1, int(round(xi * self.law.B_nu * l_prime**2)))
        if math.isnan(self.law.B_nu):
            # heavy-tailed laws have no universal volume fluctuation scale;
            # fall back to the exact mean increment
            self.flags["heavy_volume_expectation"] = True
            try:
                return max(1, round(expected_volume(self.law, l_prime)))
            except RangeError:
                return 1
        xi = sample_xi(rng)
        return max(1, int(round(xi * self.law.B_nu * l_prime**2)))


# -- traces ----------------------------------------------------------------------


@dataclass
class PeelTrace:
    perimeters: np.ndarray
    volumes: np.ndarray
    mode: str
    volume_mode: str
    seed: int
    l0: int
    law_digest: str
    flags: dict = field(default_factory=dict)

    @property
    def n_steps(self):
        return len(self.perimeters) - 1

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write(f"# seed={self.seed}\n# mode={self.mode}\n")
            fh.write(f"# volume_mode={self.volume_mode}\n")
            fh.write(f"# l0={self.l0}\n# law={self.law_digest}\n")
            fh.write("step,perimeter,volume\n")
            for i, (l, v) in enumerate(zip(self.perimeters, self.volumes)):
                fh.write(f"{i},{int(l)},{int(v)}\n")

    def to_binary(self, path):
        """Columnar binary layout: u64 little-endian length n+1, then the
        perimeter column and the volume column as i64 little-endian."""
        with open(path, "wb") as fh:
            n = len(self.perimeters)
            fh.write(np.uint64(n).tobytes())
            fh.write(self.perimeters.astype("<i8").tobytes())
            fh.write(self.volumes.astype("<i8").tobytes())

    @staticmethod
    def read_binary(path):
        with open(path, "rb") as fh:
            n = int(np.frombuffer(fh.read(8), dtype="<u8")[0])
            per = np.frombuffer(fh.read(8 * n), dtype="<i8")
            vol = np.frombuffer(fh.read(8 * n), dtype="<i8")
        return per, vol


def _deep_law_for(law: StepLaw, n_steps):
    """Deepen the materialized negative range to the walk scale.

    Perimeters of order (sqrt(1+r) L n)^(2/3) need pruning jumps of the
    same order; a law truncated short of that loses the heavy negative
    tail and the chain drifts upward.
    """
    if law.heavy_tail:
        return law
    a_n = (math.sqrt(1.0 + law.r) * law.L_nu * max(n_steps, 1)) ** (2.0 / 3.0)
    target = 1 << max(10, math.ceil(math.log2(16.0 * a_n + 2.0)))
    target = min(target, 1 << 19)
    if target > law.k_neg:
        from .walk import deepen_negative

        return deepen_negative(law, target)
    return law


def simulate(mode, law: StepLaw, l0=None, n_steps=1000, seed=0,
             volume_mode="exact_small", l_exact=DEFAULT_L_EXACT, d_max=24,
             chain_index=0) -> PeelTrace:
    """Run one peeling chain and record the full (perimeter, volume) path.

    mode 'finite' absorbs at zero, mode 'ibpm' keeps the perimeter
    positive.  Identical (seed, parameters) produce bit-identical traces;
    parallel chains should vary chain_index, which keys an independent
    counter-based stream.
    """
    if mode not in ("finite", "ibpm"):
        raise ValueError("mode must be 'finite' or 'ibpm'")
    if l0 is None:
        l0 = 2
    if l0 < 1:
        raise ValueError("initial perimeter must be positive")
    law = _deep_law_for(law, n_steps)
    rng = _rng(seed, chain_index)
    vol = VolumeSampler(law, volume_mode, l_exact, d_max)
    step_fn = step_finite if mode == "finite" else step_ibpm
    tables = {}
    order = []

    def jump_table(l):
        tab = tables.get(l)
        if tab is None:
            dist = step_fn(l, law)
            tab = AliasTable(dist.ks, dist.probs)
            tables[l] = tab
            order.append(l)
            if len(order) > ALIAS_CACHE_SIZE:
                tables.pop(order.pop(0), None)
        return tab

    per = np.empty(n_steps + 1, dtype=np.int64)
    volumes = np.empty(n_steps + 1, dtype=np.int64)
    per[0] = l0
    volumes[0] = 0
    l = l0
    V = 0
    for i in range(1, n_steps + 1):
        if l == 0:
            per[i] = 0
            volumes[i] = V
            continue
        k = int(jump_table(l).draw(rng))
        if k <= -2:
            V += vol.draw(rng, -k - 2)
        l += k
        per[i] = l
        volumes[i] = V
    return PeelTrace(
        perimeters=per,
        volumes=volumes,
        mode=mode,
        volume_mode=volume_mode,
        seed=seed,
        l0=l0,
        law_digest=law.digest(),
        flags=dict(vol.flags),
    )


# -- vectorized ensembles ---------------------------------------------------------


class _EnsembleEngine:
    """Stacked alias tables for small perimeters plus envelope rejection
    above them; all chains advance in lockstep with numpy draws."""

    def __init__(self, law: StepLaw, mode, l_small=1024, h_len=1 << 17):
        self.law = law
        self.mode = mode
        self.order = 0 if mode == "finite" else 1
        if mode == "ibpm" and not law.critical:
            raise ValueError("the stay-positive transform needs a critical law")
        self.l_small = l_small
        cache = law.hcache()
        self.h = cache.array(self.order, h_len)
        self.h_len = h_len
        self.ks = law.ks
        self.probs = law.probs
        self.proposal = AliasTable(self.ks, self.probs)
        # jumps below -l_small are unreachable from the small region, so the
        # stacked tables only cover the window k >= -l_small
        window = self.ks >= -self.l_small
        self.win_ks = self.ks[window]
        self.win_probs = self.probs[window]
        self.small_keep = np.zeros((self.l_small, len(self.win_ks)))
        self.small_alias = np.zeros((self.l_small, len(self.win_ks)),
                                    dtype=np.int64)
        self.small_ok = np.zeros(self.l_small, dtype=bool)
        # rejection envelope above l_small
        self._build_envelope()

    def _build_envelope(self):
        law = self.law
        h = self.h
        self.bound = np.ones(self.h_len)
        ls = np.arange(self.l_small, self.h_len - law.k_pos)
        if self.order == 1:
            # h(1, .) is nondecreasing: the envelope peaks at k = k_pos
            self.bound[ls] = h[ls + law.k_pos] / h[ls]
        else:
            # h(0, .) decreases along parities: the envelope peaks at the
            # most negative reachable argument; unreachable parities keep
            # a unit bound
            lo = np.maximum(ls - law.k_neg, 0)
            peak = np.maximum(h[lo], h[np.minimum(lo + 1, self.h_len - 1)])
            ok = h[ls] > 0
            self.bound[ls[ok]] = peak[ok] / h[ls[ok]]

    def _grow(self):
        self.h_len *= 2
        self.h = self.law.hcache().array(self.order, self.h_len)
        self._build_envelope()

    def _small_table(self, l):
        if not self.small_ok[l]:
            idx = self.win_ks + l
            mask = (idx >= 0) & (self.win_probs > 0)
            w = np.zeros_like(self.win_probs)
            w[mask] = self.h[idx[mask]] * self.win_probs[mask]
            tab = AliasTable(np.arange(len(self.win_ks)), w)
            self.small_keep[l] = tab.keep
            self.small_alias[l] = tab.alias
            self.small_ok[l] = True
        return self.small_keep[l], self.small_alias[l]

    def ensure_small(self, ls):
        if np.all(self.small_ok[ls]):
            return
        for l in np.unique(ls):
            if 1 <= l < self.l_small:
                self._small_table(int(l))

    def draw_jumps(self, ls, rng):
        """One jump per chain at perimeters ls >= 1 (vectorized)."""
        n = len(ls)
        out = np.zeros(n, dtype=np.int64)
        small = ls < self.l_small
        if small.any():
            self.ensure_small(ls[small])
            ls_s = ls[small]
            j = rng.integers(0, len(self.win_ks), size=ls_s.shape)
            u = rng.random(ls_s.shape)
            keep = self.small_keep[ls_s, j]
            alias = self.small_alias[ls_s, j]
            idx = np.where(u < keep, j, alias)
            out[small] = self.win_ks[idx]
        big = ~small
        if big.any():
            ls_b = ls[big]
            while ls_b.max() + self.law.k_pos >= self.h_len:
                self._grow()
            res = np.zeros(ls_b.shape, dtype=np.int64)
            todo = np.arange(len(ls_b))
            while len(todo):
                lt = ls_b[todo]
                k = self.proposal.draw(rng, size=len(todo)).astype(np.int64)
                # arguments at or below zero carry no conditioning weight
                arg = np.maximum(lt + k, 0)
                acc_p = self.h[arg] / (self.h[lt] * self.bound[lt])
                u = rng.random(len(todo))
                accepted = u < acc_p
                res[todo[accepted]] = k[accepted]
                todo = todo[~accepted]
            out[big] = res
        return out


def simulate_ensemble(mode, law: StepLaw, l0, n_steps, n_chains, seed=0,
                      volume_mode="asymptotic_xi", l_exact=DEFAULT_L_EXACT,
                      d_max=24, checkpoints=None):
    """Advance n_chains independent chains and record checkpoint states.

    Returns {checkpoint: (perimeters, volumes)} plus the final state under
    key n_steps.  Uses a single counter-based stream keyed by the seed, so
    results are reproducible for fixed (seed, n_chains).
    """
    if checkpoints is None:
        checkpoints = []
    checkpoints = sorted(set(int(c) for c in checkpoints) | {int(n_steps)})
    law = _deep_law_for(law, n_steps)
    rng = _rng(seed)
    engine = _EnsembleEngine(law, mode)
    vol = VolumeSampler(law, volume_mode, l_exact, d_max)
    small_cdfs = {}
    for lp, (Vs, cdf, residual, v_star) in vol.tables.items():
        small_cdfs[lp] = (Vs, cdf, v_star)
    heavy_means = None
    if math.isnan(law.B_nu):
        heavy_means = np.ones(law.k_neg + 1, dtype=np.int64)
        for lp in range(1, law.k_neg - 1):
            try:
                heavy_means[lp] = max(1, round(expected_volume(law, lp)))
            except (RangeError, ValueError):
                heavy_means[lp] = 1

    ls = np.full(n_chains, int(l0), dtype=np.int64)
    Vs_acc = np.zeros(n_chains, dtype=np.int64)
    out = {}
    for step in range(1, max(checkpoints) + 1):
        active = ls >= 1
        if active.any():
            jumps = np.zeros(n_chains, dtype=np.int64)
            jumps[active] = engine.draw_jumps(ls[active], rng)
            prune = active & (jumps <= -2)
            if prune.any():
                lp = -jumps[prune] - 2
                dv = np.ones(lp.shape, dtype=np.int64)
                big = np.ones(lp.shape, dtype=bool)
                if vol.mode == "exact_small" and small_cdfs:
                    for lv, (Vvals, cdf, v_star) in small_cdfs.items():
                        sel = lp == lv
                        if not sel.any():
                            continue
                        u = rng.random(int(sel.sum()))
                        inside = u < cdf[-1]
                        pos = np.searchsorted(cdf, u, side="right")
                        pos = np.minimum(pos, len(Vvals) - 1)
                        vals = Vvals[pos]
                        xi = sample_xi(rng, size=int(sel.sum()))
                        fallback = np.maximum(
                            v_star + 1,
                            np.rint(xi * law.B_nu * lv**2).astype(np.int64),
                        )
                        dv[sel] = np.where(inside, vals, fallback)
                        big[sel] = False
                nonzero = lp > 0
                rest = big & nonzero
                if rest.any():
                    if heavy_means is not None:
                        dv[rest] = heavy_means[np.minimum(lp[rest], law.k_neg)]
                    else:
                        xi = sample_xi(rng, size=int(rest.sum()))
                        dv[rest] = np.maximum(
                            1,
                            np.rint(xi * law.B_nu * lp[rest] ** 2).astype(np.int64),
                        )
                dv[lp == 0] = 1
                Vs_acc[prune] += dv
            ls = ls + jumps
            if mode == "finite":
                ls = np.maximum(ls, 0)
        if step in checkpoints:
            out[step] = (ls.copy(), Vs_acc.copy())
    return out
