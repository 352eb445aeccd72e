"""Monte Carlo diagnostics for the stable scaling limits.

The perimeter of the infinite-map chain rescales by (sqrt(1+r) L n)^(2/3)
and the volume by (8/(3 c_+^2)) (L/(1+r))^(1/3) n^(4/3); the limits are
universal across regular critical weight sequences, so acceptance rests on
cross-model quantile collapse, exponent regressions, the characteristic
function of the unconditioned walk against

    exp( -|theta|^(1/2) (|theta| - i theta) / sqrt(2) ),

and the vertex-fugacity slope of the spectral constant,

    (1 - c_+(g)/c_+(1)) / sqrt(1-g)  ->  sqrt(16 / (3 (1+r) c_+^2 L)).

No direct sampler of the limit processes is attempted.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .criticality import solve_boltzmann
from .peeling import _rng, simulate_ensemble
from .seriesutil import richardson_limit
from .walk import StepLaw, complete_nu
from .weights import WeightSequence, nu_from_q

DEFAULT_QUANTILES = (0.10, 0.25, 0.50, 0.75, 0.90)


def perimeter_normalizer(law: StepLaw, n):
    return (math.sqrt(1.0 + law.r) * law.L_nu * n) ** (2.0 / 3.0)


def volume_normalizer(law: StepLaw, n):
    return (8.0 / (3.0 * law.c_plus**2)) * (
        law.L_nu / (1.0 + law.r)
    ) ** (1.0 / 3.0) * n ** (4.0 / 3.0)


def rescale(perimeters, volumes, law: StepLaw, n, t=1.0):
    """Rescaled samples (l_hat, V_hat) at time t of an n-step run."""
    step = int(n * t)
    if step > n:
        raise ValueError("trace shorter than requested time")
    a = perimeter_normalizer(law, n)
    b = volume_normalizer(law, n)
    return np.asarray(perimeters) / a, np.asarray(volumes) / b


def limit_ecf(thetas):
    thetas = np.asarray(thetas, dtype=float)
    return np.exp(-np.abs(thetas) ** 0.5 * (np.abs(thetas) - 1j * thetas)
                  / math.sqrt(2.0))


def _quantile_with_se(samples, qs, groups=16):
    """Quantiles plus group-split Monte Carlo standard errors."""
    samples = np.asarray(samples, dtype=float)
    vals = np.quantile(samples, qs)
    parts = np.array_split(samples, groups)
    per_group = np.vstack([np.quantile(p, qs) for p in parts])
    ses = per_group.std(axis=0, ddof=1) / math.sqrt(groups)
    return vals, ses


@dataclass
class EcfReport:
    n: int
    n_samples: int
    thetas: np.ndarray
    empirical: np.ndarray
    limit: np.ndarray
    discrepancy: np.ndarray
    std_error: np.ndarray

    def max_discrepancy(self):
        return float(self.discrepancy.max())

    def to_report(self):
        return {
            "n": self.n,
            "n_samples": self.n_samples,
            "rows": [
                {
                    "theta": float(t),
                    "ecf_re": float(e.real),
                    "ecf_im": float(e.imag),
                    "limit_re": float(c.real),
                    "limit_im": float(c.imag),
                    "abs_diff": float(d),
                    "std_error": float(s),
                }
                for t, e, c, d, s in zip(
                    self.thetas, self.empirical, self.limit,
                    self.discrepancy, self.std_error,
                )
            ],
        }


def ecf_test(law: StepLaw, n, n_samples, thetas=(0.5, 1.0, 2.0), seed=0,
             chunk=20_000, k_common=512, k_deep=1 << 17) -> EcfReport:
    """Empirical characteristic function of the rescaled unconditioned walk.

    The endpoint X_n is drawn exactly by splitting the step law into a
    common part (multinomial increment counts over the materialized
    support), a deep negative block (binomial count of rare big jumps, each
    drawn from the exact kernel values), and a matched power-law remainder
    beyond the block.  The split matters: a plainly truncated law loses a
    K^(-1/2) drift that would swamp the n^(2/3) normalization.
    """
    from .peeling import AliasTable
    from .walk import deepen_negative

    thetas = np.asarray(thetas, dtype=float)
    rng = _rng(seed)
    if not law.heavy_tail:
        law = deepen_negative(law, k_deep)
    k0 = min(k_common, law.k_neg)
    ks_all = law.ks
    common_sel = ks_all >= -k0
    p_common = np.asarray(law.probs[common_sel], dtype=np.float64)
    ks_common = ks_all[common_sel].astype(np.float64)
    block_sel = ~common_sel
    m_block = float(law.probs[block_sel].sum())
    block_tab = None
    if m_block > 0:
        block_tab = AliasTable(ks_all[block_sel], law.probs[block_sel])
    # the remainder beyond the block follows the k^(-5/2) tail; its index
    # scales like k_deep * U^(-2/3)
    m_pareto = max(0.0, 1.0 - float(p_common.sum()) - m_block)
    m_tail = m_block + m_pareto
    if law.heavy_tail:
        # two-sided heavy tails have no one-sided remainder model; run on
        # the renormalized truncation (exploratory diagnostics only)
        m_tail = m_block
        m_pareto = 0.0
    parity = 2 if law.r == 1.0 else 1
    p_common = p_common / p_common.sum()
    p_common[np.argmax(p_common)] += 1.0 - p_common.sum()

    a_n = perimeter_normalizer(law, n)
    acc = np.zeros(len(thetas), dtype=np.complex128)
    acc_sq = np.zeros(len(thetas))
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        if m_tail > 0:
            n_t = rng.binomial(n, m_tail, size=m)
        else:
            n_t = np.zeros(m, dtype=np.int64)
        counts = rng.multinomial(n - n_t, p_common)
        X = counts @ ks_common
        total_t = int(n_t.sum())
        if total_t:
            owners = np.repeat(np.arange(m), n_t)
            draws = np.empty(total_t)
            use_pareto = rng.random(total_t) < (m_pareto / m_tail)
            n_b = int((~use_pareto).sum())
            if n_b and block_tab is not None:
                draws[~use_pareto] = block_tab.draw(rng, size=n_b)
            n_p = total_t - n_b
            if n_p:
                mag = law.k_neg * rng.random(n_p) ** (-2.0 / 3.0)
                mag = parity * np.ceil(mag / parity)
                draws[use_pareto] = -mag
            np.add.at(X, owners, draws)
        phase = np.exp(1j * np.outer(X / a_n, thetas))
        acc += phase.sum(axis=0)
        acc_sq += (np.abs(phase - phase.mean(axis=0)) ** 2).sum(axis=0)
        done += m
    emp = acc / n_samples
    se = np.sqrt(acc_sq / n_samples) / math.sqrt(n_samples)
    lim = limit_ecf(thetas)
    return EcfReport(
        n=n,
        n_samples=n_samples,
        thetas=thetas,
        empirical=emp,
        limit=lim,
        discrepancy=np.abs(emp - lim),
        std_error=se,
    )


@dataclass
class CollapseReport:
    n: int
    chains: int
    quantiles: tuple
    models: dict          # name -> {"l_hat": (vals, ses), "v_hat": (vals, ses)}
    samples: dict = field(default_factory=dict)

    def model_names(self):
        return list(self.models)

    def rel_median_gap(self, which="l_hat"):
        names = self.model_names()
        med_idx = self.quantiles.index(0.5)
        meds = [self.models[m][which][0][med_idx] for m in names]
        lo, hi = min(meds), max(meds)
        return (hi - lo) / hi

    def to_report(self):
        out = {"n": self.n, "chains": self.chains,
               "quantiles": list(self.quantiles), "models": {}}
        for name, d in self.models.items():
            out["models"][name] = {
                k: {"values": [float(x) for x in v[0]],
                    "std_errors": [float(x) for x in v[1]]}
                for k, v in d.items()
            }
        return out

    def samples_to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("model,l_hat,v_hat\n")
            for name, (lh, vh) in self.samples.items():
                for a, b in zip(lh, vh):
                    fh.write(f"{name},{float(a)!r},{float(b)!r}\n")


def collapse_test(laws: dict, n, chains, quantiles=DEFAULT_QUANTILES, seed=0,
                  l0=2, volume_mode="asymptotic_xi") -> CollapseReport:
    """Rescaled quantiles at t = 1 for several models side by side.

    Universality predicts the rescaled laws agree; the caller applies the
    tolerance.  The same volume sampling regime is used for every model so
    the comparison probes the limit and not the sampling convention.
    """
    models = {}
    samples = {}
    for i, (name, law) in enumerate(laws.items()):
        out = simulate_ensemble(
            "ibpm", law, l0, n, chains, seed=seed + 1000 * i,
            volume_mode=volume_mode,
        )
        ls, vs = out[n]
        lh, vh = rescale(ls, vs, law, n)
        lq = _quantile_with_se(lh, quantiles)
        vq = _quantile_with_se(vh, quantiles)
        models[name] = {"l_hat": lq, "v_hat": vq}
        samples[name] = (lh, vh)
    return CollapseReport(n, chains, tuple(quantiles), models, samples)


@dataclass
class ExponentReport:
    n_values: list
    perimeter_medians: list
    volume_medians: list
    perimeter_slope: float
    volume_slope: float

    def to_report(self):
        return {
            "n_values": [int(n) for n in self.n_values],
            "perimeter_medians": [float(x) for x in self.perimeter_medians],
            "volume_medians": [float(x) for x in self.volume_medians],
            "perimeter_slope": self.perimeter_slope,
            "volume_slope": self.volume_slope,
        }


def exponent_regression(law: StepLaw, n_values=(1000, 10_000, 100_000),
                        chains=2048, seed=0, l0=2,
                        volume_mode="asymptotic_xi") -> ExponentReport:
    """Log-log slope of median perimeter (target 2/3) and volume (4/3)."""
    n_values = sorted(int(n) for n in n_values)
    out = simulate_ensemble(
        "ibpm", law, l0, n_values[-1], chains, seed=seed,
        checkpoints=n_values, volume_mode=volume_mode,
    )
    meds_l = [float(np.median(out[n][0])) for n in n_values]
    meds_v = [float(np.median(out[n][1])) for n in n_values]
    logn = np.log(n_values)
    slope_l = float(np.polyfit(logn, np.log(meds_l), 1)[0])
    slope_v = float(np.polyfit(logn, np.log(meds_v), 1)[0])
    return ExponentReport(n_values, meds_l, meds_v, slope_l, slope_v)


@dataclass
class SlopeReport:
    g_values: list
    raw_slopes: list
    estimate: float
    predicted: float
    c_minus_estimate: float = None

    @property
    def rel_error(self):
        return abs(self.estimate / self.predicted - 1.0)

    def to_report(self):
        return {
            "g_values": [float(g) for g in self.g_values],
            "raw_slopes": [float(s) for s in self.raw_slopes],
            "estimate": self.estimate,
            "predicted": self.predicted,
            "rel_error": self.rel_error,
            "c_minus_estimate": self.c_minus_estimate,
        }


def cplus_slope_test(q: WeightSequence, j_range=(2, 3, 4, 5, 6)) -> SlopeReport:
    """Vertex-fugacity slope of c_+ against its closed form.

    Solves the deformed sequence at g = 1 - 10^(-j), forms the normalized
    increments and Richardson-extrapolates them in sqrt(1-g).
    """
    cd1 = solve_boltzmann(q)
    if cd1.classification not in ("critical", "regular_critical"):
        raise ValueError("slope test needs a critical weight sequence")
    law = complete_nu(nu_from_q(q, cd1.c_plus, cd1.r), k_neg=8)
    predicted = math.sqrt(
        16.0 / (3.0 * (1.0 + cd1.r) * cd1.c_plus**2 * law.L_nu)
    )
    gs, slopes, slopes_m = [], [], []
    for j in j_range:
        g = 1.0 - 10.0 ** (-j)
        cd = solve_boltzmann(q, g=g)
        x = math.sqrt(1.0 - g)
        gs.append(g)
        slopes.append((1.0 - cd.c_plus / cd1.c_plus) / x)
        if cd1.r < 1.0:
            slopes_m.append((1.0 - cd.c_minus / cd1.c_minus) / x)
    Ms = [10.0 ** (j / 2.0) for j in j_range]
    expos = list(range(1, len(Ms)))
    est = richardson_limit(Ms, slopes, expos)
    est_m = None
    if slopes_m:
        est_m = richardson_limit(Ms, slopes_m, expos)
    return SlopeReport(gs, slopes, est, predicted, est_m)


@dataclass
class ScalingReport:
    ecf: EcfReport = None
    collapse: CollapseReport = None
    exponents: dict = None
    slopes: dict = None

    def to_report(self):
        out = {}
        if self.ecf is not None:
            out["ecf"] = self.ecf.to_report()
        if self.collapse is not None:
            out["collapse"] = self.collapse.to_report()
        if self.exponents is not None:
            out["exponents"] = {k: v.to_report() for k, v in self.exponents.items()}
        if self.slopes is not None:
            out["slopes"] = {k: v.to_report() for k, v in self.slopes.items()}
        return out

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_report(), fh, indent=1)
