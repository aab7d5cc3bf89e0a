"""Closed-form photon-number noise model.

Rates are per-pulse threefold-coincidence probabilities multiplied by a single
free ``scale`` constant.  Only magnitudes of ``kappa`` and ``alpha`` enter.

    CC_g = scale * |k|^2 |a|^2 t1^2 t2^2
    CC_s = scale * t1^2 t2^4 |k|^4 / 4
    CC_f = scale * |k|^2 t1^2 * sum_{n=2}^{N} |a|^(2n) / n!

``N`` (``n_terms``) is the index of the last Fock term kept in the coherent
state expansion, so ``N=3`` reproduces the |a|^4/2 + |a|^6/6 form.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from rtnoise.errors import ModelDomainError, UndefinedRatioError, UndefinedSNRError

__all__ = [
    "SourceParams",
    "CoincidenceRates",
    "cc_genuine",
    "cc_signal_parasitic",
    "cc_fundamental_parasitic",
    "coincidence_rates",
    "snr",
    "snr_db",
    "ratio_R",
    "alpha_from_R",
    "snr_of_R",
    "snr_of_R_leading",
    "optimal_R",
    "snr_from_ccg",
    "to_db",
    "from_db",
]

# perturbative regime used for the validity flag
KAPPA_REGIME = 0.3
ALPHA_REGIME = 0.5

LOG_R_BOUNDS = (-4.0, 2.0)  # log10 R search window for the optimum


@dataclass(frozen=True)
class SourceParams:
    """Physical knobs of the three-photon source.

    Attributes:
        kappa: SPDC gain (pair amplitude), dimensionless.
        alpha: coherent amplitude of the attenuated laser mode after all losses.
        t1: amplitude transmissivity of the idler coupling.
        t2: amplitude transmissivity of the signal coupling.
        n_terms: last Fock index kept in the coherent-state expansion (N >= 2).
        scale: maps per-pulse probability to measured rate units.
        cutoff: Fock cutoff per mode, only used by the brute-force oracle.
    """

    kappa: complex = 0.1
    alpha: complex = 0.08
    t1: float = 0.3
    t2: float = 0.3
    n_terms: int = 3
    scale: float = 1.0
    cutoff: int = 4

    def __post_init__(self):
        for name in ("t1", "t2"):
            t = getattr(self, name)
            if not 0.0 <= t <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {t}")
        if int(self.n_terms) != self.n_terms or self.n_terms < 2:
            raise ValueError(f"n_terms must be an integer >= 2, got {self.n_terms}")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if int(self.cutoff) != self.cutoff or self.cutoff < 2:
            raise ValueError(f"cutoff must be an integer >= 2, got {self.cutoff}")

    @property
    def abs_kappa(self) -> float:
        return abs(self.kappa)

    @property
    def abs_alpha(self) -> float:
        return abs(self.alpha)

    @property
    def perturbative(self) -> bool:
        """False when |kappa| > 0.3 or |alpha| > 0.5 and the expansion is suspect."""
        return self.abs_kappa <= KAPPA_REGIME and self.abs_alpha <= ALPHA_REGIME

    def replace(self, **changes) -> "SourceParams":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class CoincidenceRates:
    """Genuine and parasitic threefold rates; ``cc_a`` is their sum."""

    cc_g: float
    cc_s: float
    cc_f: float

    def __post_init__(self):
        for name in ("cc_g", "cc_s", "cc_f"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def cc_a(self) -> float:
        return self.cc_g + self.cc_s + self.cc_f

    def scaled(self, factor: float) -> "CoincidenceRates":
        return CoincidenceRates(self.cc_g * factor, self.cc_s * factor, self.cc_f * factor)


def _coherent_tail_sum(abs_alpha2: float, n_terms: int) -> float:
    """sum_{n=2}^{N} x^n / n! for x = |alpha|^2."""
    total = 0.0
    term = abs_alpha2 * abs_alpha2 / 2.0
    for n in range(2, n_terms + 1):
        total += term
        term *= abs_alpha2 / (n + 1)
    return total


def cc_genuine(p: SourceParams) -> float:
    return p.scale * p.abs_kappa**2 * p.abs_alpha**2 * p.t1**2 * p.t2**2


def cc_signal_parasitic(p: SourceParams) -> float:
    return p.scale * p.t1**2 * p.t2**4 * p.abs_kappa**4 / 4.0


def cc_fundamental_parasitic(p: SourceParams) -> float:
    return p.scale * p.abs_kappa**2 * p.t1**2 * _coherent_tail_sum(p.abs_alpha**2, p.n_terms)


def coincidence_rates(p: SourceParams) -> CoincidenceRates:
    return CoincidenceRates(cc_genuine(p), cc_signal_parasitic(p), cc_fundamental_parasitic(p))


def snr(p: SourceParams) -> float:
    """Linear signal-to-noise ratio CC_g / (CC_s + CC_f)."""
    noise = cc_signal_parasitic(p) + cc_fundamental_parasitic(p)
    if noise == 0:
        raise UndefinedSNRError("CC_s + CC_f = 0; SNR is undefined")
    return cc_genuine(p) / noise


def to_db(x):
    return 10.0 * np.log10(x)


def from_db(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def snr_db(p: SourceParams) -> float:
    return float(to_db(snr(p)))


def ratio_R(p: SourceParams) -> float:
    """R = CC_f / CC_s with the truncated coherent expansion."""
    cc_s = cc_signal_parasitic(p)
    if cc_s == 0:
        raise UndefinedRatioError("CC_s = 0 (kappa = 0 or t2 = 0); R is undefined")
    return cc_fundamental_parasitic(p) / cc_s


def _check_r_inputs(target_R: float, kappa: complex, t2: float) -> None:
    if not target_R > 0:
        raise ValueError(f"target_R must be positive, got {target_R}")
    if abs(kappa) == 0:
        raise UndefinedRatioError("kappa = 0; R is undefined")
    if not 0 < t2 <= 1:
        raise ValueError(f"t2 must lie in (0, 1], got {t2}")


def _alpha2_from_R(target_R: float, kappa: complex, t2: float, n_terms: int) -> float:
    # tail_sum(x) = R |k|^2 t2^4 / 4, strictly increasing in x >= 0
    target = target_R * abs(kappa) ** 2 * t2**4 / 4.0
    leading = math.sqrt(2.0 * target)
    if n_terms == 2:
        return leading
    return brentq(
        lambda x: _coherent_tail_sum(x, n_terms) - target,
        0.0,
        leading * 1.01,
        xtol=1e-300,
        rtol=1e-15,
        maxiter=500,
    )


def alpha_from_R(target_R: float, kappa: complex, t2: float, n_terms: int = 3) -> float:
    """Invert R(|alpha|) for the unique positive |alpha|."""
    _check_r_inputs(target_R, kappa, t2)
    if n_terms < 2:
        raise ValueError("n_terms must be >= 2")
    return math.sqrt(_alpha2_from_R(target_R, kappa, t2, n_terms))


def snr_of_R(target_R: float, kappa: complex, t2: float = 1.0, n_terms: int = 2) -> float:
    """Exact truncated-model SNR at a given R.

    For ``n_terms=2`` this coincides with 2 sqrt(2R) / (|k| (R + 1)); for
    larger N the coherent amplitude is re-solved from R, which makes the
    result depend on ``t2``.
    """
    _check_r_inputs(target_R, kappa, t2)
    x = _alpha2_from_R(target_R, kappa, t2, n_terms)
    k2 = abs(kappa) ** 2
    # CC_f = R * CC_s exactly at the solved amplitude
    return x * t2**2 / (k2 * t2**4 / 4.0 * (1.0 + target_R))


def snr_of_R_leading(target_R, kappa: complex):
    """Leading-order closed form 2 sqrt(2R) / (|k| (R + 1)); vectorised over R."""
    r = np.asarray(target_R, dtype=float)
    return 2.0 * np.sqrt(2.0 * r) / (abs(kappa) * (r + 1.0))


def optimal_R(kappa: complex, t2: float = 1.0, n_terms: int = 2) -> tuple[float, float]:
    """Maximise snr_of_R over log10 R in [-4, 2].

    A coarse grid locates the peak before a bounded Brent refinement, so a
    non-unimodal curve cannot trap the search at an edge.

    Returns:
        (R_opt, snr_max) with snr_max linear.
    """
    lo, hi = LOG_R_BOUNDS

    def neg(u):
        return -snr_of_R(10.0**u, kappa, t2, n_terms)

    grid = np.linspace(lo, hi, 241)
    vals = [neg(u) for u in grid]
    i = int(np.argmin(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(neg, bounds=(a, b), method="bounded", options={"xatol": 1e-11, "maxiter": 500})
    r_opt = 10.0**res.x
    return r_opt, snr_of_R(r_opt, kappa, t2, n_terms)


def snr_from_ccg(cc_g: float, t1: float, t2: float) -> float:
    """Cube-root law SNR = (16 t1^2 t2^4 / CC_g)^(1/3), valid at R = 1.

    ``cc_g`` must be in the same per-pulse units as :func:`cc_genuine` with
    ``scale=1``.
    """
    if not cc_g > 0:
        raise ValueError(f"cc_g must be positive, got {cc_g}")
    for name, t in (("t1", t1), ("t2", t2)):
        if not 0 < t <= 1:
            raise ValueError(f"{name} must lie in (0, 1], got {t}")
    return (16.0 * t1**2 * t2**4 / cc_g) ** (1.0 / 3.0)
