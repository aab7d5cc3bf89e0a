"""Average teleportation fidelity under photon-number noise.

A genuine coincidence teleports perfectly (F_g = 1); both parasitic kinds
yield F = 1/2.  The average is weighted by the event probabilities
P = CC / (4 f); the factor 4 f cancels and only matters for bookkeeping.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from rtnoise.datasets import load_dataset
from rtnoise.errors import UndefinedFidelityError
from rtnoise.model import CoincidenceRates

__all__ = [
    "F_GENUINE",
    "F_PARASITIC",
    "CLASSICAL_LIMIT",
    "SECURE_THRESHOLD",
    "EventProbabilities",
    "FidelityEstimate",
    "event_probabilities",
    "average_fidelity",
    "fidelity_from_snr",
    "thresholds",
    "beats_classical",
    "is_secure",
    "counts_for_snr",
    "table_counts",
    "mc_uncertainty",
]

F_GENUINE = 1.0
F_PARASITIC = 0.5
CLASSICAL_LIMIT = 2.0 / 3.0
SECURE_THRESHOLD = 5.0 / 6.0

# R at which the fidelity data were taken
TABLE_RATIO_R = 0.35


@dataclass(frozen=True)
class EventProbabilities:
    p_g: float
    p_s: float
    p_f: float

    def __post_init__(self):
        if min(self.p_g, self.p_s, self.p_f) < 0:
            raise ValueError("event probabilities must be non-negative")

    @property
    def total(self) -> float:
        return self.p_g + self.p_s + self.p_f


@dataclass(frozen=True)
class FidelityEstimate:
    """Point fidelity plus a Monte-Carlo interval.

    ``mean`` is the fidelity at the expected counts; ``mc_mean`` is the average
    over trials.
    """

    mean: float
    interval_low: float
    interval_high: float
    snr_db: float
    n_trials: int
    seed: int
    mc_mean: float = math.nan
    interval: str = "envelope"
    dropped_trials: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    def csv_row(self) -> str:
        return f"{self.snr_db!r},{self.mean!r},{self.interval_low!r},{self.interval_high!r}"


def event_probabilities(rates: CoincidenceRates, rep_rate_hz: float) -> EventProbabilities:
    """Per-pulse event probabilities from rates in counts per second."""
    if not rep_rate_hz > 0:
        raise ValueError(f"repetition rate must be positive, got {rep_rate_hz}")
    d = 4.0 * rep_rate_hz
    return EventProbabilities(rates.cc_g / d, rates.cc_s / d, rates.cc_f / d)


def average_fidelity(p: EventProbabilities) -> float:
    total = p.total
    if total <= 0:
        raise UndefinedFidelityError("no coincidence events")
    return (F_GENUINE * p.p_g + F_PARASITIC * (p.p_s + p.p_f)) / total


def fidelity_from_snr(snr):
    """(SNR + 1/2) / (SNR + 1) for linear SNR; vectorised."""
    s = np.asarray(snr, dtype=float)
    out = (s + 0.5) / (s + 1.0)
    return float(out) if out.ndim == 0 else out


def thresholds() -> tuple[float, float]:
    """(classical measure-and-prepare limit, anti-cloning security threshold)."""
    return CLASSICAL_LIMIT, SECURE_THRESHOLD


def beats_classical(f: float) -> bool:
    return f > CLASSICAL_LIMIT


def is_secure(f: float) -> bool:
    return f > SECURE_THRESHOLD


def counts_for_snr(cc_g: float, snr_linear: float, ratio_R: float = TABLE_RATIO_R) -> CoincidenceRates:
    """Split the noise implied by ``snr_linear`` into CC_s and CC_f at ratio R."""
    noise = cc_g / snr_linear
    return CoincidenceRates(cc_g, noise / (1.0 + ratio_R), noise * ratio_R / (1.0 + ratio_R))


def table_counts(ratio_R: float = TABLE_RATIO_R) -> list[tuple[float, CoincidenceRates]]:
    """Expected counts behind each fidelity-table row.

    The genuine-count total is the number whose Poisson error reproduces the
    quoted relative uncertainty of CC_g, N = (CC_g / sigma)^2; the per-100 s
    rate alone is far too small for the quoted errors.  SNR comes from the
    fidelity table itself.

    Returns:
        list of (snr_db, expected counts) in table order.
    """
    ccg = load_dataset("snr_vs_ccg")
    fid = load_dataset("fidelity_vs_snr")
    out = []
    for c, f in zip(ccg.points, fid.points):
        n_g = (c.x / c.x_err) ** 2
        out.append((f.x, counts_for_snr(n_g, 10.0 ** (f.x / 10.0), ratio_R)))
    return out


def mc_uncertainty(
    expected_counts: CoincidenceRates,
    n_trials: int = 10_000,
    seed: int = 0,
    interval: str = "envelope",
    coverage: float = 0.68,
) -> FidelityEstimate:
    """Poisson Monte-Carlo interval for the average fidelity.

    Each trial draws the three coincidence counts independently around their
    expected values and recomputes the fidelity.  Trials with no events at all
    have no defined fidelity and are dropped.

    Args:
        expected_counts: expected CC_g, CC_s, CC_f counts per acquisition.
        n_trials: number of trials, at least 100.
        seed: RNG seed.
        interval: ``"envelope"`` (min/max over trials) or ``"central"``.
        coverage: probability mass of the central interval.
    """
    if n_trials < 100:
        raise ValueError(f"n_trials must be >= 100, got {n_trials}")
    if interval not in ("envelope", "central"):
        raise ValueError(f"unknown interval kind {interval!r}")
    lam = np.array([expected_counts.cc_g, expected_counts.cc_s, expected_counts.cc_f])
    noise = lam[1] + lam[2]
    point = average_fidelity(EventProbabilities(*lam))
    snr_db = 10.0 * math.log10(lam[0] / noise) if noise > 0 and lam[0] > 0 else (math.inf if noise == 0 else -math.inf)

    rng = np.random.default_rng(seed)
    draws = rng.poisson(lam, size=(n_trials, 3)).astype(float)
    total = draws.sum(axis=1)
    ok = total > 0
    f = (draws[ok, 0] + F_PARASITIC * (draws[ok, 1] + draws[ok, 2])) / total[ok]
    if f.size == 0:
        raise UndefinedFidelityError("every trial drew zero events")
    if interval == "envelope":
        lo, hi = float(f.min()), float(f.max())
    else:
        tail = (1.0 - coverage) / 2.0
        lo, hi = (float(v) for v in np.quantile(f, [tail, 1.0 - tail]))
    return FidelityEstimate(
        mean=point,
        interval_low=lo,
        interval_high=hi,
        snr_db=snr_db,
        n_trials=n_trials,
        seed=seed,
        mc_mean=float(f.mean()),
        interval=interval,
        dropped_trials=int((~ok).sum()),
    )
