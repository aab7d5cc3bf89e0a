"""Three-step shutter measurement and attenuation-factor experiments.

Step (i) both shutters open gives CC_a, step (ii) with S3 closed gives CC_s,
step (iii) with S2 closed and S3 open gives CC_f; CC_g = CC_a - CC_s - CC_f.
No dark counts are modeled, so blocked configurations without real photons
contribute exactly zero.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from rtnoise import model
from rtnoise.model import SourceParams
from rtnoise.oracle import ShutterConfig, simulate_configuration, threefold_coincidence_prob

__all__ = [
    "DEFAULT_REP_RATE_HZ",
    "DEFAULT_DURATION_S",
    "Engine",
    "ThreeStepResult",
    "AttenuationSetting",
    "run_three_step",
    "apply_attenuation",
    "counts_from_probability",
]

DEFAULT_REP_RATE_HZ = 80e6  # 12.5 ns pulse period
DEFAULT_DURATION_S = 100.0

OPEN = ShutterConfig(s2_open=True, s3_open=True)
S3_CLOSED = ShutterConfig(s2_open=True, s3_open=False)
S2_CLOSED = ShutterConfig(s2_open=False, s3_open=True)


class Engine(str, Enum):
    ANALYTIC = "analytic"
    ORACLE = "oracle"


@dataclass(frozen=True)
class ThreeStepResult:
    """Outcome of one three-step acquisition.

    In exact mode the rates are per-pulse probabilities (times ``scale`` for
    the analytic engine).  In sampled mode they are Poisson counts collected
    over ``duration_s`` per step, and ``cc_g`` may come out negative.
    """

    cc_a: float
    cc_s: float
    cc_f: float
    cc_g: float
    engine: Engine
    duration_s: float = DEFAULT_DURATION_S
    laser_rep_rate_hz: float = DEFAULT_REP_RATE_HZ
    sampled: bool = False
    seed: int | None = None

    @property
    def negative_genuine(self) -> bool:
        return self.cc_g < 0

    @property
    def snr(self) -> float:
        noise = self.cc_s + self.cc_f
        return self.cc_g / noise if noise > 0 else math.nan

    @property
    def snr_db(self) -> float:
        s = self.snr
        return 10.0 * math.log10(s) if s > 0 else math.nan

    @property
    def ratio_R(self) -> float:
        return self.cc_f / self.cc_s if self.cc_s > 0 else math.nan

    def to_dict(self) -> dict:
        d = asdict(self)
        d["engine"] = self.engine.value
        d["snr_db"] = self.snr_db
        d["ratio_r"] = self.ratio_R
        d["negative_genuine"] = self.negative_genuine
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class AttenuationSetting:
    """Intensity attenuation factors; t_j^2 -> t_j^2 / a_j."""

    a1: float = 1.0
    a2: float = 1.0

    def __post_init__(self):
        if not (self.a1 >= 1.0 and self.a2 >= 1.0):
            raise ValueError(f"attenuation factors must be >= 1, got a1={self.a1}, a2={self.a2}")


def counts_from_probability(prob_per_pulse: float, rep_rate_hz: float, duration_s: float) -> float:
    if prob_per_pulse < 0 or rep_rate_hz < 0 or duration_s < 0:
        raise ValueError("inputs must be non-negative")
    return prob_per_pulse * rep_rate_hz * duration_s


def _exact_steps(p: SourceParams, engine: Engine) -> tuple[float, float, float]:
    if engine is Engine.ANALYTIC:
        rates = model.coincidence_rates(p)
        return rates.cc_a, rates.cc_s, rates.cc_f
    return tuple(threefold_coincidence_prob(simulate_configuration(p, cfg)) for cfg in (OPEN, S3_CLOSED, S2_CLOSED))


def run_three_step(
    p: SourceParams,
    engine: Engine | str = Engine.ANALYTIC,
    *,
    sample: bool = False,
    seed: int | None = None,
    rep_rate_hz: float = DEFAULT_REP_RATE_HZ,
    duration_s: float = DEFAULT_DURATION_S,
) -> ThreeStepResult:
    """Run the three shutter configurations and derive CC_g.

    Args:
        p: source parameters.
        engine: ``"analytic"`` for the closed-form rates or ``"oracle"`` for the
            truncated Fock simulation.
        sample: draw Poisson counts per step instead of returning probabilities.
            Requires ``seed``.
        seed: RNG seed for sampled mode.
        rep_rate_hz: laser repetition rate.
        duration_s: acquisition time of each step.
    """
    engine = Engine(engine)
    common = dict(engine=engine, duration_s=duration_s, laser_rep_rate_hz=rep_rate_hz)

    if engine is Engine.ANALYTIC and not sample:
        rates = model.coincidence_rates(p)
        return ThreeStepResult(rates.cc_a, rates.cc_s, rates.cc_f, rates.cc_g, **common)

    cc_a, cc_s, cc_f = _exact_steps(p, engine)
    if sample:
        if seed is None:
            raise ValueError("sampled mode needs an explicit seed")
        rng = np.random.default_rng(seed)
        lam = [counts_from_probability(x, rep_rate_hz, duration_s) for x in (cc_a, cc_s, cc_f)]
        cc_a, cc_s, cc_f = (float(c) for c in rng.poisson(lam))
        return ThreeStepResult(cc_a, cc_s, cc_f, cc_a - cc_s - cc_f, sampled=True, seed=seed, **common)
    return ThreeStepResult(cc_a, cc_s, cc_f, cc_a - cc_s - cc_f, **common)


def apply_attenuation(p: SourceParams, a: AttenuationSetting, hold_R: bool = False) -> SourceParams:
    """Divide the SPDC coupling intensities by (a1, a2).

    With ``hold_R`` the coherent amplitude is re-solved so that R is unchanged,
    mirroring the neutral-density readjustment done in the lab.  The phase of
    ``alpha`` is kept.
    """
    new = p.replace(t1=p.t1 / math.sqrt(a.a1), t2=p.t2 / math.sqrt(a.a2))
    if hold_R and p.abs_alpha > 0:
        r = model.ratio_R(p)
        mag = model.alpha_from_R(r, p.kappa, new.t2, p.n_terms)
        phase = p.alpha / p.abs_alpha
        new = new.replace(alpha=mag * phase)
    return new
