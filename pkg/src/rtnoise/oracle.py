"""Brute-force truncated Fock-space simulation of the three-mode source.

Mode 1 is the idler (herald, detector D1), mode 2 the signal and mode 3 the
attenuated laser.  Modes 2 and 3 enter a 50:50 coupler displaced in time, so
each photon picks an output independently and there is no two-photon
interference.  Loss and routing are both diagonal in the number basis, which
lets the pipeline carry photon-number distributions instead of density
matrices once loss has been applied.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import comb
from scipy.stats import poisson

from rtnoise.errors import ModelDomainError
from rtnoise.model import SourceParams

__all__ = [
    "DEFAULT_CUTOFF",
    "SingleModeState",
    "TwoModeState",
    "JointPhotonDistribution",
    "ShutterConfig",
    "spdc_amplitudes",
    "coherent_amplitudes",
    "make_spdc_state",
    "make_coherent_state",
    "loss_matrix",
    "apply_loss",
    "routing_tensor",
    "route_noninterfering_splitter",
    "simulate_configuration",
    "threefold_coincidence_prob",
]

DEFAULT_CUTOFF = 4
NORM_TOL = 1e-9


def _check_norm(norm2: float) -> None:
    if norm2 > 1.0 + NORM_TOL:
        raise ValueError(f"state norm^2 {norm2} exceeds 1")


@dataclass(frozen=True, eq=False)
class SingleModeState:
    """Pure single-mode state truncated at ``cutoff`` photons."""

    amplitudes: np.ndarray
    leakage: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size < 2:
            raise ValueError("amplitudes must be a vector of length cutoff + 1 >= 2")
        _check_norm(float(np.sum(np.abs(amps) ** 2)))
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def cutoff(self) -> int:
        return self.amplitudes.size - 1

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True, eq=False)
class TwoModeState:
    """Pure two-mode state; ``amplitudes[n1, n2]``."""

    amplitudes: np.ndarray
    leakage: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 2 or amps.shape[0] != amps.shape[1] or amps.shape[0] < 3:
            raise ValueError("amplitudes must be a square matrix with cutoff >= 2")
        _check_norm(float(np.sum(np.abs(amps) ** 2)))
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def cutoff(self) -> int:
        return self.amplitudes.shape[0] - 1

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class ShutterConfig:
    s2_open: bool = True
    s3_open: bool = True


@dataclass(frozen=True, eq=False)
class JointPhotonDistribution:
    """Photon-count probabilities at (D1, D2, D3).

    The idler axis runs over 0..cutoff; the two coupler outputs each run over
    0..2*cutoff because both inputs can route all their photons to one side.
    """

    probs: np.ndarray
    cutoff: int
    leakage: float = 0.0
    shutters: ShutterConfig = field(default_factory=ShutterConfig)

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 3:
            raise ValueError("probs must be a rank-3 tensor")
        if np.any(probs < -1e-15):
            raise ValueError("negative probability")
        total = probs.sum()
        if total > 1.0 + NORM_TOL or total < 1.0 - self.leakage - NORM_TOL:
            raise ValueError(f"total probability {total} outside [1 - leakage, 1]")
        probs = np.clip(probs, 0.0, None)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    def to_json(self) -> str:
        return json.dumps({"cutoff": self.cutoff, "leakage": self.leakage, "probs": self.probs.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "JointPhotonDistribution":
        d = json.loads(text)
        return cls(np.array(d["probs"], dtype=float), int(d["cutoff"]), float(d.get("leakage", 0.0)))


def _check_cutoff(cutoff: int, minimum: int) -> None:
    if int(cutoff) != cutoff or cutoff < minimum:
        raise ValueError(f"cutoff must be an integer >= {minimum}, got {cutoff}")


def spdc_amplitudes(kappa: complex, cutoff: int = DEFAULT_CUTOFF) -> np.ndarray:
    """Unnormalised pair amplitudes kappa^n / n! for n = 0..cutoff."""
    return np.array([kappa**n / math.factorial(n) for n in range(cutoff + 1)], dtype=complex)


def coherent_amplitudes(alpha: complex, cutoff: int = DEFAULT_CUTOFF) -> np.ndarray:
    """Unnormalised coherent amplitudes alpha^n / sqrt(n!) for n = 0..cutoff."""
    return np.array([alpha**n / math.sqrt(math.factorial(n)) for n in range(cutoff + 1)], dtype=complex)


def make_spdc_state(kappa: complex, cutoff: int = DEFAULT_CUTOFF) -> TwoModeState:
    """Diagonal pair state with amplitude kappa^n / n! on |n, n>, normalised.

    The untruncated tail is summed explicitly to report the leakage, i.e. the
    fraction of the infinite-series norm dropped by the cutoff.
    """
    _check_cutoff(cutoff, 2)
    if abs(kappa) >= 1:
        raise ModelDomainError(f"|kappa| must be < 1 for the pair expansion, got {abs(kappa)}")
    diag = spdc_amplitudes(kappa, cutoff)
    kept = float(np.sum(np.abs(diag) ** 2))
    k2 = abs(kappa) ** 2
    tail, term = 0.0, abs(diag[-1]) ** 2
    for n in range(cutoff + 1, cutoff + 60):
        term *= k2 / n**2
        tail += term
        if term <= tail * 1e-17:
            break
    return TwoModeState(np.diag(diag) / math.sqrt(kept), tail / (kept + tail))


def make_coherent_state(alpha: complex, cutoff: int = DEFAULT_CUTOFF) -> SingleModeState:
    """Coherent state truncated at ``cutoff`` and renormalised."""
    _check_cutoff(cutoff, 1)
    amps = coherent_amplitudes(alpha, cutoff)
    leakage = float(poisson.sf(cutoff, abs(alpha) ** 2))
    return SingleModeState(amps / np.linalg.norm(amps), leakage)


def loss_matrix(t: float, cutoff: int) -> np.ndarray:
    """Binomial loss kernel L[m, n] = C(n, m) t^(2m) (1 - t^2)^(n - m)."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"transmissivity must lie in [0, 1], got {t}")
    eta = t * t
    n = np.arange(cutoff + 1)[None, :]
    m = np.arange(cutoff + 1)[:, None]
    # comb() is zero above the diagonal; clipping keeps the power finite there
    return comb(n, m) * eta**m * (1.0 - eta) ** np.clip(n - m, 0, None)


def apply_loss(state, t: float, axis: int = 0) -> np.ndarray:
    """Pass one mode through a beam splitter of amplitude transmissivity ``t``.

    Args:
        state: a :class:`SingleModeState`, :class:`TwoModeState` or an array of
            photon-number probabilities.
        t: amplitude transmissivity in [0, 1].
        axis: which mode of a multi-mode distribution is attenuated.

    Returns:
        Photon-number probabilities of the same shape.
    """
    probs = state.probabilities if isinstance(state, (SingleModeState, TwoModeState)) else np.asarray(state, float)
    kern = loss_matrix(t, probs.shape[axis] - 1)
    out = np.tensordot(kern, np.moveaxis(probs, axis, 0), axes=(1, 0))
    return np.moveaxis(out, 0, axis)


def routing_tensor(c2: int, c3: int) -> np.ndarray:
    """T[n2, n3, k2, k3]: probability that n2 + n3 distinguishable photons
    land as (k2, k3) on the two coupler outputs."""
    total = c2 + c3
    out = np.zeros((c2 + 1, c3 + 1, total + 1, total + 1))
    for n2 in range(c2 + 1):
        b2 = comb(n2, np.arange(n2 + 1)) / 2.0**n2
        for n3 in range(c3 + 1):
            b3 = comb(n3, np.arange(n3 + 1)) / 2.0**n3
            conv = np.convolve(b2, b3)
            for k2, pk in enumerate(conv):
                out[n2, n3, k2, n2 + n3 - k2] = pk
    return out


def route_noninterfering_splitter(dist2, dist3) -> np.ndarray:
    """Joint output distribution for independent inputs on a 50:50 coupler."""
    p2 = np.asarray(dist2, dtype=float)
    p3 = np.asarray(dist3, dtype=float)
    tens = routing_tensor(p2.size - 1, p3.size - 1)
    return np.einsum("b,c,bcxy->xy", p2, p3, tens)


def simulate_configuration(params: SourceParams, shutters: ShutterConfig = ShutterConfig()) -> JointPhotonDistribution:
    """Full pipeline for one shutter setting.

    The coherent amplitude already includes every loss, so only the two SPDC
    modes are attenuated.  A closed shutter replaces that mode by vacuum.
    """
    cutoff = params.cutoff
    spdc = make_spdc_state(params.kappa, cutoff)
    coh = make_coherent_state(params.alpha, cutoff)

    p12 = apply_loss(spdc, params.t1, axis=0)
    p12 = apply_loss(p12, params.t2, axis=1)
    if not shutters.s2_open:
        blocked = np.zeros_like(p12)
        blocked[:, 0] = p12.sum(axis=1)
        p12 = blocked
    p3 = coh.probabilities
    if not shutters.s3_open:
        p3 = np.zeros_like(p3)
        p3[0] = 1.0

    joint = np.einsum("ab,c,bcxy->axy", p12, p3, routing_tensor(cutoff, cutoff))
    leakage = 1.0 - (1.0 - spdc.leakage) * (1.0 - coh.leakage)
    return JointPhotonDistribution(joint, cutoff, leakage, shutters)


def threefold_coincidence_prob(dist) -> float:
    """Probability that all three threshold detectors click."""
    probs = dist.probs if isinstance(dist, JointPhotonDistribution) else np.asarray(dist, dtype=float)
    return float(probs[1:, 1:, 1:].sum())
