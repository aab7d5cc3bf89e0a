"""Weighted fits of the noise model to the embedded measurement tables.

SNR fits run in dB, rate fits in log space.  Residuals are always
``model - data`` in the fit space, so a positive residual means the model
overestimates.  x-errors are ignored unless ``use_x_errors`` is requested, in
which case they are propagated through the model slope (effective variance).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import least_squares

from rtnoise import model
from rtnoise.datasets import Dataset
from rtnoise.fidelity import fidelity_from_snr

__all__ = [
    "FitResult",
    "chi2",
    "fit_snr_vs_r",
    "fit_snr_vs_ccg",
    "fit_ccg_vs_pump",
    "fit_ccg_vs_attenuation",
    "compare_fidelity",
]

SNR_VS_R_ORDERS = (2, 3, 4, 5)
T2_BOUNDS = (1e-3, 1.0)
PUMP_EXPONENT = 1.5  # |k|^2 ~ P and, at held R, |a|^2 ~ sqrt(P)
ATTENUATION_EXPONENT = {"idler": -1.0, "signal": -2.0}


@dataclass
class FitResult:
    """Outcome of one fit.

    ``covariance`` is the inverse weighted normal matrix at the optimum; for
    free-exponent rate fits it is rescaled by the reduced chi2 so the errors
    reflect the residual scatter.
    """

    model: str
    params: dict[str, float]
    param_errors: dict[str, float]
    covariance: np.ndarray
    residuals: np.ndarray
    y_err: np.ndarray
    chi2: float
    reduced_chi2: float
    n_expansion: int | None
    converged: bool
    message: str = ""
    _predict: Callable | None = field(default=None, repr=False, compare=False)

    @property
    def dof(self) -> int:
        return self.residuals.size - len(self.params)

    @property
    def normalized_residuals(self) -> np.ndarray:
        return self.residuals / self.y_err

    def predict(self, x):
        """Model value in data units (dB for SNR, counts for rates)."""
        if self._predict is None:
            raise RuntimeError("fit carries no model")
        return self._predict(np.asarray(x, dtype=float))

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "params": self.params,
            "param_errors": self.param_errors,
            "covariance": np.asarray(self.covariance).tolist(),
            "residuals": self.residuals.tolist(),
            "chi2": self.chi2,
            "reduced_chi2": self.reduced_chi2,
            "n_expansion": self.n_expansion,
            "converged": self.converged,
            "message": self.message,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def chi2(residuals, y_errs) -> float:
    r = np.asarray(residuals, dtype=float)
    s = np.asarray(y_errs, dtype=float)
    if r.shape != s.shape:
        raise ValueError("residuals and errors differ in length")
    if np.any(s <= 0):
        raise ValueError("errors must be positive")
    return float(np.sum((r / s) ** 2))


def _reduced(c2: float, n: int, k: int) -> float:
    return c2 / (n - k) if n > k else math.nan


def _require_errors(data: Dataset) -> np.ndarray:
    err = data.y_err
    if np.any(err <= 0):
        raise ValueError(f"{data.name}: every point needs a positive y error")
    return err


# ---------------------------------------------------------------- SNR vs R


def _snr_r_curve(r: np.ndarray, kappa: float, t2: float, n_terms: int) -> np.ndarray:
    return np.array([10.0 * math.log10(model.snr_of_R(float(ri), kappa, t2, n_terms)) for ri in np.atleast_1d(r)])


def fit_snr_vs_r(data: Dataset, n_terms: int = 3) -> FitResult:
    """Fit SNR[dB](R) with the truncated model of order ``n_terms``.

    ``kappa_eff`` sets the overall level.  For N >= 3 the coupling ``t2_eff``
    changes the curve shape at large R and is kept inside (0, 1] like any
    amplitude transmissivity; for N = 2 the shape is fixed and only
    ``kappa_eff`` is free.
    """
    if n_terms not in SNR_VS_R_ORDERS:
        raise ValueError(f"n_terms must be one of {SNR_VS_R_ORDERS}")
    r, y = data.x, data.y
    err = _require_errors(data)
    if np.any(r <= 0):
        raise ValueError("R values must be positive")

    # for N = 2 the offset solves in closed form; it also seeds larger N
    shape2 = 10.0 * np.log10(2.0 * np.sqrt(2.0 * r) / (r + 1.0))
    w = err**-2
    log_k0 = -np.sum(w * (y - shape2)) / np.sum(w) * math.log(10.0) / 10.0

    if n_terms == 2:
        def resid(p):
            return (_snr_r_curve(r, math.exp(p[0]), 1.0, 2) - y) / err

        res = least_squares(resid, [log_k0], xtol=1e-14, ftol=1e-14, gtol=1e-14)
        names = ["kappa_eff"]
    else:
        def resid(p):
            return (_snr_r_curve(r, math.exp(p[0]), p[1], n_terms) - y) / err

        best = None
        for t2_start in (0.1, 0.3, 1.0):
            cand = least_squares(
                resid,
                [log_k0, t2_start],
                bounds=([-np.inf, T2_BOUNDS[0]], [np.inf, T2_BOUNDS[1]]),
                xtol=1e-14,
                ftol=1e-14,
                gtol=1e-14,
            )
            if best is None or cand.cost < best.cost:
                best = cand
        res = best
        names = ["kappa_eff", "t2_eff"]

    kappa = math.exp(res.x[0])
    values = [kappa] + [float(v) for v in res.x[1:]]
    cov = _covariance(res.jac)
    # first parameter was fitted in log space
    jac_scale = np.diag([kappa] + [1.0] * (len(values) - 1))
    cov = jac_scale @ cov @ jac_scale
    t2 = values[1] if n_terms > 2 else 1.0
    resid_raw = _snr_r_curve(r, kappa, t2, n_terms) - y
    c2 = chi2(resid_raw, err)
    return FitResult(
        model=f"snr_vs_r(N={n_terms})",
        params=dict(zip(names, values)),
        param_errors=dict(zip(names, np.sqrt(np.diag(cov)).tolist())),
        covariance=cov,
        residuals=resid_raw,
        y_err=err,
        chi2=c2,
        reduced_chi2=_reduced(c2, r.size, len(values)),
        n_expansion=n_terms,
        converged=bool(res.success and np.isfinite(c2)),
        message=str(res.message),
        _predict=lambda x: _snr_r_curve(x, kappa, t2, n_terms),
    )


def _covariance(jac: np.ndarray) -> np.ndarray:
    jtj = jac.T @ jac
    try:
        return np.linalg.inv(jtj)
    except np.linalg.LinAlgError:
        return np.full(jtj.shape, np.nan)


# ------------------------------------------------------- log-linear fits


def _loglinear(
    x: np.ndarray,
    y: np.ndarray,
    y_err: np.ndarray,
    x_err: np.ndarray,
    slope: float | None,
    use_x_errors: bool,
) -> tuple[float, float, np.ndarray, np.ndarray]:
    """Weighted fit of ln y = c + b ln x; ``slope=None`` leaves b free.

    With x-errors the weights depend on b, so the fit is iterated to a fixed
    point.  Returns (c, b, covariance, sigma of ln y).
    """
    lx, ly = np.log(x), np.log(y)
    sig_y = y_err / y
    b = 0.0 if slope is None else slope
    for _ in range(100 if use_x_errors else 1):
        sig = np.hypot(sig_y, b * x_err / x) if use_x_errors else sig_y
        w = sig**-2
        if slope is None:
            design = np.column_stack([np.ones_like(lx), lx])
            normal = design.T @ (design * w[:, None])
            c, new_b = np.linalg.solve(normal, design.T @ (w * ly))
            cov = np.linalg.inv(normal)
        else:
            c = float(np.sum(w * (ly - slope * lx)) / np.sum(w))
            new_b = slope
            cov = np.array([[1.0 / np.sum(w)]])
        converged = abs(new_b - b) < 1e-13
        b = float(new_b)
        if converged:
            break
    return float(c), b, cov, sig


def _rate_fit(
    data: Dataset,
    name: str,
    exponent: float | None,
    use_x_errors: bool,
    param_name: str,
) -> FitResult:
    x, y = data.x, data.y
    y_err = _require_errors(data)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError(f"{data.name}: log-space fit needs positive x and y")
    c, b, cov, sig = _loglinear(x, y, y_err, data.x_err, exponent, use_x_errors)
    resid = (c + b * np.log(x)) - np.log(y)
    c2 = chi2(resid, sig)
    free = exponent is None
    k = 2 if free else 1
    red = _reduced(c2, x.size, k)
    if free and np.isfinite(red):
        cov = cov * red
    amp = math.exp(c)
    errs = np.sqrt(np.diag(cov))
    params = {param_name: amp}
    perrs = {param_name: amp * float(errs[0])}
    if free:
        params["exponent"] = float(b)
        perrs["exponent"] = float(errs[1])
    return FitResult(
        model=name,
        params=params,
        param_errors=perrs,
        covariance=cov,
        residuals=resid,
        y_err=sig,
        chi2=c2,
        reduced_chi2=red,
        n_expansion=None,
        converged=bool(np.isfinite(c2)),
        _predict=lambda xx: amp * xx**b,
    )


def fit_snr_vs_ccg(data: Dataset) -> FitResult:
    """SNR[dB] = (10/3) log10(C / CC_g) with only C free.

    The log-log slope is fixed at -1/3 by the cube-root law, so this is a
    weighted mean of the per-point offsets.
    """
    cc, y = data.x, data.y
    err = _require_errors(data)
    if np.any(cc <= 0):
        raise ValueError("CC_g values must be positive")
    per_point = 0.3 * y + np.log10(cc)  # log10 C implied by each point
    w = err**-2
    log_c = float(np.sum(w * per_point) / np.sum(w))
    var = 0.09 / np.sum(w)

    def curve(x):
        return (10.0 / 3.0) * (log_c - np.log10(x))

    resid = curve(cc) - y
    c2 = chi2(resid, err)
    const = 10.0**log_c
    return FitResult(
        model="snr_vs_ccg",
        params={"C": const, "log10_C": log_c},
        param_errors={"C": const * math.log(10.0) * math.sqrt(var), "log10_C": math.sqrt(var)},
        covariance=np.array([[var]]),
        residuals=resid,
        y_err=err,
        chi2=c2,
        reduced_chi2=_reduced(c2, cc.size, 1),
        n_expansion=None,
        converged=bool(np.isfinite(c2)),
        _predict=curve,
    )


def fit_ccg_vs_pump(
    data: Dataset,
    free_exponent: bool = False,
    exponent: float = PUMP_EXPONENT,
    use_x_errors: bool = False,
) -> FitResult:
    """CC_g = c * P_p^b in log space; b is 3/2 unless ``free_exponent``."""
    return _rate_fit(data, "ccg_vs_pump", None if free_exponent else exponent, use_x_errors, "c")


def fit_ccg_vs_attenuation(
    data: Dataset,
    mode: str = "idler",
    free_exponent: bool = False,
    use_x_errors: bool = False,
) -> FitResult:
    """CC_g = c / A (idler) or c / A^2 (signal); exponent optionally free."""
    if mode not in ATTENUATION_EXPONENT:
        raise ValueError(f"mode must be 'idler' or 'signal', got {mode!r}")
    if np.any(data.x < 1):
        raise ValueError("attenuation factors must be >= 1")
    exponent = None if free_exponent else ATTENUATION_EXPONENT[mode]
    return _rate_fit(data, f"ccg_vs_attenuation({mode})", exponent, use_x_errors, "c")


def compare_fidelity(data: Dataset) -> FitResult:
    """Parameter-free comparison of F = (SNR + 1/2)/(SNR + 1) with a fidelity table."""
    err = _require_errors(data)

    def curve(x_db):
        return fidelity_from_snr(10.0 ** (np.asarray(x_db) / 10.0))

    resid = curve(data.x) - data.y
    c2 = chi2(resid, err)
    return FitResult(
        model="fidelity_vs_snr",
        params={},
        param_errors={},
        covariance=np.zeros((0, 0)),
        residuals=resid,
        y_err=err,
        chi2=c2,
        reduced_chi2=_reduced(c2, len(data), 0),
        n_expansion=None,
        converged=True,
        _predict=curve,
    )
