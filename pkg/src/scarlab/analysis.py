"""Lifetime fits, tau-sigma regression, scaling exponents, shot averaging."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit
from scipy.signal import argrelextrema


class FitError(RuntimeError):
    """Lifetime fit failed to converge or lacked data."""


def _damped_cosine(t, a, omega, phase, inv_tau):
    return a * np.cos(omega * t + phase) * np.exp(-t * inv_tau)


@dataclass
class LifetimeFit:
    """Damped-cosine fit ``A cos(Omega t + phi) exp(-t/tau)``.

    ``tau = inf`` flags an undamped series (envelope decay below 1e-6
    over the window).  ``tau_window_spread`` reports the relative change
    of ``tau`` when the fit window is perturbed by +-20 percent.
    """

    amplitude: float
    omega: float
    phase: float
    tau: float
    tau_err: float
    window: tuple
    residual_rms: float
    n_periods: float
    tau_window_spread: float = 0.0
    converged: bool = True


def _envelope_extrema(times, values):
    """Times and |values| of the oscillation extrema of a series."""
    y = np.asarray(values, dtype=float)
    idx = np.concatenate([
        argrelextrema(y, np.greater_equal, order=2)[0],
        argrelextrema(y, np.less_equal, order=2)[0],
    ])
    idx = np.unique(idx)
    idx = idx[(idx > 0) & (idx < len(y) - 1)]
    return times[idx], np.abs(y[idx]), idx


def first_envelope_minimum(times, values) -> float | None:
    """Time of the first local minimum of the oscillation envelope."""
    t_ext, env, _ = _envelope_extrema(np.asarray(times), values)
    for k in range(1, len(env) - 1):
        if env[k] < env[k - 1] and env[k] <= env[k + 1]:
            return float(t_ext[k])
    return None


def fit_lifetime(times, values, cutoff_rule: str = "first_envelope_minimum",
                 t_max: float | None = None, restarts: int = 8,
                 seed: int = 0) -> LifetimeFit:
    """Nonlinear least squares of a damped cosine over ``[0, cutoff]``.

    ``cutoff_rule`` is ``"first_envelope_minimum"`` (fit up to the first
    minimum of the oscillation amplitude; falls back to the full series
    when none exists) or ``"fixed_time"`` (requires ``t_max``).  Initial
    guesses come from the dominant Fourier peak, the first extremum and a
    log-envelope slope, making convergence deterministic; failed fits are
    restarted from perturbed guesses before raising ``FitError``.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if cutoff_rule == "fixed_time":
        if t_max is None:
            raise ValueError("fixed_time cutoff needs t_max")
        cutoff = float(t_max)
    elif cutoff_rule == "first_envelope_minimum":
        cutoff = first_envelope_minimum(times, values)
        if cutoff is None:
            cutoff = float(times[-1])
    else:
        raise ValueError(f"unknown cutoff rule {cutoff_rule!r}")

    def window_fit(t_hi, estimate_err=False):
        sel = times <= t_hi
        t = times[sel]
        y = values[sel]
        if len(t) < 16:
            raise FitError("fewer than 16 samples before the cutoff")
        # dominant frequency from the discrete spectrum (DC excluded)
        dt = np.median(np.diff(t))
        freqs = np.fft.rfftfreq(len(t), dt)
        spec = np.abs(np.fft.rfft(y - y.mean()))
        omega0 = 2 * math.pi * freqs[1 + int(np.argmax(spec[1:]))]
        if omega0 <= 0:
            omega0 = 2 * math.pi / max(t[-1], 1.0)
        n_periods = t[-1] * omega0 / (2 * math.pi)
        if n_periods < 5:
            raise FitError(f"series spans {n_periods:.1f} oscillation periods; need >= 5")

        t_ext, env, _ = _envelope_extrema(t, y)
        a0 = env[0] if len(env) else np.abs(y).max()
        # undamped sentinel: envelope decays by less than 1e-6 over the window
        if len(env) >= 2 and env[0] > 0 and (env[0] - env.min()) / env[0] < 1e-6:
            return LifetimeFit(amplitude=a0, omega=omega0, phase=0.0, tau=math.inf,
                               tau_err=0.0, window=(0.0, float(t_hi)), residual_rms=0.0,
                               n_periods=n_periods), None
        # log-envelope slope between the first few extrema
        inv_tau0 = 0.0
        if len(env) >= 3 and np.all(env[:3] > 0):
            k = min(len(env), 6)
            slope = np.polyfit(t_ext[:k], np.log(env[:k]), 1)[0]
            inv_tau0 = max(-slope, 1e-9)
        rng = np.random.default_rng(seed)
        p0 = np.array([y[0] if abs(y[0]) > 1e-3 * a0 else a0, omega0, 0.0, inv_tau0])
        last_exc = None
        for trial in range(restarts):
            try:
                popt, pcov = curve_fit(_damped_cosine, t, y, p0=p0, maxfev=20000)
                resid = y - _damped_cosine(t, *popt)
                rms = float(np.sqrt(np.mean(resid**2)))
                inv_tau = popt[3]
                if inv_tau <= 0:
                    tau, tau_err = math.inf, 0.0
                else:
                    tau = 1.0 / inv_tau
                    var = pcov[3, 3] if np.isfinite(pcov[3, 3]) else 0.0
                    tau_err = math.sqrt(max(var, 0.0)) / inv_tau**2 if estimate_err else 0.0
                return LifetimeFit(amplitude=float(popt[0]), omega=float(abs(popt[1])),
                                   phase=float(popt[2]), tau=float(tau), tau_err=float(tau_err),
                                   window=(0.0, float(t_hi)), residual_rms=rms,
                                   n_periods=n_periods), None
            except RuntimeError as exc:
                last_exc = exc
                p0 = p0 * rng.normal(1.0, 0.1, 4) + rng.normal(0, 1e-3, 4)
        raise FitError(f"lifetime fit did not converge after {restarts} restarts: {last_exc}")

    fit, _ = window_fit(cutoff, estimate_err=True)
    # window sensitivity: +-20 percent cutoff perturbation
    spread = 0.0
    if math.isfinite(fit.tau):
        taus = [fit.tau]
        for factor in (0.8, 1.2):
            try:
                alt, _ = window_fit(min(cutoff * factor, times[-1]))
                if math.isfinite(alt.tau):
                    taus.append(alt.tau)
            except FitError:
                pass
        spread = (max(taus) - min(taus)) / fit.tau
    fit.tau_window_spread = float(spread)
    return fit


def regress_tau_sigma(points) -> tuple[float, float, float]:
    """Ordinary least squares of ``tau`` against ``1/sigma``.

    Returns ``(slope, intercept, pearson_r)``; raises on degenerate input
    (fewer than 4 points or constant sigma).
    """
    pts = np.asarray(points, dtype=float)
    if pts.shape[0] < 4:
        raise ValueError("need at least 4 (tau, sigma) points")
    tau = pts[:, 0]
    inv_sigma = 1.0 / pts[:, 1]
    if np.ptp(inv_sigma) == 0:
        raise ValueError("all sigma equal; regression is degenerate")
    slope, intercept = np.polyfit(inv_sigma, tau, 1)
    r = float(np.corrcoef(inv_sigma, tau)[0, 1])
    return float(slope), float(intercept), r


def perturbation_exponent(points) -> tuple[float, float]:
    """Log-log slope of ``1/tau`` against the perturbation strength.

    ``points`` are ``(delta_v, tau)`` pairs, all positive; returns the
    exponent and its standard error.
    """
    pts = np.asarray(points, dtype=float)
    if pts.shape[0] < 4:
        raise ValueError("need at least 4 (delta_v, tau) points")
    if np.any(pts <= 0):
        raise ValueError("delta_v and tau must be positive")
    x = np.log(pts[:, 0])
    y = np.log(1.0 / pts[:, 1])
    n = len(x)
    coeffs, cov = np.polyfit(x, y, 1, cov=True)
    return float(coeffs[0]), float(math.sqrt(cov[0, 0]))


def shot_average(series_list) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise mean and sample standard deviation over disorder shots.

    All series must share one time grid (enforced by shape).
    """
    arr = np.asarray(series_list, dtype=float)
    if arr.ndim != 2:
        raise ValueError("expected a list of equal-length series")
    mean = arr.mean(axis=0)
    spread = arr.std(axis=0, ddof=1) if arr.shape[0] > 1 else np.zeros_like(mean)
    return mean, spread
