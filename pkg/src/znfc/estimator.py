"""scikit-learn style transformer around the propagation engine.

Rows of ``X`` are complex input envelopes sampled on a shared grid
(``t_start``, ``dt``); ``transform`` returns the transmitted envelopes.
"""

from __future__ import annotations

import warnings
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .engine import ResolutionWarning, default_dt, simulate
from .medium import SwitchEvent, Waveform, znfc_stack
from .metrics import detect_echo
from .nuclear import build_comb, get_isotope, optical_thickness, photoelectric_exponent


def _as_complex_2d(X) -> np.ndarray:
    # sklearn's check_array rejects complex input, so validate by hand
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] < 2:
        raise ValueError(f"expected shape (n_pulses, n_samples>=2), got {X.shape}")
    if not np.issubdtype(X.dtype, np.number):
        raise ValueError("X must be numeric")
    X = X.astype(complex)
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains NaN or inf")
    return X


class ZNFCMemory(TransformerMixin, BaseEstimator):
    """Nuclear frequency comb memory as a fixed linear filter.

    ``fit`` builds the comb and medium from the parameters (``X`` is only
    used to check the sample count); ``transform`` propagates each row.
    """

    def __init__(self, isotope: str = "Ta181", B: float = 0.023, L: float = 2.6,
                 broadening: float = 1.0, loss: bool = True,
                 switch_time: Optional[float] = None, switch_kind: str = "zeeman-flip",
                 t_start: float = 0.0, dt: Optional[float] = None,
                 slices: Optional[int] = None):
        self.isotope = isotope
        self.B = B
        self.L = L
        self.broadening = broadening
        self.loss = loss
        self.switch_time = switch_time
        self.switch_kind = switch_kind
        self.t_start = t_start
        self.dt = dt
        self.slices = slices

    def fit(self, X=None, y=None):
        iso = get_isotope(self.isotope)
        self.comb_ = build_comb(iso, self.B, broadening=self.broadening)
        xi = optical_thickness(iso, self.L)
        pe = photoelectric_exponent(iso, self.L) if self.loss else 0.0
        self.stack_ = znfc_stack(self.comb_, xi, pe, self.L)
        self.xi_ = xi
        self.T0_ = self.comb_.rephasing_time
        self.dt_ = self.dt if self.dt is not None else default_dt(self.stack_)
        self.switch_ = (None if self.switch_time is None
                        else SwitchEvent(self.switch_time, self.switch_kind))
        if X is not None:
            self.n_features_in_ = _as_complex_2d(X).shape[1]
        return self

    def _waveform(self, row) -> Waveform:
        return Waveform(self.t_start, self.dt_, row)

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "stack_")
        X = _as_complex_2d(X)
        n = getattr(self, "n_features_in_", None)
        if n is not None and X.shape[1] != n:
            raise ValueError(f"fitted on {n} samples per row, got {X.shape[1]}")
        out = np.empty_like(X)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ResolutionWarning)
            for k, row in enumerate(X):
                res = simulate(self._waveform(row), self.stack_, self.switch_, slices=self.slices)
                out[k] = res.output.samples
        return out

    def times(self, n_samples: int) -> np.ndarray:
        check_is_fitted(self, "stack_")
        return self.t_start + self.dt_ * np.arange(n_samples)

    def score(self, X, y=None) -> float:
        """Mean echo efficiency over the rows of ``X`` (rows peaked at tau = 0)."""
        X = _as_complex_2d(X)
        Y = self.transform(X)
        t_min = (self.switch_time if self.switch_time is not None else self.T0_ / 2)
        effs = []
        for a, b in zip(X, Y):
            rep = detect_echo(self._waveform(b), self._waveform(a), t_min, self.T0_)
            effs.append(rep.efficiency)
        return float(np.mean(effs))
