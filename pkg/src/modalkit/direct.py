"""Direct (density-free) univariate mode estimators.

Four classical window/spacing constructions: the fixed-width maximal-count
interval (Chernoff 1964), the shortest interval holding k observations
(Dalenius 1965, Venter 1967), the iterated shortest-half scheme
(Robertson & Cryer 1974; with p = 1/2 the half-sample mode of Bickel &
Fruehwirth 2006), and the spacing-weighted average of window midpoints
(Grenander 1965).  All work on the order statistics of a 1-d sample and
report the selected window plus method diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import Sample, order_statistics

__all__ = [
    "DirectConfig",
    "DirectEstimate",
    "chernoff_mode",
    "dalenius_venter_mode",
    "robertson_cryer_mode",
    "grenander_mode",
]


@dataclass(frozen=True)
class DirectConfig:
    """Canonical tuning parameters for the direct estimators."""

    chernoff_half_width: float = 1.0
    dv_count: int = 2
    rc_proportion: float = 0.5
    grenander_order: int = 1
    grenander_power: float = 2.0

    def __post_init__(self):
        if self.chernoff_half_width <= 0:
            raise ValueError("half-width must be positive")
        if self.dv_count < 2:
            raise ValueError("dv_count must be >= 2")
        if not 0.0 < self.rc_proportion < 1.0:
            raise ValueError("proportion must lie in (0, 1)")
        if self.grenander_order < 1:
            raise ValueError("spacing order must be >= 1")
        if self.grenander_power <= 0.0:
            raise ValueError("spacing power must be positive")


@dataclass(frozen=True)
class DirectEstimate:
    location: float
    method: str
    window: tuple
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "location": float(self.location),
            "window": [float(self.window[0]), float(self.window[1])],
            "diagnostics": {
                k: (v.tolist() if isinstance(v, np.ndarray) else v)
                for k, v in self.diagnostics.items()
            },
        }


def _sorted_1d(s: Sample) -> np.ndarray:
    return order_statistics(s)


def chernoff_mode(s: Sample, a: float) -> DirectEstimate:
    """Midpoint of the tightest data sub-range realizing the maximal count
    attainable by any interval of length 2a.

    The maximal count is reached by intervals whose left edge sits on an
    observation; among the data sub-ranges [X_(i), X_(i+m-1)] of that count
    with span <= 2a the shortest (leftmost on ties) is reported, which keeps
    the estimate deterministic and affine-equivariant.
    """
    if a <= 0:
        raise ValueError("half-width a must be positive")
    x = _sorted_1d(s)
    n = x.shape[0]
    width = 2.0 * a
    # count per left-anchored window via two pointers
    counts = np.empty(n, dtype=int)
    j = 0
    for i in range(n):
        if j < i:
            j = i
        while j + 1 < n and x[j + 1] - x[i] <= width:
            j += 1
        counts[i] = j - i + 1
    m = int(counts.max())
    spans = x[m - 1:] - x[: n - m + 1]
    ok = np.flatnonzero(spans <= width)
    i = int(ok[np.argmin(spans[ok])])  # argmin returns the leftmost tie
    lo, hi = float(x[i]), float(x[i + m - 1])
    return DirectEstimate(
        location=(lo + hi) / 2.0,
        method="chernoff",
        window=(lo, hi),
        diagnostics={"count": m, "span": hi - lo, "half_width": float(a)},
    )


def dalenius_venter_mode(s: Sample, k: int) -> DirectEstimate:
    """Midpoint of the shortest interval containing k observations
    (leftmost on exact span ties)."""
    x = _sorted_1d(s)
    n = x.shape[0]
    if not 2 <= k <= n:
        raise ValueError(f"k must lie in [2, {n}]")
    spans = x[k - 1:] - x[: n - k + 1]
    i = int(np.argmin(spans))
    lo, hi = float(x[i]), float(x[i + k - 1])
    return DirectEstimate(
        location=(lo + hi) / 2.0,
        method="dalenius-venter",
        window=(lo, hi),
        diagnostics={"count": int(k), "span": hi - lo},
    )


def robertson_cryer_mode(s: Sample, p: float = 0.5, tie: str = "left") -> DirectEstimate:
    """Iterated shortest-window scheme: repeatedly keep the shortest window
    holding at least ceil(m*p) of the current m points until at most two
    remain, then report the final midpoint.  ``tie`` picks the leftmost
    (canonical) or rightmost minimal-span window, the latter making the
    estimator mirror-symmetric under negation.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if tie not in ("left", "right"):
        raise ValueError("tie must be 'left' or 'right'")
    x = _sorted_1d(s)
    windows = [(float(x[0]), float(x[-1]))]
    iterations = 0
    while x.shape[0] > 2:
        m = x.shape[0]
        k = math.ceil(m * p)
        if k >= m:
            # ceil(m*p) = m cannot shrink the window; stop here
            break
        spans = x[k - 1:] - x[: m - k + 1]
        if tie == "left":
            i = int(np.argmin(spans))
        else:
            i = int(spans.shape[0] - 1 - np.argmin(spans[::-1]))
        x = x[i:i + k]
        windows.append((float(x[0]), float(x[-1])))
        iterations += 1
    lo, hi = float(x[0]), float(x[-1])
    return DirectEstimate(
        location=(lo + hi) / 2.0,
        method="robertson-cryer",
        window=(lo, hi),
        diagnostics={
            "iterations": iterations,
            "windows": windows,
            "final_count": int(x.shape[0]),
            "proportion": float(p),
            "tie": tie,
        },
    )


def grenander_mode(s: Sample, k: int, p: float) -> DirectEstimate:
    """Spacing-weighted average of the midpoints of windows holding k+1
    consecutive order statistics.

    With spacings D_i = X_(i+k) - X_(i), the estimate is
    sum(D_i^-p (X_(i+k)+X_(i))/2) / sum(D_i^-p); the normalizing powers of
    n cancel in the ratio but both raw sums are reported.  Zero spacings
    (tied observations) are excluded from both sums and flagged; if all
    observations coincide the common value is returned with a degenerate
    flag.
    """
    x = _sorted_1d(s)
    n = x.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"spacing order k must lie in [1, {n - 1}]")
    if p <= 0.0:
        raise ValueError("power p must be positive")
    warn = not (1.0 < p < k)

    d = x[k:] - x[:-k]
    mids = 0.5 * (x[k:] + x[:-k])
    nz = d > 0.0
    dropped = int((~nz).sum())
    if not nz.any():
        value = float(x[0])
        return DirectEstimate(
            location=value,
            method="grenander",
            window=(value, value),
            diagnostics={
                "degenerate": True,
                "dropped_zero_spacings": dropped,
                "order": int(k),
                "power": float(p),
            },
        )
    logw = -p * np.log(d[nz])
    w = np.exp(logw - logw.max())
    theta = float((w * mids[nz]).sum() / w.sum())
    with np.errstate(over="ignore"):
        scale = float(n) ** (-(p + 1.0))
        a_hat = scale * float((d[nz] ** (-p)).sum())
        b_hat = scale * float((d[nz] ** (-p) * mids[nz]).sum())
    diag = {
        "sum_weights": a_hat,
        "sum_weighted_midpoints": b_hat,
        "order": int(k),
        "power": float(p),
        "dropped_zero_spacings": dropped,
        "spacing_min": float(d[nz].min()),
        "spacing_max": float(d.max()),
        "degenerate": False,
    }
    if warn:
        diag["power_range_warning"] = "1 < p < k violated"
    if dropped:
        diag["tie_inflation_warning"] = "zero spacings excluded from both sums"
    return DirectEstimate(
        location=theta,
        method="grenander",
        window=(float(x[0]), float(x[-1])),
        diagnostics=diag,
    )
