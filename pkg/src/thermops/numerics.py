"""Shared numeric policy and small matrix/fitting utilities.

Every tolerance used by the toolkit lives in one NumericPolicy record so that
a single knob change propagates consistently.  Functions that need a
tolerance accept a policy argument defaulting to DEFAULT_POLICY.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ValidationError(ValueError):
    """Raised when an input violates a structural precondition."""


@dataclass(frozen=True)
class NumericPolicy:
    """Central tolerance record.

    structural        -- hermiticity / unitarity / trace defects of inputs
    grouping          -- spectral tolerance for treating two energies as equal
    channel_residual  -- acceptable residual for channel-level identities
    psd_floor         -- most negative eigenvalue tolerated in a state
    gap_guard         -- minimum level gap admitted by perturbation formulas
    noise_floor       -- residuals below this are treated as exact zeros
    min_slope         -- required log-log convergence order for O(eps^2) claims
    max_composite_dim -- refuse composite spaces larger than this
    """

    structural: float = 1e-12
    grouping: float = 1e-9
    channel_residual: float = 1e-10
    psd_floor: float = 1e-10
    gap_guard: float = 1e-9
    noise_floor: float = 1e-13
    min_slope: float = 1.9
    max_composite_dim: int = 4096


DEFAULT_POLICY = NumericPolicy()


# ---------------------------------------------------------------------------
# matrix predicates
# ---------------------------------------------------------------------------

def max_abs(m) -> float:
    """Largest entry magnitude (max-entry norm)."""
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(m)))


def hermiticity_defect(m) -> float:
    m = np.asarray(m)
    return max_abs(m - m.conj().T)


def unitarity_defect(u) -> float:
    u = np.asarray(u)
    return max_abs(u.conj().T @ u - np.eye(u.shape[0]))


def frozen_array(values, dtype=complex) -> np.ndarray:
    """Copy values into a read-only ndarray (our records are immutable)."""
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# convergence-order fitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SlopeFit:
    """Result of a log-log order fit.

    slope is None when the fit is vacuous: fewer than two residuals rose
    above the noise floor, i.e. the quantity is zero to working precision.
    """

    slope: float | None
    n_used: int
    vacuous: bool

    def passes(self, min_slope: float) -> bool:
        return self.vacuous or (self.slope is not None and self.slope >= min_slope)


def fit_loglog_slope(epsilons, residuals, floor: float = DEFAULT_POLICY.noise_floor) -> SlopeFit:
    """Least-squares slope of log10(residual) against log10(epsilon).

    Points at or below `floor` are dropped before fitting: they measure
    round-off, not the convergence order.  With fewer than two surviving
    points the fit is declared vacuous.
    """
    eps = np.asarray(epsilons, dtype=float)
    res = np.asarray(residuals, dtype=float)
    if eps.shape != res.shape:
        raise ValidationError("epsilons and residuals must have matching shapes")
    if np.any(eps <= 0):
        raise ValidationError("slope fit requires strictly positive epsilons")
    keep = res > floor
    if int(np.sum(keep)) < 2:
        return SlopeFit(slope=None, n_used=int(np.sum(keep)), vacuous=True)
    slope = float(np.polyfit(np.log10(eps[keep]), np.log10(res[keep]), 1)[0])
    return SlopeFit(slope=slope, n_used=int(np.sum(keep)), vacuous=False)
