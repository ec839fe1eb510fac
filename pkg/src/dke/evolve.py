"""Explicit time integration with stability guards and run diagnostics.

Two drivers: run_distribution steps real occupations n(X, K) under the
difference (or classical spectral) kinetic equation and aborts the moment
any occupation leaves [0, 1] beyond rounding slack; run_polarization steps
the full Hermitian polarization matrix under the mean-field commutator and
aborts if the accumulated Hermiticity defect ever exceeds 1e-8.

Both return trajectories: lists of (t, state, Diagnostics) sampled every
snapshot_every steps plus always the initial and final states.  Time is
reported as t = step * dt (no floating accumulation).
"""

import math
from dataclasses import dataclass

import numpy as np

from .kinetics import (OCCUPATION_BAND, DistributionField, PolarizationMatrix,
                       classical_rhs_values, dbe_rhs_values,
                       effective_hamiltonian, hermiticity_defect,
                       meanfield_rhs)

HERMITICITY_ABORT = 1e-8


class PositivityError(RuntimeError):
    """An occupation left the allowed band during integration."""


class HermiticityError(RuntimeError):
    """The polarization matrix drifted away from Hermitian form."""


@dataclass
class IntegratorConfig:
    dt: float
    t_end: float
    scheme: str = "rk4"
    snapshot_every: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_end <= 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.scheme not in ("euler", "rk4"):
            raise ValueError(
                f"scheme must be euler or rk4, got {self.scheme!r}")
        if self.snapshot_every < 1:
            raise ValueError(
                f"snapshot_every must be >= 1, got {self.snapshot_every}")

    @property
    def num_steps(self):
        """Steps to the first multiple of dt at or past t_end (roundoff
        slack so t_end = k*dt gives exactly k steps)."""
        return max(1, math.ceil(self.t_end / self.dt - 1e-9))


@dataclass
class Diagnostics:
    """Scalar summary of one trajectory sample."""

    total_number: float
    min_n: float
    max_n: float
    entropy: float
    hermiticity_defect: float = 0.0


def occupation_entropy(n):
    """Fermionic mixing entropy -sum [n ln n + (1-n) ln(1-n)], with the
    0 ln 0 limits taken as zero."""
    n = np.clip(np.asarray(n, dtype=float), 0.0, 1.0)
    ent = np.zeros_like(n)
    inside = (n > 0) & (n < 1)
    v = n[inside]
    ent[inside] = -(v * np.log(v) + (1.0 - v) * np.log1p(-v))
    return float(ent.sum())


def transport_dt_bound(spec):
    """CFL-type bound 0.5 d / K_max for the centered streaming term."""
    kmax = spec.n_max * spec.delta_k
    return 0.5 * spec.d / kmax


def stability_dt_bound(spec, model=None):
    """Most restrictive of the streaming bound and, when collisions are
    active, 0.5 over the largest total in/out rate."""
    bound = transport_dt_bound(spec)
    if model is not None:
        bound = min(bound, model.dt_bound())
    return bound


def polarization_dt_bound(hamiltonian):
    """0.5 / spectral radius of the effective one-body matrix; a
    comfortable margin inside RK4's imaginary-axis stability limit."""
    radius = float(np.max(np.abs(np.linalg.eigvalsh(hamiltonian))))
    if radius == 0:
        return np.inf
    return 0.5 / radius


def step(state, rhs_fn, config):
    """One explicit Euler or classical RK4 step of d(state)/dt = rhs_fn."""
    y, dt = state, config.dt
    if config.scheme == "euler":
        return y + dt * rhs_fn(y)
    k1 = rhs_fn(y)
    k2 = rhs_fn(y + 0.5 * dt * k1)
    k3 = rhs_fn(y + 0.5 * dt * k2)
    k4 = rhs_fn(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _distribution_diag(values):
    return Diagnostics(
        total_number=float(values.sum()),
        min_n=float(values.min()),
        max_n=float(values.max()),
        entropy=occupation_entropy(values),
    )


def run_distribution(n0, profile, model, config, rhs_kind="difference",
                     half_width=None):
    """Integrate occupations forward; trajectory of (t, field, diagnostics).

    rhs_kind selects the difference equation (default) or the spectral
    classical reference.  dt is validated against the streaming and
    collision stability bounds up front; any occupation leaving
    [-1e-9, 1 + 1e-9] aborts with the offending step index.
    """
    spec = n0.spec
    if rhs_kind == "difference":
        def rhs(v):
            return dbe_rhs_values(spec, v, profile, model, half_width)
    elif rhs_kind == "classical":
        def rhs(v):
            return classical_rhs_values(spec, v, profile, model)
    else:
        raise ValueError(
            f"rhs_kind must be difference or classical, got {rhs_kind!r}")

    bound = stability_dt_bound(spec, model)
    if config.dt > bound:
        raise ValueError(
            f"dt {config.dt:.6g} exceeds stability bound {bound:.6g}")

    lo, hi = OCCUPATION_BAND
    y = n0.values.copy()
    trajectory = [(0.0, DistributionField(spec, y.copy()),
                   _distribution_diag(y))]
    total = config.num_steps
    for k in range(1, total + 1):
        y = step(y, rhs, config)
        t = k * config.dt
        ymin, ymax = float(y.min()), float(y.max())
        if ymin < lo or ymax > hi:
            raise PositivityError(
                f"occupation left [{lo}, {hi}] at step {k} (t={t:.6g}): "
                f"min {ymin:.3e} max {ymax:.3e}")
        if k == total or k % config.snapshot_every == 0:
            trajectory.append((t, DistributionField(spec, y.copy()),
                               _distribution_diag(y)))
    return trajectory


def run_polarization(p0, profile, config, half_width=None):
    """Integrate the polarization matrix under the mean-field commutator.

    Trajectory of (t, PolarizationMatrix, Diagnostics); diagnostics track
    the real trace, extremes of the diagonal occupations, their mixing
    entropy, and the Hermiticity defect.  Exceeding a 1e-8 defect aborts.
    """
    spec = p0.spec
    hamiltonian = effective_hamiltonian(spec, profile, half_width)

    def rhs(v):
        return meanfield_rhs(v, profile, hamiltonian=hamiltonian)

    def diag_row(values):
        defect = hermiticity_defect(values)
        diag = np.diagonal(values).real
        return defect, Diagnostics(
            total_number=float(diag.sum()),
            min_n=float(diag.min()),
            max_n=float(diag.max()),
            entropy=occupation_entropy(diag),
            hermiticity_defect=defect,
        )

    y = p0.values.astype(complex).copy()
    defect0, row0 = diag_row(y)
    trajectory = [(0.0, PolarizationMatrix(spec, y.copy(), check=False), row0)]
    total = config.num_steps
    for k in range(1, total + 1):
        y = step(y, rhs, config)
        t = k * config.dt
        defect, row = diag_row(y)
        if defect > HERMITICITY_ABORT:
            raise HermiticityError(
                f"Hermiticity defect {defect:.3e} exceeds "
                f"{HERMITICITY_ABORT} at step {k} (t={t:.6g})")
        if k == total or k % config.snapshot_every == 0:
            trajectory.append(
                (t, PolarizationMatrix(spec, y.copy(), check=False), row))
    return trajectory
