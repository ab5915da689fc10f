"""Self-checks tying the package's pieces together.

Three independent audits:

* `conservation_audit` differentiates a numerically integrated trajectory
  and checks, pointwise, that the energy the qubit loses equals work flux
  plus heat flux, and that the channel's output power balances input plus
  the qubit's energy loss; `conservation_suite` runs it over randomized
  trajectories,
* `ergotropy_bound_scan` verifies on a dense (p, theta, gamma/rabi) grid
  that the constant-drive protocol never extracts more than the ergotropy,
* `scale_invariance_check` reruns the same physics at different absolute
  decay rates and confirms the dimensionless results are unchanged.

Each returns a small report object with the worst deviations found.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dynamics import (
    ExponentialPulse,
    OffDrive,
    Preparation,
    SquarePulse,
    Trajectory,
    evolve_numeric,
    prepare_initial,
)
from .energetics import accumulate, ergotropy, suggested_grid_step
from .scenarios import _worker_count, optimal_square_work, scenario_continuous


# --------------------------- conservation audit ---------------------------


@dataclass(frozen=True)
class ConservationReport:
    """Worst energy-balance residuals along one trajectory.

    ``rate_residual`` is max |−dE/dt − (work flux + heat flux)| with the
    derivative taken by fourth-order centered differences on the interior;
    ``flux_residual`` is max |output − input + dE/dt|; ``integral_residual``
    is the cumulative first-law mismatch on the grid.
    """

    rate_residual: float
    flux_residual: float
    integral_residual: float
    min_heat_rate: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return (
            self.rate_residual <= self.tolerance
            and self.flux_residual <= self.tolerance
            and self.integral_residual <= self.tolerance
            and self.min_heat_rate >= -self.tolerance
        )


def conservation_audit(traj: Trajectory, tolerance: float = 1e-6) -> ConservationReport:
    """Derivative-level check of the energy bookkeeping on one trajectory.

    The trajectory grid must be uniform (as produced by `evolve_numeric`)
    and the drive smooth inside the window, otherwise the centered
    differences see the kinks rather than the physics.
    """
    if len(traj) < 5:
        raise ValueError("need at least 5 grid points to audit")
    steps = np.diff(traj.times)
    h = float(steps[0])
    if not np.allclose(steps, h, rtol=1e-9, atol=0.0):
        raise ValueError("conservation audit requires a uniform time grid")

    trace = accumulate(traj, include_tail=False, check_residual=False)
    e = trace.energy
    de = (-e[4:] + 8.0 * e[3:-1] - 8.0 * e[1:-3] + e[:-4]) / (12.0 * h)
    sl = slice(2, -2)
    rate_resid = float(np.abs(-de - (trace.work_flux[sl] + trace.heat_flux[sl])).max())
    flux_resid = float(np.abs(trace.output_flux[sl] - trace.input_flux[sl] + de).max())
    integral_resid = float(np.abs((e[0] - e) - (trace.work + trace.heat)).max())
    return ConservationReport(
        rate_residual=rate_resid,
        flux_residual=flux_resid,
        integral_residual=integral_resid,
        min_heat_rate=float(trace.heat_flux.min()),
        tolerance=tolerance,
    )


@dataclass(frozen=True)
class ConservationSuiteReport:
    """Aggregate of `conservation_audit` over randomized trajectories."""

    n_cases: int
    max_rate_residual: float
    max_flux_residual: float
    max_integral_residual: float
    min_heat_rate: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return (
            self.max_rate_residual <= self.tolerance
            and self.max_flux_residual <= self.tolerance
            and self.max_integral_residual <= self.tolerance
            and self.min_heat_rate >= -self.tolerance
        )


def _random_trajectory(rng: np.random.Generator) -> Trajectory:
    prep = Preparation(p=float(rng.uniform(0.0, 0.5)), theta=float(rng.uniform(0.0, math.pi)))
    gamma = 1.0
    kind = int(rng.integers(0, 3))
    t_end = float(rng.uniform(2.0, 4.0))
    if kind == 0:
        drive = OffDrive()
        rabi_peak = 0.0
    elif kind == 1:
        # epsilon = gamma/rabi log-uniform over [0.05, 50]
        eps = float(np.exp(rng.uniform(math.log(0.05), math.log(50.0))))
        rabi_peak = gamma / eps
        drive = SquarePulse(amplitude=rabi_peak, duration=t_end)
    else:
        tau = float(np.exp(rng.uniform(math.log(0.2), math.log(2.0))))
        drive = ExponentialPulse(n_bar=float(rng.uniform(0.2, 4.0)), tau=tau, gamma=gamma)
        rabi_peak = drive.amplitude
        t_end = min(t_end, drive.support_end())
    dt = suggested_grid_step(rabi_peak, gamma, t_end)
    return evolve_numeric(prepare_initial(prep), drive, t_end=t_end, dt=dt, gamma=gamma)


def conservation_suite(
    n_cases: int = 20, seed: int = 0, tolerance: float = 1e-6
) -> ConservationSuiteReport:
    """Run `conservation_audit` over randomized drives and preparations."""
    if n_cases < 1:
        raise ValueError("n_cases must be positive")
    rng = np.random.default_rng(seed)
    worst = [0.0, 0.0, 0.0]
    min_q = math.inf
    for _ in range(n_cases):
        rep = conservation_audit(_random_trajectory(rng), tolerance=tolerance)
        worst[0] = max(worst[0], rep.rate_residual)
        worst[1] = max(worst[1], rep.flux_residual)
        worst[2] = max(worst[2], rep.integral_residual)
        min_q = min(min_q, rep.min_heat_rate)
    return ConservationSuiteReport(
        n_cases=n_cases,
        max_rate_residual=worst[0],
        max_flux_residual=worst[1],
        max_integral_residual=worst[2],
        min_heat_rate=min_q,
        tolerance=tolerance,
    )


# --------------------------- ergotropy bound scan ---------------------------


@dataclass(frozen=True, eq=False)
class BoundScanReport:
    """Gap between ergotropy and extracted work over the scanned grid.

    ``gap[i, j, k]`` corresponds to (epsilon[i], p[j], theta[k]); all entries
    should be nonnegative up to the tolerance.
    """

    epsilon_values: np.ndarray
    p_values: np.ndarray
    theta_values: np.ndarray
    gap: np.ndarray
    tolerance: float

    @property
    def min_gap(self) -> float:
        return float(self.gap.min())

    @property
    def argmin(self) -> tuple[float, float, float]:
        i, j, k = np.unravel_index(int(self.gap.argmin()), self.gap.shape)
        return (
            float(self.epsilon_values[i]),
            float(self.p_values[j]),
            float(self.theta_values[k]),
        )

    @property
    def n_violations(self) -> int:
        return int(np.count_nonzero(self.gap < -self.tolerance))

    @property
    def passed(self) -> bool:
        return self.n_violations == 0


def _bound_plane(args) -> np.ndarray:
    eps, p_values, theta_values = args
    rabi = 1.0 / eps
    out = np.empty((len(p_values), len(theta_values)))
    for j, p in enumerate(p_values):
        for k, th in enumerate(theta_values):
            prep = Preparation(p=float(p), theta=float(th))
            _, work = optimal_square_work(prep, rabi, gamma=1.0, polish=False)
            out[j, k] = ergotropy(prep) - work
    return out


def ergotropy_bound_scan(
    resolution: int = 50,
    epsilon_range: tuple[float, float] = (0.05, 50.0),
    tolerance: float = 1e-6,
    parallel: bool = True,
) -> BoundScanReport:
    """Scan preparations and drive strengths for ergotropy-bound violations.

    ``epsilon`` is the ratio gamma/rabi, scanned logarithmically across both
    damping regimes; p and theta cover their full ranges linearly, all three
    axes at ``resolution`` points.  Work comes from the closed-form
    stopping-time optimization at gamma = 1.
    """
    if resolution < 20:
        raise ValueError("resolution must be at least 20 per axis")
    p_values = np.linspace(0.0, 0.5, resolution)
    theta_values = np.linspace(0.0, math.pi, resolution)
    epsilon_values = np.geomspace(epsilon_range[0], epsilon_range[1], resolution)

    jobs = [(float(e), p_values, theta_values) for e in epsilon_values]
    workers = _worker_count()
    if parallel and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            planes = list(pool.map(_bound_plane, jobs))
    else:
        planes = [_bound_plane(j) for j in jobs]

    return BoundScanReport(
        epsilon_values=epsilon_values,
        p_values=p_values,
        theta_values=theta_values,
        gap=np.stack(planes),
        tolerance=tolerance,
    )


# --------------------------- scale invariance ---------------------------


@dataclass(frozen=True, eq=False)
class ScaleInvarianceReport:
    """Deviation of dimensionless results when all rates are rescaled."""

    factors: np.ndarray
    work_deviation: np.ndarray
    stopping_deviation: np.ndarray
    tolerance: float

    @property
    def max_work_deviation(self) -> float:
        return float(self.work_deviation.max())

    @property
    def max_stopping_deviation(self) -> float:
        return float(self.stopping_deviation.max())

    @property
    def passed(self) -> bool:
        return (
            self.max_work_deviation <= self.tolerance
            and self.max_stopping_deviation <= self.tolerance
        )


def scale_invariance_check(
    prep: Preparation,
    epsilon: float,
    factors=(0.1, 10.0),
    tolerance: float = 1e-9,
) -> ScaleInvarianceReport:
    """Rerun the continuous protocol with all rates scaled by each factor.

    ``epsilon`` = gamma/rabi fixes the dimensionless drive strength, i.e. a
    photon rate ratio of 1/(4 epsilon^2); scaling gamma and rabi together
    must leave the work and gamma*tau_opt unchanged.
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    ratio = 1.0 / (4.0 * epsilon * epsilon)
    base = scenario_continuous(prep, ratio, gamma=1.0)
    factors = np.asarray(factors, dtype=float)
    dw = np.empty_like(factors)
    ds = np.empty_like(factors)
    for i, k in enumerate(factors):
        r = scenario_continuous(prep, ratio, gamma=float(k))
        dw[i] = abs(r.work - base.work)
        ds[i] = abs(k * r.tau_opt - base.tau_opt)
    return ScaleInvarianceReport(
        factors=factors,
        work_deviation=dw,
        stopping_deviation=ds,
        tolerance=tolerance,
    )
