"""Energy bookkeeping for the driven qubit and its photonic channel.

All quantities are in units of (hbar * omega0) for energies and
(hbar * omega0 * gamma) for powers.  The channel splits the outgoing flux into

* work: the coherent part of the emission (stimulated + the interference of
  spontaneous emission with itself through the dipole), rate
  gamma*|s|^2 + rabi*Re(s),
* heat: the incoherent remainder, rate gamma*(p_e - |s|^2), nonnegative for
  any physical state.

Their sum matches the energy the qubit loses, which `accumulate` checks on
every trace it integrates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import (
    AnalyticCoefficients,
    IntegrationAccuracyError,
    Preparation,
    QubitState,
    Regime,
    Trajectory,
    square_pulse_coefficients,
)

# grid-level residual allowed between the integrated fluxes and the energy drop
RESIDUAL_TOL = 1e-6

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


def mean_energy(state: QubitState, rabi: float = 0.0, omega0: float | None = None) -> float:
    """Mean qubit energy; under the canonical phase it is just the excited population.

    With ``omega0`` given, includes the drive's dressing term
    -(rabi/omega0)*Im(s), which vanishes identically for states whose dipole
    stays real (any state descending from a `Preparation`).
    """
    e = state.p_e
    if omega0 is not None:
        if omega0 <= 0.0:
            raise ValueError("omega0 must be positive")
        e = e - (rabi / omega0) * state.s_bar.imag
    return e


def work_rate(state: QubitState, rabi: float, gamma: float) -> float:
    """Coherent (work-like) output power."""
    m2 = abs(state.s_bar) ** 2
    return gamma * m2 + rabi * state.s_bar.real


def heat_rate(state: QubitState, gamma: float) -> float:
    """Incoherent (heat-like) output power; >= 0 inside the Bloch ball."""
    return gamma * (state.p_e - abs(state.s_bar) ** 2)


def ergotropy(prep: Preparation) -> float:
    """Maximum unitarily extractable energy of the prepared state."""
    return (1.0 - 2.0 * prep.p) * math.sin(0.5 * prep.theta) ** 2


def extraction_yield(work: float, prep: Preparation) -> float:
    """Extracted work over ergotropy; NaN for passive states (zero ergotropy)."""
    w_max = ergotropy(prep)
    if w_max == 0.0:
        return math.nan
    return work / w_max


# --------------------------- trace integration ---------------------------


def _cumulative_trapezoid(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Running trapezoid integral with a leading zero."""
    out = np.empty_like(y)
    out[0] = 0.0
    np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x), out=out[1:])
    return out


@dataclass(frozen=True, eq=False)
class EnergeticsTrace:
    """Instantaneous and cumulative energy flows along a trajectory.

    ``work_tail``/``heat_tail`` hold the exact free-decay contributions after
    the final grid point (zero unless the tail was requested); ``total_work``
    and ``total_heat`` include them.
    """

    times: np.ndarray
    energy: np.ndarray
    work_flux: np.ndarray
    heat_flux: np.ndarray
    input_flux: np.ndarray
    output_flux: np.ndarray
    work: np.ndarray
    heat: np.ndarray
    work_tail: float
    heat_tail: float

    @property
    def total_work(self) -> float:
        return float(self.work[-1]) + self.work_tail

    @property
    def total_heat(self) -> float:
        return float(self.heat[-1]) + self.heat_tail


def accumulate(
    traj: Trajectory,
    include_tail: bool | None = None,
    check_residual: bool = True,
) -> EnergeticsTrace:
    """Integrate the energy flows of a trajectory.

    ``include_tail=None`` appends the exact free-decay work/heat after the
    last sample whenever both the drive and the coupling are still nontrivial
    there (i.e. the run was cut off mid-decay with the coupling on); True and
    False force it.  The grid-level first-law residual
    |energy drop - (work + heat)| is checked against RESIDUAL_TOL unless
    ``check_residual`` is False.
    """
    t = traj.times
    p = np.asarray(traj.p_e, dtype=float)
    sr = traj.s_bar.real
    m2 = np.abs(traj.s_bar) ** 2

    on = traj.coupling.on_mask(t)
    om = np.where(on, traj.drive.rabi(t), 0.0)
    ga = np.where(on, traj.gamma, 0.0)

    w_flux = ga * m2 + om * sr
    q_flux = ga * (p - m2)
    in_flux = np.asarray(traj.drive.photon_rate(t, gamma=traj.gamma), dtype=float)
    # total outgoing flux = input + net emission
    out_flux = in_flux + ga * p + om * sr

    work = _cumulative_trapezoid(w_flux, t)
    heat = _cumulative_trapezoid(q_flux, t)

    if include_tail is None:
        drive_done = t[-1] >= traj.drive.support_end()
        off = traj.coupling.gamma_off_time
        coupling_cut = off is not None and t[-1] >= off
        include_tail = drive_done and not coupling_cut and traj.gamma > 0.0
    if include_tail:
        w_tail = float(m2[-1])
        q_tail = float(p[-1] - m2[-1])
    else:
        w_tail = 0.0
        q_tail = 0.0

    if check_residual:
        resid = np.abs((p[0] - p) - (work + heat))
        worst = float(resid.max())
        if worst > RESIDUAL_TOL:
            raise IntegrationAccuracyError(
                f"first-law residual {worst:.3e} exceeds {RESIDUAL_TOL:.0e}; "
                "refine the grid or split the trace at drive discontinuities"
            )

    return EnergeticsTrace(
        times=t,
        energy=p,
        work_flux=w_flux,
        heat_flux=q_flux,
        input_flux=in_flux,
        output_flux=out_flux,
        work=work,
        heat=heat,
        work_tail=w_tail,
        heat_tail=q_tail,
    )


def suggested_grid_step(rabi_peak: float, gamma: float, window: float, budget: float = 3e-7) -> float:
    """Sampling step keeping the trapezoid error of flux integrals under ``budget``.

    The fluxes oscillate at rate ~ hypot(rabi, gamma) and are damped within a
    few 1/gamma, so the error scales like h^2 * rate^3 * effective_window / 12.
    The result is also capped at the RK4 step bound so one grid serves both.
    """
    rate = math.hypot(rabi_peak, gamma)
    if rate == 0.0:
        return window
    eff = min(window, 4.0 / (3.0 * gamma)) if gamma > 0.0 else window
    h = math.sqrt(12.0 * budget / (rate**3 * max(eff, 1e-300)))
    h_rk4 = 0.01 / rate
    return min(h, h_rk4, window)


# --------------------------- split by channel ---------------------------


@dataclass(frozen=True)
class WorkSplit:
    """Work decomposed into its stimulated and spontaneous channels."""

    w_stim: float
    w_sp: float

    @property
    def total(self) -> float:
        return self.w_stim + self.w_sp


def work_split(traj: Trajectory, include_tail: bool | None = None) -> WorkSplit:
    """Integrate the two work channels separately (same conventions as `accumulate`)."""
    t = traj.times
    sr = traj.s_bar.real
    m2 = np.abs(traj.s_bar) ** 2
    on = traj.coupling.on_mask(t)
    om = np.where(on, traj.drive.rabi(t), 0.0)
    ga = np.where(on, traj.gamma, 0.0)

    stim = float(_trapezoid(om * sr, t))
    spon = float(_trapezoid(ga * m2, t))

    if include_tail is None:
        drive_done = t[-1] >= traj.drive.support_end()
        off = traj.coupling.gamma_off_time
        coupling_cut = off is not None and t[-1] >= off
        include_tail = drive_done and not coupling_cut and traj.gamma > 0.0
    if include_tail:
        spon += float(m2[-1])
    return WorkSplit(w_stim=stim, w_sp=spon)


# --------------------------- constant-drive closed-form work ---------------------------


def _i1(tau: float, a: float, d: float) -> float:
    """Integral of exp(-a t) cos(d t) over [0, tau]."""
    den = a * a + d * d
    if den == 0.0:
        return tau
    return (a + math.exp(-a * tau) * (d * math.sin(d * tau) - a * math.cos(d * tau))) / den


def _i2(tau: float, a: float, d: float) -> float:
    """Integral of exp(-a t) sin(d t) over [0, tau]."""
    den = a * a + d * d
    if den == 0.0:
        return 0.0
    return (d - math.exp(-a * tau) * (d * math.cos(d * tau) + a * math.sin(d * tau))) / den


def _e(tau: float, a: float) -> float:
    """Integral of exp(-a t) over [0, tau]."""
    if a == 0.0:
        return tau
    return -math.expm1(-a * tau) / a


def _i1h(tau: float, a: float, d: float) -> float:
    """Integral of exp(-a t) cosh(d t) over [0, tau]."""
    return 0.5 * (_e(tau, a - d) + _e(tau, a + d))


def _i2h(tau: float, a: float, d: float) -> float:
    """Integral of exp(-a t) sinh(d t) over [0, tau]."""
    return 0.5 * (_e(tau, a - d) - _e(tau, a + d))


def _j1(tau: float, a: float) -> float:
    """Integral of t exp(-a t) over [0, tau]."""
    if a == 0.0:
        return 0.5 * tau * tau
    return (1.0 - math.exp(-a * tau) * (1.0 + a * tau)) / (a * a)


def _j2(tau: float, a: float) -> float:
    """Integral of t^2 exp(-a t) over [0, tau]."""
    if a == 0.0:
        return tau**3 / 3.0
    at = a * tau
    return (2.0 - math.exp(-a * tau) * (2.0 + at * (2.0 + at))) / a**3


def square_drive_work_fn(prep: Preparation, rabi: float, gamma: float):
    """Closed-form cumulative work under a constant drive, as a function of its duration.

    Returns W(tau) = rabi * int_0^tau s dt + gamma * int_0^tau s^2 dt,
    exact in both integrals; no free-decay tail is included.
    """
    co = square_pulse_coefficients(prep, rabi, gamma)
    a, b, c, d = co.a, co.b, co.c, co.d
    al = 0.75 * gamma

    if co.regime is Regime.OSCILLATORY:

        def work(tau: float) -> float:
            s1 = a * _i1(tau, al, d) + b * _i2(tau, al, d) + c * tau
            if gamma == 0.0:
                return rabi * s1
            s2 = (
                0.5 * (a * a + b * b) * _e(tau, 2.0 * al)
                + 0.5 * (a * a - b * b) * _i1(tau, 2.0 * al, 2.0 * d)
                + a * b * _i2(tau, 2.0 * al, 2.0 * d)
                + 2.0 * c * (a * _i1(tau, al, d) + b * _i2(tau, al, d))
                + c * c * tau
            )
            return rabi * s1 + gamma * s2

    elif co.regime is Regime.OVERDAMPED:

        def work(tau: float) -> float:
            s1 = a * _i1h(tau, al, d) + b * _i2h(tau, al, d) + c * tau
            s2 = (
                0.5 * (a * a + b * b) * _i1h(tau, 2.0 * al, 2.0 * d)
                + 0.5 * (a * a - b * b) * _e(tau, 2.0 * al)
                + a * b * _i2h(tau, 2.0 * al, 2.0 * d)
                + 2.0 * c * (a * _i1h(tau, al, d) + b * _i2h(tau, al, d))
                + c * c * tau
            )
            return rabi * s1 + gamma * s2

    else:  # critical

        def work(tau: float) -> float:
            s1 = a * _e(tau, al) + b * _j1(tau, al) + c * tau
            s2 = (
                a * a * _e(tau, 2.0 * al)
                + 2.0 * a * b * _j1(tau, 2.0 * al)
                + b * b * _j2(tau, 2.0 * al)
                + 2.0 * c * (a * _e(tau, al) + b * _j1(tau, al))
                + c * c * tau
            )
            return rabi * s1 + gamma * s2

    return work


def square_drive_work(prep: Preparation, rabi: float, gamma: float, tau: float) -> float:
    """Work emitted during a constant drive of duration ``tau`` (no tail)."""
    if tau < 0.0:
        raise ValueError("tau must be nonnegative")
    return square_drive_work_fn(prep, rabi, gamma)(tau)
