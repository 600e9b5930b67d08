"""Adaptive trajectory integration and run bookkeeping.

integrate() advances one electron from its initial point with the
shared Dormand-Prince 5(4) pair (see stepping), keeping the state in
plain floats and landing exactly on every output-stride multiple, where
it records a full sample row: position, the analytic velocity at that
instant, local energy, upper-level population, invariant-surface
residual and density.  phi accumulates without wrapping.

Runs are deterministic: the same inputs produce bitwise-identical
sample arrays and manifests (timestamps excluded), which the test suite
relies on.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from . import observables
from .drive import DriveParameters, reversal_window
from .dynamics import (
    SPIN_UP,
    ScaledVelocity,
    SpinVector,
    make_scalar_rhs,
    surface_constant,
    surface_residual,
)
from .errors import AxisProximityError, IntegrationError, ParameterError
from .stepping import (
    A21,
    A31,
    A32,
    A41,
    A42,
    A43,
    A51,
    A52,
    A53,
    A54,
    A61,
    A62,
    A63,
    A64,
    A65,
    B1,
    B3,
    B4,
    B5,
    B6,
    C2,
    C3,
    C4,
    C5,
    E1,
    E3,
    E4,
    E5,
    E6,
    E7,
    MAX_FACTOR,
    MIN_FACTOR,
    PI_ALPHA,
    PI_BETA,
    SAFETY,
)
from .wavefield import SpatialPoint

VERSION_TAG = "pilotwave 0.1.0"

# Scaled times bounding the qualitative regimes of the resonant run;
# used as default boundaries when splitting a trajectory for plotting.
DEFAULT_SPLIT_BOUNDARIES = (1469.0, 2992.0, 4844.0, 7196.0)

# Consecutive accepted steps below the density floor before the
# node-dwell warning fires.
NODE_DWELL_STEPS = 10


@dataclass(frozen=True)
class IntegratorConfig:
    """Step-control and sampling settings for trajectory runs."""

    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = 1.0
    min_step: float = 1e-12
    rho_floor: float = 1e-12
    output_stride: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.rel_tol < 1.0:
            raise ParameterError("rel_tol must lie in (0, 1), got %r" % (self.rel_tol,))
        if not self.abs_tol > 0.0:
            raise ParameterError("abs_tol must be positive, got %r" % (self.abs_tol,))
        if not 0.0 < self.min_step < self.max_step:
            raise ParameterError(
                "need 0 < min_step < max_step, got %r, %r"
                % (self.min_step, self.max_step)
            )
        if not self.rho_floor > 0.0:
            raise ParameterError("rho_floor must be positive, got %r" % (self.rho_floor,))
        if not self.output_stride > 0.0:
            raise ParameterError(
                "output_stride must be positive, got %r" % (self.output_stride,)
            )

    def to_dict(self) -> dict:
        return {
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "max_step": self.max_step,
            "min_step": self.min_step,
            "rho_floor": self.rho_floor,
            "output_stride": self.output_stride,
        }


@dataclass(frozen=True)
class TrajectorySample:
    """One output row of a trajectory run."""

    tau: float
    point: SpatialPoint
    velocity: ScaledVelocity
    energy_eV: float
    cb_sq: float
    surface_residual: float
    rho: float
    clipped: bool


@dataclass(frozen=True)
class RunManifest:
    """Reproducibility record of one trajectory run."""

    version: str
    drive: Optional[dict]
    source: str
    initial: dict
    config: dict
    tau_max: float
    stats: dict
    reversal_window: Optional[tuple[float, float]] = None

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "drive": self.drive,
            "source": self.source,
            "initial": self.initial,
            "config": self.config,
            "tau_max": self.tau_max,
            "stats": self.stats,
            "reversal_window": (
                list(self.reversal_window) if self.reversal_window else None
            ),
        }


class TrajectoryResult:
    """Column-wise sample storage for one run.

    Attributes are equal-length numpy arrays: tau, xi, theta, phi,
    dxi, dtheta, dphi, energy_eV, cb_sq, surface_residual, rho, and the
    boolean clipped.  tau is strictly increasing; phi is unwrapped.
    """

    def __init__(self, columns: dict, manifest: RunManifest):
        self.tau = columns["tau"]
        self.xi = columns["xi"]
        self.theta = columns["theta"]
        self.phi = columns["phi"]
        self.dxi = columns["dxi"]
        self.dtheta = columns["dtheta"]
        self.dphi = columns["dphi"]
        self.energy_eV = columns["energy_eV"]
        self.cb_sq = columns["cb_sq"]
        self.surface_residual = columns["surface_residual"]
        self.rho = columns["rho"]
        self.clipped = columns["clipped"]
        self.manifest = manifest

    def __len__(self) -> int:
        return len(self.tau)

    def samples(self) -> Iterator[TrajectorySample]:
        for i in range(len(self.tau)):
            yield TrajectorySample(
                tau=float(self.tau[i]),
                point=SpatialPoint(
                    xi=float(self.xi[i]),
                    theta=float(self.theta[i]),
                    phi=float(self.phi[i]),
                ),
                velocity=ScaledVelocity(
                    dxi=float(self.dxi[i]),
                    dtheta=float(self.dtheta[i]),
                    dphi=float(self.dphi[i]),
                ),
                energy_eV=float(self.energy_eV[i]),
                cb_sq=float(self.cb_sq[i]),
                surface_residual=float(self.surface_residual[i]),
                rho=float(self.rho[i]),
                clipped=bool(self.clipped[i]),
            )


def _sample_grid(tau_max: float, stride: float) -> np.ndarray:
    """Output times: every stride multiple in [0, tau_max], plus tau_max."""
    n = int(math.floor(tau_max / stride + 1e-9))
    grid = stride * np.arange(n + 1)
    if grid[-1] < tau_max - 1e-9 * max(1.0, tau_max):
        grid = np.append(grid, tau_max)
    else:
        grid[-1] = min(grid[-1], tau_max)
    return grid


def _integrate_scalar(
    rhs: Callable,
    state0: tuple[float, float, float],
    tau_end: float,
    cfg: IntegratorConfig,
    stops: Sequence[float],
    on_sample: Callable,
):
    """Specialized DP 5(4) loop over (xi, theta, phi) in plain floats.

    Calls on_sample(tau, xi, theta, phi, k) exactly at every stop,
    where k is the derivative tuple (dxi, dtheta, dphi, rho) evaluated
    at that state.  Returns (accepted, rejected, min_rho).
    """
    xi, th, ph = state0
    t = 0.0
    rtol = cfg.rel_tol
    atol = cfg.abs_tol
    try:
        k1 = rhs(t, xi, th)
    except AxisProximityError as exc:
        exc.tau = t
        exc.state = (xi, th, ph)
        raise
    min_rho = k1[3]
    si = 0
    n_stops = len(stops)
    if n_stops and stops[0] == 0.0:
        on_sample(t, xi, th, ph, k1)
        si = 1

    # Initial step from the velocity magnitude against the error scale.
    d0 = max(abs(xi), abs(th), 1.0)
    d1 = max(abs(k1[0]), abs(k1[1]), abs(k1[2]), 1e-10)
    h = min(cfg.max_step, 0.01 * (atol / rtol + d0) / d1, tau_end if tau_end > 0 else 1.0)
    h = max(h, cfg.min_step)

    err_prev = 1.0
    just_rejected = False
    n_acc = 0
    n_rej = 0
    dwell = 0
    dwell_warned = False

    while t < tau_end:
        target = stops[si] if si < n_stops else tau_end
        if target <= t:
            si += 1
            continue
        h_try = min(h, cfg.max_step)
        hits_target = h_try >= target - t
        if hits_target:
            h_try = target - t
        if h_try < cfg.min_step:
            raise IntegrationError(
                "step size underflow at tau=%r" % (t,), tau=t, state=(xi, th, ph)
            )

        try:
            k2 = rhs(t + C2 * h_try, xi + h_try * (A21 * k1[0]), th + h_try * (A21 * k1[1]))
            k3 = rhs(
                t + C3 * h_try,
                xi + h_try * (A31 * k1[0] + A32 * k2[0]),
                th + h_try * (A31 * k1[1] + A32 * k2[1]),
            )
            k4 = rhs(
                t + C4 * h_try,
                xi + h_try * (A41 * k1[0] + A42 * k2[0] + A43 * k3[0]),
                th + h_try * (A41 * k1[1] + A42 * k2[1] + A43 * k3[1]),
            )
            k5 = rhs(
                t + C5 * h_try,
                xi + h_try * (A51 * k1[0] + A52 * k2[0] + A53 * k3[0] + A54 * k4[0]),
                th + h_try * (A51 * k1[1] + A52 * k2[1] + A53 * k3[1] + A54 * k4[1]),
            )
            k6 = rhs(
                t + h_try,
                xi
                + h_try
                * (A61 * k1[0] + A62 * k2[0] + A63 * k3[0] + A64 * k4[0] + A65 * k5[0]),
                th
                + h_try
                * (A61 * k1[1] + A62 * k2[1] + A63 * k3[1] + A64 * k4[1] + A65 * k5[1]),
            )
            xi_new = xi + h_try * (
                B1 * k1[0] + B3 * k3[0] + B4 * k4[0] + B5 * k5[0] + B6 * k6[0]
            )
            th_new = th + h_try * (
                B1 * k1[1] + B3 * k3[1] + B4 * k4[1] + B5 * k5[1] + B6 * k6[1]
            )
            ph_new = ph + h_try * (
                B1 * k1[2] + B3 * k3[2] + B4 * k4[2] + B5 * k5[2] + B6 * k6[2]
            )
            k7 = rhs(t + h_try, xi_new, th_new)
        except AxisProximityError as exc:
            exc.tau = t
            exc.state = (xi, th, ph)
            raise
        except (OverflowError, ValueError):
            # A wild trial stage left the admissible region; retry smaller.
            h = 0.5 * h_try
            just_rejected = True
            n_rej += 1
            continue

        e_xi = h_try * (
            E1 * k1[0] + E3 * k3[0] + E4 * k4[0] + E5 * k5[0] + E6 * k6[0] + E7 * k7[0]
        )
        e_th = h_try * (
            E1 * k1[1] + E3 * k3[1] + E4 * k4[1] + E5 * k5[1] + E6 * k6[1] + E7 * k7[1]
        )
        e_ph = h_try * (
            E1 * k1[2] + E3 * k3[2] + E4 * k4[2] + E5 * k5[2] + E6 * k6[2] + E7 * k7[2]
        )
        s_xi = atol + rtol * max(abs(xi), abs(xi_new))
        s_th = atol + rtol * max(abs(th), abs(th_new))
        s_ph = atol + rtol * max(abs(ph), abs(ph_new))
        r_xi = e_xi / s_xi
        r_th = e_th / s_th
        r_ph = e_ph / s_ph
        err = math.sqrt((r_xi * r_xi + r_th * r_th + r_ph * r_ph) / 3.0)

        if err != err or err == math.inf:
            h = 0.5 * h_try
            just_rejected = True
            n_rej += 1
            continue
        if err <= 1.0:
            t = target if hits_target else t + h_try
            xi, th, ph = xi_new, th_new, ph_new
            k1 = k7
            n_acc += 1
            rho_here = k7[3]
            if rho_here < min_rho:
                min_rho = rho_here
            if rho_here < cfg.rho_floor:
                dwell += 1
                if dwell > NODE_DWELL_STEPS and not dwell_warned:
                    warnings.warn(
                        "trajectory dwelling near a density node: %d consecutive "
                        "accepted steps with rho < %.0e around tau=%.3f"
                        % (dwell, cfg.rho_floor, t),
                        stacklevel=3,
                    )
                    dwell_warned = True
            else:
                dwell = 0
            if err == 0.0:
                factor = MAX_FACTOR
            else:
                factor = SAFETY * err ** (-PI_ALPHA) * err_prev**PI_BETA
                factor = min(MAX_FACTOR, max(MIN_FACTOR, factor))
            if just_rejected:
                factor = min(1.0, factor)
            h = h_try * factor
            err_prev = max(err, 1e-4)
            just_rejected = False
            if si < n_stops and t >= stops[si]:
                on_sample(t, xi, th, ph, k1)
                si += 1
        else:
            h = h_try * max(MIN_FACTOR, SAFETY * err ** (-PI_ALPHA))
            just_rejected = True
            n_rej += 1

    return n_acc, n_rej, min_rho


def _drive_dict(drive: Optional[DriveParameters]) -> Optional[dict]:
    if drive is None:
        return None
    return {
        "E0_volts_per_meter": drive.E0_Vpm,
        "detuning_per_second": drive.Omega_ps,
        "omega0_per_second": drive.omega0_ps,
        "nu_per_second": drive.nu_ps,
        "sigma_per_second": drive.sigma_ps,
        "nu_override_per_second": drive.nu_override_ps,
        "scaled": {
            "detuning": drive.Omega_t,
            "nu": drive.nu_t,
            "sigma": drive.sigma_t,
        },
    }


def integrate(
    initial: SpatialPoint,
    tau_span,
    source,
    config: IntegratorConfig = IntegratorConfig(),
    *,
    spin: SpinVector = SPIN_UP,
) -> TrajectoryResult:
    """Integrate one trajectory over [0, tau_max].

    Parameters
    ----------
    initial : SpatialPoint
        Starting point; sin(theta) must be at least 1e-3 (the
        equations degenerate on the polar axis).
    tau_span : float or (0, tau_max)
        End time, or a pair whose first element must be 0 (the
        amplitude history is pinned at tau = 0).
    source : coefficient source
        AnalyticSource, FrozenSource or NumericSource.
    config : IntegratorConfig
        Tolerances, step limits, density floor and output stride.
    spin : SpinVector
        Guidance spin; the default is the physical +z, hbar/2.

    Returns a TrajectoryResult.  Raises AxisProximityError if the
    trajectory reaches sin(theta) < 1e-6, IntegrationError on step-size
    underflow (both carry the last good state), and ParameterError for
    bad spans or a start too close to the axis.
    """
    if isinstance(tau_span, (tuple, list)):
        if len(tau_span) != 2 or tau_span[0] != 0.0:
            raise ParameterError(
                "tau_span must be tau_max or (0, tau_max); got %r" % (tau_span,)
            )
        tau_max = float(tau_span[1])
    else:
        tau_max = float(tau_span)
    if tau_max <= 0.0:
        raise ParameterError("tau_max must be positive, got %r" % (tau_max,))
    if math.sin(initial.theta) < 1e-3:
        raise ParameterError(
            "initial point too close to the polar axis: sin(theta)=%r < 1e-3"
            % (math.sin(initial.theta),)
        )

    rhs = make_scalar_rhs(source, spin=spin)
    invariant = surface_constant(initial.xi, initial.theta)
    drive = source.drive
    stops = [float(s) for s in _sample_grid(tau_max, config.output_stride)]

    cols = {
        "tau": [],
        "xi": [],
        "theta": [],
        "phi": [],
        "dxi": [],
        "dtheta": [],
        "dphi": [],
        "energy_eV": [],
        "cb_sq": [],
        "surface_residual": [],
        "rho": [],
        "clipped": [],
    }
    include_drive = drive if source.is_driven else None

    def on_sample(tau, xi, th, ph, k):
        cols["tau"].append(tau)
        cols["xi"].append(xi)
        cols["theta"].append(th)
        cols["phi"].append(ph)
        cols["dxi"].append(k[0])
        cols["dtheta"].append(k[1])
        cols["dphi"].append(k[2])
        point = SpatialPoint(xi=xi, theta=th, phi=ph)
        energy = observables.local_energy(
            point,
            tau,
            source.eval(tau),
            include_drive,
            rho_floor=config.rho_floor,
        )
        cols["energy_eV"].append(energy.total_eV)
        cols["clipped"].append(energy.clipped)
        cols["cb_sq"].append(source.cb_sq(tau))
        cols["surface_residual"].append(surface_residual(xi, th, invariant))
        cols["rho"].append(k[3])

    n_acc, n_rej, min_rho = _integrate_scalar(
        rhs,
        (initial.xi, initial.theta, initial.phi),
        tau_max,
        config,
        stops,
        on_sample,
    )

    columns = {
        key: np.array(vals, dtype=(bool if key == "clipped" else float))
        for key, vals in cols.items()
    }
    manifest = RunManifest(
        version=VERSION_TAG,
        drive=_drive_dict(drive),
        source=source.label,
        initial={"xi": initial.xi, "theta": initial.theta, "phi": initial.phi},
        config=config.to_dict(),
        tau_max=tau_max,
        stats={
            "steps_accepted": n_acc,
            "steps_rejected": n_rej,
            "min_rho": min_rho,
            "samples": int(len(columns["tau"])),
            "clipped_samples": int(columns["clipped"].sum()),
        },
    )
    return TrajectoryResult(columns, manifest)


def integrate_long(
    initial: SpatialPoint,
    source,
    config: IntegratorConfig = IntegratorConfig(),
    *,
    tau_max: float = 2e4,
    spin: SpinVector = SPIN_UP,
) -> TrajectoryResult:
    """Full flopping-cycle run; annotates the population-return window.

    Same as integrate() but defaults to tau_max = 2e4 and, for driven
    sources, stores the window around 2 pi / sigma~ where the
    upper-level population stays below 0.02.
    """
    result = integrate(initial, tau_max, source, config, spin=spin)
    window = None
    if source.is_driven and source.drive is not None:
        try:
            lo, hi = reversal_window(source.drive, threshold=0.02)
        except ParameterError:
            # Peak population below the window threshold (weak or
            # switched-off coupling): no return window to report.
            lo = hi = None
        if lo is not None and lo < tau_max:
            window = (lo, min(hi, tau_max))
    manifest = RunManifest(
        version=result.manifest.version,
        drive=result.manifest.drive,
        source=result.manifest.source,
        initial=result.manifest.initial,
        config=result.manifest.config,
        tau_max=result.manifest.tau_max,
        stats=result.manifest.stats,
        reversal_window=window,
    )
    result.manifest = manifest
    return result


def split_intervals(
    result: TrajectoryResult,
    boundaries: Optional[Sequence[float]] = None,
) -> list[tuple[int, int]]:
    """Split a run into contiguous index ranges at the given tau values.

    boundaries defaults to DEFAULT_SPLIT_BOUNDARIES; each must lie
    strictly inside the sampled span and they must increase strictly.
    Returns inclusive (start, end) index pairs covering every sample;
    a sample exactly at a boundary closes the earlier segment.  An
    empty boundary list yields a single segment.
    """
    if boundaries is None:
        boundaries = DEFAULT_SPLIT_BOUNDARIES
    boundaries = [float(b) for b in boundaries]
    n = len(result.tau)
    if n == 0:
        raise ParameterError("cannot split an empty trajectory")
    t0 = float(result.tau[0])
    t1 = float(result.tau[-1])
    if not boundaries:
        return [(0, n - 1)]
    for a, b in zip(boundaries, boundaries[1:]):
        if not a < b:
            raise ParameterError("boundaries must increase strictly: %r" % (boundaries,))
    for b in boundaries:
        if not t0 < b < t1:
            raise ParameterError(
                "boundary %r outside the sampled span (%r, %r)" % (b, t0, t1)
            )
    cuts = np.searchsorted(result.tau, boundaries, side="right")
    ranges = []
    start = 0
    for c in cuts:
        ranges.append((start, int(c) - 1))
        start = int(c)
    ranges.append((start, n - 1))
    return ranges
