"""Two-level amplitudes for the driven 1s-2p0 transition.

An oscillating classical field E(t) = E0 cos(omega t) z couples the
hydrogen 1s and 2p0 levels.  In the rotating-wave approximation the
amplitude pair (c_a, c_b) of

    psi = c_a(t) psi_100 + c_b(t) psi_210 exp(-i tau)

obeys

    dc_a/dtau = -(i/2) nu~ exp(-i Omega~ tau) c_b
    dc_b/dtau = -(i/2) nu~ exp(+i Omega~ tau) c_a

with nu = V12/hbar, detuning Omega = omega0 - omega, sigma^2 =
Omega^2 + nu^2, and tildes marking rates divided by omega0.  The closed
solution used everywhere is

    c_a(tau) = exp(-i Omega~ tau / 2) (cos(sigma~ tau / 2)
               + i (Omega/sigma) sin(sigma~ tau / 2))
    c_b(tau) = -i (nu/sigma) sin(sigma~ tau / 2) exp(+i Omega~ tau / 2)

which satisfies the system above to machine precision (the numeric
integrator in solve_coefficients_numeric provides an independent check).
The envelope functions T and T' are defined through

    (nu/2sigma) T(tau) = Im{c_a* c_b exp(-i tau)}
    T'(tau)            = Re{c_a* c_b exp(-i tau)}

and evaluate to

    T  = (Omega/sigma)(1 - cos sigma~tau) sin omega~tau
         - sin sigma~tau cos omega~tau
    T' = -(nu/2sigma) ((Omega/sigma)(1 - cos sigma~tau) cos omega~tau
         + sin sigma~tau sin omega~tau)

with omega~ = 1 - Omega~ the drive frequency in units of omega0.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .constants import CODATA, TWO_PI, PhysicalConstants
from .errors import ParameterError

# <100| x3 |210> in units of the Bohr radius: 2^7 sqrt(2) / 3^5.
DIPOLE_MATRIX_ELEMENT = 128.0 * math.sqrt(2.0) / 243.0

# Detuning guards (1/s): beyond the hard limit the rotating-wave picture
# is meaningless; past the soft limit it is doubtful, so warn.
DETUNING_HARD_LIMIT_PS = 1e14
DETUNING_SOFT_LIMIT_PS = 1e13


def reduce_angle(x):
    """Reduce a phase to [-pi, pi] before trig evaluation.

    Uses x - 2*pi*round(x/(2*pi)) with the same operation order for
    scalars and arrays, so the scalar and vector integration paths see
    bitwise-identical phases.
    """
    if isinstance(x, np.ndarray):
        return x - TWO_PI * np.round(x / TWO_PI)
    return x - TWO_PI * round(x / TWO_PI)


@dataclass(frozen=True)
class DriveParameters:
    """Field amplitude plus every rate derived from it.

    Rates carry a _ps suffix when expressed in 1/s and a _t suffix when
    divided by omega0 (the scaled units used by the dynamics).

    Attributes
    ----------
    E0_Vpm : float
        Field amplitude in V/m.
    Omega_ps : float
        Detuning omega0 - omega in 1/s.
    omega0_ps : float
        Transition angular frequency in 1/s.
    V12_J : float
        Interaction matrix element -(128 sqrt2 / 243) a q E0 in J.
    nu_ps : float
        Coupling rate in 1/s (V12/hbar, or the override when one is set).
    sigma_ps : float
        Generalized flopping rate sqrt(Omega^2 + nu^2) in 1/s.
    Omega_t, nu_t, sigma_t : float
        The same rates divided by omega0.
    nu_override_ps : float or None
        Explicit coupling rate that replaced V12/hbar, if any.
    """

    E0_Vpm: float
    Omega_ps: float
    omega0_ps: float
    V12_J: float
    nu_ps: float
    sigma_ps: float
    Omega_t: float
    nu_t: float
    sigma_t: float
    nu_override_ps: Optional[float] = None

    def __post_init__(self):
        expected = math.hypot(self.Omega_ps, self.nu_ps)
        if not math.isclose(self.sigma_ps, expected, rel_tol=1e-13, abs_tol=0.0):
            raise ParameterError(
                "sigma_ps must equal hypot(Omega_ps, nu_ps); got %r, expected %r"
                % (self.sigma_ps, expected)
            )

    @property
    def ratio_nu(self) -> float:
        """nu/sigma; the peak amplitude of c_b."""
        return self.nu_ps / self.sigma_ps

    @property
    def ratio_Omega(self) -> float:
        """Omega/sigma."""
        return self.Omega_ps / self.sigma_ps

    @property
    def omega_t(self) -> float:
        """Drive frequency omega/omega0 = 1 - Omega~."""
        return 1.0 - self.Omega_t

    @property
    def peak_transition_probability(self) -> float:
        """(nu/sigma)^2, the flopping maximum of |c_b|^2."""
        return self.ratio_nu * self.ratio_nu

    @property
    def flop_period_tau(self) -> float:
        """Scaled period 2 pi / sigma~ of the population flopping."""
        return TWO_PI / self.sigma_t

    @property
    def field_energy_eV(self) -> float:
        """e E0 a in eV; numerically E0 times the Bohr radius."""
        return self.E0_Vpm * CODATA.bohr_radius_m


def derive_drive(
    E0_Vpm: float,
    Omega_ps: float,
    *,
    constants: PhysicalConstants = CODATA,
    nu_override_ps: Optional[float] = None,
    omega0_ps: Optional[float] = None,
) -> DriveParameters:
    """Build DriveParameters from a field amplitude and a detuning.

    Parameters
    ----------
    E0_Vpm : float
        Field amplitude in V/m; must be positive.
    Omega_ps : float
        Detuning omega0 - omega in 1/s; must be non-negative and below
        1e14 (warns above 1e13, where the two-level reduction is
        already strained).
    constants : PhysicalConstants
        Source for a, q, hbar and omega0.
    nu_override_ps : float, optional
        Replace the derived coupling rate V12/hbar with this value
        (must be negative, like the derived rate).
    omega0_ps : float, optional
        Replace the CODATA-derived transition frequency, e.g. to match
        a rounded printed value.
    """
    if not E0_Vpm > 0.0:
        raise ParameterError("field amplitude E0 must be positive, got %r" % (E0_Vpm,))
    if Omega_ps < 0.0:
        raise ParameterError("detuning Omega must be non-negative, got %r" % (Omega_ps,))
    if Omega_ps > DETUNING_HARD_LIMIT_PS:
        raise ParameterError(
            "detuning %.3e 1/s exceeds the hard limit %.0e 1/s"
            % (Omega_ps, DETUNING_HARD_LIMIT_PS)
        )
    if Omega_ps > DETUNING_SOFT_LIMIT_PS:
        warnings.warn(
            "detuning %.3e 1/s exceeds %.0e 1/s; the rotating-wave "
            "treatment is questionable this far off resonance"
            % (Omega_ps, DETUNING_SOFT_LIMIT_PS),
            stacklevel=2,
        )

    omega0 = constants.omega0_ps if omega0_ps is None else float(omega0_ps)
    if not (math.isfinite(omega0) and omega0 > 0.0):
        raise ParameterError("omega0 must be positive, got %r" % (omega0,))

    V12_J = (
        -DIPOLE_MATRIX_ELEMENT
        * constants.bohr_radius_m
        * constants.elementary_charge_C
        * E0_Vpm
    )
    if nu_override_ps is None:
        nu_ps = V12_J / constants.hbar_Js
    else:
        # The override is a signed rate; zero switches the coupling off
        # (c_b stays 0) and is legitimate for baseline runs.
        nu_ps = float(nu_override_ps)
        if not math.isfinite(nu_ps):
            raise ParameterError("nu_override must be finite, got %r" % (nu_ps,))
    sigma_ps = math.hypot(Omega_ps, nu_ps)
    if sigma_ps == 0.0:
        raise ParameterError(
            "drive has neither coupling nor detuning (nu = Omega = 0); "
            "sigma = 0 leaves the flopping phase undefined"
        )

    return DriveParameters(
        E0_Vpm=E0_Vpm,
        Omega_ps=Omega_ps,
        omega0_ps=omega0,
        V12_J=V12_J,
        nu_ps=nu_ps,
        sigma_ps=sigma_ps,
        Omega_t=Omega_ps / omega0,
        nu_t=nu_ps / omega0,
        sigma_t=sigma_ps / omega0,
        nu_override_ps=nu_override_ps,
    )


@dataclass(frozen=True)
class CoefficientState:
    """Amplitude pair at one scaled time."""

    c_a: complex
    c_b: complex
    tau: float

    @property
    def cb_sq(self) -> float:
        """Upper-level population |c_b|^2."""
        return self.c_b.real**2 + self.c_b.imag**2

    @property
    def norm(self) -> float:
        """|c_a|^2 + |c_b|^2; 1 for a physical state."""
        return self.c_a.real**2 + self.c_a.imag**2 + self.cb_sq


def coefficients(tau: float, drive: DriveParameters) -> CoefficientState:
    """Closed-form amplitudes at scaled time tau."""
    half_s = 0.5 * drive.sigma_t * tau
    half_o = 0.5 * drive.Omega_t * tau
    sh = math.sin(half_s)
    ch = math.cos(half_s)
    slow = cmath.exp(-1j * half_o)
    c_a = slow * complex(ch, drive.ratio_Omega * sh)
    c_b = complex(0.0, -drive.ratio_nu * sh) * slow.conjugate()
    return CoefficientState(c_a=c_a, c_b=c_b, tau=float(tau))


def coefficient_arrays(tau, drive: DriveParameters):
    """Closed-form amplitudes on an array of scaled times.

    Returns (c_a, c_b) as complex arrays shaped like tau.
    """
    tau = np.asarray(tau, dtype=float)
    half_s = 0.5 * drive.sigma_t * tau
    sh = np.sin(half_s)
    ch = np.cos(half_s)
    slow = np.exp(-0.5j * drive.Omega_t * tau)
    c_a = slow * (ch + 1j * drive.ratio_Omega * sh)
    c_b = (-1j * drive.ratio_nu * sh) * np.conj(slow)
    return c_a, c_b


def transition_probability(tau, drive: DriveParameters):
    """|c_b|^2 = (nu/sigma)^2 sin^2(sigma~ tau / 2); scalar or array."""
    s = np.sin(0.5 * drive.sigma_t * np.asarray(tau, dtype=float))
    out = drive.peak_transition_probability * s * s
    return float(out) if out.ndim == 0 else out


def transition_probability_scalar(tau: float, drive: DriveParameters) -> float:
    """|c_b|^2 in plain math, for per-sample calls in the hot loop."""
    s = math.sin(0.5 * drive.sigma_t * tau)
    return drive.peak_transition_probability * s * s


def envelope_T(tau, drive: DriveParameters):
    """Slow/fast envelope T with (nu/2sigma) T = Im{c_a* c_b e^(-i tau)}."""
    tau = np.asarray(tau, dtype=float)
    s = reduce_angle(drive.sigma_t * tau)
    w = reduce_angle(drive.omega_t * tau)
    rO = drive.ratio_Omega
    out = rO * (1.0 - np.cos(s)) * np.sin(w) - np.sin(s) * np.cos(w)
    return float(out) if out.ndim == 0 else out


def envelope_Tprime(tau, drive: DriveParameters):
    """Envelope T' = Re{c_a* c_b e^(-i tau)}."""
    tau = np.asarray(tau, dtype=float)
    s = reduce_angle(drive.sigma_t * tau)
    w = reduce_angle(drive.omega_t * tau)
    rO = drive.ratio_Omega
    out = -0.5 * drive.ratio_nu * (
        rO * (1.0 - np.cos(s)) * np.cos(w) + np.sin(s) * np.sin(w)
    )
    return float(out) if out.ndim == 0 else out


def reversal_window(drive: DriveParameters, threshold: float = 0.02):
    """Scaled-time window around the first full population return.

    Returns (tau_lo, tau_hi) bracketing tau = 2 pi / sigma~ such that
    |c_b|^2 < threshold strictly inside the window.  Raises
    ParameterError when the flopping peak never reaches the threshold
    (the window would cover all times).
    """
    peak = drive.peak_transition_probability
    if not 0.0 < threshold < peak:
        raise ParameterError(
            "threshold %r must lie strictly between 0 and the flopping "
            "peak %r" % (threshold, peak)
        )
    # |c_b|^2 = peak sin^2(sigma~ tau/2) < threshold around sigma~ tau = 2 pi.
    delta = math.asin(math.sqrt(threshold / peak))
    period = drive.flop_period_tau
    half_width = delta * period / math.pi
    return period - half_width, period + half_width


def solve_coefficients_numeric(
    tau_max: float,
    drive: DriveParameters,
    tol: float = 1e-10,
    stride: Optional[float] = None,
) -> list[CoefficientState]:
    """Integrate the amplitude system numerically; cross-check for the closed form.

    Parameters
    ----------
    tau_max : float
        End of the integration span [0, tau_max]; must be >= 0.
    drive : DriveParameters
        Rates for the system.
    tol : float
        Relative tolerance for the adaptive integrator; the absolute
        tolerance is tol/100.
    stride : float, optional
        Sampling interval of the returned series; defaults to
        tau_max/1000.

    Returns
    -------
    list of CoefficientState sampled on the stride grid, starting at
    tau = 0 with (c_a, c_b) = (1, 0).
    """
    from .stepping import integrate_array

    if tau_max < 0.0:
        raise ParameterError("tau_max must be non-negative, got %r" % (tau_max,))
    if tau_max == 0.0:
        return [CoefficientState(c_a=1.0 + 0.0j, c_b=0.0 + 0.0j, tau=0.0)]
    if stride is None:
        stride = tau_max / 1000.0
    if not 0.0 < stride <= tau_max:
        raise ParameterError("stride must lie in (0, tau_max], got %r" % (stride,))

    half_nu = 0.5 * drive.nu_t
    omt = drive.Omega_t

    def rhs(tau, y):
        # y = (Re c_a, Im c_a, Re c_b, Im c_b)
        c = math.cos(omt * tau)
        s = math.sin(omt * tau)
        return np.array(
            [
                half_nu * (c * y[3] - s * y[2]),
                -half_nu * (c * y[2] + s * y[3]),
                half_nu * (c * y[1] + s * y[0]),
                -half_nu * (c * y[0] - s * y[1]),
            ]
        )

    n_stops = int(round(tau_max / stride))
    stops = np.linspace(0.0, tau_max, n_stops + 1)
    if stops[-1] < tau_max:
        stops = np.append(stops, tau_max)

    series: list[CoefficientState] = []

    def observer(tau, y):
        series.append(
            CoefficientState(
                c_a=complex(y[0], y[1]), c_b=complex(y[2], y[3]), tau=float(tau)
            )
        )

    y0 = np.array([1.0, 0.0, 0.0, 0.0])
    integrate_array(
        rhs,
        0.0,
        y0,
        tau_max,
        rtol=tol,
        atol=tol / 100.0,
        stops=stops,
        observer=observer,
    )
    return series


# ---------------------------------------------------------------------------
# Coefficient sources
# ---------------------------------------------------------------------------


class AnalyticSource:
    """Closed-form driven amplitudes; the default source.

    kind = "analytic"; driven (the semiclassical field is on).
    """

    kind = "analytic"
    is_driven = True

    def __init__(self, drive: DriveParameters):
        self.drive = drive

    @property
    def label(self) -> str:
        return "analytic"

    def eval(self, tau: float) -> CoefficientState:
        return coefficients(tau, self.drive)

    def cb_sq(self, tau: float) -> float:
        return transition_probability_scalar(tau, self.drive)


class FrozenSource:
    """Constant amplitude pair; models an undriven superposition.

    The pair must be normalized: |c1|^2 + |c2|^2 = 1 within 1e-12.
    kind = "frozen"; not driven (no field term in the local energy).
    """

    kind = "frozen"
    is_driven = False
    drive = None

    def __init__(self, c1: complex, c2: complex):
        c1 = complex(c1)
        c2 = complex(c2)
        norm = abs(c1) ** 2 + abs(c2) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ParameterError(
                "frozen amplitudes must satisfy |c1|^2 + |c2|^2 = 1; got %r"
                % (norm,)
            )
        self.c1 = c1
        self.c2 = c2

    @property
    def label(self) -> str:
        return "frozen(%r, %r)" % (self.c1, self.c2)

    def eval(self, tau: float) -> CoefficientState:
        return CoefficientState(c_a=self.c1, c_b=self.c2, tau=float(tau))

    def cb_sq(self, tau: float) -> float:
        return self.c2.real**2 + self.c2.imag**2


class NumericSource:
    """Amplitudes from the numeric ODE solve, Hermite-interpolated.

    Exists so trajectories can be driven by the independently
    integrated amplitudes instead of the closed form; the two agree to
    the solver tolerance.  kind = "numeric-ode"; driven.
    """

    kind = "numeric-ode"
    is_driven = True

    def __init__(
        self,
        drive: DriveParameters,
        tau_max: float,
        tol: float = 1e-10,
        stride: Optional[float] = None,
    ):
        if tau_max <= 0.0:
            raise ParameterError("tau_max must be positive, got %r" % (tau_max,))
        self.drive = drive
        self.tau_max = float(tau_max)
        if stride is None:
            stride = tau_max / 2000.0
        series = solve_coefficients_numeric(tau_max, drive, tol=tol, stride=stride)
        self._tau = np.array([s.tau for s in series])
        self._y = np.array(
            [[s.c_a.real, s.c_a.imag, s.c_b.real, s.c_b.imag] for s in series]
        )
        half_nu = 0.5 * drive.nu_t
        omt = drive.Omega_t
        c = np.cos(omt * self._tau)
        s_ = np.sin(omt * self._tau)
        y = self._y
        self._f = np.column_stack(
            [
                half_nu * (c * y[:, 3] - s_ * y[:, 2]),
                -half_nu * (c * y[:, 2] + s_ * y[:, 3]),
                half_nu * (c * y[:, 1] + s_ * y[:, 0]),
                -half_nu * (c * y[:, 0] - s_ * y[:, 1]),
            ]
        )

    @property
    def label(self) -> str:
        return "numeric-ode"

    def eval(self, tau: float) -> CoefficientState:
        if tau < 0.0 or tau > self.tau_max * (1.0 + 1e-12):
            raise ParameterError(
                "tau=%r outside the solved span [0, %r]" % (tau, self.tau_max)
            )
        grid = self._tau
        i = int(np.searchsorted(grid, tau, side="right")) - 1
        i = max(0, min(i, len(grid) - 2))
        h = grid[i + 1] - grid[i]
        t = (tau - grid[i]) / h
        t2 = t * t
        t3 = t2 * t
        h00 = 2.0 * t3 - 3.0 * t2 + 1.0
        h10 = t3 - 2.0 * t2 + t
        h01 = -2.0 * t3 + 3.0 * t2
        h11 = t3 - t2
        y = (
            h00 * self._y[i]
            + h10 * h * self._f[i]
            + h01 * self._y[i + 1]
            + h11 * h * self._f[i + 1]
        )
        return CoefficientState(
            c_a=complex(y[0], y[1]), c_b=complex(y[2], y[3]), tau=float(tau)
        )

    def cb_sq(self, tau: float) -> float:
        state = self.eval(tau)
        return state.cb_sq
