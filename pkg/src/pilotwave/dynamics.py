"""Spin-dependent guidance field in scaled variables.

The momentum field of the guided electron is

    p = grad S + grad(log rho) x s

with S the phase of psi~ and s a constant spin vector (hbar/2) z.
Because psi~ is axisymmetric, grad S has only r and theta components,
while the cross term is purely azimuthal; with z = cos(theta) r -
sin(theta) theta and a right-handed (r, theta, phi) triad,

    p_phi = -(hbar s_z / a) (sin(theta) dlogrho/dxi
            + cos(theta) dlogrho/dtheta / xi).

Scaling by hbar/(m a^2 omega0) = 8/3 gives the equations of motion

    dxi/dtau    = (8/3) dS/dxi
    dtheta/dtau = (8/3) dS/dtheta / xi^2
    dphi/dtau   = -(8/3) s_z (dlogrho/dxi
                  + cot(theta) dlogrho/dtheta / xi) / xi

(all derivatives raw).  velocity_field computes these through the
wavefield gradient routines; make_scalar_rhs builds an algebraically
identical closed-form closure in plain floats for the integrator hot
loop, and make_batch_rhs the numpy analogue for trajectory ensembles.

Two eigenstate limits anchor everything: a pure 1s state gives
dphi/dtau = 8/(3 xi) and a pure 2p0 state gives 4/(3 xi), with
dxi = dtheta = 0 in both, so the electron circulates about the spin
axis at a rate set entirely by the density gradient.

For a purely 1s/2p0-driven state the xi and theta rates always satisfy
dxi/dtheta = -xi (1 + xi/2) cot(theta), so each trajectory stays on the
surface xi = 2/(A sin(theta) - 1) fixed by its initial point; the
surface_* helpers expose that invariant.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .constants import TWO_PI, VELOCITY_SCALE
from .drive import (
    CoefficientState,
    DriveParameters,
    coefficients,
    envelope_T,
    envelope_Tprime,
    reduce_angle,
    transition_probability_scalar,
)
from .errors import (
    AxisProximityError,
    NodeProximityError,
    OffSheetError,
    ParameterError,
)
from .wavefield import BETA, N1, N2, RHO_FLOOR, SpatialPoint, grad_log_rho, grad_S

# Axis guards: evaluation refuses points with sin(theta) below the hard
# guard; trajectory starts should respect the (larger) initial guard.
AXIS_GUARD = 1e-6
AXIS_GUARD_INITIAL = 1e-3


@dataclass(frozen=True)
class SpinVector:
    """Constant spin vector in units of hbar.

    Only alignment with the z axis is supported; the guidance algebra
    assumes the axisymmetric cross-product form.  s_z = +1/2 is the
    physical spin-up electron; s_z = 0 removes the spin term entirely
    (useful to attribute the azimuthal motion) and s_z = -1/2 flips the
    circulation.
    """

    s_x: float = 0.0
    s_y: float = 0.0
    s_z: float = 0.5

    def __post_init__(self):
        if self.s_x != 0.0 or self.s_y != 0.0:
            raise ParameterError(
                "only spin aligned with the z axis is supported; got "
                "s_x=%r s_y=%r" % (self.s_x, self.s_y)
            )


SPIN_UP = SpinVector()


@dataclass(frozen=True)
class ScaledVelocity:
    """Coordinate rates (dxi/dtau, dtheta/dtau, dphi/dtau)."""

    dxi: float
    dtheta: float
    dphi: float


@dataclass(frozen=True)
class SurfaceInvariant:
    """Constant A of the invariant surface xi = 2/(A sin(theta) - 1).

    A = (2 + xi0)/(xi0 sin(theta0)) > 1 for any admissible start.
    """

    A: float
    xi0: float
    theta0: float


@dataclass(frozen=True)
class PrintedFormCheck:
    """Literal printed momentum forms next to their reconciled values.

    The literal fields (chi_r, chi_theta, D, p_r_printed,
    p_theta_printed, p_phi_printed, T_printed, Tprime_printed) evaluate
    the historical closed forms exactly as written, in units of hbar/a.
    They carry three known defects, documented where this record is
    produced: the polar momentum shares the sign of the radial one
    (its own surface equation requires the opposite), the weight of the
    2p0 amplitude uses beta where 1/beta belongs (so D is not
    proportional to the density), and the |c_a|^2 term of chi_r flips
    the sign of the density gradient (visible as p_phi < 0 in the 1s
    limit).

    The reconciled fields substitute the identity-consistent envelopes
    and the physical density pi*rho: radial_scaled and polar_scaled are
    the structures cos(theta)(1+xi/2)e^(-3xi/2) T/(pi rho) and
    -sin(theta) e^(-3xi/2) T/(xi pi rho), which must equal the velocity
    components times 3 sqrt(2) sigma/nu; p_phi_consistent rebuilds the
    phi form with chi := (1/(2 beta)) grad(pi rho) and D := pi rho and
    must equal the derived p_phi exactly.
    """

    T_printed: float
    Tprime_printed: float
    D: float
    chi_r: float
    chi_theta: float
    p_r_printed: float
    p_theta_printed: float
    p_phi_printed: float
    radial_scaled: float
    polar_scaled: float
    p_phi_consistent: float
    p_phi_derived: float
    rho: float
    velocity: ScaledVelocity


def velocity_field(
    point: SpatialPoint,
    tau: float,
    coeffs: CoefficientState,
    *,
    spin: SpinVector = SPIN_UP,
    rho_floor: float = RHO_FLOOR,
) -> ScaledVelocity:
    """Scaled velocity at one point, derived from the wavefield gradients.

    Raises NodeProximityError below the density floor and
    AxisProximityError when sin(theta) < 1e-6.  This is the reference
    route; the integrator uses the algebraically identical closures
    from make_scalar_rhs.
    """
    st = math.sin(point.theta)
    if st < AXIS_GUARD:
        raise AxisProximityError(
            "sin(theta)=%.3e below the axis guard %.0e" % (st, AXIS_GUARD)
        )
    gs_xi, gs_th = grad_S(point, tau, coeffs, rho_floor=rho_floor)
    gl_xi, gl_th = grad_log_rho(point, tau, coeffs, rho_floor=rho_floor)
    xi = point.xi
    ct = math.cos(point.theta)
    dxi = VELOCITY_SCALE * gs_xi
    dtheta = VELOCITY_SCALE * gs_th / (xi * xi)
    dphi = -VELOCITY_SCALE * spin.s_z * (gl_xi + (ct / st) * gl_th / xi) / xi
    return ScaledVelocity(dxi=dxi, dtheta=dtheta, dphi=dphi)


def eigenstate_angular_velocity(state: str, xi) -> float:
    """Closed-form dphi/dtau for the pure eigenstates.

    state is "1s" (8/(3 xi)) or "2p0" (4/(3 xi)); xi scalar or array.
    """
    xi = np.asarray(xi, dtype=float)
    if state == "1s":
        out = 8.0 / (3.0 * xi)
    elif state == "2p0":
        out = 4.0 / (3.0 * xi)
    else:
        raise ParameterError("state must be '1s' or '2p0', got %r" % (state,))
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Fused right-hand sides for the integrators
# ---------------------------------------------------------------------------


def _cross_terms_analytic(drive: DriveParameters):
    """Constants for Re/Im{c_a* c_b e^(-i tau)} of the driven state."""
    return drive.ratio_nu, drive.ratio_Omega, drive.sigma_t, drive.omega_t


def make_scalar_rhs(
    source,
    *,
    spin: SpinVector = SPIN_UP,
) -> Callable[[float, float, float], tuple[float, float, float, float]]:
    """Build f(tau, xi, theta) -> (dxi, dtheta, dphi, rho) in plain floats.

    source is a coefficient source (see engine module): the analytic
    driven state and frozen superpositions get specialized closures;
    anything else goes through source.eval(tau).  Raises
    AxisProximityError from inside the closure when sin(theta) drops
    below the axis guard, so the integrator can abort cleanly.
    """
    sz = spin.s_z
    F = VELOCITY_SCALE

    kind = getattr(source, "kind", None)
    if kind == "analytic":
        rn, rO, st_rate, wt = _cross_terms_analytic(source.drive)

        def rhs(tau, xi, theta):
            half = 0.5 * st_rate * tau
            sh = math.sin(half)
            ch = math.cos(half)
            q = rn * sh
            cb2 = q * q
            ca2 = 1.0 - cb2
            w = wt * tau
            w -= TWO_PI * round(w / TWO_PI)
            cw = math.cos(w)
            sw = math.sin(w)
            tp = -q * (rO * sh * cw + ch * sw)
            im = q * (rO * sh * sw - ch * cw)
            return _rates(xi, theta, ca2, cb2, tp, im, sz, F)

        return rhs

    if kind == "frozen":
        c1, c2 = source.c1, source.c2
        ca2 = c1.real * c1.real + c1.imag * c1.imag
        cb2 = c2.real * c2.real + c2.imag * c2.imag
        m = c1.conjugate() * c2
        mr, mi = m.real, m.imag

        def rhs(tau, xi, theta):
            w = tau - TWO_PI * round(tau / TWO_PI)
            cw = math.cos(w)
            sw = math.sin(w)
            # c_a* c_b e^(-i tau) = (mr + i mi)(cw - i sw)
            tp = mr * cw + mi * sw
            im = mi * cw - mr * sw
            return _rates(xi, theta, ca2, cb2, tp, im, sz, F)

        return rhs

    def rhs(tau, xi, theta):
        state = source.eval(tau)
        ca, cb = state.c_a, state.c_b
        ca2 = ca.real * ca.real + ca.imag * ca.imag
        cb2 = cb.real * cb.real + cb.imag * cb.imag
        m = ca.conjugate() * cb
        w = tau - TWO_PI * round(tau / TWO_PI)
        cw = math.cos(w)
        sw = math.sin(w)
        tp = m.real * cw + m.imag * sw
        im = m.imag * cw - m.real * sw
        return _rates(xi, theta, ca2, cb2, tp, im, sz, F)

    return rhs


def _rates(xi, theta, ca2, cb2, tp, im, sz, F):
    """Core guidance algebra shared by every scalar closure."""
    sn = math.sin(theta)
    if sn < AXIS_GUARD:
        raise AxisProximityError(
            "sin(theta)=%.3e below the axis guard %.0e" % (sn, AXIS_GUARD)
        )
    ct = math.cos(theta)
    ex1 = math.exp(-xi)
    exh = math.exp(-0.5 * xi)
    u1 = N1 * ex1
    b = N2 * xi * exh
    u2 = b * ct
    u2x = N2 * (1.0 - 0.5 * xi) * exh * ct
    u2t = -b * sn
    rho = ca2 * u1 * u1 + cb2 * u2 * u2 + 2.0 * u1 * u2 * tp
    fi = F * im * u1
    dxi = fi * (u2x + u2) / rho
    dtheta = fi * u2t / (xi * xi * rho)
    drx = 2.0 * (-ca2 * u1 * u1 + cb2 * u2 * u2x + tp * u1 * (u2x - u2))
    drt = 2.0 * u2t * (cb2 * u2 + tp * u1)
    dphi = -F * sz * (drx + (ct / sn) * drt / xi) / (xi * rho)
    return dxi, dtheta, dphi, rho


def make_batch_rhs(source, *, spin: SpinVector = SPIN_UP):
    """Vectorized analogue of make_scalar_rhs for ensemble propagation.

    Returns f(tau, xi, theta) mapping equal-length arrays to
    (dxi, dtheta, dphi, rho) arrays.  Axis handling is the caller's
    job (the batch integrator drops trajectories near the axis), so no
    guard fires here.
    """
    sz = spin.s_z
    F = VELOCITY_SCALE
    kind = getattr(source, "kind", None)

    if kind == "analytic":
        rn, rO, st_rate, wt = _cross_terms_analytic(source.drive)

        def cross(tau):
            half = 0.5 * st_rate * tau
            sh = np.sin(half)
            ch = np.cos(half)
            q = rn * sh
            cb2 = q * q
            w = wt * tau
            w = w - TWO_PI * np.round(w / TWO_PI)
            cw = np.cos(w)
            sw = np.sin(w)
            tp = -q * (rO * sh * cw + ch * sw)
            im = q * (rO * sh * sw - ch * cw)
            return 1.0 - cb2, cb2, tp, im

    elif kind == "frozen":
        c1, c2 = source.c1, source.c2
        ca2_c = abs(c1) ** 2
        cb2_c = abs(c2) ** 2
        m = c1.conjugate() * c2

        def cross(tau):
            w = tau - TWO_PI * np.round(tau / TWO_PI)
            cw = np.cos(w)
            sw = np.sin(w)
            tp = m.real * cw + m.imag * sw
            im = m.imag * cw - m.real * sw
            shape = np.shape(tau)
            return (
                np.broadcast_to(ca2_c, shape),
                np.broadcast_to(cb2_c, shape),
                tp,
                im,
            )

    else:
        raise ParameterError(
            "batch propagation supports analytic and frozen sources, got %r"
            % (kind,)
        )

    def rhs(tau, xi, theta):
        ca2, cb2, tp, im = cross(tau)
        sn = np.sin(theta)
        ct = np.cos(theta)
        ex1 = np.exp(-xi)
        exh = np.exp(-0.5 * xi)
        u1 = N1 * ex1
        b = N2 * xi * exh
        u2 = b * ct
        u2x = N2 * (1.0 - 0.5 * xi) * exh * ct
        u2t = -b * sn
        rho = ca2 * u1 * u1 + cb2 * u2 * u2 + 2.0 * u1 * u2 * tp
        fi = F * im * u1
        dxi = fi * (u2x + u2) / rho
        dtheta = fi * u2t / (xi * xi * rho)
        drx = 2.0 * (-ca2 * u1 * u1 + cb2 * u2 * u2x + tp * u1 * (u2x - u2))
        drt = 2.0 * u2t * (cb2 * u2 + tp * u1)
        dphi = -F * sz * (drx + (ct / sn) * drt / xi) / (xi * rho)
        return dxi, dtheta, dphi, rho

    return rhs


# ---------------------------------------------------------------------------
# Currents and continuity
# ---------------------------------------------------------------------------


def pauli_current(
    point: SpatialPoint,
    tau: float,
    coeffs: CoefficientState,
    *,
    spin: SpinVector = SPIN_UP,
) -> tuple[float, float, float]:
    """Current components (rho dxi/dtau, rho dtheta/dtau, rho dphi/dtau).

    Computed in closed form without dividing by rho, so the current is
    well defined at nodes, where all three components vanish.
    """
    st = math.sin(point.theta)
    if st < AXIS_GUARD:
        raise AxisProximityError(
            "sin(theta)=%.3e below the axis guard %.0e" % (st, AXIS_GUARD)
        )
    F = VELOCITY_SCALE
    xi, theta = point.xi, point.theta
    ca, cb = coeffs.c_a, coeffs.c_b
    ca2 = ca.real * ca.real + ca.imag * ca.imag
    cb2 = cb.real * cb.real + cb.imag * cb.imag
    m = ca.conjugate() * cb * cmath.exp(-1j * reduce_angle(tau))
    tp, im = m.real, m.imag
    ct = math.cos(theta)
    u1 = N1 * math.exp(-xi)
    exh = math.exp(-0.5 * xi)
    b = N2 * xi * exh
    u2 = b * ct
    u2x = N2 * (1.0 - 0.5 * xi) * exh * ct
    u2t = -b * st
    fi = F * im * u1
    j_xi = fi * (u2x + u2)
    j_theta = fi * u2t / (xi * xi)
    drx = 2.0 * (-ca2 * u1 * u1 + cb2 * u2 * u2x + tp * u1 * (u2x - u2))
    drt = 2.0 * u2t * (cb2 * u2 + tp * u1)
    j_phi = -F * spin.s_z * (drx + (ct / st) * drt / xi) / xi
    return j_xi, j_theta, j_phi


def continuity_defect(
    point: SpatialPoint,
    tau: float,
    drive: DriveParameters,
) -> float:
    """Analytic value of d(rho)/dtau + div(rho v) for the driven state.

    The rotating-wave coupling is hermitian but spatially nonlocal, so
    the driven density is not exactly transported by the velocity
    field; the defect is

        nu~ [ Im{c_a* c_b e^(-i Omega~ tau)} (u1^2 - u2^2)
              + u1 u2 (|c_b|^2 - |c_a|^2) sin(omega~ tau) ]

    with Im{c_a* c_b e^(-i Omega~ tau)} = -(nu/2 sigma) sin(sigma~ tau)
    for the closed-form amplitudes.  Frozen superpositions satisfy the
    continuity equation exactly; this function quantifies the driven
    residue, and the finite-difference continuity checks in the test
    suite assert against it.
    """
    u1, u2, _, _ = _wave_parts(point.xi, point.theta)
    st = drive.sigma_t * tau
    slow_im = -0.5 * drive.ratio_nu * math.sin(st)
    cb2 = transition_probability_scalar(tau, drive)
    ca2 = 1.0 - cb2
    w = reduce_angle(drive.omega_t * tau)
    return drive.nu_t * (
        slow_im * (u1 * u1 - u2 * u2) + u1 * u2 * (cb2 - ca2) * math.sin(w)
    )


def _wave_parts(xi: float, theta: float):
    ct = math.cos(theta)
    u1 = N1 * math.exp(-xi)
    exh = math.exp(-0.5 * xi)
    u2 = N2 * xi * exh * ct
    u2x = N2 * (1.0 - 0.5 * xi) * exh * ct
    u2t = -N2 * xi * exh * math.sin(theta)
    return u1, u2, u2x, u2t


# ---------------------------------------------------------------------------
# Invariant surface
# ---------------------------------------------------------------------------


def surface_constant(xi0: float, theta0: float) -> SurfaceInvariant:
    """Invariant-surface constant A = (2 + xi0)/(xi0 sin(theta0))."""
    if not xi0 > 0.0:
        raise ParameterError("xi0 must be positive, got %r" % (xi0,))
    st = math.sin(theta0)
    if st < AXIS_GUARD_INITIAL:
        raise AxisProximityError(
            "sin(theta0)=%.3e too close to the axis for a surface constant"
            % (st,)
        )
    return SurfaceInvariant(A=(2.0 + xi0) / (xi0 * st), xi0=xi0, theta0=theta0)


def surface_residual(xi, theta, invariant) -> float:
    """Absolute residual xi - 2/(A sin(theta) - 1).

    invariant may be a SurfaceInvariant or a bare A value.  Raises
    OffSheetError where A sin(theta) <= 1, since the sheet does not
    extend there.  Accepts scalars or arrays.
    """
    A = invariant.A if isinstance(invariant, SurfaceInvariant) else float(invariant)
    xi = np.asarray(xi, dtype=float)
    denom = A * np.sin(np.asarray(theta, dtype=float)) - 1.0
    if np.any(denom <= 0.0):
        raise OffSheetError(
            "A sin(theta) <= 1 encountered; the invariant sheet does not "
            "extend there (A=%r)" % (A,)
        )
    out = xi - 2.0 / denom
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Printed-form cross-checks
# ---------------------------------------------------------------------------


def printed_momentum_check(
    point: SpatialPoint,
    tau: float,
    drive: DriveParameters,
    *,
    spin: SpinVector = SPIN_UP,
) -> PrintedFormCheck:
    """Evaluate the historical closed momentum forms at one point.

    See PrintedFormCheck for exactly what is literal and what is
    reconciled.  All momenta are in units of hbar/a; the velocity field
    relates to them through dxi/dtau = (8/3) p_r, dtheta/dtau =
    (8/3) p_theta / xi and dphi/dtau = (8/3) p_phi / (xi sin(theta)).
    """
    xi, theta = point.xi, point.theta
    ct = math.cos(theta)
    sn = math.sin(theta)
    coeffs = coefficients(tau, drive)
    ca2 = coeffs.c_a.real**2 + coeffs.c_a.imag**2
    cb2 = coeffs.cb_sq
    rn = drive.ratio_nu
    rO = drive.ratio_Omega

    # Literal envelopes: fast phase at omega0 (the drive frequency in
    # the consistent forms) and the historical signs on the detuned
    # terms.
    s_ph = reduce_angle(drive.sigma_t * tau)
    f_ph = reduce_angle(tau)
    cs, ss = math.cos(s_ph), math.sin(s_ph)
    cf, sf = math.cos(f_ph), math.sin(f_ph)
    T_printed = -ss * cf - rO * (1.0 - cs) * sf
    Tp_printed = 0.5 * rn * (rO * (1.0 - cs) * cf - ss * sf)

    ex1 = math.exp(-xi)
    exh = math.exp(-0.5 * xi)
    e2 = ex1 * ex1  # e^(-2 xi)
    e32 = ex1 * exh  # e^(-3 xi / 2)

    D = (
        ca2 * e2
        + BETA * BETA * cb2 * xi * xi * ex1 * ct * ct
        + 2.0 * BETA * xi * e32 * ct * Tp_printed
    )
    chi_r = (
        ca2 * e2 / BETA
        + BETA * cb2 * ct * ct * ex1 * xi * (1.0 - 0.5 * xi)
        + ct * e32 * (1.0 - 1.5 * xi) * Tp_printed
    )
    chi_theta = -BETA * cb2 * ex1 * sn * ct * xi - e32 * sn * Tp_printed
    p_r_printed = (
        0.5 * rn * BETA * ct * e32 * (1.0 + 0.5 * xi) * T_printed / D
    )
    p_theta_printed = 0.5 * rn * BETA * sn * e32 * T_printed / D
    p_phi_printed = BETA * (-chi_r * sn - chi_theta * ct) / D

    # Reconciled structures against the physical density pi rho.
    T = envelope_T(tau, drive)
    u1, u2, u2x, u2t = _wave_parts(xi, theta)
    tp = envelope_Tprime(tau, drive)
    rho = ca2 * u1 * u1 + cb2 * u2 * u2 + 2.0 * u1 * u2 * tp
    pi_rho = math.pi * rho
    radial_scaled = ct * (1.0 + 0.5 * xi) * e32 * T / pi_rho
    polar_scaled = -sn * e32 * T / (xi * pi_rho)

    drx = math.pi * 2.0 * (-ca2 * u1 * u1 + cb2 * u2 * u2x + tp * u1 * (u2x - u2))
    drt = math.pi * 2.0 * u2t * (cb2 * u2 + tp * u1)
    chi_r_c = drx / (2.0 * BETA)
    chi_theta_c = drt / (2.0 * BETA * xi)
    p_phi_consistent = BETA * (-chi_r_c * sn - chi_theta_c * ct) / pi_rho

    vel = velocity_field(point, tau, coeffs, spin=spin)
    p_phi_derived = -spin.s_z * (sn * drx + ct * drt / xi) / pi_rho

    return PrintedFormCheck(
        T_printed=T_printed,
        Tprime_printed=Tp_printed,
        D=D,
        chi_r=chi_r,
        chi_theta=chi_theta,
        p_r_printed=p_r_printed,
        p_theta_printed=p_theta_printed,
        p_phi_printed=p_phi_printed,
        radial_scaled=radial_scaled,
        polar_scaled=polar_scaled,
        p_phi_consistent=p_phi_consistent,
        p_phi_derived=p_phi_derived,
        rho=rho,
        velocity=vel,
    )
