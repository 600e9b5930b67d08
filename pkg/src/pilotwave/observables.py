"""Diagnostic observables along trajectories.

The local energy reported here is a bookkeeping quantity, not a
conserved one: it is the real part of the local eigenvalue mix

    h0(x, tau) = Re{psi~*(x) [E1 (c_a u1) + E2 (c_b u2 e^(-i tau))]} / rho

plus the instantaneous field term

    drive(x, tau) = -e E0 z cos(omega t) / 2
                  = -(1/2) (e E0 a) xi cos(theta) cos(omega~ tau)

in eV (the factor 1/2 is the rotating-wave half of the cosine drive
that acts on the transition).  h0 interpolates between E1 far out on
the 1s-dominated lobes and E2 where the 2p0 part dominates, and spikes
near nodes, where it is clipped to +-1000 eV and flagged.

The expectation value over the density follows in closed form,

    <E>(tau) = |c_a|^2 E1 + |c_b|^2 E2
               - (e E0 a) M12 cos(omega~ tau) T'(tau)

with M12 = 128 sqrt(2)/243 the dipole matrix element; the quadrature
route reference_energy integrates rho * E_local numerically and is used
to cross-check that form in the tests.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .constants import CODATA, PhysicalConstants
from .drive import (
    CoefficientState,
    DIPOLE_MATRIX_ELEMENT,
    DriveParameters,
    envelope_Tprime,
    reduce_angle,
    transition_probability,
)
from .errors import ParameterError
from .wavefield import N1, N2, RHO_FLOOR, SpatialPoint

# Clip value for the local energy near density nodes, in eV.
ENERGY_CLIP_EV = 1000.0


@dataclass(frozen=True)
class LocalEnergy:
    """Local energy split into level and field parts, in eV.

    total_eV = h0_part_eV + drive_part_eV whenever clipped is False;
    when the density is below the floor, total_eV carries the clip
    sentinel +-1000 eV (sign of the h0 numerator) and clipped is True.
    """

    total_eV: float
    h0_part_eV: float
    drive_part_eV: float
    clipped: bool


def local_energy(
    point: SpatialPoint,
    tau: float,
    coeffs: CoefficientState,
    drive: Optional[DriveParameters] = None,
    *,
    constants: PhysicalConstants = CODATA,
    rho_floor: float = RHO_FLOOR,
) -> LocalEnergy:
    """Local energy at one point; include the field term when drive is given.

    Pass drive=None for undriven (frozen) states: the atom then carries
    no field term and a pure eigenstate reports its level energy
    everywhere.
    """
    E1 = constants.E1_eV
    E2 = constants.E2_eV
    xi, theta = point.xi, point.theta
    ct = math.cos(theta)
    u1 = N1 * math.exp(-xi)
    u2 = N2 * xi * math.exp(-0.5 * xi) * ct

    term_a = coeffs.c_a * u1
    term_b = coeffs.c_b * u2 * cmath.exp(-1j * reduce_angle(tau))
    psi = term_a + term_b
    rho = psi.real * psi.real + psi.imag * psi.imag
    target = E1 * term_a + E2 * term_b
    numerator = (psi.conjugate() * target).real

    if drive is not None:
        w = reduce_angle(drive.omega_t * tau)
        drive_part = -0.5 * drive.field_energy_eV * xi * ct * math.cos(w)
    else:
        drive_part = 0.0

    if rho < rho_floor:
        total = math.copysign(ENERGY_CLIP_EV, numerator)
        return LocalEnergy(
            total_eV=total,
            h0_part_eV=total,
            drive_part_eV=drive_part,
            clipped=True,
        )
    h0 = numerator / rho
    return LocalEnergy(
        total_eV=h0 + drive_part,
        h0_part_eV=h0,
        drive_part_eV=drive_part,
        clipped=False,
    )


def local_energy_envelope_route(
    point: SpatialPoint,
    tau: float,
    drive: DriveParameters,
    *,
    constants: PhysicalConstants = CODATA,
    rho_floor: float = RHO_FLOOR,
) -> float:
    """h0 via the real envelope T' instead of complex arithmetic.

    Algebraically equal to the h0 part of local_energy for the driven
    closed-form amplitudes:

        h0 = (E1 |c_a|^2 u1^2 + E2 |c_b|^2 u2^2
              + (E1 + E2) u1 u2 T') / rho.

    Kept as an independent route for cross-checks.
    """
    from .drive import transition_probability_scalar

    E1 = constants.E1_eV
    E2 = constants.E2_eV
    xi, theta = point.xi, point.theta
    u1 = N1 * math.exp(-xi)
    u2 = N2 * xi * math.exp(-0.5 * xi) * math.cos(theta)
    cb2 = transition_probability_scalar(tau, drive)
    ca2 = 1.0 - cb2
    tp = envelope_Tprime(tau, drive)
    rho = ca2 * u1 * u1 + cb2 * u2 * u2 + 2.0 * u1 * u2 * tp
    if rho < rho_floor:
        raise ParameterError(
            "density %.3e below floor; the envelope route does not clip" % (rho,)
        )
    num = E1 * ca2 * u1 * u1 + E2 * cb2 * u2 * u2 + (E1 + E2) * u1 * u2 * tp
    return num / rho


def expected_energy(
    tau,
    drive: DriveParameters,
    *,
    constants: PhysicalConstants = CODATA,
):
    """Closed-form <E>(tau) over the driven density; scalar or array."""
    E1 = constants.E1_eV
    E2 = constants.E2_eV
    cb2 = transition_probability(tau, drive)
    tp = envelope_Tprime(tau, drive)
    tau_arr = np.asarray(tau, dtype=float)
    w = reduce_angle(drive.omega_t * tau_arr)
    out = (
        (1.0 - cb2) * E1
        + cb2 * E2
        - drive.field_energy_eV * DIPOLE_MATRIX_ELEMENT * np.cos(w) * tp
    )
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def reference_energy(
    tau: float,
    drive: DriveParameters,
    *,
    constants: PhysicalConstants = CODATA,
    n_xi: int = 160,
    n_mu: int = 80,
    xi_max: float = 40.0,
) -> float:
    """<E>(tau) by Gauss-Legendre quadrature of rho * E_local.

    Independent of expected_energy (no envelope shortcut for the
    integrals); agrees with it to quadrature accuracy.
    """
    from .drive import coefficients
    from .wavefield import density

    coeffs = coefficients(tau, drive)
    nodes_x, weights_x = np.polynomial.legendre.leggauss(n_xi)
    nodes_m, weights_m = np.polynomial.legendre.leggauss(n_mu)
    xi = 0.5 * xi_max * (nodes_x + 1.0)
    wx = 0.5 * xi_max * weights_x
    mu = nodes_m
    wm = weights_m
    xg = xi[:, None]
    mg = mu[None, :]
    theta = np.arccos(mg)

    E1 = constants.E1_eV
    E2 = constants.E2_eV
    u1 = N1 * np.exp(-xg)
    u2 = N2 * xg * np.exp(-0.5 * xg) * mg
    ca, cb = coeffs.c_a, coeffs.c_b
    phase = cmath.exp(-1j * reduce_angle(tau))
    term_a = ca * u1
    term_b = (cb * phase) * u2
    psi = term_a + term_b
    # rho * h0 = Re{psi* (E1 term_a + E2 term_b)}
    rho_h0 = (np.conj(psi) * (E1 * term_a + E2 * term_b)).real
    rho = np.abs(psi) ** 2
    w_ang = reduce_angle(drive.omega_t * tau)
    drive_field = -0.5 * drive.field_energy_eV * xg * mg * math.cos(w_ang)
    integrand = (rho_h0 + rho * drive_field) * xg * xg
    return float(2.0 * math.pi * np.einsum("i,j,ij->", wx, wm, integrand))


def angular_velocity_series(result) -> tuple[np.ndarray, np.ndarray]:
    """(tau, dphi/dtau) along a trajectory result.

    Reports the analytic field values stored at sampling time, not a
    finite difference of the phi series.
    """
    return result.tau.copy(), result.dphi.copy()
