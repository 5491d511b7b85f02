"""Coupling determinants with branch tracking and the total spectral
shift function.

The determinant of a coupled pair,

    Delta_r(z) = det(I + r*M*G(z)),

is a polynomial of degree <= 2 in the coupling r whose coefficients are
built from the Gaussian Cauchy transform F(z) and the level resolvent
1/(a0 - z).  The total spectral shift at lam is (1/pi) times the
argument of Delta_1(lam + i0) continued from the branch that vanishes
at z = i*infinity.  Two independent routes compute that argument:

* Herglotz chaining: the perturbation is factored into rank-one
  eigen-terms; each term's determinant maps the upper half-plane into a
  half-plane fixed by the sign of its eigenvalue, so its boundary
  argument is the principal one confined to [0, pi] or [-pi, 0].
* Contour tracking: log Delta is continued down the vertical segment
  from lam + i*1e3 to lam + i0 with adaptive phase steps.

Disagreement beyond 1e-9 is a hard failure, not a warning: branch
errors shift the result by integers, which is exactly the quantity
under study downstream.
"""

from dataclasses import dataclass

import numpy as np

from .model import (
    POLE_RADIUS_DEFAULT,
    BaseOperator,
    FiniteRankPerturbation,
    _check_poles,
    det_weights,
    resolvent_gram,
)
from .specfun import gaussian_borel

ROUTE_TOL = 1e-9
ANCHOR_HEIGHT = 1e3


class BranchTrackingError(ArithmeticError):
    """Phase continuation failed or the two routes disagree."""


class ExtrapolationError(ArithmeticError):
    """The epsilon-limit Richardson table did not converge."""


@dataclass(frozen=True)
class CouplingPath:
    """The straight operator path base + r*pert, r in [0, 1]."""

    base: BaseOperator
    pert: FiniteRankPerturbation
    r: float

    def __post_init__(self):
        if not 0.0 <= self.r <= 1.0:
            raise ValueError("coupling r must lie in [0, 1]")


@dataclass(frozen=True)
class BoundarySample:
    """One boundary record (lam, Delta(lam + i0), continued argument).

    ``route`` names how the argument was continued: "closed_form"
    (Herglotz chaining), "contour" or "epsilon_limit".
    """

    lam: float
    delta: complex
    arg_unwrapped: float
    route: str

    def __post_init__(self):
        if abs(self.delta) == 0.0:
            raise ValueError("vanishing boundary determinant")
        phase = np.exp(1j * self.arg_unwrapped)
        if abs(phase - self.delta / abs(self.delta)) > 1e-12:
            raise ValueError("unwrapped argument inconsistent with delta")


def pert_det(base, pert, r, z, pole_radius=POLE_RADIUS_DEFAULT):
    """Coupling determinant Delta_r(z) = det(I + r*M*G(z)).

    Parameters
    ----------
    base : BaseOperator
    pert : FiniteRankPerturbation
    r : float
        Coupling in [0, 1].
    z : complex scalar or ndarray
        Im z >= 0; boundary points keep `pole_radius` clear of the
        base level.

    Returns
    -------
    complex scalar or ndarray

    Notes
    -----
    Delta_0 = 1, Delta_r(z) -> 1 as Im z -> infinity, and
    Delta_r(conj z) = conj(Delta_r(z)) by reflection.
    """
    _check_poles(base.level, z, pole_radius)
    zz = np.asarray(z, dtype=complex)
    F = np.asarray(gaussian_borel(zz))
    s = 1.0 / (base.level - zz)
    w_f, w_s, w_x = det_weights(pert)
    out = 1.0 + r * (w_f * F + w_s * s) + (r * r * w_x) * (F * s)
    return complex(out) if np.ndim(z) == 0 else out


def _confined_angle(value, mu):
    """Principal argument pushed into the half-plane forced by sign(mu).

    For mu > 0 the rank-one determinant 1 + mu*h has Im >= 0 on the
    boundary, so the argument lives in [0, pi]; tiny rounding below the
    negative real axis is folded up, tiny negative angles clamp to 0.
    Mirror rules apply for mu < 0.
    """
    a = float(np.angle(value))
    if mu > 0:
        if a < -0.5 * np.pi:
            a += 2.0 * np.pi
        elif a < 0.0:
            a = 0.0
    else:
        if a > 0.5 * np.pi:
            a -= 2.0 * np.pi
        elif a > 0.0:
            a = 0.0
    return a


def _chain_angle(base, pert, z, pole_radius=POLE_RADIUS_DEFAULT):
    """Continued argument of Delta_1(z) by rank-one chaining.

    Factors the perturbation into eigen-terms and accumulates each
    term's confined argument; the Gram matrix is updated between steps
    by the rank-one resolvent correction, so each step sees the
    previously coupled operator.
    """
    G = resolvent_gram(base, pert, complex(z), pole_radius)
    total = 0.0
    for j, mu in enumerate(pert.mus):
        step = 1.0 + mu * G[j, j]
        total += _confined_angle(step, mu)
        if j + 1 < pert.rank:
            col = G[:, j].copy()
            G = G - (mu / step) * np.outer(col, col)
    return total


def _contour_angle(base, pert, lam, pole_radius=POLE_RADIUS_DEFAULT,
                   anchor_height=ANCHOR_HEIGHT, ladder=None, max_depth=48):
    """Continued argument of Delta_1(lam + i0) tracked down from i*Y.

    The branch is anchored at lam + i*Y where |Delta - 1| is small, so
    the principal argument there already matches the branch vanishing
    at i*infinity.  Steps follow a geometric height ladder; any phase
    increment above pi/2 is bisected, and exhausting `max_depth`
    bisections raises BranchTrackingError.
    """
    if ladder is None:
        ladder = np.geomspace(anchor_height, 1e-4, 56)
    heights = np.concatenate([ladder, [0.0]])
    zs = lam + 1j * heights
    dets = pert_det(base, pert, 1.0, zs, pole_radius)
    if abs(dets[0] - 1.0) > 0.5:
        raise BranchTrackingError("anchor height too low at lam=%g" % lam)
    total = float(np.angle(dets[0]))
    for k in range(len(heights) - 1):
        total += _tracked_step(base, pert, lam, heights[k], heights[k + 1],
                               dets[k], dets[k + 1], pole_radius, max_depth)
    return total


def _tracked_step(base, pert, lam, y0, y1, d0, d1, pole_radius, depth):
    dphi = float(np.angle(d1 / d0))
    if abs(dphi) <= 0.5 * np.pi:
        return dphi
    if depth <= 0:
        raise BranchTrackingError(
            "phase step %.3f rad not resolved at lam=%g, y in (%g, %g)"
            % (dphi, lam, y1, y0)
        )
    ym = np.sqrt(y0 * y1) if y1 > 0.0 else 0.5 * y0
    dm = pert_det(base, pert, 1.0, complex(lam, ym), pole_radius)
    return (_tracked_step(base, pert, lam, y0, ym, d0, dm, pole_radius, depth - 1)
            + _tracked_step(base, pert, lam, ym, y1, dm, d1, pole_radius, depth - 1))


def ssf_total(base, pert, lam, pole_radius=POLE_RADIUS_DEFAULT,
              route_tol=ROUTE_TOL):
    """Total spectral shift xi(lam) = (1/pi) arg Delta_1(lam + i0).

    Both continuation routes (Herglotz chaining and contour tracking)
    are evaluated and must agree to `route_tol`; the chained value is
    returned.

    Raises
    ------
    BranchTrackingError
        If the routes disagree or a phase step cannot be resolved.
    PoleError
        If lam falls inside the pole-exclusion window of the base level.
    """
    chained = _chain_angle(base, pert, complex(lam, 0.0), pole_radius) / np.pi
    tracked = _contour_angle(base, pert, float(lam), pole_radius) / np.pi
    if abs(chained - tracked) > route_tol:
        raise BranchTrackingError(
            "route disagreement at lam=%g: chain %.12g vs contour %.12g"
            % (lam, chained, tracked)
        )
    return chained


def ssf_total_epsilon_route(base, pert, lam, eps_schedule=None,
                            pole_radius=POLE_RADIUS_DEFAULT,
                            convergence_tol=1e-6):
    """Validation route: Richardson limit of (1/pi) arg Delta(lam + i*eps).

    The argument at each height is continued by the same Herglotz
    chaining; the geometric epsilon schedule is extrapolated to zero by
    a Neville table.  Must agree with `ssf_total` to 1e-6.

    Raises
    ------
    ExtrapolationError
        If the last two Neville iterates differ by more than
        `convergence_tol`; the residual column is attached.
    """
    if eps_schedule is None:
        eps_schedule = np.geomspace(1e-1, 1e-6, 6)
    eps = np.asarray(eps_schedule, dtype=float)
    if len(eps) < 3 or np.any(np.diff(eps) >= 0):
        raise ValueError("eps_schedule must be decreasing with >= 3 entries")
    vals = np.array([
        _chain_angle(base, pert, complex(lam, e), pole_radius) / np.pi
        for e in eps
    ])
    T = vals.copy()
    residuals = []
    for j in range(1, len(eps)):
        prev_last = T[-1]
        for i in range(len(eps) - 1, j - 1, -1):
            T[i] = (eps[i - j] * T[i] - eps[i] * T[i - 1]) / (eps[i - j] - eps[i])
        residuals.append(abs(T[-1] - prev_last))
    if residuals[-1] > convergence_tol:
        raise ExtrapolationError(
            "epsilon extrapolation did not settle at lam=%g; residuals=%s"
            % (lam, residuals)
        )
    return float(T[-1])


def boundary_sample(base, pert, lam, route="closed_form",
                    pole_radius=POLE_RADIUS_DEFAULT):
    """Boundary record of the full-coupling determinant at lam + i0."""
    delta = pert_det(base, pert, 1.0, complex(lam, 0.0), pole_radius)
    if route == "closed_form":
        arg = _chain_angle(base, pert, complex(lam, 0.0), pole_radius)
    elif route == "contour":
        arg = _contour_angle(base, pert, float(lam), pole_radius)
    elif route == "epsilon_limit":
        arg = ssf_total_epsilon_route(base, pert, lam,
                                      pole_radius=pole_radius) * np.pi
    else:
        raise ValueError("unknown route %r" % route)
    return BoundarySample(float(lam), complex(delta), float(arg), route)
