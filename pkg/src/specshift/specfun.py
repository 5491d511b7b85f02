"""Cauchy transform of the Gaussian weight and its boundary values.

Every resolvent matrix element in this package reduces to one special
function, the Cauchy (Borel) transform of the squared Gaussian weight

    F(z) = int v(x)^2 / (x - z) dx,      v(x) = pi**(-1/4) * exp(-x^2/2),

taken over the whole real line.  For Im z > 0 the transform equals
``1j*sqrt(pi)*w(z)`` with ``w`` the Faddeeva function.  On the real axis
the boundary value ``F(lam + i0)`` is evaluated in closed form,

    F(lam + i0) = -2*dawson(lam) + 1j*sqrt(pi)*exp(-lam**2),

so no epsilon limit is ever taken here; epsilon limits exist elsewhere
only as an independent validation route.
"""

import numpy as np
from scipy import special

SQRT_PI = float(np.sqrt(np.pi))


class GaussianWeight:
    """The unit-norm Gaussian vector v(x) = pi**(-1/4) exp(-x^2/2).

    ``v`` is even, has unit L2 norm and is its own Fourier transform,
    which is why the derivative operator can be represented throughout
    as multiplication by the real variable with this channel vector.
    """

    def __call__(self, x):
        return np.pi ** -0.25 * np.exp(-0.5 * np.square(x))

    def density(self, x):
        """Squared weight v(x)^2 = exp(-x^2)/sqrt(pi)."""
        return np.exp(-np.square(x)) / SQRT_PI


def _check_upper_half_plane(z, name):
    if np.any(np.asarray(z).imag < 0.0):
        raise ValueError("%s requires Im z >= 0" % name)


def faddeeva(z):
    """Faddeeva function w(z) = exp(-z^2) erfc(-iz) on the closed UHP.

    Parameters
    ----------
    z : complex scalar or ndarray
        Spectral parameter with Im z >= 0.  Im z = 0 encodes the
        boundary point lam + i0.

    Returns
    -------
    complex scalar or ndarray
        w(z), continuous up to the real axis, relative accuracy
        around 1e-13.

    Raises
    ------
    ValueError
        If any input lies in the open lower half-plane.
    """
    zz = np.asarray(z, dtype=complex)
    _check_upper_half_plane(zz, "faddeeva")
    out = special.wofz(zz)
    return complex(out) if np.ndim(z) == 0 else out


def dawson(x):
    """Dawson integral D(x) = exp(-x^2) * int_0^x exp(t^2) dt.

    Odd, total on the reals; D(x) ~ 1/(2x) for large x.
    """
    out = special.dawsn(x)
    return float(out) if np.ndim(x) == 0 else out


def gaussian_borel(z):
    """Cauchy transform F(z) of the squared Gaussian weight.

    For Im z > 0 this is evaluated as ``1j*sqrt(pi)*faddeeva(z)``; on
    the real axis the closed-form boundary value through the Dawson
    integral is used, giving

        Re F(lam + i0) = -2*dawson(lam),
        Im F(lam + i0) = sqrt(pi)*exp(-lam**2).

    F is a Herglotz function: Im F(z) > 0 whenever Im z > 0.

    Parameters
    ----------
    z : complex scalar or ndarray
        Points in the closed upper half-plane.

    Returns
    -------
    complex scalar or ndarray
    """
    zz = np.asarray(z, dtype=complex)
    _check_upper_half_plane(zz, "gaussian_borel")
    out = np.asarray(1j * SQRT_PI * special.wofz(zz))
    on_axis = zz.imag == 0.0
    if np.any(on_axis):
        lam = zz.real
        boundary = -2.0 * special.dawsn(lam) + 1j * (SQRT_PI * np.exp(-lam * lam))
        out = np.where(on_axis, boundary, out)
    return complex(out) if np.ndim(z) == 0 else out
