"""Operator model: multiplication-plus-level base operators and rank <= 2
perturbations supported on the Gaussian channel and the level coordinate.

The Hilbert space is L2(R) (+) C.  A base operator is M (+) a0, where M
is multiplication by the real variable with the unit Gaussian ``v`` as
channel vector and a0 is one real level.  Perturbations are self-adjoint
with rank at most two, supported on span{(v, 0), (0, 1)}; compressed to
that two-dimensional subspace the coupled family reads [[1, 1], [1, a]].

All resolvent data reduces to two scalars: the Gaussian Cauchy transform
F(z) on the channel and 1/(a0 - z) on the level coordinate.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .specfun import gaussian_borel

RANK_TOL = 1e-14
POLE_RADIUS_DEFAULT = 1e-2


class PoleError(ValueError):
    """Raised when a boundary evaluation lands on a level resonance."""


@dataclass(frozen=True)
class BaseOperator:
    """M (+) a0: multiplication by x on the Gaussian channel plus one level.

    Parameters
    ----------
    level : float
        The value a0 of the one-dimensional summand.
    """

    level: float

    def __post_init__(self):
        if not np.isfinite(self.level):
            raise ValueError("level must be finite")


@dataclass(frozen=True)
class FiniteRankPerturbation:
    """Rank <= 2 self-adjoint perturbation sum_j mu_j (psi_j)(psi_j)^T.

    Each vector psi_j = (c_j * v, d_j) couples the Gaussian channel with
    weight c_j and the level coordinate with weight d_j.  The vectors are
    orthonormal: c_j^2 + d_j^2 = 1 and distinct vectors are orthogonal.

    Parameters
    ----------
    mus : tuple of float
        Nonzero eigenvalues (zero modes dropped), at most two.
    vecs : tuple of (float, float)
        The coefficients (c_j, d_j), one pair per eigenvalue.
    """

    mus: tuple
    vecs: tuple

    def __post_init__(self):
        if len(self.mus) != len(self.vecs):
            raise ValueError("one vector per eigenvalue required")
        if not 1 <= len(self.mus) <= 2:
            raise ValueError("rank must be 1 or 2")
        V = np.asarray(self.vecs, dtype=float)
        gram = V @ V.T
        if np.abs(gram - np.eye(len(self.mus))).max() > 1e-14:
            raise ValueError("perturbation vectors are not orthonormal")
        if min(abs(m) for m in self.mus) <= RANK_TOL:
            raise ValueError("zero eigenvalues must be dropped")

    @property
    def rank(self):
        return len(self.mus)

    @property
    def mu_array(self):
        return np.asarray(self.mus, dtype=float)

    @property
    def coeff_array(self):
        """(rank, 2) array of (c_j, d_j) rows."""
        return np.asarray(self.vecs, dtype=float)

    @property
    def trace_norm(self):
        return float(np.abs(self.mu_array).sum())

    def reconstruct(self):
        """The compressed 2x2 matrix sum_j mu_j (c_j,d_j)(c_j,d_j)^T."""
        V = self.coeff_array
        return (V.T * self.mu_array) @ V


@dataclass(frozen=True)
class OperatorPair:
    """Ordered pair base -> base + pert, or the reverse.

    orientation +1 means the spectral shift of (base -> base + pert);
    orientation -1 means the reversed pair, for which every spectral
    shift flavor is the negation of the direct one.
    """

    base: BaseOperator
    pert: FiniteRankPerturbation
    orientation: int = 1
    label: str = ""

    def __post_init__(self):
        if self.orientation not in (-1, 1):
            raise ValueError("orientation must be +1 or -1")


def reduced_matrix(a):
    """Compression of the coupled perturbation to span{(v,0),(0,1)}.

    Returns the 2x2 symmetric matrix [[1, 1], [1, a]].
    """
    return np.array([[1.0, 1.0], [1.0, float(a)]])


def make_v_a(a):
    """Coupled perturbation with level parameter ``a`` as eigen-terms.

    The spectral decomposition of ``reduced_matrix(a)`` with zero modes
    dropped; eigenvalues are sorted descending and each vector's sign is
    normalized (c_j >= 0) so the construction is deterministic.
    """
    w, U = np.linalg.eigh(reduced_matrix(a))
    keep = np.abs(w) > RANK_TOL
    w, U = w[keep], U[:, keep]
    order = np.argsort(-w)
    mus, vecs = [], []
    for j in order:
        c, d = U[0, j], U[1, j]
        if c < 0 or (c == 0 and d < 0):
            c, d = -c, -d
        mus.append(float(w[j]))
        vecs.append((float(c), float(d)))
    return FiniteRankPerturbation(tuple(mus), tuple(vecs))


def make_diag_pert():
    """Rank-one perturbation 2*(0,1)(0,1)^T acting on the level only."""
    return FiniteRankPerturbation((2.0,), ((0.0, 1.0),))


def diagonal_pair():
    """Level moves -1 -> +1, Gaussian channel untouched."""
    return OperatorPair(BaseOperator(-1.0), make_diag_pert(), 1, "diagonal")


def rank_one_pair():
    """Base with level -1, coupled rank-one perturbation (a = 1)."""
    return OperatorPair(BaseOperator(-1.0), make_v_a(1.0), 1, "rank1")


def rank_two_pair_reversed():
    """Reversed pair over the base with level +1 and the rank-two
    perturbation (a = -1): the orientation runs from the perturbed
    operator back to the base."""
    return OperatorPair(BaseOperator(1.0), make_v_a(-1.0), -1, "rank2_reversed")


PAIR_FACTORIES = {
    "diagonal": diagonal_pair,
    "rank1": rank_one_pair,
    "rank2_reversed": rank_two_pair_reversed,
}


def _check_poles(level, z, pole_radius):
    zz = np.asarray(z, dtype=complex)
    on_axis = zz.imag == 0.0
    if np.any(on_axis & (np.abs(zz.real - level) <= pole_radius)):
        raise PoleError(
            "boundary point within %g of the level %g" % (pole_radius, level)
        )


def resolvent_gram(base, pert, z, pole_radius=POLE_RADIUS_DEFAULT):
    """Gram matrix G(z)_{jk} = <psi_j, (base - z)^-1 psi_k>.

    Entries are ``c_j*c_k*F(z) + d_j*d_k/(a0 - z)`` with F the Gaussian
    Cauchy transform.  G is complex symmetric and its imaginary part is
    positive semidefinite for Im z > 0.

    Parameters
    ----------
    base : BaseOperator
    pert : FiniteRankPerturbation
    z : complex scalar or ndarray
        Im z >= 0; boundary points must stay `pole_radius` away from
        the level a0.

    Returns
    -------
    ndarray, shape z.shape + (rank, rank)
    """
    _check_poles(base.level, z, pole_radius)
    zz = np.asarray(z, dtype=complex)
    F = np.asarray(gaussian_borel(zz))
    s = 1.0 / (base.level - zz)
    V = pert.coeff_array
    CC = np.outer(V[:, 0], V[:, 0])
    DD = np.outer(V[:, 1], V[:, 1])
    G = F[..., None, None] * CC + s[..., None, None] * DD
    return G


def perturbed_gram(base, pert, r, z, pole_radius=POLE_RADIUS_DEFAULT):
    """Sandwich of the coupled resolvent, G(z) (I + r M G(z))^-1.

    This is the Gram matrix of the vectors psi_j with respect to the
    operator base + r*pert, obtained from the unperturbed one by the
    finite-rank resolvent formula.  Only ranks 1 and 2 occur, so the
    2x2 inverse is written out explicitly.
    """
    G = resolvent_gram(base, pert, z, pole_radius)
    mus = pert.mu_array
    if pert.rank == 1:
        return G / (1.0 + r * mus[0] * G[..., 0, 0])[..., None, None]
    a11 = 1.0 + r * mus[0] * G[..., 0, 0]
    a12 = r * mus[0] * G[..., 0, 1]
    a21 = r * mus[1] * G[..., 1, 0]
    a22 = 1.0 + r * mus[1] * G[..., 1, 1]
    det = a11 * a22 - a12 * a21
    inv = np.empty_like(G)
    inv[..., 0, 0] = a22
    inv[..., 0, 1] = -a12
    inv[..., 1, 0] = -a21
    inv[..., 1, 1] = a11
    return G @ inv / det[..., None, None]


def _span_sandwich(base, pert, r, z, pole_radius):
    """Resolvent of base + r*pert compressed to the fixed frame
    {(v, 0), (0, 1)}, independent of how the perturbation is factored."""
    zz = complex(z)
    F = gaussian_borel(zz)
    s = 1.0 / (base.level - zz)
    # <e_i, R0 e_j> and <e_i, R0 psi_j> in the fixed frame
    R0 = np.array([[F, 0.0], [0.0, s]])
    V = pert.coeff_array.astype(complex)
    mus = pert.mu_array
    B = R0 @ V.T                      # (2, rank): columns <e_i, R0 psi_j>
    G = resolvent_gram(base, pert, zz, pole_radius)
    A = np.eye(pert.rank) + (G * r) * mus[None, :]
    # R = R0 - r R0 Psi M (I + r G M)^-1 Psi^* R0
    middle = np.linalg.solve(A.T, (B * (r * mus[None, :])).T)
    return R0 - (middle.T @ (V @ R0))


def operator_identity_check(test_points=None, pole_radius=POLE_RADIUS_DEFAULT):
    """Residual of the identity: level(-1) + coupled(a=1) equals
    level(+1) + coupled(a=-1) as operators.

    Both sides are compressed to the frame {(v, 0), (0, 1)} through the
    finite-rank resolvent formula at full coupling; the returned value
    is the largest entrywise difference over the test points.
    """
    if test_points is None:
        test_points = [1j, 2j, 0.5 + 1j, -1.3 + 0.7j, 3 + 2j,
                       -2 + 0.2j, 0.1 + 5j, 4 + 1j, -4 + 2.5j, 0.25 + 0.05j]
    left = (BaseOperator(-1.0), make_v_a(1.0))
    right = (BaseOperator(1.0), make_v_a(-1.0))
    worst = 0.0
    for z in test_points:
        W1 = _span_sandwich(left[0], left[1], 1.0, z, pole_radius)
        W2 = _span_sandwich(right[0], right[1], 1.0, z, pole_radius)
        worst = max(worst, float(np.abs(W1 - W2).max()))
    return worst


@lru_cache(maxsize=None)
def det_weights(pert):
    """Scalar weights (w_f, w_s, w_x) of the coupling determinant.

    det(I + r M G(z)) = 1 + r*(w_f*F(z) + w_s*s(z)) + r^2 * w_x * F(z)*s(z)

    with s(z) = 1/(a0 - z).  The weights are the entries of the
    compressed perturbation: w_f = sum mu c^2, w_s = sum mu d^2, and
    w_x = mu_1 mu_2 (c_1 d_2 - c_2 d_1)^2 for rank two (0 for rank one).
    """
    V = pert.coeff_array
    mus = pert.mu_array
    w_f = float((mus * V[:, 0] ** 2).sum())
    w_s = float((mus * V[:, 1] ** 2).sum())
    if pert.rank == 2:
        cross = V[0, 0] * V[1, 1] - V[1, 0] * V[0, 1]
        w_x = float(mus[0] * mus[1] * cross * cross)
    else:
        w_x = 0.0
    return w_f, w_s, w_x
