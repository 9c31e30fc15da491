"""Numerics for SU(r) and SL(r, C): exp/log, adjoint action, invariant
pairing, and Haar sampling.

Group elements and algebra elements are plain complex ndarrays of shape
``(..., r, r)``; leading axes are batch axes and broadcast through every
operation here.  ``GroupSpec`` carries the family and the rank and is the
only typed wrapper at this level.

Conventions
-----------
* su(r) = traceless skew-Hermitian matrices, a real vector space of
  dimension r^2 - 1; sl(r, C) = traceless matrices, complex dimension
  r^2 - 1.
* The invariant pairing is ``trace(XY)`` (``TraceForm``) or ``-trace(XY)``
  (``NegativeTraceForm``).  The negative form is positive definite on
  su(r) and is the default there; no extra normalization factor is used.
* Matrix coordinates use an orthonormal algebra basis: orthonormal for
  ``-trace(XY)`` on su(r), orthonormal for the Hermitian form
  ``trace(X Y*)`` on sl(r, C).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatchError, OutsideDomainError

TOL_GROUP = 1e-10
TOL_ALG = 1e-10

TRACE_FORM = "trace"
NEGATIVE_TRACE_FORM = "neg_trace"

_BRANCH_TOL = 1e-12


@dataclass(frozen=True)
class GroupSpec:
    """Which matrix group is in play: family ``"SU"`` or ``"SLC"``, rank r >= 2."""

    family: str
    rank: int

    def __post_init__(self):
        if self.family not in ("SU", "SLC"):
            raise ValueError(f"unknown family {self.family!r} (want 'SU' or 'SLC')")
        if self.rank < 2:
            raise ValueError(f"rank must be >= 2, got {self.rank}")

    @property
    def dim(self) -> int:
        """Algebra dimension r^2 - 1 (real for SU, complex for SLC)."""
        return self.rank * self.rank - 1

    @property
    def is_unitary(self) -> bool:
        return self.family == "SU"

    @property
    def default_pairing(self) -> str:
        return NEGATIVE_TRACE_FORM if self.family == "SU" else TRACE_FORM

    def to_json(self) -> dict:
        return {"family": self.family, "rank": self.rank}

    @classmethod
    def from_json(cls, data: dict) -> "GroupSpec":
        return cls(family=data["family"], rank=int(data["rank"]))


# ---------------------------------------------------------------------------
# algebra basis and coordinates
# ---------------------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def algebra_basis(spec: GroupSpec) -> np.ndarray:
    """Orthonormal basis of the Lie algebra, shape (dim, r, r).

    su(r): i*(off-diagonal symmetric), (off-diagonal antisymmetric), and
    i*(traceless real diagonal) combinations, orthonormal for -trace(XY).
    sl(r, C): elementary off-diagonal matrices and traceless real
    diagonals, orthonormal for trace(X Y*).
    """
    r = spec.rank
    mats = []
    if spec.family == "SU":
        for j in range(r):
            for k in range(j + 1, r):
                A = np.zeros((r, r), dtype=complex)
                A[j, k] = 1.0
                A[k, j] = -1.0
                mats.append(A / np.sqrt(2.0))
                B = np.zeros((r, r), dtype=complex)
                B[j, k] = 1j
                B[k, j] = 1j
                mats.append(B / np.sqrt(2.0))
    else:
        for j in range(r):
            for k in range(r):
                if j != k:
                    E = np.zeros((r, r), dtype=complex)
                    E[j, k] = 1.0
                    mats.append(E)
    for l in range(1, r):
        d = np.zeros(r)
        d[:l] = 1.0
        d[l] = -float(l)
        d = d / np.linalg.norm(d)
        D = np.diag(d).astype(complex)
        mats.append(1j * D if spec.family == "SU" else D)
    basis = np.array(mats)
    if basis.shape[0] != spec.dim:
        raise AssertionError("basis size mismatch")
    return basis


@functools.lru_cache(maxsize=None)
def _pairing_gram(spec: GroupSpec, convention: str) -> np.ndarray:
    """Matrix <B_i, B_j> of the bilinear pairing on the algebra basis."""
    B = algebra_basis(spec)
    G = np.einsum("iab,jba->ij", B, B)
    if convention == NEGATIVE_TRACE_FORM:
        G = -G
    if spec.family == "SU":
        G = G.real
    return G


def algebra_coords(spec: GroupSpec, X: np.ndarray) -> np.ndarray:
    """Coordinates of X in the orthonormal basis; shape (..., dim).

    Real for SU (the basis is orthonormal for -trace), complex for SLC
    (orthonormal for the Hermitian trace form).
    """
    B = algebra_basis(spec)
    if spec.family == "SU":
        return -np.einsum("...ab,kba->...k", X, B).real
    return np.einsum("...ab,kba->...k", X, B.conj().transpose(0, 2, 1))


def coords_to_algebra(spec: GroupSpec, v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`algebra_coords`; shape (..., r, r)."""
    B = algebra_basis(spec)
    return np.einsum("...k,kab->...ab", v, B)


# ---------------------------------------------------------------------------
# invariant checks
# ---------------------------------------------------------------------------

def group_defect(spec: GroupSpec, g: np.ndarray) -> np.ndarray:
    """Max violation of the group invariants (det = 1, unitarity for SU)."""
    r = spec.rank
    d = np.abs(np.linalg.det(g) - 1.0)
    if spec.is_unitary:
        gram = np.einsum("...ij,...kj->...ik", g, g.conj())
        d = np.maximum(
            d,
            np.abs(gram - np.eye(r)).max(axis=(-2, -1)),
        )
    return d


def algebra_defect(spec: GroupSpec, X: np.ndarray) -> np.ndarray:
    """Max violation of the algebra invariants (traceless, skew-Hermitian for SU)."""
    d = np.abs(np.trace(X, axis1=-2, axis2=-1))
    if spec.is_unitary:
        d = np.maximum(d, np.abs(X + np.swapaxes(X, -2, -1).conj()).max(axis=(-2, -1)))
    return d


def is_group_element(spec: GroupSpec, g: np.ndarray, tol: float = TOL_GROUP) -> bool:
    return bool(np.all(group_defect(spec, g) <= tol))


def is_algebra_element(spec: GroupSpec, X: np.ndarray, tol: float = TOL_ALG) -> bool:
    return bool(np.all(algebra_defect(spec, X) <= tol))


def project_to_algebra(spec: GroupSpec, X: np.ndarray) -> np.ndarray:
    """Nearest algebra element: remove trace, and the Hermitian part for SU."""
    r = spec.rank
    if spec.is_unitary:
        X = 0.5 * (X - np.swapaxes(X, -2, -1).conj())
    tr = np.trace(X, axis1=-2, axis2=-1)
    return X - tr[..., None, None] * np.eye(r) / r


def project_to_group(spec: GroupSpec, M: np.ndarray) -> np.ndarray:
    """Retract onto the group: polar factor (SU) and det-phase normalization."""
    r = spec.rank
    if spec.is_unitary:
        U, _, Vh = np.linalg.svd(M)
        M = U @ Vh
    det = np.linalg.det(M)
    if spec.is_unitary:
        # det is a phase; divide by its r-th root
        M = M * np.exp(-1j * np.angle(det) / r)[..., None, None]
    else:
        M = M / (det ** (1.0 / r))[..., None, None]
    return M


# ---------------------------------------------------------------------------
# exp / log
# ---------------------------------------------------------------------------

def _exp_su2(X: np.ndarray) -> np.ndarray:
    """Closed-form exponential on su(2): X^2 = -theta^2 I."""
    theta2 = (-np.einsum("...ab,...ba->...", X, X).real) / 2.0
    theta = np.sqrt(np.maximum(theta2, 0.0))
    safe = np.where(theta > 1e-30, theta, 1.0)
    sinc = np.where(theta > 1e-30, np.sin(theta) / safe, 1.0 - theta2 / 6.0)
    return np.cos(theta)[..., None, None] * np.eye(2) + sinc[..., None, None] * X


def exp(spec: GroupSpec, X: np.ndarray) -> np.ndarray:
    """Group exponential, retracted onto the group.

    Scaling-and-squaring Pade core (scipy) with a closed-form SU(2) path;
    the result is re-projected so invariant drift cannot accumulate over
    long solver runs.  exp(0) is the identity exactly.
    """
    X = np.asarray(X, dtype=complex)
    if not np.all(np.isfinite(X)):
        raise ValueError("exp requires finite entries")
    if spec.family == "SU" and spec.rank == 2:
        return _exp_su2(X)
    if X.ndim == 2:
        if not X.any():
            return np.eye(spec.rank, dtype=complex)
        return project_to_group(spec, scipy.linalg.expm(X))
    out = np.empty_like(X)
    flat = X.reshape(-1, spec.rank, spec.rank)
    oflat = out.reshape(-1, spec.rank, spec.rank)
    for i in range(flat.shape[0]):
        oflat[i] = exp(spec, flat[i])
    return out


def _log_su2(g: np.ndarray, branch_tol: float) -> np.ndarray:
    """Closed-form principal log on SU(2); raises near trace = -2."""
    ct = 0.5 * np.trace(g, axis1=-2, axis2=-1).real
    ct = np.clip(ct, -1.0, 1.0)
    if np.any(ct < -1.0 + branch_tol):
        raise OutsideDomainError("eigenvalue at the branch cut (trace near -2)")
    theta = np.arccos(ct)
    A = 0.5 * (g - np.swapaxes(g, -2, -1).conj())  # sin(theta) * (unit su(2) dir)
    st = np.sin(theta)
    safe = np.where(st > 1e-9, st, 1.0)
    fac = np.where(st > 1e-9, theta / safe, 1.0 + theta**2 / 6.0)
    return fac[..., None, None] * A


def log_near_identity(spec: GroupSpec, g: np.ndarray,
                      branch_tol: float = _BRANCH_TOL) -> np.ndarray:
    """Principal matrix logarithm, projected onto the algebra.

    Well-conditioned when ``||g - I|| < 1``; defined on the whole
    principal branch.  Raises :class:`OutsideDomainError` when an
    eigenvalue sits within ``branch_tol`` of the cut (e.g. eigenvalue -1
    for a unitary matrix).
    """
    g = np.asarray(g, dtype=complex)
    if spec.family == "SU" and spec.rank == 2:
        return _log_su2(g, branch_tol)
    if g.ndim > 2:
        out = np.empty_like(g)
        flat = g.reshape(-1, spec.rank, spec.rank)
        oflat = out.reshape(-1, spec.rank, spec.rank)
        for i in range(flat.shape[0]):
            oflat[i] = log_near_identity(spec, flat[i], branch_tol)
        return out
    T, Z = scipy.linalg.schur(g, output="complex")
    lam = np.diag(T)
    # principal branch excludes the negative real axis
    on_cut = (lam.real < 0) & (np.abs(lam.imag) < branch_tol * np.abs(lam.real))
    if np.any(on_cut):
        raise OutsideDomainError("eigenvalue on the negative real axis")
    if spec.is_unitary:
        L = Z @ np.diag(np.log(lam)) @ Z.conj().T
    else:
        L = scipy.linalg.logm(g)
    return project_to_algebra(spec, L)


# ---------------------------------------------------------------------------
# adjoint action and pairing
# ---------------------------------------------------------------------------

def group_inverse(spec: GroupSpec, g: np.ndarray) -> np.ndarray:
    if spec.is_unitary:
        return np.swapaxes(g, -2, -1).conj()
    return np.linalg.inv(g)


def adjoint(spec: GroupSpec, g: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Ad(g) X = g X g^-1."""
    return g @ X @ group_inverse(spec, g)


def adjoint_matrix(spec: GroupSpec, g: np.ndarray) -> np.ndarray:
    """Matrix of Ad(g) in the orthonormal algebra basis; shape (..., dim, dim).

    Orthogonal for SU(r) (the pairing is Ad-invariant and definite).
    """
    B = algebra_basis(spec)
    gi = group_inverse(spec, g)
    AdB = np.einsum("...ab,kbc,...cd->...kad", g, B, gi)
    if spec.family == "SU":
        return -np.einsum("...kab,iba->...ik", AdB, B).real
    return np.einsum("...kab,iba->...ik", AdB, B.conj().transpose(0, 2, 1))


def ad_algebra_matrix(spec: GroupSpec, K: np.ndarray) -> np.ndarray:
    """Matrix of ad(K) = [K, .] in the orthonormal basis; shape (..., dim, dim)."""
    B = algebra_basis(spec)
    KB = np.einsum("...ab,kbc->...kac", K, B) - np.einsum("kab,...bc->...kac", B, K)
    if spec.family == "SU":
        return -np.einsum("...kab,iba->...ik", KB, B).real
    return np.einsum("...kab,iba->...ik", KB, B.conj().transpose(0, 2, 1))


def pairing(spec: GroupSpec, X: np.ndarray, Y: np.ndarray,
            convention: str | None = None):
    """Invariant bilinear pairing of algebra elements.

    ``TraceForm`` is trace(XY); ``NegativeTraceForm`` is -trace(XY) and is
    positive definite on su(r).  Returns real values for SU, complex for
    SLC.  Default convention: NegativeTraceForm for SU, TraceForm for SLC.
    """
    if convention is None:
        convention = spec.default_pairing
    val = np.einsum("...ab,...ba->...", X, Y)
    if convention == NEGATIVE_TRACE_FORM:
        val = -val
    elif convention != TRACE_FORM:
        raise ValueError(f"unknown pairing convention {convention!r}")
    if spec.family == "SU":
        val = val.real
    if val.ndim == 0:
        return val.item()
    return val


def pairing_norm(spec: GroupSpec, X: np.ndarray) -> np.ndarray:
    """Norm induced by the definite pairing (Frobenius for SU; Hermitian for SLC)."""
    if spec.family == "SU":
        v = pairing(spec, X, X, NEGATIVE_TRACE_FORM)
        return np.sqrt(np.maximum(np.asarray(v, dtype=float), 0.0))
    v = np.einsum("...ab,...ab->...", X, X.conj()).real
    return np.sqrt(np.maximum(v, 0.0))


# ---------------------------------------------------------------------------
# random elements
# ---------------------------------------------------------------------------

def haar_sample(spec: GroupSpec, rng: np.random.Generator,
                size: int | tuple | None = None) -> np.ndarray:
    """Random group elements.

    SU(r): exact Haar distribution via Ginibre + QR with the positive-
    diagonal phase fix, then a determinant phase correction into SU(r).
    SL(r, C): exp of a Gaussian algebra element -- there is no Haar
    probability measure on the noncompact group; this is a documented
    stand-in for seeding solvers only.
    """
    shape = () if size is None else (size if isinstance(size, tuple) else (size,))
    r = spec.rank
    if spec.family == "SU":
        z = rng.standard_normal(shape + (r, r)) + 1j * rng.standard_normal(shape + (r, r))
        q, rmat = np.linalg.qr(z / np.sqrt(2.0))
        diag = np.diagonal(rmat, axis1=-2, axis2=-1)
        q = q * (diag / np.abs(diag))[..., None, :]
        det = np.linalg.det(q)
        return q * np.exp(-1j * np.angle(det) / r)[..., None, None]
    X = random_algebra(spec, rng, scale=1.0, size=size)
    return exp(spec, X)


def random_algebra(spec: GroupSpec, rng: np.random.Generator, scale: float = 1.0,
                   size: int | tuple | None = None) -> np.ndarray:
    """Gaussian algebra element with coordinate scale ``scale``."""
    shape = () if size is None else (size if isinstance(size, tuple) else (size,))
    d = spec.dim
    if spec.family == "SU":
        v = rng.standard_normal(shape + (d,)) * scale
    else:
        v = (rng.standard_normal(shape + (d,))
             + 1j * rng.standard_normal(shape + (d,))) * (scale / np.sqrt(2.0))
    return coords_to_algebra(spec, v)


# ---------------------------------------------------------------------------
# JSON matrix encoding: rows of [re, im] pairs
# ---------------------------------------------------------------------------

def matrix_to_json(M: np.ndarray) -> list:
    M = np.asarray(M, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def matrix_from_json(data: list) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise DimensionMismatchError("matrix JSON must be rows of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]
