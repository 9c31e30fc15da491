"""Points of the representation variety, Gauss-Newton projection onto it,
irreducibility, and the cocycle/coboundary/cohomology splitting that
realizes the tangent space.

The variety is the fiber of the relator word over a central target z0,
with boundary generators pinned to prescribed conjugacy classes.  Interior
generators move freely (right translation by exp of the step); boundary
generators move only by conjugation, so the class constraint is exact at
every iterate rather than penalized.

Rank decisions are made from singular-value gaps, never from fixed
epsilons: ``split_rank`` finds the largest relative gap and reports its
quality, and a :class:`RankDeficiencyWarning` is emitted when the gap is
weaker than ``1/gap_tol``.  Near reducible points that warning is the
contract -- results are still returned.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from . import liegroup as lg
from . import presentation as pres
from .errors import (
    DimensionMismatchError,
    NoConvergenceError,
    OutsideDomainError,
    RankDeficiencyWarning,
)
from .liegroup import GroupSpec
from .presentation import GeneratorTuple, SurfacePresentation, TangentVector

TOL_FLAT = 1e-9
GAP_TOL = 1e-6

_ZERO_FLOOR = 1e-11


@dataclass(frozen=True)
class ConjugacyClassSpec:
    """Boundary conjugacy classes plus the central target of the relator.

    ``representatives[k]`` fixes the class of c_k (its orbit under
    conjugation); ``target`` is the central element z0 the relator must
    hit.  For SU(r) the target is zeta*I with zeta an r-th root of unity.
    """

    spec: GroupSpec
    representatives: tuple = ()
    target: np.ndarray | None = None

    def __post_init__(self):
        r = self.spec.rank
        reps = tuple(np.asarray(m, dtype=complex) for m in self.representatives)
        object.__setattr__(self, "representatives", reps)
        tgt = self.target
        if tgt is None:
            tgt = np.eye(r, dtype=complex)
        tgt = np.asarray(tgt, dtype=complex)
        object.__setattr__(self, "target", tgt)
        zeta = np.trace(tgt) / r
        if np.abs(tgt - zeta * np.eye(r)).max() > lg.TOL_GROUP:
            raise ValueError("target must be a central (scalar) element")
        if abs(zeta**r - 1.0) > 1e-8:
            raise ValueError("target scalar must be an r-th root of unity")
        for m in reps:
            if m.shape != (r, r):
                raise DimensionMismatchError("class representative has wrong shape")

    @property
    def boundary_count(self) -> int:
        return len(self.representatives)

    def tangent_basis(self, k: int) -> np.ndarray:
        """Orthonormal basis of image(Ad(c_k^-1) - 1) at the representative.

        Shape (dim, w_k); empty second axis for a central class.  The
        same subspace at a conjugate of the representative comes from
        :func:`boundary_tangent_basis`.
        """
        return boundary_tangent_basis(self.spec, self.representatives[k])

    def to_json(self) -> dict:
        return {
            "representatives": [lg.matrix_to_json(m) for m in self.representatives],
            "target": lg.matrix_to_json(self.target),
        }

    @classmethod
    def from_json(cls, spec: GroupSpec, data: dict) -> "ConjugacyClassSpec":
        reps = tuple(lg.matrix_from_json(m) for m in data.get("representatives", []))
        tgt = lg.matrix_from_json(data["target"]) if "target" in data else None
        return cls(spec, reps, tgt)


@dataclass(frozen=True)
class RepresentationPoint:
    """A solved tuple with its recorded relator residual."""

    tuple: GeneratorTuple
    residual_norm: float
    irreducible: bool | None = None

    @property
    def spec(self) -> GroupSpec:
        return self.tuple.spec

    def with_irreducible(self, flag: bool) -> "RepresentationPoint":
        return replace(self, irreducible=flag)

    def to_json(self) -> dict:
        data = self.tuple.to_json()
        data["residual"] = self.residual_norm
        data["irreducible"] = self.irreducible
        return data

    @classmethod
    def from_json(cls, spec: GroupSpec, data: dict) -> "RepresentationPoint":
        t = GeneratorTuple.from_json(spec, data)
        return cls(t, float(data["residual"]), data.get("irreducible"))


@dataclass(frozen=True)
class CohomologyBasis:
    """Orthonormal bases of cocycles, coboundaries, and their complement.

    ``z1`` spans {H : dPi(H) = 0, boundary components class-tangent},
    ``b1`` spans the image of the coboundary map, and ``h1`` spans the
    orthocomplement of b1 inside z1.  Coordinate matrices (columns in the
    slot-major algebra basis) are kept alongside the tangent-vector lists.
    """

    z1: list
    b1: list
    h1: list
    z_coords: np.ndarray = field(repr=False)
    b_coords: np.ndarray = field(repr=False)
    h_coords: np.ndarray = field(repr=False)
    dpi_singular_values: np.ndarray = field(repr=False)
    gap_quality: float = float("inf")

    def dims(self) -> tuple[int, int, int]:
        return (len(self.z1), len(self.b1), len(self.h1))

    def to_json(self) -> dict:
        return {
            "Z1": [v.to_json() for v in self.z1],
            "B1": [v.to_json() for v in self.b1],
            "H1": [v.to_json() for v in self.h1],
        }


# ---------------------------------------------------------------------------
# rank splitting
# ---------------------------------------------------------------------------

def split_rank(svals: np.ndarray, gap_tol: float = GAP_TOL,
               zero_floor: float = _ZERO_FLOOR) -> tuple[int, float, bool]:
    """Numerical rank from the largest relative singular-value gap.

    Returns ``(rank, gap_quality, clean)`` where ``gap_quality`` is the
    ratio of the smallest kept to the largest discarded singular value
    (inf when nothing is discarded) and ``clean`` is False when the gap is
    weaker than ``1/gap_tol``.
    """
    s = np.asarray(svals, dtype=float)
    if s.size == 0 or s[0] <= zero_floor:
        return 0, float("inf"), True
    # sentinel models an empty kernel at machine scale
    ext = np.append(s, 1e-16 * s[0])
    ratios = ext[1:] / ext[:-1]
    idx = int(np.argmin(ratios))
    rank = idx + 1
    quality = 1.0 / ratios[idx] if ratios[idx] > 0 else float("inf")
    clean = quality >= 1.0 / gap_tol
    return rank, float(quality), clean


def _range_basis(M: np.ndarray, gap_tol: float = GAP_TOL):
    """Orthonormal basis of the numerical column space of M."""
    if M.shape[1] == 0:
        return np.zeros((M.shape[0], 0)), float("inf"), True
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    rank, quality, clean = split_rank(s, gap_tol)
    return U[:, :rank], quality, clean


# ---------------------------------------------------------------------------
# class membership helpers
# ---------------------------------------------------------------------------

def _sorted_eigenvalues(spec: GroupSpec, M: np.ndarray) -> np.ndarray:
    w = np.linalg.eigvals(M)
    return w[np.argsort(np.angle(w), kind="stable")]


def class_distance(spec: GroupSpec, M: np.ndarray, rep: np.ndarray) -> float:
    """Eigenvalue-multiset distance (sorted by phase) between M and the class of rep."""
    a = _sorted_eigenvalues(spec, M)
    b = _sorted_eigenvalues(spec, rep)
    return float(np.abs(a - b).max())


def project_to_class(spec: GroupSpec, M: np.ndarray, rep: np.ndarray) -> np.ndarray:
    """Replace the spectrum of M by the class representative's, keeping frames.

    Intended for SU(r) (normal matrices); pairs eigenvalues sorted by
    phase, so it is exact when M is already in the class and a nearby
    retraction otherwise.
    """
    T, Z = scipy.linalg.schur(M, output="complex")
    lam = np.diag(T)
    order = np.argsort(np.angle(lam), kind="stable")
    target = _sorted_eigenvalues(spec, rep)
    new = np.empty_like(lam)
    new[order] = target
    return Z @ np.diag(new) @ Z.conj().T


# ---------------------------------------------------------------------------
# constrained tangent embedding
# ---------------------------------------------------------------------------

def constrained_embedding(t: GeneratorTuple, classes: ConjugacyClassSpec) -> np.ndarray:
    """Orthonormal columns spanning the admissible slot directions.

    Interior slots contribute the full algebra; boundary slot k only the
    class-tangent subspace image(Ad(c_k^-1) - 1).  Shape (n*dim, D_c).
    For m = 0 this is the identity.
    """
    spec = t.spec
    d = spec.dim
    n = t.n_generators
    g = t.genus
    m = t.boundary_count
    if m == 0:
        return np.eye(n * d)
    cols = []
    for s in range(2 * g):
        blk = np.zeros((n * d, d))
        blk[s * d:(s + 1) * d] = np.eye(d)
        cols.append(blk)
    for k in range(m):
        W = boundary_tangent_basis(spec, t.c(k))
        blk = np.zeros((n * d, W.shape[1]))
        blk[(2 * g + k) * d:(2 * g + k + 1) * d] = W
        cols.append(blk)
    return np.concatenate(cols, axis=1)


def boundary_tangent_basis(spec: GroupSpec, c: np.ndarray) -> np.ndarray:
    """Orthonormal basis of image(Ad(c^-1) - 1) at the point's own c."""
    A = lg.adjoint_matrix(spec, lg.group_inverse(spec, c)) - np.eye(spec.dim)
    U, s, _ = np.linalg.svd(A)
    rank, _, _ = split_rank(s)
    return U[:, :rank]


# ---------------------------------------------------------------------------
# Gauss-Newton projection
# ---------------------------------------------------------------------------

def flat_residual(spec: GroupSpec, mats: np.ndarray, g: int, m: int,
                  target: np.ndarray) -> np.ndarray:
    """Algebra coordinates of log(Pi . z0^-1); shape (..., dim)."""
    P = pres.relator_product(spec, mats, g, m)
    z0i = lg.group_inverse(spec, target)
    return lg.algebra_coords(spec, lg.log_near_identity(spec, P @ z0i))


def _su2_log_trace_guard(spec: GroupSpec, W: np.ndarray) -> np.ndarray | None:
    """For batched SU(2): mask of samples whose relator sits at the branch cut."""
    if not (spec.family == "SU" and spec.rank == 2):
        return None
    ct = 0.5 * np.trace(W, axis1=-2, axis2=-1).real
    return ct < -1.0 + 1e-12


def _batch_residual(spec, mats, g, m, z0i):
    """Residual coords with a per-sample branch-cut mask (batch-safe)."""
    P = pres.relator_product(spec, mats, g, m)
    W = P @ z0i
    bad = _su2_log_trace_guard(spec, W)
    if bad is not None:
        if np.any(bad):
            # park failed samples at the identity residual; caller nudges them
            W = np.where(bad[..., None, None], np.eye(2, dtype=complex), W)
        R = lg.algebra_coords(spec, lg.log_near_identity(spec, W))
        return R, (bad if bad is not None else np.zeros(R.shape[:-1], dtype=bool))
    # generic path: per-sample scalar logs with explicit error capture
    batch = W.shape[:-2]
    flatW = W.reshape((-1,) + W.shape[-2:])
    R = np.zeros((flatW.shape[0], spec.dim),
                 dtype=float if spec.family == "SU" else complex)
    bad = np.zeros(flatW.shape[0], dtype=bool)
    for i in range(flatW.shape[0]):
        try:
            R[i] = lg.algebra_coords(spec, lg.log_near_identity(spec, flatW[i]))
        except OutsideDomainError:
            bad[i] = True
    return R.reshape(batch + (spec.dim,)), bad.reshape(batch)


def _constrained_jacobian(spec, mats, g, m):
    """Batched Jacobian of the residual w.r.t. admissible moves.

    Interior slots: right-trivialized velocity = step.  Boundary slot k:
    a conjugator direction X acts by c -> exp(X) c exp(-X) with velocity
    (1 - Ad(c)) X, which keeps the class exact; the conjugator is
    parametrized over the full algebra (the centralizer redundancy is
    absorbed by the min-norm damped solve).  Returns (..., dim, n*dim).
    """
    D = pres.relator_differential_matrix(spec, mats, g, m)
    d = spec.dim
    if m == 0:
        return D
    blocks = [D[..., :, : 2 * g * d]]
    for k in range(m):
        c = mats[..., 2 * g + k, :, :]
        conj_vel = np.eye(d) - lg.adjoint_matrix(spec, c)
        blk = D[..., :, (2 * g + k) * d:(2 * g + k + 1) * d] @ conj_vel
        blocks.append(blk)
    return np.concatenate(blocks, axis=-1)


def _apply_step(spec, mats, g, m, step):
    """Move a batch of tuples by a stacked step (conjugation on the boundary)."""
    d = spec.dim
    n = mats.shape[-3]
    out = mats.copy()
    W = step.reshape(step.shape[:-1] + (n, d))
    move = lg.exp(spec, lg.coords_to_algebra(spec, W[..., : 2 * g, :]))
    out[..., : 2 * g, :, :] = move @ mats[..., : 2 * g, :, :]
    for k in range(m):
        X = lg.coords_to_algebra(spec, W[..., 2 * g + k, :])
        U = lg.exp(spec, X)
        c = mats[..., 2 * g + k, :, :]
        out[..., 2 * g + k, :, :] = U @ c @ lg.group_inverse(spec, U)
    return out


def project_batch(spec: GroupSpec, mats: np.ndarray, g: int, m: int,
                  classes: ConjugacyClassSpec, *, tol: float = 1e-12,
                  max_iter: int = 200, damping: float = 1.0,
                  rng: np.random.Generator | None = None):
    """Damped Gauss-Newton flattening of a batch of tuples.

    Returns ``(mats, residual_norms, iterations, converged)`` with leading
    batch axes preserved.  Branch-cut hits are retried with small random
    interior nudges; persistent failures simply stay unconverged.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    mats = np.array(mats, dtype=complex)
    batch = mats.shape[:-3]
    z0i = lg.group_inverse(spec, classes.target)
    R, bad = _batch_residual(spec, mats, g, m, z0i)
    rnorm = np.linalg.norm(R, axis=-1)
    rnorm = np.where(bad, np.inf, rnorm)
    iters = np.zeros(batch, dtype=int)
    for it in range(max_iter):
        active = ~(rnorm <= tol)
        if not np.any(active):
            break
        nudge = bad
        if np.any(nudge):
            kick = lg.random_algebra(spec, rng, scale=0.2,
                                     size=batch + (2 * g,))
            moved = lg.exp(spec, kick) @ mats[..., : 2 * g, :, :]
            sel = nudge[..., None, None, None]
            mats[..., : 2 * g, :, :] = np.where(sel, moved, mats[..., : 2 * g, :, :])
            R, bad = _batch_residual(spec, mats, g, m, z0i)
            rnorm = np.where(bad, np.inf, np.linalg.norm(R, axis=-1))
            active = ~(rnorm <= tol)
        J = _constrained_jacobian(spec, mats, g, m)
        lam = damping * np.minimum(1.0, np.where(np.isfinite(rnorm), rnorm, 1.0))
        JJt = J @ np.swapaxes(J, -2, -1).conj()
        A = JJt + (lam**2)[..., None, None] * np.eye(J.shape[-2])
        y = np.linalg.solve(A, R[..., None])
        full_step = -(np.swapaxes(J, -2, -1).conj() @ y)[..., 0]
        if spec.family == "SU":
            full_step = full_step.real
        # backtracking: halve steps that do not reduce the residual
        scale = np.where(active, 1.0, 0.0)
        best_mats, best_R, best_bad = mats, R, bad
        best_rnorm = rnorm
        improved = ~active
        for _ in range(8):
            trial = _apply_step(spec, mats, g, m, scale[..., None] * full_step)
            Rt, badt = _batch_residual(spec, trial, g, m, z0i)
            rt = np.where(badt, np.inf, np.linalg.norm(Rt, axis=-1))
            take = active & ~improved & (rt < best_rnorm)
            if np.any(take):
                sel = take[..., None, None, None]
                best_mats = np.where(sel, trial, best_mats)
                best_R = np.where(take[..., None], Rt, best_R)
                best_bad = np.where(take, badt, best_bad)
                best_rnorm = np.where(take, rt, best_rnorm)
                improved = improved | take
            if np.all(improved):
                break
            scale = np.where(improved, scale, scale * 0.5)
        mats, R, bad, rnorm = best_mats, best_R, best_bad, best_rnorm
        iters = np.where(active, it + 1, iters)
    converged = rnorm <= tol
    rnorm = np.where(np.isfinite(rnorm), rnorm, np.inf)
    return mats, rnorm, iters, converged


def project_to_variety(initial: GeneratorTuple, classes: ConjugacyClassSpec,
                       *, tol_flat: float = TOL_FLAT, solve_tol: float = 1e-12,
                       max_iter: int = 200, damping: float = 1.0,
                       rng: np.random.Generator | None = None) -> RepresentationPoint:
    """Project a tuple onto the variety (relator = target, classes exact).

    Boundary entries are first snapped onto their prescribed classes and
    afterwards move only by conjugation.  Raises
    :class:`NoConvergenceError` with the iteration count and final
    residual when the budget runs out.
    """
    spec = initial.spec
    g, m = initial.genus, initial.boundary_count
    if m != classes.boundary_count:
        raise DimensionMismatchError("boundary count disagrees with class data")
    mats = initial.mats.copy()
    for k in range(m):
        mats[2 * g + k] = project_to_class(spec, mats[2 * g + k],
                                           classes.representatives[k])
    out, rnorm, iters, conv = project_batch(
        spec, mats, g, m, classes, tol=min(solve_tol, tol_flat),
        max_iter=max_iter, damping=damping, rng=rng)
    if not bool(conv):
        raise NoConvergenceError(int(iters), float(rnorm))
    t = initial.replace_mats(out)
    return RepresentationPoint(t, float(rnorm))


# ---------------------------------------------------------------------------
# irreducibility
# ---------------------------------------------------------------------------

def commutant_dimension(spec: GroupSpec, mats: np.ndarray, tol: float = 1e-8) -> int:
    """Dimension of {M : M rho(s) = rho(s) M for all generators}."""
    r = spec.rank
    n = mats.shape[0]
    eye = np.eye(r)
    rows = []
    for s in range(n):
        g = mats[s]
        rows.append(np.kron(eye, g) - np.kron(g.T, eye))
    op = np.concatenate(rows, axis=0)
    svals = np.linalg.svd(op, compute_uv=False)
    scale = svals[0] if svals[0] > 0 else 1.0
    return int(np.sum(svals <= tol * scale))


def is_irreducible(point, tol: float = 1e-8) -> bool:
    """True iff the joint commutant is the scalars (null dimension 1)."""
    t = point.tuple if isinstance(point, RepresentationPoint) else point
    return commutant_dimension(t.spec, t.mats, tol) == 1


# ---------------------------------------------------------------------------
# cohomology at a point
# ---------------------------------------------------------------------------

def cohomology_at(p: RepresentationPoint, classes: ConjugacyClassSpec,
                  gap_tol: float = GAP_TOL, tol_flat: float = TOL_FLAT) -> CohomologyBasis:
    """Split the admissible directions into cocycles, coboundaries, and H1.

    Cocycles are the null space of the relator differential restricted to
    class-tangent boundary moves; coboundaries are the conjugation
    directions; h1 is the orthocomplement of the latter in the former.
    Emits :class:`RankDeficiencyWarning` when any singular-value gap is
    weaker than 1/gap_tol (non-smooth or reducible-adjacent point).
    """
    t = p.tuple
    spec = t.spec
    if p.residual_norm > tol_flat:
        raise ValueError(
            f"point residual {p.residual_norm:.3e} above tol_flat {tol_flat:.1e}")
    g, m = t.genus, t.boundary_count
    d = spec.dim
    n = t.n_generators
    E = constrained_embedding(t, classes)
    D = pres.relator_differential_matrix(spec, t.mats, g, m)
    Dc = D @ E
    U, s, Vh = np.linalg.svd(Dc)
    rank, quality, clean = split_rank(s, gap_tol)
    if not clean:
        warnings.warn(
            f"kernel/range split gap {quality:.2e} below 1/gap_tol",
            RankDeficiencyWarning, stacklevel=2)
    Zc = Vh[rank:].conj().T  # (D_c, nz), orthonormal
    Cc = E.conj().T @ pres.coboundary_matrix(spec, t.mats)
    Bc, bq, bclean = _range_basis(Cc, gap_tol)
    if not bclean:
        warnings.warn(
            f"coboundary rank gap {bq:.2e} below 1/gap_tol",
            RankDeficiencyWarning, stacklevel=2)
    P = Zc - Bc @ (Bc.conj().T @ Zc)
    Hc, hq, hclean = _range_basis(P, gap_tol)
    if not hclean:
        warnings.warn(
            f"h1 complement gap {hq:.2e} below 1/gap_tol",
            RankDeficiencyWarning, stacklevel=2)
    z_full, b_full, h_full = E @ Zc, E @ Bc, E @ Hc

    def mk(M):
        return [TangentVector.from_coords(spec, n, M[:, j])
                for j in range(M.shape[1])]

    return CohomologyBasis(
        z1=mk(z_full), b1=mk(b_full), h1=mk(h_full),
        z_coords=z_full, b_coords=b_full, h_coords=h_full,
        dpi_singular_values=s, gap_quality=min(quality, bq, hq),
    )


def conjugate_point(p: RepresentationPoint, A: np.ndarray,
                    classes: ConjugacyClassSpec | None = None) -> RepresentationPoint:
    """Slotwise s -> A^-1 s A; the residual is conjugation-invariant.

    When class data is supplied the residual is recomputed at the moved
    tuple (it agrees with the stored one to rounding); otherwise the
    stored value is carried over.
    """
    t = pres.conjugate_tuple(p.tuple, A)
    if classes is None:
        return RepresentationPoint(t, p.residual_norm, p.irreducible)
    R = flat_residual(p.spec, t.mats, t.genus, t.boundary_count, classes.target)
    return RepresentationPoint(t, float(np.linalg.norm(R)), p.irreducible)


# ---------------------------------------------------------------------------
# problem bundle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VarietyProblem:
    """Group + presentation + class data: everything defining one variety."""

    spec: GroupSpec
    presentation: SurfacePresentation
    classes: ConjugacyClassSpec

    def __post_init__(self):
        if self.presentation.boundary_count != self.classes.boundary_count:
            raise DimensionMismatchError(
                "presentation and class data disagree on boundary count")

    def random_initial(self, rng: np.random.Generator) -> GeneratorTuple:
        """Haar interior generators; boundary entries at their class representatives."""
        g = self.presentation.genus
        m = self.presentation.boundary_count
        mats = list(lg.haar_sample(self.spec, rng, size=2 * g))
        for k in range(m):
            U = lg.haar_sample(self.spec, rng)
            rep = self.classes.representatives[k]
            mats.append(U @ rep @ lg.group_inverse(self.spec, U))
        return GeneratorTuple(self.spec, g, m, np.array(mats))

    def solve(self, rng: np.random.Generator, **kw) -> RepresentationPoint:
        return project_to_variety(self.random_initial(rng), self.classes,
                                  rng=rng, **kw)


def perturb_point(p: RepresentationPoint, classes: ConjugacyClassSpec,
                  rng: np.random.Generator, scale: float = 0.1,
                  **solve_kw) -> RepresentationPoint:
    """Kick the interior generators and re-project (one random-walk step)."""
    t = p.tuple
    g = t.genus
    mats = t.mats.copy()
    kick = lg.exp(t.spec, lg.random_algebra(t.spec, rng, scale=scale, size=2 * g))
    mats[: 2 * g] = kick @ mats[: 2 * g]
    return project_to_variety(t.replace_mats(mats), classes, rng=rng, **solve_kw)
