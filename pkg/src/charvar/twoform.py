"""The skew two-form on tangent tuples, its descent to cohomology, and the
numerical closedness / nondegeneracy checks.

Evaluation runs over the word spelled in single letters (genus blocks
``a, b, a^-1, b^-1`` then the boundary letters).  A tangent vector enters
left-trivialized; the inverse-letter components are determined by the free
ones, and every component is transported by Ad of the inverse partial
product of the letters to its right-hand side.  With ``eps(i, j) = sign(j - i)``,

    form(u, v) = 1/2 sum_{i,j} eps(i,j) <u_i~, v_j~>
               + 1/2 sum_k <pinv(Ad c_k^-1 - 1) C_k^u,
                            (Ad c_k - Ad c_k^-1)(Ad c_k^-1 - 1) C_k^v>,

where C_k are the left-trivialized boundary components and the inverse in
the boundary term is Moore-Penrose on the complement of the centralizer
(the operator kills exactly the centralizer of c_k, so a bare inverse is
not defined; boundary components must lie in its image).  The 1/2
prefactor is part of the convention here: the closed-surface form equals
the boundary form at m = 0 identically.  Writings of the closed-surface
sum without the 1/2 are twice this one.

The boundary term is evaluated exactly as displayed above; for a class
whose squared adjoint is not the identity it is not skew on its own (a
convention ambiguity inherited from the source formula), but it vanishes
at the classes exercised here and at m = 0 the form is skew identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import liegroup as lg
from . import presentation as pres
from .errors import (
    DimensionMismatchError,
    NoConvergenceError,
    NotClassTangentError,
)
from .liegroup import GroupSpec
from .presentation import TangentVector
from .variety import (
    CohomologyBasis,
    ConjugacyClassSpec,
    RepresentationPoint,
    boundary_tangent_basis,
    cohomology_at,
    flat_residual,
    split_rank,
)

CLASS_TANGENT_TOL = 1e-8


def epsilon_sign(i: int, j: int) -> int:
    """+1 below the diagonal pair order (i < j), -1 above, 0 on it."""
    return (i < j) - (j < i)


@dataclass(frozen=True)
class FormMatrix:
    """The form in a chosen basis: entries[i, j] = form(e_i, e_j)."""

    basis_labels: list
    entries: np.ndarray = field(repr=False)

    def skew_defect(self) -> float:
        return float(np.abs(self.entries + self.entries.T).max())

    def to_json(self) -> dict:
        ent = self.entries
        if np.iscomplexobj(ent):
            omega = [[[float(z.real), float(z.imag)] for z in row] for row in ent]
        else:
            omega = [[float(x) for x in row] for row in ent]
        return {"basis": list(self.basis_labels), "omega": omega}


# ---------------------------------------------------------------------------
# transported-letter evaluation
# ---------------------------------------------------------------------------

def _letter_ops(spec: GroupSpec, mats: np.ndarray, g: int, m: int):
    """Coordinate operators taking right-trivialized slot components to
    transported left-trivialized letter components.

    Letter i at slot s with exponent e contributes
        e = +1:  Ad(f_{i-1}^-1) Ad(s^-1)
        e = -1: -Ad(f_{i-1}^-1)
    (the inverse-letter component is minus the right-trivialized slot
    component, which cancels one adjoint).  Returns (ops, slots) with
    ops of shape (..., N, dim, dim).
    """
    letters = pres.word_letters(g, m)
    f = pres.partial_products(spec, mats, g, m)
    f_inv = lg.group_inverse(spec, f[..., :-1, :, :])
    ad_f = lg.adjoint_matrix(spec, f_inv)  # (..., N, d, d)
    ad_inv = lg.adjoint_matrix(spec, lg.group_inverse(spec, mats))  # (..., n, d, d)
    ops = []
    slots = []
    for i, (s, e) in enumerate(letters):
        if e == 1:
            ops.append(ad_f[..., i, :, :] @ ad_inv[..., s, :, :])
        else:
            ops.append(-ad_f[..., i, :, :])
        slots.append(s)
    return np.stack(ops, axis=-3), slots


def _transported(spec, ops, slots, coords):
    """Apply the letter operators to stacked tangent coordinates.

    coords: (..., k, n*dim) -> (..., N, k, dim)
    """
    d = spec.dim
    cols = []
    for i, s in enumerate(slots):
        blk = coords[..., :, s * d:(s + 1) * d]
        cols.append(np.einsum("...ab,...kb->...ka", ops[..., i, :, :], blk))
    return np.stack(cols, axis=-3)


def first_sum_gram(spec: GroupSpec, mats: np.ndarray, g: int, m: int,
                   u_coords: np.ndarray, v_coords: np.ndarray,
                   convention: str | None = None) -> np.ndarray:
    """Gram array of the transported double sum over two coordinate stacks.

    u_coords: (..., k, n*dim), v_coords: (..., l, n*dim) -> (..., k, l).
    """
    if convention is None:
        convention = spec.default_pairing
    ops, slots = _letter_ops(spec, mats, g, m)
    tu = _transported(spec, ops, slots, u_coords)  # (..., N, k, d)
    tv = _transported(spec, ops, slots, v_coords)  # (..., N, l, d)
    Gp = lg._pairing_gram(spec, convention)
    if not np.allclose(Gp, np.eye(Gp.shape[0])):
        tu = np.einsum("...nkd,de->...nke", tu, Gp)
    cu = np.cumsum(tu, axis=-3)
    cu = np.concatenate([np.zeros_like(cu[..., :1, :, :]), cu[..., :-1, :, :]], axis=-3)
    cv = np.cumsum(tv, axis=-3)
    cv = np.concatenate([np.zeros_like(cv[..., :1, :, :]), cv[..., :-1, :, :]], axis=-3)
    below = np.einsum("...nkd,...nld->...kl", cu, tv)
    above = np.einsum("...nkd,...nld->...kl", tu, cv)
    return 0.5 * (below - above)


_PINV_FLOOR = 1e-10  # Ad(c^-1) - 1 has operator norm <= 2; below this is kernel


def _image_pinv_solve(A: np.ndarray, C: np.ndarray):
    """Moore-Penrose solve of A x = C with an absolute singular-value floor.

    Directions with singular value below the floor belong to the
    centralizer kernel and are discarded; returns (solution, residual),
    where the residual is the part of C outside the numerical image.
    Accepts a vector or a matrix of stacked right-hand-side columns.
    """
    U, s, Vh = np.linalg.svd(A)
    keep = s > _PINV_FLOOR
    Uk = U[:, keep]
    proj = Uk @ (Uk.conj().T @ C)
    sol = Vh[keep].conj().T @ ((Uk.conj().T @ C).T / s[keep]).T
    return sol, C - proj


def _boundary_term(spec: GroupSpec, c: np.ndarray, C1: np.ndarray, C2: np.ndarray,
                   convention: str, tol: float = CLASS_TANGENT_TOL):
    """One boundary summand, exactly as displayed (pseudo-inverse first slot)."""
    d = spec.dim
    T = lg.adjoint_matrix(spec, lg.group_inverse(spec, c))
    Tinv = lg.adjoint_matrix(spec, c)
    A = T - np.eye(d)
    sol, resid = _image_pinv_solve(A, C1)
    n1 = np.linalg.norm(C1)
    if n1 > 0 and np.linalg.norm(resid) > tol * max(n1, 1.0):
        raise NotClassTangentError(
            "boundary component not in image(Ad(c^-1) - 1)")
    rhs = (Tinv - T) @ (A @ C2)
    Gp = lg._pairing_gram(spec, convention)
    val = sol @ Gp @ rhs
    return val


def _check_class_tangent(spec, c, C, tol=CLASS_TANGENT_TOL):
    d = spec.dim
    A = lg.adjoint_matrix(spec, lg.group_inverse(spec, c)) - np.eye(d)
    nC = np.linalg.norm(C)
    if nC == 0:
        return
    _, resid = _image_pinv_solve(A, C)
    if np.linalg.norm(resid) > tol * max(nC, 1.0):
        raise NotClassTangentError("boundary component not in image(Ad(c^-1) - 1)")


def _tangent_stack(p, vs):
    arr = np.stack([v.coords() for v in vs], axis=0)
    return arr


def theta_with_classes(p: RepresentationPoint, u: TangentVector, v: TangentVector,
                       convention: str | None = None):
    """The two-form with boundary classes; reduces to the closed form at m = 0.

    Boundary components of both arguments must be class-tangent (in the
    image of Ad(c_k^-1) - 1); the boundary term takes the Moore-Penrose
    inverse there.
    """
    t = p.tuple
    spec = t.spec
    if convention is None:
        convention = spec.default_pairing
    if u.n_slots != t.n_generators or v.n_slots != t.n_generators:
        raise DimensionMismatchError("tangent slot count mismatch")
    g, m = t.genus, t.boundary_count
    U = u.coords()[None, :]
    V = v.coords()[None, :]
    val = first_sum_gram(spec, t.mats, g, m, U, V, convention)[0, 0]
    d = spec.dim
    for k in range(m):
        c = t.c(k)
        ad_ci = lg.adjoint_matrix(spec, lg.group_inverse(spec, c))
        Cu = ad_ci @ U[0, (2 * g + k) * d:(2 * g + k + 1) * d]
        Cv = ad_ci @ V[0, (2 * g + k) * d:(2 * g + k + 1) * d]
        _check_class_tangent(spec, c, Cv)
        val = val + 0.5 * _boundary_term(spec, c, Cu, Cv, convention)
    if spec.family == "SU":
        return float(np.real(val))
    return complex(val)


def theta_closed(p: RepresentationPoint, u: TangentVector, v: TangentVector,
                 convention: str | None = None):
    """The two-form on a closed surface (m = 0)."""
    if p.tuple.boundary_count != 0:
        raise DimensionMismatchError("theta_closed requires m = 0")
    return theta_with_classes(p, u, v, convention)


def form_gram(p: RepresentationPoint, us: list, vs: list,
              convention: str | None = None) -> np.ndarray:
    """Matrix of the form over two lists of tangent vectors (shared point).

    Boundary components are checked class-tangent; the boundary term is
    added pairwise.  Much faster than calling the scalar form in a loop:
    the letter transports are built once.
    """
    t = p.tuple
    spec = t.spec
    if convention is None:
        convention = spec.default_pairing
    g, m = t.genus, t.boundary_count
    U = _tangent_stack(p, us)
    V = _tangent_stack(p, vs)
    G = first_sum_gram(spec, t.mats, g, m, U, V, convention)
    d = spec.dim
    for k in range(m):
        c = t.c(k)
        T = lg.adjoint_matrix(spec, lg.group_inverse(spec, c))
        Tinv = lg.adjoint_matrix(spec, c)
        CU = U[:, (2 * g + k) * d:(2 * g + k + 1) * d] @ T.T
        CV = V[:, (2 * g + k) * d:(2 * g + k + 1) * d] @ T.T
        A = T - np.eye(d)
        for row in CV:
            _check_class_tangent(spec, c, row)
        sols, resid = _image_pinv_solve(A, CU.T)
        bad = np.linalg.norm(resid, axis=0) > CLASS_TANGENT_TOL * np.maximum(
            np.linalg.norm(CU.T, axis=0), 1.0)
        if np.any(bad):
            raise NotClassTangentError(
                "boundary component not in image(Ad(c^-1) - 1)")
        Gp = lg._pairing_gram(spec, convention)
        rhs = (Tinv - T) @ (A @ CV.T)
        G = G + 0.5 * (sols.T @ Gp @ rhs)
    if spec.family == "SU":
        G = np.real(G)
    return G


def form_on_cohomology(p: RepresentationPoint, classes: ConjugacyClassSpec,
                       basis: CohomologyBasis | None = None,
                       convention: str | None = None) -> FormMatrix:
    """The form matrix over the orthonormal h1 basis."""
    if basis is None:
        basis = cohomology_at(p, classes)
    G = form_gram(p, basis.h1, basis.h1, convention)
    labels = [f"h1[{i}]" for i in range(len(basis.h1))]
    return FormMatrix(labels, G)


def kernel_of_form(p: RepresentationPoint, classes: ConjugacyClassSpec,
                   basis: CohomologyBasis | None = None,
                   convention: str | None = None) -> list:
    """Null space of the form restricted to the cocycles.

    At irreducible compact-group points this coincides with the
    coboundary directions; the kernel dimension is read off the
    singular-value gap, so a larger kernel at a degenerate point is
    reported rather than hidden.
    """
    if basis is None:
        basis = cohomology_at(p, classes)
    G = form_gram(p, basis.z1, basis.z1, convention)
    if G.shape[0] == 0:
        return []
    _, s, Vh = np.linalg.svd(G)
    rank, _, _ = split_rank(s)
    null = Vh[rank:].conj().T
    full = basis.z_coords @ null
    n = p.tuple.n_generators
    return [TangentVector.from_coords(p.spec, n, full[:, j])
            for j in range(full.shape[1])]


# ---------------------------------------------------------------------------
# closedness in a chart
# ---------------------------------------------------------------------------

def _phi_series(A: np.ndarray, terms: int = 16) -> np.ndarray:
    """phi(A) = (exp(A) - 1) A^-1 = sum A^k / (k+1)!, safe at singular A."""
    out = np.eye(A.shape[0], dtype=A.dtype)
    term = np.eye(A.shape[0], dtype=A.dtype)
    for k in range(1, terms):
        term = term @ (A / (k + 1.0))
        out = out + term
    return out


def _displacement(spec: GroupSpec, qmats: np.ndarray, pmats: np.ndarray):
    """Per-slot log(q_s p_s^-1) coordinates and their step Jacobians.

    Returns (ell, lam): ell is the stacked displacement coordinate vector
    and lam the block-diagonal d(ell)/d(right-trivialized slot velocity).
    """
    n = qmats.shape[0]
    d = spec.dim
    dtype = float if spec.family == "SU" else complex
    ell = np.zeros(n * d, dtype=dtype)
    lam = np.zeros((n * d, n * d), dtype=dtype)
    for s in range(n):
        Y = qmats[s] @ lg.group_inverse(spec, pmats[s])
        K = lg.log_near_identity(spec, Y)
        ell[s * d:(s + 1) * d] = lg.algebra_coords(spec, K)
        adK = lg.ad_algebra_matrix(spec, K)
        lam[s * d:(s + 1) * d, s * d:(s + 1) * d] = np.linalg.inv(_phi_series(adK))
    return ell, lam


def _step_blocks(spec, qmats, g, m):
    """Map from chart unknowns to right-trivialized slot velocities.

    Interior slots are free; boundary slot k is parametrized by the
    class-tangent basis at its current element, acting by conjugation.
    Returns (S, sizes): S has shape (n*dim, D_c).
    """
    d = spec.dim
    n = qmats.shape[0]
    if m == 0:
        return np.eye(n * d), [d] * n
    cols = []
    sizes = []
    for s in range(2 * g):
        blk = np.zeros((n * d, d))
        blk[s * d:(s + 1) * d] = np.eye(d)
        cols.append(blk)
        sizes.append(d)
    for k in range(m):
        c = qmats[2 * g + k]
        W = boundary_tangent_basis(spec, c)
        vel = (np.eye(d) - lg.adjoint_matrix(spec, c)) @ W
        blk = np.zeros((n * d, W.shape[1]))
        blk[(2 * g + k) * d:(2 * g + k + 1) * d] = vel
        cols.append(blk)
        sizes.append(W.shape[1])
    return np.concatenate(cols, axis=1), sizes


def _apply_chart_step(spec, qmats, g, m, step, sizes):
    out = qmats.copy()
    d = spec.dim
    ofs = 0
    for s in range(2 * g):
        X = lg.coords_to_algebra(spec, step[ofs:ofs + d])
        out[s] = lg.exp(spec, X) @ qmats[s]
        ofs += d
    for k in range(m):
        w = sizes[2 * g + k]
        c = qmats[2 * g + k]
        W = boundary_tangent_basis(spec, c)
        X = lg.coords_to_algebra(spec, W @ step[ofs:ofs + w])
        U = lg.exp(spec, X)
        out[2 * g + k] = U @ c @ lg.group_inverse(spec, U)
        ofs += w
    return out


class _Chart:
    """Implicit chart of the variety around a solved point.

    Coordinates are the h1 directions; the chart point q(t) solves
    flatness + (h1-coordinates of the displacement = t) + (b1-slice
    orthogonality), a square Newton system.  Frame vectors dq/dt_i come
    from linear solves against the same Jacobian, so the only finite
    differencing happens at the exterior-derivative level.
    """

    def __init__(self, p: RepresentationPoint, classes: ConjugacyClassSpec,
                 basis: CohomologyBasis | None = None, tol: float = 1e-13):
        if p.spec.family != "SU":
            raise DimensionMismatchError(
                "closedness charts use real coordinates (SU family only)")
        self.p = p
        self.classes = classes
        self.spec = p.spec
        self.basis = basis if basis is not None else cohomology_at(p, classes)
        self.tol = tol
        self.g = p.tuple.genus
        self.m = p.tuple.boundary_count
        self.H = self.basis.h_coords
        self.B = self.basis.b_coords

    def _system(self, qmats):
        spec, g, m = self.spec, self.g, self.m
        R = flat_residual(spec, qmats, g, m, self.classes.target)
        ell, lam = _displacement(spec, qmats, self.p.tuple.mats)
        S, sizes = _step_blocks(spec, qmats, g, m)
        D = pres.relator_differential_matrix(spec, qmats, g, m)
        J = np.vstack([D @ S, self.H.T @ lam @ S, self.B.T @ lam @ S])
        return R, ell, J, S, sizes

    def solve(self, t: np.ndarray):
        qmats = self.p.tuple.mats.copy()
        for it in range(60):
            R, ell, J, S, sizes = self._system(qmats)
            F = np.concatenate([R, self.H.T @ ell - t, self.B.T @ ell])
            if np.linalg.norm(F) < self.tol:
                return qmats, J, S, sizes
            step = np.linalg.solve(J, -F)
            qmats = _apply_chart_step(self.spec, qmats, self.g, self.m, step, sizes)
        raise NoConvergenceError(60, float(np.linalg.norm(F)),
                                 "chart re-solve did not converge")

    def omega_at(self, t: np.ndarray, convention: str | None = None) -> np.ndarray:
        """Chart coefficients of the form at coordinates t."""
        qmats, J, S, sizes = self.solve(t)
        dh = self.H.shape[1]
        rhs = np.zeros((J.shape[0], dh))
        rhs[self.spec.dim:self.spec.dim + dh] = np.eye(dh)
        V = np.linalg.solve(J, rhs)
        full = S @ V  # slot-velocity coordinates of the frame
        qt = self.p.tuple.replace_mats(qmats)
        n = qt.n_generators
        frame = [pres.TangentVector.from_coords(self.spec, n, full[:, i])
                 for i in range(dh)]
        qpoint = RepresentationPoint(qt, 0.0)
        return form_gram(qpoint, frame, frame, convention)


def check_closedness(p: RepresentationPoint, classes: ConjugacyClassSpec,
                     step: float = 1e-3, basis: CohomologyBasis | None = None,
                     convention: str | None = None) -> float:
    """Max |dOmega| coefficient of the chart-pulled-back form.

    Central second-order differences of the chart coefficients; the
    result decays as O(step^2) when the form is closed.
    """
    chart = _Chart(p, classes, basis)
    dh = chart.H.shape[1]
    grad = np.empty((dh, dh, dh))
    for i in range(dh):
        e = np.zeros(dh)
        e[i] = step
        plus = chart.omega_at(e, convention)
        minus = chart.omega_at(-e, convention)
        grad[i] = (plus - minus) / (2.0 * step)
    worst = 0.0
    for i in range(dh):
        for j in range(i + 1, dh):
            for k in range(j + 1, dh):
                val = grad[i][j, k] - grad[j][i, k] + grad[k][i, j]
                worst = max(worst, abs(val))
    return worst


def closedness_sweep(p: RepresentationPoint, classes: ConjugacyClassSpec,
                     steps=(1e-3, 5e-4, 2.5e-4),
                     convention: str | None = None) -> list[float]:
    """check_closedness over a halving schedule, one chart for all steps."""
    basis = cohomology_at(p, classes)
    return [check_closedness(p, classes, h, basis, convention) for h in steps]


def observed_order(steps, values) -> float:
    """Log-log slope of values against steps (least squares)."""
    x = np.log(np.asarray(steps, dtype=float))
    y = np.log(np.maximum(np.asarray(values, dtype=float), 1e-300))
    A = np.stack([x, np.ones_like(x)], axis=1)
    slope, _ = np.linalg.lstsq(A, y, rcond=None)[0]
    return float(slope)
