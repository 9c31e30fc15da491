"""Surface-group presentations with boundary, the relator word, its
differential, and the coboundary map.

Generator slots are ordered ``a_1, b_1, a_2, b_2, ..., a_g, b_g,
c_1, ..., c_m`` (2g + m slots).  The relator is

    Pi = c_m ... c_1 . (b_g^-1 a_g^-1 b_g a_g) ... (b_1^-1 a_1^-1 b_1 a_1),

evaluated right to left: a_1 acts first.  Spelled out in single letters
the word reads ``alpha_N ... alpha_1`` with the genus block
``(a_i, b_i, a_i^-1, b_i^-1)`` occupying letters 4i-3 .. 4i and the
boundary letters at the end; only letters 1, 2, 5, 6, ... (and the
boundary) are independent.  This letter order is load-bearing: the
partial products feeding the two-form depend on it.

Tangent vectors are stored right-trivialized: the component H_s at slot s
is the velocity of ``t -> exp(t H_s) . element_s``.  The left-trivialized
convention used by the two-form differs by Ad of the base point;
conversion happens at the form-evaluation boundary.

Low-level helpers take raw stacked arrays ``(..., n_slots, r, r)`` and
broadcast over leading batch axes; the dataclasses wrap single tuples.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import liegroup as lg
from .errors import DimensionMismatchError
from .liegroup import GroupSpec


@dataclass(frozen=True)
class SurfacePresentation:
    """Genus g >= 1 surface with m >= 0 boundary loops; 2g + m generators."""

    genus: int
    boundary_count: int = 0

    def __post_init__(self):
        if self.genus < 1:
            raise ValueError("genus must be >= 1")
        if self.boundary_count < 0:
            raise ValueError("boundary_count must be >= 0")
        if self.boundary_count == 0 and self.genus < 2:
            warnings.warn(
                "closed surface of genus < 2: the smooth stratum has no "
                "irreducible SU(2) points over the trivial target",
                stacklevel=2,
            )

    @property
    def n_generators(self) -> int:
        return 2 * self.genus + self.boundary_count


def word_letters(g: int, m: int) -> list[tuple[int, int]]:
    """The relator spelled as (slot, exponent) letters, rightmost first.

    Slots are a_i -> 2i-2, b_i -> 2i-1, c_k -> 2g+k-1 (0-based).
    """
    letters = []
    for i in range(g):
        letters += [(2 * i, 1), (2 * i + 1, 1), (2 * i, -1), (2 * i + 1, -1)]
    for k in range(m):
        letters.append((2 * g + k, 1))
    return letters


def letter_matrices(spec: GroupSpec, mats: np.ndarray, g: int, m: int) -> np.ndarray:
    """Embedded letter matrices alpha_1..alpha_N, shape (..., N, r, r)."""
    inv = lg.group_inverse(spec, mats)
    blocks = []
    for (s, e) in word_letters(g, m):
        blocks.append(mats[..., s, :, :] if e == 1 else inv[..., s, :, :])
    return np.stack(blocks, axis=-3)


def relator_product(spec: GroupSpec, mats: np.ndarray, g: int, m: int) -> np.ndarray:
    """Pi evaluated right to left; shape (..., r, r)."""
    lets = letter_matrices(spec, mats, g, m)
    out = np.broadcast_to(
        np.eye(spec.rank, dtype=complex), mats.shape[:-3] + (spec.rank, spec.rank)
    ).copy()
    for i in range(lets.shape[-3]):
        out = lets[..., i, :, :] @ out
    return out


def partial_products(spec: GroupSpec, mats: np.ndarray, g: int, m: int) -> np.ndarray:
    """f_0 = I, f_i = alpha_i ... alpha_1; shape (..., N+1, r, r)."""
    lets = letter_matrices(spec, mats, g, m)
    N = lets.shape[-3]
    r = spec.rank
    out = np.empty(mats.shape[:-3] + (N + 1, r, r), dtype=complex)
    out[..., 0, :, :] = np.eye(r)
    for i in range(N):
        out[..., i + 1, :, :] = lets[..., i, :, :] @ out[..., i, :, :]
    return out


def relator_differential_matrix(spec: GroupSpec, mats: np.ndarray,
                                g: int, m: int) -> np.ndarray:
    """Differential of Pi in right trivialization, as a coordinate matrix.

    Shape (..., dim, n_slots*dim): maps stacked right-trivialized slot
    coordinates to the algebra coordinates of (d/dt Pi) Pi^-1.  Assembled
    from Ad matrices of the suffix products alpha_N ... alpha_{i+1}.
    """
    lets = word_letters(g, m)
    letmats = letter_matrices(spec, mats, g, m)
    N = len(lets)
    r = spec.rank
    d = spec.dim
    n = mats.shape[-3]
    batch = mats.shape[:-3]
    # suffix S_i = alpha_N ... alpha_{i+1}; S_N = I
    suffix = np.empty(batch + (N + 1, r, r), dtype=complex)
    suffix[..., N, :, :] = np.eye(r)
    for i in range(N - 1, -1, -1):
        suffix[..., i, :, :] = suffix[..., i + 1, :, :] @ letmats[..., i, :, :]
    ad_suffix = lg.adjoint_matrix(spec, suffix[..., 1:, :, :])  # (..., N, d, d)
    dtype = float if spec.family == "SU" else complex
    D = np.zeros(batch + (d, n * d), dtype=dtype)
    inv = lg.group_inverse(spec, mats)
    ad_inv = lg.adjoint_matrix(spec, inv)  # (..., n, d, d)
    for i, (s, e) in enumerate(lets):
        blk = ad_suffix[..., i, :, :]
        if e == -1:
            blk = -blk @ ad_inv[..., s, :, :]
        D[..., :, s * d:(s + 1) * d] += blk
    return D


def coboundary_matrix(spec: GroupSpec, mats: np.ndarray) -> np.ndarray:
    """Coordinate matrix of X -> (X - Ad(rho(s)) X)_s, shape (..., n*dim, dim)."""
    d = spec.dim
    n = mats.shape[-3]
    blocks = np.eye(d) - lg.adjoint_matrix(spec, mats)  # (..., n, d, d)
    return np.concatenate([blocks[..., s, :, :] for s in range(n)], axis=-2)


@dataclass(frozen=True)
class GeneratorTuple:
    """A point of G^{2g} x G^m: the images of the 2g + m generators."""

    spec: GroupSpec
    genus: int
    boundary_count: int
    mats: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = 2 * self.genus + self.boundary_count
        r = self.spec.rank
        mats = np.asarray(self.mats, dtype=complex)
        if mats.shape != (n, r, r):
            raise DimensionMismatchError(
                f"expected mats of shape {(n, r, r)}, got {mats.shape}"
            )
        object.__setattr__(self, "mats", mats)

    @property
    def n_generators(self) -> int:
        return 2 * self.genus + self.boundary_count

    def a(self, i: int) -> np.ndarray:
        return self.mats[2 * i]

    def b(self, i: int) -> np.ndarray:
        return self.mats[2 * i + 1]

    def c(self, k: int) -> np.ndarray:
        return self.mats[2 * self.genus + k]

    @classmethod
    def from_parts(cls, spec, a, b, c=()):
        a, b, c = list(a), list(b), list(c)
        if len(a) != len(b):
            raise DimensionMismatchError("need as many a's as b's")
        mats = []
        for ai, bi in zip(a, b):
            mats += [ai, bi]
        mats += c
        return cls(spec, len(a), len(c), np.array(mats, dtype=complex))

    @classmethod
    def identity(cls, spec, genus, boundary_count=0):
        n = 2 * genus + boundary_count
        mats = np.broadcast_to(np.eye(spec.rank, dtype=complex),
                               (n, spec.rank, spec.rank)).copy()
        return cls(spec, genus, boundary_count, mats)

    def replace_mats(self, mats: np.ndarray) -> "GeneratorTuple":
        return GeneratorTuple(self.spec, self.genus, self.boundary_count, mats)

    def to_json(self) -> dict:
        g, m = self.genus, self.boundary_count
        return {
            "g": g,
            "m": m,
            "a": [lg.matrix_to_json(self.a(i)) for i in range(g)],
            "b": [lg.matrix_to_json(self.b(i)) for i in range(g)],
            "c": [lg.matrix_to_json(self.c(k)) for k in range(m)],
        }

    @classmethod
    def from_json(cls, spec: GroupSpec, data: dict) -> "GeneratorTuple":
        a = [lg.matrix_from_json(x) for x in data["a"]]
        b = [lg.matrix_from_json(x) for x in data["b"]]
        c = [lg.matrix_from_json(x) for x in data.get("c", [])]
        if len(a) != int(data["g"]) or len(c) != int(data["m"]):
            raise DimensionMismatchError("generator counts disagree with g, m")
        return cls.from_parts(spec, a, b, c)


@dataclass(frozen=True)
class TangentVector:
    """Right-trivialized tangent components, one algebra element per slot."""

    spec: GroupSpec
    comps: np.ndarray = field(repr=False)

    def __post_init__(self):
        comps = np.asarray(self.comps, dtype=complex)
        if comps.ndim != 3 or comps.shape[1:] != (self.spec.rank, self.spec.rank):
            raise DimensionMismatchError("comps must have shape (n_slots, r, r)")
        object.__setattr__(self, "comps", comps)

    @property
    def n_slots(self) -> int:
        return self.comps.shape[0]

    def coords(self) -> np.ndarray:
        """Stacked algebra coordinates, shape (n_slots * dim,)."""
        return lg.algebra_coords(self.spec, self.comps).reshape(-1)

    @classmethod
    def from_coords(cls, spec: GroupSpec, n_slots: int, v: np.ndarray) -> "TangentVector":
        v = np.asarray(v).reshape(n_slots, spec.dim)
        return cls(spec, lg.coords_to_algebra(spec, v))

    @classmethod
    def zero(cls, spec: GroupSpec, n_slots: int) -> "TangentVector":
        return cls(spec, np.zeros((n_slots, spec.rank, spec.rank), dtype=complex))

    def norm(self) -> float:
        return float(np.sqrt(np.sum(lg.pairing_norm(self.spec, self.comps) ** 2)))

    def __add__(self, other: "TangentVector") -> "TangentVector":
        return TangentVector(self.spec, self.comps + other.comps)

    def __rmul__(self, scalar) -> "TangentVector":
        return TangentVector(self.spec, scalar * self.comps)

    def to_json(self) -> dict:
        return {"components": [lg.matrix_to_json(X) for X in self.comps]}


# ---------------------------------------------------------------------------
# spec-facing operations
# ---------------------------------------------------------------------------

def evaluate_relator(t: GeneratorTuple) -> np.ndarray:
    """The relator word at the tuple, rightmost factor first."""
    return relator_product(t.spec, t.mats, t.genus, t.boundary_count)


def relator_differential(t: GeneratorTuple) -> np.ndarray:
    """Right-trivialized differential of the relator as a (dim, n*dim) matrix.

    Columns are ordered slot-major in the orthonormal algebra basis;
    apply to ``TangentVector.coords()`` to get the algebra coordinates of
    the derivative of the word.
    """
    return relator_differential_matrix(t.spec, t.mats, t.genus, t.boundary_count)


def apply_relator_differential(t: GeneratorTuple, v: TangentVector) -> np.ndarray:
    """dPi(v) as an algebra element."""
    D = relator_differential(t)
    return lg.coords_to_algebra(t.spec, D @ v.coords())


def coboundary(t: GeneratorTuple, X: np.ndarray) -> TangentVector:
    """Infinitesimal conjugation direction: slot s carries X - Ad(rho(s)) X."""
    comps = X[None, :, :] - lg.adjoint(t.spec, t.mats, X[None, :, :])
    return TangentVector(t.spec, comps)


def conjugate_tuple(t: GeneratorTuple, A: np.ndarray) -> GeneratorTuple:
    """Slotwise s -> A^-1 s A."""
    Ai = lg.group_inverse(t.spec, A)
    return t.replace_mats(Ai @ t.mats @ A)


def random_tangent(t: GeneratorTuple, rng: np.random.Generator,
                   scale: float = 1.0) -> TangentVector:
    comps = lg.random_algebra(t.spec, rng, scale=scale, size=t.n_generators)
    return TangentVector(t.spec, comps)
