"""Random matrix ensembles, structured perturbations and seeded trial streams."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidDimensionError, InvalidParameterError, InvalidRankError

_MASK64 = (1 << 64) - 1
SQRT3 = math.sqrt(3.0)

ATOM_KINDS = ("rademacher", "gaussian_real", "gaussian_complex", "uniform_bounded")


def splitmix64(x: int) -> int:
    """One SplitMix64 output step applied to ``x``."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


@dataclass(frozen=True)
class SeedPolicy:
    """Per-trial random streams derived from one master seed.

    The stream for ``(trial, stream)`` is a Philox counter generator keyed by
    ``splitmix64(splitmix64(master_seed) ^ trial)`` and ``stream``, so draws
    depend only on those integers and never on execution order.
    """

    master_seed: int

    def __post_init__(self):
        if not 0 <= int(self.master_seed) <= _MASK64:
            raise InvalidParameterError("master_seed must be a 64-bit unsigned integer")

    def trial_seed(self, trial: int) -> int:
        if trial < 0:
            raise InvalidParameterError("trial index must be nonnegative")
        return splitmix64(splitmix64(int(self.master_seed)) ^ (int(trial) & _MASK64))

    def generator(self, trial: int, stream: int = 0) -> np.random.Generator:
        key = self.trial_seed(trial) | ((int(stream) & _MASK64) << 64)
        return np.random.Generator(np.random.Philox(key=key))


def as_seed_policy(seed) -> SeedPolicy:
    return seed if isinstance(seed, SeedPolicy) else SeedPolicy(int(seed))


@dataclass(frozen=True)
class AtomDistribution:
    """Mean-zero, unit-variance entry law.

    ``gaussian_complex`` is N(0, 1/2) + i N(0, 1/2); ``uniform_bounded`` is
    uniform on [-sqrt(3), sqrt(3)], the only symmetric uniform law with unit
    variance, so ``bound`` is fixed at sqrt(3).
    """

    kind: str = "rademacher"
    bound: float | None = None

    def __post_init__(self):
        if self.kind not in ATOM_KINDS:
            raise InvalidParameterError(f"unknown atom distribution {self.kind!r}")
        if self.kind == "uniform_bounded":
            if self.bound is None:
                object.__setattr__(self, "bound", SQRT3)
            elif not math.isclose(self.bound, SQRT3, rel_tol=1e-12):
                raise InvalidParameterError("uniform_bounded has unit variance only for bound=sqrt(3)")
        elif self.bound is not None:
            raise InvalidParameterError(f"bound applies to uniform_bounded only, not {self.kind}")

    @property
    def is_real(self) -> bool:
        return self.kind != "gaussian_complex"

    def sample(self, rng: np.random.Generator, size):
        if self.kind == "rademacher":
            return 2.0 * rng.integers(0, 2, size=size, dtype=np.int8).astype(np.float64) - 1.0
        if self.kind == "gaussian_real":
            return rng.standard_normal(size)
        if self.kind == "gaussian_complex":
            out = rng.standard_normal(size) + 1j * rng.standard_normal(size)
            out *= math.sqrt(0.5)
            return out
        return rng.uniform(-SQRT3, SQRT3, size=size)


def as_atom(atom) -> AtomDistribution:
    return atom if isinstance(atom, AtomDistribution) else AtomDistribution(str(atom))


def _check_n(n):
    if int(n) != n or n < 1:
        raise InvalidDimensionError(f"dimension must be a positive integer, got {n!r}")
    return int(n)


def sample_iid_matrix(n, atom="rademacher", seed=0, trial=0, stream=0):
    """n x n iid matrix (unnormalized). Real atoms give a float64 array."""
    n = _check_n(n)
    atom = as_atom(atom)
    rng = as_seed_policy(seed).generator(trial, stream)
    return atom.sample(rng, (n, n))


def unit_ones_vector(n):
    """The unit vector with every coordinate 1/sqrt(n)."""
    n = _check_n(n)
    return np.full(n, 1.0 / math.sqrt(n))


def low_rank_from_block(n, block):
    """Factors of the n x n matrix carrying ``block`` in its top-left corner."""
    n = _check_n(n)
    block = np.atleast_2d(np.asarray(block, dtype=np.complex128))
    if block.size == 0:
        return np.zeros((n, 0), dtype=np.complex128), np.zeros((0, n), dtype=np.complex128)
    k = block.shape[0]
    if block.shape != (k, k):
        raise InvalidDimensionError("block must be square")
    if k > n:
        raise InvalidRankError(f"rank {k} exceeds dimension {n}")
    A = np.zeros((n, k), dtype=np.complex128)
    A[np.arange(k), np.arange(k)] = 1.0
    B = np.zeros((k, n), dtype=np.complex128)
    B[:, :k] = block
    return A, B


def low_rank_from_diag(n, leading):
    """(A, B) with A B = diag(leading, 0, ..., 0); A holds basis columns."""
    leading = np.asarray(list(leading), dtype=np.complex128)
    if leading.size > n:
        raise InvalidRankError(f"rank {leading.size} exceeds dimension {n}")
    return low_rank_from_block(n, np.diag(leading))


def jordan_block(k, eigenvalue=0.0):
    J = np.diag(np.full(k, eigenvalue, dtype=np.complex128))
    J += np.diag(np.ones(k - 1, dtype=np.complex128), 1)
    return J


def mean_shift_factors(n, mu):
    """Factors of mu sqrt(n) phi phi^*, the matrix with every entry mu/sqrt(n)."""
    phi = unit_ones_vector(n)
    A = (mu * math.sqrt(n) * phi).astype(np.complex128).reshape(n, 1)
    B = phi.astype(np.complex128).reshape(1, n)
    return A, B


def rajan_abbott_psi(n, p, seed=0, trial=0, stream=1):
    """The random vector psi: entries sqrt((1-p)/p)/sqrt(n) w.p. p, else -sqrt(p/(1-p))/sqrt(n)."""
    n = _check_n(n)
    if not 0.0 < p < 1.0:
        raise InvalidParameterError(f"p must lie in (0, 1), got {p!r}")
    rng = as_seed_policy(seed).generator(trial, stream)
    excit = rng.random(n) < p
    vals = np.where(excit, math.sqrt((1.0 - p) / p), -math.sqrt(p / (1.0 - p)))
    return vals / math.sqrt(n)


def rajan_abbott_factors(n, mu, p, seed=0, trial=0, stream=1):
    """(A, B) = (mu sqrt(n) phi, psi^*) for the excitatory/inhibitory model."""
    if not mu > 0:
        raise InvalidParameterError("mu must be positive")
    psi = rajan_abbott_psi(n, p, seed, trial, stream)
    A = (mu * math.sqrt(n) * unit_ones_vector(n)).astype(np.complex128).reshape(n, 1)
    B = psi.astype(np.complex128).conj().reshape(1, n)
    return A, B


def row_sum_projector(n):
    """Orthogonal projector onto vectors whose coordinates sum to zero."""
    n = _check_n(n)
    return np.eye(n) - np.full((n, n), 1.0 / n)


@dataclass(frozen=True)
class PerturbedModel:
    """The operator X/sqrt(n) + A B with X unnormalized and rank(A B) <= k."""

    X: np.ndarray
    A: np.ndarray
    B: np.ndarray
    label: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        X, A, B = np.asarray(self.X), np.asarray(self.A), np.asarray(self.B)
        if X.ndim != 2 or X.shape[0] != X.shape[1]:
            raise InvalidDimensionError("X must be square")
        n = X.shape[0]
        if A.ndim != 2 or B.ndim != 2 or A.shape[0] != n or B.shape[1] != n or A.shape[1] != B.shape[0]:
            raise InvalidDimensionError(f"factor shapes {A.shape}, {B.shape} incompatible with n={n}")
        if A.shape[1] > n:
            raise InvalidRankError("rank bound exceeds dimension")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def k(self) -> int:
        return self.A.shape[1]

    @property
    def base(self):
        """X / sqrt(n)."""
        return self.X / math.sqrt(self.n)

    def perturbation_eigenvalues(self):
        """The k eigenvalues of B A, which are the nontrivial eigenvalues of A B."""
        from .linalg import eigenvalues

        if self.k == 0:
            return np.zeros(0, dtype=np.complex128)
        return eigenvalues(self.B @ self.A)

    def matvec(self, x):
        return self.base @ x + self.A @ (self.B @ x)


def assemble_dense(model: PerturbedModel):
    """Materialize X/sqrt(n) + A B."""
    M = model.base.astype(np.result_type(model.X, model.A, model.B, np.complex128))
    if model.k:
        M = M + model.A @ model.B
    return M
