"""Truncated Fock / two-level spaces, the operator algebra on them, and
canonical states.

Conventions:
  * factor 0 is the slowest-varying index of the composite basis
    (``np.kron`` order), so ``|n> (x) |g>`` has flat index ``n * 2 + 0``;
  * two-level basis: index 0 = ground ``|g>``, index 1 = excited ``|e>``,
    with ``sigma_z |e> = +|e>``;
  * hard truncation at the Fock cutoff: ``create() @ |dim-1> = 0``.  The
    commutator ``[a, a+] = 1`` therefore holds only below the top level,
    and evolution code watches the top-level population to keep the
    truncation error observable.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy.stats import poisson

from .errors import (
    CoherentTailError,
    FactorError,
    HermiticityError,
    NormalizationError,
    SpaceMismatchError,
)

HERMITIAN_ATOL = 1e-12
NORM_ATOL = 1e-9

__all__ = [
    "Boson", "TwoLevel", "SpaceDescriptor", "Operator", "StateVector",
    "CoherentSpec", "annihilation", "creation", "number", "identity",
    "pauli", "tensor", "basis_state", "ground_state", "coherent_state",
    "expectation", "variance", "apply", "min_coherent_cutoff",
]


@dataclass(frozen=True)
class Boson:
    """Bosonic mode truncated to Fock levels 0 .. dim-1."""

    dim: int

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"Boson cutoff must be >= 2, got {self.dim}")


@dataclass(frozen=True)
class TwoLevel:
    """Two-level system; basis index 0 = |g>, 1 = |e>."""

    @property
    def dim(self) -> int:
        return 2


Factor = Boson | TwoLevel


@dataclass(frozen=True)
class SpaceDescriptor:
    """Ordered tensor product of Boson / TwoLevel factors."""

    factors: tuple[Factor, ...]

    def __post_init__(self):
        if not self.factors:
            raise ValueError("space needs at least one factor")
        object.__setattr__(self, "factors", tuple(self.factors))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.dim for f in self.factors)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    def factor(self, index: int) -> Factor:
        if not 0 <= index < len(self.factors):
            raise FactorError(
                f"factor index {index} out of range for {len(self.factors)} factors")
        return self.factors[index]

    def boson_factor(self, index: int) -> Boson:
        f = self.factor(index)
        if not isinstance(f, Boson):
            raise FactorError(f"factor {index} is not a bosonic mode")
        return f

    def two_level_factor(self, index: int) -> TwoLevel:
        f = self.factor(index)
        if not isinstance(f, TwoLevel):
            raise FactorError(f"factor {index} is not a two-level system")
        return f


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense complex matrix on a composite space, immutable after creation.

    ``hermitian_hint=True`` is verified at construction (elementwise
    deviation from the adjoint at most 1e-12 absolute).
    """

    space: SpaceDescriptor
    matrix: np.ndarray
    hermitian_hint: bool = False

    def __post_init__(self):
        m = _readonly(self.matrix)
        d = self.space.total_dim
        if m.shape != (d, d):
            raise ValueError(f"matrix shape {m.shape} does not match space dim {d}")
        if self.hermitian_hint:
            dev = np.max(np.abs(m - m.conj().T)) if d else 0.0
            if dev > HERMITIAN_ATOL:
                raise HermiticityError(
                    f"hermitian_hint set but max|M - M^+| = {dev:.3e}")
        object.__setattr__(self, "matrix", m)

    # -- algebra ------------------------------------------------------
    def _check_space(self, other: "Operator"):
        if self.space != other.space:
            raise SpaceMismatchError("operators live on different spaces")

    def __add__(self, other: "Operator") -> "Operator":
        self._check_space(other)
        return Operator(self.space, self.matrix + other.matrix,
                        hermitian_hint=self.hermitian_hint and other.hermitian_hint)

    def __sub__(self, other: "Operator") -> "Operator":
        self._check_space(other)
        return Operator(self.space, self.matrix - other.matrix,
                        hermitian_hint=self.hermitian_hint and other.hermitian_hint)

    def __mul__(self, scalar) -> "Operator":
        herm = self.hermitian_hint and np.isreal(scalar) and bool(np.real(scalar) == scalar)
        return Operator(self.space, self.matrix * scalar, hermitian_hint=bool(herm))

    __rmul__ = __mul__

    def __matmul__(self, other: "Operator") -> "Operator":
        self._check_space(other)
        return Operator(self.space, self.matrix @ other.matrix)

    def dagger(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T,
                        hermitian_hint=self.hermitian_hint)

    def commutator(self, other: "Operator") -> "Operator":
        self._check_space(other)
        return Operator(self.space, self.matrix @ other.matrix - other.matrix @ self.matrix)

    def is_hermitian(self, atol: float = HERMITIAN_ATOL) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= atol)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized amplitude vector over the composite basis."""

    space: SpaceDescriptor
    amplitudes: np.ndarray

    def __post_init__(self):
        v = _readonly(self.amplitudes)
        if v.shape != (self.space.total_dim,):
            raise ValueError(
                f"amplitude length {v.shape} does not match space dim {self.space.total_dim}")
        nrm = float(np.linalg.norm(v))
        if abs(nrm - 1.0) > NORM_ATOL:
            raise NormalizationError(f"state norm {nrm!r} outside 1 +/- {NORM_ATOL}")
        object.__setattr__(self, "amplitudes", v)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def marginal_populations(self, factor_index: int) -> np.ndarray:
        """Populations of factor ``factor_index`` after summing out the rest."""
        self.space.factor(factor_index)
        probs = np.abs(self.amplitudes.reshape(self.space.dims)) ** 2
        axes = tuple(i for i in range(len(self.space.factors)) if i != factor_index)
        return probs.sum(axis=axes)

    def population(self, factor_index: int, level: int) -> float:
        pops = self.marginal_populations(factor_index)
        if not 0 <= level < pops.size:
            raise FactorError(f"level {level} out of range for factor {factor_index}")
        return float(pops[level])


@dataclass(frozen=True)
class CoherentSpec:
    """Coherent amplitude plus the probability mass allowed above the cutoff."""

    alpha: complex
    tail_tolerance: float = 1e-12

    def __post_init__(self):
        if not 0.0 < self.tail_tolerance < 1.0:
            raise ValueError("tail_tolerance must lie in (0, 1)")


# ---------------------------------------------------------------------------
# operator constructors


def _embed(space: SpaceDescriptor, factor_index: int, block: np.ndarray,
           hermitian: bool = False) -> Operator:
    mats = [block if i == factor_index else np.eye(f.dim, dtype=complex)
            for i, f in enumerate(space.factors)]
    full = reduce(np.kron, mats)
    return Operator(space, full, hermitian_hint=hermitian)


def annihilation(space: SpaceDescriptor, factor_index: int) -> Operator:
    """Lowering operator on a bosonic factor: <n-1| a |n> = sqrt(n)."""
    dim = space.boson_factor(factor_index).dim
    block = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)
    return _embed(space, factor_index, block)


def creation(space: SpaceDescriptor, factor_index: int) -> Operator:
    """Raising operator; annihilates the top truncated level."""
    return annihilation(space, factor_index).dagger()


def number(space: SpaceDescriptor, factor_index: int) -> Operator:
    """Occupation operator diag(0 .. dim-1) on a bosonic factor."""
    dim = space.boson_factor(factor_index).dim
    block = np.diag(np.arange(dim, dtype=complex))
    return _embed(space, factor_index, block, hermitian=True)


def identity(space: SpaceDescriptor, factor_index: int | None = None) -> Operator:
    """Identity on the full composite space (factor_index kept for symmetry)."""
    if factor_index is not None:
        space.factor(factor_index)
    return Operator(space, np.eye(space.total_dim, dtype=complex), hermitian_hint=True)


_PAULI_BLOCKS = {
    # basis order (|g>, |e>), sigma_z |e> = +|e>
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, 1j], [-1j, 0]], dtype=complex),
    "z": np.array([[-1, 0], [0, 1]], dtype=complex),
    "plus": np.array([[0, 0], [1, 0]], dtype=complex),
    "minus": np.array([[0, 1], [0, 0]], dtype=complex),
}


def pauli(space: SpaceDescriptor, factor_index: int, which: str) -> Operator:
    """Pauli operator on a two-level factor; which in x, y, z, plus, minus."""
    space.two_level_factor(factor_index)
    if which not in _PAULI_BLOCKS:
        raise ValueError(f"unknown pauli label {which!r}")
    return _embed(space, factor_index, _PAULI_BLOCKS[which],
                  hermitian=which in ("x", "y", "z"))


def tensor(a: Operator, b: Operator) -> Operator:
    """Kronecker product consistent with factor order (a's factors first)."""
    space = SpaceDescriptor(a.space.factors + b.space.factors)
    return Operator(space, np.kron(a.matrix, b.matrix),
                    hermitian_hint=a.hermitian_hint and b.hermitian_hint)


# ---------------------------------------------------------------------------
# states


def basis_state(space: SpaceDescriptor, levels) -> StateVector:
    """Product basis state with the given level on each factor."""
    levels = tuple(levels)
    if len(levels) != len(space.factors):
        raise ValueError("one level per factor required")
    vecs = []
    for lv, f in zip(levels, space.factors):
        if not 0 <= lv < f.dim:
            raise ValueError(f"level {lv} out of range for factor of dim {f.dim}")
        v = np.zeros(f.dim, dtype=complex)
        v[lv] = 1.0
        vecs.append(v)
    return StateVector(space, reduce(np.kron, vecs))


def ground_state(space: SpaceDescriptor) -> StateVector:
    return basis_state(space, [0] * len(space.factors))


def poisson_tail(mean: float, cutoff_dim: int) -> float:
    """Probability mass of a Poisson(mean) at or above cutoff_dim."""
    if mean == 0.0:
        return 0.0
    return float(poisson.sf(cutoff_dim - 1, mean))


def min_coherent_cutoff(alpha: complex, tail_tolerance: float = 1e-12) -> int:
    """Smallest Fock dim whose Poisson tail is within tolerance."""
    mean = abs(alpha) ** 2
    if mean == 0.0:
        return 2
    dim = max(2, int(poisson.isf(tail_tolerance, mean)) + 1)
    while poisson_tail(mean, dim) > tail_tolerance:
        dim += 1
    return dim


def coherent_state(space: SpaceDescriptor, factor_index: int,
                   spec: CoherentSpec) -> StateVector:
    """Coherent state on one bosonic factor, ground state on all others.

    Fails loudly (CoherentTailError) when the truncated tail mass exceeds
    spec.tail_tolerance instead of silently renormalizing a bad cutoff.
    """
    dim = space.boson_factor(factor_index).dim
    mean = abs(spec.alpha) ** 2
    tail = poisson_tail(mean, dim)
    if tail > spec.tail_tolerance:
        raise CoherentTailError(
            f"cutoff {dim} keeps tail mass {tail:.3e} > {spec.tail_tolerance:.3e} "
            f"for |alpha|^2 = {mean:g}")
    n = np.arange(dim)
    log_fact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, dim)))))
    mags = np.exp(-mean / 2.0 + n * np.log(abs(spec.alpha)) - log_fact / 2.0) \
        if mean > 0 else np.eye(dim)[0]
    phases = np.exp(1j * n * np.angle(spec.alpha)) if mean > 0 else np.ones(dim)
    amp = mags * phases
    amp = amp / np.linalg.norm(amp)
    vecs = []
    for i, f in enumerate(space.factors):
        if i == factor_index:
            vecs.append(amp)
        else:
            v = np.zeros(f.dim, dtype=complex)
            v[0] = 1.0
            vecs.append(v)
    return StateVector(space, reduce(np.kron, vecs))


# ---------------------------------------------------------------------------
# functionals


def apply(op: Operator, psi: StateVector) -> np.ndarray:
    """Raw matrix-vector action; the result is not renormalized."""
    if op.space != psi.space:
        raise SpaceMismatchError("operator and state live on different spaces")
    return op.matrix @ psi.amplitudes


def expectation(op: Operator, psi: StateVector) -> complex:
    """<psi| op |psi>."""
    return complex(np.vdot(psi.amplitudes, apply(op, psi)))


def variance(op: Operator, psi: StateVector) -> float:
    """<op^2> - <op>^2; defined for hermitian operators only."""
    if not op.hermitian_hint:
        raise HermiticityError("variance requires an operator with hermitian_hint")
    opsi = apply(op, psi)
    mean = float(np.real(np.vdot(psi.amplitudes, opsi)))
    second = float(np.real(np.vdot(opsi, opsi)))
    return max(second - mean * mean, 0.0)
