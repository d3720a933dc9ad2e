"""Dense linear algebra and entropy primitives for small multiparty systems.

All logarithms are base 2.  States are immutable: the arrays held by
:class:`DensityMatrix` and :class:`StateVector` are marked read-only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

HERMITIAN_TOL = 1e-9
TRACE_TOL = 1e-9
NEG_EIG_TOL = 1e-9
NORM_TOL = 1e-9
ZERO_EIG = 1e-12


class StateError(ValueError):
    """Raised when an array does not describe a valid quantum state."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex, copy=True)
    arr.setflags(write=False)
    return arr


def _check_dims(dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims:
        raise StateError("dims must be nonempty")
    if any(d < 2 for d in dims):
        raise StateError(f"every party dimension must be >= 2, got {list(dims)}")
    return dims


@dataclass(frozen=True, eq=False)
class StateVector:
    dims: tuple[int, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        dims = _check_dims(self.dims)
        amps = _freeze(np.ravel(self.amplitudes))
        if amps.size != int(np.prod(dims)):
            raise StateError(
                f"vector of length {amps.size} does not match dims {list(dims)}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise StateError(f"state vector norm is {norm:.12g}, expected 1")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def n_parties(self) -> int:
        return len(self.dims)

    def to_density(self) -> "DensityMatrix":
        a = self.amplitudes
        return DensityMatrix(self.dims, np.outer(a, a.conj()))

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per party."""
        return self.amplitudes.reshape(self.dims)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    dims: tuple[int, ...]
    entries: np.ndarray

    def __post_init__(self):
        dims = _check_dims(self.dims)
        m = np.asarray(self.entries, dtype=complex)
        d = int(np.prod(dims))
        if m.shape != (d, d):
            raise StateError(f"matrix of shape {m.shape} does not match dims {list(dims)}")
        dev = np.max(np.abs(m - m.conj().T)) if d else 0.0
        if dev > HERMITIAN_TOL:
            raise StateError(f"matrix is not Hermitian (max deviation {dev:.3g})")
        m = 0.5 * (m + m.conj().T)
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise StateError(f"trace is {tr:.12g}, expected 1")
        lo = np.linalg.eigvalsh(m)[0]
        if lo < -NEG_EIG_TOL:
            raise StateError(f"matrix has negative eigenvalue {lo:.3g}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "entries", _freeze(m))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def n_parties(self) -> int:
        return len(self.dims)

    def to_density(self) -> "DensityMatrix":
        return self


State = Union[StateVector, DensityMatrix]


@dataclass(frozen=True, eq=False)
class ProbabilityDistribution:
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        if w.size == 0:
            raise StateError("empty distribution")
        if np.any(w < -1e-12) or np.any(w > 1 + 1e-12):
            raise StateError("weights must lie in [0, 1]")
        if abs(w.sum() - 1.0) > 1e-9:
            raise StateError(f"weights sum to {w.sum():.12g}, expected 1")
        w = np.clip(w, 0.0, 1.0)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.weights.size


def ket(dims: Sequence[int], digits: Sequence[int] | str) -> StateVector:
    """Computational basis state, e.g. ``ket([2, 2], "01")``."""
    if isinstance(digits, str):
        digits = [int(c) for c in digits]
    idx = np.ravel_multi_index(tuple(digits), tuple(dims))
    v = np.zeros(int(np.prod(dims)), dtype=complex)
    v[idx] = 1.0
    return StateVector(tuple(dims), v)


def product_state(factors: Iterable[np.ndarray]) -> StateVector:
    """Normalized tensor product of single-party vectors."""
    factors = [np.asarray(f, dtype=complex) for f in factors]
    v = factors[0]
    for f in factors[1:]:
        v = np.kron(v, f)
    return StateVector(tuple(f.size for f in factors), v / np.linalg.norm(v))


def tensor(a: State, b: State) -> State:
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(a.dims + b.dims, np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(a.dims + b.dims, np.kron(a.entries, b.entries))
    raise TypeError("tensor operands must be of the same kind")


def _keep_list(n: int, keep: Iterable[int]) -> list[int]:
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep must name at least one party")
    bad = [k for k in keep if k < 0 or k >= n]
    if bad:
        raise IndexError(f"invalid party index {bad[0]} for {n} parties")
    return keep


def fibers(state: StateVector, keep: Iterable[int]) -> np.ndarray:
    """Amplitudes regrouped as a (D_keep, D_rest) matrix.

    Column ``c`` is the unnormalized conditional vector of the kept
    parties given basis state ``c`` of the traced parties.
    """
    keep = _keep_list(state.n_parties, keep)
    rest = [k for k in range(state.n_parties) if k not in keep]
    t = np.transpose(state.tensor(), keep + rest)
    dk = int(np.prod([state.dims[k] for k in keep]))
    return t.reshape(dk, -1)


def partial_trace(state: State, keep: Iterable[int]) -> DensityMatrix:
    keep = _keep_list(state.n_parties, keep)
    dims = tuple(state.dims[k] for k in keep)
    if isinstance(state, StateVector):
        m = fibers(state, keep)
        return DensityMatrix(dims, m @ m.conj().T)
    n = state.n_parties
    rest = [k for k in range(n) if k not in keep]
    t = state.entries.reshape(state.dims + state.dims)
    t = np.transpose(t, keep + rest + [n + k for k in keep] + [n + k for k in rest])
    dk = int(np.prod(dims))
    dr = state.dim // dk
    t = t.reshape(dk, dr, dk, dr)
    return DensityMatrix(dims, np.einsum("arbr->ab", t))


def _clamp_spectrum(w: np.ndarray) -> np.ndarray:
    if w.size and w[-1] < -NEG_EIG_TOL:
        raise StateError(f"negative eigenvalue {w[-1]:.3g}")
    return np.clip(w, 0.0, 1.0)


def eigenvalues(state: DensityMatrix) -> np.ndarray:
    """Spectrum in descending order, clamped to [0, 1]."""
    m = np.asarray(state.entries if isinstance(state, DensityMatrix) else state)
    if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
        raise StateError("eigenvalues requested for a non-Hermitian matrix")
    w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))[::-1]
    return _clamp_spectrum(w)


def gram_spectrum(vectors: np.ndarray) -> np.ndarray:
    """Nonzero spectrum of ``sum_c v_c v_c^dagger`` for the columns of ``vectors``.

    Uses whichever of the outer (D x D) or Gram (k x k) matrices is smaller;
    both share their nonzero eigenvalues.
    """
    d, k = vectors.shape
    m = vectors @ vectors.conj().T if d <= k else vectors.conj().T @ vectors
    w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))[::-1]
    return _clamp_spectrum(w)


def reduced_spectrum(state: State, keep: Iterable[int]) -> np.ndarray:
    """Spectrum of a reduced state without forming large matrices for pure input."""
    if isinstance(state, StateVector):
        return gram_spectrum(fibers(state, keep))
    return eigenvalues(partial_trace(state, keep))


def entropy_of_spectrum(w: np.ndarray) -> float:
    w = np.asarray(w, dtype=float)
    w = w[w > ZERO_EIG]
    return float(-np.sum(w * np.log2(w)))


def von_neumann_entropy(state: State) -> float:
    if isinstance(state, StateVector):
        return 0.0
    return entropy_of_spectrum(eigenvalues(state))


def shannon_entropy(dist: ProbabilityDistribution | Sequence[float] | np.ndarray) -> float:
    if not isinstance(dist, ProbabilityDistribution):
        dist = ProbabilityDistribution(np.asarray(dist, dtype=float))
    w = dist.weights[dist.weights > 0]
    return float(-np.sum(w * np.log2(w)))


def apply_local(op: np.ndarray, tensor_: np.ndarray, axis: int) -> np.ndarray:
    """Contract a single-party operator into one axis of a state tensor."""
    out = np.tensordot(op, tensor_, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


def local_unitary(state: State, unitaries: Sequence[np.ndarray]) -> State:
    """Apply ``U_1 (x) U_2 (x) ...`` to a state."""
    if isinstance(state, StateVector):
        t = state.tensor()
        for k, u in enumerate(unitaries):
            t = apply_local(np.asarray(u), t, k)
        return StateVector(state.dims, t.ravel())
    full = np.array([[1.0]], dtype=complex)
    for u in unitaries:
        full = np.kron(full, np.asarray(u))
    return DensityMatrix(state.dims, full @ state.entries @ full.conj().T)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Gaussian matrix."""
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_density(dims: Sequence[int], rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Random mixed state from the induced (Ginibre) measure."""
    d = int(np.prod(dims))
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    m = g @ g.conj().T
    return DensityMatrix(tuple(dims), m / np.trace(m).real)


def random_pure(dims: Sequence[int], rng: np.random.Generator) -> StateVector:
    d = int(np.prod(dims))
    z = rng.normal(size=d) + 1j * rng.normal(size=d)
    return StateVector(tuple(dims), z / np.linalg.norm(z))


def trace_distance(a: State, b: State) -> float:
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        # sqrt(1 - |<a|b>|^2) as the norm of b's component orthogonal to a; no cancellation
        va, vb = a.amplitudes, b.amplitudes
        return float(np.linalg.norm(vb - np.vdot(va, vb) * va))
    diff = a.to_density().entries - b.to_density().entries
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))
