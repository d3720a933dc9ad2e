"""Universal bounds on accessible and locally accessible information.

Deterministic bounds (Holevo, subentropy lower bound, the LOCC Holevo-like
upper bound, cardinality) are exact up to eigensolver precision.  The
local-subentropy lower bound is a Haar integral over product states and
is estimated by Monte Carlo with reported standard errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import mpmath
import numpy as np

from ._streams import DEFAULT_CHUNK, chunk_generators, parallel_map
from .ensembles import MultipartyEnsemble
from .qcore import (
    DensityMatrix,
    State,
    StateVector,
    eigenvalues,
    entropy_of_spectrum,
    fibers,
    gram_spectrum,
    partial_trace,
    reduced_spectrum,
)

DEGENERACY_TOL = 1e-9
DEFAULT_SAMPLES = 200_000
MIN_SAMPLES = 1_000


@dataclass(frozen=True)
class BoundReport:
    name: str
    value: float
    standard_error: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"bound {self.name} is not finite")
        if self.standard_error < 0:
            raise ValueError("standard error must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "standard_error": self.standard_error,
            **self.metadata,
        }


# ---------------------------------------------------------------- spectra


def average_spectrum(ens: MultipartyEnsemble, keep: Sequence[int] | None = None) -> np.ndarray:
    """Spectrum of the (optionally reduced) average state.

    Pure ensembles never form the full D x D average: the weighted fibers of
    all elements are stacked and their Gram spectrum is taken.
    """
    keep = list(range(len(ens.dims))) if keep is None else sorted(keep)
    if ens.is_pure:
        blocks = [math.sqrt(e.p) * fibers(e.state, keep) for e in ens.elements if e.p > 0]
        return gram_spectrum(np.hstack(blocks))
    if len(keep) == len(ens.dims):
        return eigenvalues(ens.average())
    return eigenvalues(partial_trace(ens.average(), keep))


def _element_spectrum(state: State, keep: Sequence[int] | None) -> np.ndarray:
    if keep is None or len(keep) == state.n_parties:
        if isinstance(state, StateVector):
            return np.array([1.0])
        return eigenvalues(state)
    return reduced_spectrum(state, keep)


def _mean_entropy(ens: MultipartyEnsemble, keep: Sequence[int] | None = None) -> float:
    return sum(e.p * entropy_of_spectrum(_element_spectrum(e.state, keep)) for e in ens.elements)


def holevo_chi(ens: MultipartyEnsemble) -> BoundReport:
    chi = entropy_of_spectrum(average_spectrum(ens)) - _mean_entropy(ens)
    return BoundReport("holevo_chi", max(chi, 0.0) if chi > -1e-9 else chi)


def cardinality_bound(ens: MultipartyEnsemble) -> BoundReport:
    return BoundReport("cardinality", math.log2(ens.cardinality))


def chi_locc_cut(ens: MultipartyEnsemble, group1: Sequence[int], group2: Sequence[int]) -> BoundReport:
    """LOCC Holevo-like upper bound across an arbitrary bipartition of the parties."""
    g1, g2 = sorted(group1), sorted(group2)
    if set(g1) & set(g2) or sorted(g1 + g2) != list(range(len(ens.dims))):
        raise ValueError("groups must partition the parties")
    s1 = entropy_of_spectrum(average_spectrum(ens, g1))
    s2 = entropy_of_spectrum(average_spectrum(ens, g2))
    loss = max(_mean_entropy(ens, g1), _mean_entropy(ens, g2))
    return BoundReport("chi_locc", s1 + s2 - loss, metadata={"cut": [g1, g2]})


def chi_locc(ens: MultipartyEnsemble) -> BoundReport:
    if len(ens.dims) != 2:
        raise ValueError(f"chi_locc needs a bipartite ensemble, got {len(ens.dims)} parties")
    return chi_locc_cut(ens, [0], [1])


# ---------------------------------------------------------------- subentropy


def _harmonic(n: int) -> mpmath.mpf:
    return mpmath.fsum(mpmath.mpf(1) / k for k in range(1, n + 1))


def _group(nodes: np.ndarray, tol: float) -> list[tuple[float, int]]:
    """Cluster sorted nodes closer than ``tol``; returns (mean, multiplicity)."""
    groups: list[list[float]] = []
    for x in sorted(nodes):
        if groups and x - groups[-1][-1] <= tol:
            groups[-1].append(x)
        else:
            groups.append([x])
    return [(float(np.mean(g)), len(g)) for g in groups]


def _xlogx_divided_difference(groups: list[tuple[float, int]]) -> mpmath.mpf:
    """Confluent divided difference of f(x) = x^r ln x over grouped nodes.

    r is the total node count; repeated nodes use f^(j)(x)/j!, with
    f^(j)(x) = r!/(r-j)! x^(r-j) (ln x + H_r - H_(r-j)).
    """
    r = sum(m for _, m in groups)
    distinct = sorted(x for x, _ in groups)
    gaps = [b - a for a, b in zip(distinct, distinct[1:])]
    loss = 0 if not gaps else max(0, -math.floor(math.log10(min(gaps))))
    with mpmath.workdps(30 + loss * max(r - 1, 1)):
        hr = _harmonic(r)
        nodes = []
        for x, m in groups:
            nodes.extend([mpmath.mpf(x)] * m)

        def deriv(x, j):
            c = mpmath.factorial(r) / mpmath.factorial(r - j)
            return c * x ** (r - j) * (mpmath.log(x) + hr - _harmonic(r - j)) / mpmath.factorial(j)

        table = [deriv(x, 0) for x in nodes]
        for level in range(1, r):
            nxt = []
            for i in range(r - level):
                a, b = nodes[i], nodes[i + level]
                if a == b:
                    nxt.append(deriv(a, level))
                else:
                    nxt.append((table[i + 1] - table[i]) / (b - a))
            table = nxt
        return +table[0]


def subentropy_of_spectrum(spectrum: Sequence[float], tol: float = DEGENERACY_TOL) -> float:
    w = np.asarray(spectrum, dtype=float)
    # zero eigenvalues drop out of the product form exactly
    w = w[w > 1e-12]
    if w.size <= 1:
        return 0.0
    dd = _xlogx_divided_difference(_group(w, tol))
    return float(-dd / mpmath.log(2))


def subentropy(state: State) -> float:
    if isinstance(state, StateVector):
        return 0.0
    return subentropy_of_spectrum(eigenvalues(state))


def subentropy_split(state: State | Sequence[float], h: float = 1e-6) -> float:
    """Cross-check of :func:`subentropy` that never uses derivatives.

    Degenerate clusters are split symmetrically by multiples of ``h`` and
    the (even-in-h) result is Richardson-extrapolated from h and h/2.
    """
    if isinstance(state, (DensityMatrix, StateVector)):
        if isinstance(state, StateVector):
            return 0.0
        w = eigenvalues(state)
    else:
        w = np.asarray(state, dtype=float)
    w = w[w > 1e-12]
    if w.size <= 1:
        return 0.0
    groups = _group(w, DEGENERACY_TOL)

    def split(step):
        nodes = []
        for x, m in groups:
            offsets = (np.arange(m) - (m - 1) / 2) * step
            nodes.extend((x + offsets).tolist())
        return subentropy_of_spectrum(nodes, tol=0.0)

    return (4 * split(h / 2) - split(h)) / 3


def jrw_lower(ens: MultipartyEnsemble) -> BoundReport:
    q_avg = subentropy_of_spectrum(average_spectrum(ens))
    q_mean = sum(e.p * subentropy(e.state) for e in ens.elements)
    return BoundReport("jrw_lower", q_avg - q_mean)


def marginal_jrw_lower(ens: MultipartyEnsemble, party: int) -> BoundReport:
    """Subentropy lower bound of the ensemble seen by a single party.

    Measuring one party alone is an LOCC strategy, so this lower-bounds
    the locally accessible information as well.
    """
    q_avg = subentropy_of_spectrum(average_spectrum(ens, [party]))
    q_mean = sum(e.p * subentropy_of_spectrum(_element_spectrum(e.state, [party])) for e in ens.elements)
    return BoundReport("marginal_jrw_lower", q_avg - q_mean, metadata={"party": ens.parties[party]})


# ---------------------------------------------------------------- local subentropy (Monte Carlo)


def _haar_factors(d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(n, d)) + 1j * rng.normal(size=(n, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def haar_product_sample(dims: Sequence[int], rng: np.random.Generator) -> StateVector:
    """One product state with every factor Haar-distributed."""
    d1, d2 = dims
    if d1 < 2 or d2 < 2:
        raise ValueError("dims must be >= 2")
    a = _haar_factors(d1, 1, rng)[0]
    b = _haar_factors(d2, 1, rng)[0]
    return StateVector((d1, d2), np.kron(a, b))


def _product_overlaps(states: list[State], dims, n: int, rng: np.random.Generator) -> np.ndarray:
    """f[s, k] = <a_s b_s| state_k |a_s b_s> for n Haar product samples."""
    a = _haar_factors(dims[0], n, rng)
    b = _haar_factors(dims[1], n, rng)
    w = (a[:, :, None] * b[:, None, :]).reshape(n, -1)
    out = np.empty((n, len(states)))
    for k, st in enumerate(states):
        if isinstance(st, StateVector):
            out[:, k] = np.abs(w.conj() @ st.amplitudes) ** 2
        else:
            out[:, k] = np.einsum("nd,de,ne->n", w.conj(), st.entries, w).real
    return np.maximum(out, 0.0)


def _xlog2x(f: np.ndarray) -> np.ndarray:
    safe = np.where(f > 0, f, 1.0)
    return np.where(f > 0, f * np.log2(safe), 0.0)


def _mc_samples(integrand, dims, states, samples, seed, threads, chunk):
    if samples < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {samples}")
    gens = chunk_generators(seed, samples, chunk)

    def work(item):
        n, rng = item
        return integrand(_product_overlaps(states, dims, n, rng))

    parts = parallel_map(work, gens, threads)
    g = np.concatenate(parts)
    return float(g.mean()), float(g.std(ddof=1) / math.sqrt(g.size))


def _check_bipartite(dims) -> tuple[int, int]:
    if len(dims) != 2:
        raise ValueError(f"local subentropy needs a bipartite state, got {len(dims)} parties")
    return int(dims[0]), int(dims[1])


def local_subentropy_mc(
    state: State,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    threads: int = 1,
    chunk: int = DEFAULT_CHUNK,
) -> BoundReport:
    """Monte Carlo estimate of -d1 d2 E[f log2 f], f = <a b|state|a b>."""
    dims = _check_bipartite(state.dims)
    scale = dims[0] * dims[1]
    value, se = _mc_samples(
        lambda f: -scale * _xlog2x(f[:, 0]), dims, [state], samples, seed, threads, chunk
    )
    return BoundReport("local_subentropy", value, se, {"samples": samples, "seed": seed})


def lambda_locc(
    ens: MultipartyEnsemble,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    threads: int = 1,
    chunk: int = DEFAULT_CHUNK,
) -> BoundReport:
    """Local-subentropy lower bound with common random numbers for all terms.

    Per sample the integrand is -d1 d2 [f_avg log f_avg - sum_i p_i f_i log f_i],
    whose mean is the difference of local subentropies.
    """
    dims = _check_bipartite(ens.dims)
    scale = dims[0] * dims[1]
    p = ens.probs

    def integrand(f):
        favg = f @ p
        return -scale * (_xlog2x(favg) - _xlog2x(f) @ p)

    value, se = _mc_samples(integrand, dims, ens.states, samples, seed, threads, chunk)
    return BoundReport("lambda_locc", value, se, {"samples": samples, "seed": seed})
