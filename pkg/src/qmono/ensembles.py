"""Multiparty ensembles, the case-study registry, pair reductions and file I/O."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .qcore import (
    DensityMatrix,
    ProbabilityDistribution,
    State,
    StateError,
    StateVector,
    fibers,
    partial_trace,
    product_state,
    trace_distance,
)

MAX_CAT_PARTNERS = 20
FILE_TOL = 1e-6
DEFAULT_OVERLAP = 0.1  # <0|n> for the nonorthogonal case


class EnsembleError(ValueError):
    pass


class EnsembleFormatError(EnsembleError):
    """Malformed ensemble file; the message carries line or field context."""


@dataclass(frozen=True, eq=False)
class Element:
    p: float
    state: State
    label: str = ""


@dataclass(frozen=True, eq=False)
class MultipartyEnsemble:
    dims: tuple[int, ...]
    elements: tuple[Element, ...]
    parties: tuple[str, ...] = field(default=())
    name: str = ""

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        elements = tuple(self.elements)
        parties = tuple(self.parties) or default_parties(len(dims))
        if len(parties) != len(dims):
            raise EnsembleError(f"{len(parties)} party labels for {len(dims)} parties")
        if len(set(parties)) != len(parties):
            raise EnsembleError("party labels must be unique")
        if len(dims) < 2:
            raise EnsembleError("an ensemble needs at least two parties")
        if not elements:
            raise EnsembleError("an ensemble needs at least one element")
        for k, e in enumerate(elements):
            if tuple(e.state.dims) != dims:
                raise EnsembleError(
                    f"element {k} has dims {list(e.state.dims)}, ensemble has {list(dims)}"
                )
        try:
            ProbabilityDistribution(np.array([e.p for e in elements]))
        except ValueError as exc:
            raise EnsembleError(f"probabilities must sum to 1 ({exc})") from None
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "parties", parties)

    @property
    def cardinality(self) -> int:
        return len(self.elements)

    @property
    def n_partners(self) -> int:
        return len(self.dims) - 1

    @property
    def probs(self) -> np.ndarray:
        return np.array([e.p for e in self.elements])

    @property
    def states(self) -> list[State]:
        return [e.state for e in self.elements]

    @property
    def is_pure(self) -> bool:
        return all(isinstance(e.state, StateVector) for e in self.elements)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def party_index(self, label: str | int) -> int:
        if isinstance(label, (int, np.integer)):
            if not 0 <= label < len(self.parties):
                raise EnsembleError(f"unknown party index {label}")
            return int(label)
        try:
            return self.parties.index(label)
        except ValueError:
            raise EnsembleError(f"unknown party {label!r}; parties are {list(self.parties)}") from None

    def average(self) -> DensityMatrix:
        m = sum(e.p * e.state.to_density().entries for e in self.elements)
        return DensityMatrix(self.dims, m)

    def density_stack(self) -> np.ndarray:
        return np.array([e.state.to_density().entries for e in self.elements])


def default_parties(n: int) -> tuple[str, ...]:
    return ("A",) + tuple(f"B{k}" for k in range(1, n))


# ---------------------------------------------------------------- case registry

_S = 1 / math.sqrt(2)
ZERO = np.array([1.0, 0.0])
ONE = np.array([0.0, 1.0])
PLUS = np.array([_S, _S])
MINUS = np.array([_S, -_S])
_LOCAL = {"0": ZERO, "1": ONE, "+": PLUS, "-": MINUS}


def _basis_sum(dims, terms: Sequence[tuple[complex, str]]) -> StateVector:
    v = np.zeros(int(np.prod(dims)), dtype=complex)
    for amp, digits in terms:
        v[np.ravel_multi_index(tuple(int(c) for c in digits), tuple(dims))] += amp
    return StateVector(tuple(dims), v / np.linalg.norm(v))


def _cat_pair(n_partners: int) -> list[StateVector]:
    n = n_partners + 1
    dims = (2,) * n
    d = 2**n
    psi = np.zeros(d, dtype=complex)
    psi[0] = psi[d - 1] = _S
    # identity on A, sigma_x on every B flips all B bits
    phi = np.zeros(d, dtype=complex)
    phi[(1 << (n - 1)) - 1] = _S  # |0 1...1>
    phi[1 << (n - 1)] = _S  # |1 0...0>
    return [StateVector(dims, psi), StateVector(dims, phi)]


def ghz_basis() -> list[tuple[str, StateVector]]:
    """The eight three-qubit GHZ states (|0jk> +- |1 ~j ~k>)/sqrt2."""
    out = []
    for j in "01":
        for k in "01":
            jb, kb = str(1 - int(j)), str(1 - int(k))
            for sign, tag in ((1, "+"), (-1, "-")):
                out.append(
                    (f"0{j}{k}{tag}1{jb}{kb}", _basis_sum((2, 2, 2), [(1, "0" + j + k), (sign, "1" + jb + kb)]))
                )
    return out


CASE_IDS = (
    "I-pair",
    "I-full-basis",
    "II-E1",
    "II-E2",
    "II-E3",
    "III-cat",
    "IV-ET",
    "IV-EP",
    "IV-nonorth",
    "V-shifts",
)

CASE_GROUPS = {
    "I": ("I-pair", "I-full-basis"),
    "II": ("II-E1", "II-E2", "II-E3"),
    "III": ("III-cat",),
    "IV": ("IV-ET", "IV-EP", "IV-nonorth"),
    "V": ("V-shifts",),
}


@dataclass(frozen=True)
class EnsembleCaseId:
    name: str
    n: int | None = None
    theta: float | None = None

    def __post_init__(self):
        if self.name not in CASE_IDS:
            raise EnsembleError(f"unknown case {self.name!r}; known: {', '.join(CASE_IDS)}")
        if self.name == "III-cat":
            n = 2 if self.n is None else int(self.n)
            if not 2 <= n <= MAX_CAT_PARTNERS:
                raise EnsembleError(f"III-cat needs 2 <= N <= {MAX_CAT_PARTNERS}, got {n}")
            object.__setattr__(self, "n", n)
        elif self.n is not None:
            raise EnsembleError("N is only meaningful for III-cat")
        if self.name == "IV-nonorth":
            theta = default_theta() if self.theta is None else float(self.theta)
            if not 0 < theta < math.pi / 2:
                raise EnsembleError(f"theta must lie in (0, pi/2), got {theta}")
            object.__setattr__(self, "theta", theta)
        elif self.theta is not None:
            raise EnsembleError("theta is only meaningful for IV-nonorth")

    def __str__(self):
        if self.name == "III-cat":
            return f"III-cat({self.n})"
        if self.name == "IV-nonorth":
            return f"IV-nonorth({self.theta!r})"
        return self.name

    @classmethod
    def parse(cls, text: str) -> "EnsembleCaseId":
        """Parse ``II-E1``, ``III-cat(5)`` or ``IV-nonorth(0.1)``."""
        m = re.fullmatch(r"\s*([A-Za-z0-9-]+)\s*(?:\(\s*([^)]*)\s*\))?\s*", text)
        if not m:
            raise EnsembleError(f"cannot parse case id {text!r}")
        name, arg = m.group(1), m.group(2)
        if arg is None:
            return cls(name)
        if name == "III-cat":
            return cls(name, n=int(arg))
        if name == "IV-nonorth":
            return cls(name, theta=float(arg))
        raise EnsembleError(f"case {name!r} takes no parameter")


def default_theta() -> float:
    return math.asin(DEFAULT_OVERLAP)


def build_case(case: EnsembleCaseId | str) -> MultipartyEnsemble:
    if isinstance(case, str):
        case = EnsembleCaseId.parse(case)
    name = case.name
    q3 = (2, 2, 2)
    if name == "I-pair":
        items = [
            ("psi0+", _basis_sum(q3, [(1, "000"), (1, "111")])),
            ("psi0-", _basis_sum(q3, [(1, "000"), (-1, "111")])),
        ]
    elif name == "I-full-basis":
        items = ghz_basis()
    elif name == "II-E1":
        items = [
            ("psi0+", _basis_sum(q3, [(1, "000"), (1, "111")])),
            ("psi3+", _basis_sum(q3, [(1, "011"), (-1, "100")])),
        ]
    elif name == "II-E2":
        items = [
            ("psi+", _basis_sum(q3, [(1, "000"), (1, "011")])),
            ("psi-", _basis_sum(q3, [(1, "100"), (-1, "111")])),
        ]
    elif name == "II-E3":
        items = [("000", _basis_sum(q3, [(1, "000")])), ("111", _basis_sum(q3, [(1, "111")]))]
    elif name == "III-cat":
        psi, phi = _cat_pair(case.n)
        items = [("psi_cat", psi), ("phi_cat", phi)]
    elif name == "IV-ET":
        t3 = (3, 3, 3)
        items = [
            ("000+111", _basis_sum(t3, [(1, "000"), (1, "111")])),
            ("011+122", _basis_sum(t3, [(1, "011"), (1, "122")])),
            ("100+200", _basis_sum(t3, [(1, "100"), (1, "200")])),
        ]
    elif name == "IV-EP":
        items = [(f"{i}{j}{k}", _basis_sum(q3, [(1, f"{i}{j}{k}")])) for i in "01" for j in "01" for k in "01"]
    elif name == "IV-nonorth":
        n_vec = math.sin(case.theta) * ZERO + math.cos(case.theta) * ONE
        items = [("000", _basis_sum(q3, [(1, "000")])), ("nnn", product_state([n_vec] * 3))]
    elif name == "V-shifts":
        items = [(w, product_state([_LOCAL[c] for c in w])) for w in ("01+", "1+0", "+01", "---")]
    else:  # pragma: no cover - guarded by EnsembleCaseId
        raise EnsembleError(name)
    p = 1.0 / len(items)
    dims = items[0][1].dims
    return MultipartyEnsemble(dims, tuple(Element(p, s, lab) for lab, s in items), name=str(case))


# ---------------------------------------------------------------- transformations


def reduce(ens: MultipartyEnsemble, keep: Sequence[int]) -> MultipartyEnsemble:
    keep = sorted(keep)
    elements = tuple(Element(e.p, partial_trace(e.state, keep), e.label) for e in ens.elements)
    return MultipartyEnsemble(
        tuple(ens.dims[k] for k in keep),
        elements,
        tuple(ens.parties[k] for k in keep),
        name=f"{ens.name}|{''.join(ens.parties[k] for k in keep)}",
    )


def _pure_reduction(state: StateVector, keep: list[int]) -> State:
    """Keep the reduction as a vector when the traced parties factor out."""
    m = fibers(state, keep)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    if s.size < 2 or s[1] < 1e-12:
        v = u[:, 0]
        # fix the global phase so reductions compare cleanly
        k = np.argmax(np.abs(v))
        v = v * (abs(v[k]) / v[k])
        return StateVector(tuple(state.dims[k] for k in keep), v)
    dm = m @ m.conj().T
    return DensityMatrix(tuple(state.dims[k] for k in keep), dm)


def reduce_to_pair(ens: MultipartyEnsemble, partner: str | int) -> MultipartyEnsemble:
    """Bipartite ensemble seen by A and one partner.

    Reductions that remain pure (the traced parties are in a product with
    the pair) are kept as vectors; everything else becomes a matrix.
    """
    j = ens.party_index(partner)
    if j == 0:
        raise EnsembleError("partner must be one of the B parties, not A")
    keep = [0, j]
    elements = []
    for e in ens.elements:
        if isinstance(e.state, StateVector):
            st = _pure_reduction(e.state, keep)
        else:
            st = partial_trace(e.state, keep)
        elements.append(Element(e.p, st, e.label))
    return MultipartyEnsemble(
        (ens.dims[0], ens.dims[j]),
        tuple(elements),
        (ens.parties[0], ens.parties[j]),
        name=f"{ens.name}|{ens.parties[0]}:{ens.parties[j]}",
    )


def permute_parties(ens: MultipartyEnsemble, order: Sequence[int]) -> MultipartyEnsemble:
    """Reorder the tensor factors; the party labels travel with their factor."""
    order = list(order)
    n = len(ens.dims)
    dims = tuple(ens.dims[k] for k in order)
    out = []
    for e in ens.elements:
        if isinstance(e.state, StateVector):
            t = np.transpose(e.state.tensor(), order)
            st = StateVector(dims, t.ravel())
        else:
            t = e.state.entries.reshape(ens.dims + ens.dims)
            t = np.transpose(t, order + [n + k for k in order])
            st = DensityMatrix(dims, t.reshape(e.state.dim, e.state.dim))
        out.append(Element(e.p, st, e.label))
    return MultipartyEnsemble(dims, tuple(out), tuple(ens.parties[k] for k in order), name=ens.name)


def swap_parties(ens: MultipartyEnsemble, p1: str | int, p2: str | int) -> MultipartyEnsemble:
    """Exchange the contents of two equal-dimension subsystems, keeping labels in place."""
    i, j = ens.party_index(p1), ens.party_index(p2)
    if ens.dims[i] != ens.dims[j]:
        raise EnsembleError(f"cannot swap parties of dimension {ens.dims[i]} and {ens.dims[j]}")
    order = list(range(len(ens.dims)))
    order[i], order[j] = j, i
    swapped = permute_parties(ens, order)
    return MultipartyEnsemble(swapped.dims, swapped.elements, ens.parties, name=ens.name)


def same_ensemble(a: MultipartyEnsemble, b: MultipartyEnsemble, tol: float = 1e-9) -> bool:
    """Multiset equality of (probability, state) pairs by greedy matching."""
    if a.dims != b.dims or a.cardinality != b.cardinality:
        return False
    unused = list(range(b.cardinality))
    for e in a.elements:
        hit = None
        for k in unused:
            f = b.elements[k]
            if abs(e.p - f.p) <= tol and trace_distance(e.state, f.state) < tol:
                hit = k
                break
        if hit is None:
            return False
        unused.remove(hit)
    return True


def is_swap_invariant(ens: MultipartyEnsemble, p1: str | int, p2: str | int) -> bool:
    return same_ensemble(ens, swap_parties(ens, p1, p2))


def states_identical(ens: MultipartyEnsemble, tol: float = 1e-9) -> bool:
    """True when every element carries the same state (no index information)."""
    first = ens.elements[0].state
    return all(trace_distance(first, e.state) < tol for e in ens.elements[1:])


# ---------------------------------------------------------------- file format


def _encode_complex(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def ensemble_to_dict(ens: MultipartyEnsemble) -> dict[str, Any]:
    elements = []
    for e in ens.elements:
        item: dict[str, Any] = {"p": float(e.p), "label": e.label}
        if isinstance(e.state, StateVector):
            item["vector"] = [_encode_complex(z) for z in e.state.amplitudes]
        else:
            item["matrix"] = [[_encode_complex(z) for z in row] for row in e.state.entries]
        elements.append(item)
    return {"dims": list(ens.dims), "parties": list(ens.parties), "elements": elements}


def serialize_ensemble(ens: MultipartyEnsemble) -> str:
    return json.dumps(ensemble_to_dict(ens), indent=1)


def _complex_array(raw: Any, where: str, ndim: int) -> np.ndarray:
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError):
        raise EnsembleFormatError(f"{where}: entries must be [re, im] number pairs") from None
    if arr.ndim != ndim + 1 or arr.shape[-1] != 2:
        raise EnsembleFormatError(f"{where}: expected nested [re, im] pairs of depth {ndim}")
    return arr[..., 0] + 1j * arr[..., 1]


def ensemble_from_dict(data: Any) -> MultipartyEnsemble:
    if not isinstance(data, dict):
        raise EnsembleFormatError("top level must be an object")
    for key in ("dims", "elements"):
        if key not in data:
            raise EnsembleFormatError(f"missing field {key!r}")
    dims = data["dims"]
    if not isinstance(dims, list) or not all(isinstance(d, int) and d >= 2 for d in dims):
        raise EnsembleFormatError("dims: expected a list of integers >= 2")
    dims = tuple(dims)
    parties = tuple(data.get("parties") or default_parties(len(dims)))
    if len(parties) != len(dims):
        raise EnsembleFormatError(f"parties: {len(parties)} labels for {len(dims)} dims")
    raw_elements = data["elements"]
    if not isinstance(raw_elements, list) or not raw_elements:
        raise EnsembleFormatError("elements: expected a nonempty list")
    d = int(np.prod(dims))
    probs = []
    states: list[State] = []
    labels = []
    for k, item in enumerate(raw_elements):
        where = f"elements[{k}]"
        if not isinstance(item, dict) or "p" not in item:
            raise EnsembleFormatError(f"{where}: expected an object with field 'p'")
        p = item["p"]
        if not isinstance(p, (int, float)) or p < 0:
            raise EnsembleFormatError(f"{where}.p: expected a nonnegative number")
        probs.append(float(p))
        labels.append(str(item.get("label", k)))
        if ("vector" in item) == ("matrix" in item):
            raise EnsembleFormatError(f"{where}: give exactly one of 'vector' or 'matrix'")
        if "vector" in item:
            v = _complex_array(item["vector"], f"{where}.vector", 1)
            if v.size != d:
                raise EnsembleFormatError(
                    f"{where}.vector: dimension mismatch, {v.size} amplitudes for dims {list(dims)} (D={d})"
                )
            norm = np.linalg.norm(v)
            if abs(norm - 1) > FILE_TOL:
                raise EnsembleFormatError(f"{where}.vector: not normalized (norm {norm:.9g})")
            states.append(StateVector(dims, v / norm))
        else:
            m = _complex_array(item["matrix"], f"{where}.matrix", 2)
            if m.shape != (d, d):
                raise EnsembleFormatError(
                    f"{where}.matrix: dimension mismatch, shape {m.shape} for dims {list(dims)} (D={d})"
                )
            tr = np.trace(m).real
            if abs(tr - 1) > FILE_TOL:
                raise EnsembleFormatError(f"{where}.matrix: trace is {tr:.9g}, expected 1")
            try:
                states.append(DensityMatrix(dims, m / tr))
            except StateError as exc:
                raise EnsembleFormatError(f"{where}.matrix: {exc}") from None
    total = sum(probs)
    if abs(total - 1) > FILE_TOL:
        raise EnsembleFormatError(f"elements[*].p: probabilities must sum to 1 (got {total:.9g})")
    probs = [p / total for p in probs]
    elements = tuple(Element(p, s, lab) for p, s, lab in zip(probs, states, labels))
    try:
        return MultipartyEnsemble(dims, elements, parties, name=str(data.get("name", "")))
    except EnsembleError as exc:
        raise EnsembleFormatError(str(exc)) from None


def parse_ensemble(text: str) -> MultipartyEnsemble:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise EnsembleFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return ensemble_from_dict(data)


def load_ensemble(path: str) -> MultipartyEnsemble:
    with open(path, encoding="utf-8") as fh:
        return parse_ensemble(fh.read())
