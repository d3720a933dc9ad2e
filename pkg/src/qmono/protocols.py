"""Adaptive LOCC measurement trees and their exact simulation.

A protocol is a tree: each node is a local measurement on one party, and
branching on its outcome is the classical communication.  Simulation is
exact (no sampling) and produces the joint distribution of ensemble index
and leaf label.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence, Union

import numpy as np

from .ensembles import MultipartyEnsemble
from .qcore import StateVector, apply_local, shannon_entropy

COMPLETENESS_TOL = 1e-9
PRUNE = 1e-15
PRUNED_LABEL = "∅"
PRUNED_NOISE = 1e-18  # pruned mass below this is rounding noise and dropped


class ProtocolError(ValueError):
    pass


@dataclass(frozen=True)
class Leaf:
    pass


@dataclass(frozen=True, eq=False)
class MeasurementNode:
    party: int
    operators: tuple[np.ndarray, ...]
    children: tuple[Union["MeasurementNode", Leaf], ...] = ()

    def __post_init__(self):
        ops = tuple(np.array(k, dtype=complex) for k in self.operators)
        if not ops:
            raise ProtocolError("a measurement node needs at least one operator")
        d = ops[0].shape[0]
        for k in ops:
            if k.shape != (d, d):
                raise ProtocolError("all operators of a node must be square and of equal size")
            k.setflags(write=False)
        children = tuple(self.children) or tuple(Leaf() for _ in ops)
        if len(children) != len(ops):
            raise ProtocolError(f"{len(ops)} operators but {len(children)} children")
        total = sum(k.conj().T @ k for k in ops)
        dev = np.max(np.abs(total - np.eye(d)))
        if dev > COMPLETENESS_TOL:
            raise ProtocolError(
                f"incomplete measurement on party {self.party}: sum K^dag K deviates from identity by {dev:.3g}"
            )
        if int(self.party) < 0:
            raise ProtocolError(f"invalid party index {self.party}")
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "children", children)
        object.__setattr__(self, "party", int(self.party))

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]


def _label(prefix: str, k: int) -> str:
    return prefix + (str(k) if k < 10 else f"[{k}]")


@dataclass(frozen=True, eq=False)
class LoccProtocol:
    root: MeasurementNode
    name: str = ""

    def leaves(self) -> list[str]:
        out: list[str] = []

        def walk(node, prefix):
            for k, child in enumerate(node.children):
                lab = _label(prefix, k)
                if isinstance(child, Leaf):
                    out.append(lab)
                else:
                    walk(child, lab)

        walk(self.root, "")
        return out

    def nodes(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(c for c in node.children if isinstance(c, MeasurementNode))

    def depth(self) -> int:
        def d(node):
            return 1 + max((d(c) for c in node.children if isinstance(c, MeasurementNode)), default=0)

        return d(self.root)

    def conjugated(self, unitaries: Sequence[np.ndarray]) -> "LoccProtocol":
        """Same protocol expressed for states transformed by U_1 (x) U_2 (x) ..."""

        def conj(node):
            u = np.asarray(unitaries[node.party])
            ops = [u.conj().T @ k @ u for k in node.operators]
            kids = [c if isinstance(c, Leaf) else conj(c) for c in node.children]
            return MeasurementNode(node.party, tuple(ops), tuple(kids))

        return LoccProtocol(conj(self.root), self.name)


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """p(i, m) over ensemble index (rows) and outcome label (columns)."""

    matrix: np.ndarray
    outcomes: tuple[str, ...]
    priors: np.ndarray | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[1] != len(self.outcomes):
            raise ValueError("joint matrix shape does not match the outcome labels")
        if np.any(m < -1e-12):
            raise ValueError("joint probabilities must be nonnegative")
        m = np.maximum(m, 0.0)
        if abs(m.sum() - 1) > 1e-9:
            raise ValueError(f"joint distribution sums to {m.sum():.12g}")
        if self.priors is not None and np.max(np.abs(m.sum(axis=1) - self.priors)) > 1e-9:
            raise ValueError("row sums differ from the ensemble priors")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "outcomes", tuple(self.outcomes))

    @property
    def q(self) -> np.ndarray:
        return self.matrix.sum(axis=0)

    @property
    def p(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    def column(self, label: str) -> np.ndarray:
        return self.matrix[:, self.outcomes.index(label)]


# ---------------------------------------------------------------- simulation


def _check_protocol(ens: MultipartyEnsemble, prot: LoccProtocol) -> None:
    for node in prot.nodes():
        if node.party >= len(ens.dims):
            raise ProtocolError(
                f"protocol acts on party index {node.party}, ensemble has {len(ens.dims)} parties"
            )
        if node.dim != ens.dims[node.party]:
            raise ProtocolError(
                f"operators of dimension {node.dim} on party {node.party} of dimension {ens.dims[node.party]}"
            )


def _branch(node, t, pure, n, prefix, out, pruned):
    """Walk the tree for one (unnormalized) state tensor, accumulating leaf probabilities."""
    for k, op in enumerate(node.operators):
        lab = _label(prefix, k)
        if pure:
            t2 = apply_local(op, t, node.party)
            prob = float(np.vdot(t2, t2).real)
        else:
            t2 = apply_local(op, t, node.party)
            t2 = apply_local(op.conj(), t2, n + node.party)
            d = math.isqrt(t2.size)
            prob = float(np.trace(t2.reshape(d, d)).real)
        child = node.children[k]
        if prob < PRUNE:
            pruned[0] += max(prob, 0.0)
            continue
        if isinstance(child, Leaf):
            out[lab] = out.get(lab, 0.0) + prob
        else:
            _branch(child, t2, pure, n, lab, out, pruned)


def simulate(ens: MultipartyEnsemble, prot: LoccProtocol) -> JointDistribution:
    _check_protocol(ens, prot)
    labels = prot.leaves()
    n = len(ens.dims)
    rows = []
    pruned_any = False
    for e in ens.elements:
        out: dict[str, float] = {}
        pruned = [0.0]
        if isinstance(e.state, StateVector):
            _branch(prot.root, e.state.tensor(), True, n, "", out, pruned)
        else:
            t = e.state.entries.reshape(ens.dims + ens.dims)
            _branch(prot.root, t, False, n, "", out, pruned)
        if pruned[0] < PRUNED_NOISE:
            pruned[0] = 0.0
        # renormalize away rounding so rows match the priors exactly
        total = sum(out.values()) + pruned[0]
        row = {k: e.p * v / total for k, v in out.items()}
        if pruned[0] > 0:
            row[PRUNED_LABEL] = e.p * pruned[0] / total
            pruned_any = True
        rows.append(row)
    if pruned_any:
        labels = labels + [PRUNED_LABEL]
    matrix = np.array([[row.get(lab, 0.0) for lab in labels] for row in rows])
    return JointDistribution(matrix, tuple(labels), ens.probs)


def mutual_information(joint: JointDistribution) -> float:
    """H(priors) - sum_m q_m H(posterior_m), in bits."""
    m = joint.matrix
    q = m.sum(axis=0)
    total = shannon_entropy(m.sum(axis=1) / m.sum())
    for j in np.nonzero(q > 0)[0]:
        total -= q[j] * shannon_entropy(m[:, j] / q[j])
    return float(max(total, 0.0))


def mutual_information_symmetric(joint: JointDistribution) -> float:
    """H(i) + H(m) - H(i, m); algebraically equal to :func:`mutual_information`."""
    m = joint.matrix
    flat = m[m > 0]
    return float(
        shannon_entropy(m.sum(axis=1))
        + shannon_entropy(m.sum(axis=0))
        + np.sum(flat * np.log2(flat))
    )


def coarse_grain(joint: JointDistribution, merge: Mapping[str, str]) -> JointDistribution:
    """Sum outcome columns that share a class under ``merge``."""
    missing = [o for o in joint.outcomes if o not in merge]
    if missing:
        raise ValueError(f"merge map is not total: no class for outcome {missing[0]!r}")
    classes: list[str] = []
    for o in joint.outcomes:
        if merge[o] not in classes:
            classes.append(merge[o])
    m = np.zeros((joint.matrix.shape[0], len(classes)))
    for j, o in enumerate(joint.outcomes):
        m[:, classes.index(merge[o])] += joint.matrix[:, j]
    return JointDistribution(m, tuple(classes), joint.priors)


# ---------------------------------------------------------------- builders


def basis_projectors(basis: np.ndarray) -> tuple[np.ndarray, ...]:
    """Rank-1 projectors onto the columns of a unitary."""
    basis = np.asarray(basis, dtype=complex)
    return tuple(np.outer(basis[:, k], basis[:, k].conj()) for k in range(basis.shape[1]))


Z_BASIS = np.eye(2, dtype=complex)
X_BASIS = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


def projective_node(party: int, basis: np.ndarray, children: Sequence[Any] | None = None) -> MeasurementNode:
    ops = basis_projectors(basis)
    return MeasurementNode(party, ops, tuple(children) if children else ())


def trivial_protocol(dim: int, party: int = 0) -> LoccProtocol:
    return LoccProtocol(MeasurementNode(party, (np.eye(dim),)), "trivial")


def one_way_protocol(
    sender: int, receiver: int, sender_basis: np.ndarray, receiver_bases: Sequence[np.ndarray], name: str = ""
) -> LoccProtocol:
    """Sender measures, announces the outcome, receiver picks a basis accordingly."""
    kids = [projective_node(receiver, b) for b in receiver_bases]
    return LoccProtocol(projective_node(sender, sender_basis, kids), name)


def computational_protocol(dims: Sequence[int], order: Sequence[int] | None = None) -> LoccProtocol:
    """Every listed party measures in its computational basis, in turn."""
    order = list(range(len(dims))) if order is None else list(order)

    def build(level):
        party = order[level]
        d = dims[party]
        if level == len(order) - 1:
            return projective_node(party, np.eye(d))
        return projective_node(party, np.eye(d), [build(level + 1) for _ in range(d)])

    return LoccProtocol(build(0), "computational")


def shifts_protocol(first: int = 0) -> LoccProtocol:
    """One bit of communication: ``first`` measures Z; the other qubit measures Z on 0, X on 1."""
    second = 1 - first
    return one_way_protocol(first, second, Z_BASIS, [Z_BASIS, X_BASIS], name="shifts")


# ---------------------------------------------------------------- file format


def _enc_matrix(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def protocol_to_dict(prot: LoccProtocol) -> dict:
    def enc(node):
        return {
            "party": node.party,
            "operators": [_enc_matrix(k) for k in node.operators],
            "children": [{"leaf": True} if isinstance(c, Leaf) else enc(c) for c in node.children],
        }

    return enc(prot.root)


def serialize_protocol(prot: LoccProtocol) -> str:
    return json.dumps(protocol_to_dict(prot), indent=1)


def protocol_from_dict(data: Any, path: str = "root") -> LoccProtocol:
    def dec(obj, where):
        if not isinstance(obj, dict):
            raise ProtocolError(f"{where}: expected an object")
        for key in ("party", "operators"):
            if key not in obj:
                raise ProtocolError(f"{where}: missing field {key!r}")
        if not isinstance(obj["party"], int):
            raise ProtocolError(f"{where}.party: expected an integer")
        ops = []
        for k, raw in enumerate(obj["operators"]):
            try:
                arr = np.asarray(raw, dtype=float)
            except (TypeError, ValueError):
                raise ProtocolError(f"{where}.operators[{k}]: expected nested [re, im] pairs") from None
            if arr.ndim != 3 or arr.shape[-1] != 2:
                raise ProtocolError(f"{where}.operators[{k}]: expected a matrix of [re, im] pairs")
            ops.append(arr[..., 0] + 1j * arr[..., 1])
        kids = []
        for k, child in enumerate(obj.get("children") or [{"leaf": True}] * len(ops)):
            if isinstance(child, dict) and child.get("leaf"):
                kids.append(Leaf())
            else:
                kids.append(dec(child, f"{where}.children[{k}]"))
        try:
            return MeasurementNode(obj["party"], tuple(ops), tuple(kids))
        except ProtocolError as exc:
            raise ProtocolError(f"{where}: {exc}") from None

    return LoccProtocol(dec(data, path))


def parse_protocol(text: str) -> LoccProtocol:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return protocol_from_dict(data)


def load_protocol(path: str) -> LoccProtocol:
    with open(path, encoding="utf-8") as fh:
        return parse_protocol(fh.read())
