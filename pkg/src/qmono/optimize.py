"""Multi-start simplex search over projective measurement strategies.

Every value returned here is a lower bound: it is the mutual information
of an explicit measurement, and :func:`certify` re-derives it from the
reported parameters through the exact protocol simulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from ._streams import parallel_map, stream
from .bounds import cardinality_bound, chi_locc, holevo_chi
from .ensembles import MultipartyEnsemble
from .protocols import (
    JointDistribution,
    LoccProtocol,
    mutual_information,
    one_way_protocol,
    simulate,
)
from .qcore import StateVector

DEFAULT_RESTARTS = 64
MAX_ITER = 500
SIMPLEX_TOL = 1e-7
MAX_GLOBAL_DIM = 64
MAX_LOCAL_DIM = 4
CEILING_TOL = 1e-12
CERTIFY_TOL = 1e-9


class OptimizationError(ValueError):
    pass


class CertificationError(RuntimeError):
    """The reported value does not match a fresh simulation of the reported strategy."""


# ---------------------------------------------------------------- parameterization


def n_basis_params(d: int) -> int:
    return d * d - d


def basis_from_params(d: int, params: Sequence[float]) -> np.ndarray:
    """Unitary whose columns are the measurement basis.

    Product of Givens rotations G_jk(theta, phi) over pairs j < k in
    lexicographic order; zero parameters give the computational basis.
    Column phases are irrelevant for projectors and are not parameterized.
    """
    params = np.asarray(params, dtype=float)
    if params.size != n_basis_params(d):
        raise ValueError(f"dimension {d} needs {n_basis_params(d)} parameters, got {params.size}")
    if d == 2:
        th, ph = params
        c, s = math.cos(th), math.sin(th)
        e = complex(math.cos(ph), math.sin(ph))
        return np.array([[c, -s / e], [s * e, c]], dtype=complex)
    u = np.eye(d, dtype=complex)
    k = 0
    for a in range(d):
        for b in range(a + 1, d):
            th, ph = params[k], params[k + 1]
            k += 2
            c, s = math.cos(th), math.sin(th)
            e = complex(math.cos(ph), math.sin(ph))
            col_a, col_b = u[:, a].copy(), u[:, b].copy()
            u[:, a] = c * col_a + s * e * col_b
            u[:, b] = -s / e * col_a + c * col_b
    return u


def wrap_angles(x: np.ndarray) -> np.ndarray:
    """Map every angle into (-pi, pi]."""
    y = np.mod(np.asarray(x, dtype=float) + math.pi, 2 * math.pi) - math.pi
    return np.where(y == -math.pi, math.pi, y)


@dataclass(frozen=True, eq=False)
class StrategyParameters:
    """Angles of a measurement template.

    ``template`` is ``"global"`` (one basis of the ensemble support) or
    ``"one_way"`` (sender basis, then one receiver basis per sender outcome).
    """

    template: str
    dims: tuple[int, ...]
    values: np.ndarray
    sender: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(v)):
            raise ValueError("strategy parameters must be finite")
        if self.template == "one_way":
            ds, dr = self.dims[self.sender], self.dims[1 - self.sender]
            need = n_basis_params(ds) + ds * n_basis_params(dr)
        elif self.template == "global":
            need = n_basis_params(self.dims[0])
        else:
            raise ValueError(f"unknown template {self.template!r}")
        if v.size != need:
            raise ValueError(f"template {self.template} needs {need} parameters, got {v.size}")
        v = wrap_angles(v)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "dims", tuple(self.dims))

    def to_dict(self) -> dict:
        return {
            "template": self.template,
            "dims": list(self.dims),
            "sender": self.sender,
            "values": [float(x) for x in self.values],
        }


def one_way_bases(params: StrategyParameters) -> tuple[np.ndarray, list[np.ndarray]]:
    ds, dr = params.dims[params.sender], params.dims[1 - params.sender]
    ns, nr = n_basis_params(ds), n_basis_params(dr)
    v = params.values
    sender = basis_from_params(ds, v[:ns])
    receivers = [basis_from_params(dr, v[ns + a * nr: ns + (a + 1) * nr]) for a in range(ds)]
    return sender, receivers


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    value: float
    params: StrategyParameters
    restarts_used: int
    seed: int
    converged: bool
    support: np.ndarray | None = None  # global template: orthonormal support basis
    restart_values: tuple[float, ...] = field(default=())

    @property
    def template(self) -> str:
        return self.params.template

    def protocol(self) -> LoccProtocol:
        if self.params.template != "one_way":
            raise OptimizationError("only one-way results carry an LOCC protocol")
        sender, receivers = one_way_bases(self.params)
        s = self.params.sender
        return one_way_protocol(s, 1 - s, sender, receivers, name="one_way")

    def measurement(self) -> list[np.ndarray]:
        """Complete projective measurement of a global result (support basis + complement)."""
        if self.params.template != "global":
            raise OptimizationError("only global results carry a joint measurement")
        return global_projectors(self.support, self.params)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "params": self.params.to_dict(),
            "restarts_used": self.restarts_used,
            "seed": self.seed,
            "converged": self.converged,
        }


def global_projectors(support: np.ndarray, params: StrategyParameters) -> list[np.ndarray]:
    r = support.shape[1]
    vecs = support @ basis_from_params(r, params.values)
    ops = [np.outer(vecs[:, m], vecs[:, m].conj()) for m in range(r)]
    rest = np.eye(support.shape[0]) - support @ support.conj().T
    if support.shape[0] > r:
        ops.append(rest)
    return ops


# ---------------------------------------------------------------- fast objectives


def _mi_bits(joint: np.ndarray) -> float:
    """Mutual information of an (unnormalized-safe) joint matrix, vectorized."""
    joint = np.maximum(joint, 0.0)
    p = joint.sum(axis=1)
    q = joint.sum(axis=0)
    mask = joint > 0
    outer = np.outer(p, q)
    return float(np.sum(joint[mask] * np.log2(joint[mask] / outer[mask])))


class _Probe:
    """Outcome probabilities p_i <v|state_i|v> for batches of measurement vectors."""

    def __init__(self, ens: MultipartyEnsemble):
        self.p = ens.probs
        self.pure = ens.is_pure
        if self.pure:
            self.psi = np.array([e.state.amplitudes for e in ens.elements])
        else:
            self.rho = ens.density_stack()

    def joint(self, vecs: np.ndarray) -> np.ndarray:
        if self.pure:
            amp = self.psi @ vecs.conj()
            return self.p[:, None] * (amp.real**2 + amp.imag**2)
        return self.p[:, None] * np.einsum("dm,ide,em->im", vecs.conj(), self.rho, vecs).real


def _one_way_vectors(sender: np.ndarray, receivers: Sequence[np.ndarray], first: int) -> np.ndarray:
    """Columns |s_a>|r_ab> (or |r_ab>|s_a> when the sender is party 1), ordered a-major."""
    ds, dr = sender.shape[0], receivers[0].shape[0]
    rec = np.stack(receivers)  # (a, j, b)
    if first == 0:
        v = sender[:, None, :, None] * np.transpose(rec, (1, 0, 2))[None, :, :, :]  # (i, j, a, b)
        return v.reshape(ds * dr, ds * dr)
    v = np.transpose(rec, (1, 0, 2))[:, None, :, :] * sender[None, :, :, None]  # (j, i, a, b)
    return v.reshape(ds * dr, ds * dr)


def _support_basis(ens: MultipartyEnsemble) -> np.ndarray:
    avg = ens.average().entries
    off = avg - np.diag(np.diag(avg))
    if np.max(np.abs(off)) < 1e-12:
        idx = np.nonzero(np.diag(avg).real > 1e-12)[0]
        return np.eye(avg.shape[0], dtype=complex)[:, idx]
    w, v = np.linalg.eigh(avg)
    keep = w > 1e-12
    return v[:, keep][:, ::-1]


# ---------------------------------------------------------------- search driver


def _initial_simplex(x0: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = x0.size
    steps = rng.uniform(0.2, 0.6, size=n) * rng.choice([-1.0, 1.0], size=n)
    sim = np.tile(x0, (n + 1, 1))
    sim[1:] += np.diag(steps)
    return sim


def _run_restart(objective, n: int, seed: int, k: int):
    rng = stream(seed, 2, k)
    x0 = np.zeros(n) if k == 0 else rng.uniform(-math.pi, math.pi, size=n)
    sim = _initial_simplex(x0, rng)
    res = minimize(
        objective,
        x0,
        method="Nelder-Mead",
        options={"maxiter": MAX_ITER, "xatol": SIMPLEX_TOL, "fatol": 1e-12, "initial_simplex": sim},
    )
    return -float(res.fun), np.asarray(res.x), bool(res.success)


def _multistart(objective, n: int, restarts: int, seed: int, ceiling: float, threads: int):
    """Run restarts in seed order; stop once a restart reaches the proven ceiling.

    Batches of ``threads`` restarts run concurrently, and results past the
    first ceiling hit are discarded, so the outcome matches a serial run.
    """
    if restarts < 1:
        raise OptimizationError("need at least one restart")
    results = []
    batch = max(1, threads)
    for start in range(0, restarts, batch):
        ks = range(start, min(start + batch, restarts))
        out = parallel_map(lambda k: _run_restart(objective, n, seed, k), ks, threads)
        hit = False
        for r in out:
            results.append(r)
            if r[0] >= ceiling - CEILING_TOL:
                hit = True
                break
        if hit:
            break
    best = max(range(len(results)), key=lambda i: (results[i][0], -i))
    return results[best], len(results), tuple(r[0] for r in results)


def _ceiling(ens: MultipartyEnsemble, local: bool) -> float:
    vals = [cardinality_bound(ens).value, holevo_chi(ens).value]
    if local:
        vals.append(chi_locc(ens).value)
    return min(vals)


def optimize_global_projective(
    ens: MultipartyEnsemble, restarts: int = DEFAULT_RESTARTS, seed: int = 0, threads: int = 1
) -> OptimizationResult:
    """Best single projective measurement on the joint system.

    The basis is searched inside the support of the average state; the
    complement projector never fires.
    """
    if ens.dim > MAX_GLOBAL_DIM:
        raise OptimizationError(f"total dimension {ens.dim} exceeds {MAX_GLOBAL_DIM}")
    support = _support_basis(ens)
    r = support.shape[1]
    probe = _Probe(ens)
    if r == 1:
        params = StrategyParameters("global", (1,), [])
        return OptimizationResult(0.0, params, 0, seed, True, support)

    def objective(x):
        vecs = support @ basis_from_params(r, x)
        return -_mi_bits(probe.joint(vecs))

    (value, x, ok), used, trail = _multistart(
        objective, n_basis_params(r), restarts, seed, _ceiling(ens, False), threads
    )
    params = StrategyParameters("global", (r,), x)
    value = -objective(params.values)
    return OptimizationResult(value, params, used, seed, ok, support, trail)


def _check_local(ens: MultipartyEnsemble):
    if len(ens.dims) != 2:
        raise OptimizationError(f"one-way LOCC search needs a bipartite ensemble, got {len(ens.dims)} parties")
    if max(ens.dims) > MAX_LOCAL_DIM:
        raise OptimizationError(f"local dimension {max(ens.dims)} exceeds {MAX_LOCAL_DIM}")


def optimize_one_way_locc(
    ens: MultipartyEnsemble,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    direction: int | None = None,
    threads: int = 1,
) -> OptimizationResult:
    """One round of communication: sender basis, then an outcome-conditioned receiver basis.

    ``direction`` is the sender's party index (0 for A -> B, 1 for B -> A);
    ``None`` tries both and keeps the better (A -> B on ties).
    """
    _check_local(ens)
    senders = [0, 1] if direction is None else [int(direction)]
    probe = _Probe(ens)
    ceiling = _ceiling(ens, True)
    best = None
    for s in senders:
        ds, dr = ens.dims[s], ens.dims[1 - s]
        n = n_basis_params(ds) + ds * n_basis_params(dr)

        ns, nr = n_basis_params(ds), n_basis_params(dr)

        def objective(x, s=s, ds=ds, dr=dr, ns=ns, nr=nr):
            sender = basis_from_params(ds, x[:ns])
            receivers = [basis_from_params(dr, x[ns + a * nr: ns + (a + 1) * nr]) for a in range(ds)]
            return -_mi_bits(probe.joint(_one_way_vectors(sender, receivers, s)))

        (value, x, ok), used, trail = _multistart(objective, n, restarts, seed, ceiling, threads)
        params = StrategyParameters("one_way", ens.dims, x, sender=s)
        value = -objective(params.values)
        res = OptimizationResult(value, params, used, seed, ok, None, trail)
        if best is None or res.value > best.value:
            best = res
        if best.value >= ceiling - CEILING_TOL:
            break
    return best


# ---------------------------------------------------------------- certification


def joint_from_measurement(ens: MultipartyEnsemble, operators: Sequence[np.ndarray]) -> JointDistribution:
    """Exact outcome distribution of a joint POVM given by its effects."""
    rows = []
    for e in ens.elements:
        if isinstance(e.state, StateVector):
            a = e.state.amplitudes
            row = [float(np.vdot(a, op @ a).real) for op in operators]
        else:
            row = [float(np.trace(op @ e.state.entries).real) for op in operators]
        rows.append(e.p * np.maximum(row, 0.0) / max(sum(row), 1e-300))
    return JointDistribution(np.array(rows), tuple(str(m) for m in range(len(operators))), ens.probs)


def certify(result: OptimizationResult, ens: MultipartyEnsemble, template: str | None = None) -> float:
    """Recompute the value of the reported strategy from scratch."""
    template = template or result.template
    if template != result.template:
        raise CertificationError(f"result was produced for template {result.template}, not {template}")
    if template == "one_way":
        value = mutual_information(simulate(ens, result.protocol()))
    else:
        value = mutual_information(joint_from_measurement(ens, result.measurement()))
    if abs(value - result.value) > CERTIFY_TOL:
        raise CertificationError(
            f"reported {result.value:.12f} bits but the strategy yields {value:.12f} bits"
        )
    return value


def shifts_parameters() -> StrategyParameters:
    """The one-bit SHIFTS strategy as one-way template angles (A sends)."""
    return StrategyParameters("one_way", (2, 2), [0, 0, 0, 0, math.pi / 4, 0], sender=0)
