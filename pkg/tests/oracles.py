"""Reference computations that share no code with the package.

Each routine takes a different route to the quantity it checks: mpmath
arithmetic instead of numpy, full density matrices instead of Gram
spectra, deterministic quadrature instead of Monte Carlo, grid search
instead of Nelder-Mead.
"""

from __future__ import annotations

import itertools
import math

import mpmath
import numpy as np

mpmath.mp.dps = 40


def entropy_bits(spectrum) -> float:
    s = mpmath.mpf(0)
    for x in spectrum:
        x = mpmath.mpf(float(x))
        if x > 0:
            s -= x * mpmath.log(x, 2)
    return float(s)


def subentropy_distinct(spectrum) -> float:
    """Q = -sum_k lambda_k^n / prod_{j!=k}(lambda_k - lambda_j) log2 lambda_k, distinct nonzero nodes."""
    lam = [mpmath.mpf(str(x)) for x in spectrum if x > 0]
    n = len(lam)
    total = mpmath.mpf(0)
    for k, lk in enumerate(lam):
        den = mpmath.mpf(1)
        for j, lj in enumerate(lam):
            if j != k:
                den *= lk - lj
        total += lk**n / den * mpmath.log(lk, 2)
    return float(-total)


def dense(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).ravel()
    return np.outer(v, v.conj())


def ptrace_keep(rho: np.ndarray, dims, keep) -> np.ndarray:
    """Partial trace by explicit index summation (einsum string built per call)."""
    n = len(dims)
    t = rho.reshape(tuple(dims) * 2)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = list(letters[n : 2 * n])
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    r = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    d = int(np.prod([dims[i] for i in keep]))
    return r.reshape(d, d)


def holevo_dense(probs, rhos) -> float:
    avg = sum(p * r for p, r in zip(probs, rhos))
    s = entropy_bits(np.linalg.eigvalsh(avg).clip(0))
    for p, r in zip(probs, rhos):
        s -= p * entropy_bits(np.linalg.eigvalsh(r).clip(0))
    return s


def mutual_info(joint) -> float:
    j = np.asarray(joint, dtype=float)
    px = j.sum(1)
    py = j.sum(0)
    s = 0.0
    for a, b in itertools.product(range(j.shape[0]), range(j.shape[1])):
        if j[a, b] > 0:
            s += j[a, b] * math.log2(j[a, b] / (px[a] * py[b]))
    return s


# ---------------------------------------------------------------- Haar product quadrature


PAULI = [
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]]),
    np.array([[1, 0], [0, -1]], dtype=complex),
]


def _sphere_nodes(order: int):
    """Unit Bloch vectors: Gauss-Legendre in cos(theta) times a uniform phi grid; weights sum to 1."""
    x, w = np.polynomial.legendre.leggauss(order)
    phis = 2 * np.pi * (np.arange(2 * order) + 0.5) / (2 * order)
    c, ph = np.meshgrid(x, phis, indexing="ij")
    sn = np.sqrt(1 - c**2)
    r = np.stack([sn * np.cos(ph), sn * np.sin(ph), c], axis=-1).reshape(-1, 3)
    wt = np.repeat(w / 2 / len(phis), len(phis))
    return r, wt


def _xlog2x(f):
    f = np.asarray(f, dtype=float)
    out = np.zeros_like(f)
    m = f > 0
    out[m] = f[m] * np.log2(f[m])
    return out


def local_subentropy_quad(rho: np.ndarray, order: int = 48) -> float:
    """-4 E[f log2 f] over Haar product states of two qubits.

    Uses the Bloch form f = (1 + r_a.alpha + r_b.beta + r_a^T T r_b) / 4 with
    alpha_i = tr(rho s_i x I), beta_j = tr(rho I x s_j), T_ij = tr(rho s_i x s_j).
    """
    eye = np.eye(2)
    alpha = np.array([np.trace(rho @ np.kron(s, eye)).real for s in PAULI])
    beta = np.array([np.trace(rho @ np.kron(eye, s)).real for s in PAULI])
    t = np.array([[np.trace(rho @ np.kron(si, sj)).real for sj in PAULI] for si in PAULI])
    r, w = _sphere_nodes(order)
    ra, rb = r @ alpha, r @ beta
    rt = r @ t
    total = 0.0
    step = 256
    for k in range(0, len(r), step):
        f = 0.25 * (1 + ra[k : k + step, None] + rb[None, :] + rt[k : k + step] @ r.T)
        total += w[k : k + step] @ (_xlog2x(f) @ w)
    return float(-4 * total)


def lambda_quad(probs, rhos, order: int = 48) -> float:
    avg = sum(p * r for p, r in zip(probs, rhos))
    return local_subentropy_quad(avg, order) - sum(
        p * local_subentropy_quad(r, order) for p, r in zip(probs, rhos)
    )


# ---------------------------------------------------------------- grid search


def two_state_projective_grid(a, b, p=0.5, points=200001) -> float:
    """Best MI over real rotations of the 2D span of two real pure states."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    e0 = a / np.linalg.norm(a)
    r = b - (e0 @ b) * e0
    e1 = r / np.linalg.norm(r)
    ca, sa = e0 @ a, e1 @ a
    cb, sb = e0 @ b, e1 @ b
    t = np.linspace(0, np.pi, points)
    c, s = np.cos(t), np.sin(t)
    pa0 = (c * ca + s * sa) ** 2
    pb0 = (c * cb + s * sb) ** 2
    pa1, pb1 = 1 - pa0, 1 - pb0
    q0 = p * pa0 + (1 - p) * pb0
    q1 = 1 - q0

    def h(x):
        return -_xlog2x(x)

    hx = h(np.array([p]))[0] + h(np.array([1 - p]))[0]
    mi = hx - (h(p * pa0) + h((1 - p) * pb0) - h(q0)) - (h(p * pa1) + h((1 - p) * pb1) - h(q1))
    return float(mi.max())


# ---------------------------------------------------------------- hand enumeration

SHIFTS_STATES = {
    "01+": ("0", "1", "+"),
    "1+0": ("1", "+", "0"),
    "+01": ("+", "0", "1"),
    "---": ("-", "-", "-"),
}
_AMP = {
    ("0", "0"): 1.0, ("0", "1"): 0.0, ("1", "0"): 0.0, ("1", "1"): 1.0,
    ("+", "0"): 2**-0.5, ("+", "1"): 2**-0.5, ("-", "0"): 2**-0.5, ("-", "1"): -(2**-0.5),
}


def _prob(state: str, outcome: str, basis: str) -> float:
    """|<outcome|state>|^2 for a single qubit; basis 'Z' or 'X'."""
    if basis == "Z":
        return _AMP[(state, outcome)] ** 2
    xs = "+" if outcome == "0" else "-"
    if state in "+-":
        return 1.0 if state == xs else 0.0
    return 0.5


def shifts_pair_joint(partner: int = 1, first: int = 0) -> np.ndarray:
    """Joint p(i, m) for the A:B_partner pair; party ``first`` (0 = A) measures Z first."""
    rows = []
    for a_state, b_state in ((s[0], s[partner]) for s in SHIFTS_STATES.values()):
        first_state, second_state = (a_state, b_state) if first == 0 else (b_state, a_state)
        row = []
        for o1 in "01":
            p1 = _prob(first_state, o1, "Z")
            for o2 in "01":
                row.append(0.25 * p1 * _prob(second_state, o2, "Z" if o1 == "0" else "X"))
        rows.append(row)
    return np.array(rows)
