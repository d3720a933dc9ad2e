"""Monogamy audits for locally accessible information.

For each partner B_i the pair information I(A:B_i) is lower-bounded by
certified strategies; the joint side is upper-bounded by universal
deterministic bounds.  A ``violated`` verdict is therefore sound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bounds import (
    DEFAULT_SAMPLES,
    cardinality_bound,
    chi_locc,
    chi_locc_cut,
    holevo_chi,
    lambda_locc,
)
from .ensembles import MultipartyEnsemble, reduce_to_pair, same_ensemble, states_identical
from .optimize import (
    DEFAULT_RESTARTS,
    MAX_LOCAL_DIM,
    OptimizationError,
    certify,
    optimize_one_way_locc,
)
from .protocols import (
    LoccProtocol,
    computational_protocol,
    mutual_information,
    protocol_to_dict,
    shifts_protocol,
    simulate,
    trivial_protocol,
)

VIOLATION_TOL = 1e-6
MAXIMAL_TOL = 1e-6
REPLAY_TOL = 1e-9
MC_SIGMAS = 3.0

METHODS = ("explicit", "optimizer", "lambda")


@dataclass(frozen=True)
class AuditConfig:
    methods: tuple[str, ...] = ("explicit", "optimizer")
    restarts: int = DEFAULT_RESTARTS
    samples: int = DEFAULT_SAMPLES
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unknown method {bad[0]!r}; choose from {METHODS}")

    def to_dict(self) -> dict:
        return {
            "methods": list(self.methods),
            "restarts": self.restarts,
            "samples": self.samples,
            "seed": self.seed,
        }


@dataclass(frozen=True, eq=False)
class PairEntry:
    partner: str
    lower: float
    method: str  # trivial | explicit-protocol | optimizer | lambda_locc
    standard_error: float = 0.0
    protocol: LoccProtocol | None = None
    cardinality: float = 0.0
    chi_pair: float = 0.0
    chi_locc: float = 0.0
    candidates: dict = field(default_factory=dict)

    @property
    def ceiling(self) -> float:
        return min(self.cardinality, self.chi_pair, self.chi_locc)

    def to_dict(self) -> dict:
        out = {
            "partner": self.partner,
            "lower": self.lower,
            "method": self.method,
            "standard_error": self.standard_error,
            "upper_cardinality": self.cardinality,
            "upper_chi_pair": self.chi_pair,
            "upper_chi_locc": self.chi_locc,
            "candidates": self.candidates,
        }
        if self.protocol is not None:
            out["protocol"] = protocol_to_dict(self.protocol)
        return out


@dataclass(frozen=True, eq=False)
class MonogamyCertificate:
    ensemble: str
    n_partners: int
    cardinality: int
    entries: tuple[PairEntry, ...]
    global_upper: float
    global_method: str
    global_candidates: dict
    config: AuditConfig

    @property
    def sum_lower(self) -> float:
        return float(sum(e.lower for e in self.entries))

    @property
    def margin(self) -> float:
        return self.sum_lower - self.global_upper

    @property
    def uncertainty(self) -> float:
        """MC band on the sum; nonzero only when a pair rests on the Monte Carlo bound."""
        se = [e.standard_error for e in self.entries if e.method == "lambda_locc"]
        return MC_SIGMAS * math.sqrt(sum(s * s for s in se)) if se else 0.0

    @property
    def verdict(self) -> str:
        if self.uncertainty > 0 and abs(self.margin) <= self.uncertainty:
            return "inconclusive"
        return "violated" if self.margin > VIOLATION_TOL else "satisfied"

    @property
    def ceiling(self) -> float:
        """N log2(Gamma): the largest value the pairwise sum can take."""
        return self.n_partners * math.log2(self.cardinality)

    @property
    def maximal(self) -> bool:
        return abs(self.sum_lower - self.ceiling) <= MAXIMAL_TOL

    @property
    def relative_violation(self) -> float:
        return self.margin / self.global_upper if self.global_upper > 0 else math.inf

    def to_dict(self) -> dict:
        return {
            "ensemble": self.ensemble,
            "n_partners": self.n_partners,
            "cardinality": self.cardinality,
            "pairs": [e.to_dict() for e in self.entries],
            "sum_lower": self.sum_lower,
            "global_upper": self.global_upper,
            "global_method": self.global_method,
            "global_candidates": self.global_candidates,
            "margin": self.margin,
            "uncertainty": self.uncertainty,
            "verdict": self.verdict,
            "maximal": self.maximal,
            "config": self.config.to_dict(),
        }


# ---------------------------------------------------------------- registered protocols


def registered_protocol(ens: MultipartyEnsemble, partner: int, pair: MultipartyEnsemble) -> LoccProtocol:
    """Hand-written strategy for a pair: the one-bit SHIFTS protocol, else computational bases."""
    if ens.name == "V-shifts":
        # the A:B2 pair is the A:B1 pair with the two parties exchanged
        return shifts_protocol(0 if partner == 1 else 1)
    return computational_protocol(pair.dims)


# ---------------------------------------------------------------- per-pair analysis


def _analyse_pair(ens: MultipartyEnsemble, j: int, pair: MultipartyEnsemble, config: AuditConfig) -> PairEntry:
    partner = ens.parties[j]
    card = cardinality_bound(pair).value
    chi_p = holevo_chi(pair).value
    chi_l = chi_locc(pair).value
    ceiling = min(card, chi_p, chi_l)
    common = dict(partner=partner, cardinality=card, chi_pair=chi_p, chi_locc=chi_l)

    if states_identical(pair):
        prot = trivial_protocol(pair.dims[0])
        return PairEntry(lower=0.0, method="trivial", protocol=prot, candidates={"trivial": 0.0}, **common)

    candidates: dict[str, float] = {}
    best = ("trivial", 0.0, 0.0, trivial_protocol(pair.dims[0]))
    if "explicit" in config.methods:
        prot = registered_protocol(ens, j, pair)
        val = mutual_information(simulate(pair, prot))
        candidates["explicit-protocol"] = val
        if val > best[1]:
            best = ("explicit-protocol", val, 0.0, prot)
    if "optimizer" in config.methods and best[1] < ceiling - 1e-12:
        res = optimize_one_way_locc(pair, config.restarts, config.seed, threads=config.threads)
        val = certify(res, pair)
        candidates["optimizer"] = val
        if val > best[1]:
            best = ("optimizer", val, 0.0, res.protocol())
    if "lambda" in config.methods:
        rep = lambda_locc(pair, config.samples, config.seed, config.threads)
        candidates["lambda_locc"] = rep.value
        if rep.value > best[1]:
            best = ("lambda_locc", rep.value, rep.standard_error, None)
    method, val, se, prot = best
    return PairEntry(lower=val, method=method, standard_error=se, protocol=prot, candidates=candidates, **common)


def _check_config(ens: MultipartyEnsemble, config: AuditConfig) -> None:
    if "optimizer" in config.methods:
        for j in range(1, len(ens.dims)):
            if max(ens.dims[0], ens.dims[j]) > MAX_LOCAL_DIM:
                raise OptimizationError(
                    f"optimizer requested but pair A:{ens.parties[j]} has local dimension "
                    f"{max(ens.dims[0], ens.dims[j])} > {MAX_LOCAL_DIM}"
                )


def pair_table(ens: MultipartyEnsemble, config: AuditConfig | None = None) -> list[PairEntry]:
    """Lower and upper bounds for every A:B_i pair.

    Pairs whose reduced ensembles coincide are computed once and reused.
    """
    config = config or AuditConfig()
    _check_config(ens, config)
    pairs = [(j, reduce_to_pair(ens, j)) for j in range(1, len(ens.dims))]
    # registered protocols are partner-specific only for SHIFTS
    reusable = ens.name != "V-shifts"
    unique: list[int] = []
    source: list[int] = []
    for k, (_, pair) in enumerate(pairs):
        hit = None
        if reusable:
            hit = next((u for u in unique if same_ensemble(pairs[u][1], pair)), None)
        if hit is None:
            unique.append(k)
            hit = k
        source.append(hit)
    computed = {k: _analyse_pair(ens, pairs[k][0], pairs[k][1], config) for k in unique}
    rows = []
    for k, (j, _) in enumerate(pairs):
        e = computed[source[k]]
        if source[k] != k:
            e = PairEntry(
                partner=ens.parties[j],
                lower=e.lower,
                method=e.method,
                standard_error=e.standard_error,
                protocol=e.protocol,
                cardinality=e.cardinality,
                chi_pair=e.chi_pair,
                chi_locc=e.chi_locc,
                candidates=e.candidates,
            )
        rows.append(e)
    return rows


def global_upper_bound(ens: MultipartyEnsemble) -> tuple[float, str, dict]:
    """min(log2 Gamma, Holevo chi, LOCC chi across A : B1...BN), all deterministic."""
    candidates = {
        "cardinality": cardinality_bound(ens).value,
        "holevo_chi": holevo_chi(ens).value,
        "chi_locc_A:rest": chi_locc_cut(ens, [0], list(range(1, len(ens.dims)))).value,
    }
    name = min(candidates, key=lambda k: candidates[k])
    return candidates[name], name, candidates


def audit(ens: MultipartyEnsemble, config: AuditConfig | None = None) -> MonogamyCertificate:
    config = config or AuditConfig()
    if ens.n_partners < 2:
        raise ValueError("a monogamy audit needs at least two partners B_i")
    entries = pair_table(ens, config)
    upper, method, candidates = global_upper_bound(ens)
    return MonogamyCertificate(
        ensemble=ens.name,
        n_partners=ens.n_partners,
        cardinality=ens.cardinality,
        entries=tuple(entries),
        global_upper=upper,
        global_method=method,
        global_candidates=candidates,
        config=config,
    )


def maximal_violation_check(cert: MonogamyCertificate, ens: MultipartyEnsemble) -> bool:
    ceiling = ens.n_partners * math.log2(ens.cardinality)
    return abs(cert.sum_lower - ceiling) <= MAXIMAL_TOL


def replay(cert: MonogamyCertificate, ens: MultipartyEnsemble) -> list[float]:
    """Re-simulate every cited pair protocol; raises if any value fails to reproduce."""
    values = []
    for e in cert.entries:
        if e.protocol is None:
            continue
        pair = reduce_to_pair(ens, e.partner)
        val = mutual_information(simulate(pair, e.protocol))
        if abs(val - e.lower) > REPLAY_TOL:
            raise AssertionError(f"pair {e.partner}: certificate says {e.lower}, replay gives {val}")
        values.append(val)
    return values
