"""Per-case reproduction runs: computed values next to the published claims."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .bounds import DEFAULT_SAMPLES, chi_locc, lambda_locc, marginal_jrw_lower
from .ensembles import CASE_GROUPS, EnsembleCaseId, EnsembleError, build_case, reduce_to_pair
from .monogamy import AuditConfig, audit
from .optimize import DEFAULT_RESTARTS, certify, optimize_one_way_locc
from .protocols import (
    LoccProtocol,
    X_BASIS,
    mutual_information,
    projective_node,
    shifts_protocol,
    simulate,
)

SHIFTS_VALUE = 13 / 4 - (3 * math.log2(3) + 5 * math.log2(5)) / 8
PAPER_SHIFTS = 1.20443
PAPER_SHIFTS_SUM = 2.40887
PAPER_LAMBDA = 0.27865
ROUNDING = 1e-5  # published values are rounded to five decimals


@dataclass
class Row:
    case: str
    quantity: str
    computed: float
    claim: float
    relation: str  # "=", ">=", ">", "<=", "is"
    tol: float = 1e-6
    note: str = ""
    stderr: float = 0.0

    @property
    def ok(self) -> bool:
        c, t = self.computed, self.claim
        if self.relation == "=":
            return abs(c - t) <= self.tol
        if self.relation == ">=":
            return c >= t - self.tol
        if self.relation == ">":
            return c > t
        if self.relation == "<=":
            return c <= t + self.tol
        if self.relation == "is":
            return bool(c) == bool(t)
        raise ValueError(self.relation)

    def to_dict(self) -> dict:
        out = {
            "case": self.case,
            "quantity": self.quantity,
            "computed": self.computed,
            "claim": self.claim,
            "relation": self.relation,
            "tol": self.tol,
            "ok": self.ok,
        }
        if self.stderr:
            out["standard_error"] = self.stderr
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class Options:
    n: int = 10
    theta: float | None = None
    restarts: int = DEFAULT_RESTARTS
    samples: int = 0
    seed: int = 0
    threads: int = 1


@dataclass
class Report:
    selector: str
    rows: list[Row] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.ok for r in self.rows)

    def to_dict(self) -> dict:
        return {"case": self.selector, "passed": self.passed, "rows": [r.to_dict() for r in self.rows]}


def _config(opts: Options) -> AuditConfig:
    return AuditConfig(restarts=opts.restarts, seed=opts.seed, threads=opts.threads)


def _xxx_protocol() -> LoccProtocol:
    """Each of three qubits measures X in turn; the parity separates GHZ+ from GHZ-."""
    leafs = [projective_node(2, X_BASIS) for _ in range(2)]
    mid = [projective_node(1, X_BASIS, leafs) for _ in range(2)]
    return LoccProtocol(projective_node(0, X_BASIS, mid), "xxx")


def _case_i(opts: Options) -> list[Row]:
    rows = []
    ens = build_case("I-pair")
    cert = audit(ens, _config(opts))
    for e in cert.entries:
        rows.append(Row("I-pair", f"I(A:{e.partner})", e.lower, 0.0, "="))
    rows.append(Row("I-pair", "sum of pair values", cert.sum_lower, 0.0, "="))
    full = mutual_information(simulate(ens, _xxx_protocol()))
    rows.append(Row("I-pair", "I(A:B1B2) via X-basis parity", full, 1.0, "="))
    rows.append(Row("I-pair", "verdict violated", cert.verdict == "violated", False, "is"))
    basis = build_case("I-full-basis")
    cert = audit(basis, _config(opts))
    rows.append(Row("I-full-basis", "sum of pair lower bounds", cert.sum_lower, 2.0, "="))
    rows.append(Row("I-full-basis", f"global upper [{cert.global_method}]", cert.global_upper, 2.0, "="))
    rows.append(Row("I-full-basis", "saturation margin", cert.margin, 0.0, "="))
    rows.append(Row("I-full-basis", "verdict violated", cert.verdict == "violated", False, "is"))
    return rows


def _case_ii(opts: Options) -> list[Row]:
    rows = []
    for name in CASE_GROUPS["II"]:
        ens = build_case(name)
        for partner in ens.parties[1:]:
            pair = reduce_to_pair(ens, partner)
            res = optimize_one_way_locc(pair, opts.restarts, opts.seed, threads=opts.threads)
            rows.append(Row(name, f"I(A:{partner}) optimizer", certify(res, pair), 1.0, "="))
        cert = audit(ens, _config(opts))
        rows.append(Row(name, "sum of pair lower bounds", cert.sum_lower, 2.0, "="))
        rows.append(Row(name, f"global upper [{cert.global_method}]", cert.global_upper, 1.0, "<="))
        rows.append(Row(name, "verdict violated", cert.verdict == "violated", True, "is"))
        rows.append(Row(name, "maximal", cert.maximal, True, "is"))
    return rows


def _case_iii(opts: Options) -> list[Row]:
    case = EnsembleCaseId("III-cat", n=opts.n)
    ens = build_case(case)
    cert = audit(ens, _config(opts))
    label = str(case)
    worst = min(e.lower for e in cert.entries)
    rows = [
        Row(label, "min over i of I(A:Bi)", worst, 1.0, "="),
        Row(label, "sum of pair lower bounds", cert.sum_lower, float(opts.n), "="),
        Row(label, "verdict violated", cert.verdict == "violated", True, "is"),
        Row(label, "maximal", cert.maximal, True, "is"),
    ]
    return rows


def _case_iv(opts: Options) -> list[Row]:
    rows = []
    cert = audit(build_case("IV-ET"), _config(opts))
    rows.append(Row("IV-ET", "sum of pair lower bounds", cert.sum_lower, 2 * math.log2(3), "="))
    rows.append(Row("IV-ET", "verdict violated", cert.verdict == "violated", True, "is"))
    rows.append(Row("IV-ET", "maximal", cert.maximal, True, "is"))
    cert = audit(build_case("IV-EP"), _config(opts))
    rows.append(Row("IV-EP", "sum of pair lower bounds", cert.sum_lower, 4.0, "="))
    rows.append(Row("IV-EP", f"global upper [{cert.global_method}]", cert.global_upper, 3.0, "="))
    rows.append(Row("IV-EP", "verdict violated", cert.verdict == "violated", True, "is"))
    rows.append(Row("IV-EP", "maximal", cert.maximal, False, "is"))
    case = EnsembleCaseId("IV-nonorth", theta=opts.theta)
    cert = audit(build_case(case), _config(opts))
    rows.append(Row(str(case), "sum of pair lower bounds", cert.sum_lower, 1.9, ">="))
    rows.append(Row(str(case), f"global upper [{cert.global_method}]", cert.global_upper, 1.0, "<="))
    rows.append(Row(str(case), "verdict violated", cert.verdict == "violated", True, "is"))
    return rows


def _case_v(opts: Options) -> list[Row]:
    ens = build_case("V-shifts")
    rows = []
    values = []
    for first, partner in ((0, "B1"), (1, "B2")):
        pair = reduce_to_pair(ens, partner)
        val = mutual_information(simulate(pair, shifts_protocol(first)))
        values.append(val)
        rows.append(Row("V-shifts", f"I(A:{partner}) one-bit protocol", val, PAPER_SHIFTS, "=", ROUNDING))
    rows.append(Row("V-shifts", "closed form 13/4 - (3log3 + 5log5)/8", SHIFTS_VALUE, PAPER_SHIFTS, "=", ROUNDING))
    rows.append(Row("V-shifts", "sum via one-bit protocols", sum(values), PAPER_SHIFTS_SUM, "=", ROUNDING))
    pair = reduce_to_pair(ens, "B1")
    rows.append(Row("V-shifts", "chi_locc(A:B1)", chi_locc(pair).value, 2.0, "=", 1e-9))
    cert = audit(ens, _config(opts))
    rows.append(Row("V-shifts", "audit sum of pair lower bounds", cert.sum_lower, PAPER_SHIFTS_SUM, ">=", ROUNDING))
    rows.append(Row("V-shifts", f"global upper [{cert.global_method}]", cert.global_upper, 2.0, "="))
    rows.append(Row("V-shifts", "relative violation", cert.relative_violation, 0.20, ">"))
    rows.append(Row("V-shifts", "verdict violated", cert.verdict == "violated", True, "is"))
    if opts.samples:
        lam = lambda_locc(pair, opts.samples, opts.seed, opts.threads)
        rows.append(
            Row(
                "V-shifts",
                "Lambda_locc(A:B1) vs printed 1 - log2(e)/2",
                lam.value,
                PAPER_LAMBDA,
                "=",
                3 * lam.standard_error,
                note="printed value equals the one-party subentropy bound "
                f"{marginal_jrw_lower(pair, 0).value:.6f}",
                stderr=lam.standard_error,
            )
        )
    return rows


_RUNNERS = {"I": _case_i, "II": _case_ii, "III": _case_iii, "IV": _case_iv, "V": _case_v}
_BY_ID = {name: group for group, names in CASE_GROUPS.items() for name in names}


def reproduce(selector: str, opts: Options | None = None) -> Report:
    """Run one paper case (``I`` ... ``V``) or the group owning a registry id."""
    opts = opts or Options()
    if selector in _RUNNERS:
        return Report(selector, _RUNNERS[selector](opts))
    cid = EnsembleCaseId.parse(selector)
    if "(" in selector:
        if cid.name == "III-cat":
            opts.n = cid.n
        if cid.name == "IV-nonorth":
            opts.theta = cid.theta
    return Report(selector, _RUNNERS[_BY_ID[cid.name]](opts))
