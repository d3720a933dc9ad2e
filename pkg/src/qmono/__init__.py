"""Locally accessible information and monogamy for multiparty quantum ensembles."""

__version__ = "0.1.0"

from .bounds import (  # noqa: E402
    BoundReport,
    cardinality_bound,
    chi_locc,
    chi_locc_cut,
    holevo_chi,
    jrw_lower,
    lambda_locc,
    local_subentropy_mc,
    subentropy,
    subentropy_of_spectrum,
)
from .ensembles import (  # noqa: E402
    EnsembleCaseId,
    MultipartyEnsemble,
    build_case,
    load_ensemble,
    reduce_to_pair,
)
from .monogamy import AuditConfig, MonogamyCertificate, audit, replay  # noqa: E402
from .optimize import certify, optimize_global_projective, optimize_one_way_locc  # noqa: E402
from .protocols import LoccProtocol, mutual_information, shifts_protocol, simulate  # noqa: E402

__all__ = [
    "AuditConfig",
    "BoundReport",
    "EnsembleCaseId",
    "LoccProtocol",
    "MonogamyCertificate",
    "MultipartyEnsemble",
    "audit",
    "build_case",
    "cardinality_bound",
    "certify",
    "chi_locc",
    "chi_locc_cut",
    "holevo_chi",
    "jrw_lower",
    "lambda_locc",
    "load_ensemble",
    "local_subentropy_mc",
    "mutual_information",
    "optimize_global_projective",
    "optimize_one_way_locc",
    "reduce_to_pair",
    "replay",
    "shifts_protocol",
    "simulate",
    "subentropy",
    "subentropy_of_spectrum",
]
