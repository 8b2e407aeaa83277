"""Information-theoretically verifiable polynomial evaluation."""

from .field import Field, FieldElement, OpCounter, make_rng
from .poly import Polynomial, decompose, horner_eval, power_vectors
from .protocol import Server, ServerSetup, User, VerificationKey, init, run_round, run_session, verify

__all__ = [
    "Field",
    "FieldElement",
    "OpCounter",
    "Polynomial",
    "Server",
    "ServerSetup",
    "User",
    "VerificationKey",
    "decompose",
    "horner_eval",
    "init",
    "make_rng",
    "power_vectors",
    "run_round",
    "run_session",
    "verify",
]
