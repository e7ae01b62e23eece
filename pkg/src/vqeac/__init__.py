"""Active-space VQE with orbital optimization and adiabatic-connection
correlation corrections, on an exact statevector simulator."""

from vqeac.integrals import (
    ActiveSpace,
    EmbeddedHamiltonian,
    FcidumpError,
    IntegralSet,
    embed_active_space,
    load_fcidump,
    parse_fcidump,
    rotate_orbitals,
)

__version__ = "0.1.0"

__all__ = [
    "ActiveSpace",
    "EmbeddedHamiltonian",
    "FcidumpError",
    "IntegralSet",
    "embed_active_space",
    "load_fcidump",
    "parse_fcidump",
    "rotate_orbitals",
    "__version__",
]
