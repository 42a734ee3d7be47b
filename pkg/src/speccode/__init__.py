"""Spectral-triple models of quantum error-correcting codes.

Modules:
    operator_core   dense Hermitian linear algebra, spectra, code projections
    geometry        finite spectral triples, Connes distance, locality, KL checks
    crossed_product twisted crossed products, Weyl operators, W-sets
    code_zoo        classical, stabilizer, GKP, toric and reconstructed codes
    decode          channels, Petz and poor decoders, thresholds, gap bounds
    fluctuation     inner fluctuations and code-preserving perturbations
    toeplitz        Berezin-Toeplitz quantization of the sphere
    cli             the ``speccode`` command
"""

from .errors import DomainError, NonHermitianError, NumericalError, SpecCodeError

__version__ = "0.1.0"

__all__ = ["DomainError", "NonHermitianError", "NumericalError", "SpecCodeError", "__version__"]
