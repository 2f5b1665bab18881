"""Exception hierarchy shared by every module."""

from __future__ import annotations


class PDFProjError(Exception):
    """Base class for all errors raised by pdfproj."""


class ModelValidationError(PDFProjError):
    """Raised by ``validate_model``; ``violations`` lists every problem found."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"invalid model: {lines}")


class DomainViolation(PDFProjError):
    pass


class SupportViolation(PDFProjError):
    pass


class CgfDomainError(PDFProjError):
    pass


class SaddleDomainError(PDFProjError):
    """The saddle point diverged; the feature is on or outside the achievable boundary."""


class NonConvergence(PDFProjError):
    pass


class AsymmetricPrior(PDFProjError):
    pass


class ZeroScale(PDFProjError):
    pass


class NegativeFeature(PDFProjError):
    pass


class EmptyFiber(PDFProjError):
    pass


class DegenerateFiber(EmptyFiber):
    # A fiber with a single feasible point is empty in the sense of the sampler.
    pass


class UnsupportedLayer(PDFProjError):
    pass


class UnsupportedSampling(PDFProjError):
    pass
