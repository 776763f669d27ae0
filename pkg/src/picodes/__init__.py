"""Permutation-invariant quantum codes: KL residuals, numerical search,
analytic families and simplicial qudit constructions."""

__version__ = "0.1.0"

from .kl import CodeParams, CodewordTable, qudit_residuals, verify_distance  # noqa: E402

__all__ = ["CodeParams", "CodewordTable", "qudit_residuals", "verify_distance", "__version__"]
