"""The problem-instance container shared by every generator."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..analysis import residual
from ..errors import ProblemGenerationError
from ..operators import SystemOperator

__all__ = ["ProblemInstance", "CLOSED_FORM", "HIGH_PRECISION_SYNC", "EXTERNAL_ORACLE",
           "VSTAR_TOL"]

CLOSED_FORM = "closed-form"
HIGH_PRECISION_SYNC = "high-precision-sync"
EXTERNAL_ORACLE = "external-oracle"
VSTAR_TOL = 1e-6


@dataclass
class ProblemInstance:
    """An operator together with a reference fixed point and how it was obtained.

    ``decode`` maps states (single or stacked) to the problem's own variables,
    for instance ``(c, r)`` of a Chebyshev center; ``reference`` holds those
    variables at an oracle optimum. ``v0`` names the initial-state convention
    (``"sphere"`` about ``vstar`` or ``"zero"``).
    """

    name: str
    operator: SystemOperator
    vstar: Optional[np.ndarray]
    vstar_method: str
    metadata: dict = field(default_factory=dict)
    decode: Optional[Callable] = None
    reference: Optional[np.ndarray] = None
    v0: str = "sphere"

    def __post_init__(self):
        if self.vstar is not None:
            self.vstar = np.asarray(self.vstar, dtype=float)
            r = residual(self.operator, self.vstar)
            self.metadata.setdefault("vstar_residual", r)
            if not r <= VSTAR_TOL:
                raise ProblemGenerationError(
                    f"{self.name}: reference point has residual {r:.3g} > {VSTAR_TOL:g}")

    @property
    def dim(self) -> int:
        return self.operator.dim

    def observe(self, V):
        """Decoded variables if a decoder exists, otherwise the states themselves."""
        return V if self.decode is None else self.decode(V)
