"""
Basis specification models for the Fourier systems on the unit cube.
"""

import json
import math
from enum import Enum
from typing import Any, Dict

from quadtest.errors import DomainError


class BasisKind(str, Enum):
    """Orthonormal Fourier families on [0,1]^d."""
    DOT_PRODUCT = "dot-product"
    TENSOR = "tensor"


class BasisSpec:
    """
    Describes an orthonormal Fourier system.

    With ``samples=2`` the system is the two-sample product basis on
    [0,1]^{2d}: the index (m, s) evaluates the d-dimensional function
    psi_m on the s-th block of d coordinates.

    Args:
        kind (BasisKind): Dot-product or tensor-product Fourier family
        dimension (int): Lattice dimension d
        samples (int): 1 for the plain basis, 2 for the two-sample product basis
    """
    def __init__(self, kind: BasisKind, dimension: int, samples: int = 1):
        if dimension < 1:
            raise DomainError(f"basis dimension must satisfy d >= 1, got {dimension}")
        if samples not in (1, 2):
            raise DomainError(f"samples must be 1 or 2, got {samples}")
        self.kind = BasisKind(kind)
        self.dimension = dimension
        self.samples = samples

    @property
    def point_dimension(self) -> int:
        """Dimension of the design points: d, or 2d for the two-sample basis."""
        return self.dimension * self.samples

    @property
    def sup_bound(self) -> float:
        """Uniform bound on |phi_l|: sqrt(2) for dot-product, 2^{d/2} for tensor."""
        if self.kind == BasisKind.DOT_PRODUCT:
            return math.sqrt(2.0)
        return 2.0 ** (self.dimension / 2.0)

    @property
    def c3_bound(self) -> float:
        """The constant C3 guaranteed by the sup bound."""
        return self.sup_bound ** 2

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "dimension": self.dimension,
            "samples": self.samples,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def __repr__(self) -> str:
        return f"BasisSpec({self.kind.value}, d={self.dimension}, samples={self.samples})"
