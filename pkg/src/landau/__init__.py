"""Principal Landau determinants of Feynman integrals."""

from __future__ import annotations

__version__ = "0.1.0"
