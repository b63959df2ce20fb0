"""Default tolerances, overridable per call and surfaced in verify reports."""

from __future__ import annotations

DEFAULTS = {
    "tol_group": 1e-10,   # Lorentz group membership residual
    "tol_cone": 1e-9,     # cone membership |<u,u>_J|
    "tol_norm": 1e-8,     # frame normalization residuals
    "tol_pattern": 1e-7,  # Maurer-Cartan sparsity pattern (relative)
}


def merged(overrides=None) -> dict:
    """DEFAULTS updated with the given overrides; unknown keys rejected."""
    out = dict(DEFAULTS)
    if overrides:
        for key, val in overrides.items():
            if key not in DEFAULTS:
                raise KeyError(f"unknown tolerance {key!r}")
            out[key] = float(val)
    return out
