"""Entangled two-photon Gaussian state and its three exact representations.

The pair is defined by the widths of the (k1+k2) and (k1-k2) Gaussians,
``sigma_plus`` and ``sigma_minus``.  The state saturates Heisenberg's bound
for the collective pair: Delta(k1+k2) * Delta[(y1+y2)/2] = 1/2 exactly.

Units: hbar = 1; lengths in millimetres, momenta in inverse millimetres.
All evaluators are closed-form, pure, and safe to call concurrently.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

__all__ = [
    "GaussianPairState",
    "Amplitude",
    "psi_momentum",
    "psi_mixed",
    "psi_position",
    "derived_widths",
]

# Amplitudes are plain complex numbers; units vary by representation
# (1/length in momentum space, dimensionless mixed, length in position space).
Amplitude = complex


@dataclass(frozen=True)
class GaussianPairState:
    """Widths of the collective Gaussians: sigma_plus for k1+k2, sigma_minus
    for k1-k2 (both in 1/length)."""

    sigma_plus: float
    sigma_minus: float

    def __post_init__(self) -> None:
        for name in ("sigma_plus", "sigma_minus"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0")

    # frequently needed combinations
    @property
    def ssum(self) -> float:
        """sigma_plus^2 + sigma_minus^2."""
        return self.sigma_plus ** 2 + self.sigma_minus ** 2

    @property
    def sdiff(self) -> float:
        """sigma_plus^2 - sigma_minus^2."""
        return self.sigma_plus ** 2 - self.sigma_minus ** 2

    @property
    def sprod(self) -> float:
        """sigma_plus * sigma_minus."""
        return self.sigma_plus * self.sigma_minus


def psi_momentum(state: GaussianPairState, k1: float, k2: float) -> Amplitude:
    """Two-photon amplitude in pure momentum space.

    Real and positive: the product of the (k1+k2) and (k1-k2) Gaussian
    factors with prefactor 1/sqrt(pi*sigma_plus*sigma_minus).
    """
    sp, sm = state.sigma_plus, state.sigma_minus
    pref = 1.0 / math.sqrt(math.pi * sp * sm)
    exponent = -((k1 + k2) ** 2) / (4 * sp * sp) - ((k1 - k2) ** 2) / (4 * sm * sm)
    return complex(pref * math.exp(exponent))


def psi_mixed(state: GaussianPairState, y1: float, k2: float) -> Amplitude:
    """Mixed-representation amplitude Psi(y1, k2).

    Generally complex through the cross term -i*(sigma_plus^2-sigma_minus^2)
    *y1*k2 in the exponent; real whenever sigma_plus == sigma_minus.
    """
    s = state.ssum
    pref = math.sqrt(2.0 / math.pi * state.sprod / s)
    num = (state.sprod ** 2) * y1 * y1 + k2 * k2 - 1j * state.sdiff * y1 * k2
    return pref * cmath.exp(-num / s)


def psi_position(state: GaussianPairState, y1: float, y2: float) -> Amplitude:
    """Two-photon amplitude in pure position space; real and positive,
    symmetric under y1 <-> y2."""
    sp, sm = state.sigma_plus, state.sigma_minus
    pref = math.sqrt(sp * sm / math.pi)
    exponent = -0.25 * (sp * sp * (y1 + y2) ** 2 + sm * sm * (y1 - y2) ** 2)
    return complex(pref * math.exp(exponent))


def derived_widths(state: GaussianPairState) -> tuple[float, float, float]:
    """Marginal widths and the collective Heisenberg product.

    Returns (s_k, s_y, heisenberg_product) where s_k is the standard
    deviation of either photon's momentum marginal, s_y the standard
    deviation of the y1 marginal of |Psi(y1,k2)|^2, and the product
    Delta(k1+k2)*Delta[(y1+y2)/2] = 1/2 exactly for every valid state.
    """
    root = math.sqrt(state.ssum)
    s_k = 0.5 * root
    s_y = root / (2.0 * state.sprod)
    product = state.sigma_plus * (1.0 / (2.0 * state.sigma_plus))
    return s_k, s_y, product
