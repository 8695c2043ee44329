"""Non-adaptive reference detectors.

In this chip-rate matrix model, maximal-ratio combining over all resolved
multipath fingers followed by despreading collapses to a matched filter on
the effective signature, so the combining baseline is simply ``y = p^H r``.
It consumes the same blind signature estimate as the adaptive receivers.
"""

from __future__ import annotations

import numpy as np

from .signal_model import sign_decision


def rake_mrc(r: np.ndarray, p_hat: np.ndarray) -> tuple[complex, int]:
    """Maximal-ratio multipath combining via the effective signature."""
    if float(np.vdot(p_hat, p_hat).real) <= 0.0:
        raise ValueError("combining weights require a nonzero signature")
    y = complex(np.vdot(p_hat, r))
    return y, sign_decision(y)


class RakeMrc:
    """Object wrapper matching the adaptive receivers' step interface."""

    def __init__(self):
        pass

    def step(self, r: np.ndarray, p_hat: np.ndarray) -> tuple[complex, int]:
        return rake_mrc(r, p_hat)
