"""Adaptive layer-count selection from a single O(d) moment scan.

Rotation layers are the expensive part of the pipeline, and most real inputs
do not need the worst-case count: one layer suffices for scalar quantization
when the normalized third moment is already as small as a rotation would
make it on average, and the vector pipeline can skip its smoothing layer
when no coordinate carries outsized mass.  Both conditions are single-pass
functionals of the input, so the decision costs O(d) time and O(1) space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .core import RotationSpec
from .metrics import BERRY_ESSEEN_C, CUBE_RATIO_C, W1_TRANSPORT_C, moment_scan

__all__ = [
    "AdaptiveDecision",
    "default_eta3",
    "default_eta_inf",
    "decide_layers",
    "pipeline_with_adaptivity",
]

TASKS = ("scalar", "vq")


def default_eta3(d: int) -> float:
    """Flatness target for the third moment: what one rotation layer
    achieves on average in the worst case."""
    return CUBE_RATIO_C / math.sqrt(d)


def default_eta_inf(d: int) -> float:
    """Mass-concentration target for ``|xu|_inf^2``, at the scale a rotated
    vector meets with high probability."""
    return 2.0 * math.log(2.0 * d) / d


@dataclass(frozen=True)
class AdaptiveDecision:
    """Measured flatness of an input and the layer counts it licenses."""

    rho3: float
    linf_sq: float
    eta3: float
    eta_inf: float
    scalar_layers: int  # 1 iff rho3 <= eta3, else 2
    vq_layers: int      # 2 iff linf_sq <= eta_inf, else 3

    @property
    def dk_bound(self) -> float:
        """Kolmogorov guarantee carried by the 1-layer scalar path."""
        return BERRY_ESSEEN_C * self.eta3

    @property
    def w1_bound(self) -> float:
        """1-Wasserstein guarantee carried by the 1-layer scalar path."""
        return W1_TRANSPORT_C * self.eta3

    @property
    def rms_cov_bound(self) -> float:
        """RMS conditional-covariance guarantee carried by the 2-layer
        vector path."""
        return 2.0 * math.sqrt(self.eta_inf)

    def to_dict(self) -> dict:
        return {
            "rho3": self.rho3,
            "linf_sq": self.linf_sq,
            "eta3": self.eta3,
            "eta_inf": self.eta_inf,
            "scalar_layers": self.scalar_layers,
            "vq_layers": self.vq_layers,
            "dk_bound": self.dk_bound,
            "w1_bound": self.w1_bound,
            "rms_cov_bound": self.rms_cov_bound,
        }


def decide_layers(x, eta3: float | None = None,
                  eta_inf: float | None = None) -> AdaptiveDecision:
    """Single-pass flatness check; thresholds default to the rotated-input
    scales ``eta3 = C3/sqrt(d)`` and ``eta_inf = 2 ln(2d)/d``."""
    stats = moment_scan(x)
    if stats.sum_sq <= 0.0:
        raise ValueError("input must be non-zero")
    d = stats.count
    if eta3 is None:
        eta3 = default_eta3(d)
    if eta_inf is None:
        eta_inf = default_eta_inf(d)
    rho3 = stats.sum_abs_cubed / stats.sum_sq ** 1.5
    linf_sq = stats.max_sq / stats.sum_sq
    return AdaptiveDecision(
        rho3=rho3,
        linf_sq=linf_sq,
        eta3=eta3,
        eta_inf=eta_inf,
        scalar_layers=1 if rho3 <= eta3 else 2,
        vq_layers=2 if linf_sq <= eta_inf else 3,
    )


def pipeline_with_adaptivity(x, task: str, base_spec: RotationSpec):
    """Reduce ``base_spec``'s layer count when the input's flatness permits;
    never increase it.  Returns ``(effective_spec, decision)``."""
    if task not in TASKS:
        raise ValueError(f"task must be one of {TASKS}, got {task!r}")
    decision = decide_layers(x)
    recommended = decision.scalar_layers if task == "scalar" else decision.vq_layers
    effective = min(base_spec.layers, recommended)
    return replace(base_spec, layers=effective), decision
