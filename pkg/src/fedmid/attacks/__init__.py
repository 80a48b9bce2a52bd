"""Threat scenarios: label flipping (1), omniscient calibration (2),
defense-aware output mimicking (3); each in untargeted and targeted form."""

from dataclasses import dataclass

from .adaptive import adaptive_regularizer, probe_activations, regularizer_backward
from .lie import benign_statistics, lie_calibrate
from .poisoning import TriggerPatch, poison_targeted, poison_untargeted, stamp_trigger

SCENARIOS = ("1u", "1t", "2u", "2t", "3u", "3t")


@dataclass
class AttackConfig:
    scenario: str
    gamma_p: float = 0.8
    z: float = 1.5
    lie_negate: bool = False
    trigger: TriggerPatch | None = None
    adaptive_taps: tuple | None = None  # None = regularize every tap

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown attack scenario {self.scenario!r}; available: {SCENARIOS}")
        if not 0 < self.gamma_p <= 1:
            raise ValueError(f"pollution ratio must be in (0, 1], got {self.gamma_p}")
        if self.z < 0:
            raise ValueError("LIE scale z must be non-negative (use lie_negate for the - sign)")
        if self.targeted and self.trigger is None:
            raise ValueError("targeted scenarios need a trigger patch")

    @property
    def targeted(self):
        return self.scenario.endswith("t")

    @property
    def omniscient(self):
        return self.scenario.startswith("2")

    @property
    def adaptive(self):
        return self.scenario.startswith("3")

    @property
    def signed_z(self):
        return -self.z if self.lie_negate else self.z


__all__ = [
    "AttackConfig",
    "SCENARIOS",
    "TriggerPatch",
    "adaptive_regularizer",
    "benign_statistics",
    "lie_calibrate",
    "poison_targeted",
    "poison_untargeted",
    "probe_activations",
    "regularizer_backward",
    "stamp_trigger",
]
