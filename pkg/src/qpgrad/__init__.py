"""Lipschitz-regularized quantum policy gradients on CartPole.

A self-contained lab: exact statevector simulation of the policy circuit
(compiled kernel with a numpy fallback), a from-scratch CartPole, the
regularized REINFORCE trainer, curriculum training with failure accounting,
and robustness/generalization evaluation campaigns, all driven by a
deterministic seeded CLI.
"""

__version__ = "0.1.0"

from .cartpole import EnvState, InitRanges, NoiseModel
from .policy import AnsatzSpec, PolicyParams
from .qsim import BACKEND, GateKind, GateOp, Statevector
from .trainer import TrainConfig

__all__ = [
    "__version__",
    "AnsatzSpec",
    "BACKEND",
    "EnvState",
    "GateKind",
    "GateOp",
    "InitRanges",
    "NoiseModel",
    "PolicyParams",
    "Statevector",
    "TrainConfig",
]
