"""Two-action policy realized by a layered rotation ansatz with trainable encoding.

Circuit structure (n qubits, L layers): H on every qubit, then per layer and
per qubit an encoding block followed by a variational block,

    RZ(omega[j,i,0] * s_i), RY(omega[j,i,1] * s_i), RZ(nu[j,i,0]), RY(nu[j,i,1]),

with CZ entanglers on every qubit pair between layers. The measured Z^n
expectation ``e`` maps to action probabilities [(e+1)/2, (1-e)/2].

The ``rz_rz`` encoding variant applies the second encoding rotation around Z
as well; two successive RZ collapse to one effective angle, which makes one
weight per qubit-layer redundant, so ``rz_ry`` is the default.

Because every rotation generator has spectral norm 1/2 and both projectors
(I +- Z^n)/2 have norm 1, the certified Lipschitz bound of the policy reduces
to sums of |omega| entries; see ``lipschitz_bound``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import qsim
from .errors import ConfigurationError, DegeneratePolicyError
from .qsim import AngleSource, GateKind, GateOp

# Spectral norm of the generator of RY/RZ under the e^{-i a G} convention.
GENERATOR_NORM = 0.5

ENTANGLE_BETWEEN = "between"   # entangling blocks after layers 1..L-1 only
ENTANGLE_EVERY = "every"       # entangling block after every layer
ENCODING_RZ_RY = "rz_ry"
ENCODING_RZ_RZ = "rz_rz"

PARAM_SLOTS = 2  # rotation slots per qubit per layer, for nu and for omega each


@dataclass(frozen=True)
class AnsatzSpec:
    """Static shape of the policy circuit."""

    n_qubits: int = 4
    n_layers: int = 3
    entangler: str = ENTANGLE_BETWEEN
    encoding: str = ENCODING_RZ_RY
    generator_norm: float = GENERATOR_NORM

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ConfigurationError("ansatz.n_qubits must be >= 1")
        if self.n_layers < 1:
            raise ConfigurationError("ansatz.n_layers must be >= 1")
        if self.entangler not in (ENTANGLE_BETWEEN, ENTANGLE_EVERY):
            raise ConfigurationError(f"unknown entangler placement {self.entangler!r}")
        if self.encoding not in (ENCODING_RZ_RY, ENCODING_RZ_RZ):
            raise ConfigurationError(f"unknown encoding variant {self.encoding!r}")
        if self.generator_norm <= 0:
            raise ConfigurationError("generator_norm must be positive")

    @property
    def param_shape(self) -> tuple[int, int, int]:
        return (self.n_layers, self.n_qubits, PARAM_SLOTS)

    @property
    def n_params_each(self) -> int:
        return self.n_layers * self.n_qubits * PARAM_SLOTS


@dataclass
class PolicyParams:
    """Trainable angles: ``nu`` (variational) and ``omega`` (encoding weights).

    Both tensors have shape (layers, qubits, slots) and row-major
    layer/qubit/slot flattening order.
    """

    nu: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        self.nu = np.asarray(self.nu, dtype=np.float64)
        self.omega = np.asarray(self.omega, dtype=np.float64)
        if self.nu.shape != self.omega.shape:
            raise ConfigurationError("nu and omega must have identical shapes")
        if not (np.all(np.isfinite(self.nu)) and np.all(np.isfinite(self.omega))):
            raise ConfigurationError("policy parameters must be finite")

    def copy(self) -> "PolicyParams":
        return PolicyParams(self.nu.copy(), self.omega.copy())


@dataclass(frozen=True)
class ObservableSpec:
    """Spectral norms of the two action projectors (I + Z^n)/2, (I - Z^n)/2."""

    projector_norms: tuple[float, float] = (1.0, 1.0)


@dataclass
class PolicyOutput:
    probs: np.ndarray
    expectation: float
    grad_log_prob: tuple[np.ndarray, np.ndarray] | None = None


@dataclass(frozen=True)
class LipschitzBound:
    per_action: tuple[float, float]
    total: float


def check_params(spec: AnsatzSpec, params: PolicyParams) -> None:
    if params.nu.shape != spec.param_shape:
        raise ConfigurationError(
            f"parameter shape {params.nu.shape} does not match ansatz {spec.param_shape}"
        )


def zero_params(spec: AnsatzSpec) -> PolicyParams:
    return PolicyParams(np.zeros(spec.param_shape), np.zeros(spec.param_shape))


def init_params(spec: AnsatzSpec, rng: np.random.Generator) -> PolicyParams:
    """Fresh parameters: nu ~ Uniform[-pi, pi], omega ~ Normal(0, 0.1); nu drawn first."""
    nu = rng.uniform(-np.pi, np.pi, size=spec.param_shape)
    omega = rng.normal(0.0, 0.1, size=spec.param_shape)
    return PolicyParams(nu, omega)


def _entangler_gates(n_qubits: int):
    # CZ commutes with CZ, so lexicographic pair order is canonical.
    return [GateOp(GateKind.CZ, target=b, control=a) for a, b in combinations(range(n_qubits), 2)]


def circuit_layout(spec: AnsatzSpec) -> list[GateOp]:
    """Gate list with angle sources attached and all angles zero."""
    second_enc = GateKind.RZ if spec.encoding == ENCODING_RZ_RZ else GateKind.RY
    gates = [GateOp(GateKind.H, q) for q in range(spec.n_qubits)]
    for layer in range(spec.n_layers):
        for q in range(spec.n_qubits):
            gates.append(GateOp(GateKind.RZ, q, source=AngleSource("omega", layer, q, 0, feature=q)))
            gates.append(GateOp(second_enc, q, source=AngleSource("omega", layer, q, 1, feature=q)))
            gates.append(GateOp(GateKind.RZ, q, source=AngleSource("nu", layer, q, 0)))
            gates.append(GateOp(GateKind.RY, q, source=AngleSource("nu", layer, q, 1)))
        last = layer == spec.n_layers - 1
        if spec.entangler == ENTANGLE_EVERY or not last:
            gates.extend(_entangler_gates(spec.n_qubits))
    return gates


def build_circuit(spec: AnsatzSpec, params: PolicyParams, obs) -> list[GateOp]:
    """Concrete gate list for one input; mainly a reference/inspection path."""
    check_params(spec, params)
    obs = np.asarray(obs, dtype=np.float64)
    if obs.shape != (spec.n_qubits,):
        raise ConfigurationError(f"observation must have {spec.n_qubits} entries, got {obs.shape}")
    out = []
    for g in circuit_layout(spec):
        if g.source is None:
            out.append(g)
            continue
        src = g.source
        if src.kind == "nu":
            angle = params.nu[src.layer, src.qubit, src.slot]
        else:
            angle = params.omega[src.layer, src.qubit, src.slot] * obs[src.feature]
        out.append(GateOp(g.kind, g.target, angle=float(angle), source=src))
    return out


class CircuitTemplate:
    """Packed, input-independent form of the ansatz for fast repeated evaluation.

    ``angles`` fills the per-gate angle vector from parameter tensors and an
    observation; ``grad_to_params`` pulls per-rotation angle gradients back
    onto nu/omega (chain factor s_i for encoding weights).
    """

    def __init__(self, spec: AnsatzSpec):
        self.spec = spec
        layout = circuit_layout(spec)
        self.kinds, self.qa, self.qb, _ = qsim.pack_gates(layout, spec.n_qubits)
        self.n_gates = len(layout)

        def flat(s: AngleSource) -> int:
            return (s.layer * spec.n_qubits + s.qubit) * PARAM_SLOTS + s.slot

        var_g, var_p, enc_g, enc_p, enc_f = [], [], [], [], []
        var_r, enc_r = [], []
        rot = 0
        for i, g in enumerate(layout):
            if not g.is_rotation:
                continue
            if g.source.kind == "nu":
                var_g.append(i)
                var_p.append(flat(g.source))
                var_r.append(rot)
            else:
                enc_g.append(i)
                enc_p.append(flat(g.source))
                enc_f.append(g.source.feature)
                enc_r.append(rot)
            rot += 1
        self.n_rotations = rot
        self._var_gate = np.asarray(var_g, dtype=np.intp)
        self._var_param = np.asarray(var_p, dtype=np.intp)
        self._var_rot = np.asarray(var_r, dtype=np.intp)
        self._enc_gate = np.asarray(enc_g, dtype=np.intp)
        self._enc_param = np.asarray(enc_p, dtype=np.intp)
        self._enc_feature = np.asarray(enc_f, dtype=np.intp)
        self._enc_rot = np.asarray(enc_r, dtype=np.intp)

    def angles(self, nu_flat: np.ndarray, omega_flat: np.ndarray, obs: np.ndarray) -> np.ndarray:
        a = np.zeros(self.n_gates)
        a[self._var_gate] = nu_flat[self._var_param]
        a[self._enc_gate] = omega_flat[self._enc_param] * obs[self._enc_feature]
        return a

    def expval(self, nu_flat, omega_flat, obs) -> float:
        a = self.angles(nu_flat, omega_flat, obs)
        return qsim.packed_expval(self.spec.n_qubits, self.kinds, self.qa, self.qb, a)

    def expval_and_grad(self, nu_flat, omega_flat, obs):
        """Returns (expectation, nu-flat gradient, omega-flat gradient)."""
        a = self.angles(nu_flat, omega_flat, obs)
        e, grot = qsim.packed_expval_and_grad(self.spec.n_qubits, self.kinds, self.qa, self.qb, a)
        gnu, gom = self.grad_to_params(grot, obs)
        return e, gnu, gom

    def grad_to_params(self, grad_rot: np.ndarray, obs: np.ndarray):
        gnu = np.zeros(self.spec.n_params_each)
        gom = np.zeros(self.spec.n_params_each)
        gnu[self._var_param] = grad_rot[self._var_rot]
        gom[self._enc_param] = grad_rot[self._enc_rot] * obs[self._enc_feature]
        return gnu, gom


_templates: dict[AnsatzSpec, CircuitTemplate] = {}


def get_template(spec: AnsatzSpec) -> CircuitTemplate:
    tpl = _templates.get(spec)
    if tpl is None:
        tpl = _templates[spec] = CircuitTemplate(spec)
    return tpl


def probs_from_expectation(e: float) -> np.ndarray:
    """[(e+1)/2, (1-e)/2]; e is clamped to [-1, 1] against roundoff."""
    e = min(1.0, max(-1.0, e))
    return np.array([(e + 1.0) / 2.0, (1.0 - e) / 2.0])


def policy_probs(spec: AnsatzSpec, params: PolicyParams, obs) -> PolicyOutput:
    """Action distribution for one observation."""
    check_params(spec, params)
    obs = np.asarray(obs, dtype=np.float64)
    tpl = get_template(spec)
    e = tpl.expval(params.nu.reshape(-1), params.omega.reshape(-1), obs)
    return PolicyOutput(probs=probs_from_expectation(e), expectation=e)


def grad_log_policy(spec: AnsatzSpec, params: PolicyParams, obs, action: int):
    """Gradient of log pi(action|obs) w.r.t. (nu, omega), tensors shaped like the params.

    grad pi(a|s) = (-1)^a * grad<Z^n> / 2, so grad log pi = that over pi(a|s).
    """
    check_params(spec, params)
    if action not in (0, 1):
        raise ValueError(f"action must be 0 or 1, got {action}")
    obs = np.asarray(obs, dtype=np.float64)
    tpl = get_template(spec)
    e, gnu, gom = tpl.expval_and_grad(params.nu.reshape(-1), params.omega.reshape(-1), obs)
    probs = probs_from_expectation(e)
    p = probs[action]
    if p < 1e-12:
        raise DegeneratePolicyError(f"pi({action}|s) = {p:.3e}; gradient of log pi undefined")
    coeff = (1.0 if action == 0 else -1.0) / (2.0 * p)
    shape = spec.param_shape
    return (coeff * gnu).reshape(shape), (coeff * gom).reshape(shape)


def lipschitz_bound(
    spec: AnsatzSpec, params: PolicyParams, obs_spec: ObservableSpec = ObservableSpec()
) -> LipschitzBound:
    """Certified bound on how fast the policy can change per unit input change.

    Each encoding rotation contributes 2 * ||P_a|| * |omega| * ||H|| to the
    per-action bound; the total bounds the l1 change of the distribution
    vector per l2 change of the input. Independent of nu.
    """
    check_params(spec, params)
    weight_sum = float(np.sum(np.abs(params.omega))) * spec.generator_norm * 2.0
    per_action = tuple(norm * weight_sum for norm in obs_spec.projector_norms)
    return LipschitzBound(per_action=per_action, total=float(sum(per_action)))


def regularization_penalty(params: PolicyParams, lam: float, generator_norm: float = GENERATOR_NORM) -> float:
    """lambda * sum_g omega_g^2 * ||H||^2, the term subtracted from the objective."""
    if lam < 0:
        raise ConfigurationError(f"regularization rate must be >= 0, got {lam}")
    return float(lam * generator_norm**2 * np.sum(params.omega**2))


def penalty_gradient(params: PolicyParams, lam: float, generator_norm: float = GENERATOR_NORM) -> np.ndarray:
    """Gradient of the penalty w.r.t. omega: 2 * lambda * ||H||^2 * omega."""
    if lam < 0:
        raise ConfigurationError(f"regularization rate must be >= 0, got {lam}")
    return 2.0 * lam * generator_norm**2 * params.omega


def empirical_lipschitz_check(
    spec: AnsatzSpec, params: PolicyParams, n_pairs: int, rng: np.random.Generator
) -> float:
    """Max observed ||pi(.|x) - pi(.|x')||_1 / ||x - x'||_2 over random pairs.

    Pairs are drawn uniformly from [-1, 1]^n; exact collisions are resampled.
    The result can never exceed ``lipschitz_bound(...).total``.
    """
    check_params(spec, params)
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    tpl = get_template(spec)
    nu_flat = params.nu.reshape(-1)
    om_flat = params.omega.reshape(-1)
    worst = 0.0
    for _ in range(n_pairs):
        x = rng.uniform(-1.0, 1.0, size=spec.n_qubits)
        x2 = rng.uniform(-1.0, 1.0, size=spec.n_qubits)
        while np.array_equal(x, x2):
            x2 = rng.uniform(-1.0, 1.0, size=spec.n_qubits)
        p = probs_from_expectation(tpl.expval(nu_flat, om_flat, x))
        p2 = probs_from_expectation(tpl.expval(nu_flat, om_flat, x2))
        ratio = float(np.sum(np.abs(p - p2)) / np.linalg.norm(x - x2))
        if ratio > worst:
            worst = ratio
    return worst
