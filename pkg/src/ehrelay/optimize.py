"""Deterministic policy search over the rate expressions.

Each scheme's free parameters are packed into a unit cube: a coarse grid (or
a seeded random cloud when the grid would blow the evaluation budget) picks
starting points, and cyclic coordinate ascent with a halving step refines
them. Decoding from the cube clamps every probability away from zero by the
positivity floor, so every visited policy is feasible by construction and the
interior-policy conditions of the rate expressions hold automatically.

Runs are reproducible: the only randomness is a generator seeded from the
options plus a label describing the problem, and ties between equal-value
optima break lexicographically on the packed parameters.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from math import sqrt
from typing import Optional

import numpy as np

from .battery import (
    ArrivalModel,
    BatterySpec,
    StatePolicy,
    _solve_stationary,
    energy_profile,
    transition_tensor,
)
from .errors import ConstraintError, EhRelayError, ValidationError
from .pmf import BinaryChannel, Pmf, binary_entropy, entropy
from .rates import (
    Model,
    RateBreakdown,
    both_hops_rate,
    per_level_receiver_bits,
    per_level_source_entropy_bits,
    random_loss_rate,
    require_informative_second_hop,
    second_hop_rate,
)
from .timing import TimingRateResult, timing_rate

_STEP0 = 0.25
_STEP_FLOOR = 1e-9
_RESIDUAL_GATE = 1e-8
_TIMING_BOX = (0.01, 0.99)


@dataclass(frozen=True)
class OptimizeOptions:
    """Knobs for the search; defaults are sized for single-digit-second runs."""

    grid_points: int = 21
    grid_budget: int = 20_000
    refine_iters: int = 200
    restarts: int = 8
    eps_pos: float = 1e-6
    seed: int = 0
    aux_sizes: tuple[int, ...] = (5,)

    def __post_init__(self):
        if self.grid_points < 2 or self.grid_budget < 1:
            raise ValidationError("grid must have at least two points per axis")
        if self.refine_iters < 1 or self.restarts < 0:
            raise ValidationError("refinement needs at least one iteration")
        if not 0.0 < self.eps_pos < 0.5:
            raise ValidationError("positivity floor must lie in (0, 0.5)")
        if not self.aux_sizes or any(a < 1 for a in self.aux_sizes):
            raise ValidationError("aux alphabet sizes must be positive")


@dataclass(frozen=True)
class OptimizeResult:
    model: Model
    breakdown: RateBreakdown
    theta: tuple
    policy_digest: str
    policy: Optional[StatePolicy] = None
    p_x1: Optional[Pmf] = None
    timing: Optional[TimingRateResult] = None
    evaluations: int = 0


def _digest(parts) -> str:
    h = hashlib.sha256()
    for part in parts:
        h.update(np.ascontiguousarray(np.round(np.asarray(part, dtype=np.float64), 12)).tobytes())
    return h.hexdigest()[:12]


def _search_rng(opts: OptimizeOptions, label: str) -> np.random.Generator:
    tag = int.from_bytes(hashlib.sha256(label.encode()).digest()[:8], "big")
    return np.random.default_rng(np.random.SeedSequence((opts.seed & (2**64 - 1), tag)))


class _CubeProblem:
    """Value oracle over the unit cube with an evaluation counter."""

    dims: int

    def __init__(self):
        self.evaluations = 0

    def value(self, theta: np.ndarray) -> float:
        raise NotImplementedError

    def __call__(self, theta: np.ndarray) -> float:
        self.evaluations += 1
        return self.value(theta)


def _chain_value(joint: np.ndarray, tensor: np.ndarray):
    """Steady state of the kernel induced by stacked joint tables, or None."""
    kernel = np.einsum("uab,uabv->uv", joint, tensor)
    pi = _solve_stationary(kernel)
    if pi is None or float(np.abs(pi @ kernel - pi).max()) > _RESIDUAL_GATE:
        return None
    return pi


class _SecondHopProblem(_CubeProblem):
    """Joint per-level tables against a noisy second hop, noiseless charging.

    Levels below the cost contribute one parameter (the source bias); funded
    levels contribute three, mapped onto the open 2x2 simplex through a
    conditional split and the affine interior squeeze.
    """

    def __init__(self, spec: BatterySpec, ch2: BinaryChannel, eps: float):
        super().__init__()
        if 4.0 * eps > 1.0:
            raise ConstraintError(
                f"positivity floor {eps} leaves no room in a four-cell table"
            )
        self.spec = spec
        self.ch2 = ch2
        self.eps = eps
        self.funded = max(spec.states - spec.cost, 0)
        self.dims = min(spec.cost, spec.states) + 3 * self.funded
        self.tensor = transition_tensor(spec, ArrivalModel.deterministic())

    def decode(self, theta: np.ndarray) -> np.ndarray:
        eps = self.eps
        m = min(self.spec.cost, self.spec.states)
        joint = np.zeros((self.spec.states, 2, 2))
        bias = eps + (1.0 - 2.0 * eps) * theta[:m]
        joint[:m, 0, 0] = 1.0 - bias
        joint[:m, 1, 0] = bias
        if self.funded:
            abc = theta[m:].reshape(self.funded, 3)
            a, b, c = abc[:, 0], abc[:, 1], abc[:, 2]
            cells = np.stack(
                [a * b, a * (1.0 - b), (1.0 - a) * c, (1.0 - a) * (1.0 - c)], axis=1
            )
            joint[m:] = (eps + (1.0 - 4.0 * eps) * cells).reshape(self.funded, 2, 2)
        return joint

    def value(self, theta: np.ndarray) -> float:
        joint = self.decode(theta)
        pi = _chain_value(joint, self.tensor)
        if pi is None:
            return -np.inf
        receiver = float(pi @ per_level_receiver_bits(joint.sum(axis=1), self.ch2))
        relay = float(pi @ per_level_source_entropy_bits(joint))
        return min(relay, receiver)

    def finalize(self, theta: np.ndarray):
        joint = self.decode(theta)
        policy = StatePolicy.joint_policy(self.spec, list(joint), tol=1e-9)
        breakdown = second_hop_rate(self.spec, policy, self.ch2)
        return breakdown, {"policy": policy, "policy_digest": _digest([joint])}


class _ProductProblem(_CubeProblem):
    """Product policies for the noisy-charging schemes.

    One parameter sets the source bias, one per funded level sets the
    spending probability; all are clamped to [sqrt(eps), 1 - sqrt(eps)] so
    the product cells stay above the floor. The receiver penalty (charge
    entropy given the source symbol) is linear in the source law, so it is
    precomputed per symbol.
    """

    def __init__(self, spec: BatterySpec, model: Model, ch1: BinaryChannel,
                 ch2: BinaryChannel, arrival: ArrivalModel, eps: float):
        super().__init__()
        if 4.0 * eps > 1.0:
            raise ConstraintError(
                f"positivity floor {eps} leaves no room in a four-cell table"
            )
        self.spec = spec
        self.model = model
        self.ch1 = ch1
        self.ch2 = ch2
        self.arrival = arrival
        self.lo = sqrt(eps)
        self.span = 1.0 - 2.0 * self.lo
        self.funded = max(spec.states - spec.cost, 0)
        self.dims = 1 + self.funded
        self.tensor = transition_tensor(spec, arrival)
        profile = energy_profile(arrival, spec)
        if model is Model.RANDOM_LOSS:
            self.penalty = np.array([entropy(Pmf(profile[0], tol=1e-9)),
                                     entropy(Pmf(profile[1], tol=1e-9))])
        else:
            self.penalty = np.array([binary_entropy(ch1.q1), binary_entropy(ch1.q2)])
        self.relay_cond = np.array([binary_entropy(ch1.q1), binary_entropy(ch1.q2)])

    def decode(self, theta: np.ndarray):
        vals = self.lo + self.span * theta
        p1 = float(vals[0])
        rows = np.zeros((self.spec.states, 2))
        rows[:, 0] = 1.0
        if self.funded:
            rows[self.spec.cost:, 1] = vals[1:]
            rows[self.spec.cost:, 0] = 1.0 - vals[1:]
        return p1, rows

    def value(self, theta: np.ndarray) -> float:
        p1, rows = self.decode(theta)
        src = np.array([1.0 - p1, p1])
        joint = src[None, :, None] * rows[:, None, :]
        pi = _chain_value(joint, self.tensor)
        if pi is None:
            return -np.inf
        receiver = float(pi @ per_level_receiver_bits(rows, self.ch2)) - float(src @ self.penalty)
        out0 = src[0] * self.ch1.q1 + src[1] * (1.0 - self.ch1.q2)
        relay = max(binary_entropy(out0) - float(src @ self.relay_cond), 0.0)
        return min(relay, receiver)

    def finalize(self, theta: np.ndarray):
        p1, rows = self.decode(theta)
        src = Pmf.binary(p1)
        if self.model is Model.RANDOM_LOSS:
            breakdown = random_loss_rate(self.spec, src, list(rows), self.ch1, self.ch2,
                                         self.arrival.loss[0], self.arrival.loss[1])
        else:
            breakdown = both_hops_rate(self.spec, src, list(rows), self.ch1, self.ch2)
        policy = StatePolicy.product_policy(self.spec, src, list(rows))
        return breakdown, {"policy": policy, "p_x1": src,
                           "policy_digest": _digest([src.probs, rows])}


class _TimingProblem(_CubeProblem):
    """Source bias for the spacing scheme, one dimension per search."""

    dims = 1

    def __init__(self, spec: BatterySpec, ch1: BinaryChannel, aux_size: int,
                 wait_rule: str, wait_const: int, overlap: bool):
        super().__init__()
        self.spec = spec
        self.ch1 = ch1
        self.kwargs = dict(aux_size=aux_size, wait_rule=wait_rule,
                           wait_const=wait_const, overlap=overlap)

    def _rate(self, theta: np.ndarray) -> TimingRateResult:
        lo, hi = _TIMING_BOX
        p1 = lo + (hi - lo) * float(theta[0])
        return timing_rate(self.spec, Pmf.binary(p1), self.ch1, **self.kwargs)

    def value(self, theta: np.ndarray) -> float:
        try:
            return self._rate(theta).breakdown.rate
        except EhRelayError:
            return -np.inf

    def finalize(self, theta: np.ndarray):
        result = self._rate(theta)
        lo, hi = _TIMING_BOX
        p1 = lo + (hi - lo) * float(theta[0])
        digest = _digest([[p1], result.scheme.aux.probs,
                          result.scheme.wait.astype(np.float64)])
        return result.breakdown, {"p_x1": Pmf.binary(p1), "timing": result,
                                  "policy_digest": digest}


def _start_points(dims: int, opts: OptimizeOptions, rng: np.random.Generator,
                  extra) -> np.ndarray:
    g = opts.grid_points
    while g >= 2 and g**dims > opts.grid_budget:
        g -= 1
    if g >= 2:
        axes = np.linspace(0.0, 1.0, g)
        mesh = np.meshgrid(*([axes] * dims), indexing="ij")
        cloud = np.stack(mesh, axis=-1).reshape(-1, dims)
    else:
        cloud = rng.random((opts.grid_budget, dims))
    center = np.full((1, dims), 0.5)
    restarts = rng.random((opts.restarts, dims)) if opts.restarts else np.empty((0, dims))
    blocks = [center, cloud, restarts]
    if extra:
        blocks.append(np.clip(np.asarray(extra, dtype=np.float64).reshape(-1, dims), 0.0, 1.0))
    return np.vstack(blocks)


def _better(value: float, theta: np.ndarray, best_value: float,
            best_theta: Optional[np.ndarray]) -> bool:
    if value > best_value:
        return True
    if value == best_value and best_theta is not None:
        return tuple(theta) < tuple(best_theta)
    return False


def _ascend(problem: _CubeProblem, theta: np.ndarray, iters: int):
    """Cyclic coordinate ascent with a halving step, inside the unit cube."""
    theta = np.clip(theta.astype(np.float64), 0.0, 1.0)
    best = problem(theta)
    step = _STEP0
    for _ in range(iters):
        improved = False
        for i in range(theta.size):
            for delta in (step, -step):
                cand = theta.copy()
                cand[i] = min(max(cand[i] + delta, 0.0), 1.0)
                if cand[i] == theta[i]:
                    continue
                value = problem(cand)
                if value > best:
                    best, theta, improved = value, cand, True
        if not improved:
            step *= 0.5
            if step < _STEP_FLOOR:
                break
    return theta, best


def _run_search(problem: _CubeProblem, opts: OptimizeOptions, label: str,
                extra_starts) -> np.ndarray:
    rng = _search_rng(opts, label)
    starts = _start_points(problem.dims, opts, rng, extra_starts)
    values = np.array([problem(s) for s in starts])
    if not np.isfinite(values).any():
        raise ConstraintError("no feasible policy found anywhere on the search grid")
    order = np.argsort(-values, kind="stable")
    keep = order[: max(1, opts.restarts + 1)]
    best_theta, best_value = None, -np.inf
    for idx in keep:
        if not np.isfinite(values[idx]):
            continue
        theta, value = _ascend(problem, starts[idx].copy(), opts.refine_iters)
        if _better(value, theta, best_value, best_theta):
            best_value, best_theta = value, theta
    return best_theta


def optimize(model, spec: BatterySpec, *, ch1: Optional[BinaryChannel] = None,
             ch2: Optional[BinaryChannel] = None,
             loss: Optional[tuple[Pmf, Pmf]] = None,
             wait_rule: str = "mod", wait_const: int = 1, overlap: bool = False,
             opts: OptimizeOptions = OptimizeOptions(),
             extra_starts=None) -> OptimizeResult:
    """Maximize a scheme's rate over its free policy parameters.

    Required ingredients by model: second-hop needs ``ch2``; timing needs
    ``ch1`` (and capacity equal to cost); both-hops needs both channels;
    random-loss needs both channels plus the pair of per-symbol loss laws.
    The reported breakdown is recomputed through the public rate functions at
    the winning policy, so it satisfies exactly the invariants they enforce.
    """
    model = Model(model)
    label = f"optimize/{model.value}/cost={spec.cost}/capacity={spec.capacity}"
    if model is Model.SECOND_HOP:
        if ch2 is None:
            raise ValidationError("second-hop optimization needs the second-hop channel")
        require_informative_second_hop(ch2)
        problem = _SecondHopProblem(spec, ch2, opts.eps_pos)
    elif model is Model.TIMING:
        if ch1 is None:
            raise ValidationError("timing optimization needs the first-hop channel")
        if spec.capacity != spec.cost:
            raise ConstraintError("timing scheme requires capacity equal to the cost")
        best = None
        for aux_size in opts.aux_sizes:
            problem = _TimingProblem(spec, ch1, aux_size, wait_rule, wait_const, overlap)
            theta = _run_search(problem, opts, f"{label}/aux={aux_size}", extra_starts)
            breakdown, extras = problem.finalize(theta)
            cand = OptimizeResult(model=model, breakdown=breakdown,
                                  theta=tuple(float(t) for t in theta),
                                  evaluations=problem.evaluations, **extras)
            if best is None or cand.breakdown.rate > best.breakdown.rate:
                best = cand
        return best
    elif model is Model.BOTH_HOPS:
        if ch1 is None or ch2 is None:
            raise ValidationError("both-hops optimization needs both channels")
        require_informative_second_hop(ch2)
        if spec.capacity < spec.cost:
            raise ConstraintError("both-hops scheme assumes capacity >= cost")
        problem = _ProductProblem(spec, model, ch1, ch2,
                                  ArrivalModel.first_hop(ch1), opts.eps_pos)
    elif model is Model.RANDOM_LOSS:
        if ch1 is None or ch2 is None or loss is None:
            raise ValidationError(
                "random-loss optimization needs both channels and the loss laws"
            )
        require_informative_second_hop(ch2)
        if spec.capacity < spec.cost:
            raise ConstraintError("random-loss scheme assumes capacity >= cost")
        problem = _ProductProblem(spec, model, ch1, ch2,
                                  ArrivalModel.lossy(ch1, loss[0], loss[1]), opts.eps_pos)
    else:  # pragma: no cover
        raise ValidationError(f"unknown model {model!r}")
    theta = _run_search(problem, opts, label, extra_starts)
    breakdown, extras = problem.finalize(theta)
    return OptimizeResult(model=model, breakdown=breakdown,
                          theta=tuple(float(t) for t in theta),
                          evaluations=problem.evaluations, **extras)


@dataclass(frozen=True)
class LossShape:
    """Loss laws specified once and zero-padded to each sweep's cost."""

    given_zero: tuple
    given_one: tuple

    def pmfs(self, cost: int) -> tuple[Pmf, Pmf]:
        out = []
        for vec in (self.given_zero, self.given_one):
            if len(vec) > cost:
                raise ValidationError(
                    f"loss law has {len(vec)} entries but the cost is {cost}"
                )
            padded = np.zeros(cost)
            padded[: len(vec)] = vec
            out.append(Pmf(padded))
        return out[0], out[1]


@dataclass(frozen=True)
class SweepSpec:
    """A family of optimizations over a battery parameter.

    ``parameter`` is "cost" (capacity rides along, equal to the cost, so the
    spacing scheme stays admissible) or "capacity" (cost fixed via ``cost``;
    the spacing scheme is rejected because it needs capacity == cost).
    """

    models: tuple
    parameter: str
    values: tuple
    cost: Optional[int] = None
    ch1: Optional[BinaryChannel] = None
    ch2: Optional[BinaryChannel] = None
    loss: Optional[LossShape] = None
    wait_rule: str = "mod"
    wait_const: int = 1
    overlap: bool = False
    opts: OptimizeOptions = field(default_factory=OptimizeOptions)

    def __post_init__(self):
        models = tuple(Model(m) for m in self.models)
        object.__setattr__(self, "models", models)
        values = tuple(int(v) for v in self.values)
        if not values or any(v < 1 for v in values):
            raise ValidationError("sweep values must be positive integers")
        object.__setattr__(self, "values", values)
        if self.parameter == "cost":
            if any(v < 2 for v in values):
                raise ValidationError("costs below 2 are outside the model")
        elif self.parameter == "capacity":
            if self.cost is None or self.cost < 2:
                raise ValidationError("capacity sweeps need a fixed cost of at least 2")
            if any(v < self.cost for v in values):
                raise ValidationError("swept capacities must not fall below the cost")
            if Model.TIMING in models:
                raise ConstraintError(
                    "the spacing scheme needs capacity equal to the cost, "
                    "so it cannot ride a capacity sweep"
                )
        else:
            raise ValidationError("sweep parameter must be 'cost' or 'capacity'")

    def spec_for(self, value: int) -> BatterySpec:
        if self.parameter == "cost":
            return BatterySpec(capacity=value, cost=value)
        return BatterySpec(capacity=value, cost=self.cost)


def sweep(plan: SweepSpec) -> list[dict]:
    """Optimize every (model, value) cell and return rows in sweep order.

    Consecutive values of the same model warm-start from the previous
    optimum, padded by repeating the last coordinate when the dimension
    grows.
    """
    rows = []
    for model in plan.models:
        prev_theta: Optional[np.ndarray] = None
        for value in sorted(plan.values):
            spec = plan.spec_for(value)
            loss = plan.loss.pmfs(spec.cost) if (model is Model.RANDOM_LOSS
                                                 and plan.loss is not None) else None
            if model is Model.RANDOM_LOSS and loss is None:
                raise ValidationError("random-loss sweeps need a loss shape")
            extra = None
            if prev_theta is not None:
                dims = _sweep_dims(model, spec)
                padded = np.full(dims, prev_theta[-1])
                padded[: min(dims, prev_theta.size)] = prev_theta[: min(dims, prev_theta.size)]
                extra = [padded]
            result = optimize(model, spec, ch1=plan.ch1, ch2=plan.ch2, loss=loss,
                              wait_rule=plan.wait_rule, wait_const=plan.wait_const,
                              overlap=plan.overlap, opts=plan.opts, extra_starts=extra)
            prev_theta = np.asarray(result.theta)
            rows.append({
                "model": model.value,
                "cost": spec.cost,
                "capacity": spec.capacity,
                "relay_bound": result.breakdown.relay_bound,
                "receiver_bound": result.breakdown.receiver_bound,
                "rate": result.breakdown.rate,
                "achievable": result.breakdown.achievable,
                "binding": result.breakdown.binding,
                "policy_digest": result.policy_digest,
            })
    return rows


def _sweep_dims(model: Model, spec: BatterySpec) -> int:
    funded = max(spec.states - spec.cost, 0)
    if model is Model.SECOND_HOP:
        return min(spec.cost, spec.states) + 3 * funded
    if model is Model.TIMING:
        return 1
    return 1 + funded
