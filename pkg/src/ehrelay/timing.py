"""Rate of the scheme that signals through transmission spacing.

With capacity equal to the cost, the relay alternates between draining to
empty and recharging, so the time between consecutive transmissions carries
the message. The recharge time Z counts first-hop charge arrivals until the
battery refills: a negative binomial when the charge probability is constant.
The relay may stretch each gap by a bounded data-dependent wait v >= 1, giving
an inter-transmission time T = Z + v whose entropy per expected slot is the
raw throughput of the second hop.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .battery import BatterySpec
from .errors import ConstraintError, NumericalError, ValidationError
from .pmf import BinaryChannel, Pmf, entropy, mutual_information, output_entropy_given_input

MASS_TOL = 1e-12
_SUPPORT_CAP = 1_000_000


@dataclass(frozen=True)
class IntegerPmf:
    """Distribution over a contiguous ascending range of integers."""

    values: np.ndarray
    probs: np.ndarray

    def __init__(self, values, probs):
        vals = np.asarray(values, dtype=np.int64)
        pr = np.asarray(probs, dtype=np.float64)
        if vals.ndim != 1 or pr.shape != vals.shape or vals.size == 0:
            raise ValidationError("values and probs must be matching 1-d arrays")
        if np.any(np.diff(vals) <= 0):
            raise ValidationError("values must be strictly ascending")
        if np.any(pr < 0.0) or not np.isfinite(pr).all():
            raise ValidationError("probabilities must be finite and nonnegative")
        total = float(pr.sum())
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"probabilities sum to {total}, expected 1")
        pr = pr / total
        vals.setflags(write=False)
        pr.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "probs", pr)

    def mean(self) -> float:
        return float(self.values @ self.probs)

    def entropy_bits(self) -> float:
        return entropy(Pmf(self.probs, tol=1e-9))


@dataclass(frozen=True)
class ZNoise:
    """Recharge-time law: cost-many charge arrivals at probability p1 each.

    With ``overlap`` the slot that empties the battery can itself carry a
    charge, shaving one arrival off the wait with probability p1.
    """

    cost: int
    p1: float
    overlap: bool = False
    zmax: int | None = None

    def __post_init__(self):
        if self.cost < 2:
            raise ValidationError("cost must be at least 2")
        if not (0.0 < self.p1 <= 1.0):
            raise ValidationError("charge probability must be in (0, 1]; 0 never recharges")
        if self.zmax is not None and self.zmax < self.cost - (1 if self.overlap else 0):
            raise ValidationError("zmax is below the smallest possible recharge time")


def _nb_pmf(z: np.ndarray, k: int, p: float) -> np.ndarray:
    """P(k-th success on trial z) for Bernoulli(p) trials."""
    out = np.zeros(z.shape, dtype=np.float64)
    for i, zi in enumerate(z):
        if zi >= k:
            out[i] = comb(int(zi) - 1, k - 1) * p**k * (1.0 - p) ** (int(zi) - k)
    return out


def z_pmf(noise: ZNoise) -> IntegerPmf:
    """Distribution of the recharge time, truncated where the tail dies.

    The support is cut at the explicit ``zmax`` when given; the truncated
    tail must weigh under ``MASS_TOL`` or the horizon is rejected. Without
    ``zmax`` the smallest adequate horizon is found by doubling.
    """
    m, p = noise.cost, noise.p1
    lo = m - 1 if noise.overlap else m

    def mass(values: np.ndarray) -> np.ndarray:
        if noise.overlap:
            return p * _nb_pmf(values, m - 1, p) + (1.0 - p) * _nb_pmf(values, m, p)
        return _nb_pmf(values, m, p)

    if noise.zmax is not None:
        values = np.arange(lo, noise.zmax + 1, dtype=np.int64)
        probs = mass(values)
        if probs.sum() < 1.0 - MASS_TOL:
            raise NumericalError(
                f"horizon {noise.zmax} truncates {1.0 - probs.sum():.3e} of the recharge mass"
            )
        return IntegerPmf(values, probs / probs.sum())
    hi = max(lo + 8, 2 * m)
    while True:
        values = np.arange(lo, hi + 1, dtype=np.int64)
        probs = mass(values)
        if probs.sum() >= 1.0 - MASS_TOL:
            cum = np.cumsum(probs)
            cut = int(np.searchsorted(cum, 1.0 - MASS_TOL)) + 1
            values, probs = values[:cut], probs[:cut]
            return IntegerPmf(values, probs / probs.sum())
        if hi > _SUPPORT_CAP:
            raise NumericalError(
                f"recharge-time support exceeds {_SUPPORT_CAP} points at p1={p}"
            )
        hi *= 2


def default_wait_table(aux_size: int, z_values: np.ndarray) -> np.ndarray:
    """Wait rule v(a, z) = ((a - z) mod aux_size) + 1, one row per aux symbol."""
    if aux_size < 1:
        raise ValidationError("aux alphabet must be nonempty")
    a = np.arange(aux_size, dtype=np.int64)[:, None]
    return (a - np.asarray(z_values, dtype=np.int64)[None, :]) % aux_size + 1


def constant_wait_table(value: int, aux_size: int, z_values: np.ndarray) -> np.ndarray:
    if value < 1:
        raise ValidationError("waits must be at least one slot")
    return np.full((aux_size, len(z_values)), value, dtype=np.int64)


@dataclass(frozen=True)
class TimingScheme:
    """Auxiliary message symbol A ~ aux and a wait table v[a, z] >= 1."""

    aux: Pmf
    wait: np.ndarray

    def __post_init__(self):
        wait = np.asarray(self.wait, dtype=np.int64)
        if wait.ndim != 2:
            raise ValidationError("wait table must be 2-d (aux symbol by recharge time)")
        if wait.shape[0] != len(self.aux):
            raise ValidationError("wait table rows must match the aux alphabet")
        if np.any(wait < 1):
            raise ValidationError("waits must be at least one slot")
        wait.setflags(write=False)
        object.__setattr__(self, "wait", wait)


def t_pmf(z_dist: IntegerPmf, scheme: TimingScheme) -> IntegerPmf:
    """Distribution of T = Z + v(A, Z) with A independent of Z."""
    if scheme.wait.shape[1] != len(z_dist.values):
        raise ValidationError("wait table columns must cover the recharge support")
    t_vals = z_dist.values[None, :] + scheme.wait
    weights = scheme.aux.probs[:, None] * z_dist.probs[None, :]
    lo, hi = int(t_vals.min()), int(t_vals.max())
    acc = np.zeros(hi - lo + 1, dtype=np.float64)
    np.add.at(acc, (t_vals - lo).ravel(), weights.ravel())
    keep = acc > 0.0
    values = np.arange(lo, hi + 1, dtype=np.int64)[keep]
    return IntegerPmf(values, acc[keep])


def induced_arrival_prob(p_x1: Pmf, ch1: BinaryChannel) -> float:
    """Charge probability seen by the relay: P(first-hop output = 1)."""
    out = np.asarray(p_x1.probs) @ ch1.rows
    return float(out[1])


@dataclass(frozen=True)
class TimingRateResult:
    breakdown: "RateBreakdown"
    noise: ZNoise
    z_dist: IntegerPmf
    t_dist: IntegerPmf
    scheme: TimingScheme


def timing_rate(spec: BatterySpec, p_x1, ch1: BinaryChannel, *,
                scheme: TimingScheme | None = None, z: IntegerPmf | None = None,
                aux_size: int = 5, wait_rule: str = "mod", wait_const: int = 1,
                overlap: bool = False, zmax: int | None = None) -> TimingRateResult:
    """Evaluate the timing scheme at a source law.

    Requires capacity == cost so every transmission empties the battery. The
    receiver bound is H(T)/E[T] minus the per-slot charge entropy the relay
    cannot predict, H(first-hop output | source symbol); the relay bound is
    the first-hop mutual information. ``z`` overrides the recharge law (for
    empirical plug-in); otherwise it is the negative binomial induced by the
    source law through the first hop.
    """
    if spec.capacity != spec.cost:
        raise ConstraintError("timing scheme requires capacity equal to the cost")
    src = p_x1 if isinstance(p_x1, Pmf) else Pmf(p_x1)
    if len(src) != 2:
        raise ValidationError("source law must be binary")
    if z is None:
        p1 = induced_arrival_prob(src, ch1)
        noise = ZNoise(cost=spec.cost, p1=p1, overlap=overlap, zmax=zmax)
        z_dist = z_pmf(noise)
    else:
        noise = ZNoise(cost=spec.cost, p1=induced_arrival_prob(src, ch1),
                       overlap=overlap, zmax=zmax)
        z_dist = z
    if scheme is None:
        if wait_rule == "mod":
            wait = default_wait_table(aux_size, z_dist.values)
            aux = Pmf.uniform(aux_size)
        elif wait_rule == "const":
            wait = constant_wait_table(wait_const, 1, z_dist.values)
            aux = Pmf.point(1, 0)
        else:
            raise ValidationError(f"unknown wait rule {wait_rule!r}")
        scheme = TimingScheme(aux, wait)
    t_dist = t_pmf(z_dist, scheme)
    receiver = t_dist.entropy_bits() / t_dist.mean()
    receiver -= output_entropy_given_input(src, ch1)
    relay = mutual_information(src, ch1)
    from .rates import RateBreakdown

    return TimingRateResult(RateBreakdown.from_bounds(relay, receiver),
                            noise, z_dist, t_dist, scheme)
