"""Position-auction instances and the alpha-virtual-value mechanism family.

An instance is a non-increasing slot-effect profile plus advertisers
(value-per-click, relevance) sharing one i.i.d. value prior.  The mechanism
ranks advertisers by relevance times alpha-virtual value, drops negative
scores, and fills slots top down.  Payments are threshold payments found by
bisection on the score function.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple

from .dists import Distribution, ParameterError, dist_from_json

PAYMENT_VALUE_TOLERANCE = 1e-9

OUTCOME_CSV_HEADER = "alpha,welfare,virtual_surplus,payment_total"


class UnsupportedConfigurationError(ValueError):
    """Raised when an operation needs a property the instance lacks."""


@dataclass(frozen=True)
class SlotProfile:
    """Ordered slot effects s_1 >= s_2 >= ... >= s_m, each in [0, 1]."""

    effects: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "effects", tuple(float(s) for s in self.effects))
        for s in self.effects:
            if not 0.0 <= s <= 1.0:
                raise ParameterError(f"slot effect {s} outside [0, 1]")
        for a, b in zip(self.effects, self.effects[1:]):
            if a < b:
                raise ParameterError("slot effects must be non-increasing")

    def __len__(self) -> int:
        return len(self.effects)

    def padded(self, n: int) -> Tuple[float, ...]:
        """Effects extended with zero slots up to length n."""
        if n <= len(self.effects):
            return self.effects[:n]
        return self.effects + (0.0,) * (n - len(self.effects))


@dataclass(frozen=True)
class AdvertiserState:
    id: int
    v: float
    p: float

    def __post_init__(self):
        if self.v < 0:
            raise ParameterError("value-per-click must be non-negative")
        if not 0.0 <= self.p <= 1.0:
            raise ParameterError("relevance must lie in [0, 1]")


def realized_value(adv: AdvertiserState) -> float:
    """Value per unit slot effect, r = p * v."""
    return adv.p * adv.v


@dataclass(frozen=True)
class AuctionInstance:
    slots: SlotProfile
    advertisers: Tuple[AdvertiserState, ...]
    dist: Distribution

    def __post_init__(self):
        object.__setattr__(self, "advertisers", tuple(self.advertisers))

    def with_relevances(self, relevances: Sequence[float]) -> "AuctionInstance":
        """Same instance under a different relevance prediction."""
        if len(relevances) != len(self.advertisers):
            raise ParameterError("relevance vector length mismatch")
        advs = tuple(
            AdvertiserState(a.id, a.v, float(p))
            for a, p in zip(self.advertisers, relevances)
        )
        return AuctionInstance(self.slots, advs, self.dist)

    def to_json(self) -> dict:
        return {
            "slots": list(self.slots.effects),
            "advertisers": [{"v": a.v, "p": a.p} for a in self.advertisers],
            "dist": self.dist.to_json(),
        }


def instance_from_json(obj: dict) -> AuctionInstance:
    try:
        slots = SlotProfile(tuple(obj["slots"]))
        advs = tuple(
            AdvertiserState(i, float(a["v"]), float(a["p"]))
            for i, a in enumerate(obj["advertisers"])
        )
        dist = dist_from_json(obj["dist"])
    except (KeyError, TypeError) as exc:
        raise ParameterError(f"malformed auction instance: missing {exc}") from exc
    return AuctionInstance(slots, advs, dist)


@dataclass(frozen=True)
class Assignment:
    """Injective partial map advertiser id -> slot index."""

    slot_of: Dict[int, int]
    unassigned: Tuple[int, ...]

    def __post_init__(self):
        slots = list(self.slot_of.values())
        if len(set(slots)) != len(slots):
            raise ParameterError("assignment must be injective")

    def __len__(self) -> int:
        return len(self.slot_of)


@dataclass(frozen=True)
class OutcomeMetrics:
    welfare: float
    realized_virtual_surplus: float
    payments: Dict[int, float] = field(default_factory=dict)

    @property
    def payment_total(self) -> float:
        return sum(self.payments.values())

    def objective(self, alpha: float) -> float:
        return (1.0 - alpha) * self.welfare + alpha * self.realized_virtual_surplus

    def csv_row(self, alpha: float) -> str:
        return (
            f"{alpha!r},{self.welfare!r},"
            f"{self.realized_virtual_surplus!r},{self.payment_total!r}"
        )


def rank_by_score(scores: Sequence[float]) -> List[int]:
    """Indices ordered by score descending; ties broken by ascending index."""
    return sorted(range(len(scores)), key=lambda i: (-scores[i], i))


def _scores(instance: AuctionInstance, alpha: float) -> List[float]:
    return [
        a.p * instance.dist.alpha_virtual_value(a.v, alpha)
        for a in instance.advertisers
    ]


def allocate(instance: AuctionInstance, alpha: float) -> Assignment:
    """Rank by p_i * phi_alpha(v_i), drop negative scores, fill slots top down.

    Scores exactly zero are assigned.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ParameterError(f"alpha must lie in [0, 1], got {alpha}")
    scores = _scores(instance, alpha)
    order = rank_by_score(scores)
    m = len(instance.slots)
    slot_of: Dict[int, int] = {}
    for rank, idx in enumerate(order):
        if rank >= m or scores[idx] < 0.0:
            break
        slot_of[instance.advertisers[idx].id] = rank
    unassigned = tuple(
        a.id for a in instance.advertisers if a.id not in slot_of
    )
    return Assignment(slot_of, unassigned)


def _adv_by_id(instance: AuctionInstance) -> Dict[int, AdvertiserState]:
    return {a.id: a for a in instance.advertisers}


def welfare(instance: AuctionInstance, asg: Assignment) -> float:
    """Sum of s_slot(i) * p_i * v_i over assigned advertisers."""
    by_id = _adv_by_id(instance)
    effects = instance.slots.effects
    return sum(
        effects[j] * realized_value(by_id[i]) for i, j in asg.slot_of.items()
    )


def realized_virtual_surplus(instance: AuctionInstance, asg: Assignment) -> float:
    """Sum of s_slot(i) * p_i * phi(v_i); its average estimates expected revenue."""
    by_id = _adv_by_id(instance)
    effects = instance.slots.effects
    return sum(
        effects[j] * by_id[i].p * instance.dist.virtual_value(by_id[i].v)
        for i, j in asg.slot_of.items()
    )


def objective(instance: AuctionInstance, asg: Assignment, alpha: float) -> float:
    """(1 - alpha) * welfare + alpha * realized virtual surplus, per profile."""
    return (1.0 - alpha) * welfare(instance, asg) + alpha * realized_virtual_surplus(
        instance, asg
    )


@lru_cache(maxsize=64)
def _is_regular(dist: Distribution) -> bool:
    return dist.certify_regular(grid_size=2001).holds


def threshold_payments(
    instance: AuctionInstance, alpha: float, asg: Assignment
) -> Dict[int, float]:
    """Per-winner threshold payments.

    Winner i in slot j pays p_i * sum_{k=j..m-1} (s_k - s_{k+1}) * t_{i,k}
    (with s_m = 0), where t_{i,k} is the minimum value-per-click with which i
    still attains slot k or better, holding the other reports fixed.
    Thresholds are found by bisection on the value axis.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ParameterError(f"alpha must lie in [0, 1], got {alpha}")
    if not _is_regular(instance.dist):
        raise UnsupportedConfigurationError(
            "threshold payments require a regular value distribution"
        )
    dist = instance.dist
    effects = instance.slots.effects
    m = len(effects)
    advertisers = instance.advertisers
    scores = _scores(instance, alpha)
    index_of = {a.id: k for k, a in enumerate(advertisers)}

    def attains(idx: int, v: float, k: int) -> bool:
        """Would advertiser idx, reporting v, get slot k or better?"""
        a = advertisers[idx]
        own = a.p * dist.alpha_virtual_value(v, alpha)
        if own < 0.0:
            return False
        rank = 0
        for jdx, other in enumerate(advertisers):
            if jdx == idx or scores[jdx] < 0.0:
                continue
            if scores[jdx] > own or (scores[jdx] == own and other.id < a.id):
                rank += 1
        return rank <= k

    lo_support, hi_support = dist.support
    payments: Dict[int, float] = {}
    for adv_id, j in asg.slot_of.items():
        idx = index_of[adv_id]
        a = advertisers[idx]
        total = 0.0
        for k in range(j, m):
            gap = effects[k] - (effects[k + 1] if k + 1 < m else 0.0)
            if gap == 0.0:
                continue
            if attains(idx, lo_support, k):
                t = lo_support
            else:
                lo, hi = lo_support, a.v  # winner attains k at its own report
                while hi - lo > PAYMENT_VALUE_TOLERANCE:
                    mid = 0.5 * (lo + hi)
                    if attains(idx, mid, k):
                        hi = mid
                    else:
                        lo = mid
                t = hi
            total += gap * t
        payments[adv_id] = a.p * total
    return payments


def evaluate(
    instance: AuctionInstance,
    asg: Assignment,
    with_payments: bool = False,
    alpha: float = 1.0,
) -> OutcomeMetrics:
    """Bundle welfare, realized virtual surplus and (optionally) payments."""
    pay = threshold_payments(instance, alpha, asg) if with_payments else {}
    return OutcomeMetrics(
        welfare=welfare(instance, asg),
        realized_virtual_surplus=realized_virtual_surplus(instance, asg),
        payments=pay,
    )
