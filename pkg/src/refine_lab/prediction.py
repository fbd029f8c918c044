"""Prediction schemes over query-advertiser pairs and refinement classification.

A scheme partitions (query, advertiser) pairs into parts, each carrying one
relevance prediction.  A refinement nests a fine partition inside a coarse one
so that subpart relevances average back to the coarse relevance.  A refinement
is "flip-spread" when, per query, every advertiser pair's relevance ratio
either moves further from 1 on the same side (spread) or crosses 1 (flipped).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .dists import ParameterError

PROBABILITY_SUM_TOLERANCE = 1e-12
RELEVANCE_MEAN_TOLERANCE = 1e-9
GENERATION_MAX_RETRIES = 10_000

PairKey = Tuple[str, int]


class GenerationError(RuntimeError):
    """The refinement generator exhausted its retry budget."""


@dataclass(frozen=True)
class Part:
    id: str
    relevance: float

    def __post_init__(self):
        if not 0.0 <= self.relevance <= 1.0:
            raise ParameterError("part relevance must lie in [0, 1]")


@dataclass
class PredictionScheme:
    """Partition of the pair universe with one relevance prediction per part."""

    parts: Dict[str, Part]
    membership: Dict[PairKey, str]

    def __post_init__(self):
        for pair, part_id in self.membership.items():
            if part_id not in self.parts:
                raise ParameterError(f"pair {pair} maps to unknown part {part_id!r}")

    def relevance_of(self, query: str, advertiser: int) -> float:
        try:
            part_id = self.membership[(query, advertiser)]
        except KeyError:
            raise KeyError(f"pair ({query!r}, {advertiser}) not in scheme") from None
        return self.parts[part_id].relevance

    def queries(self) -> List[str]:
        return sorted({q for q, _ in self.membership})

    def advertisers_on(self, query: str) -> List[int]:
        return sorted(i for q, i in self.membership if q == query)

    def to_json(self) -> dict:
        return {
            "parts": [
                {"id": p.id, "relevance": p.relevance}
                for p in sorted(self.parts.values(), key=lambda p: p.id)
            ],
            "membership": [
                {"query": q, "advertiser": i, "part": pid}
                for (q, i), pid in sorted(self.membership.items())
            ],
        }


def scheme_from_json(obj: dict) -> PredictionScheme:
    parts = {p["id"]: Part(p["id"], float(p["relevance"])) for p in obj["parts"]}
    membership = {
        (m["query"], int(m["advertiser"])): m["part"] for m in obj["membership"]
    }
    return PredictionScheme(parts, membership)


@dataclass
class RefinementStructure:
    """A coarse scheme, a fine scheme nested inside it, and subpart weights."""

    coarse: PredictionScheme
    fine: PredictionScheme
    subpart_prob: Dict[str, List[Tuple[str, float]]]
    query_prob: Dict[str, float] = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "coarse": self.coarse.to_json(),
            "fine": self.fine.to_json(),
            "subparts": {
                cid: [{"id": fid, "prob": prob} for fid, prob in subs]
                for cid, subs in sorted(self.subpart_prob.items())
            },
        }
        if self.query_prob:
            out["query_prob"] = dict(sorted(self.query_prob.items()))
        return out


def structure_from_json(obj: dict) -> RefinementStructure:
    return RefinementStructure(
        coarse=scheme_from_json(obj["coarse"]),
        fine=scheme_from_json(obj["fine"]),
        subpart_prob={
            cid: [(s["id"], float(s["prob"])) for s in subs]
            for cid, subs in obj["subparts"].items()
        },
        query_prob={q: float(w) for q, w in obj.get("query_prob", {}).items()},
    )


@dataclass(frozen=True)
class ValidationResult:
    valid: bool
    reason: Optional[str] = None

    def __bool__(self) -> bool:
        return self.valid


def validate_refinement(rs: RefinementStructure) -> ValidationResult:
    """Check nesting, per-part probability sums, and mean preservation."""
    # every fine part nests inside exactly one coarse part
    coarse_of_fine: Dict[str, str] = {}
    for pair, fine_id in rs.fine.membership.items():
        if pair not in rs.coarse.membership:
            return ValidationResult(False, f"pair {pair} missing from coarse scheme")
        cid = rs.coarse.membership[pair]
        if coarse_of_fine.setdefault(fine_id, cid) != cid:
            return ValidationResult(
                False, f"fine part {fine_id!r} straddles coarse parts"
            )
    for cid, subs in rs.subpart_prob.items():
        if cid not in rs.coarse.parts:
            return ValidationResult(False, f"unknown coarse part {cid!r}")
        total = 0.0
        mean = 0.0
        for fine_id, prob in subs:
            if fine_id not in rs.fine.parts:
                return ValidationResult(False, f"unknown fine part {fine_id!r}")
            if coarse_of_fine.get(fine_id, cid) != cid:
                return ValidationResult(
                    False, f"fine part {fine_id!r} listed under wrong coarse part"
                )
            if prob < 0.0:
                return ValidationResult(False, "negative subpart probability")
            total += prob
            mean += prob * rs.fine.parts[fine_id].relevance
        if abs(total - 1.0) > PROBABILITY_SUM_TOLERANCE:
            return ValidationResult(
                False, f"subpart probabilities of {cid!r} sum to {total}"
            )
        if abs(mean - rs.coarse.parts[cid].relevance) > RELEVANCE_MEAN_TOLERANCE:
            return ValidationResult(
                False,
                f"expectation mismatch for {cid!r}: subparts average {mean}, "
                f"coarse predicts {rs.coarse.parts[cid].relevance}",
            )
    return ValidationResult(True)


class PairClass(enum.Enum):
    SPREAD = "spread"
    FLIPPED = "flipped"
    NEITHER = "neither"


def classify_pair(
    a: float, b: float, c: float, d: float, allow_zero: bool = False
) -> PairClass:
    """Classify fine relevance pair (a, b) against coarse pair (c, d).

    Spread: a/b >= c/d >= 1 or 1 >= c/d >= a/b.  Flipped: the ratio crosses 1.
    Comparisons use cross-multiplication, so zero relevances are handled when
    allow_zero is set.  A ratio exactly 1 satisfies both clauses and is
    reported as SPREAD.
    """
    for name, x in (("b", b), ("d", d)):
        if x < 0.0 or (x == 0.0 and not allow_zero):
            raise ParameterError(f"non-positive denominator {name}={x}")
    if a < 0.0 or c < 0.0:
        raise ParameterError("relevances must be non-negative")
    ab_ge_cd = a * d >= c * b
    cd_ge_ab = c * b >= a * d
    ab_ge_1 = a >= b
    ab_le_1 = b >= a
    cd_ge_1 = c >= d
    cd_le_1 = d >= c
    if (ab_ge_cd and cd_ge_1) or (cd_le_1 and cd_ge_ab):
        return PairClass.SPREAD
    if (ab_ge_1 and cd_le_1) or (cd_ge_1 and ab_le_1):
        return PairClass.FLIPPED
    return PairClass.NEITHER


@dataclass(frozen=True)
class FlipSpreadResult:
    holds: bool
    witness: Optional[Tuple[str, Tuple[int, int]]] = None

    def __bool__(self) -> bool:
        return self.holds


def is_flip_spread(
    rs: RefinementStructure, queries: Optional[Iterable[str]] = None
) -> FlipSpreadResult:
    """True iff every per-query advertiser pair is spread or flipped.

    Only advertisers that appear on the same query are compared.
    """
    query_ids = list(queries) if queries is not None else rs.fine.queries()
    for q in query_ids:
        advs = rs.fine.advertisers_on(q)
        for x in range(len(advs)):
            for y in range(x + 1, len(advs)):
                i, j = advs[x], advs[y]
                label = classify_pair(
                    rs.fine.relevance_of(q, i),
                    rs.fine.relevance_of(q, j),
                    rs.coarse.relevance_of(q, i),
                    rs.coarse.relevance_of(q, j),
                    allow_zero=True,
                )
                if label is PairClass.NEITHER:
                    return FlipSpreadResult(False, witness=(q, (i, j)))
    return FlipSpreadResult(True)


def structure_from_tables(
    coarse_relevances: Sequence[float],
    fine_relevances: Dict[str, Sequence[float]],
    query_prob: Dict[str, float],
) -> RefinementStructure:
    """Build a RefinementStructure from per-advertiser relevance tables.

    Coarse parts are per advertiser (one part spanning all queries); fine parts
    are per (query, advertiser); subpart weights are the query probabilities.
    """
    n = len(coarse_relevances)
    coarse_parts = {
        f"c{i}": Part(f"c{i}", float(coarse_relevances[i])) for i in range(n)
    }
    coarse_membership = {
        (q, i): f"c{i}" for q in fine_relevances for i in range(n)
    }
    fine_parts = {}
    fine_membership = {}
    for q, rels in fine_relevances.items():
        if len(rels) != n:
            raise ParameterError(f"fine relevances for query {q!r} have wrong length")
        for i in range(n):
            pid = f"{q}:{i}"
            fine_parts[pid] = Part(pid, float(rels[i]))
            fine_membership[(q, i)] = pid
    subpart_prob = {
        f"c{i}": [(f"{q}:{i}", query_prob[q]) for q in fine_relevances]
        for i in range(n)
    }
    return RefinementStructure(
        coarse=PredictionScheme(coarse_parts, coarse_membership),
        fine=PredictionScheme(fine_parts, fine_membership),
        subpart_prob=subpart_prob,
        query_prob=dict(query_prob),
    )


def sf_sj_structure() -> RefinementStructure:
    """Two equally popular advertisers; location refinement flips relevances.

    Coarse relevance 0.75 for both; query 'SF' gives (1, 0.5) and query 'SJ'
    gives (0.5, 1), each with probability 1/2.
    """
    return structure_from_tables(
        coarse_relevances=[0.75, 0.75],
        fine_relevances={"SF": [1.0, 0.5], "SJ": [0.5, 1.0]},
        query_prob={"SF": 0.5, "SJ": 0.5},
    )


def nonflipspread_structure(
    epsilon: float, delta: Optional[float] = None
) -> RefinementStructure:
    """Nationwide chain (0.8 everywhere) vs local advertiser (0.4 on 'SF',
    epsilon elsewhere); coarse relevances (0.8, 0.1).

    With delta = 15 * epsilon / (8 - 20 * epsilon) the refinement is mean
    preserving; passing another delta lets callers build invalid structures.
    """
    if not 0.0 < epsilon < 0.4:
        raise ParameterError("epsilon must lie in (0, 0.4)")
    if delta is None:
        delta = 15.0 * epsilon / (8.0 - 20.0 * epsilon)
    return structure_from_tables(
        coarse_relevances=[0.8, 0.1],
        fine_relevances={"SF": [0.8, 0.4], "notSF": [0.8, epsilon]},
        query_prob={"SF": 0.25 - delta, "notSF": 0.75 + delta},
    )


def generate_flip_spread_refinement(
    coarse_relevances: Sequence[float], seed: int, n_subparts: int
) -> RefinementStructure:
    """Random mean-preserving flip-spread refinement of per-advertiser
    coarse relevances.

    Construction: one "flip" query assigns every advertiser the same relevance
    (every pair crosses or touches 1), and the remaining queries scale a
    common ratio-amplifying base vector (every pair spreads).  Candidates are
    rejection-tested against validate_refinement and is_flip_spread.
    """
    rels = [float(p) for p in coarse_relevances]
    if not rels:
        raise ParameterError("need at least one advertiser")
    if any(not 0.0 < p <= 1.0 for p in rels):
        raise ParameterError("coarse relevances must lie in (0, 1]")
    if n_subparts < 1:
        raise ParameterError("n_subparts must be positive")

    if n_subparts == 1:
        rs = structure_from_tables(rels, {"q0": rels}, {"q0": 1.0})
        return rs

    rng = np.random.Generator(
        np.random.Philox(key=np.array([seed, 0], dtype=np.uint64))
    )
    p_max, p_min = max(rels), min(rels)
    n_exaggerate = n_subparts - 1
    # base_i in [0, 1] and f in [f_lo, f_hi] are jointly feasible iff
    # w >= p_max - p_min (strictly below 1 since relevances are positive)
    w_lo = max(0.5, p_max - p_min)
    w_hi = max(0.995, 0.5 * (1.0 + w_lo))
    for _ in range(GENERATION_MAX_RETRIES):
        w = float(rng.uniform(w_lo, w_hi))
        f_lo = max(0.0, (p_max - w) / (1.0 - w))
        f_hi = min(1.0, p_min / (1.0 - w))
        if f_lo > f_hi:
            continue
        f = float(rng.uniform(f_lo, f_hi))
        base = [(p - (1.0 - w) * f) / w for p in rels]
        if any(b < 0.0 or b > 1.0 for b in base):
            continue
        b_max = max(base)
        # per-query multipliers, weighted mean 1, keeping base * m in [0, 1]
        if n_exaggerate == 1:
            mults = np.ones(1)
            weights = np.array([w])
        else:
            cap = 1.0 / b_max if b_max > 0 else 2.0
            half = min(0.5, cap - 1.0)
            if half <= 0.0:
                mults = np.ones(n_exaggerate)
            else:
                mults = rng.uniform(1.0 - half, 1.0 + half, n_exaggerate)
                mults = mults - (mults.mean() - 1.0)
            weights = np.full(n_exaggerate, w / n_exaggerate)
            if np.any(mults < 0.0) or np.any(mults * b_max > 1.0):
                continue
        fine: Dict[str, Sequence[float]] = {}
        query_prob: Dict[str, float] = {}
        for k in range(n_exaggerate):
            fine[f"e{k}"] = [b * float(mults[k]) for b in base]
            query_prob[f"e{k}"] = float(weights[k])
        fine["flip"] = [f] * len(rels)
        query_prob["flip"] = 1.0 - w
        rs = structure_from_tables(rels, fine, query_prob)
        if validate_refinement(rs) and is_flip_spread(rs):
            return rs
    raise GenerationError(
        f"no flip-spread refinement found for {rels} within "
        f"{GENERATION_MAX_RETRIES} attempts"
    )
