"""Synthetic planted-partition networks and community-trapped meme cascades.

Cascade model, per meme:

* seed adopters tweet at the meme's start time;
* every tweet grants its author ``exposures_per_tweet`` exposure attempts;
* an attempt picks a neighbour of the author, a same-community neighbour
  with probability ``trap_bias``, otherwise any neighbour;
* a user who has not adopted yet adopts with probability
  ``min(1, p + reinforcement * prior_exposures)`` and tweets (which grants
  further attempts); an existing adopter re-tweets with probability
  ``repeat_prob`` without granting attempts;
* each adoption tweet is a retweet of the exposer with ``retweet_prob``,
  otherwise a mention of the exposer with ``mention_prob``, otherwise plain;
* tweets are spaced by exponential gaps; the meme ends at ``max_events`` or
  when no attempts remain.

With ``adopt_prob_range`` set, ``p`` is drawn log-uniformly per meme; with
``trap_coupling`` the meme's trap bias is ``trap_bias * (1 - q**gamma)``
where ``q`` is the log-scale position of ``p`` in its range and ``gamma`` is
``coupling_exponent``, so only the most infectious memes escape their
community. ``gap_range`` draws each meme's mean gap log-uniformly, which
decouples speed from final size.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cascade import MENTION, PLAIN, RETWEET, AdoptionEvent
from .community import CommunityAssignment
from .graph import Network


@dataclass(frozen=True)
class PlantedPartitionSpec:
    communities: int = 4
    community_size: int = 150
    p_in: float = 0.08
    p_out: float = 0.006
    seed: int = 0

    def validate(self) -> None:
        if self.communities < 1 or self.community_size < 1:
            raise ValueError("communities and community_size must be >= 1")
        if not 0.0 <= self.p_out <= self.p_in <= 1.0:
            raise ValueError("need 0 <= p_out <= p_in <= 1")


@dataclass(frozen=True)
class CascadeSpec:
    meme_count: int = 2000
    seed_adopters: int = 1
    trap_bias: float = 1.0
    adopt_prob: float = 0.3
    adopt_prob_range: Optional[tuple[float, float]] = (0.15, 0.55)
    trap_coupling: bool = True
    coupling_exponent: float = 20.0
    reinforcement: float = 0.1
    exposures_per_tweet: int = 3
    repeat_prob: float = 0.05
    retweet_prob: float = 0.5
    mention_prob: float = 0.3
    mean_inter_event_gap: float = 3600.0
    gap_range: Optional[tuple[float, float]] = (3600.0, 21600.0)
    max_events: int = 3000
    start_time: int = 0
    start_spread: int = 14 * 86400
    seed: int = 0

    def validate(self) -> None:
        probs = {
            "trap_bias": self.trap_bias, "adopt_prob": self.adopt_prob,
            "reinforcement": self.reinforcement, "repeat_prob": self.repeat_prob,
            "retweet_prob": self.retweet_prob, "mention_prob": self.mention_prob,
        }
        for name, v in probs.items():
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.adopt_prob_range is not None:
            lo, hi = self.adopt_prob_range
            if not 0.0 < lo <= hi <= 1.0:
                raise ValueError("adopt_prob_range must satisfy 0 < lo <= hi <= 1")
        if self.gap_range is not None:
            lo, hi = self.gap_range
            if not 0.0 < lo <= hi:
                raise ValueError("gap_range must satisfy 0 < lo <= hi")
        if self.coupling_exponent <= 0:
            raise ValueError("coupling_exponent must be positive")
        if self.mean_inter_event_gap <= 0:
            raise ValueError("mean_inter_event_gap must be positive")
        if self.max_events < 1:
            raise ValueError("max_events must be >= 1")
        if self.seed_adopters < 1:
            raise ValueError("seed_adopters must be >= 1")
        if self.meme_count < 0 or self.exposures_per_tweet < 1:
            raise ValueError("meme_count must be >= 0 and exposures_per_tweet >= 1")


def node_label(i: int) -> str:
    return f"u{i}"


def generate_network(spec: PlantedPartitionSpec) -> tuple[Network, CommunityAssignment]:
    """Planted partition graph plus its ground-truth (disjoint) communities."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n = spec.communities * spec.community_size
    block = np.repeat(np.arange(spec.communities), spec.community_size)
    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(block[iu] == block[ju], spec.p_in, spec.p_out)
    keep = rng.random(len(iu)) < prob
    net = Network.from_edges(
        [node_label(i) for i in range(n)], zip(iu[keep].tolist(), ju[keep].tolist())
    )
    members = {
        f"c{c}": range(c * spec.community_size, (c + 1) * spec.community_size)
        for c in range(spec.communities)
    }
    # ground truth is kept whole, even for tiny communities
    return net, CommunityAssignment.from_members(members, n, min_size=1)


def _log_uniform(rng: random.Random, lo: float, hi: float) -> tuple[float, float]:
    """Return (value, position in [0, 1] on the log scale)."""
    if hi == lo:
        return lo, 0.0
    q = rng.random()
    return math.exp(math.log(lo) + q * (math.log(hi) - math.log(lo))), q


def _meme_seed(root: int, index: int) -> int:
    return int(np.random.SeedSequence([root, index]).generate_state(1, dtype=np.uint64)[0])


def simulate_meme(
    net: Network,
    ca: CommunityAssignment,
    spec: CascadeSpec,
    index: int,
    adj: Optional[list[list[int]]] = None,
    same: Optional[list[list[int]]] = None,
) -> list[AdoptionEvent]:
    rng = random.Random(_meme_seed(spec.seed, index))
    if adj is None or same is None:
        adj, same = _adjacency(net, ca)
    meme_id = f"m{index}"
    labels = net.labels
    if spec.adopt_prob_range is not None:
        p, q = _log_uniform(rng, *spec.adopt_prob_range)
    else:
        p, q = spec.adopt_prob, 0.0
    if spec.trap_coupling:
        beta = spec.trap_bias * (1.0 - q ** spec.coupling_exponent)
    else:
        beta = spec.trap_bias
    gap = _log_uniform(rng, *spec.gap_range)[0] if spec.gap_range else spec.mean_inter_event_gap
    t = float(spec.start_time + rng.randrange(spec.start_spread + 1))

    candidates = [u for u in range(net.node_count) if adj[u]]
    if not candidates:
        candidates = list(range(net.node_count))
    seeds = rng.sample(candidates, min(spec.seed_adopters, len(candidates)))
    events = [AdoptionEvent(meme_id, int(t), labels[u]) for u in seeds]
    adopted = set(seeds)
    exposures: dict[int, int] = {}
    pending = [u for u in seeds for _ in range(spec.exposures_per_tweet)]

    while pending and len(events) < spec.max_events:
        j = rng.randrange(len(pending))
        pending[j], pending[-1] = pending[-1], pending[j]
        src = pending.pop()
        pool = same[src] if (same[src] and rng.random() < beta) else adj[src]
        if not pool:
            continue
        dst = pool[rng.randrange(len(pool))]
        if dst in adopted:
            if rng.random() >= spec.repeat_prob:
                continue
        else:
            prior = exposures.get(dst, 0)
            exposures[dst] = prior + 1
            if rng.random() >= min(1.0, p + spec.reinforcement * prior):
                continue
            adopted.add(dst)
            pending.extend([dst] * spec.exposures_per_tweet)
        t += rng.expovariate(1.0 / gap)
        r = rng.random()
        if r < spec.retweet_prob:
            ev = AdoptionEvent(meme_id, int(t), labels[dst], RETWEET, labels[src])
        elif rng.random() < spec.mention_prob:
            ev = AdoptionEvent(meme_id, int(t), labels[dst], MENTION, labels[src])
        else:
            ev = AdoptionEvent(meme_id, int(t), labels[dst], PLAIN)
        events.append(ev)
    return events


def _adjacency(net: Network, ca: CommunityAssignment):
    adj = [net.indices[net.indptr[u] : net.indptr[u + 1]].tolist() for u in range(net.node_count)]
    same = []
    for u in range(net.node_count):
        mine = set(ca.communities_of(u))
        same.append([v for v in adj[u] if mine and not mine.isdisjoint(ca.communities_of(v))])
    return adj, same


def generate_cascades(
    net: Network, ca: CommunityAssignment, spec: CascadeSpec
) -> list[AdoptionEvent]:
    """Event log for ``spec.meme_count`` memes, grouped by meme."""
    spec.validate()
    adj, same = _adjacency(net, ca)
    events: list[AdoptionEvent] = []
    for i in range(spec.meme_count):
        events.extend(simulate_meme(net, ca, spec, i, adj, same))
    return events
