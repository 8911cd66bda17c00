"""Adoption event logs: parsing, per-meme sequences, early windows.

Event file lines are ``meme_id<TAB>timestamp<TAB>user<TAB>kind[<TAB>target]``
with ``kind`` one of ``T`` (plain), ``RT`` (retweet) or ``AT`` (mention).
Every event counts as one tweet of its meme.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import IO, Iterable, Mapping, Sequence

from .community import CommunityAssignment
from .graph import Network, ParseError

PLAIN, RETWEET, MENTION = "T", "RT", "AT"
KINDS = (PLAIN, RETWEET, MENTION)
DAY = 86400


class InsufficientEvents(ValueError):
    """The meme has fewer events than the requested window."""


@dataclass(frozen=True)
class AdoptionEvent:
    meme_id: str
    timestamp: int
    user: str
    kind: str = PLAIN
    target: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")
        if self.kind == PLAIN:
            if self.target is not None:
                raise ValueError("plain events carry no target")
        elif not self.target:
            raise ValueError(f"{self.kind} event requires a target")
        elif self.target == self.user:
            raise ValueError(f"{self.kind} target must differ from the user")

    def to_line(self) -> str:
        fields = [self.meme_id, str(self.timestamp), self.user, self.kind]
        if self.target is not None:
            fields.append(self.target)
        return "\t".join(fields)


def _distinct(users: Iterable[str]) -> tuple[str, ...]:
    return tuple(dict.fromkeys(users))


@dataclass(frozen=True)
class Meme:
    id: str
    events: tuple[AdoptionEvent, ...]

    @cached_property
    def adopters(self) -> tuple[str, ...]:
        return _distinct(e.user for e in self.events)

    @property
    def n_tweets(self) -> int:
        return len(self.events)

    @property
    def n_adopters(self) -> int:
        return len(self.adopters)

    def popularity(self, basis: str = "tweets") -> int:
        if basis == "tweets":
            return self.n_tweets
        if basis == "adopters":
            return self.n_adopters
        raise ValueError(f"unknown popularity basis {basis!r}")


@dataclass(frozen=True)
class EarlyWindow:
    meme_id: str
    n: int
    events: tuple[AdoptionEvent, ...]

    @cached_property
    def adopters(self) -> tuple[str, ...]:
        return _distinct(e.user for e in self.events)

    @property
    def authors(self) -> list[str]:
        return [e.user for e in self.events]

    @property
    def timestamps(self) -> list[int]:
        return [e.timestamp for e in self.events]

    def infected_communities(self, net: Network, ca: CommunityAssignment) -> set[int]:
        out: set[int] = set()
        for user in self.adopters:
            u = net.index.get(user)
            if u is not None:
                out.update(ca.communities_of(u))
        return out


def parse_events(lines: Iterable[str]) -> list[Meme]:
    """Group event lines into memes, ordered by first appearance.

    Events are stably sorted by timestamp, so input order breaks ties.
    """
    grouped: dict[str, list[AdoptionEvent]] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) == 5 and parts[4] == "":
            parts = parts[:4]
        if len(parts) not in (4, 5):
            raise ParseError(f"expected 4 or 5 tab-separated fields, got {len(parts)}", lineno)
        meme_id, ts, user, kind = parts[:4]
        target = parts[4] if len(parts) == 5 else None
        if not meme_id or not user:
            raise ParseError("empty meme id or user", lineno)
        try:
            timestamp = int(ts)
        except ValueError:
            raise ParseError(f"timestamp {ts!r} is not an integer", lineno) from None
        try:
            event = AdoptionEvent(meme_id, timestamp, user, kind, target)
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        grouped.setdefault(meme_id, []).append(event)
    return [
        Meme(mid, tuple(sorted(evs, key=lambda e: e.timestamp))) for mid, evs in grouped.items()
    ]


def read_events(path) -> list[Meme]:
    with open(path, encoding="utf-8") as fh:
        return parse_events(fh)


def write_events(events: Iterable[AdoptionEvent], out: IO[str]) -> None:
    for e in events:
        out.write(e.to_line())
        out.write("\n")


def early_window(m: Meme, n: int) -> EarlyWindow:
    if n < 1:
        raise ValueError("window size must be >= 1")
    if len(m.events) < n:
        raise InsufficientEvents(f"meme {m.id!r} has {len(m.events)} events, need {n}")
    return EarlyWindow(m.id, n, m.events[:n])


def history_counts(memes: Iterable[Meme], start: int, end: int) -> dict[str, int]:
    """Per-meme event counts with ``start <= timestamp < end``."""
    counts: Counter[str] = Counter()
    for m in memes:
        c = sum(1 for e in m.events if start <= e.timestamp < end)
        if c:
            counts[m.id] = c
    return dict(counts)


def observation_slice(memes: Iterable[Meme], start: int) -> list[Meme]:
    """Memes restricted to events at or after ``start``; empty ones dropped."""
    out = []
    for m in memes:
        kept = tuple(e for e in m.events if e.timestamp >= start)
        if kept:
            out.append(m if len(kept) == len(m.events) else Meme(m.id, kept))
    return out


def filter_new_memes(
    memes: Iterable[Meme],
    history: Mapping[str, int],
    x_max: int = 20,
    window: tuple[int, int] | None = None,
) -> list[Meme]:
    """Keep memes seen fewer than ``x_max`` times before and starting in ``window``.

    ``window`` is an inclusive ``(start, end)`` timestamp range for the first
    event; ``None`` accepts any start.
    """
    out = []
    for m in memes:
        if history.get(m.id, 0) >= x_max:
            continue
        if window is not None and m.events:
            t0 = m.events[0].timestamp
            if not window[0] <= t0 <= window[1]:
                continue
        out.append(m)
    return out


def interaction_split(
    w: EarlyWindow, net: Network, ca: CommunityAssignment, kind: str
) -> tuple[int, int]:
    """Count (intra, inter) community interactions of ``kind`` in the window.

    An interaction is intra when source and target share a community; an
    endpoint without any community makes it inter.
    """
    if kind not in (RETWEET, MENTION):
        raise ValueError("kind must be RT or AT")
    intra = inter = 0
    for e in w.events:
        if e.kind != kind:
            continue
        a = net.index.get(e.user)
        b = net.index.get(e.target)
        ca_a = ca.communities_of(a) if a is not None else ()
        ca_b = ca.communities_of(b) if b is not None else ()
        if ca_a and ca_b and not set(ca_a).isdisjoint(ca_b):
            intra += 1
        else:
            inter += 1
    return intra, inter


def early_popularity(m: Meme, tau_seconds: int) -> int:
    """Tweets within ``tau_seconds`` of the first tweet (half-open)."""
    t0 = m.events[0].timestamp
    return sum(1 for e in m.events if e.timestamp - t0 < tau_seconds)


def daily_counts(m: Meme, days: int) -> list[int]:
    """Tweets per day since the first tweet, for days 1..``days``."""
    t0 = m.events[0].timestamp
    counts = [0] * days
    for e in m.events:
        d = (e.timestamp - t0) // DAY
        if d < days:
            counts[d] += 1
    return counts


def all_users(memes: Sequence[Meme]) -> list[str]:
    """Every user and interaction target, in first-seen order."""
    seen: dict[str, None] = {}
    for m in memes:
        for e in m.events:
            seen.setdefault(e.user, None)
            if e.target is not None:
                seen.setdefault(e.target, None)
    return list(seen)
