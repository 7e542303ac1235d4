"""Ground-plane distance rules: violations, couples, and zone labels.

All distances here are in BEV pixels; the pixel metric xi (px per meter)
converts the metric policy knobs.  Couple detection is stateful across
frames (consecutive-proximity counters), everything else is per frame.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .geometry import GroundPoint


@dataclass(frozen=True)
class DistancePolicy:
    """Distance thresholds for one camera scene.

    xi: BEV pixels per meter.
    r: safe distance in BEV pixels (people closer than this violate).
    couple_d: meters within which a pair may count as a couple.
    couple_eps: seconds of sustained proximity before the pair is a couple.
    fps: frames per second of the stream.
    """

    xi: float
    r: float
    couple_d: float = 1.0
    couple_eps: float = 5.0
    fps: float = 25.0

    def __post_init__(self) -> None:
        for name in ("xi", "r", "couple_d", "couple_eps", "fps"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"policy {name} must be positive, got {value}")

    @property
    def couple_d_px(self) -> float:
        return self.couple_d * self.xi

    @property
    def couple_frames(self) -> float:
        """Frame count above which sustained proximity makes a couple."""
        return self.couple_eps * self.fps


@dataclass(frozen=True)
class FramePositions:
    """Ground-plane positions of the tracked people in one frame."""

    frame: int
    entries: tuple[tuple[int, GroundPoint], ...]

    def __post_init__(self) -> None:
        ids = [tid for tid, _ in self.entries]
        if len(ids) != len(set(ids)):
            raise ValueError(f"duplicate track ids in frame {self.frame}")

    @classmethod
    def from_pairs(cls, frame: int, pairs) -> "FramePositions":
        return cls(frame=frame, entries=tuple(pairs))

    def points(self) -> dict[int, GroundPoint]:
        return dict(self.entries)


class ZoneLabel(enum.Enum):
    SAFE = "green"
    HIGH_RISK = "red"
    POTENTIALLY_RISKY = "yellow"


def violation(p_i: GroundPoint, p_j: GroundPoint, r: float) -> int:
    """1 iff the L2 distance between the two points is <= r, else 0."""
    return 1 if math.hypot(p_i.xw - p_j.xw, p_i.yw - p_j.yw) <= r else 0


def pairwise_violations(pos: FramePositions, policy: DistancePolicy) -> set[tuple[int, int]]:
    """All unordered id pairs closer than the safe distance (id_a < id_b)."""
    entries = pos.entries
    out: set[tuple[int, int]] = set()
    for a in range(len(entries)):
        id_a, p_a = entries[a]
        for b in range(a + 1, len(entries)):
            id_b, p_b = entries[b]
            if violation(p_a, p_b, policy.r):
                out.add((min(id_a, id_b), max(id_a, id_b)))
    return out


class CoupleRegistry:
    """Consecutive-proximity counters per id pair, and the derived couple flags.

    A pair becomes a couple once it has stayed within couple_d meters for
    strictly more than couple_eps * fps consecutive frames; any frame of
    separation (or absence of either id) resets the counter to zero.
    """

    def __init__(self) -> None:
        self._counters: dict[tuple[int, int], int] = {}

    def counter(self, id_a: int, id_b: int) -> int:
        return self._counters.get(_ordered(id_a, id_b), 0)

    def couples(self, policy: DistancePolicy) -> set[tuple[int, int]]:
        thr = policy.couple_frames
        return {pair for pair, count in self._counters.items() if count > thr}

    def is_couple(self, id_a: int, id_b: int, policy: DistancePolicy) -> bool:
        return self.counter(id_a, id_b) > policy.couple_frames

    def _advance(self, near_pairs: set[tuple[int, int]]) -> None:
        self._counters = {pair: self._counters.get(pair, 0) + 1 for pair in near_pairs}


def _ordered(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


def _distance_px(p_a: GroundPoint, p_b: GroundPoint) -> float:
    return math.hypot(p_a.xw - p_b.xw, p_a.yw - p_b.yw)


def update_couples(
    registry: CoupleRegistry, pos: FramePositions, policy: DistancePolicy
) -> CoupleRegistry:
    """Advance the couple counters with one frame of positions."""
    near: set[tuple[int, int]] = set()
    entries = pos.entries
    d_px = policy.couple_d_px
    for a in range(len(entries)):
        id_a, p_a = entries[a]
        for b in range(a + 1, len(entries)):
            id_b, p_b = entries[b]
            if _distance_px(p_a, p_b) <= d_px:
                near.add(_ordered(id_a, id_b))
    registry._advance(near)
    return registry


def exclusive_couples(
    registry: CoupleRegistry, pos: FramePositions, policy: DistancePolicy
) -> dict[int, int]:
    """Assign each person to at most one couple partner.

    Couples are strictly pairwise: among flagged pairs present this frame,
    the closest pair wins first, ties broken by lower id sum, then by pair.
    Returns a symmetric partner map.
    """
    points = pos.points()
    candidates = []
    for id_a, id_b in registry.couples(policy):
        if id_a in points and id_b in points:
            d = _distance_px(points[id_a], points[id_b])
            candidates.append((d, id_a + id_b, (id_a, id_b)))
    partner: dict[int, int] = {}
    for _, _, (id_a, id_b) in sorted(candidates):
        if id_a not in partner and id_b not in partner:
            partner[id_a] = id_b
            partner[id_b] = id_a
    return partner


def classify_zones(
    pos: FramePositions,
    violations: set[tuple[int, int]],
    registry: CoupleRegistry,
    policy: DistancePolicy,
) -> dict[int, ZoneLabel]:
    """Label every person green (safe), red (high risk), or yellow (couple).

    Couple members whose only close contact is their partner are yellow and
    move as one identity.  Any breach against a non-partner turns everyone
    involved red — including both members of a breached couple.  A couple's
    external safety circle is centred on the pair midpoint with radius
    r + d_c/2 BEV px (safe distance preserved for each member), where d_c
    is the current partner separation.
    """
    points = pos.points()
    for id_a, id_b in violations:
        if id_a not in points or id_b not in points:
            raise ValueError(
                f"violation pair ({id_a}, {id_b}) references ids absent from frame {pos.frame}"
            )

    partner = exclusive_couples(registry, pos, policy)
    red: set[int] = set()

    # Plain pairwise breaches between non-partners.
    for id_a, id_b in violations:
        if partner.get(id_a) != id_b:
            red.add(id_a)
            red.add(id_b)

    # Couple-level checks: midpoint circles against outsiders and other couples.
    couple_pairs = sorted({_ordered(a, b) for a, b in partner.items()})
    mids = {}
    for id_a, id_b in couple_pairs:
        p_a, p_b = points[id_a], points[id_b]
        mid = GroundPoint((p_a.xw + p_b.xw) / 2.0, (p_a.yw + p_b.yw) / 2.0)
        mids[(id_a, id_b)] = (mid, _distance_px(p_a, p_b))
    coupled_ids = set(partner)
    for pair, (mid, d_c) in mids.items():
        radius = policy.r + d_c / 2.0
        for pid, p in points.items():
            if pid in coupled_ids:
                continue
            if _distance_px(mid, p) <= radius:
                red.add(pid)
                red.update(pair)
        for other, (omid, od_c) in mids.items():
            if other <= pair:
                continue
            if _distance_px(mid, omid) <= radius + od_c / 2.0:
                red.update(pair)
                red.update(other)

    # A red partner drags the other member of the couple along.
    for pid in list(red):
        mate = partner.get(pid)
        if mate is not None:
            red.add(mate)

    labels: dict[int, ZoneLabel] = {}
    for pid in points:
        if pid in red:
            labels[pid] = ZoneLabel.HIGH_RISK
        elif pid in partner:
            labels[pid] = ZoneLabel.POTENTIALLY_RISKY
        else:
            labels[pid] = ZoneLabel.SAFE
    return labels


@dataclass(frozen=True)
class FrameStats:
    """Population counts for one frame; total = red + 2*yellow_pairs + green."""

    total: int
    red: int
    yellow_pairs: int
    green: int


def frame_stats(labels: dict[int, ZoneLabel]) -> FrameStats:
    red = sum(1 for z in labels.values() if z is ZoneLabel.HIGH_RISK)
    yellow = sum(1 for z in labels.values() if z is ZoneLabel.POTENTIALLY_RISKY)
    green = sum(1 for z in labels.values() if z is ZoneLabel.SAFE)
    if yellow % 2:
        raise AssertionError("yellow people must come in exclusive pairs")
    return FrameStats(total=len(labels), red=red, yellow_pairs=yellow // 2, green=green)
