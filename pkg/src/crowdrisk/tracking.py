"""SORT-style multi-object tracking.

Each person carries a 7-component constant-velocity state
[u, v, s, r, u', v', s'] — centroid, box area, aspect ratio, and their
rates (aspect ratio is modelled as constant).  Detections are associated
to predicted boxes by minimum 1-IoU cost, gated, and tracks move through
a Tentative -> Confirmed -> Dead lifecycle.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .assignment import Assignment, solve_assignment
from .geometry import BBox, GroundPoint, foot_point, iou_matrix, project_to_bev

STATE_DIM = 7
MEAS_DIM = 4

# Constant-velocity transition: u += u', v += v', s += s'.
TRANSITION = np.eye(STATE_DIM)
TRANSITION[0, 4] = TRANSITION[1, 5] = TRANSITION[2, 6] = 1.0

# Observe (u, v, s, r).
OBSERVATION = np.eye(MEAS_DIM, STATE_DIM)

_EYE_STATE = np.eye(STATE_DIM)


class SequencingError(ValueError):
    """Frames fed to a tracker out of order."""


class NumericalUpdateError(ValueError):
    """Innovation covariance not positive definite (mis-set noise parameters)."""


@dataclass(frozen=True)
class KalmanParams:
    """Noise configuration for the per-track filter."""

    meas_noise: tuple[float, float, float, float] = (1.0, 1.0, 10.0, 10.0)
    process_noise: tuple[float, ...] = (1e-2, 1e-2, 1e-2, 1e-2, 1e-2, 1e-2, 1e-4)
    init_state_var: float = 10.0
    init_velocity_var: float = 1e4

    # The matrices are hot-path constants; build them once per parameter set.
    @functools.cached_property
    def meas_noise_diag(self) -> np.ndarray:
        return np.asarray(self.meas_noise, dtype=float)

    @functools.cached_property
    def R(self) -> np.ndarray:
        return np.diag(self.meas_noise_diag)

    @functools.cached_property
    def Q(self) -> np.ndarray:
        return np.diag(np.asarray(self.process_noise, dtype=float))

    def P0(self) -> np.ndarray:
        return np.diag([self.init_state_var] * 4 + [self.init_velocity_var] * 3).astype(float)


DEFAULT_KALMAN = KalmanParams()


def measurement_from_bbox(b: BBox) -> np.ndarray:
    """(u, v, s, r) observation: centroid, area, aspect ratio."""
    return np.array([b.cx, b.cy, b.w * b.h, b.w / b.h])


@dataclass
class TrackState:
    """Filter state: mean x (7,) and covariance P (7, 7)."""

    x: np.ndarray
    P: np.ndarray

    u = property(lambda self: float(self.x[0]))
    v = property(lambda self: float(self.x[1]))
    s = property(lambda self: float(self.x[2]))
    r = property(lambda self: float(self.x[3]))
    du = property(lambda self: float(self.x[4]))
    dv = property(lambda self: float(self.x[5]))
    ds = property(lambda self: float(self.x[6]))

    @property
    def degenerate(self) -> bool:
        """Box area or aspect ratio no longer describes a valid box."""
        return self.s <= 0.0 or self.r <= 0.0

    @classmethod
    def from_bbox(cls, b: BBox, params: KalmanParams = DEFAULT_KALMAN) -> "TrackState":
        x = np.zeros(STATE_DIM)
        x[:MEAS_DIM] = measurement_from_bbox(b)
        return cls(x=x, P=params.P0())

    def to_bbox(self, conf: float = 1.0) -> BBox:
        if self.degenerate:
            raise ValueError(f"degenerate state (s={self.s}, r={self.r}) has no box")
        w = math.sqrt(self.s * self.r)
        h = math.sqrt(self.s / self.r)
        return BBox(self.u, self.v, w, h, conf)


def kalman_predict(state: TrackState, params: KalmanParams = DEFAULT_KALMAN) -> TrackState:
    """Constant-velocity propagation; covariance grows by the process noise."""
    x = TRANSITION @ state.x
    P = TRANSITION @ state.P @ TRANSITION.T + params.Q
    P = (P + P.T) / 2.0
    return TrackState(x=x, P=P)


def kalman_update(
    state: TrackState, meas: BBox, params: KalmanParams = DEFAULT_KALMAN
) -> TrackState:
    """Standard Kalman correction against an observed box.

    The gain splits the correction between prediction and observation in
    proportion to their covariances.  Joseph-form covariance update keeps
    P symmetric positive semidefinite.
    """
    P = state.P
    innovation = measurement_from_bbox(meas) - state.x[:MEAS_DIM]
    # the observation matrix is a component selector, so H P H^T etc. are slices
    S = P[:MEAS_DIM, :MEAS_DIM] + params.R
    if not np.all(np.diagonal(S) > 0.0):
        raise NumericalUpdateError(
            "innovation covariance is not positive definite; check noise parameters"
        )
    try:
        K = np.linalg.solve(S, P[:MEAS_DIM]).T
    except np.linalg.LinAlgError:
        raise NumericalUpdateError(
            "innovation covariance is not positive definite; check noise parameters"
        ) from None
    x = state.x + K @ innovation
    I_KH = _EYE_STATE.copy()
    I_KH[:, :MEAS_DIM] -= K
    P_post = I_KH @ P @ I_KH.T + (K * params.meas_noise_diag) @ K.T
    P_post = (P_post + P_post.T) / 2.0
    return TrackState(x=x, P=P_post)


class TrackStatus(enum.Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    DEAD = "dead"


@dataclass
class Track:
    id: int
    state: TrackState
    conf: float = 1.0
    hits: int = 1
    age: int = 0
    time_since_update: int = 0
    status: TrackStatus = TrackStatus.TENTATIVE
    trajectory: list[tuple[int, GroundPoint]] = field(default_factory=list)


@dataclass(frozen=True)
class TrackSnapshot:
    """Per-frame view of a confirmed track, as reported by the tracker."""

    id: int
    bbox: BBox
    ground: GroundPoint | None
    hits: int
    age: int


def associate(tracks: list[BBox], detections: list[BBox], iou_gate: float) -> Assignment:
    """Match tracks to detections by minimum 1-IoU cost.

    Pairs with IoU below the gate are forbidden: the solver may pair them,
    but they are moved back to the unmatched sets afterwards.
    """
    if not (0.0 <= iou_gate <= 1.0):
        raise ValueError(f"iou_gate must be in [0, 1], got {iou_gate}")
    if not tracks or not detections:
        return Assignment([], list(range(len(tracks))), list(range(len(detections))))

    overlap = iou_matrix(tracks, detections)
    raw = solve_assignment(1.0 - overlap)

    matches = []
    unmatched_t = list(raw.unmatched_tracks)
    unmatched_d = list(raw.unmatched_detections)
    for ti, di in raw.matches:
        if overlap[ti, di] >= iou_gate:
            matches.append((ti, di))
        else:
            unmatched_t.append(ti)
            unmatched_d.append(di)
    return Assignment(matches, sorted(unmatched_t), sorted(unmatched_d))


class Tracker:
    """Single-stream sequential tracker; one instance per camera stream.

    Frames must be fed in strictly increasing order.  Distinct instances
    are independent and may run in parallel.
    """

    def __init__(
        self,
        projection: np.ndarray | None = None,
        iou_gate: float = 0.3,
        min_hits: int = 3,
        max_age: int = 30,
        kalman: KalmanParams = DEFAULT_KALMAN,
    ):
        if not (0.0 <= iou_gate <= 1.0):
            raise ValueError(f"iou_gate must be in [0, 1], got {iou_gate}")
        if min_hits < 1:
            raise ValueError(f"min_hits must be >= 1, got {min_hits}")
        if max_age < 0:
            raise ValueError(f"max_age must be >= 0, got {max_age}")
        self.projection = projection
        self.iou_gate = iou_gate
        self.min_hits = min_hits
        self.max_age = max_age
        self.kalman = kalman
        self._tracks: list[Track] = []
        self._next_id = 1
        self._last_frame: int | None = None
        self.last_spawned: list[int] = []
        self.last_removed: list[int] = []

    @property
    def tracks(self) -> list[Track]:
        return list(self._tracks)

    @property
    def next_id(self) -> int:
        return self._next_id

    def step(self, detections: list[BBox], frame: int) -> list[TrackSnapshot]:
        """Advance one frame: predict, associate, update, manage lifecycle.

        Returns snapshots of confirmed tracks updated this frame, with the
        ground-plane trajectory extended when a projection is configured.
        """
        if self._last_frame is not None and frame <= self._last_frame:
            raise SequencingError(
                f"frame {frame} is not after previous frame {self._last_frame}"
            )
        self._last_frame = frame
        spawned: list[int] = []
        removed: list[int] = []

        survivors = []
        for t in self._tracks:
            t.state = kalman_predict(t.state, self.kalman)
            t.age += 1
            if t.state.degenerate:
                t.status = TrackStatus.DEAD
                removed.append(t.id)
            else:
                survivors.append(t)
        self._tracks = survivors

        track_boxes = [t.state.to_bbox(t.conf) for t in self._tracks]
        assign = associate(track_boxes, detections, self.iou_gate)

        for ti, di in assign.matches:
            t = self._tracks[ti]
            t.state = kalman_update(t.state, detections[di], self.kalman)
            t.hits += 1
            t.time_since_update = 0
            t.conf = detections[di].conf
        for ti in assign.unmatched_tracks:
            self._tracks[ti].time_since_update += 1
        for di in assign.unmatched_detections:
            det = detections[di]
            self._tracks.append(
                Track(
                    id=self._next_id,
                    state=TrackState.from_bbox(det, self.kalman),
                    conf=det.conf,
                )
            )
            spawned.append(self._next_id)
            self._next_id += 1

        keep = []
        for t in self._tracks:
            if t.state.degenerate or t.time_since_update > self.max_age:
                t.status = TrackStatus.DEAD
                removed.append(t.id)
                continue
            if t.status is TrackStatus.TENTATIVE and t.hits >= self.min_hits:
                t.status = TrackStatus.CONFIRMED
            keep.append(t)
        self._tracks = keep

        out = []
        for t in self._tracks:
            if t.status is not TrackStatus.CONFIRMED or t.time_since_update != 0:
                continue
            box = t.state.to_bbox(t.conf)
            ground = None
            if self.projection is not None:
                ground = project_to_bev(self.projection, foot_point(box))
                t.trajectory.append((frame, ground))
            out.append(TrackSnapshot(id=t.id, bbox=box, ground=ground, hits=t.hits, age=t.age))

        self.last_spawned = spawned
        self.last_removed = removed
        return out


def format_mot_line(frame: int, track_id: int, bbox: BBox, conf: float) -> str:
    """One MOTChallenge result line; coordinates and confidence at 2 decimals."""
    left = bbox.cx - bbox.w / 2.0
    top = bbox.cy - bbox.h / 2.0
    return (
        f"{frame},{track_id},{left:.2f},{top:.2f},{bbox.w:.2f},{bbox.h:.2f},{conf:.2f},-1,-1,-1"
    )
