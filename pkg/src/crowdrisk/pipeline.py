"""Per-frame orchestration: track, project, evaluate distances, accumulate risk.

One run consumes a frame-ordered detection stream and leaves everything on
disk: MOT-format track file, per-frame stats table, run summary, value
tables for the grids, and the rendered rasters.  Two runs over the same
input and config produce byte-identical artifacts.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass

from . import rasters
from .config import RunConfig
from .detections import DetectionRecord, IngestResult
from .distancing import (
    CoupleRegistry,
    FramePositions,
    classify_zones,
    frame_stats,
    pairwise_violations,
    update_couples,
)
from .risk import (
    CrowdGrid,
    LongTermCrowd,
    RiskGrid,
    ViolationGrid,
    accumulate_tracking,
    accumulate_violations,
    crowd_step,
    render_heatmap,
)
from .tracking import Tracker, format_mot_line

STATS_HEADER = "frame,total,red,yellow_pairs,green,new_ids,dead_ids"


class PipelineError(RuntimeError):
    """Failure during a run, stamped with the frame where it happened."""


@dataclass(frozen=True)
class FrameReport:
    frame: int
    total: int
    red: int
    yellow_pairs: int
    green: int
    new_ids: int
    dead_ids: int

    def row(self) -> str:
        return (
            f"{self.frame},{self.total},{self.red},{self.yellow_pairs},"
            f"{self.green},{self.new_ids},{self.dead_ids}"
        )


@dataclass(frozen=True)
class PipelineSummary:
    frames_processed: int
    detections_ingested: int
    detections_rejected: int
    detections_below_confidence: int
    detections_processed: int
    tracks_created: int
    person_frames: int
    red_person_frames: int
    yellow_pair_frames: int
    green_person_frames: int
    violation_ratio: float
    peak_red_frame: int | None
    peak_red_count: int
    dropped_stamps: int


def _frame_detections(ingest: IngestResult, conf_threshold: float):
    """Yield (frame, boxes) for every frame from first to last, empty frames included."""
    if not ingest.frames:
        return
    by_frame = {f: recs for f, recs in ingest.frames}
    for frame in range(ingest.first_frame, ingest.last_frame + 1):
        recs: tuple[DetectionRecord, ...] = by_frame.get(frame, ())
        yield frame, [r.bbox for r in recs if r.bbox.conf >= conf_threshold]


def run_pipeline(
    config: RunConfig,
    ingest: IngestResult,
    out_dir: str | None = None,
    tracks_only: bool = False,
) -> PipelineSummary:
    """Run the full per-frame pipeline and write all artifacts under out_dir."""
    out = out_dir if out_dir is not None else config.out_dir
    os.makedirs(out, exist_ok=True)

    tracker = Tracker(
        projection=config.projection,
        iou_gate=config.tracker.iou_gate,
        min_hits=config.tracker.min_hits,
        max_age=config.tracker.max_age,
    )
    rc = config.risk
    tracking_grid = RiskGrid(rc.grid_width, rc.grid_height, rc.cell_scale)
    violation_grid = ViolationGrid(
        rc.grid_width, rc.grid_height, alpha=rc.alpha, beta=rc.beta, delta=rc.delta,
        cell_scale=rc.cell_scale,
    )
    crowd = CrowdGrid(rc.grid_width, rc.grid_height, rc.decay_gamma, rc.cell_scale)
    long_term = LongTermCrowd(rc.grid_width, rc.grid_height, rc.long_term_smoothing)
    registry = CoupleRegistry()

    track_lines: list[str] = []
    reports: list[FrameReport] = []
    frames_processed = 0
    below_conf = 0
    person_frames = 0
    red_frames = 0
    yellow_pair_frames = 0
    green_frames = 0
    peak_red_frame: int | None = None
    peak_red = 0

    total_ingested = ingest.accepted
    for frame, boxes in _frame_detections(ingest, config.tracker.conf_threshold):
        try:
            snapshots = tracker.step(boxes, frame)
            for snap in snapshots:
                track_lines.append(format_mot_line(frame, snap.id, snap.bbox, snap.bbox.conf))

            if tracks_only:
                frames_processed += 1
                continue

            pos = FramePositions.from_pairs(
                frame, [(snap.id, snap.ground) for snap in snapshots]
            )
            violations = pairwise_violations(pos, config.policy)
            if config.couples_enabled:
                update_couples(registry, pos, config.policy)
            labels = classify_zones(pos, violations, registry, config.policy)
            stats = frame_stats(labels)

            accumulate_tracking(tracking_grid, pos)
            accumulate_violations(violation_grid, labels, pos)
            if config.crowd_map_enabled:
                crowd_step(crowd, pos)
                long_term.update(crowd.values)

            report = FrameReport(
                frame=frame,
                total=stats.total,
                red=stats.red,
                yellow_pairs=stats.yellow_pairs,
                green=stats.green,
                new_ids=len(tracker.last_spawned),
                dead_ids=len(tracker.last_removed),
            )
            assert report.total == report.red + 2 * report.yellow_pairs + report.green
            reports.append(report)

            person_frames += stats.total
            red_frames += stats.red
            yellow_pair_frames += stats.yellow_pairs
            green_frames += stats.green
            if stats.red > peak_red:
                peak_red = stats.red
                peak_red_frame = frame
            frames_processed += 1
        except PipelineError:
            raise
        except Exception as exc:
            raise PipelineError(f"frame {frame}: {exc}") from exc

    for frame, recs in ingest.frames:
        below_conf += sum(1 for r in recs if r.bbox.conf < config.tracker.conf_threshold)

    with open(os.path.join(out, "tracks.txt"), "w", encoding="ascii", newline="\n") as fh:
        for line in track_lines:
            fh.write(line + "\n")

    dropped = 0
    if not tracks_only:
        dropped = (
            tracking_grid.dropped
            + violation_grid.layer_r.dropped
            + violation_grid.layer_t.dropped
            + violation_grid.layer_y.dropped
            + crowd.grid.dropped
        )
        _write_stats(os.path.join(out, "stats.csv"), reports)
        _write_grids(out, config, tracking_grid, violation_grid, crowd, long_term)

    summary = PipelineSummary(
        frames_processed=frames_processed,
        detections_ingested=total_ingested,
        detections_rejected=ingest.rejected,
        detections_below_confidence=below_conf,
        detections_processed=total_ingested - below_conf,
        tracks_created=tracker.next_id - 1,
        person_frames=person_frames,
        red_person_frames=red_frames,
        yellow_pair_frames=yellow_pair_frames,
        green_person_frames=green_frames,
        violation_ratio=(red_frames / person_frames) if person_frames else 0.0,
        peak_red_frame=peak_red_frame,
        peak_red_count=peak_red,
        dropped_stamps=dropped,
    )
    with open(os.path.join(out, "summary.json"), "w", encoding="ascii", newline="\n") as fh:
        json.dump(asdict(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def _write_stats(path: str, reports: list[FrameReport]) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(STATS_HEADER + "\n")
        for report in reports:
            fh.write(report.row() + "\n")


def _write_grids(
    out: str,
    config: RunConfig,
    tracking_grid: RiskGrid,
    violation_grid: ViolationGrid,
    crowd: CrowdGrid,
    long_term: LongTermCrowd,
) -> None:
    combined = violation_grid.combined()
    rasters.write_value_table(os.path.join(out, "tracking_grid.txt"), tracking_grid.values)
    rasters.write_value_table(os.path.join(out, "violation_grid.txt"), combined)
    rasters.write_pgm16(os.path.join(out, "tracking_grid.pgm"), tracking_grid.values)
    rasters.write_pgm16(os.path.join(out, "violation_grid.pgm"), combined)
    rasters.write_heatmap_ppm(
        os.path.join(out, "heatmap.ppm"), render_heatmap(tracking_grid.values, combined)
    )
    if config.crowd_map_enabled:
        rasters.write_value_table(os.path.join(out, "crowd_grid.txt"), crowd.values)
        rasters.write_value_table(os.path.join(out, "longterm_crowd.txt"), long_term.values)
        rasters.write_pgm16(os.path.join(out, "crowd_grid.pgm"), crowd.values)
        rasters.write_pgm16(os.path.join(out, "longterm_crowd.pgm"), long_term.values)


def render_from_tables(tables_dir: str, out_dir: str) -> list[str]:
    """Re-render rasters from previously written value tables.

    Needs tracking_grid.txt and violation_grid.txt; crowd tables are
    re-rendered when present.  Returns the written raster paths.
    """
    tracking_path = os.path.join(tables_dir, "tracking_grid.txt")
    violation_path = os.path.join(tables_dir, "violation_grid.txt")
    for path in (tracking_path, violation_path):
        if not os.path.exists(path):
            raise FileNotFoundError(f"missing value table: {path}")
    os.makedirs(out_dir, exist_ok=True)
    G = rasters.read_value_table(tracking_path)
    S = rasters.read_value_table(violation_path)
    written = []

    def _emit(name: str, writer, *args) -> None:
        path = os.path.join(out_dir, name)
        writer(path, *args)
        written.append(path)

    _emit("tracking_grid.pgm", rasters.write_pgm16, G)
    _emit("violation_grid.pgm", rasters.write_pgm16, S)
    _emit("heatmap.ppm", rasters.write_heatmap_ppm, render_heatmap(G, S))
    for name in ("crowd_grid", "longterm_crowd"):
        table = os.path.join(tables_dir, f"{name}.txt")
        if os.path.exists(table):
            _emit(f"{name}.pgm", rasters.write_pgm16, rasters.read_value_table(table))
    return written
