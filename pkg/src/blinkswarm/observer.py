"""Virtual stand-in for the phone AR pipeline.

Instead of pixels, a calibrated noise channel: droplets are detected with a
probability that factorizes over camera distance, visible droplet count, and
camera inclination; detected droplets may be misclassified once scenes get
crowded. Blink flags pass through faithfully for detected droplets. Molecule
hypotheses are rebuilt from one blink period of frames: droplets observed
blinking in the same slot, linked by spatial proximity, form one molecule.

The three noise factors were measured separately in the source experiments;
their product and the default constants are fits to the described shapes, not
tabulated data, so every parameter is exposed on CameraConfig for refitting.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .chem import ElementTable, load_element_table
from .graph import LANE_OBSERVER, philox_stream
from .sim import Arena


class InsufficientWindowError(ValueError):
    """Frame window shorter than one blink period."""


class NonRecognitionError(RuntimeError):
    """Observer never stabilized on the true molecule count."""


class UnknownDropletError(KeyError):
    """Queried droplet id not present."""


@dataclass(frozen=True)
class CameraConfig:
    """Virtual camera pose plus the fitted noise-model constants.

    distance_m / angle_deg / resolution / hue_tolerance_deg describe the
    camera; the remaining fields parameterize the three detection factors
    (distance sigmoid, count line, inclination knee) and the misclassification
    ramp. Defaults reproduce the reported anchor behaviors: near-perfect
    detection below 0.6 m, nominal beyond; inverse-linear decay up to 20
    droplets with a hard zero at 21; little angle sensitivity up to 75 deg,
    then a steep drop toward 90.
    """

    distance_m: float = 0.3
    angle_deg: float = 0.0
    resolution: str = "640x480"
    hue_tolerance_deg: float = 15.0
    # fitted: distance sigmoid
    dist_midpoint_m: float = 0.7
    dist_steepness_m: float = 0.04
    dist_floor: float = 0.05
    # fitted: count line (hard zero past count_max)
    count_slope: float = 0.015
    count_max: int = 20
    # fitted: inclination knee
    angle_soft_deg: float = 75.0
    angle_soft_slope: float = 0.001
    angle_floor: float = 0.10
    # fitted: misclassification ramp
    mis_onset: int = 10
    mis_ceiling: float = 0.10
    # fitted: blink-timing drift (streaming observer only): in crowded frames
    # the pipeline's tracking phase slips, so a droplet's whole on-window can
    # alias into the neighboring slot for one period; the tracker locks on as
    # blink cycles accumulate, so the slip rate decays per observed period
    slot_jitter_onset: int = 10
    slot_jitter_slope: float = 0.0125
    slot_jitter_cap: float = 0.5
    slot_jitter_decay: float = 0.5

    def __post_init__(self) -> None:
        if self.distance_m <= 0:
            raise ValueError("distance_m must be > 0")
        if not 0 <= self.angle_deg <= 90:
            raise ValueError("angle_deg must be within [0, 90]")

    @classmethod
    def noiseless(cls, **overrides: Any) -> "CameraConfig":
        """Identity channel for n <= count_max (the hard zero always stands)."""
        params = dict(
            dist_floor=1.0,
            count_slope=0.0,
            angle_soft_slope=0.0,
            angle_floor=1.0,
            mis_ceiling=0.0,
            slot_jitter_slope=0.0,
        )
        params.update(overrides)
        return cls(**params)

    def at(self, **overrides: Any) -> "CameraConfig":
        return replace(self, **overrides)


@dataclass(frozen=True)
class Detection:
    droplet_id: int
    symbol: str
    blinking: bool
    x: float
    y: float


@dataclass(frozen=True)
class ObservationFrame:
    tick: int
    detections: tuple[Detection, ...]


@dataclass(frozen=True)
class MoleculeHypothesis:
    droplet_ids: frozenset[int]
    center_ids: frozenset[int]
    composition: tuple[tuple[str, int], ...]
    slot: int | None
    diatomic: bool
    confidence: float


def _distance_factor(cfg: CameraConfig, d: float) -> float:
    sig = 1.0 / (1.0 + math.exp((d - cfg.dist_midpoint_m) / cfg.dist_steepness_m))
    return cfg.dist_floor + (1.0 - cfg.dist_floor) * sig


def _count_factor(cfg: CameraConfig, n: int) -> float:
    if n > cfg.count_max:
        return 0.0
    if n <= 1:
        return 1.0
    return max(0.0, 1.0 - cfg.count_slope * (n - 1))


def _angle_factor(cfg: CameraConfig, a: float) -> float:
    knee = 1.0 - cfg.angle_soft_slope * cfg.angle_soft_deg
    if a <= cfg.angle_soft_deg:
        return 1.0 - cfg.angle_soft_slope * a
    span = 90.0 - cfg.angle_soft_deg
    frac = (a - cfg.angle_soft_deg) / span
    return knee + (cfg.angle_floor - knee) * frac


def detection_probability(cfg: CameraConfig, n_visible: int) -> float:
    """P(a given droplet is detected) = f_d(distance) * f_n(count) * f_a(angle).

    Non-increasing in each argument; exactly 0 once more than count_max
    droplets are visible, whatever the pose.
    """
    if n_visible < 0:
        raise ValueError("n_visible must be >= 0")
    p = (
        _distance_factor(cfg, cfg.distance_m)
        * _count_factor(cfg, n_visible)
        * _angle_factor(cfg, cfg.angle_deg)
    )
    return min(1.0, max(0.0, p))


def misclassification_probability(cfg: CameraConfig, n_visible: int) -> float:
    """0 in sparse scenes, ramping linearly to the ceiling at count_max."""
    if n_visible <= cfg.mis_onset:
        return 0.0
    span = max(1, cfg.count_max - cfg.mis_onset)
    return cfg.mis_ceiling * min(1.0, (n_visible - cfg.mis_onset) / span)


def slot_jitter_probability(cfg: CameraConfig, n_visible: int, period_index: int = 0) -> float:
    """P(a tracked droplet's blink phase slips a slot in the given period).

    Crowding raises the slip rate; lock-on decays it as periods accumulate.
    """
    if n_visible <= cfg.slot_jitter_onset:
        return 0.0
    base = min(cfg.slot_jitter_cap, cfg.slot_jitter_slope * (n_visible - cfg.slot_jitter_onset))
    return base * cfg.slot_jitter_decay ** max(0, period_index)


def _observe_with_draws(
    snapshot: Mapping[str, Any],
    cfg: CameraConfig,
    u_detect: Sequence[float],
    u_mis: Sequence[float],
    u_pick: Sequence[float],
    symbols: Sequence[str],
) -> ObservationFrame:
    droplets = snapshot["droplets"]
    n = len(droplets)
    p = detection_probability(cfg, n)
    p_mis = misclassification_probability(cfg, n)
    detections = []
    for i, d in enumerate(droplets):
        if u_detect[i] >= p:
            continue
        symbol = d["symbol"]
        if p_mis > 0.0 and u_mis[i] < p_mis and len(symbols) > 1:
            others = [s for s in symbols if s != symbol]
            symbol = others[min(int(u_pick[i] * len(others)), len(others) - 1)]
        detections.append(Detection(d["id"], symbol, bool(d["blinking"]), d["x"], d["y"]))
    return ObservationFrame(tick=snapshot["tick"], detections=tuple(detections))


def observe(
    snapshot: Mapping[str, Any],
    cfg: CameraConfig,
    rng: np.random.Generator,
    symbols: Sequence[str] = ("H", "O", "C"),
) -> ObservationFrame:
    """One independent noisy frame of the given snapshot."""
    n = len(snapshot["droplets"])
    return _observe_with_draws(
        snapshot, cfg, rng.random(n), rng.random(n), rng.random(n), symbols
    )


class VirtualObserver:
    """Streaming observer with per-period noise persistence.

    A real pipeline loses a droplet for a stretch of frames (occlusion, light
    over-saturation), not independently per frame, so detection,
    misclassification, and blink-phase drift are re-rolled once per blink
    period: within one period a droplet is either tracked or lost, and its
    perceived blink timing is coherent. Draws are counter-based on
    (seed, period, droplet index), so frames can be generated in any order.
    """

    def __init__(
        self,
        cfg: CameraConfig,
        seed: int,
        period_ticks: int,
        symbols: Sequence[str] = ("H", "O", "C"),
    ):
        if period_ticks < 1:
            raise ValueError("period_ticks must be >= 1")
        self.cfg = cfg
        self.seed = seed
        self.period_ticks = period_ticks
        self.symbols = tuple(symbols)

    def _draws(self, n: int, period_ix: int):
        d = philox_stream(self.seed, LANE_OBSERVER, period_ix).random(5 * max(n, 1))
        return d[:n], d[n : 2 * n], d[2 * n : 3 * n], d[3 * n : 4 * n], d[4 * n : 5 * n]

    def frame(self, snapshot: Mapping[str, Any]) -> ObservationFrame:
        """Frame from a bare snapshot: persistence applies, timing is faithful."""
        n = len(snapshot["droplets"])
        period_ix = snapshot["tick"] // self.period_ticks
        u_det, u_mis, u_pick, _, _ = self._draws(n, period_ix)
        return _observe_with_draws(snapshot, self.cfg, u_det, u_mis, u_pick, self.symbols)

    def frame_at(self, arena: Arena, tick: int) -> ObservationFrame:
        """Frame of a (frozen) arena at a virtual tick, with blink-phase drift.

        A droplet that slips this period is reported with the blink state it
        had a whole slot earlier/later, so its on-window aliases into the
        neighboring slot bin exactly as a phase-lagged camera would see it.
        """
        snapshot = arena.snapshot(tick=tick)
        n = len(snapshot["droplets"])
        period_ix = tick // self.period_ticks
        u_det, u_mis, u_pick, u_jit, u_sign = self._draws(n, period_ix)
        p_jit = slot_jitter_probability(self.cfg, n, period_ix)
        frame = _observe_with_draws(snapshot, self.cfg, u_det, u_mis, u_pick, self.symbols)
        if p_jit <= 0.0:
            return frame
        index = {d["id"]: i for i, d in enumerate(snapshot["droplets"])}
        tps = arena.config.ticks_per_slot
        shifted_sets: dict[int, set[int]] = {}
        detections = []
        for det in frame.detections:
            i = index[det.droplet_id]
            if u_jit[i] < p_jit:
                delta = tps if u_sign[i] < 0.5 else -tps
                if delta not in shifted_sets:
                    shifted_sets[delta] = arena.blinking_now(tick - delta)
                det = Detection(
                    det.droplet_id, det.symbol, det.droplet_id in shifted_sets[delta], det.x, det.y
                )
            detections.append(det)
        return ObservationFrame(tick=tick, detections=tuple(detections))


def _majority(values: Iterable[Any]) -> Any:
    counts = Counter(values)
    top = max(counts.values())
    return sorted(v for v, c in counts.items() if c == top)[0]


def _spatial_clusters(ids: list[int], pos: dict[int, tuple[float, float]], radius: float) -> list[list[int]]:
    """Single-linkage components at the given radius."""
    remaining = sorted(ids)
    clusters = []
    while remaining:
        seed_id = remaining.pop(0)
        cluster = [seed_id]
        frontier = [seed_id]
        while frontier:
            cur = frontier.pop()
            cx, cy = pos[cur]
            near = [
                other
                for other in remaining
                if math.hypot(pos[other][0] - cx, pos[other][1] - cy) <= radius
            ]
            for other in near:
                remaining.remove(other)
                cluster.append(other)
                frontier.append(other)
        clusters.append(sorted(cluster))
    return clusters


def cluster_blinks(
    frames: Sequence[ObservationFrame],
    period: int,
    ticks_per_slot: int,
    link_radius: float,
    table: ElementTable | None = None,
) -> list[MoleculeHypothesis]:
    """Group droplets that blink in the same slot and sit within link range.

    Observed on-ticks are binned to the nearest slot center (tolerance of half
    a slot, so near-boundary observations still land on the right slot) and
    each droplet takes the majority slot of its on-ticks. Same-slot droplets
    are then split into spatial single-linkage clusters: molecules that
    legitimately share a slot are never adjacent, hence never within link
    range. Droplets never observed blinking become singleton hypotheses with
    no slot. Centers follow the electronegativity rule over the observed
    composition.
    """
    if not frames:
        raise InsufficientWindowError("empty frame window")
    ticks = [f.tick for f in frames]
    if max(ticks) - min(ticks) + 1 < period:
        raise InsufficientWindowError(
            f"window of {max(ticks) - min(ticks) + 1} ticks shorter than one period ({period})"
        )
    if table is None:
        table = load_element_table()

    seen_frames: dict[int, int] = {}
    on_slots: dict[int, list[int]] = {}
    symbols: dict[int, list[str]] = {}
    pos_sum: dict[int, list[float]] = {}
    for frame in frames:
        for det in frame.detections:
            did = det.droplet_id
            seen_frames[did] = seen_frames.get(did, 0) + 1
            symbols.setdefault(did, []).append(det.symbol)
            acc = pos_sum.setdefault(did, [0.0, 0.0])
            acc[0] += det.x
            acc[1] += det.y
            if det.blinking:
                phase = frame.tick % period
                slot = min(int((phase + 0.5) // ticks_per_slot), period // ticks_per_slot - 1)
                on_slots.setdefault(did, []).append(slot)

    pos = {
        did: (acc[0] / seen_frames[did], acc[1] / seen_frames[did])
        for did, acc in pos_sum.items()
    }
    slot_of = {did: _majority(slots) for did, slots in on_slots.items()}

    by_slot: dict[int, list[int]] = {}
    for did, slot in slot_of.items():
        by_slot.setdefault(slot, []).append(did)

    n_frames = len(frames)
    hypotheses: list[MoleculeHypothesis] = []

    def build(member_ids: list[int], slot: int | None) -> MoleculeHypothesis:
        member_symbols = {did: _majority(symbols[did]) for did in member_ids}
        composition = Counter(member_symbols.values())
        known = {
            did: table.elements[s].electronegativity
            for did, s in member_symbols.items()
            if s in table.elements
        }
        diatomic = False
        if known:
            if len(member_ids) == 2 and len(known) == 2:
                a, b = member_ids
                if known[a] == known[b]:
                    diatomic = True
            top = max(known.values())
            centers = frozenset(d for d, en in known.items() if en == top)
        else:
            centers = frozenset()
        if diatomic:
            centers = frozenset(member_ids)
        confidence = sum(seen_frames[d] for d in member_ids) / (n_frames * len(member_ids))
        return MoleculeHypothesis(
            droplet_ids=frozenset(member_ids),
            center_ids=centers,
            composition=tuple(sorted(composition.items())),
            slot=slot,
            diatomic=diatomic,
            confidence=confidence,
        )

    for slot in sorted(by_slot):
        for cluster in _spatial_clusters(by_slot[slot], pos, link_radius):
            hypotheses.append(build(cluster, slot))
    for did in sorted(seen_frames):
        if did not in slot_of:
            hypotheses.append(build([did], None))
    return hypotheses


def frames_for_period(arena: Arena, observer: VirtualObserver, period_index: int) -> list[ObservationFrame]:
    """Observe one full blink period of a frozen scene (ticks are virtual)."""
    period = arena.config.blink_period
    start = period_index * period
    return [observer.frame_at(arena, t) for t in range(start, start + period)]


def rounds_until_recognized(
    arena: Arena,
    cfg: CameraConfig,
    seed: int,
    max_periods: int = 20,
    table: ElementTable | None = None,
) -> int:
    """Blink periods of observation until the number of blink-born hypotheses
    matches the true molecule count and holds for one further period.

    Returns the 1-based index of the first period of the stable pair. The
    scene is observed frozen: blink phase advances, droplets do not move.
    """
    if not arena.groups:
        raise ValueError("scene has no molecules to recognize")
    if table is None:
        table = arena.table
    observer = VirtualObserver(cfg, seed, arena.config.blink_period, tuple(table.elements))
    true_count = len(arena.groups)
    radius = arena.config.sensing_radius
    matched_prev = False
    for period_ix in range(max_periods):
        frames = frames_for_period(arena, observer, period_ix)
        hyps = cluster_blinks(
            frames, arena.config.blink_period, arena.config.ticks_per_slot, radius, table
        )
        count = sum(1 for h in hyps if h.slot is not None)
        if count == true_count:
            if matched_prev:
                return period_ix  # 1-based: previous period index +1
            matched_prev = True
        else:
            matched_prev = False
    raise NonRecognitionError(
        f"no stable recognition of {true_count} molecules within {max_periods} periods"
    )


def query_droplet(arena: Arena, droplet_id: int) -> dict[str, Any]:
    """Hidden per-droplet info for the tap-to-inspect panel."""
    droplet = arena.droplets.get(droplet_id)
    if droplet is None:
        raise UnknownDropletError(f"no droplet with id {droplet_id}")
    element = droplet.atom.element
    info: dict[str, Any] = {
        "id": droplet_id,
        "symbol": element.symbol,
        "atomic_number": element.atomic_number,
        "atomic_mass": element.atomic_mass,
        "electronegativity": element.electronegativity,
        "display_color": element.display_color,
        "bond_status": "bonded" if droplet.atom.bonds else "free",
        "bonds": droplet.atom.bond_list(),
        "molecule_id": droplet.molecule_id,
        "formula": None,
        "geometry": None,
        "gibbs": None,
        "blink_slot": None,
    }
    if droplet.molecule_id is not None:
        group = arena.groups[droplet.molecule_id]
        info["formula"] = group.formula
        info["blink_slot"] = group.blink_slot
        if group.record is not None:
            info["geometry"] = group.record.geometry
            info["gibbs"] = group.record.gibbs_free_energy
    return info
