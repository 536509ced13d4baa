"""Ground-plane pedestrian world observed by a pinhole camera.

Pedestrians are upright 3D boxes that follow random waypoints. Every frame the
camera projects them into exact full-body and visible-part boxes, with
occlusion resolved on a pixel grid by camera depth.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional, Union

import numpy as np

Box = tuple[float, float, float, float]  # left, top, width, height (px)

ARRIVAL_RADIUS = 0.2
EXIT_GRACE_FRAMES = 30
ARENA_SIZE = 40.0
NEAR_PLANE = 1.0
FAR_PLANE = 30.0
HORIZONTAL_FOV = math.radians(60.0)
OCCLUSION_STRIDE = 2.0

CAMERA_VIEWS = ("surveillance", "vehicle")
_VIEW_PRESETS = {
    # height (m), pitch (deg)
    "surveillance": (6.0, -35.0),
    "vehicle": (1.5, -5.0),
}


class ConfigError(ValueError):
    """Invalid scenario or run configuration; ``field`` names the culprit."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class CameraMotion:
    kind: str = "static"  # static | moving
    speed: float = 0.0  # m/s
    waypoints: tuple[tuple[float, float], ...] = ()

    @classmethod
    def moving(cls, speed: float, waypoints=()) -> "CameraMotion":
        return cls("moving", float(speed), tuple(tuple(map(float, w)) for w in waypoints))


@dataclass(frozen=True)
class ScenarioConfig:
    duration_frames: int = 300
    fps: float = 30.0
    resolution: tuple[int, int] = (1024, 768)
    camera_view: str = "surveillance"
    camera_motion: CameraMotion = CameraMotion()
    target_density: int = 10
    speed_dist: tuple[float, float] = (1.0, 0.1)  # mean, stddev (m/s)
    action_mix: float = 1.0  # fraction of pedestrians that walk; the rest run
    seed: int = 0

    def validate(self) -> "ScenarioConfig":
        if int(self.duration_frames) != self.duration_frames or self.duration_frames < 1:
            raise ConfigError("duration_frames", "must be an integer >= 1")
        if not self.fps > 0:
            raise ConfigError("fps", "must be > 0")
        if len(self.resolution) != 2 or min(self.resolution) <= 0:
            raise ConfigError("resolution", "both components must be > 0")
        if self.camera_view not in CAMERA_VIEWS:
            raise ConfigError("camera_view", f"must be one of {CAMERA_VIEWS}")
        if self.camera_motion.kind not in ("static", "moving"):
            raise ConfigError("camera_motion", "kind must be 'static' or 'moving'")
        if self.camera_motion.speed < 0:
            raise ConfigError("camera_motion", "speed must be >= 0")
        if self.target_density < 0:
            raise ConfigError("target_density", "must be >= 0")
        mean, std = self.speed_dist
        if not mean > 0:
            raise ConfigError("speed_dist", "mean must be > 0")
        if std < 0:
            raise ConfigError("speed_dist", "stddev must be >= 0")
        if not 0.0 <= self.action_mix <= 1.0:
            raise ConfigError("action_mix", "must lie in [0, 1]")
        return self

    def to_dict(self) -> dict:
        return {
            "duration_frames": int(self.duration_frames),
            "fps": float(self.fps),
            "resolution": list(self.resolution),
            "camera_view": self.camera_view,
            "camera_motion": {
                "kind": self.camera_motion.kind,
                "speed": self.camera_motion.speed,
                "waypoints": [list(w) for w in self.camera_motion.waypoints],
            },
            "target_density": int(self.target_density),
            "speed_dist": list(self.speed_dist),
            "action_mix": float(self.action_mix),
            "seed": int(self.seed),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown key")
        kwargs = dict(data)
        if "resolution" in kwargs:
            kwargs["resolution"] = tuple(int(v) for v in kwargs["resolution"])
        if "speed_dist" in kwargs:
            kwargs["speed_dist"] = tuple(float(v) for v in kwargs["speed_dist"])
        motion = kwargs.get("camera_motion")
        if isinstance(motion, dict):
            extra = set(motion) - {"kind", "speed", "waypoints"}
            if extra:
                raise ConfigError("camera_motion", f"unknown key {sorted(extra)[0]!r}")
            kwargs["camera_motion"] = CameraMotion(
                motion.get("kind", "static"),
                float(motion.get("speed", 0.0)),
                tuple(tuple(map(float, w)) for w in motion.get("waypoints", ())),
            )
        elif isinstance(motion, str):
            kwargs["camera_motion"] = CameraMotion(motion)
        return cls(**kwargs).validate()


@dataclass(frozen=True)
class CameraModel:
    position: tuple[float, float, float]
    pitch: float
    yaw: float
    focal_px: float
    principal_point: tuple[float, float]
    resolution: tuple[int, int]

    @cached_property
    def rotation(self) -> np.ndarray:
        """World-to-camera rotation; camera axes are right, down, forward."""
        cp, sp = math.cos(self.pitch), math.sin(self.pitch)
        cy, sy = math.cos(self.yaw), math.sin(self.yaw)
        return np.array([
            [sy, -cy, 0.0],
            [cy * sp, sy * sp, -cp],
            [cp * cy, cp * sy, sp],
        ])

    def to_camera(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return (pts - np.asarray(self.position)) @ self.rotation.T


def make_camera(view: str, resolution=(1024, 768), position_xy=(0.0, 0.0), yaw=0.0) -> CameraModel:
    height, pitch_deg = _VIEW_PRESETS[view]
    w, h = resolution
    focal = 0.5 * w / math.tan(HORIZONTAL_FOV / 2)
    return CameraModel(
        position=(float(position_xy[0]), float(position_xy[1]), height),
        pitch=math.radians(pitch_deg),
        yaw=float(yaw),
        focal_px=focal,
        principal_point=(w / 2.0, h / 2.0),
        resolution=(int(w), int(h)),
    )


def project_point(cam: CameraModel, p) -> Optional[tuple[float, float]]:
    """Pinhole projection of a world point; ``None`` when it is behind the camera."""
    x, y, z = cam.to_camera(p)[0]
    if z <= 0:
        return None
    return (cam.focal_px * x / z + cam.principal_point[0],
            cam.focal_px * y / z + cam.principal_point[1])


def _project_many(cam: CameraModel, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    c = cam.to_camera(pts)
    valid = c[:, 2] > 0
    uv = np.full((len(c), 2), np.nan)
    z = c[valid, 2]
    uv[valid, 0] = cam.focal_px * c[valid, 0] / z + cam.principal_point[0]
    uv[valid, 1] = cam.focal_px * c[valid, 1] / z + cam.principal_point[1]
    return uv, valid


@dataclass(frozen=True)
class PedestrianState:
    identity: int
    position: tuple[float, float]
    heading: float
    speed: float
    action: str = "walk"
    height: float = 1.7
    half_width: float = 0.25
    half_depth: float = 0.15
    waypoints: tuple[tuple[float, float], ...] = ()
    appearance_id: int = 0

    def corners(self) -> np.ndarray:
        """The 8 corners of the upright box, oriented along the heading."""
        x, y = self.position
        fx, fy = math.cos(self.heading), math.sin(self.heading)
        lx, ly = -fy, fx
        out = []
        for z in (0.0, self.height):
            for a in (-self.half_depth, self.half_depth):
                for b in (-self.half_width, self.half_width):
                    out.append((x + a * fx + b * lx, y + a * fy + b * ly, z))
        return np.array(out)

    def center(self) -> tuple[float, float, float]:
        return (self.position[0], self.position[1], self.height / 2.0)


Arena = tuple[float, float, float, float]  # xmin, ymin, xmax, ymax


def _random_waypoint(rng: np.random.Generator, arena: Arena) -> tuple[float, float]:
    x0, y0, x1, y1 = arena
    return (float(rng.uniform(x0, x1)), float(rng.uniform(y0, y1)))


def step_pedestrian(state: PedestrianState, dt: float,
                    rng: Optional[np.random.Generator] = None,
                    arena: Optional[Arena] = None) -> PedestrianState:
    """Advance one pedestrian by ``speed * dt`` toward its current waypoint.

    A waypoint is consumed once it is within ``ARRIVAL_RADIUS`` or reachable in
    this step; when the list runs dry a new one is drawn from ``arena`` (only if
    an ``rng`` is supplied, otherwise the heading is kept).
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    step = state.speed * dt
    px, py = state.position
    waypoints = list(state.waypoints)
    heading = state.heading
    while waypoints and math.hypot(waypoints[0][0] - px, waypoints[0][1] - py) <= max(ARRIVAL_RADIUS, step):
        waypoints.pop(0)
        if not waypoints and rng is not None and arena is not None:
            waypoints.append(_random_waypoint(rng, arena))
            # a fresh waypoint may itself be close; loop re-checks it
    if waypoints:
        wx, wy = waypoints[0]
        if (wx, wy) != (px, py):
            heading = math.atan2(wy - py, wx - px)
    pos = (px + step * math.cos(heading), py + step * math.sin(heading))
    return replace(state, position=pos, heading=heading, waypoints=tuple(waypoints))


def camera_depth(cam: CameraModel, ped: PedestrianState) -> float:
    return float(cam.to_camera(ped.center())[0, 2])


def full_body_box(cam: CameraModel, ped: PedestrianState) -> Optional[Box]:
    """Tight image box of the projected 3D corners, clipped to the image."""
    uv, valid = _project_many(cam, ped.corners())
    if not valid.any():
        return None
    uv = uv[valid]
    w, h = cam.resolution
    left = min(max(uv[:, 0].min(), 0.0), float(w))
    right = min(max(uv[:, 0].max(), 0.0), float(w))
    top = min(max(uv[:, 1].min(), 0.0), float(h))
    bottom = min(max(uv[:, 1].max(), 0.0), float(h))
    if right - left <= 0 or bottom - top <= 0:
        return None
    return (float(left), float(top), float(right - left), float(bottom - top))


def _cell_grid(lo: float, hi: float, stride: float) -> tuple[np.ndarray, np.ndarray]:
    # cells sit on the image lattice (multiples of stride), clipped to [lo, hi]
    start = np.floor(lo / stride) * stride
    edges = np.arange(start + stride, hi, stride)
    edges = np.concatenate([[lo], edges[edges > lo + 1e-9], [hi]])
    if len(edges) > 2 and edges[-1] - edges[-2] < 1e-9:
        edges = np.delete(edges, -2)
    return edges, 0.5 * (edges[:-1] + edges[1:])


def visible_extent(box: Box, occluders, stride: float = OCCLUSION_STRIDE) -> tuple[Optional[Box], float]:
    """Visible part of ``box`` given rectangles that lie in front of it.

    The box is cut into cells of side ``stride`` on the image lattice (border
    cells clipped to the box). Each cell records the fraction of its area hidden
    by the most-covering occluder; a cell is visible unless that fraction is 1.
    Visibility is the unhidden area over the box area.
    """
    left, top, width, height = box
    xe, _ = _cell_grid(left, left + width, stride)
    ye, _ = _cell_grid(top, top + height, stride)
    area = np.outer(np.diff(ye), np.diff(xe))
    hidden = np.zeros_like(area)
    for ol, ot, ow, oh in occluders:
        cx = np.clip(np.minimum(xe[1:], ol + ow) - np.maximum(xe[:-1], ol), 0.0, None)
        cy = np.clip(np.minimum(ye[1:], ot + oh) - np.maximum(ye[:-1], ot), 0.0, None)
        if not cx.any() or not cy.any():
            continue
        np.maximum(hidden, np.outer(cy, cx) / area, out=hidden)
    visible = hidden < 1.0 - 1e-9
    if not hidden.any():
        return box, 1.0
    if not visible.any():
        return None, 0.0
    ratio = float((area * (1.0 - hidden)).sum() / area.sum())
    cols = np.flatnonzero(visible.any(axis=0))
    rows = np.flatnonzero(visible.any(axis=1))
    vis_box = (float(xe[cols[0]]), float(ye[rows[0]]),
               float(xe[cols[-1] + 1] - xe[cols[0]]), float(ye[rows[-1] + 1] - ye[rows[0]]))
    return vis_box, ratio


def visible_box(cam: CameraModel, ped: PedestrianState, others,
                stride: float = OCCLUSION_STRIDE) -> tuple[Optional[Box], float]:
    box = full_body_box(cam, ped)
    if box is None:
        raise ValueError("pedestrian has no full-body box in this camera")
    depth = camera_depth(cam, ped)
    occluders = []
    for other in others:
        if other.identity == ped.identity or camera_depth(cam, other) >= depth:
            continue
        ob = full_body_box(cam, other)
        if ob is not None:
            occluders.append(ob)
    return visible_extent(box, occluders, stride)


@dataclass(frozen=True)
class GtBox:
    frame: int
    identity: int
    full_box: Box
    visible_box: Optional[Box]
    visibility: float


@dataclass
class SequenceTruth:
    config: ScenarioConfig
    frames: list[list[GtBox]]
    states: list[tuple[PedestrianState, ...]] = field(default_factory=list, repr=False)
    cameras: list[CameraModel] = field(default_factory=list, repr=False)

    @property
    def trajectories(self) -> dict[int, list[GtBox]]:
        out: dict[int, list[GtBox]] = {}
        for boxes in self.frames:
            for b in boxes:
                out.setdefault(b.identity, []).append(b)
        return out

    @property
    def identities(self) -> list[int]:
        return sorted({b.identity for boxes in self.frames for b in boxes})


@dataclass
class WorldState:
    pedestrians: dict[int, PedestrianState] = field(default_factory=dict)
    outside_frames: dict[int, int] = field(default_factory=dict)
    next_identity: int = 1


@dataclass(frozen=True)
class Spawn:
    position: tuple[float, float]


@dataclass(frozen=True)
class Despawn:
    identity: int


def in_frustum(cam: CameraModel, point) -> bool:
    c = cam.to_camera(point)[0]
    if not NEAR_PLANE <= c[2] <= FAR_PLANE:
        return False
    u = cam.focal_px * c[0] / c[2] + cam.principal_point[0]
    v = cam.focal_px * c[1] / c[2] + cam.principal_point[1]
    w, h = cam.resolution
    return 0.0 <= u <= w and 0.0 <= v <= h


def arena_around(cam: CameraModel) -> Arena:
    """40 m square centred on the middle of the camera's ground footprint."""
    mid = 0.5 * (NEAR_PLANE + FAR_PLANE)
    cx = cam.position[0] + mid * math.cos(cam.yaw)
    cy = cam.position[1] + mid * math.sin(cam.yaw)
    half = ARENA_SIZE / 2
    return (cx - half, cy - half, cx + half, cy + half)


def sample_frustum_position(cam: CameraModel, rng: np.random.Generator,
                            body_height: float = 1.7, attempts: int = 10_000) -> tuple[float, float]:
    x0, y0 = cam.position[0] - FAR_PLANE, cam.position[1] - FAR_PLANE
    for _ in range(attempts):
        x = float(rng.uniform(x0, x0 + 2 * FAR_PLANE))
        y = float(rng.uniform(y0, y0 + 2 * FAR_PLANE))
        if in_frustum(cam, (x, y, body_height / 2)):
            return (x, y)
    raise RuntimeError("camera frustum does not intersect the ground plane")


def count_in_frustum(world: WorldState, cam: CameraModel) -> int:
    return sum(in_frustum(cam, p.center()) for p in world.pedestrians.values())


def maintain_density(world: WorldState, cam: CameraModel, target: int,
                     rng: np.random.Generator, grace: int = EXIT_GRACE_FRAMES) -> list[Union[Spawn, Despawn]]:
    """Spawn/despawn actions that keep ``target`` pedestrians in the frustum.

    Expects ``world.outside_frames`` to be up to date for this frame.
    """
    if target < 0:
        raise ValueError("target must be >= 0")
    actions: list[Union[Spawn, Despawn]] = []
    inside = 0
    for ident in sorted(world.pedestrians):
        n_out = world.outside_frames.get(ident, 0)
        if n_out == 0:
            inside += 1
        elif n_out > grace:
            actions.append(Despawn(ident))
    for _ in range(max(0, target - inside)):
        actions.append(Spawn(sample_frustum_position(cam, rng)))
    return actions


def _new_pedestrian(identity: int, position, cfg: ScenarioConfig, rng: np.random.Generator,
                    arena: Arena) -> PedestrianState:
    height = float(np.clip(rng.normal(1.7, 0.07), 1.4, 2.0))
    mean, std = cfg.speed_dist
    speed = max(0.0, float(rng.normal(mean, std)))
    action = "walk" if rng.random() < cfg.action_mix else "run"
    if action == "run":
        speed *= 2.0
    waypoint = _random_waypoint(rng, arena)
    heading = math.atan2(waypoint[1] - position[1], waypoint[0] - position[0])
    return PedestrianState(
        identity=identity,
        position=(float(position[0]), float(position[1])),
        heading=heading,
        speed=speed,
        action=action,
        height=height,
        waypoints=(waypoint,),
        appearance_id=identity,
    )


def _advance_camera(cam: CameraModel, motion: CameraMotion, dt: float,
                    path: list[tuple[float, float]]) -> CameraModel:
    if motion.kind != "moving" or motion.speed == 0:
        return cam
    x, y, z = cam.position
    yaw = cam.yaw
    while path and math.hypot(path[0][0] - x, path[0][1] - y) <= motion.speed * dt:
        path.pop(0)
    if path:
        yaw = math.atan2(path[0][1] - y, path[0][0] - x)
    step = motion.speed * dt
    return replace(cam, position=(x + step * math.cos(yaw), y + step * math.sin(yaw), z), yaw=yaw)


def annotate_frame(frame: int, cam: CameraModel, peds, stride: float = OCCLUSION_STRIDE) -> list[GtBox]:
    """Ground-truth boxes for every rendered pedestrian (centre depth within near/far planes)."""
    entries = []
    for p in peds:
        depth = camera_depth(cam, p)
        if not NEAR_PLANE <= depth <= FAR_PLANE:
            continue
        box = full_body_box(cam, p)
        if box is not None:
            entries.append((depth, p.identity, box))
    out = []
    for depth, ident, box in entries:
        occluders = [ob for d, i, ob in entries if i != ident and d < depth]
        vis, ratio = visible_extent(box, occluders, stride)
        out.append(GtBox(frame, ident, box, vis, ratio))
    out.sort(key=lambda b: b.identity)
    return out


def generate_scenario(config: ScenarioConfig, stride: float = OCCLUSION_STRIDE) -> SequenceTruth:
    """Simulate one sequence; a pure function of ``config`` (seed included)."""
    config.validate()
    rng = np.random.default_rng([int(config.seed) & 0xFFFFFFFFFFFFFFFF, 0x5EED])
    dt = 1.0 / config.fps
    cam = make_camera(config.camera_view, config.resolution)
    cam_path = [tuple(w) for w in config.camera_motion.waypoints]
    world = WorldState()
    frames: list[list[GtBox]] = []
    states: list[tuple[PedestrianState, ...]] = []
    cameras: list[CameraModel] = []
    for frame in range(config.duration_frames):
        if frame > 0:
            cam = _advance_camera(cam, config.camera_motion, dt, cam_path)
            arena = arena_around(cam)
            for ident in sorted(world.pedestrians):
                world.pedestrians[ident] = step_pedestrian(world.pedestrians[ident], dt, rng, arena)
        for ident, ped in world.pedestrians.items():
            if in_frustum(cam, ped.center()):
                world.outside_frames[ident] = 0
            else:
                world.outside_frames[ident] = world.outside_frames.get(ident, 0) + 1
        arena = arena_around(cam)
        for action in maintain_density(world, cam, config.target_density, rng):
            if isinstance(action, Despawn):
                del world.pedestrians[action.identity]
                del world.outside_frames[action.identity]
            else:
                ident = world.next_identity
                world.next_identity += 1
                world.pedestrians[ident] = _new_pedestrian(ident, action.position, config, rng, arena)
                world.outside_frames[ident] = 0
        peds = tuple(world.pedestrians[i] for i in sorted(world.pedestrians))
        frames.append(annotate_frame(frame, cam, peds, stride))
        states.append(peds)
        cameras.append(cam)
    return SequenceTruth(config=config, frames=frames, states=states, cameras=cameras)
