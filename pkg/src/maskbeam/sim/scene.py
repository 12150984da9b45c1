"""Randomized acoustic scenes: room geometry, microphone arrays, source
placement, and per-component noise plans."""

import json
from dataclasses import dataclass, field

import numpy as np

WALL_MARGIN = 0.5  # minimum distance of any source/mic from a wall, meters
ROOM_WIDTH_RANGE = (3.0, 7.0)
ROOM_LENGTH_RANGE = (3.0, 9.0)
ROOM_HEIGHT_RANGE = (2.3, 3.5)
T60_RANGE = (0.1, 0.5)
SOURCE_HEIGHT_RANGE = (1.4, 1.8)
ARRAY_HEIGHT_RANGE = (1.0, 1.5)
RSNR_RANGE_DB = (-5.0, 20.0)
MAX_ABSORPTION = 0.95
ARRAY_KINDS = ("circular7", "rectangular6", "random", "explicit")

CIRCULAR_DIAMETER = 0.07
RECT_COLUMN_SPAN = 0.20
RECT_ROW_SPACING = 0.19


@dataclass
class NoiseSource:
    position: np.ndarray  # (3,) meters
    rsnr_db: float

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64)


@dataclass
class NoisePlan:
    diffuse_rsnr_db: float | None  # None renders a noiseless scene
    directional: list = field(default_factory=list)


@dataclass
class RoomScene:
    room_dims: np.ndarray  # (w, l, h) meters
    t60: float
    source_pos: np.ndarray  # (3,)
    mic_positions: np.ndarray  # (M, 3)
    array_kind: str
    noise_plan: NoisePlan
    seed: int
    sample_rate: int = 16000

    def __post_init__(self):
        self.room_dims = np.asarray(self.room_dims, dtype=np.float64)
        self.source_pos = np.asarray(self.source_pos, dtype=np.float64)
        self.mic_positions = np.asarray(self.mic_positions, dtype=np.float64)
        if self.mic_positions.ndim != 2 or self.mic_positions.shape[1] != 3:
            raise ValueError("mic_positions must have shape (M, 3)")

    @property
    def num_mics(self):
        return self.mic_positions.shape[0]

    def closest_mic(self):
        """Index of the microphone nearest to the speech source."""
        dists = np.linalg.norm(self.mic_positions - self.source_pos, axis=1)
        return int(np.argmin(dists))

    def to_dict(self):
        return {
            "room_dims": self.room_dims.tolist(),
            "t60": self.t60,
            "source_pos": self.source_pos.tolist(),
            "mic_positions": self.mic_positions.tolist(),
            "array_kind": self.array_kind,
            "noise_plan": {
                "diffuse_rsnr_db": self.noise_plan.diffuse_rsnr_db,
                "directional": [
                    {"position": src.position.tolist(), "rsnr_db": src.rsnr_db}
                    for src in self.noise_plan.directional
                ],
            },
            "seed": self.seed,
            "sample_rate": self.sample_rate,
        }

    @classmethod
    def from_dict(cls, data):
        plan = NoisePlan(
            diffuse_rsnr_db=data["noise_plan"]["diffuse_rsnr_db"],
            directional=[
                NoiseSource(src["position"], src["rsnr_db"])
                for src in data["noise_plan"]["directional"]
            ],
        )
        return cls(
            room_dims=data["room_dims"],
            t60=data["t60"],
            source_pos=data["source_pos"],
            mic_positions=data["mic_positions"],
            array_kind=data["array_kind"],
            noise_plan=plan,
            seed=data["seed"],
            sample_rate=data.get("sample_rate", 16000),
        )

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def circular_array(center, yaw=0.0, diameter=CIRCULAR_DIAMETER):
    """Seven-microphone circular layout: six on the rim, one in the center.

    Mic order matches the usual labeling 1..7 with the center mic last.
    """
    radius = diameter / 2.0
    angles = yaw + np.arange(6) * (np.pi / 3.0)
    rim = np.stack(
        [
            center[0] + radius * np.cos(angles),
            center[1] + radius * np.sin(angles),
            np.full(6, center[2]),
        ],
        axis=1,
    )
    return np.vstack([rim, np.asarray(center)[None, :]])


def rectangular_array(center, yaw=0.0, column_span=RECT_COLUMN_SPAN, row_spacing=RECT_ROW_SPACING):
    """Six-microphone 2 x 3 rectangular layout; mics 1-3 top row, 4-6 bottom."""
    xs = np.array([-column_span / 2.0, 0.0, column_span / 2.0])
    ys = np.array([row_spacing / 2.0, -row_spacing / 2.0])
    local = np.array([[x, y] for y in ys for x in xs])
    rot = np.array([[np.cos(yaw), -np.sin(yaw)], [np.sin(yaw), np.cos(yaw)]])
    planar = local @ rot.T + np.asarray(center)[:2]
    return np.hstack([planar, np.full((6, 1), center[2])])


def _in_bounds(points, room_dims, margin=WALL_MARGIN):
    points = np.atleast_2d(points)
    return bool(
        np.all(points >= margin - 1e-12) and np.all(points <= room_dims - margin + 1e-12)
    )


def sabine_absorption(room_dims, t60):
    """Uniform wall absorption coefficient from Sabine's formula."""
    w, l, h = room_dims
    volume = w * l * h
    surface = 2.0 * (w * l + w * h + l * h)
    return 0.161 * volume / (surface * t60)


def _sample_point(rng, room_dims, height_range=None, margin=WALL_MARGIN):
    lo = np.full(3, margin)
    hi = np.asarray(room_dims) - margin
    point = rng.uniform(lo, hi)
    if height_range is not None:
        zlo = max(margin, height_range[0])
        zhi = min(room_dims[2] - margin, height_range[1])
        if zhi < zlo:
            return None
        point[2] = rng.uniform(zlo, zhi)
    return point


def sample_scene(array_kind, seed, num_directional=None, mic_positions=None, max_tries=100):
    """Draw a random scene satisfying every placement constraint.

    Parameters
    ----------
    array_kind : str
        One of "circular7", "rectangular6", "random", "explicit".
    seed : int
        Drives all randomness; equal seeds give identical scenes.
    num_directional : int, optional
        Force the directional-noise source count (0..3). By default half the
        scenes are diffuse-only and the rest draw 1-3 directional sources.
    mic_positions : array, optional
        Required for "explicit"; ignored otherwise.
    """
    if array_kind not in ARRAY_KINDS:
        raise ValueError(f"unknown array kind {array_kind!r} (choose from {ARRAY_KINDS})")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        room_dims = np.array(
            [
                rng.uniform(*ROOM_WIDTH_RANGE),
                rng.uniform(*ROOM_LENGTH_RANGE),
                rng.uniform(*ROOM_HEIGHT_RANGE),
            ]
        )
        t60 = rng.uniform(*T60_RANGE)
        if sabine_absorption(room_dims, t60) > MAX_ABSORPTION:
            # Physically unrealizable absorption for this room/t60 combination.
            continue

        mics = _sample_array(rng, array_kind, room_dims, mic_positions)
        if mics is None or not _in_bounds(mics, room_dims):
            continue

        source = _sample_point(rng, room_dims, SOURCE_HEIGHT_RANGE)
        if source is None or not _in_bounds(source, room_dims):
            continue
        if np.min(np.linalg.norm(mics - source, axis=1)) < 0.2:
            continue

        plan = _sample_noise_plan(rng, room_dims, num_directional)
        if plan is None:
            continue
        return RoomScene(
            room_dims=room_dims,
            t60=t60,
            source_pos=source,
            mic_positions=mics,
            array_kind=array_kind,
            noise_plan=plan,
            seed=seed,
        )
    raise RuntimeError(f"could not sample a valid scene in {max_tries} tries (seed {seed})")


def _sample_array(rng, array_kind, room_dims, mic_positions):
    if array_kind == "explicit":
        if mic_positions is None:
            raise ValueError("explicit array kind requires mic_positions")
        return np.asarray(mic_positions, dtype=np.float64)
    if array_kind == "random":
        mics = [
            _sample_point(rng, room_dims, ARRAY_HEIGHT_RANGE) for _ in range(6)
        ]
        if any(m is None for m in mics):
            return None
        return np.stack(mics)
    center = _sample_point(rng, room_dims, ARRAY_HEIGHT_RANGE)
    if center is None:
        return None
    yaw = rng.uniform(0.0, 2.0 * np.pi)
    if array_kind == "circular7":
        return circular_array(center, yaw)
    return rectangular_array(center, yaw)


def _sample_noise_plan(rng, room_dims, num_directional):
    diffuse_rsnr = rng.uniform(*RSNR_RANGE_DB)
    if num_directional is None:
        count = 0 if rng.uniform() < 0.5 else int(rng.integers(1, 4))
    else:
        if not 0 <= num_directional <= 3:
            raise ValueError("num_directional must be in [0, 3]")
        count = num_directional
    directional = []
    for _ in range(count):
        pos = _sample_point(rng, room_dims)
        if pos is None:
            return None
        directional.append(NoiseSource(pos, rng.uniform(*RSNR_RANGE_DB)))
    return NoisePlan(diffuse_rsnr_db=diffuse_rsnr, directional=directional)
