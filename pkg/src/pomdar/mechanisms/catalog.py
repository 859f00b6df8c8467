"""The 18-task benchmark catalog.

Twelve manipulation tasks across three scaffolded configurations plus six
pure grasping tasks. Geometry and thresholds are catalog-file defaults; a
different catalog file can be loaded for research variants, but the stock
catalog always validates to exactly these 18 task ids with their pinned
axis constraints.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field

import numpy as np
import yaml

from ..geometry import make_transform, rpy_matrix
from ..grasp import Primitive
from .base import Mechanism
from .curved_rail import CurvedRailMechanism
from .grasp_task import GraspMechanism
from .notch_rod import NotchRodMechanism
from .rotary import GearMechanism, RotorMechanism, ScrewMechanism

CATALOG_FORMAT_VERSION = 1

TASK_IDS = (
    "V1", "V2", "V3",
    "H1", "H2", "H3", "H4", "H5",
    "C1", "C2", "C3", "C4",
    "G1", "G2", "G3", "G4", "G5", "G6",
)

#: wrist-motion constraint per task: the arm is fixed for the fidget,
#: pinch, and chopsticks tasks, vertical for the V and rotor/screw tasks,
#: horizontal for the first three rail tasks, free for grasping.
AXIS_TAGS = {
    "V1": "vertical", "V2": "vertical", "V3": "vertical",
    "H1": "horizontal", "H2": "horizontal", "H3": "horizontal",
    "H4": "fixed", "H5": "fixed",
    "C1": "vertical", "C2": "vertical", "C3": "vertical", "C4": "fixed",
    "G1": "free", "G2": "free", "G3": "free", "G4": "free", "G5": "free", "G6": "free",
}

MANIPULATION_TASKS = TASK_IDS[:12]
GRASP_TASKS = TASK_IDS[12:]


class CatalogError(ValueError):
    """Malformed or incomplete task catalog."""


@dataclass(frozen=True)
class HandStart:
    wrist: np.ndarray  # 4x4
    q: np.ndarray  # (16,) radians

    def __post_init__(self):
        object.__setattr__(self, "wrist", np.asarray(self.wrist, dtype=float))
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))


@dataclass(frozen=True)
class TaskDef:
    id: str
    name: str
    configuration: str  # vertical | horizontal | rotation | grasp
    axis_tag: str
    mechanism_type: str
    mechanism_params: dict
    object: Primitive
    hand_start: HandStart
    group: str = "manipulation"  # manipulation | grasp
    # where scripted policies pinch the object: straddle direction in the
    # object frame and which side the thumb takes
    grip: dict = field(default_factory=lambda: {"axis": [0.0, 1.0, 0.0], "thumb_side": 1})

    def build_mechanism(self) -> Mechanism:
        return build_mechanism(self.mechanism_type, self.mechanism_params)

    @property
    def grip_axis(self) -> np.ndarray:
        return np.asarray(self.grip.get("axis", [0.0, 1.0, 0.0]), dtype=float)

    @property
    def thumb_side(self) -> int:
        return int(self.grip.get("thumb_side", 1))


_MECHANISMS = {
    "notch_rod": lambda p: NotchRodMechanism(
        notches=[(n["z"], n["half_angle_deg"]) for n in p["notches"]],
        rod_length=p.get("rod_length", 0.15),
        eps_z=p.get("eps_z", 0.005),
        center0=tuple(p.get("center0", (0.0, 0.0, 0.0))),
    ),
    "curved_rail": lambda p: CurvedRailMechanism(
        sections=[(s["length"], s["rotation_deg"]) for s in p["sections"]],
        heading_tol_deg=p.get("heading_tol_deg", 10.0),
        stick_limit_deg=p.get("stick_limit_deg"),
        center0=tuple(p.get("center0", (0.0, 0.0, 0.0))),
    ),
    "rotor": lambda p: RotorMechanism(
        ratchet_direction=p.get("ratchet_direction", 1),
        axis=tuple(p.get("axis", (0.0, 1.0, 0.0))),
        center=tuple(p.get("center", (0.0, 0.0, 0.0))),
    ),
    "gear": lambda p: GearMechanism(
        ratio=p.get("ratio", 3.0),
        axis=tuple(p.get("axis", (0.0, 1.0, 0.0))),
        center=tuple(p.get("center", (0.0, 0.0, 0.0))),
    ),
    "screw": lambda p: ScrewMechanism(
        pitch=p.get("pitch", 0.002),
        travel=p.get("travel", 0.006),
        unscrew_direction=p.get("unscrew_direction", 1),
        axis=tuple(p.get("axis", (0.0, 0.0, 1.0))),
        center=tuple(p.get("center", (0.0, 0.0, 0.0))),
    ),
    "grasp": lambda p: GraspMechanism(
        primitive=_parse_primitive(p["object"]),
        start_position=tuple(p["start_position"]),
        lift_threshold=p["lift_threshold"],
        target_min=tuple(p["target_min"]),
        target_max=tuple(p["target_max"]),
        drop_grace=p.get("drop_grace", 0.1),
    ),
}


def build_mechanism(mechanism_type: str, params: dict) -> Mechanism:
    try:
        factory = _MECHANISMS[mechanism_type]
    except KeyError:
        raise CatalogError(f"unknown mechanism type {mechanism_type!r}") from None
    return factory(params)


def _parse_primitive(d: dict) -> Primitive:
    return Primitive(
        shape=d["shape"],
        radius=float(d.get("radius", 0.0)),
        height=float(d.get("height", 0.0)),
        half_extents=tuple(d.get("half_extents", (0.0, 0.0, 0.0))),
    )


def _parse_hand_start(d: dict) -> HandStart:
    R = rpy_matrix(*np.radians(np.asarray(d.get("wrist_rpy_deg", [0, 0, 0]), float)))
    wrist = make_transform(R, np.asarray(d.get("wrist_xyz", [0, 0, 0]), float))
    q = np.asarray(d.get("q", [0.0] * 16), dtype=float)
    return HandStart(wrist=wrist, q=q)


class Catalog:
    def __init__(self, tasks: list[TaskDef]):
        self.tasks = {t.id: t for t in tasks}
        ids = tuple(self.tasks)
        if ids != TASK_IDS:
            raise CatalogError(
                f"catalog must define exactly the {len(TASK_IDS)} benchmark tasks in order; got {ids}"
            )
        for t in tasks:
            if t.axis_tag != AXIS_TAGS[t.id]:
                raise CatalogError(
                    f"task {t.id}: axis tag {t.axis_tag!r} conflicts with required {AXIS_TAGS[t.id]!r}"
                )

    def __len__(self) -> int:
        return len(self.tasks)

    def __iter__(self):
        return iter(self.tasks.values())

    def __contains__(self, task_id) -> bool:
        return task_id in self.tasks

    def get(self, task_id: str) -> TaskDef:
        try:
            return self.tasks[task_id]
        except KeyError:
            raise CatalogError(
                f"unknown task {task_id!r}; valid ids: {', '.join(TASK_IDS)}"
            ) from None

    @property
    def manipulation(self) -> list[TaskDef]:
        return [t for t in self if t.group == "manipulation"]

    @property
    def grasping(self) -> list[TaskDef]:
        return [t for t in self if t.group == "grasp"]


def parse_catalog(data: dict) -> Catalog:
    version = data.get("format_version")
    if version != CATALOG_FORMAT_VERSION:
        raise CatalogError(
            f"unsupported catalog format_version {version!r} (expected {CATALOG_FORMAT_VERSION})"
        )
    tasks = []
    for d in data["tasks"]:
        tasks.append(
            TaskDef(
                id=d["id"],
                name=d["name"],
                configuration=d["configuration"],
                axis_tag=d["axis_tag"],
                mechanism_type=d["mechanism"]["type"],
                mechanism_params={k: v for k, v in d["mechanism"].items() if k != "type"},
                object=_parse_primitive(d["object"]),
                hand_start=_parse_hand_start(d.get("hand_start", {})),
                group="grasp" if d["id"].startswith("G") else "manipulation",
                grip=d.get("grip", {"axis": [0.0, 1.0, 0.0], "thumb_side": 1}),
            )
        )
    return Catalog(tasks)


def load_catalog(path=None) -> Catalog:
    if path is None:
        return default_catalog()
    with open(path) as f:
        return parse_catalog(yaml.safe_load(f))


_DEFAULT: Catalog | None = None


def default_catalog() -> Catalog:
    global _DEFAULT
    if _DEFAULT is None:
        ref = importlib.resources.files("pomdar.data").joinpath("default_catalog.yaml")
        _DEFAULT = parse_catalog(yaml.safe_load(ref.read_text()))
    return _DEFAULT


def task_catalog() -> list[TaskDef]:
    """The 18 benchmark task definitions, in catalog order."""
    return list(default_catalog())
