"""The 22-class action registry: 10 hand-face gestures, 5 activities,
6 head motions, and one null class.

The registry is data-driven. Slots whose names are not pinned down anywhere
carry explicit `unnamed_*` placeholders; edit the JSON registry file (see
save_registry / load_registry) to rename them without touching code. Motion
models in the simulator are keyed by label id, so renaming is free.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import RegistryError

CATEGORIES = ("gesture", "activity", "head_motion", "null")
CATEGORY_COUNTS = {"gesture": 10, "activity": 5, "head_motion": 6, "null": 1}
N_LABELS = 22


@dataclass(frozen=True)
class GestureLabel:
    id: int
    name: str
    category: str

    def validate(self):
        if not 0 <= self.id < N_LABELS:
            raise RegistryError(f"label id {self.id} outside [0, {N_LABELS})")
        if self.category not in CATEGORIES:
            raise RegistryError(f"unknown category {self.category!r}")
        return self


_DEFAULT_ENTRIES = [
    # hand-face gestures
    (0, "touching_earlobe", "gesture"),
    (1, "tapping_temple", "gesture"),
    (2, "rubbing_forehead", "gesture"),
    (3, "squeezing", "gesture"),
    (4, "unnamed_gesture_5", "gesture"),
    (5, "unnamed_gesture_6", "gesture"),
    (6, "unnamed_gesture_7", "gesture"),
    (7, "unnamed_gesture_8", "gesture"),
    (8, "unnamed_gesture_9", "gesture"),
    (9, "unnamed_gesture_10", "gesture"),
    # everyday activities
    (10, "drinking", "activity"),
    (11, "brushing_teeth", "activity"),
    (12, "skincare", "activity"),
    (13, "coughing", "activity"),
    (14, "unnamed_activity_5", "activity"),
    # head motions
    (15, "nodding", "head_motion"),
    (16, "head_shaking", "head_motion"),
    (17, "head_rotation_left", "head_motion"),
    (18, "head_rotation_right", "head_motion"),
    (19, "unnamed_head_motion_5", "head_motion"),
    (20, "unnamed_head_motion_6", "head_motion"),
    # everything else
    (21, "null", "null"),
]


class LabelRegistry:
    """Ordered, validated collection of the 22 gesture/activity labels."""

    def __init__(self, labels: list[GestureLabel]):
        ids = [lab.id for lab in labels]
        if sorted(ids) != list(range(N_LABELS)):
            raise RegistryError(
                f"registry must contain ids 0..{N_LABELS - 1} exactly once, got {sorted(ids)}"
            )
        names = [lab.name for lab in labels]
        if len(set(names)) != len(names):
            raise RegistryError("label names must be unique")
        for lab in labels:
            lab.validate()
        counts = {cat: 0 for cat in CATEGORIES}
        for lab in labels:
            counts[lab.category] += 1
        if counts != CATEGORY_COUNTS:
            raise RegistryError(
                f"category counts {counts} do not match the required {CATEGORY_COUNTS}"
            )
        self._by_id = {lab.id: lab for lab in labels}
        self._by_name = {lab.name: lab for lab in labels}

    def __len__(self) -> int:
        return N_LABELS

    def __iter__(self):
        return (self._by_id[i] for i in range(N_LABELS))

    def get(self, key) -> GestureLabel:
        """Look up by integer id or by name."""
        if isinstance(key, GestureLabel):
            key = key.id
        if isinstance(key, (int,)):
            if key not in self._by_id:
                raise RegistryError(f"unknown label id {key}")
            return self._by_id[key]
        if key not in self._by_name:
            raise RegistryError(f"unknown label name {key!r}")
        return self._by_name[key]

    def by_category(self, category: str) -> list[GestureLabel]:
        if category not in CATEGORIES:
            raise RegistryError(f"unknown category {category!r}")
        return [lab for lab in self if lab.category == category]

    @property
    def names(self) -> list[str]:
        return [lab.name for lab in self]


def default_registry() -> LabelRegistry:
    return LabelRegistry([GestureLabel(i, n, c) for i, n, c in _DEFAULT_ENTRIES])


def save_registry(path, registry: LabelRegistry) -> None:
    entries = [{"id": lab.id, "name": lab.name, "category": lab.category} for lab in registry]
    Path(path).write_text(json.dumps(entries, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_registry(path) -> LabelRegistry:
    try:
        entries = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise RegistryError(f"{path}: not valid JSON: {exc}") from exc
    try:
        labels = [GestureLabel(int(e["id"]), str(e["name"]), str(e["category"])) for e in entries]
    except (KeyError, TypeError) as exc:
        raise RegistryError(f"{path}: malformed registry entry: {exc}") from exc
    return LabelRegistry(labels)
