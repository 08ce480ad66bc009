"""Equipment types, statuses, and the 10 subcategory identifiers."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import total_ordering


class EquipmentType(Enum):
    TRANSFORMER = "transformer"
    BUSHING = "bushing"
    VOLTAGE_TRANSFORMER = "voltage_transformer"
    CURRENT_TRANSFORMER = "current_transformer"
    ARRESTER = "arrester"


class Status(Enum):
    NORMAL = "normal"
    FAULT = "fault"


EQUIPMENT_TYPES = tuple(EquipmentType)
STATUSES = tuple(Status)


@total_ordering
@dataclass(frozen=True)
class SubcategoryId:
    """One of the 10 classes: an equipment type paired with normal/fault."""

    equipment_type: EquipmentType
    status: Status

    @property
    def index(self) -> int:
        """Class index m in 0..9: 2 * type_index + status_index."""
        return 2 * EQUIPMENT_TYPES.index(self.equipment_type) + STATUSES.index(self.status)

    @property
    def label(self) -> str:
        return f"{self.equipment_type.value}:{self.status.value}"

    def __lt__(self, other: "SubcategoryId") -> bool:
        return self.index < other.index


SUBCATEGORIES: tuple[SubcategoryId, ...] = tuple(
    SubcategoryId(t, s) for t in EQUIPMENT_TYPES for s in STATUSES
)


def subcategory_from_index(m: int) -> SubcategoryId:
    if not 0 <= m < len(SUBCATEGORIES):
        raise ValueError(f"subcategory index {m} out of range 0..{len(SUBCATEGORIES) - 1}")
    return SUBCATEGORIES[m]


def parse_equipment_type(name: str) -> EquipmentType:
    try:
        return EquipmentType(name)
    except ValueError:
        valid = ", ".join(t.value for t in EQUIPMENT_TYPES)
        raise ValueError(f"unknown equipment type {name!r}; expected one of: {valid}") from None


def parse_status(name: str | None) -> Status | None:
    if name is None:
        return None
    try:
        return Status(name)
    except ValueError:
        raise ValueError(f"unknown status {name!r}; expected 'normal', 'fault', or null") from None
