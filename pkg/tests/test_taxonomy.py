import pytest

from thermofault.taxonomy import (
    EQUIPMENT_TYPES,
    STATUSES,
    SUBCATEGORIES,
    EquipmentType,
    Status,
    SubcategoryId,
    parse_equipment_type,
    parse_status,
    subcategory_from_index,
)


def test_exactly_ten_subcategories():
    assert len(SUBCATEGORIES) == 10
    assert len(set(SUBCATEGORIES)) == 10


def test_equipment_type_strings():
    assert {t.value for t in EquipmentType} == {
        "transformer",
        "bushing",
        "voltage_transformer",
        "current_transformer",
        "arrester",
    }
    assert [s.value for s in Status] == ["normal", "fault"]


def test_index_formula():
    for subcat in SUBCATEGORIES:
        t = EQUIPMENT_TYPES.index(subcat.equipment_type)
        s = STATUSES.index(subcat.status)
        assert subcat.index == 2 * t + s


def test_index_round_trip():
    for m in range(10):
        assert subcategory_from_index(m).index == m
    with pytest.raises(ValueError):
        subcategory_from_index(10)
    with pytest.raises(ValueError):
        subcategory_from_index(-1)


def test_sorting_follows_index():
    shuffled = list(SUBCATEGORIES[::-1])
    assert [c.index for c in sorted(shuffled)] == list(range(10))


def test_label():
    sub = SubcategoryId(EquipmentType.BUSHING, Status.FAULT)
    assert sub.label == "bushing:fault"


def test_parse_equipment_type():
    assert parse_equipment_type("arrester") is EquipmentType.ARRESTER
    with pytest.raises(ValueError):
        parse_equipment_type("capacitor")


def test_parse_status():
    assert parse_status("normal") is Status.NORMAL
    assert parse_status("fault") is Status.FAULT
    assert parse_status(None) is None
    with pytest.raises(ValueError):
        parse_status("broken")
