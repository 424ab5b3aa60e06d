import json
import os

import pytest
from hypothesis import given, settings, strategies as st

from proxyscan.layout import (
    Compatibility, CompatibilityReport, ViolationKind, compute_storage_layout,
    diff_storage_layouts,
)

from conftest import LAYOUT, build_unit, fixture_text

with open(os.path.join(LAYOUT, "compiler_layouts.json"), encoding="utf-8") as _fh:
    COMPILER = json.load(_fh)

SOURCE_OF = {"Packing": "Packing.sol", "Box": "Box.sol", "Storage": "StorageV1.sol"}


def layout_of(path, name):
    unit = build_unit({path: fixture_text("layout", path)})
    return compute_storage_layout(unit.contract(name))


@pytest.mark.parametrize("name", sorted(COMPILER["layouts"]))
def test_matches_compiler(name):
    expected = [tuple(e) for e in COMPILER["layouts"][name]]
    got = [(a.var_name, a.slot, a.offset, a.size) for a in layout_of(SOURCE_OF.get(name, "Layouts.sol"), name)]
    assert got == expected


def test_oracle_covers_required_cases():
    assert len(COMPILER["layouts"]) >= 10
    assert COMPILER["layouts"]["Packing"] == [["a", 0, 0, 16], ["b", 0, 16, 16], ["c", 1, 0, 32]]
    assert COMPILER["layouts"]["Box"] == [["value", 0, 0, 20]]


def test_empty_layout():
    assert layout_of("Layouts.sol", "Empty") == []


def test_inherited_vars_first():
    layout = layout_of("Layouts.sol", "Derived")
    owners = [a.declaring_contract for a in layout]
    assert owners == sorted(owners, key=lambda o: o != "Base")


def test_unknown_type_is_diagnosed():
    unit = build_unit("contract A { uint8 a; Missing m; uint8 b; }")
    diags = []
    layout = compute_storage_layout(unit.contract("A"), diags)
    assert [(a.var_name, a.slot, a.offset, a.size) for a in layout] == [("a", 0, 0, 1), ("m", 1, 0, 32),
                                                                      ("b", 2, 0, 1)]
    assert diags


ALL = [(SOURCE_OF.get(n, "Layouts.sol"), n) for n in sorted(COMPILER["layouts"])]


@pytest.mark.parametrize("path, name", ALL)
def test_monotone_and_disjoint(path, name):
    layout = layout_of(path, name)
    cells = set()
    for prev, cur in zip(layout, layout[1:]):
        assert (prev.slot, prev.offset) < (cur.slot, cur.offset)
    for a in layout:
        if a.size <= 32:
            assert a.offset + a.size <= 32
            span = {(a.slot, b) for b in range(a.offset, a.offset + a.size)}
        else:
            span = {(a.slot + k, 0) for k in range(a.size // 32)}
        assert not cells & span
        cells |= span


def test_reorder_is_incompatible():
    report = diff_storage_layouts(layout_of("StorageV1.sol", "Storage"),
                                  layout_of("StorageV2Reordered.sol", "Storage"))
    assert report.status is Compatibility.INCOMPATIBLE
    assert {v.kind for v in report.violations} == {ViolationKind.REORDERED}


def test_append_is_compatible():
    report = diff_storage_layouts(layout_of("StorageV1.sol", "Storage"),
                                  layout_of("StorageV2Appended.sol", "Storage"))
    assert report.status is Compatibility.APPEND_ONLY_COMPATIBLE and not report.violations


def test_identical():
    a = layout_of("StorageV1.sol", "Storage")
    assert diff_storage_layouts(a, a).status is Compatibility.IDENTICAL


def _layout(src, name="C"):
    return compute_storage_layout(build_unit(src).contract(name))


@pytest.mark.parametrize("old, new, kind", [
    ("contract C { uint256 a; uint256 b; }", "contract C { uint128 a; uint256 b; }", ViolationKind.TYPE_CHANGED),
    ("contract C { uint256 a; uint256 b; }", "contract C { uint256 a; }", ViolationKind.REMOVED),
    ("contract C { uint256 a; uint256 b; }", "contract C { uint256 a; uint256 z; uint256 b; }",
     ViolationKind.INSERTED),
    ("contract B { uint256 x; } contract C is B { uint256 a; }", "contract C { uint256 a; }",
     ViolationKind.INHERITANCE_CHANGED),
])
def test_violation_kinds(old, new, kind):
    report = diff_storage_layouts(_layout(old), _layout(new))
    assert report.status is Compatibility.INCOMPATIBLE
    assert report.violations[0].kind is kind


def test_rename_in_place_warns():
    report = diff_storage_layouts(_layout("contract C { uint256 a; }"), _layout("contract C { uint256 renamed; }"))
    assert report.status is Compatibility.IDENTICAL and report.warnings


def test_report_invariant():
    with pytest.raises(ValueError):
        CompatibilityReport(Compatibility.INCOMPATIBLE)


_ELEMENTARY = ["bool", "uint8", "uint16", "uint32", "uint64", "uint128", "uint256", "address", "bytes4", "bytes32",
               "int24", "string", "bytes", "uint256[]", "mapping(address => uint256)", "uint8[3]", "address[2]"]


def _contract(types, start=0):
    return "contract C { " + " ".join(f"{t} v{i};" for i, t in enumerate(types, start)) + " }"


@given(st.lists(st.sampled_from(_ELEMENTARY), max_size=10), st.lists(st.sampled_from(_ELEMENTARY), min_size=1,
                                                                      max_size=5))
@settings(max_examples=100, deadline=None)
def test_append_property(base, tail):
    old = _layout(_contract(base))
    new = _layout(_contract(base + tail))
    assert diff_storage_layouts(old, new).status is Compatibility.APPEND_ONLY_COMPATIBLE
    assert diff_storage_layouts(old, old).status is Compatibility.IDENTICAL


@given(st.lists(st.sampled_from(_ELEMENTARY), min_size=2, max_size=8, unique=True), st.data())
@settings(max_examples=100, deadline=None)
def test_swapping_distinct_types_is_incompatible(types, data):
    i, j = sorted(data.draw(st.lists(st.integers(0, len(types) - 1), min_size=2, max_size=2, unique=True)))
    swapped = list(types)
    swapped[i], swapped[j] = swapped[j], swapped[i]
    old = _layout(_contract(types))
    new = compute_storage_layout(build_unit(
        "contract C { " + " ".join(f"{t} v{types.index(t)};" for t in swapped) + " }").contract("C"))
    assert diff_storage_layouts(old, new).status is Compatibility.INCOMPATIBLE
