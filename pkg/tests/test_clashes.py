import itertools
import os

import pytest
from Crypto.Hash import keccak as oracle_keccak

from proxyscan.clashes import SHADOW_NOTE, Clash, ClashKind, external_signatures, find_selector_clashes

from conftest import SELECTORS, build_unit, fixture_text


def oracle(sig):
    return oracle_keccak.new(digest_bits=256, data=sig.encode()).digest()[:4]


def contracts():
    unit = build_unit({f: fixture_text("selectors", f) for f in sorted(os.listdir(SELECTORS))})
    return unit, {c.name: c for c in unit}


def brute_force(proxy, impl):
    out = []
    for a, b in itertools.product(external_signatures(proxy), external_signatures(impl)):
        if oracle(a) == oracle(b):
            out.append((oracle(a), a, b, ClashKind.SHADOW if a == b else ClashKind.COLLISION))
    return sorted(out)


def test_documented_collision():
    _, cs = contracts()
    clashes = find_selector_clashes(cs["ClashingProxy"], cs["Implementation"])
    assert [(c.selector_hex, c.proxy_signature, c.impl_signature, c.kind) for c in clashes] == [
        ("0x42966c68", "burn(uint256)", "collate_propagate_storage(bytes16)", ClashKind.COLLISION)]
    assert oracle("burn(uint256)") == oracle("collate_propagate_storage(bytes16)")


def test_disjoint():
    _, cs = contracts()
    assert find_selector_clashes(cs["DisjointProxy"], cs["DisjointLogic"]) == []


def test_self_diff_is_shadow_only():
    _, cs = contracts()
    clashes = find_selector_clashes(cs["Implementation"], cs["Implementation"])
    assert clashes and all(c.kind is ClashKind.SHADOW and c.note == SHADOW_NOTE for c in clashes)
    assert "balances(address)" in {c.proxy_signature for c in clashes}


def test_empty():
    unit = build_unit("contract A {} contract B {}")
    assert find_selector_clashes(unit.contract("A"), unit.contract("B")) == []


def test_only_external_surface():
    unit = build_unit("""contract A {
        uint256 internal hidden;
        uint256 public shown;
        function f() internal {}
        function g() private {}
        function h(uint x) external {}
        function k() public {}
    }""")
    assert sorted(external_signatures(unit.contract("A"))) == ["h(uint256)", "k()", "shown()"]


def test_collision_invariant():
    with pytest.raises(ValueError):
        Clash(b"\x00" * 4, "f()", "f()", ClashKind.COLLISION)


def _all_pairs():
    _, cs = contracts()
    return [(a, b) for a in sorted(cs) for b in sorted(cs)]


@pytest.mark.parametrize("proxy, impl", _all_pairs())
def test_matches_brute_force(proxy, impl):
    _, cs = contracts()
    got = [(c.selector, c.proxy_signature, c.impl_signature, c.kind)
           for c in find_selector_clashes(cs[proxy], cs[impl])]
    assert got == brute_force(cs[proxy], cs[impl])
    assert [c[0] for c in got] == sorted(c[0] for c in got)
