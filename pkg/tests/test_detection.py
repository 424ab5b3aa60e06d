import glob
import os
import re

import pytest

from proxyscan.detection import (
    MAX_CALL_DEPTH, Mechanism, ProxyFinding, find_delegate_var_from_name, find_delegatecall_in_asm,
    find_delegatecall_in_expression, is_proxy, raw_call_arguments,
)
from proxyscan.frontend.ast import AssemblyStmt, Version, walk
from proxyscan.model import NodeType, Scope, build_cfg

from conftest import FIXTURES, build_unit, fixture_text

SOL_FILES = sorted(glob.glob(os.path.join(FIXTURES, "**", "*.sol"), recursive=True))
ASM_FILES = [p for p in SOL_FILES if "assembly" in open(p, encoding="utf-8").read()]
OLD, NEW = Version(0, 5, 17), Version(0, 8, 26)


def _rel(paths):
    return [os.path.relpath(p, FIXTURES) for p in paths]


def _unit(path, version=None):
    with open(path, encoding="utf-8") as fh:
        return build_unit({os.path.basename(path): fh.read()}, version)


def admin_example():
    unit = build_unit(fixture_text("corpus", "AdminUpgradeableProxy.sol"))
    return unit, unit.contract("AdminUpgradeableProxy")


def test_admin_example_finding():
    unit, c = admin_example()
    f = is_proxy(c, unit)
    assert f.is_proxy and f.mechanism is Mechanism.EXPRESSION_DELEGATECALL
    assert f.delegates_to.name == "implementation"
    assert f.delegates_to.scope is Scope.STATE
    assert f.delegates_to.declaring_contract == "AdminUpgradeableProxy"


def test_no_fallback_is_not_proxy():
    unit = build_unit("contract T { address t; function f() public { t.delegatecall(''); } }")
    f = is_proxy(unit.contract("T"), unit)
    assert f == ProxyFinding()


def test_event_only_fallback():
    unit = build_unit(fixture_text("corpus", "UpgradeProxy.sol"))
    assert not is_proxy(unit.contract("UpgradeProxy"), unit).is_proxy


def test_negative_finding_invariant():
    with pytest.raises(ValueError):
        ProxyFinding(is_proxy=False, mechanism=Mechanism.ASM_YUL)


def _asm_of(unit, contract, fn_name=None):
    c = unit.contract(contract)
    fn = c.fallback if fn_name is None else c.functions_named(fn_name)[0]
    (stmt,) = [n for n in walk(fn.body) if isinstance(n, AssemblyStmt)]
    return c, fn, stmt.block


RAW_SRC = """pragma solidity ^0.4.24;
contract P {
    address impl;
    function () payable public {
        address ptr = impl;
        assembly {
            let result := delegatecall(gas, impl, ptr, calldatasize, 0, 0)
        }
    }
}"""


def test_raw_text_target_resolved_via_scope():
    unit = build_unit(RAW_SRC)
    c, fn, block = _asm_of(unit, "P")
    assert block.raw_text is not None
    found, var, slot = find_delegatecall_in_asm(block, fn, contract=c, unit=unit)
    assert found and var.name == "impl" and var.scope is Scope.STATE and slot is None


def test_yul_sload_literal():
    unit = _unit(os.path.join(FIXTURES, "asm", "SloadLiteralProxy.sol"), NEW)
    c, fn, block = _asm_of(unit, "SloadLiteralProxy")
    assert block.yul_ast is not None
    found, var, slot = find_delegatecall_in_asm(block, fn, contract=c, unit=unit)
    assert found and var is None
    assert slot == 0x360894a13ba1a3210667c828492db98dca3e2076cc3735a920a3ca505d382bbc


def test_asm_without_delegatecall():
    unit = build_unit("pragma solidity ^0.8.0; contract A { fallback() external { assembly { let x := sload(0) } } }")
    c, fn, block = _asm_of(unit, "A")
    assert find_delegatecall_in_asm(block, fn, contract=c, unit=unit) == (False, None, None)


def test_raw_call_arguments_spanning_lines():
    text = "let r := delegatecall(\n  gas,\n  add(impl, 0),\n  0, 0, 0, 0)\n"
    assert raw_call_arguments(text) == [["gas", "add(impl, 0)", "0", "0", "0", "0"]]


def _expression_nodes(fn):
    return [n for n in build_cfg(fn) if n.node_type in (NodeType.EXPRESSION, NodeType.VARIABLE_DECL)]


def test_expression_admin_example():
    unit, c = admin_example()
    (node,) = _expression_nodes(c.fallback)
    found, var = find_delegatecall_in_expression(node, contract=c, unit=unit)
    assert found and var.name == "implementation"


def test_expression_plain_call_is_not_delegatecall():
    unit = build_unit("contract A { address target; function () external { target.call(msg.data); } }")
    c = unit.contract("A")
    (node,) = _expression_nodes(c.fallback)
    assert find_delegatecall_in_expression(node, contract=c, unit=unit) == (False, None)


def test_expression_nested_call_receiver_left_unresolved():
    src = """pragma solidity ^0.8.0;
interface IBeacon { function implementation() external view returns (address); }
contract B {
    address beacon;
    fallback() external payable {
        (bool ok, ) = IBeacon(beacon).implementation().delegatecall(msg.data);
        require(ok);
    }
}"""
    unit = build_unit(src)
    c = unit.contract("B")
    node = _expression_nodes(c.fallback)[0]
    assert find_delegatecall_in_expression(node, contract=c, unit=unit) == (True, None)
    # the driver follows the external call
    f = is_proxy(c, unit)
    assert f.is_proxy and f.external_lookup.method == "implementation" and f.external_lookup.arity == 0
    assert f.external_lookup.receiver.name == "beacon"


def test_beacon_lookup_resolved_to_implementing_contract():
    unit = build_unit(fixture_text("corpus", "BeaconProxy.sol"))
    f = is_proxy(unit.contract("BeaconProxy"), unit)
    assert f.external_lookup.resolved_contract == "UpgradeableBeacon"
    assert f.delegates_to.name == "_implementation"
    assert f.delegates_to.declaring_contract == "UpgradeableBeacon"


def test_find_delegate_var_from_name():
    src = """pragma solidity ^0.8.0;
contract Other { address shared; }
contract P {
    address implementation;
    fallback() external payable {
        assembly { let impl := sload(0) }
    }
}"""
    unit = build_unit(src)
    c = unit.contract("P")
    local = find_delegate_var_from_name("impl", c.fallback, c, unit)
    assert local.scope is Scope.LOCAL and not local.is_constant
    state = find_delegate_var_from_name("implementation", c.fallback, c, unit)
    assert state.scope is Scope.STATE and state.declaring_contract == "P"
    other = find_delegate_var_from_name("shared", c.fallback, c, unit)
    assert other.declaring_contract == "Other"
    assert find_delegate_var_from_name("xyzzy", c.fallback, c, unit) is None


def test_locals_shadow_state():
    unit = build_unit("contract P { address impl; function () external { address impl = msg.sender; } }")
    c = unit.contract("P")
    assert find_delegate_var_from_name("impl", c.fallback, c, unit).scope is Scope.LOCAL


def test_receive_is_searched():
    src = """pragma solidity ^0.8.0;
contract R {
    address impl;
    receive() external payable { (bool ok, ) = impl.delegatecall(""); require(ok); }
}"""
    unit = build_unit(src)
    f = is_proxy(unit.contract("R"), unit)
    assert f.is_proxy and f.delegates_to.name == "impl"


def _chain(depth):
    """fallback -> f1 -> ... -> f<depth> where the last one delegates."""
    funcs = []
    for i in range(1, depth + 1):
        body = "impl.delegatecall(msg.data);" if i == depth else f"f{i + 1}();"
        funcs.append(f"function f{i}() internal {{ {body} }}")
    return ("contract C { address impl; function () external payable { f1(); } "
            + " ".join(funcs) + " }")


@pytest.mark.parametrize("depth, expected", [(1, True), (2, True), (3, False)])
def test_internal_call_depth(depth, expected):
    assert MAX_CALL_DEPTH == 2
    unit = build_unit(_chain(depth))
    assert is_proxy(unit.contract("C"), unit).is_proxy is expected


def test_parameter_bound_to_caller_argument():
    unit = _unit(os.path.join(FIXTURES, "asm", "InternalDelegateProxy.sol"))
    f = is_proxy(unit.contract("InternalDelegateProxy"), unit)
    assert f.delegates_to.name == "logic" and f.delegates_to.scope is Scope.STATE


def test_selector_keyed_mapping():
    unit = build_unit(fixture_text("corpus", "Diamond.sol"))
    f = is_proxy(unit.contract("Diamond"), unit)
    assert f.is_proxy and f.selector_keyed and f.delegates_to.is_mapping


def test_unresolved_target_diagnostic():
    unit = build_unit(fixture_text("corpus", "AdminUpgradeabilityProxy.sol"))
    f = is_proxy(unit.contract("Proxy"), unit)
    assert f.is_proxy and f.delegates_to is None
    assert any(d.code == "UnresolvedTarget" for d in f.diagnostics)


@pytest.mark.parametrize("path", ASM_FILES, ids=_rel(ASM_FILES))
def test_representation_equivalence(path):
    old, new = _unit(path, OLD), _unit(path, NEW)
    assert set(old.contracts) == set(new.contracts)
    for name in old.contracts:
        a, b = is_proxy(old.contract(name), old), is_proxy(new.contract(name), new)
        target_a = a.delegates_to.display if a.delegates_to else None
        target_b = b.delegates_to.display if b.delegates_to else None
        assert (a.is_proxy, target_a, a.slot_literal) == (b.is_proxy, target_b, b.slot_literal)
        if a.mechanism in (Mechanism.ASM_STRING, Mechanism.ASM_YUL):
            assert a.mechanism is Mechanism.ASM_STRING and b.mechanism is Mechanism.ASM_YUL


@pytest.mark.parametrize("path", SOL_FILES, ids=_rel(SOL_FILES))
def test_delegatecall_text_oracle(path):
    text = open(path, encoding="utf-8").read()
    unit = build_unit({os.path.basename(path): text})
    for c in unit:
        f = is_proxy(c, unit)
        if f.is_proxy:
            assert "delegatecall" in text
        if f.mechanism is Mechanism.ASM_STRING:
            assert any(n.block.raw_text is not None for n in walk(f.function) if isinstance(n, AssemblyStmt))
        if f.mechanism is Mechanism.ASM_YUL:
            assert any(n.block.yul_ast is not None for n in walk(f.function) if isinstance(n, AssemblyStmt))
    if "delegatecall" not in text:
        assert not any(is_proxy(c, unit).is_proxy for c in unit)


def test_detector_ignores_names():
    text = fixture_text("corpus", "AdminUpgradeableProxy.sol")
    renamed = re.sub(r"\bAdminUpgradeableProxy\b", "Thing", text)
    a = build_unit(text)
    b = build_unit(renamed)
    fa = is_proxy(a.contract("AdminUpgradeableProxy"), a)
    fb = is_proxy(b.contract("Thing"), b)
    assert (fa.is_proxy, fa.mechanism, fa.delegates_to.name) == (fb.is_proxy, fb.mechanism, fb.delegates_to.name)
