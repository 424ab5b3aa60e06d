import pytest
from hypothesis import given, settings, strategies as st

from proxyscan.frontend.ast import ContractDef
from proxyscan.model import (
    CfgNode, NodeType, Scope, VariableRef, build_cfg, linearize_inheritance, local_variables,
)

from conftest import build_unit, fixture_text


def names(contracts):
    return [c.name for c in contracts]


@pytest.mark.parametrize("src, target, expected", [
    ("contract A {}", "A", ["A"]),
    ("contract A {} contract B is A {} contract C is B {}", "C", ["A", "B", "C"]),
    ("contract A {} contract B is A {} contract C is A {} contract D is B, C {}", "D", ["A", "B", "C", "D"]),
    ("contract A {} contract B is A {} contract C is A {} contract D is C, B {}", "D", ["A", "C", "B", "D"]),
])
def test_linearization_examples(src, target, expected):
    unit = build_unit(src)
    assert names(unit.contract(target).linearization) == expected


def _python_oracle(bases: dict[str, list[str]], target: str):
    classes = {}
    for name in bases:  # bases only reference earlier names
        parents = tuple(classes[b] for b in reversed(bases[name])) or (object,)
        try:
            classes[name] = type(name, parents, {})
        except TypeError:
            classes[name] = None
        if any(p is None for p in parents):
            classes[name] = None
    cls = classes[target]
    if cls is None:
        return None
    return [k.__name__ for k in reversed(cls.__mro__) if k is not object]


@st.composite
def hierarchies(draw):
    n = draw(st.integers(1, 7))
    bases = {}
    for i in range(n):
        earlier = [f"C{j}" for j in range(i)]
        picked = draw(st.lists(st.sampled_from(earlier), unique=True, max_size=3)) if earlier else []
        bases[f"C{i}"] = picked
    return bases


@given(hierarchies())
@settings(max_examples=200, deadline=None)
def test_linearization_matches_c3_oracle(bases):
    defs = {n: ContractDef(n, bases=tuple(b)) for n, b in bases.items()}
    for name in bases:
        diags = []
        got = names(linearize_inheritance(defs[name], defs, diags))
        expected = _python_oracle(bases, name)
        assert got[-1] == name and len(set(got)) == len(got)
        if expected is None:
            assert diags and diags[0].code == "LinearizationFailed"
        else:
            assert got == expected and not diags


def test_cross_file_inheritance():
    unit = build_unit({"a.sol": "contract A { uint a; }", "b.sol": "import './a.sol'; contract B is A { uint b; }"})
    b = unit.contract("B")
    assert names(b.linearization) == ["A", "B"]
    assert [v.name for v in b.all_state_vars] == ["a", "b"]
    assert b.all_state_vars[0].declaring_contract == "A"


def test_unresolved_base_is_diagnosed_and_analysis_runs():
    from proxyscan.analysis import analyze_contract
    unit = build_unit("""
contract B is M {
    address impl;
    function setImpl(address i) public { impl = i; }
    function () external payable { impl.delegatecall(msg.data); }
}""")
    b = unit.contract("B")
    assert b.unresolved_bases == ["M"]
    assert any(d.code == "UnresolvedBase" for d in unit.diagnostics)
    result = analyze_contract(b, unit)
    assert result.finding.is_proxy and result.verdict.is_upgradeable


def test_duplicate_contract_first_wins():
    unit = build_unit({"a.sol": "contract A { uint x; }", "b.sol": "contract A { uint y; }"})
    assert [v.name for v in unit.contract("A").all_state_vars] == ["x"]
    assert any(d.code == "DuplicateContractName" for d in unit.diagnostics)


def test_override_most_derived_wins_and_overloads_coexist():
    unit = build_unit("""
contract A { function f() public {} function g(uint x) public {} }
contract B is A { function f() public { } function g(address y) public {} }""")
    b = unit.contract("B")
    assert b.all_functions["f()"].declaring_contract == "B"
    assert {"g(uint256)", "g(address)"} <= set(b.all_functions)
    assert len([k for k in b.all_functions if k == "f()"]) == 1


def test_interfaces_contribute_no_state_and_do_not_override():
    unit = build_unit("""
interface I { function f() external; }
contract A { uint a; function f() public {} }
contract B is A, I { uint b; }""")
    b = unit.contract("B")
    assert [v.name for v in b.all_state_vars] == ["a", "b"]
    assert b.all_functions["f()"].body is not None


def test_resolution_is_deterministic():
    src = fixture_text("corpus", "EternalStorageProxy.sol")
    a = build_unit(src).contract("EternalStorageProxy")
    b = build_unit(src).contract("EternalStorageProxy")
    assert [v.display for v in a.all_state_vars] == [v.display for v in b.all_state_vars]
    assert names(a.linearization) == names(b.linearization)


def test_admin_example_cfg():
    unit = build_unit(fixture_text("corpus", "AdminUpgradeableProxy.sol"))
    c = unit.contract("AdminUpgradeableProxy")
    assert names(c.linearization) == ["AdminUpgradeableProxy"]
    nodes = build_cfg(c.fallback)
    assert [n.node_type for n in nodes] == [NodeType.ENTRY, NodeType.EXPRESSION]


def test_empty_body_cfg():
    unit = build_unit("contract A { function f() public {} }")
    assert [n.node_type for n in build_cfg(unit.contract("A").functions_named("f")[0])] == [NodeType.ENTRY]


def test_assembly_cfg_node():
    unit = build_unit("""pragma solidity ^0.8.0;
contract A { fallback() external { assembly { let r := delegatecall(gas(), sload(0), 0, 0, 0, 0) } } }""")
    nodes = build_cfg(unit.contract("A").fallback)
    assert [n.node_type for n in nodes] == [NodeType.ENTRY, NodeType.ASSEMBLY]
    assert nodes[1].inline_asm is not None and nodes[1].inline_asm.yul_ast is not None


def test_nested_statements_flatten_in_order():
    unit = build_unit("""
contract A {
    uint x;
    function f(uint a) public returns (uint) {
        uint b = a;
        if (a > 1) { x = a; } else { x = b; }
        require(x > 0);
        return x;
    }
}""")
    types = [n.node_type for n in build_cfg(unit.contract("A").functions_named("f")[0])]
    assert types == [NodeType.ENTRY, NodeType.VARIABLE_DECL, NodeType.IF, NodeType.EXPRESSION,
                     NodeType.EXPRESSION, NodeType.REQUIRE, NodeType.RETURN]


def test_cfg_node_invariant():
    with pytest.raises(ValueError):
        CfgNode(NodeType.ASSEMBLY)
    with pytest.raises(ValueError):
        VariableRef("x", Scope.LOCAL, declaring_contract="A")
    with pytest.raises(ValueError):
        VariableRef("x", Scope.STATE)


def test_variable_refs():
    unit = build_unit("""pragma solidity ^0.8.0;
contract A {
    address constant FIXED = 0x1111111111111111111111111111111111111111;
    address immutable deployer;
    address impl;
    constructor() { deployer = msg.sender; }
    function f(address p) public returns (address r) {
        address lit = 0x2222222222222222222222222222222222222222;
        address loaded = impl;
        assembly { let y := sload(0) }
        r = p;
    }
}""")
    a = unit.contract("A")
    state = {v.name: v for v in a.all_state_vars}
    assert state["FIXED"].is_constant and state["deployer"].is_constant and not state["impl"].is_constant
    assert all(v.declaring_contract == "A" for v in state.values())
    locs = local_variables(a.functions_named("f")[0])
    assert locs["p"].scope is Scope.PARAMETER
    assert locs["lit"].scope is Scope.LOCAL and locs["lit"].is_constant
    assert not locs["loaded"].is_constant
    assert "y" in locs and "r" in locs
    assert locs["lit"].owner_contract == "A"
