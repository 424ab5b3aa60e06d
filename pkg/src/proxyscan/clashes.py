"""Function-selector clashes between a proxy and its implementation."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .frontend.ast import FunctionKind
from .model import ResolvedContract
from .selectors import function_selector, function_signature, getter_signature


class ClashKind(str, enum.Enum):
    COLLISION = "COLLISION"
    SHADOW = "SHADOW"


SHADOW_NOTE = ("identical signature on both sides; harmless only when the proxy routes admin and user "
               "calls apart")


@dataclass(frozen=True)
class Clash:
    selector: bytes
    proxy_signature: str
    impl_signature: str
    kind: ClashKind

    def __post_init__(self) -> None:
        if self.kind is ClashKind.COLLISION and self.proxy_signature == self.impl_signature:
            raise ValueError("a collision needs two different signatures")

    @property
    def selector_hex(self) -> str:
        return "0x" + self.selector.hex()

    @property
    def note(self) -> str:
        return SHADOW_NOTE if self.kind is ClashKind.SHADOW else "different functions share a selector"


def external_signatures(contract: ResolvedContract) -> list[str]:
    """Signatures callable from outside: public/external functions and public
    state variable getters.  Sorted and de-duplicated."""
    unit = contract.unit
    sigs = set()
    for fn in contract.functions_in_order():
        if fn.kind is FunctionKind.FUNCTION and fn.is_entry_point:
            sigs.add(function_signature(fn, unit))
    for ref in contract.all_state_vars:
        decl = ref.decl
        if getattr(decl, "visibility", None) == "public":
            sigs.add(getter_signature(decl, unit))
    return sorted(sigs)


def find_selector_clashes(proxy: ResolvedContract, implementation: ResolvedContract) -> list[Clash]:
    """Pairs of externally callable functions, one per side, sharing a selector."""
    impl_by_selector: dict[bytes, list[str]] = {}
    for sig in external_signatures(implementation):
        impl_by_selector.setdefault(function_selector(sig), []).append(sig)
    clashes = []
    for sig in external_signatures(proxy):
        sel = function_selector(sig)
        for other in impl_by_selector.get(sel, ()):
            kind = ClashKind.SHADOW if other == sig else ClashKind.COLLISION
            clashes.append(Clash(sel, sig, other, kind))
    clashes.sort(key=lambda c: (c.selector, c.proxy_signature, c.impl_signature))
    return clashes
