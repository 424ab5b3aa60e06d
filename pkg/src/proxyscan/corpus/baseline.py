"""Name-based proxy detector, kept as a comparison baseline."""

from __future__ import annotations

from ..detection import delegatecall_in_function
from ..model import ResolvedContract


def baseline_name_heuristic(contract: ResolvedContract) -> bool:
    """Flag ``contract`` if its name contains ``Proxy`` or its fallback
    contains a delegatecall.

    The check is intentionally naive: it does not follow internal calls and
    ignores whether the target can change.

    :param contract: resolved contract
    :return: True if flagged
    """
    if "Proxy" in contract.name:
        return True
    fallback = contract.fallback
    return fallback is not None and delegatecall_in_function(fallback)
