"""Storage slots that well-known proxy standards reserve."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .keccak import keccak256_int


@dataclass(frozen=True)
class KnownSlot:
    """A reserved slot and how it is derived.

    :param slot: the slot index
    :param meaning: what the slot holds
    :param family: standard the slot belongs to
    :param derivation: string hashed to obtain the slot
    :param minus_one: whether one is subtracted from the hash
    """

    slot: int
    meaning: str
    family: str
    derivation: str
    minus_one: bool

    def recompute(self) -> int:
        value = keccak256_int(self.derivation.encode("utf-8"))
        return value - 1 if self.minus_one else value


class SlotTableError(RuntimeError):
    pass


KNOWN_SLOTS: tuple[KnownSlot, ...] = (
    KnownSlot(0x360894A13BA1A3210667C828492DB98DCA3E2076CC3735A920A3CA505D382BBC,
              "implementation", "eip1967", "eip1967.proxy.implementation", True),
    KnownSlot(0xB53127684A568B3173AE13B9F8A6016E243E63B6E8EE1178D6A717850B5D6103,
              "admin", "eip1967", "eip1967.proxy.admin", True),
    KnownSlot(0xA3F0AD74E5423AEBFD80D3EF4346578335A9A72AEAEE59FF6CB3582B35133D50,
              "beacon", "eip1967", "eip1967.proxy.beacon", True),
    KnownSlot(0xC5F16F0FCC639FA48A6947836D9850F504798523BF8C9A3A87D5876CF622BCF7,
              "implementation", "eip1822", "PROXIABLE", False),
    KnownSlot(0x7050C9E0F4CA769C69BD3A8EF740BC37934F8E2C036E5A723FD8EE048ED3F8C3,
              "implementation", "zeppelinos", "org.zeppelinos.proxy.implementation", False),
)


def verify_known_slots(table: tuple[KnownSlot, ...] = KNOWN_SLOTS) -> None:
    """Recompute every entry; raise :class:`SlotTableError` on the first mismatch."""
    for entry in table:
        if entry.recompute() != entry.slot:
            raise SlotTableError(f"slot for {entry.derivation!r} does not match its derivation")


verify_known_slots()

_BY_SLOT = {e.slot: e for e in KNOWN_SLOTS}


def lookup_slot(slot: Optional[int]) -> Optional[KnownSlot]:
    if slot is None:
        return None
    return _BY_SLOT.get(slot)


def is_known_slot(slot: Optional[int]) -> bool:
    return lookup_slot(slot) is not None
