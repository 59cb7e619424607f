"""
Identifier-locator addressing and stateless NAT.

Addresses are 128 bits: the upper 64 bits are a routing locator and the
lower 64 bits uniquely identify the device. Base stations translate
between a device's private address and their own public prefix by
rewriting only the locator half, so no per-flow state is needed. A
short-TTL "recently moved" table lets the old base station redirect
in-flight downlink packets after a handover by rewriting the locator
once more.
"""
import enum
from dataclasses import dataclass, field

MASK64 = (1 << 64) - 1

# Private locator: the 7-bit fc00::/7 pattern in the top bits, rest zero.
PRIVATE_PREFIX_BITS = 0b1111110
PRIVATE_LOCATOR = PRIVATE_PREFIX_BITS << 57


@dataclass(frozen=True)
class Addr128:
    locator: int
    identifier: int

    def __post_init__(self):
        if not 0 <= self.locator <= MASK64:
            raise ValueError("locator out of 64-bit range")
        if not 0 <= self.identifier <= MASK64:
            raise ValueError("identifier out of 64-bit range")

    @property
    def value(self):
        return (self.locator << 64) | self.identifier

    @classmethod
    def from_int(cls, value):
        return cls((value >> 64) & MASK64, value & MASK64)

    def is_private(self):
        return (self.locator >> 57) == PRIVATE_PREFIX_BITS

    def text(self):
        """IPv6-style: 32 lowercase hex digits grouped in fours by colons."""
        digits = f"{self.value:032x}"
        return ":".join(digits[i:i + 4] for i in range(0, 32, 4))

    def __str__(self):
        return self.text()


def assign_private_addr(subscriber_id):
    """Deterministic private address for a subscriber: identifier = id."""
    if subscriber_id == 0:
        raise ValueError("subscriber id must be nonzero")
    if not 0 < subscriber_id <= MASK64:
        raise ValueError("subscriber id out of 64-bit range")
    return Addr128(PRIVATE_LOCATOR, subscriber_id)


@dataclass
class NatCounters:
    nonprivate_uplink: int = 0
    downlink_dropped: int = 0


def nat_uplink(src, inb_locator, counters=None):
    """Rewrite a private source locator to the base station's public prefix.

    Non-private sources pass through unchanged (counted as a warning).
    """
    if not src.is_private():
        if counters is not None:
            counters.nonprivate_uplink += 1
        return src
    return Addr128(inb_locator, src.identifier)


class Decision(enum.Enum):
    DELIVER = "deliver"
    FORWARD = "forward"
    DROP = "drop"


class RecentlyMovedTable:
    """identifier -> (target locator, expiry time). Entries expire at their
    expiry instant; lookups purge anything stale."""

    DEFAULT_TTL_US = 2_000_000  # a small number of RTTs

    def __init__(self, default_ttl_us=DEFAULT_TTL_US):
        self.default_ttl_us = default_ttl_us
        self.entries = {}

    def record_move(self, identifier, target_locator, now, ttl_us=None):
        if ttl_us is None:
            ttl_us = self.default_ttl_us
        self.entries[identifier] = (target_locator, now + ttl_us)

    def lookup(self, identifier, now):
        """Returns the target locator, or None if absent or expired."""
        entry = self.entries.get(identifier)
        if entry is None:
            return None
        target, expiry = entry
        if now >= expiry:
            del self.entries[identifier]
            return None
        return target

    def purge(self, now):
        stale = [k for k, (_, exp) in self.entries.items() if now >= exp]
        for k in stale:
            del self.entries[k]

    def __len__(self):
        return len(self.entries)


def nat_downlink(dst, attached_ids, moved, now, counters=None):
    """Decide what to do with a downlink packet addressed to this prefix.

    Returns (Decision, rewritten address or None). Attached devices get
    their private locator restored; recently moved ones are forwarded with
    the locator rewritten to the new base station; everything else drops.
    """
    if dst.identifier in attached_ids:
        return Decision.DELIVER, Addr128(PRIVATE_LOCATOR, dst.identifier)
    target = moved.lookup(dst.identifier, now) if moved is not None else None
    if target is not None:
        return Decision.FORWARD, Addr128(target, dst.identifier)
    if counters is not None:
        counters.downlink_dropped += 1
    return Decision.DROP, None
