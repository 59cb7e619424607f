"""
Abstracted SIM-based mutual authentication and session-key lifecycle.

Follows the shape of LTE-AKA: a permanent per-subscriber secret K plus a
strictly increasing sequence number SQN for replay protection, a derived
anchor key, and a per-base-station session key that is cycled forward via
a chaining counter (NCC) on core-assisted handover. The PRF is a keyed
hash over domain-separated labels, not the 3GPP cipher internals.
"""
import hmac
import hashlib
from dataclasses import dataclass

KEY_BYTES = 16


class ReplayError(Exception):
    """SQN outside the acceptance window: replayed or stale challenge."""


class NetworkAuthError(Exception):
    """AUTN MAC check failed: the network could not prove knowledge of K."""


def prf(key, label, *parts):
    """Keyed PRF: HMAC-SHA256 truncated to 128 bits, domain-separated."""
    mac = hmac.new(key, label.encode(), hashlib.sha256)
    for part in parts:
        if isinstance(part, int):
            part = part.to_bytes(8, "big")
        mac.update(b"|")
        mac.update(part)
    return mac.digest()[:KEY_BYTES]


@dataclass
class QuotaPolicy:
    volume_bytes: int | None = None      # None = unlimited
    throughput_cap_bps: int | None = None


@dataclass
class SubscriberRecord:
    imsi: int
    k: bytes
    sqn: int = 0
    qci_profile: int = 9
    quota_policy: QuotaPolicy = None

    def __post_init__(self):
        if len(self.k) != KEY_BYTES:
            raise ValueError("K must be 128 bits")
        if not 1 <= self.qci_profile <= 9:
            raise ValueError("QCI must be in 1..9")
        if self.quota_policy is None:
            self.quota_policy = QuotaPolicy()


@dataclass(frozen=True)
class Autn:
    sqn: int
    mac: bytes


@dataclass(frozen=True)
class AuthVector:
    rand: bytes
    xres: bytes
    autn: Autn
    k_asme: bytes


@dataclass(frozen=True)
class SessionKeys:
    k_enb: bytes
    ncc: int


def generate_auth_vector(rec, rand):
    """Build an auth vector from the subscriber's K and current SQN.

    Advances rec.sqn, so each vector binds a fresh sequence number.
    """
    sqn = rec.sqn
    xres = prf(rec.k, "res", rand)
    mac = prf(rec.k, "autn", rand, sqn)
    k_asme = prf(rec.k, "asme", rand, sqn)
    rec.sqn = sqn + 1
    return AuthVector(rand=rand, xres=xres, autn=Autn(sqn, mac), k_asme=k_asme)


def ue_process_challenge(k, ue_sqn, rand, autn):
    """UE side of the challenge. Acceptance window is exact-next-value.

    Returns (RES, new ue_sqn); raises NetworkAuthError on a bad MAC and
    ReplayError on a reused or out-of-window SQN.
    """
    expected_mac = prf(k, "autn", rand, autn.sqn)
    if not hmac.compare_digest(expected_mac, autn.mac):
        raise NetworkAuthError("AUTN MAC mismatch")
    if autn.sqn != ue_sqn:
        raise ReplayError(f"SQN {autn.sqn} not the expected {ue_sqn}")
    res = prf(k, "res", rand)
    return res, ue_sqn + 1


def derive_k_enb(k_asme, initial_counter=0):
    """Initial per-base-station session key; chaining counter starts at 0."""
    return SessionKeys(k_enb=prf(k_asme, "enb", initial_counter), ncc=0)


def chain_k_enb(keys):
    """Cycle the session key forward for forward secrecy (NCC += 1)."""
    ncc = keys.ncc + 1
    return SessionKeys(k_enb=prf(keys.k_enb, "chain", ncc), ncc=ncc)
