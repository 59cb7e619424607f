"""
Edge-routed control plane: SME, stateless handover proxies (HOPs),
extended base stations (iNBs), and the attach / handover procedures.

The SME is the only stateful core element: it authenticates subscribers,
assigns private addresses, and distributes session keys. Handover comes
in two modes: core-assisted (signaled through the SME, which cycles the
session key) and direct (peer-to-peer through a HOP, reusing the key).
Every procedure returns a trace whose message counts are pinned by tests.
"""
from dataclasses import dataclass, field
import enum
import random

from . import security
from .addressing import Addr128, RecentlyMovedTable, assign_private_addr
from .messages import ControlMessage, HandoverMode, HandoverTrace, Kind

SME_ID = "sme"


class AttachError(Exception):
    def __init__(self, cause):
        super().__init__(cause)
        self.cause = cause


class HandoverError(Exception):
    pass


class ConfigurationError(Exception):
    pass


class RelayError(Exception):
    pass


class UeState(str, enum.Enum):
    DETACHED = "Detached"
    ATTACHING = "Attaching"
    CONNECTED = "Connected"
    HANDING_OVER = "HandingOver"


@dataclass
class UeContext:
    imsi: int
    state: UeState = UeState.DETACHED
    serving_inb: str = None
    target_inb: str = None
    private_addr: Addr128 = None
    keys: security.SessionKeys = None
    qci: int = 9
    quota = None


@dataclass
class Ue:
    """Device side: permanent secret, replay counter, radio state."""
    imsi: int
    k: bytes
    sqn: int = 0
    state: UeState = UeState.DETACHED
    keys: security.SessionKeys = None
    addr: Addr128 = None
    attach_failure: str = None


class Inb:
    """Extended base station: terminates the user plane, holds only the
    contexts of its currently attached devices plus the recently-moved
    forwarding table. No downlink buffering exists here by design."""

    def __init__(self, inb_id, locator, ue_cap=None, moved_ttl_us=None):
        self.id = inb_id
        self.locator = locator
        self.ue_cap = ue_cap
        self.attached = {}  # identifier -> UeContext
        if moved_ttl_us is None:
            self.moved = RecentlyMovedTable()
        else:
            self.moved = RecentlyMovedTable(default_ttl_us=moved_ttl_us)

    def has_room(self):
        return self.ue_cap is None or len(self.attached) < self.ue_cap

    def attached_ids(self):
        return set(self.attached)


class Hop:
    """Stateless handover relay. Deliberately has no per-device fields;
    its entire state is the set of base stations it serves."""

    def __init__(self, hop_id, connected_inbs=()):
        self.id = hop_id
        self.connected = set(connected_inbs)

    def relay(self, msg, dst_inb):
        if dst_inb not in self.connected:
            raise RelayError(f"{self.id} does not serve {dst_inb}")
        return msg

    def snapshot(self):
        """Serialized state, for statelessness assertions."""
        return repr((self.id, sorted(self.connected))).encode()


class Sme:
    """Minimal stateful core: subscriber DB front end, auth, key escrow."""

    def __init__(self, subdb, seed=0):
        self.id = SME_ID
        self.subdb = subdb  # imsi -> SubscriberRecord
        self.rng = random.Random(seed)
        self.contexts = {}  # imsi -> UeContext

    def fresh_rand(self):
        return self.rng.getrandbits(128).to_bytes(16, "big")


def _msg(kind, src, dst, now_us, payload=None, via_hop=None):
    payload = dict(payload or {})
    if via_hop is not None:
        payload["via_hop"] = via_hop
    via_core = SME_ID in (src, dst)
    return ControlMessage(kind=kind, src=src, dst=dst, via_core=via_core,
                          payload=payload, time_us=now_us)


def attach(ue, inb, sme, now_us=0):
    """Authenticate and connect a device at a base station.

    Returns (UeContext, trace). On failure the device stays Detached with
    the cause recorded on it, and AttachError is raised.
    """
    if ue.state != UeState.DETACHED:
        raise AttachError("ue not detached")
    trace = HandoverTrace(mode=None, start_us=now_us)
    trace.append(_msg(Kind.ATTACH_REQUEST, "ue", sme.id, now_us,
                      {"imsi": ue.imsi, "inb": inb.id}))
    rec = sme.subdb.get(ue.imsi)
    if rec is None:
        ue.attach_failure = "unknown subscriber"
        raise AttachError("unknown subscriber")

    rand = sme.fresh_rand()
    vector = security.generate_auth_vector(rec, rand)
    trace.append(_msg(Kind.AUTH_CHALLENGE, sme.id, "ue", now_us,
                      {"rand": rand, "autn": vector.autn}))
    try:
        res, ue.sqn = security.ue_process_challenge(ue.k, ue.sqn, rand, vector.autn)
    except (security.NetworkAuthError, security.ReplayError) as exc:
        ue.attach_failure = str(exc)
        raise AttachError(str(exc)) from exc
    trace.append(_msg(Kind.AUTH_RESPONSE, "ue", sme.id, now_us, {"res": res}))
    if res != vector.xres:
        ue.attach_failure = "response mismatch"
        raise AttachError("response mismatch")

    keys = security.derive_k_enb(vector.k_asme)
    addr = assign_private_addr(ue.imsi)
    ctx = UeContext(imsi=ue.imsi, state=UeState.CONNECTED, serving_inb=inb.id,
                    private_addr=addr, keys=keys, qci=rec.qci_profile)
    sme.contexts[ue.imsi] = ctx
    inb.attached[addr.identifier] = ctx
    trace.append(_msg(Kind.ATTACH_ACCEPT, sme.id, "ue", now_us,
                      {"k_enb": keys.k_enb, "addr": addr, "qci": rec.qci_profile}))
    ue.state = UeState.CONNECTED
    ue.keys = keys
    ue.addr = addr
    ue.attach_failure = None
    trace.end_us = now_us
    return ctx, trace


def _require_connected(ctx, src):
    if ctx.state != UeState.CONNECTED or ctx.serving_inb != src.id:
        raise HandoverError(f"ue {ctx.imsi} not connected at {src.id}")


def _complete_handover(ctx, ue, src, tgt, new_keys, now_us):
    ident = ctx.private_addr.identifier
    del src.attached[ident]
    tgt.attached[ident] = ctx
    src.moved.record_move(ident, tgt.locator, now_us)
    ctx.keys = new_keys
    ctx.serving_inb = tgt.id
    ctx.target_inb = None
    ctx.state = UeState.CONNECTED
    ue.keys = new_keys


def handover_core_assisted(ctx, ue, src, tgt, sme, hop, now_us=0):
    """Canonical 7-message handover through the SME, which cycles the
    session key (NCC += 1). Exactly two messages traverse the core."""
    _require_connected(ctx, src)
    trace = HandoverTrace(mode=HandoverMode.CORE_ASSISTED, start_us=now_us)
    trace.append(_msg(Kind.HO_REQUIRED, src.id, sme.id, now_us,
                      {"imsi": ctx.imsi, "target": tgt.id, "qci": ctx.qci}))
    new_keys = security.chain_k_enb(ctx.keys)
    trace.append(_msg(Kind.HO_REQUEST, sme.id, tgt.id, now_us,
                      {"imsi": ctx.imsi, "k_enb": new_keys.k_enb,
                       "ncc": new_keys.ncc, "qci": ctx.qci}))
    if not tgt.has_room():
        trace.failed = True
        trace.end_us = now_us
        return trace

    ctx.state = UeState.HANDING_OVER
    ctx.target_inb = tgt.id
    radio_config = _radio_config(tgt, ctx)
    ack = _msg(Kind.HO_REQUEST_ACK, tgt.id, src.id, now_us,
               {"radio_config": radio_config}, via_hop=hop.id)
    hop.relay(ack, src.id)
    trace.append(ack)
    # forwarded to the device unmodified
    trace.append(_msg(Kind.HO_COMMAND, src.id, "ue", now_us,
                      {"radio_config": radio_config}))
    trace.append(_msg(Kind.HO_CONFIRM, "ue", tgt.id, now_us))
    notify = _msg(Kind.HO_COMPLETE_NOTIFY, tgt.id, src.id, now_us, via_hop=hop.id)
    hop.relay(notify, src.id)
    trace.append(notify)
    _complete_handover(ctx, ue, src, tgt, new_keys, now_us)
    trace.append(_msg(Kind.UE_CONTEXT_RELEASE, src.id, hop.id, now_us,
                      {"imsi": ctx.imsi}))
    trace.end_us = now_us
    return trace


def handover_direct(ctx, ue, src, tgt, hop, now_us=0):
    """6-message peer-to-peer handover through a shared HOP. The source
    shares its current session key with the target; no core involvement,
    NCC unchanged."""
    _require_connected(ctx, src)
    if src.id not in hop.connected or tgt.id not in hop.connected:
        raise ConfigurationError(
            f"{src.id} and {tgt.id} do not share hop {hop.id}")
    trace = HandoverTrace(mode=HandoverMode.DIRECT, start_us=now_us)
    required = _msg(Kind.HO_REQUIRED, src.id, tgt.id, now_us,
                    {"imsi": ctx.imsi, "k_enb": ctx.keys.k_enb,
                     "ncc": ctx.keys.ncc, "qci": ctx.qci}, via_hop=hop.id)
    hop.relay(required, tgt.id)
    trace.append(required)
    if not tgt.has_room():
        trace.failed = True
        trace.end_us = now_us
        return trace

    ctx.state = UeState.HANDING_OVER
    ctx.target_inb = tgt.id
    radio_config = _radio_config(tgt, ctx)
    ack = _msg(Kind.HO_REQUEST_ACK, tgt.id, src.id, now_us,
               {"radio_config": radio_config}, via_hop=hop.id)
    hop.relay(ack, src.id)
    trace.append(ack)
    trace.append(_msg(Kind.HO_COMMAND, src.id, "ue", now_us,
                      {"radio_config": radio_config}))
    trace.append(_msg(Kind.HO_CONFIRM, "ue", tgt.id, now_us))
    notify = _msg(Kind.HO_COMPLETE_NOTIFY, tgt.id, src.id, now_us, via_hop=hop.id)
    hop.relay(notify, src.id)
    trace.append(notify)
    _complete_handover(ctx, ue, src, tgt, ctx.keys, now_us)
    trace.append(_msg(Kind.UE_CONTEXT_RELEASE, src.id, hop.id, now_us,
                      {"imsi": ctx.imsi}))
    trace.end_us = now_us
    return trace


def _radio_config(tgt, ctx):
    # opaque blob so byte-identical forwarding is checkable
    return f"radio:{tgt.id}:{ctx.imsi}:{ctx.qci}".encode()
