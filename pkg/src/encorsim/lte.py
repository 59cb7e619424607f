"""
Reference LTE control and user plane used as the comparison baseline.

MME/S-GW/P-GW with GTP tunnel anchoring: the P-GW anchors each device's
public IP for the whole session, every user-plane packet detours through
the anchor, and S1 handover re-points tunnels via a 15-message sequence
that runs entirely through core-side elements, buffering downlink
traffic at the source until completion.
"""
import itertools
from dataclasses import dataclass, field

from . import security
from .messages import ControlMessage, HandoverMode, HandoverTrace, Kind

CORE_NODES = ("mme", "sgw", "pgw", "hss")


@dataclass
class GtpTunnel:
    teid_up: int
    teid_down: int
    enb: str
    sgw: str
    pgw: str


@dataclass
class AnchorState:
    """Per-device state pinned at the anchor for the session lifetime."""
    imsi: int
    public_ip: int
    tunnel: GtpTunnel
    downlink_buffer: list = field(default_factory=list)
    buffering: bool = False
    buffer_cap: int = None  # None = unbounded
    buffer_drops: int = 0


class LteAttachError(Exception):
    pass


class LteCore:
    def __init__(self, subdb, seed=0, buffer_cap=None):
        self.subdb = subdb
        self.anchors = {}  # imsi -> AnchorState
        self.serving_enb = {}  # imsi -> enb id
        self._teids = itertools.count(1)
        self._ips = itertools.count(0x0A00_0001)  # 10.0.0.x pool
        self.buffer_cap = buffer_cap
        import random
        self.rng = random.Random(seed)

    def fresh_rand(self):
        return self.rng.getrandbits(128).to_bytes(16, "big")

    def new_tunnel(self, enb):
        return GtpTunnel(teid_up=next(self._teids), teid_down=next(self._teids),
                         enb=enb, sgw="sgw", pgw="pgw")


def _msg(kind, src, dst, now_us, payload=None):
    # S1 signaling is entirely a core-side procedure: even the UE-facing
    # command/confirm exist only as legs of MME-driven exchanges
    return ControlMessage(kind=kind, src=src, dst=dst, via_core=True,
                          payload=dict(payload or {}), time_us=now_us)


def attach_lte(ue, enb, core, now_us=0):
    """LTE attach: same auth machinery, then tunnel + anchor IP setup."""
    rec = core.subdb.get(ue.imsi)
    if rec is None:
        raise LteAttachError("unknown subscriber")
    rand = core.fresh_rand()
    vector = security.generate_auth_vector(rec, rand)
    try:
        res, ue.sqn = security.ue_process_challenge(ue.k, ue.sqn, rand, vector.autn)
    except (security.NetworkAuthError, security.ReplayError) as exc:
        raise LteAttachError(str(exc)) from exc
    if res != vector.xres:
        raise LteAttachError("response mismatch")
    keys = security.derive_k_enb(vector.k_asme)
    anchor = AnchorState(imsi=ue.imsi, public_ip=next(core._ips),
                         tunnel=core.new_tunnel(enb), buffer_cap=core.buffer_cap)
    core.anchors[ue.imsi] = anchor
    core.serving_enb[ue.imsi] = enb
    ue.keys = keys
    from .control import UeState
    ue.state = UeState.CONNECTED
    return anchor


# Reconstructed S1 handover sequence: 15 messages, all core-side.
_S1_SEQUENCE = (
    (Kind.HO_REQUIRED, "src_enb", "mme"),
    (Kind.HO_REQUEST, "mme", "tgt_enb"),
    (Kind.HO_REQUEST_ACK, "tgt_enb", "mme"),
    (Kind.CREATE_INDIRECT_TUNNEL_REQ, "mme", "sgw"),
    (Kind.CREATE_INDIRECT_TUNNEL_RESP, "sgw", "mme"),
    (Kind.HO_COMMAND, "mme", "src_enb"),
    (Kind.HO_COMMAND, "src_enb", "ue"),
    (Kind.ENB_STATUS_TRANSFER, "src_enb", "mme"),
    (Kind.MME_STATUS_TRANSFER, "mme", "tgt_enb"),
    (Kind.HO_CONFIRM, "ue", "tgt_enb"),
    (Kind.HO_NOTIFY, "tgt_enb", "mme"),
    (Kind.MODIFY_BEARER_REQ, "mme", "sgw"),
    (Kind.MODIFY_BEARER_RESP, "sgw", "mme"),
    (Kind.UE_CONTEXT_RELEASE_COMMAND, "mme", "src_enb"),
    (Kind.UE_CONTEXT_RELEASE_COMPLETE, "src_enb", "mme"),
)


def s1_handover(ue, src_enb, tgt_enb, core, now_us=0,
                downlink_mid_handover=()):
    """S1 handover. Tunnels are re-anchored to the target; downlink
    packets arriving mid-procedure are buffered and flushed at the end.

    Returns (trace, flushed_packets).
    """
    anchor = core.anchors.get(ue.imsi)
    if anchor is None or core.serving_enb.get(ue.imsi) != src_enb:
        raise LteAttachError(f"ue {ue.imsi} not connected at {src_enb}")

    anchor.buffering = True
    trace = HandoverTrace(mode=HandoverMode.LTE_S1, start_us=now_us)
    names = {"src_enb": src_enb, "tgt_enb": tgt_enb}
    for kind, src, dst in _S1_SEQUENCE:
        trace.append(_msg(kind, names.get(src, src), names.get(dst, dst), now_us))
        if kind == Kind.HO_COMMAND and dst == "ue":
            # UE detaches from src radio here; any downlink now buffers
            for pkt in downlink_mid_handover:
                deliver_downlink(core, ue.imsi, pkt)
    # all S1 messages touch the core by construction
    assert all(m.via_core for m in trace.messages)

    # re-anchor: fresh tunnel toward the target, public IP untouched
    anchor.tunnel = core.new_tunnel(tgt_enb)
    core.serving_enb[ue.imsi] = tgt_enb
    ue.keys = security.chain_k_enb(ue.keys)

    flushed = list(anchor.downlink_buffer)
    anchor.downlink_buffer.clear()
    anchor.buffering = False
    trace.end_us = now_us
    return trace, flushed


def deliver_downlink(core, imsi, pkt):
    """Downlink toward a device: buffered during handover, else delivered.

    Returns 'delivered', 'buffered', or 'dropped'.
    """
    anchor = core.anchors.get(imsi)
    if anchor is None:
        return "dropped"
    if anchor.buffering:
        if anchor.buffer_cap is not None and \
                len(anchor.downlink_buffer) >= anchor.buffer_cap:
            anchor.buffer_drops += 1
            return "dropped"
        anchor.downlink_buffer.append(pkt)
        return "buffered"
    return "delivered"


def route_user_packet(core, imsi, topology):
    """User-plane path via the anchor chain; returns (path, latency_us).

    topology: dict mapping (a, b) node-id pairs to one-way latency_us.
    """
    anchor = core.anchors.get(imsi)
    if anchor is None:
        return None, None
    enb = anchor.tunnel.enb
    path = ["ue", enb, "sgw", "pgw", "internet"]
    latency = sum(_hop_latency(topology, a, b) for a, b in zip(path, path[1:]))
    return path, latency


def _hop_latency(topology, a, b):
    if (a, b) in topology:
        return topology[(a, b)]
    if (b, a) in topology:
        return topology[(b, a)]
    raise KeyError(f"no latency configured for hop {a} <-> {b}")
