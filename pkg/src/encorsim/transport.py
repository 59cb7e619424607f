"""
Mobility-tolerant transport model and instrumented toy applications.

The transport uses passive migration: a client may change address at any
time, and the server only learns the new path when it receives a packet
carrying the recognized connection id from the new address. Packets the
server sends to a stale path are lost unless the old base station still
holds a live recently-moved forwarding entry. Three applications probe
the consequences: bulk transfer (continuous downlink, worst-case loss),
buffered adaptive-bitrate video (bursty, mild loss), and live streaming
(pure subscriber, which can deadlock without the ping fix).
"""
import enum
import math
from dataclasses import dataclass, field

from .addressing import Addr128, RecentlyMovedTable
from .kernel import Simulator

US = 1_000_000
BASE_LOCATOR = 0x2001_0000_0000_0000


class Policy(str, enum.Enum):
    PASSIVE_ONLY = "PassiveOnly"
    PING_ON_IDLE = "PingOnIdle"


@dataclass
class TransportParams:
    one_way_us: int = 20_000
    bandwidth_mbps: float = 40.0
    packet_bytes: int = 1200
    ack_delay_us: int = 2_000
    keepalive_interval_us: int = 25_000
    forwarding_enabled: bool = False
    forwarding_ttl_us: int = 2_000_000
    give_up_us: int = 5_000_000
    idle_deadline_factor: float = 1.5

    @property
    def rtt_us(self):
        return 2 * self.one_way_us + self.ack_delay_us

    @property
    def rto_us(self):
        return 2 * self.rtt_us

    def packet_interval_us(self, rate_mbps=None):
        rate = self.bandwidth_mbps if rate_mbps is None else rate_mbps
        return max(1, round(self.packet_bytes * 8 / rate))


@dataclass
class MobiConn:
    conn_id: int
    client_addr: Addr128
    server_path: Addr128
    client_seq: int = 0
    server_seq: int = 0

    def on_client_packet(self, conn_id, src_addr):
        """Server-side path learning: only a recognized connection id
        from a new address moves the last-known path."""
        if conn_id != self.conn_id:
            return False
        self.server_path = src_addr
        return True


def client_migrate(conn, new_addr):
    """Client moves; the server is NOT notified."""
    conn.client_addr = new_addr
    return conn


@dataclass
class AppMetrics:
    app: str
    policy: str = ""
    handovers: int = 0
    throughput_mbps: float = 0.0
    retx_count: int = 0
    retx_rate: float = 0.0
    stall_s: float = 0.0
    mean_buffer_s: float = 0.0
    mean_quality: float = 0.0
    frames_delivered: int = 0
    fps: float = 0.0
    deadlocked: bool = False
    pings: int = 0

    def to_csv_row(self):
        return (self.app, self.policy, self.handovers,
                round(self.throughput_mbps, 3), round(self.retx_rate, 5),
                round(self.stall_s, 3), round(self.mean_buffer_s, 3),
                round(self.mean_quality, 3), round(self.fps, 3),
                int(self.deadlocked))


class MobilityNet:
    """Tracks the client's current base-station locator and the
    recently-moved tables of base stations it has left."""

    def __init__(self, conn, params):
        self.conn = conn
        self.params = params
        self.tables = {}  # old locator -> RecentlyMovedTable
        self.migrations = 0

    def migrate(self, now_us):
        old = self.conn.client_addr.locator
        new = old + 1
        if self.params.forwarding_enabled:
            table = self.tables.setdefault(
                old, RecentlyMovedTable(self.params.forwarding_ttl_us))
            table.record_move(self.conn.client_addr.identifier, new, now_us)
        client_migrate(self.conn, Addr128(new, self.conn.client_addr.identifier))
        self.migrations += 1

    def reaches_client(self, dest_addr, arrival_us):
        """Can a packet addressed to dest_addr reach the client at this
        time? Follows live forwarding entries hop by hop."""
        loc = dest_addr.locator
        ident = dest_addr.identifier
        for _ in range(len(self.tables) + 1):
            if loc == self.conn.client_addr.locator:
                return True
            table = self.tables.get(loc)
            nxt = table.lookup(ident, arrival_us) if table else None
            if nxt is None:
                return False
            loc = nxt
        return False


def server_send(net, conn, arrival_us):
    """One delivery attempt to the server's last-known client path."""
    return net.reaches_client(conn.server_path, arrival_us)


def _new_conn(conn_id=1, identifier=0x42):
    addr = Addr128(BASE_LOCATOR, identifier)
    return MobiConn(conn_id=conn_id, client_addr=addr, server_path=addr)


class _DownlinkServer:
    """Server-side reliable downlink: per-packet retransmission timers,
    path learning from any client packet."""

    def __init__(self, sim, net, conn, params, rng):
        self.sim = sim
        self.net = net
        self.conn = conn
        self.params = params
        self.rng = rng
        self.acked = set()
        self.delivered = set()
        self.retx_count = 0
        self.tx_count = 0
        self.on_packet_delivered = None  # callback(pkt_id, now)

    def send_packet(self, pkt_id, rto_us=None):
        if pkt_id in self.acked:
            return
        rto = self.params.rto_us if rto_us is None else rto_us
        self.tx_count += 1
        dest = self.conn.server_path
        arrival = self.sim.now + self.params.one_way_us

        def arrive(sim):
            if self.net.reaches_client(dest, sim.now):
                self._client_receive(pkt_id, sim.now)

        self.sim.schedule(arrival, arrive)

        def timeout(sim):
            if pkt_id not in self.acked:
                self.retx_count += 1
                self.send_packet(pkt_id, rto_us=rto * 2)

        self.sim.schedule(self.sim.now + rto, timeout)

    def _client_receive(self, pkt_id, now):
        first = pkt_id not in self.delivered
        self.delivered.add(pkt_id)
        ack_at = now + self.params.ack_delay_us

        def send_ack(sim):
            src = self.conn.client_addr  # address at emission time
            sim.schedule(sim.now + self.params.one_way_us,
                         lambda s: self._server_ack(pkt_id, src))

        self.sim.schedule(ack_at, send_ack)
        if first and self.on_packet_delivered is not None:
            self.on_packet_delivered(pkt_id, now)

    def _server_ack(self, pkt_id, src_addr):
        self.conn.on_client_packet(self.conn.conn_id, src_addr)
        self.acked.add(pkt_id)

    def client_packet(self, kind="keepalive"):
        """Any client-originated packet updates the server path on arrival."""
        src = self.conn.client_addr

        def arrive(sim):
            self.conn.on_client_packet(self.conn.conn_id, src)

        self.sim.schedule(self.sim.now + self.params.one_way_us, arrive)


def run_bulk(file_bytes, handover_times_us, params=None, seed=0):
    """Reliable download of a single file; one continuous packet train."""
    params = params or TransportParams()
    sim = Simulator(seed)
    conn = _new_conn()
    net = MobilityNet(conn, params)
    server = _DownlinkServer(sim, net, conn, params, sim.rng)

    n_packets = max(1, math.ceil(file_bytes / params.packet_bytes))
    interval = params.packet_interval_us()
    finish_us = [None]

    def on_delivered(pkt_id, now):
        if len(server.delivered) == n_packets:
            finish_us[0] = now

    server.on_packet_delivered = on_delivered
    for i in range(n_packets):
        sim.schedule(i * interval, lambda s, i=i: server.send_packet(i))
    for t in handover_times_us:
        sim.schedule(t, lambda s: net.migrate(s.now))

    # client is never idle mid-download: periodic window updates
    def keepalive(sim):
        if len(server.delivered) < n_packets:
            server.client_packet()
            sim.schedule(sim.now + params.keepalive_interval_us, keepalive)

    jitter = sim.rng.randrange(params.keepalive_interval_us)
    sim.schedule(jitter, keepalive)

    horizon = n_packets * interval * 4 + 60 * US
    sim.run_until(horizon)
    done = finish_us[0] if finish_us[0] else horizon
    metrics = AppMetrics(app="bulk", handovers=len(handover_times_us))
    metrics.throughput_mbps = file_bytes * 8 / done if done else 0.0
    metrics.retx_count = server.retx_count
    metrics.retx_rate = server.retx_count / max(1, server.tx_count)
    return metrics


DEFAULT_LADDER = [(1, 1.0e6), (2, 1.5e6), (3, 2.0e6), (4, 3.0e6), (5, 4.0e6)]
BUFFER_THRESHOLDS_S = (5.0, 10.0, 15.0, 20.0)


def select_level(buffer_s, ladder=None, thresholds=BUFFER_THRESHOLDS_S):
    """Buffer-based rung selection: more buffer, higher quality."""
    ladder = ladder or DEFAULT_LADDER
    idx = sum(1 for t in thresholds if buffer_s >= t)
    idx = min(idx, len(ladder) - 1)
    return ladder[idx]


def run_buffered(duration_s, handover_times_us, params=None, seed=0,
                 ladder=None, chunk_duration_s=2.0, buffer_cap_s=40.0,
                 initial_buffer_s=25.0, pace_mbps=8.0):
    """Buffered ABR playback. The buffer starts primed (steady-state
    window), so ample bandwidth keeps the top rung throughout."""
    params = params or TransportParams()
    ladder = ladder or DEFAULT_LADDER
    sim = Simulator(seed)
    conn = _new_conn()
    net = MobilityNet(conn, params)
    server = _DownlinkServer(sim, net, conn, params, sim.rng)

    state = {
        "buffer_s": initial_buffer_s,
        "last_update": 0,
        "stall_us": 0,
        "qualities": [],
        "buffer_integral": 0.0,  # buffer-seconds, for the time average
        "chunk_pkts": {},        # chunk -> set of outstanding pkt ids
        "next_chunk": 0,
        "pkt_counter": [0],
    }
    duration_us = round(duration_s * US)
    pace_interval = params.packet_interval_us(pace_mbps)

    def update_buffer(now):
        dt = (now - state["last_update"]) / US
        if dt <= 0:
            return
        buf = state["buffer_s"]
        if dt <= buf:
            state["buffer_integral"] += buf * dt - dt * dt / 2
            state["buffer_s"] = buf - dt
        else:
            state["buffer_integral"] += buf * buf / 2
            state["stall_us"] += round((dt - buf) * US)
            state["buffer_s"] = 0.0
        state["last_update"] = now

    def request_chunk(sim):
        if sim.now >= duration_us:
            return
        update_buffer(sim.now)
        if state["buffer_s"] > buffer_cap_s - chunk_duration_s:
            wait = round((state["buffer_s"] - (buffer_cap_s - chunk_duration_s)) * US)
            sim.schedule(sim.now + wait, request_chunk)
            return
        level, bitrate = select_level(state["buffer_s"], ladder)
        state["qualities"].append(level)
        chunk = state["next_chunk"]
        state["next_chunk"] += 1
        chunk_bytes = bitrate * chunk_duration_s / 8
        n_pkts = max(1, math.ceil(chunk_bytes / params.packet_bytes))
        base = state["pkt_counter"][0]
        state["pkt_counter"][0] += n_pkts
        state["chunk_pkts"][chunk] = set(range(base, base + n_pkts))
        server.client_packet("chunk-request")

        def start_sending(s):
            for j in range(n_pkts):
                s.schedule(s.now + j * pace_interval,
                           lambda s2, p=base + j: server.send_packet(p))

        sim.schedule(sim.now + params.one_way_us, start_sending)

    def on_delivered(pkt_id, now):
        for chunk, pkts in list(state["chunk_pkts"].items()):
            if pkt_id in pkts:
                pkts.discard(pkt_id)
                if not pkts:
                    del state["chunk_pkts"][chunk]
                    update_buffer(now)
                    state["buffer_s"] += chunk_duration_s
                    sim.schedule(now, request_chunk)
                break

    server.on_packet_delivered = on_delivered
    sim.schedule(0, request_chunk)
    for t in handover_times_us:
        sim.schedule(t, lambda s: net.migrate(s.now))

    # a client mid-chunk is never idle: periodic window updates while a
    # download is outstanding keep the server's path fresh
    def keepalive(sim):
        if sim.now < duration_us:
            if state["chunk_pkts"]:
                server.client_packet()
            sim.schedule(sim.now + params.keepalive_interval_us, keepalive)

    sim.schedule(sim.rng.randrange(params.keepalive_interval_us), keepalive)
    sim.run_until(duration_us)
    update_buffer(duration_us)

    metrics = AppMetrics(app="buffered", handovers=len(handover_times_us))
    metrics.stall_s = state["stall_us"] / US
    metrics.mean_buffer_s = state["buffer_integral"] / duration_s
    metrics.mean_quality = (sum(state["qualities"]) / len(state["qualities"])
                            if state["qualities"] else 0.0)
    metrics.retx_count = server.retx_count
    metrics.retx_rate = server.retx_count / max(1, server.tx_count)
    metrics.throughput_mbps = (len(server.delivered) * params.packet_bytes * 8
                               / duration_us)
    return metrics


def run_live(duration_s, handover_times_us, policy=Policy.PASSIVE_ONLY,
             params=None, seed=0, frame_interval_us=41_667):
    """Live stream: the server pushes frames on a fixed cadence and the
    client sends nothing but acks (and pings, under the idle policy).
    Frames are not retransmitted; loss shows up as missing frames, and a
    stale path with no recovery shows up as a deadlock."""
    params = params or TransportParams()
    sim = Simulator(seed)
    conn = _new_conn()
    net = MobilityNet(conn, params)
    duration_us = round(duration_s * US)
    idle_deadline = round(params.idle_deadline_factor * frame_interval_us)

    state = {"delivered": 0, "sent": 0, "last_delivery": 0,
             "pings": 0, "ping_muted_until": -1}

    def client_receive(sim, frame_id):
        state["delivered"] += 1
        state["last_delivery"] = sim.now

        def send_ack(s):
            src = conn.client_addr

            def arrive(s2):
                conn.on_client_packet(conn.conn_id, src)

            s.schedule(s.now + params.one_way_us, arrive)

        sim.schedule(sim.now + params.ack_delay_us, send_ack)
        if policy == Policy.PING_ON_IDLE:
            arm_deadline(sim)

    def send_frame(sim, frame_id):
        state["sent"] += 1
        dest = conn.server_path

        def arrive(s):
            if net.reaches_client(dest, s.now):
                client_receive(s, frame_id)

        sim.schedule(sim.now + params.one_way_us, arrive)

    n_frames = duration_us // frame_interval_us
    last_arrival_us = (n_frames - 1) * frame_interval_us + params.one_way_us

    def arm_deadline(sim):
        expected_by = sim.now + idle_deadline

        def check(s):
            if s.now >= last_arrival_us:
                return  # stream over; nothing left to expect
            if state["last_delivery"] + idle_deadline > s.now:
                return  # a frame arrived in the meantime; its ack re-armed us
            if s.now < state["ping_muted_until"]:
                return
            # missed deadline: one ping from the current address
            state["pings"] += 1
            state["ping_muted_until"] = s.now + idle_deadline + params.rtt_us
            src = conn.client_addr
            s.schedule(s.now + params.one_way_us,
                       lambda s2: conn.on_client_packet(conn.conn_id, src))
            s.schedule(s.now + idle_deadline + params.rtt_us, check)

        sim.schedule(expected_by, check)

    for i in range(n_frames):
        sim.schedule(i * frame_interval_us, lambda s, i=i: send_frame(s, i))
    for t in handover_times_us:
        sim.schedule(t, lambda s: net.migrate(s.now))
    if policy == Policy.PING_ON_IDLE:
        arm_deadline(sim)

    sim.run_until(duration_us + params.give_up_us)

    # deadlocked: the stream went permanently silent mid-run, i.e. frames
    # kept being pushed for at least the give-up horizon past the last
    # delivery and none arrived
    last_send_us = (n_frames - 1) * frame_interval_us
    deadlocked = (state["delivered"] < state["sent"]
                  and state["last_delivery"] + params.give_up_us <= last_send_us)

    metrics = AppMetrics(app="live", policy=policy.value,
                         handovers=len(handover_times_us))
    metrics.frames_delivered = state["delivered"]
    metrics.fps = state["delivered"] / duration_s
    metrics.deadlocked = deadlocked
    metrics.pings = state["pings"]
    return metrics
