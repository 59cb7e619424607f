"""
The three headline experiments: per-handover message accounting for both
architectures, handover completion time under control-plane load with a
throttled core, and user-plane path latency with and without anchoring.
"""
import math
from dataclasses import dataclass, field

from . import control, lte, security
from .control import Hop, Inb, Sme, Ue
from .kernel import Simulator, US_PER_S
from .messages import count_messages

# passive connection migration costs at most this many transport-layer
# control packets; the ping fix adds exactly one more
PASSIVE_MIGRATION_PACKETS_MAX = 2
PING_FIX_PACKETS = 1


def make_subdb(imsis, seed=0):
    import random
    rng = random.Random(seed)
    return {imsi: security.SubscriberRecord(
        imsi=imsi, k=rng.getrandbits(128).to_bytes(16, "big"))
        for imsi in imsis}


def _fresh_encor(seed=0):
    subdb = make_subdb([1], seed)
    sme = Sme(subdb, seed=seed)
    inb_a = Inb("inb_a", 0x2001_0db8_0000_0001)
    inb_b = Inb("inb_b", 0x2001_0db8_0000_0002)
    hop = Hop("hop", ["inb_a", "inb_b"])
    ue = Ue(imsi=1, k=subdb[1].k)
    ctx, _ = control.attach(ue, inb_a, sme)
    return ue, ctx, inb_a, inb_b, sme, hop


@dataclass
class TableRow:
    arch: str
    quic_min: int
    quic_max: int
    network_total: int
    network_via_core: int

    @property
    def total_min(self):
        return self.network_total + self.quic_min

    @property
    def total_max(self):
        return self.network_total + self.quic_max

    def to_csv_row(self):
        return (self.arch, self.quic_min, self.quic_max, self.network_total,
                self.network_via_core, self.total_min, self.total_max)


def run_message_table(mode="core-assisted", seed=0):
    """One canonical handover per architecture, tallied from its trace."""
    # LTE baseline
    subdb = make_subdb([1], seed)
    core = lte.LteCore(subdb, seed=seed)
    lte_ue = Ue(imsi=1, k=subdb[1].k)
    lte.attach_lte(lte_ue, "enb_a", core)
    lte_trace, _ = lte.s1_handover(lte_ue, "enb_a", "enb_b", core)
    _, lte_core_count = count_messages(lte_trace)

    # edge-routed architecture
    ue, ctx, inb_a, inb_b, sme, hop = _fresh_encor(seed)
    if mode == "direct":
        trace = control.handover_direct(ctx, ue, inb_a, inb_b, hop)
    else:
        trace = control.handover_core_assisted(ctx, ue, inb_a, inb_b, sme, hop)
    _, via_core = count_messages(trace)

    rows = [
        TableRow("LTE", 0, 0, len(lte_trace), lte_core_count),
        TableRow("EnCoR", 0, PASSIVE_MIGRATION_PACKETS_MAX,
                 len(trace), via_core),
        TableRow("EnCoR+modQUIC", PING_FIX_PACKETS,
                 PASSIVE_MIGRATION_PACKETS_MAX + PING_FIX_PACKETS,
                 len(trace), via_core),
    ]
    return rows, {"lte": lte_trace, "encor": trace}


# -- handover under load --------------------------------------------------

@dataclass
class LoadScenario:
    ue_count: int = 32
    bs_count: int = 64
    rates_per_s: tuple = (2, 4, 8, 16, 24, 30)
    core_service_rate: float = 500.0    # the CPU throttle
    edge_service_rate: float = 100_000.0
    link_latency_us: int = 1_000
    duration_s: float = 20.0
    seed: int = 0

    def __post_init__(self):
        if list(self.rates_per_s) != sorted(self.rates_per_s):
            raise ValueError("rate sweep must be ascending")


@dataclass
class LoadPoint:
    arch: str
    rate_per_s: float
    mean_ms: float
    p95_ms: float
    core_msgs_per_handover: int
    core_utilization: float
    saturated: bool
    completions: int

    def to_csv_row(self):
        return (self.arch, self.rate_per_s, round(self.mean_ms, 3),
                round(self.p95_ms, 3), self.core_msgs_per_handover,
                round(self.core_utilization, 4), int(self.saturated),
                self.completions)


# canonical per-message core flags for each architecture's sequence
ENCOR_SEQUENCE_CORE_FLAGS = (True, True, False, False, False, False, False)
LTE_SEQUENCE_CORE_FLAGS = (True,) * 15


def _run_load_point(arch, rate_per_s, scenario):
    flags = LTE_SEQUENCE_CORE_FLAGS if arch == "lte" else ENCOR_SEQUENCE_CORE_FLAGS
    arch_bit = 0 if arch == "encor" else 1
    sim = Simulator(seed=(scenario.seed << 20) ^ (arch_bit << 19)
                    ^ int(rate_per_s * 100))
    sim.add_node("core", scenario.core_service_rate)
    sim.add_node("edge", scenario.edge_service_rate)
    sim.add_link("edge", "core", scenario.link_latency_us)
    sim.add_link("edge", "edge", scenario.link_latency_us, bidirectional=False)

    completions = []

    def start_handover(sim):
        start = sim.now

        def step(i):
            if i == len(flags):
                completions.append(sim.now - start)
                return
            node = "core" if flags[i] else "edge"
            sim.send("edge", node, ("ho", i),
                     on_delivered=lambda s, m: step(i + 1),
                     category="core" if flags[i] else "edge")

        step(0)

    # Poisson handover arrivals over the run horizon
    horizon = round(scenario.duration_s * US_PER_S)
    t = 0
    while True:
        t += round(sim.rng.expovariate(rate_per_s) * US_PER_S)
        if t >= horizon:
            break
        sim.schedule(t, start_handover)
    sim.run()

    times_ms = sorted(c / 1000 for c in completions)
    n = len(times_ms)
    mean_ms = sum(times_ms) / n if n else 0.0
    p95_ms = times_ms[min(n - 1, math.ceil(0.95 * n) - 1)] if n else 0.0
    core_msgs = sum(flags)
    util = rate_per_s * core_msgs / scenario.core_service_rate
    return LoadPoint(arch=arch, rate_per_s=rate_per_s, mean_ms=mean_ms,
                     p95_ms=p95_ms, core_msgs_per_handover=core_msgs,
                     core_utilization=util, saturated=util >= 1.0,
                     completions=n)


def run_load_sweep(scenario=None):
    """Both architectures on the same topology and core throttle; returns
    {arch: [LoadPoint per swept rate]}."""
    scenario = scenario or LoadScenario()
    results = {}
    for arch in ("encor", "lte"):
        results[arch] = [_run_load_point(arch, r, scenario)
                         for r in scenario.rates_per_s]
    return results


# -- user-plane path latency ----------------------------------------------

DEFAULT_TOPOLOGY = {
    ("ue", "enb"): 5_000,
    ("ue", "inb"): 5_000,
    ("enb", "sgw"): 5_000,
    ("sgw", "pgw"): 10_000,
    ("pgw", "internet"): 5_000,
    ("enb", "internet"): 5_000,
    ("inb", "internet"): 5_000,
}


def run_path_latency(topology=None):
    """One-way user-plane latency: anchored detour vs edge egress."""
    topo = dict(DEFAULT_TOPOLOGY if topology is None else topology)

    def hop(a, b):
        if (a, b) in topo:
            return topo[(a, b)]
        return topo[(b, a)]

    lte_path = ["ue", "enb", "sgw", "pgw", "internet"]
    encor_path = ["ue", "inb", "internet"]
    lte_latency = sum(hop(a, b) for a, b in zip(lte_path, lte_path[1:]))
    encor_latency = sum(hop(a, b) for a, b in zip(encor_path, encor_path[1:]))
    return {
        "lte": {"path": lte_path, "one_way_us": lte_latency},
        "encor": {"path": encor_path, "one_way_us": encor_latency},
    }
