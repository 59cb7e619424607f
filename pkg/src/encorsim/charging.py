"""
Online charging: a central quota authority (OCS), edge quota caches
(Charging Proxies), and per-device enforcement counters at base stations.

Proxies fetch quota from the OCS in batch units and hand out sub-quotas;
base stations count usage and ask for more when the current grant nears
exhaustion. Every grant and consumption step is logged so conservation
(delivered <= grants at each tier <= initial balance) is checkable.
"""
from dataclasses import dataclass, field


@dataclass
class Account:
    subscriber: int
    balance: int  # bytes remaining

    def __post_init__(self):
        if self.balance < 0:
            raise ValueError("balance must be nonnegative")


@dataclass
class ChargingEvent:
    time_us: int
    actor: str
    event: str
    subscriber: int
    nbytes: int

    def to_csv_row(self):
        return (self.time_us, self.actor, self.event, self.subscriber, self.nbytes)


class ChargingLog:
    def __init__(self):
        self.events = []

    def record(self, time_us, actor, event, subscriber, nbytes):
        self.events.append(ChargingEvent(time_us, actor, event, subscriber, nbytes))


class Ocs:
    """Central authority; the only place balances are decremented."""

    def __init__(self, accounts, log=None):
        self.accounts = {a.subscriber: a for a in accounts}
        self.log = log or ChargingLog()
        self.request_count = 0

    def grant(self, subscriber, requested, now_us=0):
        """Grant min(requested, balance); zero balance signals cutoff."""
        self.request_count += 1
        account = self.accounts.get(subscriber)
        if account is None:
            return 0
        granted = min(requested, account.balance)
        account.balance -= granted
        self.log.record(now_us, "ocs", "grant", subscriber, granted)
        return granted


class ChargingProxy:
    """Edge cache of OCS quota. Cached state is ephemeral: losing it
    forfeits the unreported remainder (never over-charges)."""

    DEFAULT_BATCH = 10 * 1024 * 1024

    def __init__(self, cp_id, ocs, batch_bytes=DEFAULT_BATCH, log=None):
        self.id = cp_id
        self.ocs = ocs
        self.batch_bytes = batch_bytes
        self.log = log or ocs.log
        self.cache = {}  # subscriber -> (granted, remaining)

    def subquota(self, subscriber, amount, now_us=0):
        """Serve a sub-quota from cache, refilling in batch units first
        if the cache cannot cover the request."""
        granted, remaining = self.cache.get(subscriber, (0, 0))
        if remaining < amount:
            got = self.ocs.grant(subscriber, self.batch_bytes, now_us)
            granted += got
            remaining += got
        out = min(amount, remaining)
        remaining -= out
        self.cache[subscriber] = (granted, remaining)
        if out:
            self.log.record(now_us, self.id, "subquota", subscriber, out)
        return out

    def restart(self):
        """Simulated crash: all cached (unreported) quota is forfeited."""
        self.cache.clear()


@dataclass
class InbQuota:
    """Per-device enforcement counter at a base station."""
    subscriber: int
    granted: int = 0
    used: int = 0
    refill_threshold: float = 0.8
    subquota_bytes: int = 1024 * 1024
    cut_off: bool = False
    log: ChargingLog = field(default_factory=ChargingLog)

    def consume(self, nbytes, cp, now_us=0):
        """Count traffic against the grant; returns the bytes allowed.

        Refills from the proxy when usage crosses the threshold; traffic
        beyond an exhausted, non-refillable grant is rejected.
        """
        if self.cut_off:
            return 0
        allowed = 0
        remaining = nbytes
        while remaining > 0:
            headroom = self.granted - self.used
            if headroom > 0:
                take = min(remaining, headroom)
                self.used += take
                allowed += take
                remaining -= take
            if self.granted == 0 or self.used >= self.refill_threshold * self.granted:
                got = cp.subquota(self.subscriber, self.subquota_bytes, now_us) \
                    if cp is not None else 0
                if got == 0:
                    if self.used >= self.granted and remaining > 0:
                        self.cut_off = True
                        self.log.record(now_us, "inb", "cutoff",
                                        self.subscriber, 0)
                    break
                self.granted += got
        if allowed:
            self.log.record(now_us, "inb", "deliver", self.subscriber, allowed)
        return allowed
