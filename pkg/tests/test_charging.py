import random

import pytest
from hypothesis import given, strategies as st

from encorsim.charging import Account, ChargingLog, ChargingProxy, InbQuota, Ocs

MB = 1024 * 1024


def make_tier(balance, batch_bytes=ChargingProxy.DEFAULT_BATCH,
              subquota_bytes=MB):
    log = ChargingLog()
    ocs = Ocs([Account(1, balance)], log=log)
    cp = ChargingProxy("cp", ocs, batch_bytes=batch_bytes, log=log)
    inb = InbQuota(1, subquota_bytes=subquota_bytes, log=log)
    return ocs, cp, inb, log


def test_grant_is_min_of_request_and_balance():
    ocs = Ocs([Account(1, 100)])
    assert ocs.grant(1, 60) == 60
    assert ocs.grant(1, 60) == 40
    assert ocs.grant(1, 60) == 0
    assert ocs.accounts[1].balance == 0


def test_grant_unknown_subscriber_is_zero():
    ocs = Ocs([])
    assert ocs.grant(7, 100) == 0


def test_negative_balance_rejected():
    with pytest.raises(ValueError):
        Account(1, -1)


def test_batching_amortizes_ocs_requests():
    # five 2 MB sub-quotas fit one 10 MB batch: exactly one OCS round trip
    ocs, cp, _, _ = make_tier(balance=100 * MB)
    for _ in range(5):
        assert cp.subquota(1, 2 * MB) == 2 * MB
    assert ocs.request_count == 1
    # the sixth exceeds the cached batch and triggers a refill
    assert cp.subquota(1, 2 * MB) == 2 * MB
    assert ocs.request_count == 2


def test_proxy_serves_partial_when_balance_short():
    ocs, cp, _, _ = make_tier(balance=3 * MB)
    assert cp.subquota(1, 2 * MB) == 2 * MB
    assert cp.subquota(1, 2 * MB) == 1 * MB
    assert cp.subquota(1, 2 * MB) == 0


def test_proxy_restart_forfeits_cache_without_overcharge():
    ocs, cp, _, _ = make_tier(balance=20 * MB)
    cp.subquota(1, 2 * MB)  # pulls a 10 MB batch, 8 MB cached
    cp.restart()
    # forfeited quota stays decremented at the OCS -- never over-charges
    assert ocs.accounts[1].balance == 10 * MB
    assert cp.subquota(1, 2 * MB) == 2 * MB
    assert ocs.request_count == 2


def test_inb_threshold_refill():
    # 1 MB sub-quotas, refill at 80% usage: a consume that crosses the
    # threshold tops the grant up before the next call
    ocs, cp, inb, _ = make_tier(balance=100 * MB)
    assert inb.consume(800_000, cp) == 800_000  # below 0.8 * 1 MiB
    assert inb.granted == MB
    assert inb.consume(100_000, cp) == 100_000  # crosses the threshold
    assert inb.granted == 2 * MB


def test_inb_consume_exact_accounting():
    ocs, cp, inb, _ = make_tier(balance=100 * MB)
    total = 0
    for _ in range(50):
        total += inb.consume(300_000, cp)
    assert total == 50 * 300_000
    assert inb.used == total


def test_cutoff_when_everything_exhausted():
    ocs, cp, inb, log = make_tier(balance=int(1.5 * MB))
    delivered = inb.consume(3 * MB, cp)
    assert delivered == int(1.5 * MB)
    assert inb.cut_off
    assert inb.consume(1, cp) == 0
    assert any(e.event == "cutoff" for e in log.events)


def test_cutoff_subscriber_stays_cut_off():
    ocs, cp, inb, _ = make_tier(balance=MB)
    inb.consume(2 * MB, cp)
    assert inb.cut_off
    # even a fresh balance does not resurrect this enforcement point
    ocs.accounts[1].balance = 10 * MB
    assert inb.consume(100, cp) == 0


def _conservation(ocs_balance, chunks, seed):
    rng = random.Random(seed)
    ocs, cp, inb, log = make_tier(balance=ocs_balance)
    delivered = 0
    for _ in range(chunks):
        delivered += inb.consume(rng.randrange(1, 500_000), cp)
    granted = sum(e.nbytes for e in log.events
                  if e.actor == "ocs" and e.event == "grant")
    sub = sum(e.nbytes for e in log.events
              if e.actor == "cp" and e.event == "subquota")
    assert delivered <= sub <= granted <= ocs_balance
    assert granted == ocs_balance - ocs.accounts[1].balance
    assert delivered == inb.used


@pytest.mark.parametrize("seed", range(5))
def test_conservation_randomized_workload(seed):
    _conservation(ocs_balance=7 * MB, chunks=60, seed=seed)


@given(balance=st.integers(min_value=0, max_value=4 * MB),
       sizes=st.lists(st.integers(min_value=1, max_value=MB), max_size=20))
def test_conservation_property(balance, sizes):
    ocs, cp, inb, log = make_tier(balance=balance)
    delivered = sum(inb.consume(n, cp) for n in sizes)
    assert delivered <= balance
    assert delivered == inb.used
    assert ocs.accounts[1].balance >= 0


def test_log_rows_are_csv_shaped():
    _, cp, inb, log = make_tier(balance=5 * MB)
    inb.consume(100, cp, now_us=42)
    rows = [e.to_csv_row() for e in log.events]
    assert all(len(r) == 5 for r in rows)
    assert rows[-1][1] == "inb"
