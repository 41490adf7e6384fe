import pytest

from iotfactory.transport import (BatchTransfer, LinkModel, Network, Qos,
                                  RoutingError, TelemetryEnvelope, Topology)


def star(n_devices=1, gw="gw1"):
    return Topology(device_gateway={f"m{i}": gw for i in range(1, n_devices + 1)},
                    gateways=[gw])


def passthrough_network(device_link, uplink, seed=1, **kw):
    """Network whose gateway sink relays everything once, like a dumb hub."""
    net = Network(star(4), device_link, uplink, seed, **kw)
    forwarded = set()
    deliveries = []

    def gw_sink(gw_id, env, tick):
        if env.msg_id not in forwarded:
            forwarded.add(env.msg_id)
            net.forward_to_cloud(env, gw_id, tick)

    sinks = {
        "gateway": gw_sink,
        "cloud": lambda env, tick: deliveries.append((env.msg_id, tick, env.dup_flag)),
        "device": lambda dev, env, tick: None,
        "store": lambda batch, tick: None,
    }
    return net, sinks, deliveries


def envelope(topic="plant/m1/energy", qos=Qos.AT_MOST_ONCE, src="m1", tick=0):
    return TelemetryEnvelope(topic=topic, qos=qos, payload={"v": 1},
                             published_tick=tick, source=src)


def test_lossless_star_delivers_at_publish_plus_two():
    net, sinks, deliveries = passthrough_network(
        LinkModel(1, 0, 0.0), LinkModel(1, 0, 0.0))
    net.publish(envelope(tick=0), 0)
    for t in range(5):
        net.deliver(t, sinks)
    assert deliveries == [(1, 2, False)]


def test_unknown_publisher_rejected():
    net, sinks, _ = passthrough_network(LinkModel(), LinkModel())
    with pytest.raises(RoutingError):
        net.publish(envelope(src="ghost"), 0)


def test_at_most_once_never_duplicates_and_halves_per_hop():
    net, sinks, deliveries = passthrough_network(
        LinkModel(1, 0, 0.5), LinkModel(1, 0, 0.5), seed=99)
    n = 10_000
    for i in range(n):
        net.publish(envelope(tick=i, src=f"m{i % 4 + 1}"), i)
    for t in range(n + 10):
        net.deliver(t, sinks)
    ids = [d[0] for d in deliveries]
    assert len(ids) == len(set(ids))  # delivered at most once, always
    # two independent 50% hops: end-to-end ~25%; binomial 5-sigma band
    rate = len(ids) / n
    sigma = (0.25 * 0.75 / n) ** 0.5
    assert abs(rate - 0.25) < 5 * sigma


def test_at_least_once_delivers_everything_under_heavy_loss():
    net, sinks, deliveries = passthrough_network(
        LinkModel(1, 0, 0.5), LinkModel(1, 0, 0.5), seed=7,
        qos1_timeout=3, qos1_max_attempts=60)
    n = 10_000
    for i in range(n):
        net.publish(envelope(qos=Qos.AT_LEAST_ONCE, tick=i, src=f"m{i % 4 + 1}"), i)
    # horizon sized so residual failure probability is far below 1e-9:
    # 60 attempts at 50% loss per message leg
    for t in range(n + 60 * 3 + 20):
        net.deliver(t, sinks)
    assert len({d[0] for d in deliveries}) == n


def test_duplicates_are_flagged():
    # drop acks aggressively: same data can arrive twice, dup flag set
    net, sinks, deliveries = passthrough_network(
        LinkModel(1, 0, 0.4), LinkModel(1, 0, 0.4), seed=3,
        qos1_timeout=2, qos1_max_attempts=60)
    for i in range(2000):
        net.publish(envelope(qos=Qos.AT_LEAST_ONCE, tick=i, src=f"m{i % 4 + 1}"), i)
    for t in range(2400):
        net.deliver(t, sinks)
    dups = [d for d in deliveries if d[2]]
    assert dups, "expected at least one flagged retransmission"
    originals = [d for d in deliveries if not d[2]]
    assert originals


def test_star_property_every_path_is_two_hops():
    net = Network(star(2), LinkModel(1, 0, 0.0), LinkModel(2, 0, 0.0), seed=1)
    net.log_deliveries = True
    hops_by_msg = {}
    sinks = {
        "gateway": lambda gw_id, env, tick: net.forward_to_cloud(env, gw_id, tick),
        "cloud": lambda env, tick: None,
        "device": lambda dev, env, tick: None,
        "store": lambda batch, tick: None,
    }
    for i in range(50):
        net.publish(envelope(tick=i, src=f"m{i % 2 + 1}"), i)
    for t in range(60):
        net.deliver(t, sinks)
    for entry in net.delivery_log:
        hops_by_msg.setdefault(entry["msg_id"], []).append(
            (entry["hop"], entry["src"], entry["dst"]))
    assert len(hops_by_msg) == 50
    for msg_id, hops in hops_by_msg.items():
        assert [h[0] for h in hops] == ["dev-up", "gw-up"]
        assert hops[0][2] == "gw1" and hops[1][2] == "cloud"


def test_jitter_within_bounds():
    net, sinks, deliveries = passthrough_network(
        LinkModel(1, 2, 0.0), LinkModel(1, 2, 0.0), seed=13)
    for i in range(500):
        net.publish(envelope(tick=0, src=f"m{i % 4 + 1}"), 0)
    for t in range(10):
        net.deliver(t, sinks)
    ticks = sorted({d[1] for d in deliveries})
    assert len(deliveries) == 500
    assert min(ticks) >= 2 and max(ticks) <= 6


# -- batch channel ----------------------------------------------------------


def batch_net(uplink, seed=1, **kw):
    net = Network(star(1), LinkModel(1, 0, 0.0), uplink, seed, **kw)
    stored = []
    sinks = {
        "gateway": lambda gw_id, env, tick: None,
        "cloud": lambda env, tick: None,
        "device": lambda dev, env, tick: None,
        "store": lambda batch, tick: stored.append((batch.batch_id, tick)),
    }
    return net, sinks, stored


def test_lossless_batch_ack_is_round_trip():
    net, sinks, stored = batch_net(LinkModel(2, 0, 0.0))
    batch = net.send_batch("gw1", [{"r": 1}], now=10)
    for t in range(10, 30):
        net.deliver(t, sinks)
    assert stored == [(batch.batch_id, 12)]
    assert batch.ack_tick == 14  # request 2 up + ack 2 down
    assert batch.retry_count == 0


def test_dropped_ack_retries_once_and_stores_once():
    # scripted loss: drop exactly the first ack (cloud->gw1 draw)
    net, sinks, stored = batch_net(LinkModel(2, 0, 0.0))
    ack_rng = net.link_rng("cloud->gw1")

    class ScriptedRng:
        def __init__(self, script):
            self.script = list(script)
        def random(self):
            return self.script.pop(0) if self.script else 0.99
        def randint(self, a, b):
            return a

    net._link_rng["cloud->gw1"] = ScriptedRng([0.0])  # first draw < p drops
    net.uplink = LinkModel(2, 0, 0.5)
    # with drop_probability 0.5, the scripted 0.0 drops the first ack;
    # subsequent draws (0.99) pass
    req_rng = ScriptedRng([0.9, 0.9, 0.9, 0.9])
    net._link_rng["gw1->cloud"] = req_rng

    batch = net.send_batch("gw1", [{"r": 1}], now=0)
    for t in range(0, 40):
        net.deliver(t, sinks)
    assert batch.retry_count == 1
    assert [b for b, _ in stored] == [batch.batch_id]  # dedup at the store
    assert batch.ack_tick is not None


def test_empty_buffer_emits_no_transfer():
    # engine-level rule; at this layer an empty record list is the signal
    net, sinks, stored = batch_net(LinkModel(1, 0, 0.0))
    # callers skip send_batch entirely on empty buffers; nothing scheduled
    for t in range(5):
        net.deliver(t, sinks)
    assert stored == []
    assert net.dead_letters == 0


def test_dead_letter_after_max_retries():
    net, sinks, stored = batch_net(LinkModel(1, 0, 0.95), seed=5,
                                   batch_max_retries=3)
    net.send_batch("gw1", [{"r": 1}], now=0)
    for t in range(400):
        net.deliver(t, sinks)
    # either it eventually landed or it was dead-lettered; with 95% loss
    # and only 3 retries the dead-letter path is overwhelmingly likely
    assert net.dead_letters >= 1 or stored
