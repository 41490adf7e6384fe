"""Star-topology telemetry network in simulated time.

Every device message travels device -> gateway -> cloud; gateways own a
single uplink. Real-time traffic is topic pub/sub with two QoS classes
(AT_MOST_ONCE is fire-and-forget, AT_LEAST_ONCE retransmits until acked),
periodic traffic is an HTTP-style batch channel with bounded-backoff
retries and batch-id dedup at the cloud store.

All delivery timing/loss is drawn from per-link named RNG streams, so the
whole network is deterministic for a given seed and replays exactly.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable

from .rng import RngStream, split_rng

__all__ = [
    "Qos",
    "TopicError",
    "RoutingError",
    "topic_matches",
    "validate_filter",
    "validate_topic",
    "TelemetryEnvelope",
    "LinkModel",
    "Topology",
    "BatchTransfer",
    "Network",
]


class Qos(str, Enum):
    AT_MOST_ONCE = "AT_MOST_ONCE"
    AT_LEAST_ONCE = "AT_LEAST_ONCE"


class TopicError(ValueError):
    """Invalid topic or subscription filter."""


class RoutingError(ValueError):
    """Message from/to an endpoint the topology does not know."""


def validate_topic(topic: str) -> None:
    """Topics are slash-delimited, non-empty levels, no wildcards."""
    if not topic:
        raise TopicError("empty topic")
    for level in topic.split("/"):
        if not level:
            raise TopicError(f"empty level in topic {topic!r}")
        if "+" in level or "#" in level:
            raise TopicError(f"wildcard in topic {topic!r}")


def validate_filter(filt: str) -> None:
    """Filters allow '+' for one level and a trailing '#' for the rest."""
    if not filt:
        raise TopicError("empty filter")
    levels = filt.split("/")
    for i, level in enumerate(levels):
        if not level:
            raise TopicError(f"empty level in filter {filt!r}")
        if level == "#":
            if i != len(levels) - 1:
                raise TopicError(f"'#' must be the final level in {filt!r}")
        elif "#" in level:
            raise TopicError(f"'#' embedded in a level in {filt!r}")
        elif level != "+" and "+" in level:
            raise TopicError(f"'+' embedded in a level in {filt!r}")


def topic_matches(filt: str, topic: str) -> bool:
    """Level-by-level match; '#' also matches zero remaining levels."""
    validate_filter(filt)
    validate_topic(topic)
    flevels = filt.split("/")
    tlevels = topic.split("/")
    i = 0
    while i < len(flevels):
        if flevels[i] == "#":
            # matches everything from here on, including nothing
            return len(tlevels) >= i
        if i >= len(tlevels):
            return False
        if flevels[i] != "+" and flevels[i] != tlevels[i]:
            return False
        i += 1
    return i == len(tlevels)


@dataclass
class TelemetryEnvelope:
    """One routed pub/sub message."""

    topic: str
    qos: Qos
    payload: dict
    published_tick: int
    source: str
    msg_id: int = 0
    delivered_tick: int | None = None
    dup_flag: bool = False


@dataclass(frozen=True)
class LinkModel:
    """Per-hop latency/loss parameters (ticks, probability per attempt)."""

    base_latency: int = 1
    jitter: int = 0
    drop_probability: float = 0.0

    def validate(self) -> None:
        if self.base_latency < 0 or self.jitter < 0:
            raise ValueError("link latency/jitter must be non-negative")
        if not (0.0 <= self.drop_probability < 1.0):
            raise ValueError("drop_probability must be in [0, 1)")


@dataclass
class Topology:
    """Star wiring: devices hang off gateways, gateways uplink to the cloud."""

    device_gateway: dict[str, str]
    gateways: list[str]

    def validate(self) -> None:
        for dev, gw in self.device_gateway.items():
            if gw not in self.gateways:
                raise RoutingError(f"device {dev!r} wired to unknown gateway {gw!r}")

    def gateway_of(self, device: str) -> str:
        try:
            return self.device_gateway[device]
        except KeyError:
            raise RoutingError(f"unknown device {device!r}") from None


@dataclass
class BatchTransfer:
    """One periodic HTTP-style upload of aggregated records."""

    batch_id: str
    gateway_id: str
    records: list[dict]
    request_tick: int
    ack_tick: int | None = None
    retry_count: int = 0


MAX_PAYLOAD_FIELDS = 64


class Network:
    """Deterministic scheduler for pub/sub hops and batch transfers.

    Consumers pull arrivals with `deliver(tick)`; the engine calls it once
    per tick in the transport phase. Handlers are attached per endpoint
    class (gateway inbox, cloud inbox, device command inbox).
    """

    def __init__(
        self,
        topology: Topology,
        device_link: LinkModel,
        uplink: LinkModel,
        seed: int,
        qos1_timeout: int = 4,
        qos1_max_attempts: int = 40,
        batch_backoff_base: int = 2,
        batch_max_retries: int = 5,
    ):
        topology.validate()
        device_link.validate()
        uplink.validate()
        self.topology = topology
        self.device_link = device_link
        self.uplink = uplink
        self.qos1_timeout = qos1_timeout
        self.qos1_max_attempts = qos1_max_attempts
        self.batch_backoff_base = batch_backoff_base
        self.batch_max_retries = batch_max_retries

        # one stream per link direction so changing one link's parameters
        # never perturbs draws on another
        self._link_rng: dict[str, RngStream] = {}
        self._seed = seed

        self._next_msg_id = 0
        # events bucketed by tick; within a tick, strict FIFO
        self._queue: dict[int, deque] = {}
        self._valid_topics: set[str] = set()

        # QoS1 bookkeeping: msg_id -> (envelope, hop, attempts_left)
        self._awaiting_ack: dict[int, dict] = {}
        # batches awaiting ack: batch_id -> state
        self._awaiting_batch_ack: dict[str, dict] = {}
        self._batch_counter: dict[str, int] = {}
        self._store_seen_batches: set[str] = set()
        self.dead_letters = 0

        # per-delivery ledger, opt-in (tests and full-detail traces)
        self.log_deliveries = False
        self.delivery_log: list[dict] = []

    # -- wiring ------------------------------------------------------------

    def link_rng(self, link_id: str) -> RngStream:
        rng = self._link_rng.get(link_id)
        if rng is None:
            rng = split_rng(self._seed, f"link-loss/{link_id}")
            self._link_rng[link_id] = rng
        return rng

    def _link_for_hop(self, hop: str) -> LinkModel:
        return self.device_link if hop.startswith("dev") else self.uplink

    def _schedule(self, tick: int, event: tuple) -> None:
        bucket = self._queue.get(tick)
        if bucket is None:
            bucket = self._queue[tick] = deque()
        bucket.append(event)

    def _check_topic(self, topic: str) -> None:
        if topic not in self._valid_topics:
            validate_topic(topic)
            self._valid_topics.add(topic)

    def _hop_outcome(self, link: LinkModel, link_id: str) -> tuple[bool, int]:
        """(delivered, latency) for one transmission attempt."""
        rng = self.link_rng(link_id)
        dropped = link.drop_probability > 0 and rng.random() < link.drop_probability
        latency = link.base_latency
        if link.jitter > 0:
            latency += rng.randint(0, link.jitter)
        return (not dropped, latency)

    # -- pub/sub -----------------------------------------------------------

    def publish(self, envelope: TelemetryEnvelope, now: int) -> int:
        """Send a device-originated message toward the cloud (hop 1 of 2)."""
        self._check_topic(envelope.topic)
        if len(envelope.payload) > MAX_PAYLOAD_FIELDS:
            raise ValueError(f"oversize payload on {envelope.topic}")
        gw = self.topology.gateway_of(envelope.source)
        self._next_msg_id += 1
        envelope.msg_id = self._next_msg_id
        self._transmit(envelope, hop="dev-up", src=envelope.source, dst=gw, now=now)
        return envelope.msg_id

    def forward_to_cloud(self, envelope: TelemetryEnvelope, gateway_id: str, now: int) -> None:
        """Gateway relays a message on its uplink (hop 2 of 2)."""
        if gateway_id not in self.topology.gateways:
            raise RoutingError(f"unknown gateway {gateway_id!r}")
        if envelope.msg_id == 0:
            self._next_msg_id += 1
            envelope.msg_id = self._next_msg_id
        self._transmit(envelope, hop="gw-up", src=gateway_id, dst="cloud", now=now)

    def send_command(self, envelope: TelemetryEnvelope, device: str, now: int) -> None:
        """Cloud sends a command down: cloud -> gateway -> device."""
        self._check_topic(envelope.topic)
        gw = self.topology.gateway_of(device)
        self._next_msg_id += 1
        envelope.msg_id = self._next_msg_id
        self._transmit(envelope, hop="gw-down", src="cloud", dst=gw, now=now,
                       final_dst=device)

    def _transmit(self, envelope: TelemetryEnvelope, hop: str, src: str, dst: str,
                  now: int, final_dst: str | None = None, attempt: int = 1) -> None:
        link = self._link_for_hop(hop)
        link_id = f"{src}->{dst}"
        ok, latency = self._hop_outcome(link, link_id)
        if ok:
            self._schedule(now + latency, ("arrive", envelope, hop, src, dst, final_dst))
        if envelope.qos is Qos.AT_LEAST_ONCE:
            key = envelope.msg_id * 8 + _HOP_INDEX[hop]
            state = self._awaiting_ack.get(key)
            if state is None:
                state = {"envelope": envelope, "hop": hop, "src": src, "dst": dst,
                         "final_dst": final_dst, "attempts": 0, "acked": False}
                self._awaiting_ack[key] = state
            state["attempts"] = attempt
            self._schedule(now + self.qos1_timeout, ("ack-timeout", key, attempt, now))

    def _handle_arrival(self, tick: int, envelope: TelemetryEnvelope, hop: str,
                        src: str, dst: str, final_dst: str | None,
                        sinks: dict[str, Callable]) -> None:
        if envelope.qos is Qos.AT_LEAST_ONCE:
            key = envelope.msg_id * 8 + _HOP_INDEX[hop]
            state = self._awaiting_ack.get(key)
            if state is not None:
                # ack travels back over the same link and may itself drop
                link = self._link_for_hop(hop)
                ok, _lat = self._hop_outcome(link, f"{dst}->{src}")
                if ok:
                    state["acked"] = True
        # duplicates are delivered as-is (dup_flag set); consumers dedup
        envelope.delivered_tick = tick
        if self.log_deliveries:
            self.delivery_log.append({
                "tick": tick, "msg_id": envelope.msg_id, "topic": envelope.topic,
                "hop": hop, "src": src, "dst": dst, "dup": envelope.dup_flag,
            })
        if hop == "dev-up":
            sinks["gateway"](dst, envelope, tick)
        elif hop == "gw-up":
            sinks["cloud"](envelope, tick)
        elif hop == "gw-down":
            # relay gateway -> device on the device link, immediately
            relay = TelemetryEnvelope(
                topic=envelope.topic, qos=envelope.qos, payload=envelope.payload,
                published_tick=envelope.published_tick, source=src,
                msg_id=envelope.msg_id)
            self._transmit(relay, hop="dev-down", src=dst, dst=final_dst or "?",
                           now=tick)
        elif hop == "dev-down":
            sinks["device"](dst, envelope, tick)

    # -- batch channel -----------------------------------------------------

    def send_batch(self, gateway_id: str, records: list[dict], now: int) -> BatchTransfer:
        n = self._batch_counter.get(gateway_id, 0) + 1
        self._batch_counter[gateway_id] = n
        batch = BatchTransfer(
            batch_id=f"{gateway_id}-{n}", gateway_id=gateway_id,
            records=records, request_tick=now)
        self._awaiting_batch_ack[batch.batch_id] = {"batch": batch, "done": False}
        self._send_batch_attempt(batch, now)
        return batch

    def _send_batch_attempt(self, batch: BatchTransfer, now: int) -> None:
        link_id = f"{batch.gateway_id}->cloud"
        ok, latency = self._hop_outcome(self.uplink, link_id)
        if ok:
            self._schedule(now + latency, ("batch-arrive", batch))
        timeout = 2 * (self.uplink.base_latency + self.uplink.jitter) + \
            self.batch_backoff_base * (2 ** batch.retry_count)
        self._schedule(now + timeout, ("batch-timeout", batch, batch.retry_count))

    def _handle_batch_arrival(self, tick: int, batch: BatchTransfer,
                              sinks: dict[str, Callable]) -> None:
        if batch.batch_id not in self._store_seen_batches:
            self._store_seen_batches.add(batch.batch_id)
            sinks["store"](batch, tick)
        # ack rides the downlink and may drop
        ok, latency = self._hop_outcome(self.uplink, f"cloud->{batch.gateway_id}")
        if ok:
            self._schedule(tick + latency, ("batch-ack", batch))

    def deliver(self, tick: int, sinks: dict[str, Callable]) -> None:
        """Process every network event scheduled at or before `tick`.

        `sinks` maps endpoint class to a callable:
          gateway(gateway_id, envelope, tick), cloud(envelope, tick),
          device(device_id, envelope, tick), store(batch, tick).

        Must be called for every tick in order; within a tick, events run
        in the order they were scheduled (FIFO), including events chained
        at the same tick by zero-latency hops.
        """
        stale = [k for k in self._queue if k < tick]
        for k in sorted(stale, reverse=True):
            merged = self._queue.pop(k)
            self._queue.setdefault(tick, deque()).extendleft(reversed(merged))
        bucket = self._queue.get(tick)
        while bucket:
            event = bucket.popleft()
            when = tick
            kind = event[0]
            if kind == "arrive":
                _, envelope, hop, src, dst, final_dst = event
                self._handle_arrival(when, envelope, hop, src, dst, final_dst, sinks)
            elif kind == "ack-timeout":
                _, key, attempt, _sent = event
                state = self._awaiting_ack.get(key)
                if state is None:
                    continue
                if state["acked"]:
                    del self._awaiting_ack[key]
                    continue
                if state["attempts"] != attempt:
                    continue  # a newer attempt owns the timer
                if state["attempts"] >= self.qos1_max_attempts:
                    del self._awaiting_ack[key]
                    self.dead_letters += 1
                    continue
                retry = replace(state["envelope"], dup_flag=True)
                state["envelope"] = retry
                self._transmit(retry, hop=state["hop"], src=state["src"],
                               dst=state["dst"], now=when,
                               final_dst=state["final_dst"],
                               attempt=state["attempts"] + 1)
            elif kind == "batch-arrive":
                self._handle_batch_arrival(when, event[1], sinks)
            elif kind == "batch-ack":
                batch = event[1]
                state = self._awaiting_batch_ack.get(batch.batch_id)
                if state is not None and not state["done"]:
                    state["done"] = True
                    batch.ack_tick = when
            elif kind == "batch-timeout":
                _, batch, retry_at = event
                state = self._awaiting_batch_ack.get(batch.batch_id)
                if state is None or state["done"] or batch.retry_count != retry_at:
                    continue
                if batch.retry_count >= self.batch_max_retries:
                    del self._awaiting_batch_ack[batch.batch_id]
                    self.dead_letters += 1
                    continue
                batch.retry_count += 1
                self._send_batch_attempt(batch, when)
        self._queue.pop(tick, None)


_HOP_INDEX = {"dev-up": 0, "gw-up": 1, "gw-down": 2, "dev-down": 3}
