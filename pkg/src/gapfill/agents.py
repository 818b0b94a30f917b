"""Minimal in-process agent platform: named agents, typed performatives,
per-pair FIFO mailboxes, and a service directory.

Delivery is cooperative: messages queue on (sender, receiver) channels and
``run_until_idle`` drains them, letting a scheduler pick which nonempty
channel goes next. FIFO per channel and exactly-once delivery hold under any
scheduler; cross-channel ordering is deliberately unspecified, which is what
the randomized-scheduler tests exercise. A message to a dead or unknown agent
bounces back to its sender as a FAILURE.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Callable

from .errors import RegistrationError, SchemaError


class Performative(str, Enum):
    REQUEST = "request"
    AGREE = "agree"
    REFUSE = "refuse"
    INFORM = "inform"
    FAILURE = "failure"


@dataclass(frozen=True, order=True)
class AgentId:
    name: str


ENV = AgentId("_env")


@dataclass(frozen=True)
class Message:
    performative: Performative
    sender: AgentId
    receiver: AgentId
    conversation_id: str
    content: str
    seq: int

    def payload(self) -> dict:
        return json.loads(self.content) if self.content else {}

    def to_json_dict(self) -> dict:
        return {
            "performative": self.performative.value,
            "sender": self.sender.name,
            "receiver": self.receiver.name,
            "conversation_id": self.conversation_id,
            "content": self.content,
            "seq": self.seq,
        }


class Directory:
    """Service name -> registered agents, kept sorted for determinism."""

    def __init__(self):
        self._services: dict[str, set[AgentId]] = {}

    def register(self, service: str, agent: AgentId) -> None:
        self._services.setdefault(service, set()).add(agent)

    def deregister(self, agent: AgentId) -> None:
        for members in self._services.values():
            members.discard(agent)

    def lookup(self, service: str) -> list[AgentId]:
        return sorted(self._services.get(service, ()), key=lambda a: a.name)

    def services(self) -> list[str]:
        return sorted(s for s, members in self._services.items() if members)


class RoundRobinScheduler:
    """Deterministic default: cycle through nonempty channels in name order."""

    def __init__(self):
        self._cursor = 0

    def pick(self, channels: list[tuple[AgentId, AgentId]]) -> tuple[AgentId, AgentId]:
        choice = channels[self._cursor % len(channels)]
        self._cursor += 1
        return choice


class RandomScheduler:
    """Seeded adversary for property tests: any nonempty channel may go next."""

    def __init__(self, seed: int):
        self._rng = random.Random(seed)

    def pick(self, channels: list[tuple[AgentId, AgentId]]) -> tuple[AgentId, AgentId]:
        return channels[self._rng.randrange(len(channels))]


class AgentContext:
    """Handle given to message handlers for replying and platform access."""

    def __init__(self, platform: "Platform", agent_id: AgentId):
        self.platform = platform
        self.id = agent_id

    def send(
        self,
        receiver: AgentId,
        performative: Performative,
        content: dict | str = "",
        conversation_id: str = "",
    ) -> Message:
        return self.platform.post(self.id, receiver, performative, content, conversation_id)

    def reply(self, to: Message, performative: Performative, content: dict | str = "") -> Message:
        return self.send(to.sender, performative, content, to.conversation_id)

    def lookup(self, service: str) -> list[AgentId]:
        return self.platform.directory.lookup(service)


Handler = Callable[[AgentContext, Message], None]


class Platform:
    """One in-process container of agents plus its service directory."""

    def __init__(self, scheduler=None):
        self.scheduler = scheduler or RoundRobinScheduler()
        self.directory = Directory()
        self.env_inbox: list[Message] = []
        self.trace: list[dict] = []
        self._handlers: dict[AgentId, Handler] = {}
        self._contexts: dict[AgentId, AgentContext] = {}
        self._channels: dict[tuple[AgentId, AgentId], deque[Message]] = {}
        self._seq: dict[tuple[AgentId, AgentId], int] = {}

    # -- lifecycle ---------------------------------------------------------

    def spawn(self, name: str, handler: Handler) -> AgentId:
        agent = AgentId(name)
        if agent in self._handlers or agent == ENV:
            raise RegistrationError(f"agent name {name!r} already registered")
        self._handlers[agent] = handler
        self._contexts[agent] = AgentContext(self, agent)
        return agent

    def shutdown(self, agent: AgentId) -> None:
        self._handlers.pop(agent, None)
        self._contexts.pop(agent, None)
        self.directory.deregister(agent)

    def is_live(self, agent: AgentId) -> bool:
        return agent in self._handlers or agent == ENV

    def agents(self) -> list[AgentId]:
        return sorted(self._handlers, key=lambda a: a.name)

    # -- messaging ---------------------------------------------------------

    def post(
        self,
        sender: AgentId,
        receiver: AgentId,
        performative: Performative,
        content: dict | str = "",
        conversation_id: str = "",
    ) -> Message:
        """Build, stamp, and enqueue a message; returns the stamped message."""
        if isinstance(content, dict):
            content = json.dumps(content, sort_keys=True)
        elif not isinstance(content, str):
            raise SchemaError("message content must be a dict or a pre-serialized string")
        key = (sender, receiver)
        seq = self._seq.get(key, 0) + 1
        self._seq[key] = seq
        msg = Message(Performative(performative), sender, receiver, conversation_id, content, seq)
        return self.send(msg)

    def send(self, msg: Message) -> Message:
        if not self.is_live(msg.receiver):
            self._trace_event("dead-letter", msg)
            failure = {
                "reason": "unknown-receiver",
                "receiver": msg.receiver.name,
                "original_seq": msg.seq,
            }
            if self.is_live(msg.sender) and msg.sender != ENV:
                return self.post(
                    ENV, msg.sender, Performative.FAILURE, failure, msg.conversation_id
                )
            self._trace_event("dropped", msg)
            return msg
        self._channels.setdefault((msg.sender, msg.receiver), deque()).append(msg)
        self._trace_event("queued", msg)
        return msg

    def run_until_idle(self, max_deliveries: int | None = None) -> int:
        """Deliver queued messages until quiescent; returns delivery count."""
        delivered = 0
        while True:
            nonempty = sorted(
                (k for k, q in self._channels.items() if q),
                key=lambda k: (k[0].name, k[1].name),
            )
            if not nonempty:
                return delivered
            if max_deliveries is not None and delivered >= max_deliveries:
                raise RuntimeError(f"exceeded delivery budget of {max_deliveries}")
            key = self.scheduler.pick(nonempty)
            msg = self._channels[key].popleft()
            self._deliver(msg)
            delivered += 1

    def _deliver(self, msg: Message) -> None:
        if msg.receiver == ENV:
            self._trace_event("delivered", msg)
            self.env_inbox.append(msg)
            return
        handler = self._handlers.get(msg.receiver)
        if handler is None:
            # receiver shut down after the message was queued; bounce it
            self.send(msg)
            return
        self._trace_event("delivered", msg)
        try:
            handler(self._contexts[msg.receiver], msg)
        except Exception as exc:  # noqa: BLE001 - surfaced to the sender
            if msg.sender != ENV and self.is_live(msg.sender):
                self.post(
                    ENV,
                    msg.sender,
                    Performative.FAILURE,
                    {"reason": f"handler-error: {exc}", "receiver": msg.receiver.name},
                    msg.conversation_id,
                )
            else:
                raise

    def _trace_event(self, event: str, msg: Message) -> None:
        record = {"index": len(self.trace), "event": event}
        record.update(msg.to_json_dict())
        self.trace.append(record)

    def trace_jsonl(self) -> str:
        return "\n".join(json.dumps(r, sort_keys=True) for r in self.trace) + "\n"

    def deliveries(self, event: str = "delivered") -> list[dict]:
        return [r for r in self.trace if r["event"] == event]
