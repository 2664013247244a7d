"""Deterministic partially synchronous network simulator.

Time is a global integer timeslot.  Each tick is two-phase: every process
steps on the messages due now (ascending id), and only afterwards are the
produced sends scheduled.
"""
from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field, fields
from typing import Optional

from .adversary import KINDS, Adversary, ByzantineNode, make_delivery
from .certs import Finalization, Notarization
from .chainstr import HashOracle, comparable, make_genesis, resolve_prefix
from .messages import ALL, CertMsg, Propose, SignedMsg
from .node import Node
from .params import ParamError, ProtocolParams


class ScenarioError(ValueError):
    pass


class InvariantViolation(RuntimeError):
    def __init__(self, message: str, suffix=()):
        super().__init__(message)
        self.suffix = list(suffix)


SCENARIO_FIELDS = ("name", "seed", "gst", "horizon", "adversary", "byzantine",
                   "delivery", "minting", "mint_depth", "stop_epoch", "hash_mode",
                   "allow_unsafe", "trace_messages")


@dataclass(frozen=True)
class Scenario:
    params: ProtocolParams = field(default_factory=ProtocolParams)
    name: str = "scenario"
    seed: int = 0
    gst: int = 0
    horizon: int = 2000
    adversary: str = "honest"
    knobs: dict = field(default_factory=dict)
    byzantine: Optional[tuple] = None
    delivery: str = "uniform"
    minting: bool = True
    mint_depth: int = 1
    stop_epoch: Optional[int] = None
    hash_mode: str = "oracle"
    allow_unsafe: bool = False
    trace_messages: bool = False

    def byzantine_set(self) -> tuple:
        p = self.params
        if self.byzantine is None:
            return tuple(range(p.n - p.f, p.n))
        return tuple(sorted(self.byzantine))

    def validate(self) -> "Scenario":
        try:
            self.params.validate(self.allow_unsafe)
        except ParamError as exc:
            raise ScenarioError(f"params: {exc}") from None
        byz = self.byzantine_set()
        if len(byz) > self.params.f:
            raise ScenarioError(f"byzantine: {len(byz)} ids listed but f={self.params.f}")
        if any(not 0 <= i < self.params.n for i in byz):
            raise ScenarioError("byzantine: ids must lie in [0, n)")
        if self.adversary not in KINDS:
            raise ScenarioError(f"adversary.kind: unknown strategy {self.adversary!r}")
        if self.delivery not in ("uniform", "greedy"):
            raise ScenarioError(f"delivery: unknown policy {self.delivery!r}")
        if self.horizon < 0 or self.gst < 0:
            raise ScenarioError("horizon and gst must be non-negative")
        return self

    def with_(self, **changes) -> "Scenario":
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data.update(changes)
        return Scenario(**data)

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in SCENARIO_FIELDS}
        out["byzantine"] = list(self.byzantine_set())
        out["adversary"] = {"kind": self.adversary, **self.knobs}
        out["params"] = self.params.as_dict()
        return out


def scenario_from_dict(data: dict) -> Scenario:
    """Build a scenario from parsed TOML; errors name the offending field."""
    data = dict(data)
    pdata = data.pop("params", {})
    if not isinstance(pdata, dict):
        raise ScenarioError("params: expected a table")
    names = ProtocolParams.field_names()
    for key, value in pdata.items():
        if key not in names:
            raise ScenarioError(f"params.{key}: unknown field")
        if not isinstance(value, int) or isinstance(value, bool):
            raise ScenarioError(f"params.{key}: expected an integer, got {value!r}")
    params = ProtocolParams(**pdata)
    adv = data.pop("adversary", {"kind": "honest"})
    if isinstance(adv, str):
        adv = {"kind": adv}
    if not isinstance(adv, dict) or "kind" not in adv:
        raise ScenarioError("adversary.kind: missing")
    adv = dict(adv)
    kind = adv.pop("kind")
    kw = {}
    types = {"name": str, "seed": int, "gst": int, "horizon": int, "delivery": str,
             "minting": bool, "mint_depth": int, "stop_epoch": int, "hash_mode": str,
             "allow_unsafe": bool, "trace_messages": bool, "byzantine": list}
    for key, value in data.items():
        if key not in types:
            raise ScenarioError(f"{key}: unknown field")
        want = types[key]
        ok = isinstance(value, want) and not (want is int and isinstance(value, bool))
        if not ok:
            raise ScenarioError(f"{key}: expected {want.__name__}, got {value!r}")
        kw[key] = tuple(value) if key == "byzantine" else value
    return Scenario(params=params, adversary=kind, knobs=adv, **kw).validate()


def digest(value) -> str:
    return hashlib.sha1(str(value).encode()).hexdigest()[:12]


def _compact(value):
    if isinstance(value, str) and len(value) > 24:
        return f"{len(value)}:{digest(value)}"
    if isinstance(value, (list, tuple)):
        return [_compact(v) for v in value]
    return value


class Trace:
    """Line-delimited JSON records with a monotone sequence number."""

    def __init__(self):
        self.records: list[dict] = []

    def add(self, t: int, node, kind: str, payload: dict) -> None:
        rec = {"seq": len(self.records), "t": t, "node": node, "kind": kind}
        for k, v in payload.items():
            rec[k] = _compact(v)
        self.records.append(rec)

    def lines(self):
        for rec in self.records:
            yield json.dumps(rec, sort_keys=True, separators=(",", ":"))

    def dump(self) -> str:
        return "".join(line + "\n" for line in self.lines())

    def kinds(self, kind: str) -> list:
        return [r for r in self.records if r["kind"] == kind]


@dataclass
class RunMetrics:
    seed: int
    n: int
    correct: tuple
    gst: int
    delta: int
    gamma: int
    ticks: int = 0
    floor: list = field(default_factory=list)
    min_epoch: list = field(default_factory=list)
    max_epoch: list = field(default_factory=list)
    finals: dict = field(default_factory=dict)
    entered: dict = field(default_factory=dict)
    ec_events: list = field(default_factory=list)
    pacing_violations: int = 0
    clamped: int = 0
    forgeries: int = 0
    notarized: dict = field(default_factory=dict)
    final_blocks: dict = field(default_factory=dict)
    stuck_events: list = field(default_factory=list)
    concluded: list = field(default_factory=list)
    genesis: str = ""

    def final_floor(self, t: int) -> str:
        if t < 0 or not self.floor:
            return self.genesis
        return self.floor[min(t, len(self.floor) - 1)]


class Simulation:
    def __init__(self, scenario: Scenario):
        self.sc = scenario.validate()
        p = self.sc.params
        self.params = p
        self.oracle = HashOracle(seed=scenario.seed, bits=p.hash_bits, mode=scenario.hash_mode)
        self.genesis = make_genesis(self.oracle)
        self.registry: set = set()
        self.trace = Trace()
        self.byz = frozenset(self.sc.byzantine_set())
        self.correct = tuple(i for i in range(p.n) if i not in self.byz)
        self.adversary = Adversary(self.sc.adversary, self.byz, scenario.seed, self.sc.knobs)
        self.adversary.attach(self)
        self.net_rng = random.Random(f"net/{scenario.seed}")
        self.delivery = make_delivery(self.sc.delivery, self.net_rng, self.sc.gst, self.byz)
        self.nodes = []
        for i in range(p.n):
            byz = i in self.byz
            node = Node(i, p, self.oracle, self.genesis, seed=scenario.seed,
                        registry=self.registry, log=None if byz else self._log,
                        minting=scenario.minting and not byz,
                        mint_depth=scenario.mint_depth)
            self.nodes.append(ByzantineNode(node, self.adversary) if byz else node)
        self.queue: dict[int, list] = {}
        self.t = 0
        self.metrics = RunMetrics(scenario.seed, p.n, self.correct, self.sc.gst, p.delta,
                                  p.gamma, genesis=self.genesis.hash)
        self._notar_seen: dict = {}
        self.trace.add(0, None, "scenario", {"scenario": self.sc.as_dict()})

    # -- trace ---------------------------------------------------------------

    def _log(self, t, node, kind, payload):
        self.trace.add(t, node, kind, payload)
        m = self.metrics
        if kind == "ec":
            m.ec_events.append((t, node, payload["ec_epoch"], payload["formed"]))
        elif kind == "stuck":
            m.stuck_events.append((t, node, payload["e"], payload["s"],
                                   payload["lastfinalized"]))
        elif kind == "concluded":
            m.concluded.append((t, node, payload["e"], payload["h"], payload["fin"]))

    def note(self, kind, node, **payload):
        self.trace.add(self.t, node, kind, payload)

    # -- transport -------------------------------------------------------------

    def _authentic(self, src: int, msg) -> bool:
        """A Byzantine sender may not carry a correct process's forged signature."""
        reg, byz = self.registry, self.byz
        if isinstance(msg, SignedMsg):
            sigs = (msg,)
        elif isinstance(msg, CertMsg):
            sigs = msg.cert.votes
        elif isinstance(msg, Propose):
            if msg.signer not in byz and (msg.signer, ("propose", msg.h, msg.block.hash)) not in reg:
                return False
            sigs = [v for c in msg.notarizations for v in c.votes]
        else:
            return True
        for v in sigs:
            if v.signer in byz:
                reg.add((v.signer, v.body))
            elif (v.signer, v.body) not in reg:
                return False
        return True

    def submit(self, t: int, src: int, dst: int, msg) -> None:
        p = self.params
        if src in self.byz and not self._authentic(src, msg):
            self.metrics.forgeries += 1
            self.trace.add(t, src, "forgery_rejected", {"type": type(msg).__name__})
            return
        if isinstance(msg, Propose) and src not in self.byz and msg.signer == src:
            self.registry.add((src, ("propose", msg.h, msg.block.hash)))
        targets = range(p.n) if dst == ALL else (dst,)
        bound = max(t, self.sc.gst) + p.delta
        q = self.queue
        if bound == t + 1 and not self.sc.trace_messages:
            slot = q.get(bound)
            if slot is None:
                slot = q[bound] = []
            slot.extend((d, src, msg) for d in targets)
            return
        for d in targets:
            if d == src:
                when = t + 1
            else:
                when = self.delivery.deliver_at(t, src, d, msg, bound)
                if not t < when <= bound and src not in self.byz and d not in self.byz:
                    self.metrics.clamped += 1
                    self.trace.add(t, src, "delivery_clamped", {"to": d, "asked": when})
                    when = min(max(when, t + 1), bound)
            slot = q.get(when)
            if slot is None:
                slot = q[when] = []
            slot.append((d, src, msg))
            if self.sc.trace_messages:
                self.trace.add(t, src, "send", {"to": d, "at": when,
                                                "type": type(msg).__name__})

    # -- main loop ---------------------------------------------------------------

    def _stop(self) -> bool:
        x = self.sc.stop_epoch
        if x is None:
            return False
        return all(x in self.nodes[i].entered for i in self.correct)

    def run(self, horizon: Optional[int] = None) -> "RunResult":
        horizon = self.sc.horizon if horizon is None else horizon
        n = self.params.n
        nodes = self.nodes
        m = self.metrics
        while self.t < horizon:
            t = self.t
            due = self.queue.pop(t, ())
            inbox = [[] for _ in range(n)]
            for d, src, msg in due:
                inbox[d].append((src, msg))
            sends = []
            for i in range(n):
                out = nodes[i].step(t, inbox[i])
                if out:
                    sends.append((i, out))
            for src, out in sends:
                for dst, msg in out:
                    self.submit(t, src, dst, msg)
            self._observe(t)
            self.t = t + 1
            if self._stop():
                break
        self._finish()
        return RunResult(self.sc, m, self.trace)

    def _observe(self, t: int) -> None:
        m = self.metrics
        finals = [self.nodes[i].final for i in self.correct]
        epochs = [self.nodes[i].epoch for i in self.correct]
        if finals:
            m.floor.append(min(finals, key=len))
            m.min_epoch.append(min(epochs))
            m.max_epoch.append(max(epochs))
        m.ticks = t + 1
        for i in self.correct:
            odd = self.nodes[i].odd
            if odd is None:
                continue
            for h, certs in odd.notar.items():
                for bh, cert in certs.items():
                    if cert.block.is_dummy:
                        continue
                    key = (odd.e, h)
                    seen = self._notar_seen.setdefault(key, set())
                    seen.add(bh)

    def _finish(self) -> None:
        m = self.metrics
        for i in self.correct:
            node = self.nodes[i]
            m.finals[i] = [(0, 0, self.genesis.hash)] + list(node.final_changes)
            m.entered[i] = dict(node.entered)
            pv = node.pacing_violations + (node.even.pacing_violations if node.even else 0)
            m.pacing_violations += pv
            m.final_blocks[i] = resolve_prefix(node.final, node.store).last.height
        m.notarized = {k: sorted(v) for k, v in self._notar_seen.items()}
        self.trace.add(self.t, None, "summary", summary(m))


@dataclass
class RunResult:
    scenario: Scenario
    metrics: RunMetrics
    trace: Trace


# -- verdicts ---------------------------------------------------------------------

def check_consistency(m: RunMetrics) -> tuple[bool, list]:
    """All finals ever held by correct processes lie on one prefix chain, and
    each odd epoch's fin extends the preceding even epoch's finals."""
    problems = []
    held = {}
    for i, changes in m.finals.items():
        for t, e, v in changes:
            held.setdefault(v, (t, i, e))
    values = sorted(held, key=len)
    for a, b in zip(values, values[1:]):
        if not b.startswith(a):
            problems.append(f"incomparable finals held by {held[a][1]}@{held[a][0]} "
                            f"and {held[b][1]}@{held[b][0]}")
    by_epoch: dict = {}
    for v, (t, i, e) in held.items():
        by_epoch.setdefault(e, []).append(v)
    for e, vs in by_epoch.items():
        if e % 2 == 1:
            for fin in vs:
                for prev in by_epoch.get(e - 1, []):
                    if not fin.startswith(prev):
                        problems.append(f"fin of epoch {e} does not extend a final of epoch {e - 1}")
    return not problems, problems


def no_conflicting_notarizations(m: RunMetrics) -> tuple[bool, list]:
    bad = [k for k, v in m.notarized.items() if len(v) > 1]
    return not bad, bad


def claim3_violations(m: RunMetrics) -> list:
    """Times t >= GST violating: within 4*delta*gamma the floor properly grows
    or every correct process has left the epoch."""
    w = 4 * m.delta * m.gamma
    bad = []
    end = len(m.floor)
    for t in range(m.gst, end - w):
        e = m.min_epoch[t]
        if e != m.max_epoch[t] or e % 2:
            continue
        f0, f1 = m.floor[t], m.floor[t + w]
        if len(f1) > len(f0) and f1.startswith(f0):
            continue
        if m.min_epoch[t + w] >= e + 1:
            continue
        bad.append(t)
    return bad


def summary(m: RunMetrics) -> dict:
    ok, problems = check_consistency(m)
    return {
        "seed": m.seed,
        "ticks": m.ticks,
        "consistency": "ok" if ok else "violated",
        "problems": len(problems),
        "final_blocks_min": min(m.final_blocks.values(), default=0),
        "final_blocks_max": max(m.final_blocks.values(), default=0),
        "max_epoch": max(m.max_epoch, default=0),
        "min_epoch": min(m.min_epoch[-1:], default=0),
        "ec_events": len(m.ec_events),
        "pacing_violations": m.pacing_violations,
        "clamped": m.clamped,
        "forgeries": m.forgeries,
        "floor": _compact(m.final_floor(m.ticks - 1)),
    }


def run_scenario(scenario: Scenario, horizon: Optional[int] = None) -> RunResult:
    return Simulation(scenario).run(horizon)
