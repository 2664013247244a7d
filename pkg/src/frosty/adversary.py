"""Static Byzantine strategies and adversarial delivery policies.

Every Byzantine process wraps a *shadow* honest node that keeps its view of
the protocol current (epochs, certificates, notarized chains).  A strategy
decides which of the shadow's sends leave the process and what gets added.
All Byzantine processes share one :class:`Adversary` record.
"""
from __future__ import annotations

import random
from typing import Optional

from .chainstr import mint_child, resolve_prefix
from .messages import (ALL, Propose, SampleRequest, SampleResponse, SignedMsg,
                       Stuck, Vote)
from .simplex import lead

KINDS = ("honest", "crash", "sample_liar", "equivocating_leader",
         "stuck_spammer", "pregst_delayer")

LIAR_MODES = ("stall", "fork")


class StrategyError(ValueError):
    pass


class Adversary:
    """The single adversary mind shared by all Byzantine processes."""

    def __init__(self, kind: str, byzantine, seed: int = 0, knobs: Optional[dict] = None):
        if kind not in KINDS:
            raise StrategyError(f"unknown strategy {kind!r}; expected one of {KINDS}")
        self.kind = kind
        self.byzantine = frozenset(byzantine)
        self.knobs = dict(knobs or {})
        self.rng = random.Random(f"adversary/{seed}")
        self.sim = None
        self.fakes: dict = {}
        self.fake_count = 0
        mode = self.knobs.get("mode", "stall")
        if mode not in LIAR_MODES:
            raise StrategyError(f"sample_liar mode must be one of {LIAR_MODES}")
        self.mode = mode

    def attach(self, sim) -> None:
        self.sim = sim

    # -- fabricated sample responses ---------------------------------------

    def fake_branch(self, target: int):
        """A forged child of ``target``'s last finalized block, one per target."""
        victim = self.sim.nodes[target]
        oracle = self.sim.oracle
        last = resolve_prefix(victim.final, victim.store).last
        key = (target, last.hash)
        blk = self.fakes.get(key)
        if blk is None:
            depth = int(self.knobs.get("fork_depth", 1))
            blk = last
            for _ in range(depth):
                blk = mint_child(blk, (("forged", target),), oracle, ("adv", target),
                                 self.fake_count)
                self.fake_count += 1
            self.fakes[key] = blk
        return blk

    def lie(self, liar, t: int, sender: int, req: SampleRequest) -> SampleResponse:
        if self.mode == "fork" and sender not in self.byzantine:
            blk = self.fake_branch(sender)
            chain = blk.chain
            bits = chain.bits
            return SampleResponse(req.s, chain, bits, bits, req.e)
        g = liar.store.genesis
        return SampleResponse(req.s, g.chain, g.hash, g.hash, req.e)


class ByzantineNode:
    """Process controlled by the adversary; ``shadow`` is its honest twin."""

    def __init__(self, shadow, adversary: Adversary):
        self.shadow = shadow
        self.adv = adversary
        self.id = shadow.id
        self.answered: set = set()
        self.spammed: set = set()

    # the simulator reads these for bookkeeping only
    def __getattr__(self, name):
        return getattr(self.shadow, name)

    def step(self, t: int, inbox) -> list:
        kind = self.adv.kind
        if kind in ("honest", "pregst_delayer"):
            return self.shadow.step(t, inbox)
        if kind == "crash":
            if t < int(self.adv.knobs.get("crash_at", 0)):
                return self.shadow.step(t, inbox)
            return []
        out = self.shadow.step(t, inbox)
        if kind == "stuck_spammer":
            return out + self._spam()
        if kind == "sample_liar":
            return self._lies(t, inbox)
        if kind == "equivocating_leader":
            if self.shadow.epoch % 2 == 0:
                return self._lies(t, inbox)
            return self._equivocate(out)
        return out

    def _lies(self, t: int, inbox) -> list:
        res = []
        for sender, msg in inbox:
            if isinstance(msg, SampleRequest) and msg.e % 2 == 0:
                key = (sender, msg.s, msg.e)
                if key in self.answered:
                    continue
                self.answered.add(key)
                res.append((sender, self.adv.lie(self.shadow, t, sender, msg)))
        return res

    def _spam(self) -> list:
        sh = self.shadow
        e = sh.epoch
        if e % 2 or e in self.spammed:
            return []
        self.spammed.add(e)
        return [(ALL, sh.sign(Stuck(e, sh.final)))]

    def _equivocate(self, out: list) -> list:
        sh = self.shadow
        odd = sh.odd
        res = []
        for dest, msg in out:
            if isinstance(msg, Propose) and msg.signer == self.id:
                if (odd.e, msg.h) not in self.spammed:
                    self.spammed.add((odd.e, msg.h))
                    res.extend(self._split(odd, msg))
            elif (isinstance(msg, SignedMsg) and isinstance(msg.body, Vote)
                  and not msg.body.block.is_dummy):
                continue
            else:
                res.append((dest, msg))
        return res

    def _split(self, odd, honest: Propose) -> list:
        """Two conflicting proposals to two halves, plus votes for both."""
        sh = self.shadow
        h = honest.h
        chain = honest.prefix
        a = odd.build_proposal(h, txs=(("equivocate", self.id, h, "a"),), chain=chain)
        b = odd.build_proposal(h, txs=(("equivocate", self.id, h, "b"),), chain=chain)
        correct = [i for i in range(sh.params.n) if i not in self.adv.byzantine]
        half = len(correct) // 2
        res = [(i, a) for i in correct[:half]] + [(i, b) for i in correct[half:]]
        res += [(i, a) for i in self.adv.byzantine] + [(i, b) for i in self.adv.byzantine]
        for prop in (a, b):
            res.append((ALL, sh.sign(Vote(odd.e, h, prop.block))))
        self.adv.sim.note("equivocation", self.id, h=h, a=a.block.hash, b=b.block.hash)
        return res

    def leads(self, h: int) -> bool:
        return lead(h, self.shadow.params.n) == self.id


# -- delivery policies -------------------------------------------------------

class UniformDelivery:
    """Uniformly random delivery time inside the legal window."""

    name = "uniform"

    def __init__(self, rng: random.Random):
        self.rng = rng

    def deliver_at(self, t: int, src: int, dst: int, msg, bound: int) -> int:
        if bound <= t + 1:
            return t + 1
        return self.rng.randint(t + 1, bound)


class GreedyDelivery:
    """Before GST: fast Byzantine traffic, correct sample responses only
    inside one parity half of the network, everything else as late as allowed."""

    name = "greedy"

    def __init__(self, rng: random.Random, gst: int, byzantine):
        self.rng = rng
        self.gst = gst
        self.byz = frozenset(byzantine)

    def deliver_at(self, t: int, src: int, dst: int, msg, bound: int) -> int:
        if t >= self.gst:
            return bound
        if src in self.byz:
            return t + 1
        if isinstance(msg, SampleResponse):
            return t + 1 if (src - dst) % 2 == 0 else bound
        if isinstance(msg, SampleRequest):
            return t + 1
        return bound


def make_delivery(name: str, rng: random.Random, gst: int, byzantine):
    if name == "uniform":
        return UniformDelivery(rng)
    if name == "greedy":
        return GreedyDelivery(rng, gst, byzantine)
    raise StrategyError(f"unknown delivery policy {name!r}")
