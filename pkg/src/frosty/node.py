"""Per-process shell: routes traffic by epoch and alternates the two machines."""
from __future__ import annotations

import random
from typing import Optional

from .certs import CertAccumulator, EpochCertificate
from .chainstr import BlockStore, ChainString, make_checkpoint, mint_child
from .messages import (ALL, CertMsg, SampleRequest, SampleResponse, SignedMsg,
                       Stuck)
from .params import ProtocolParams
from .simplex import OddEpoch
from .snowman import EvenEpoch


class Node:
    def __init__(self, pid: int, params: ProtocolParams, oracle, genesis,
                 seed: int = 0, registry: Optional[set] = None, log=None,
                 minting: bool = True, mint_depth: int = 1):
        self.id = pid
        self.params = params
        self.oracle = oracle
        self.store = BlockStore(genesis)
        self.rng = random.Random(f"node/{seed}/{pid}")
        self.registry = registry if registry is not None else set()
        self.log = log
        self.minting = minting
        self.mint_depth = mint_depth
        self.t = 0
        self.epoch = 0
        self.final: ChainString = genesis.hash
        self.even: Optional[EvenEpoch] = EvenEpoch(self, 0, self.final)
        self.odd: Optional[OddEpoch] = None
        self.stuck_acc = CertAccumulator(params.n)
        self.buffer: dict[int, list] = {}
        self.minted = 0
        self.tx_counter = 0
        self.entered: dict[int, int] = {0: 0}
        self.final_changes: list = []
        self.pacing_violations = 0

    # -- services used by the machines ------------------------------------

    def emit(self, kind: str, **payload) -> None:
        if self.log is not None:
            self.log(self.t, self.id, kind, payload)

    def sign(self, body) -> SignedMsg:
        self.registry.add((self.id, body))
        return SignedMsg(self.id, body)

    def mint(self, parent):
        blk = mint_child(parent, (("tx", self.id, self.minted),), self.oracle,
                         self.id, self.minted)
        self.minted += 1
        self.store.add(blk)
        self.emit("mint", block=blk.hash, height=blk.height)
        return blk

    def pending_txs(self) -> tuple:
        self.tx_counter += 1
        return (("tx", self.id, "odd", self.tx_counter),)

    def on_final(self, sigma: ChainString) -> None:
        self.final = sigma
        self.final_changes.append((self.t, self.epoch, sigma))

    # -- epoch changes ------------------------------------------------------

    def _enter(self, e: int, t: int) -> None:
        self.epoch = e
        self.entered[e] = t
        self.emit("enter_epoch", e=e)

    def _enter_odd(self, cert: EpochCertificate, t: int, out: list) -> None:
        pref = self.even.pref
        self.pacing_violations += self.even.pacing_violations
        formed = self.stuck_acc.completed(("stuck", cert.e, cert.sigma)) is cert
        self.emit("ec", ec_epoch=cert.e, sigma=cert.sigma, votes=len(cert.votes),
                  formed=formed)
        out.append((ALL, CertMsg(cert)))
        self.even = None
        self._enter(cert.e + 1, t)
        self.odd = OddEpoch(self, self.epoch, pref)

    def _leave_odd(self, fin: ChainString, t: int) -> None:
        e = self.epoch
        self.store.add(make_checkpoint(self.oracle, e, fin))
        self.on_final(fin)
        self.odd = None
        self._enter(e + 1, t)
        self.even = EvenEpoch(self, self.epoch, fin)

    # -- one timeslot ------------------------------------------------------

    def _route(self, inbox) -> list:
        here = []
        e = self.epoch
        for sender, msg in inbox:
            me = msg.e
            if me == e:
                here.append((sender, msg))
            elif me > e:
                self.buffer.setdefault(me, []).append((sender, msg))
        return here

    def step(self, t: int, inbox) -> list:
        self.t = t
        out: list = []
        todo = self.buffer.pop(self.epoch, []) + list(inbox)
        here = self._route(todo)
        if self.even is not None:
            responses, requests = [], []
            cert = None
            for sender, msg in here:
                if isinstance(msg, SampleResponse):
                    responses.append((sender, msg))
                elif isinstance(msg, SampleRequest):
                    requests.append((sender, msg))
                elif isinstance(msg, SignedMsg) and isinstance(msg.body, Stuck):
                    got = self.stuck_acc.accumulate(msg)
                    if got is not None and cert is None:
                        cert = got
                elif isinstance(msg, CertMsg) and isinstance(msg.cert, EpochCertificate):
                    if cert is None and msg.cert.valid(self.params.n):
                        cert = msg.cert
            out.extend(self.even.tick(t, responses, requests))
            if cert is not None:
                self._enter_odd(cert, t, out)
                here = self._route(self.buffer.pop(self.epoch, []))
        if self.odd is not None:
            out.extend(self.odd.tick(t, here))
            if self.odd.fin is not None:
                self._leave_odd(self.odd.fin, t)
        return out

    @property
    def machine(self):
        return self.even if self.even is not None else self.odd

    @property
    def pref(self) -> ChainString:
        return self.even.pref if self.even is not None else self.odd.pref
