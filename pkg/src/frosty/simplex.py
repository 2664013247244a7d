"""Odd-epoch state machine: Simplex anchored on a starting certificate.

Simplex blocks are hashed through the shared oracle; a chain's hash
H(b_1..b_i) is folded block by block so every process derives the same value.
"""
from __future__ import annotations

from typing import Optional

from .certs import (Finalization, Notarization, StartingCertificate)
from .chainstr import ChainString
from .messages import (ALL, CertMsg, Finalize, Propose, SignedMsg, SimplexBlock,
                       StartVote, Vote)


class ProtocolViolation(RuntimeError):
    pass


MAX_CHAINS_PER_HEIGHT = 16

UNSET, ARMED, FIRED, CANCELLED = "unset", "armed", "fired", "cancelled"


def lead(h: int, n: int) -> int:
    return h % n


def dummy_block(oracle, e: int, h: int) -> SimplexBlock:
    return SimplexBlock(h, None, None, e, None, oracle(("dummy", e, h)))


def _block_key(h, parent, txs, e, C):
    return ("sblock", e, h, parent, txs, C.key if C is not None else None)


def make_block(oracle, h: int, parent: ChainString, txs: tuple, e: int,
               C: StartingCertificate) -> SimplexBlock:
    return SimplexBlock(h, parent, tuple(txs), e, C, oracle(_block_key(h, parent, tuple(txs), e, C)))


def empty_chain_hash(oracle) -> ChainString:
    return oracle(("schain",))


def extend_hash(oracle, prev: ChainString, block: SimplexBlock) -> ChainString:
    return oracle(("schain", prev, block.hash))


def chain_hash(oracle, blocks) -> ChainString:
    hv = empty_chain_hash(oracle)
    for b in blocks:
        hv = extend_hash(oracle, hv, b)
    return hv


def reduce_chain(blocks) -> list:
    return [b for b in blocks if not b.is_dummy]


def fin_of(blocks, mu: int) -> ChainString:
    """Pref(C) followed by the hashes of the first mu non-dummy blocks."""
    red = reduce_chain(blocks)
    if len(red) < mu:
        raise ValueError(f"reduced height {len(red)} below mu={mu}")
    if len({b.C for b in red}) != 1:
        raise ProtocolViolation("non-dummy blocks carry different starting certificates")
    return red[0].C.pref + "".join(b.hash for b in red[:mu])


def check_chain(oracle, blocks, e: int, n: int) -> Optional[str]:
    """None if blocks form a valid Simplex-blockchain for e, else a reason."""
    hv = empty_chain_hash(oracle)
    lastC = None
    for i, b in enumerate(blocks, start=1):
        if b.h != i or b.e != e:
            return f"block {i} has wrong height/epoch"
        if b.is_dummy:
            if b.hash != oracle(("dummy", e, i)):
                return f"dummy {i} has a bad hash"
        else:
            if b.parent is None or b.txs is None or b.C is None:
                return f"block {i} is malformed"
            if b.parent != hv:
                return f"block {i} does not link to its prefix"
            if not isinstance(b.C, StartingCertificate) or b.C.e != e or not b.C.valid(n):
                return f"block {i} carries an invalid starting certificate"
            if lastC is not None and b.C != lastC:
                return f"block {i} changes the starting certificate"
            if b.hash != oracle(_block_key(b.h, b.parent, b.txs, b.e, b.C)):
                return f"block {i} has a bad hash"
            lastC = b.C
        hv = extend_hash(oracle, hv, b)
    return None


class OddEpoch:
    def __init__(self, node, e: int, pref: ChainString):
        from .certs import CertAccumulator
        self.node = node
        self.p = node.params
        self.e = e
        self.pref = pref
        self.acc = CertAccumulator(self.p.n)
        self.start_sent = False
        self.ready = False
        self.sc: Optional[StartingCertificate] = None
        self.h = 0
        self.timers: dict[int, list] = {}
        self.proposed: set = set()
        self.proposals: dict[int, Propose] = {}
        self.considered: set = set()
        self.notar: dict[int, dict] = {}
        self.finals: dict[int, Finalization] = {}
        self.nchains: dict[int, dict] = {0: {empty_chain_hash(node.oracle): ()}}
        self.seen: set = set()
        self.fin: Optional[ChainString] = None
        self.rejections: list = []

    def _emit(self, kind, **payload):
        self.node.emit(kind, e=self.e, **payload)

    # -- certificates ------------------------------------------------------

    def _adopt_sc(self, cert: StartingCertificate, how: str) -> None:
        if self.sc is None and cert.e == self.e and cert.valid(self.p.n):
            self.sc = cert
            self._emit("sc", how=how, pref=cert.pref)

    def add_notarization(self, cert: Notarization, out: list) -> bool:
        key = ("notar", cert.h, cert.block.hash)
        if key in self.seen:
            return False
        if cert.e != self.e or not cert.valid(self.p.n):
            return False
        self.seen.add(key)
        self.notar.setdefault(cert.h, {})[cert.block.hash] = cert
        out.append((ALL, CertMsg(cert)))
        self._rebuild(cert.h)
        return True

    def add_finalization(self, cert: Finalization, out: list) -> bool:
        key = ("final", cert.h)
        if key in self.seen:
            return False
        if cert.e != self.e or not cert.valid(self.p.n):
            return False
        self.seen.add(key)
        self.finals[cert.h] = cert
        out.append((ALL, CertMsg(cert)))
        return True

    def _rebuild(self, h: int) -> None:
        """Recompute notarized chains from height h upward."""
        oracle = self.node.oracle
        top = max(self.notar)
        for hh in range(h, top + 1):
            base = self.nchains.get(hh - 1, {})
            new: dict = {}
            for block_hash, cert in self.notar.get(hh, {}).items():
                b = cert.block
                if b.is_dummy:
                    for ph, blocks in base.items():
                        new[extend_hash(oracle, ph, b)] = blocks + (b,)
                elif b.parent in base:
                    new[extend_hash(oracle, b.parent, b)] = base[b.parent] + (b,)
            if len(new) > MAX_CHAINS_PER_HEIGHT:
                new = dict(list(new.items())[:MAX_CHAINS_PER_HEIGHT])
            if new == self.nchains.get(hh, {}) and hh > h:
                break
            self.nchains[hh] = new

    # -- messages ----------------------------------------------------------

    def handle(self, t: int, sender: int, msg, out: list) -> None:
        if isinstance(msg, SignedMsg):
            body = msg.body
            cert = self.acc.accumulate(msg)
            if cert is None:
                return
            if isinstance(body, StartVote):
                self._adopt_sc(cert, "votes")
            elif isinstance(body, Vote):
                self.add_notarization(cert, out)
            elif isinstance(body, Finalize):
                self.add_finalization(cert, out)
        elif isinstance(msg, CertMsg):
            cert = msg.cert
            if isinstance(cert, Notarization):
                self.add_notarization(cert, out)
            elif isinstance(cert, Finalization):
                self.add_finalization(cert, out)
        elif isinstance(msg, Propose):
            self._on_propose(msg, out)

    def _on_propose(self, msg: Propose, out: list) -> None:
        key = ("prop", msg.signer, msg.h, msg.block.hash)
        if key in self.seen:
            return
        self.seen.add(key)
        if msg.e != self.e or msg.signer != lead(msg.h, self.p.n):
            return
        out.append((ALL, msg))
        for cert in msg.notarizations:
            if isinstance(cert, Notarization):
                self.add_notarization(cert, out)
        if msg.h not in self.proposals:
            self.proposals[msg.h] = msg
        C = msg.block.C
        if self.sc is None and isinstance(C, StartingCertificate):
            self._adopt_sc(C, "proposal")

    def validate(self, msg: Propose) -> Optional[str]:
        """None if the proposal earns a vote, else the failed check."""
        n, e, h = self.p.n, self.e, msg.h
        b = msg.block
        if b.is_dummy or b.h != h:
            return "(i) proposed block is a dummy"
        if len(msg.prefix) != h - 1:
            return "prefix length does not match height"
        blocks = tuple(msg.prefix) + (b,)
        why = check_chain(self.node.oracle, blocks, e, n)
        if why is not None:
            return "(ii) " + why
        if len(msg.notarizations) != h - 1:
            return "(iii) wrong number of notarizations"
        for i, (blk, cert) in enumerate(zip(msg.prefix, msg.notarizations), start=1):
            if (not isinstance(cert, Notarization) or cert.h != i or cert.e != e
                    or cert.block != blk or not cert.valid(n)):
                return f"(iii) block {i} is not notarized"
        return None

    # -- leader ------------------------------------------------------------

    def build_proposal(self, h: int, txs=None, chain=None) -> Optional[Propose]:
        """A proposal for view h on a held notarized chain of height h-1."""
        node = self.node
        if chain is None:
            held = self.nchains.get(h - 1)
            if not held:
                return None
            chain = next(iter(held.values()))
        lastC = None
        for b in reversed(chain):
            if not b.is_dummy:
                lastC = b.C
                break
        C = lastC if lastC is not None else self.sc
        if C is None:
            return None
        if txs is None:
            inside = {tx for b in chain if not b.is_dummy for tx in b.txs}
            txs = tuple(tx for tx in node.pending_txs() if tx not in inside)
        parent = chain_hash(node.oracle, chain)
        block = make_block(node.oracle, h, parent, txs, self.e, C)
        S = tuple(self.notar[i][b.hash] for i, b in enumerate(chain, start=1))
        return Propose(node.id, self.e, h, tuple(chain), block, S)

    # -- one timeslot --------------------------------------------------------

    def tick(self, t: int, inbox) -> list:
        out: list = []
        node = self.node
        for sender, msg in inbox:
            self.handle(t, sender, msg, out)
        if not self.ready:
            if not self.start_sent:
                self.start_sent = True
                out.append((ALL, node.sign(StartVote(self.e, self.pref))))
                self._emit("start_vote", pref=self.pref)
            if self.sc is not None:
                self.ready = True
                self.h = 1
                self._emit("ready", pref=self.sc.pref)
        if self.ready:
            self._views(t, out)
        self._conclude(t)
        return out

    def _views(self, t: int, out: list) -> None:
        node = self.node
        n, delta = self.p.n, self.p.delta
        while True:
            h = self.h
            timer = self.timers.get(h)
            if timer is None:
                timer = self.timers[h] = [t + 3 * delta, ARMED]
            if node.id == lead(h, n) and h not in self.proposed:
                prop = self.build_proposal(h)
                if prop is not None:
                    self.proposed.add(h)
                    self.seen.add(("prop", prop.signer, h, prop.block.hash))
                    self.proposals.setdefault(h, prop)
                    out.append((ALL, prop))
                    self._emit("propose", h=h, block=prop.block.hash)
            if timer[1] == ARMED and t >= timer[0]:
                timer[1] = FIRED
                out.append((ALL, node.sign(Vote(self.e, h, dummy_block(node.oracle, self.e, h)))))
                self._emit("timeout", h=h)
            prop = self.proposals.get(h)
            if prop is not None and h not in self.considered:
                self.considered.add(h)
                why = self.validate(prop)
                if why is None:
                    out.append((ALL, node.sign(Vote(self.e, h, prop.block))))
                else:
                    self.rejections.append((h, why))
                    self._emit("reject", h=h, reason=why)
            if self.nchains.get(h):
                if timer[1] == ARMED:
                    timer[1] = CANCELLED
                    out.append((ALL, node.sign(Finalize(self.e, h))))
                self.h = h + 1
                continue
            break

    def _conclude(self, t: int) -> Optional[ChainString]:
        if self.fin is not None:
            return self.fin
        mu = self.p.mu
        for hh in sorted(self.finals):
            for blocks in self.nchains.get(hh, {}).values():
                if blocks and not blocks[-1].is_dummy and len(reduce_chain(blocks)) >= mu:
                    self.fin = fin_of(blocks, mu)
                    self._emit("concluded", h=hh, fin=self.fin)
                    return self.fin
        return None
