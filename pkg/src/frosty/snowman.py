"""Even-epoch state machine: sampling consensus with the epoch-change hooks.

Per-prefix state (val, lock, locktime, lockbound, dec) lives in a binary trie
rooted at the current ``final``; a node at depth d below the root stands for
``final + bits``.  Only prefixes strictly extending ``final`` are tracked:
everything up to ``final`` is treated as already locked.
"""
from __future__ import annotations

from typing import Optional

from . import kernels
from .chainstr import ChainString, mint_child, resolve_prefix
from .messages import ALL, SampleRequest, SampleResponse, Stuck

_FLIP = {"0": "1", "1": "0"}


class TrieNode:
    __slots__ = ("kids", "val", "locktime", "lockbound", "dec", "scan")

    def __init__(self):
        self.kids: list = [None, None]
        self.val: Optional[str] = None
        self.locktime: Optional[int] = None
        self.lockbound = 0
        self.dec = -1
        self.scan = None

    def kid(self, bit: str) -> "TrieNode":
        i = 1 if bit == "1" else 0
        node = self.kids[i]
        if node is None:
            node = self.kids[i] = TrieNode()
        return node

    def descend(self, bits: str) -> "TrieNode":
        node = self
        for b in bits:
            node = node.kid(b)
        return node

    def unlock_below(self) -> int:
        """Clear lock/locktime on every strict descendant."""
        cleared = 0
        stack = [k for k in self.kids if k is not None]
        while stack:
            node = stack.pop()
            if node.locktime is not None:
                node.locktime = None
                cleared += 1
            stack.extend(k for k in node.kids if k is not None)
        return cleared


class RoundRecord:
    """Responses gathered for one sampling round.

    Slots sampling the same process share its (single) response, so values are
    kept as ``{string: slot weight}``.
    """

    __slots__ = ("start", "mult", "got", "defined", "rpref", "rlock", "rfin",
                 "suppfin", "cache")

    def __init__(self, start: int, sample):
        self.start = start
        self.mult: dict[int, int] = {}
        for p in sample:
            self.mult[p] = self.mult.get(p, 0) + 1
        self.got: set = set()
        self.defined = 0
        self.rpref: dict[str, int] = {}
        self.rlock: dict[str, int] = {}
        self.rfin: dict[str, int] = {}
        self.suppfin: list[str] = []
        self.cache: dict = {}

    def record(self, proc: int, rpref: str, rlock: str, rfin: str) -> int:
        w = self.mult[proc]
        self.got.add(proc)
        self.defined += w
        self.rpref[rpref] = self.rpref.get(rpref, 0) + w
        self.rlock[rlock] = self.rlock.get(rlock, 0) + w
        self.rfin[rfin] = self.rfin.get(rfin, 0) + w
        return w

    def add_suppfin(self, sigma: str) -> None:
        for x in self.suppfin:
            if x.startswith(sigma):
                return
        self.suppfin = [x for x in self.suppfin if not sigma.startswith(x)]
        self.suppfin.append(sigma)

    def measure(self, name: str, ref: str, kth: int) -> int:
        """kth-largest common-prefix length of this round's values with ref."""
        key = (name, kth)
        hit = self.cache.get(key)
        if hit is not None and hit[0] is ref and hit[1] == self.defined:
            return hit[2]
        groups = getattr(self, name)
        value = kernels.kth_lcp(list(groups.items()), ref, kth)
        self.cache[key] = (ref, self.defined, value)
        return value

    def suppfin_reach(self, ref: str) -> int:
        hit = self.cache.get("sf")
        if hit is not None and hit[0] is ref and hit[1] == len(self.suppfin):
            return hit[2]
        value = max((kernels.lcp(x, ref) for x in self.suppfin), default=-1)
        self.cache["sf"] = (ref, len(self.suppfin), value)
        return value


class EvenEpoch:
    """All variables of one even epoch at one process."""

    def __init__(self, node, e: int, final: ChainString):
        self.node = node
        self.p = node.params
        self.e = e
        self.ready = False
        self.final = final
        self.pref = final
        self.s = 0
        self.newround = True
        self.start: dict[int, int] = {}
        self.pref_hist: dict[int, str] = {}
        self.rounds: dict[int, RoundRecord] = {}
        self.root = TrieNode()
        self.path: list[TrieNode] = []
        self.lastfinalized = 0
        self.answered: set = set()
        self.stuck_round = -1
        self.tip = None
        self._final_res = None
        self._hist_memo: dict = {}
        self._hist_ref = None
        self._floor_sf = 0
        self._floor_fin = 0
        self.pacing_violations = 0
        self.lock_version = 0
        self._walk_key = None

    # -- helpers ---------------------------------------------------------

    def _emit(self, kind, **payload):
        self.node.emit(kind, e=self.e, **payload)

    def _sigma(self, depth: int) -> str:
        return self.pref[:depth]

    def val(self, sigma: str) -> Optional[str]:
        node = self._node_for(sigma, create=False)
        return None if node is None else node.val

    def lock(self, sigma: str) -> bool:
        node = self._node_for(sigma, create=False)
        return node is not None and node.locktime is not None

    def locktime(self, sigma: str) -> Optional[int]:
        node = self._node_for(sigma, create=False)
        return None if node is None else node.locktime

    def lockbound(self, sigma: str) -> int:
        node = self._node_for(sigma, create=False)
        return 0 if node is None else node.lockbound

    def dec(self, s: int, sigma: str) -> bool:
        node = self._node_for(sigma, create=False)
        return node is not None and node.dec == s

    def suppfin(self, sigma: str, s: int) -> bool:
        rec = self.rounds.get(s)
        return rec is not None and any(x.startswith(sigma) for x in rec.suppfin)

    def _node_for(self, sigma: str, create: bool = True):
        if not sigma.startswith(self.final):
            return None
        node = self.root
        for b in sigma[len(self.final):]:
            i = 1 if b == "1" else 0
            nxt = node.kids[i]
            if nxt is None:
                if not create:
                    return None
                nxt = node.kid(b)
            node = nxt
        return node

    def _resolve_final(self):
        store = self.node.store
        key = (self.final, len(store))
        if self._final_res is None or self._final_res[0] != key:
            self._final_res = (key, resolve_prefix(self.final, store))
        return self._final_res[1]

    # -- operations ------------------------------------------------------

    def init_epoch(self) -> bool:
        """Init(e): pref := final, s := 0, all locks and vals cleared."""
        if self.ready:
            self._emit("init_repeat")
            return False
        self.pref = self.final
        self.s = 0
        self.newround = True
        self.root = TrieNode()
        self.path = []
        self.lastfinalized = 0
        self.ready = True
        self.tip = self._resolve_final().last
        self._emit("init", final=self.final)
        return True

    def begin_round(self, t: int, sample=None) -> list:
        """Sample k processes with replacement; ask each distinct one once."""
        if not self.newround:
            return []
        p = self.p
        if sample is None:
            sample = self.node.rng.choices(range(p.n), k=p.k)
        s = self.s
        prev = self.start.get(s - 1)
        if prev is not None and t - prev > 2 * p.delta + 1:
            self.pacing_violations += 1
            self._emit("pacing_violation", s=s, gap=t - prev)
        self.start[s] = t
        self.rounds[s] = RoundRecord(t, sample)
        self.newround = False
        req = SampleRequest(s, self.e)
        return [(q, req) for q in self.rounds[s].mult]

    def ingest_response(self, t: int, sender: int, msg: SampleResponse) -> bool:
        """Record the first response from ``sender`` for round msg.s."""
        store = self.node.store
        chain = msg.chain
        if not chain.linked or not store.knows_root(chain):
            return False
        hb = chain.bits
        if not (hb.startswith(msg.lock) and hb.startswith(msg.final)):
            return False
        store.add_chain(chain)
        rec = self.rounds.get(msg.s)
        if rec is None or not (t > rec.start >= t - 2 * self.p.delta):
            return False
        if sender not in rec.mult or sender in rec.got:
            return False
        rec.record(sender, hb, msg.lock, msg.final)
        return True

    def update_support(self, t: int) -> None:
        """suppfin for every round still inside its 2-delta response window."""
        lo = t - 2 * self.p.delta
        base = len(self.final)
        for s2 in range(self.s, -1, -1):
            rec = self.rounds.get(s2)
            if rec is None:
                continue
            if rec.start < lo:
                break
            if rec.start >= t:
                continue
            depth = rec.measure("rlock", self.pref, self.p.alpha2)
            if depth > base:
                rec.add_suppfin(self.pref[:depth])

    def _hist_lcp(self, i: int) -> int:
        """lcp(pref_hist(i), pref), memoized while pref is unchanged."""
        if self._hist_ref is not self.pref:
            self._hist_ref = self.pref
            self._hist_memo = {}
        v = self._hist_memo.get(i)
        if v is None:
            v = self._hist_memo[i] = kernels.lcp(self.pref_hist[i], self.pref)
        return v

    def update_locks(self, t: int) -> int:
        """Lock every unlocked sigma <= pref with a qualifying round s'."""
        base = len(self.final)
        todo = [(base + i + 1, node) for i, node in enumerate(self.path)
                if node.locktime is None]
        if not todo:
            return 0
        hist = self._hist_lcp
        s = self.s
        pref = self.pref
        # c(depth): first round from which every ended round's pref contains sigma
        starts = []
        i = s
        for depth, node in reversed(todo):
            while i > 0 and hist(i - 1) >= depth:
                i -= 1
            start = max(node.lockbound, i)
            scan = node.scan
            if scan is not None and scan[0] is pref and scan[1] > start:
                start = scan[1]
            starts.append((start, depth, node))
        starts.reverse()
        made = 0
        a2 = self.p.alpha2
        closed = t - 2 * self.p.delta
        rounds = self.rounds
        for start, depth, node in starts:
            s2 = start
            sealed = True
            while s2 <= s:
                rec = rounds.get(s2)
                if rec is not None:
                    if rec.measure("rpref", pref, a2) >= depth:
                        break
                    if sealed and rec.start < closed:
                        node.scan = (pref, s2 + 1)
                    else:
                        sealed = False
                s2 += 1
            if s2 > s:
                continue
            node.locktime = t
            node.lockbound = s2 + 1
            node.scan = None
            self.lock_version += 1
            made += 1
        return made

    def update_pref(self, t: int) -> ChainString:
        """The bit-by-bit preference walk starting from ``final``."""
        p = self.p
        node_ctx = self.node
        store = node_ctx.store
        s = self.s
        rec = self.rounds.get(s)
        key = (s, -1 if rec is None else rec.defined, len(store), self.final,
               self.lock_version)
        if key == self._walk_key:
            return self.pref
        final = self.final
        res = self._resolve_final()
        last = res.last
        red = len(res.reduct)
        pos = len(final)
        tail = final[red:]
        cands = [b for b in store.kids(last) if b.hash.startswith(tail)]
        if rec is not None:
            defined = rec.defined
            alive_p = [g for g in rec.rpref.items() if g[0].startswith(final)]
            alive_l = [g for g in rec.rlock.items() if g[0].startswith(final)]
        else:
            defined = 0
            alive_p = []
            alive_l = []
        need_dec_p = p.k - p.alpha1 + 1
        need_dec_l = p.k - p.alpha2 + 1
        a1, a2 = p.alpha1, p.alpha2
        split, keep = kernels.bit_split, kernels.keep_bit
        node = self.root
        bits = []
        path = []
        final_height = last.height
        while True:
            if not cands:
                if (node_ctx.minting and pos == red and s % p.n == node_ctx.id
                        and last.height - final_height < node_ctx.mint_depth):
                    blk = node_ctx.mint(last)
                    cands = [blk]
                else:
                    break
            v = node.val
            if v is None:
                v = cands[0].hash[pos - red]
                node.val = v
            child = node.kid(v)
            if child.locktime is None:
                c0, c1 = split(alive_p, pos) if alive_p else (0, 0)
                opp = c1 if v == "0" else c0
                if defined - opp >= need_dec_p:
                    child.dec = s
                if opp >= a1:
                    v = _FLIP[v]
                    node.val = v
                    child = node.kid(v)
                    child.dec = s
            if child.locktime is not None:
                c0, c1 = split(alive_l, pos) if alive_l else (0, 0)
                opp = c1 if v == "0" else c0
                if defined - opp >= need_dec_l:
                    child.dec = s
                if opp >= a2:
                    v = _FLIP[v]
                    node.val = v
                    child = node.kid(v)
                    child.dec = s
                    node.unlock_below()
                    self.lock_version += 1
            bits.append(v)
            path.append(child)
            node = child
            if alive_p:
                alive_p = keep(alive_p, pos, v)
            if alive_l:
                alive_l = keep(alive_l, pos, v)
            off = pos - red
            cands = [b for b in cands if b.hash[off] == v]
            pos += 1
            if cands and len(cands[0].hash) == pos - red:
                last = cands[0]
                red = pos
                cands = list(store.kids(last))
        new_pref = final + "".join(bits) if bits else final
        if new_pref != self.pref:
            self.pref = new_pref
        self.path = path
        self.tip = last
        self._walk_key = (s, key[1], len(store), self.final, self.lock_version)
        return self.pref

    def advance_round_if_ready(self, t: int) -> bool:
        s = self.s
        started = self.start.get(s)
        timed_out = started is not None and started <= t - 2 * self.p.delta
        if timed_out or all(n.dec == s for n in self.path):
            self.pref_hist[s] = self.pref
            self.s = s + 1
            self.newround = True
            return True
        return False

    def finalize_check(self, t: int) -> Optional[ChainString]:
        """Longest sigma supported by beta suppfin rounds or two alpha3 rounds."""
        p = self.p
        base = len(self.final)
        pref = self.pref
        s = self.s
        best, best_s = base, -1
        lo = t - 2 * p.delta

        # rule (i): beta consecutive rounds of alpha2 locked support
        reach = []
        for s2 in range(self._floor_sf, s + 1):
            rec = self.rounds.get(s2)
            reach.append(rec.suppfin_reach(pref) if rec is not None else -1)
        beta = p.beta
        for i in range(len(reach) - beta + 1):
            m = min(reach[i:i + beta])
            if m >= best and m > base:
                best, best_s = m, self._floor_sf + i
        # rule (ii): alpha3 reported-final support in two consecutive rounds
        fins = []
        for s2 in range(self._floor_fin, s + 1):
            rec = self.rounds.get(s2)
            fins.append(rec.measure("rfin", pref, p.alpha3) if rec is not None else -1)
        for i in range(len(fins) - 1):
            m = min(fins[i], fins[i + 1])
            if m >= best and m > base:
                best, best_s = m, self._floor_fin + i

        changed = None
        if best > base:
            changed = self._set_final(pref[:best], best_s)
        self._advance_floors(lo)
        return changed

    def _set_final(self, sigma: str, s_prime: int) -> str:
        old = self.final
        extra = sigma[len(old):]
        self.root = self.root.descend(extra)
        self.path = self.path[len(extra):]
        self.final = sigma
        self.lastfinalized = s_prime
        self._emit("finalized", final=sigma, s=self.s, window=s_prime,
                   grew=len(extra))
        self.node.on_final(sigma)
        return sigma

    def _advance_floors(self, lo: int) -> None:
        final = self.final
        base = len(final)
        while self._floor_sf < self.s:
            rec = self.rounds.get(self._floor_sf)
            if rec is not None and rec.start >= lo:
                break
            if rec is not None and any(len(x) > base and x.startswith(final)
                                       for x in rec.suppfin):
                break
            self._floor_sf += 1
        a3 = self.p.alpha3
        while self._floor_fin < self.s:
            rec = self.rounds.get(self._floor_fin)
            if rec is not None and rec.start >= lo:
                break
            if rec is not None and sum(w for v, w in rec.rfin.items()
                                       if len(v) > base and v.startswith(final)) >= a3:
                break
            self._floor_fin += 1

    def stuck_check(self) -> list:
        """Once per round while s - lastfinalized >= gamma, send stuck."""
        if self.s - self.lastfinalized >= self.p.gamma and self.stuck_round != self.s:
            first = self.stuck_round < 0
            self.stuck_round = self.s
            body = Stuck(self.e, self.final)
            self._emit("stuck", s=self.s, lastfinalized=self.lastfinalized,
                       final=self.final, first=first)
            return [(ALL, self.node.sign(body))]
        return []

    def reported_lock(self, t: int) -> ChainString:
        """Longest prefix of pref locked for at least 4 delta; else final."""
        age = 4 * self.p.delta
        base = len(self.final)
        for i in range(len(self.path) - 1, -1, -1):
            lt = self.path[i].locktime
            if lt is not None and t - lt >= age:
                return self.pref[:base + i + 1]
        return self.final

    def answer_sample_request(self, t: int, sender: int, req: SampleRequest,
                              reply_cache: dict) -> Optional[tuple]:
        key = (sender, req.s)
        if key in self.answered:
            return None
        self.answered.add(key)
        body = reply_cache.get("body")
        if body is None:
            body = reply_cache["body"] = (self.tip.chain, self.reported_lock(t), self.final)
        chain, lock, final = body
        return sender, SampleResponse(req.s, chain, lock, final, self.e)

    # -- one timeslot ------------------------------------------------------

    def tick(self, t: int, responses, requests) -> list:
        """One pass of the even-epoch instructions at timeslot t."""
        out = []
        if not self.ready:
            self.init_epoch()
        out.extend(self.begin_round(t))
        for sender, msg in responses:
            self.ingest_response(t, sender, msg)
        self.update_support(t)
        self.update_locks(t)
        self.update_pref(t)
        self.advance_round_if_ready(t)
        self.finalize_check(t)
        out.extend(self.stuck_check())
        cache: dict = {}
        for sender, req in requests:
            r = self.answer_sample_request(t, sender, req, cache)
            if r is not None:
                out.append(r)
        return out
