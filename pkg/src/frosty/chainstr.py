"""Chain strings, blocks and the per-process block store.

A chain string is a plain ``str`` over the alphabet ``{"0", "1"}``.  Using
``str`` keeps prefix tests (``str.startswith``) in C and lets equal values be
shared freely between processes.
"""
from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence

ChainString = str

EMPTY: ChainString = ""


class HashCollision(RuntimeError):
    """Two distinct blocks received the same hash value."""


def extends(prefix: ChainString, value: ChainString) -> bool:
    """True iff ``prefix`` is an initial segment of ``value``."""
    return value.startswith(prefix)


def comparable(a: ChainString, b: ChainString) -> bool:
    return a.startswith(b) or b.startswith(a)


class HashOracle:
    """Assigns hash values to block contents.

    ``mode="oracle"`` draws a fresh, never-repeated L-bit value from a seeded
    generator the first time a key is seen (the perfect-hash model).
    ``mode="sha256"`` truncates SHA-256 to L bits and aborts on a collision.
    """

    def __init__(self, seed: int = 0, bits: int = 32, mode: str = "oracle"):
        if bits < 1:
            raise ValueError("hash length must be positive")
        if mode not in ("oracle", "sha256"):
            raise ValueError(f"unknown hash mode {mode!r}")
        self.bits = bits
        self.mode = mode
        self._seed = seed
        self._rng = random.Random(f"hash-oracle/{seed}")
        self._by_key: dict = {}
        self._owner: dict[str, object] = {}
        self.roots: dict[tuple, "Block"] = {}

    def __call__(self, key) -> ChainString:
        value = self._by_key.get(key)
        if value is not None:
            return value
        if self.mode == "oracle":
            while True:
                value = format(self._rng.getrandbits(self.bits), f"0{self.bits}b")
                if value not in self._owner:
                    break
        else:
            digest = hashlib.sha256(f"{self._seed}|{key!r}".encode()).digest()
            num = int.from_bytes(digest, "big") >> (256 - self.bits) if self.bits <= 256 else 0
            value = format(num, f"0{self.bits}b")
            if value in self._owner:
                raise HashCollision(
                    f"hash {value} shared by {self._owner[value]!r} and {key!r}")
        self._by_key[key] = value
        self._owner[value] = key
        return value

    def audit(self) -> int:
        """Number of distinct hashed keys; raises if injectivity ever broke."""
        if len(self._owner) != len(self._by_key):
            raise HashCollision("hash registry is not injective")
        return len(self._by_key)


@dataclass(eq=False)
class Block:
    """An application block.

    ``hash`` is the block's contribution to a chain string.  Ordinary blocks
    have exactly L bits; a checkpoint root (``parent_hash is None`` and not
    genesis) carries the whole string finalized by an odd epoch.
    """

    id: tuple
    parent_hash: Optional[ChainString]
    txs: tuple
    hash: ChainString
    parent: Optional["Block"] = field(default=None, repr=False)

    @property
    def is_root(self) -> bool:
        return self.parent_hash is None

    @cached_property
    def height(self) -> int:
        return 0 if self.parent is None else self.parent.height + 1

    @cached_property
    def chain(self) -> "Chain":
        """The parent-linked chain from this block's root down to it."""
        if self.parent is None:
            return Chain((self,))
        return Chain(self.parent.chain.blocks + (self,))


class Chain:
    """An immutable block sequence as carried in a sample response."""

    __slots__ = ("blocks", "__dict__")

    def __init__(self, blocks: Sequence[Block]):
        self.blocks = tuple(blocks)

    def __len__(self):
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    @cached_property
    def linked(self) -> bool:
        """Starts at a root and every block names its predecessor's hash."""
        bs = self.blocks
        if not bs or not bs[0].is_root:
            return False
        return all(bs[i].parent_hash == bs[i - 1].hash for i in range(1, len(bs)))

    @cached_property
    def bits(self) -> ChainString:
        return "".join(b.hash for b in self.blocks) if self.linked else EMPTY

    @property
    def tip(self) -> Block:
        return self.blocks[-1]


def hash_concat(chain: Iterable[Block], genesis: Optional[Block] = None) -> ChainString:
    """H_B for a block sequence: the concatenated hashes, or "" if not a chain.

    With ``genesis`` given the sequence must start at that block.
    """
    c = chain if isinstance(chain, Chain) else Chain(tuple(chain))
    if genesis is not None and (not c.blocks or c.blocks[0] is not genesis):
        return EMPTY
    return c.bits


def make_genesis(oracle: HashOracle) -> Block:
    return Block(id=("genesis",), parent_hash=None, txs=(), hash=oracle(("genesis",)))


def make_checkpoint(oracle: HashOracle, epoch: int, value: ChainString) -> Block:
    """Root block standing for the string an odd epoch finalized.

    Memoized on the oracle so every process holds the same object.
    """
    key = ("checkpoint", epoch, value)
    blk = oracle.roots.get(key)
    if blk is None:
        blk = Block(id=key, parent_hash=None, txs=(), hash=value)
        oracle.roots[key] = blk
    return blk


class BlockStore:
    """Blocks seen by one process, in arrival order, indexed by parent hash."""

    def __init__(self, genesis: Block):
        self.genesis = genesis
        self.entries: dict[ChainString, Block] = {}
        self.order: list[Block] = []
        self.arrival: dict[int, int] = {}
        self.children: dict[ChainString, list[Block]] = {}
        self.roots: list[Block] = []
        self.add(genesis)

    def __contains__(self, block: Block) -> bool:
        return id(block) in self.arrival

    def __len__(self):
        return len(self.order)

    def add(self, block: Block) -> bool:
        if id(block) in self.arrival:
            return False
        known = self.entries.get(block.hash)
        if known is not None and known is not block:
            raise HashCollision(f"{block.id!r} collides with {known.id!r}")
        self.arrival[id(block)] = len(self.order)
        self.order.append(block)
        self.entries[block.hash] = block
        if block.is_root:
            self.roots.append(block)
        else:
            self.children.setdefault(block.parent_hash, []).append(block)
        return True

    def add_chain(self, chain: Chain) -> int:
        """Add every unseen block of a linked chain, parents first."""
        missing = []
        for b in reversed(chain.blocks):
            if id(b) in self.arrival:
                break
            missing.append(b)
        for b in reversed(missing):
            self.add(b)
        return len(missing)

    def knows_root(self, chain: Chain) -> bool:
        return bool(chain.blocks) and id(chain.blocks[0]) in self.arrival

    def kids(self, block: Block) -> list[Block]:
        return self.children.get(block.hash, [])


@dataclass(frozen=True)
class Resolution:
    chain: tuple
    reduct: ChainString
    last: Block


def resolve_prefix(sigma: ChainString, store: BlockStore) -> Resolution:
    """chain/reduct/last of ``sigma``: the longest stored chain whose hash
    concatenation is an initial segment of ``sigma``; genesis otherwise."""
    best: Optional[list] = None
    best_len = -1
    for root in store.roots:
        if not sigma.startswith(root.hash):
            continue
        path = [root]
        pos = len(root.hash)
        while True:
            nxt = None
            for c in store.children.get(path[-1].hash, ()):
                if sigma.startswith(c.hash, pos):
                    nxt = c
                    break
            if nxt is None:
                break
            path.append(nxt)
            pos += len(nxt.hash)
        if pos > best_len:
            best, best_len = path, pos
    if best is None:
        g = store.genesis
        return Resolution((g,), g.hash, g)
    return Resolution(tuple(best), sigma[:best_len], best[-1])


def children_extending(pref: ChainString, store: BlockStore) -> list[Block]:
    """E: children of last(pref) whose hash keeps pref an initial segment."""
    res = resolve_prefix(pref, store)
    tail = pref[len(res.reduct):]
    return [b for b in store.kids(res.last) if b.hash.startswith(tail)]


def mint_child(parent: Block, payload: tuple, oracle: HashOracle, minter: int,
               counter: int) -> Block:
    """A fresh block on ``parent``; identity is (minter, counter, parent)."""
    ident = ("block", minter, counter, parent.hash)
    return Block(id=ident, parent_hash=parent.hash, txs=tuple(payload),
                 hash=oracle(ident), parent=parent)
