"""Wire types exchanged between processes.

Every message exposes ``e``, the epoch it belongs to; the node shell uses it
to buffer future-epoch traffic and drop stale traffic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .chainstr import Chain, ChainString


# -- signed bodies -----------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Stuck:
    e: int
    sigma: ChainString


@dataclass(frozen=True, slots=True)
class StartVote:
    e: int
    sigma: ChainString


@dataclass(frozen=True, slots=True)
class Vote:
    e: int
    h: int
    block: "SimplexBlock"


@dataclass(frozen=True, slots=True)
class Finalize:
    e: int
    h: int


@dataclass(frozen=True, slots=True)
class SignedMsg:
    signer: int
    body: object

    @property
    def e(self) -> int:
        return self.body.e


# -- odd-epoch blocks --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SimplexBlock:
    """(h, parent, txs, e, C); a dummy block has parent, txs and C all None."""

    h: int
    parent: Optional[ChainString]
    txs: Optional[tuple]
    e: int
    C: Optional[object]
    hash: ChainString = field(compare=False)

    @property
    def is_dummy(self) -> bool:
        return self.parent is None and self.txs is None and self.C is None

    def __eq__(self, other):
        return isinstance(other, SimplexBlock) and other.hash == self.hash

    def __hash__(self):
        return hash(self.hash)

    def describe(self) -> str:
        if self.is_dummy:
            return f"dummy(e={self.e},h={self.h})"
        return f"block(e={self.e},h={self.h},hash={self.hash})"


# -- unsigned / composite messages -------------------------------------------

@dataclass(frozen=True, slots=True)
class SampleRequest:
    s: int
    e: int


@dataclass(frozen=True, slots=True)
class SampleResponse:
    s: int
    chain: Chain
    lock: ChainString
    final: ChainString
    e: int


@dataclass(frozen=True, slots=True)
class Propose:
    """A leader's signed proposal (propose, e, h, b_1..b_{h-1}, b_h, S)."""

    signer: int
    e: int
    h: int
    prefix: tuple
    block: SimplexBlock
    notarizations: tuple


@dataclass(frozen=True, slots=True)
class CertMsg:
    """Carries a certificate (epoch certificate, notarization, finalization)."""

    cert: object

    @property
    def e(self) -> int:
        return self.cert.e


ALL = -1
"""Destination meaning every process, the sender included."""
