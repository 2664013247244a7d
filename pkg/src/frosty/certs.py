"""Certificates built from distinct-signer message sets.

Thresholds, for n processes:

* epoch certificate: at least n/5 stuck messages, i.e. ``ceil(n/5)``
* starting certificate: at least 4n/5 starting votes, i.e. ``ceil(4n/5)``
* notarization / finalization: more than 4n/5, i.e. ``floor(4n/5) + 1``
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

from . import kernels
from .chainstr import ChainString
from .messages import Finalize, SignedMsg, StartVote, Stuck, Vote


class MalformedMessage(ValueError):
    pass


def ec_threshold(n: int) -> int:
    return -(-n // 5)


def sc_threshold(n: int) -> int:
    return -(-4 * n // 5)


def quorum(n: int) -> int:
    return 4 * n // 5 + 1


def _distinct(votes) -> bool:
    return len({v.signer for v in votes}) == len(votes)


@dataclass(frozen=True, eq=False)
class EpochCertificate:
    """Stuck messages for (e, sigma); authorizes entering epoch e + 1."""

    e: int
    sigma: ChainString
    votes: tuple

    @property
    def target(self) -> int:
        return self.e + 1

    def valid(self, n: int) -> bool:
        return (len(self.votes) >= ec_threshold(n) and _distinct(self.votes)
                and all(v.body == Stuck(self.e, self.sigma) for v in self.votes))


@dataclass(frozen=True, eq=False)
class StartingCertificate:
    e: int
    votes: tuple

    @cached_property
    def key(self) -> tuple:
        return tuple(sorted((v.signer, v.body.sigma) for v in self.votes))

    @cached_property
    def pref(self) -> ChainString:
        return pref_of_sc(self)

    def valid(self, n: int) -> bool:
        return (len(self.votes) >= sc_threshold(n) and _distinct(self.votes)
                and all(isinstance(v.body, StartVote) and v.body.e == self.e
                        for v in self.votes))

    def __eq__(self, other):
        return isinstance(other, StartingCertificate) and self.key == other.key

    def __hash__(self):
        return hash(self.key)


@dataclass(frozen=True, eq=False)
class Notarization:
    e: int
    h: int
    block: object
    votes: tuple

    def valid(self, n: int) -> bool:
        return (len(self.votes) >= quorum(n) and _distinct(self.votes)
                and self.block.h == self.h and self.block.e == self.e
                and all(isinstance(v.body, Vote) and v.body.e == self.e
                        and v.body.h == self.h and v.body.block == self.block
                        for v in self.votes))


@dataclass(frozen=True, eq=False)
class Finalization:
    e: int
    h: int
    votes: tuple

    def valid(self, n: int) -> bool:
        return (len(self.votes) >= quorum(n) and _distinct(self.votes)
                and all(v.body == Finalize(self.e, self.h) for v in self.votes))


def pref_of_sc(cert: StartingCertificate) -> ChainString:
    """Pref(C): the longest string extended by more than half of C's votes."""
    return kernels.majority_prefix([v.body.sigma for v in cert.votes])


def _key(body):
    if isinstance(body, Stuck):
        return ("stuck", body.e, body.sigma)
    if isinstance(body, StartVote):
        return ("start", body.e)
    if isinstance(body, Vote):
        return ("vote", body.e, body.h, body.block.hash)
    if isinstance(body, Finalize):
        return ("finalize", body.e, body.h)
    raise MalformedMessage(f"not a certifiable body: {body!r}")


@dataclass
class CertAccumulator:
    """Distinct-signer vote sets per body key; each key completes at most once."""

    n: int
    pending: dict = field(default_factory=dict)
    done: dict = field(default_factory=dict)

    def votes(self, key) -> dict:
        return self.pending.get(key, {})

    def accumulate(self, msg: SignedMsg) -> Optional[object]:
        if not isinstance(msg, SignedMsg) or not 0 <= msg.signer < self.n:
            raise MalformedMessage(f"bad signed message {msg!r}")
        body = msg.body
        key = _key(body)
        bucket = self.pending.setdefault(key, {})
        if msg.signer in bucket:
            return None
        bucket[msg.signer] = msg
        if key in self.done:
            return None
        n, size = self.n, len(bucket)
        cert = None
        if isinstance(body, Stuck) and size >= ec_threshold(n):
            cert = EpochCertificate(body.e, body.sigma, tuple(bucket.values()))
        elif isinstance(body, StartVote) and size >= sc_threshold(n):
            cert = StartingCertificate(body.e, tuple(bucket.values()))
        elif isinstance(body, Vote) and size >= quorum(n):
            cert = Notarization(body.e, body.h, body.block, tuple(bucket.values()))
        elif isinstance(body, Finalize) and size >= quorum(n):
            cert = Finalization(body.e, body.h, tuple(bucket.values()))
        if cert is not None:
            self.done[key] = cert
        return cert

    def completed(self, key):
        return self.done.get(key)
