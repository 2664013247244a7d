import itertools

import pytest

from frosty.certs import (Finalization, Notarization, StartingCertificate,
                          quorum)
from frosty.chainstr import HashOracle
from frosty.messages import (CertMsg, Finalize, Propose, SignedMsg, StartVote,
                             Vote)
from frosty.params import ProtocolParams
from frosty.simplex import (ProtocolViolation, chain_hash, check_chain,
                            dummy_block, fin_of, lead, make_block,
                            reduce_chain, OddEpoch)

N, E = 5, 1


class Host:
    def __init__(self, pid=1, **kw):
        self.params = ProtocolParams(n=N, **kw).validate()
        self.oracle = HashOracle(seed=2, bits=16)
        self.id = pid
        self.events = []

    def emit(self, kind, **payload):
        self.events.append((kind, payload))

    def sign(self, body):
        return SignedMsg(self.id, body)

    def pending_txs(self):
        return ("tx",)


def sc(sigmas=("0101",) * 4, e=E):
    return StartingCertificate(e, tuple(SignedMsg(i, StartVote(e, s)) for i, s in enumerate(sigmas)))


def build(oracle, pattern, C=None, e=E):
    """Blocks for a pattern like 'xdx' (x = real block, d = dummy)."""
    C = C or sc()
    blocks = []
    for h, kind in enumerate(pattern, start=1):
        if kind == "d":
            blocks.append(dummy_block(oracle, e, h))
        else:
            blocks.append(make_block(oracle, h, chain_hash(oracle, blocks), (h,), e, C))
    return blocks


def notarize(block, e=E, signers=range(N)):
    return Notarization(e, block.h, block, tuple(SignedMsg(i, Vote(e, block.h, block)) for i in signers))


def finalize(h, e=E):
    return Finalization(e, h, tuple(SignedMsg(i, Finalize(e, h)) for i in range(N)))


def test_leader_rotation():
    assert lead(7, 5) == 2
    assert lead(5, 5) == 0
    assert [lead(h, 3) for h in range(1, 7)] == [1, 2, 0, 1, 2, 0]


def enumerate_fin(pattern, blocks, mu, pref):
    """Scan positions directly instead of filtering."""
    out, taken = pref, 0
    for kind, b in zip(pattern, blocks):
        if taken == mu:
            break
        if kind == "x":
            out += b.hash
            taken += 1
    return out if taken == mu else None


@pytest.mark.parametrize("height", range(0, 7))
def test_fin_matches_enumeration(height):
    oracle = HashOracle(seed=4, bits=8)
    C = sc()
    for pattern in itertools.product("xd", repeat=height):
        blocks = build(oracle, pattern, C)
        assert len(reduce_chain(blocks)) == pattern.count("x")
        for mu in (1, 2, 3):
            expect = enumerate_fin(pattern, blocks, mu, C.pref)
            if expect is None:
                with pytest.raises(ValueError):
                    fin_of(blocks, mu)
            else:
                assert fin_of(blocks, mu) == expect


def test_fin_ignores_blocks_after_mu():
    oracle = HashOracle(seed=4, bits=8)
    blocks = build(oracle, "xxxx")
    assert fin_of(blocks, 2) == fin_of(blocks[:2], 2)


def test_fin_rejects_mixed_certificates():
    oracle = HashOracle(seed=4, bits=8)
    a = build(oracle, "x", sc(("0",) * 4))
    b = make_block(oracle, 2, chain_hash(oracle, a), (), E, sc(("1",) * 4))
    with pytest.raises(ProtocolViolation):
        fin_of(a + [b], 2)


def test_check_chain():
    oracle = HashOracle(seed=5, bits=16)
    good = build(oracle, "xdx")
    assert check_chain(oracle, good, E, N) is None
    stray = make_block(oracle, 3, chain_hash(oracle, good[:1]), (3,), E, sc())
    assert "link" in check_chain(oracle, good[:2] + [stray], E, N)
    other = sc(("1",) * 4)
    swapped = make_block(oracle, 3, chain_hash(oracle, good[:2]), (3,), E, other)
    assert "changes" in check_chain(oracle, good[:2] + [swapped], E, N)
    weak = make_block(oracle, 1, chain_hash(oracle, []), (), E, sc(("1",) * 3))
    assert "invalid starting certificate" in check_chain(oracle, [weak], E, N)
    assert "wrong height" in check_chain(oracle, good[1:], E, N)
    bogus = type(good[1])(2, None, None, E, None, "0" * 16)
    assert "dummy" in check_chain(oracle, [good[0], bogus], E, N)


def proposal(host, pattern, notar=True):
    blocks = build(host.oracle, pattern)
    *prefix, last = blocks
    S = tuple(notarize(b) for b in prefix) if notar else ()
    return Propose(lead(last.h, N), E, last.h, tuple(prefix), last, S)


def test_validate_accepts_well_formed():
    host = Host()
    ep = OddEpoch(host, E, "0101")
    assert ep.validate(proposal(host, "xdx")) is None


def test_validate_rejections():
    host = Host()
    ep = OddEpoch(host, E, "0101")
    p = proposal(host, "xd")
    dummy_top = Propose(p.signer, E, 2, p.prefix, p.block, p.notarizations)
    assert ep.validate(dummy_top).startswith("(i)")
    p = proposal(host, "xx")
    broken = make_block(host.oracle, 2, "1" * 16, (), E, sc())
    assert ep.validate(Propose(p.signer, E, 2, p.prefix, broken, p.notarizations)).startswith("(ii)")
    assert ep.validate(proposal(host, "xx", notar=False)).startswith("(iii)")
    thin = proposal(host, "xx")
    short = (notarize(thin.prefix[0], signers=range(quorum(N) - 1)),)
    assert ep.validate(Propose(thin.signer, E, 2, thin.prefix, thin.block, short)).startswith("(iii)")


def ready_epoch(pid=1, **kw):
    host = Host(pid, **kw)
    ep = OddEpoch(host, E, "0101")
    inbox = [(i, SignedMsg(i, StartVote(E, "0101"))) for i in range(4)]
    out = ep.tick(0, inbox)
    assert ep.ready and ep.h == 1 and ep.sc.pref == "0101"
    return host, ep, out


def test_start_vote_sent_once():
    host = Host()
    ep = OddEpoch(host, E, "0101")
    first = ep.tick(0, [])
    assert [m.body for _, m in first] == [StartVote(E, "0101")]
    assert ep.tick(1, []) == []


def test_timer_fires_dummy_vote_after_three_delta():
    host, ep, _ = ready_epoch(pid=3)
    assert ep.timers[1] == [3, "armed"]
    assert ep.tick(2, []) == []
    out = ep.tick(3, [])
    votes = [m.body for _, m in out if isinstance(m, SignedMsg)]
    assert votes == [Vote(E, 1, dummy_block(host.oracle, E, 1))]
    assert ep.tick(4, []) == []


def test_leader_proposes_and_notarization_moves_view():
    host, ep, out = ready_epoch(pid=1)
    props = [m for _, m in out if isinstance(m, Propose)]
    assert len(props) == 1 and props[0].h == 1
    blk = props[0].block
    assert not blk.is_dummy and blk.C == ep.sc
    votes = [(i, SignedMsg(i, Vote(E, 1, blk))) for i in range(N)]
    out = ep.tick(1, votes)
    assert ep.h == 2 and ep.timers[1][1] == "cancelled"
    assert SignedMsg(1, Finalize(E, 1)) in [m for _, m in out]
    assert any(isinstance(m, CertMsg) for _, m in out)


def test_invalid_proposal_gets_no_vote():
    host, ep, _ = ready_epoch(pid=3)
    p = proposal(host, "x")
    forged = Propose(p.signer, E, 1, (), make_block(host.oracle, 1, "1" * 16, (), E, ep.sc), ())
    out = ep.tick(1, [(forged.signer, forged)])
    assert ep.rejections == [(1, ep.rejections[0][1])]
    assert ep.rejections[0][1].startswith("(ii)")
    assert not any(isinstance(m, SignedMsg) and isinstance(m.body, Vote) for _, m in out)


def test_conclude_after_mu_reduced_blocks():
    host, ep, _ = ready_epoch(pid=3, mu=2)
    blocks = build(host.oracle, "xdx", ep.sc)
    for b in blocks:
        ep.tick(1, [(0, CertMsg(notarize(b)))])
    assert ep.fin is None
    ep.tick(2, [(0, CertMsg(finalize(3)))])
    assert ep.fin == fin_of(blocks, 2) == ep.sc.pref + blocks[0].hash + blocks[2].hash


def test_no_conclusion_on_dummy_tip():
    host, ep, _ = ready_epoch(pid=3, mu=1)
    blocks = build(host.oracle, "xd", ep.sc)
    for b in blocks:
        ep.tick(1, [(0, CertMsg(notarize(b)))])
    ep.tick(2, [(0, CertMsg(finalize(2)))])
    assert ep.fin is None


def test_foreign_epoch_certificates_ignored():
    host, ep, _ = ready_epoch(pid=3)
    b = build(host.oracle, "x", ep.sc)[0]
    out = []
    assert not ep.add_notarization(notarize(b, e=3), out)
    assert out == []
