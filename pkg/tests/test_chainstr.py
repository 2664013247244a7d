import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frosty.chainstr import (BlockStore, Chain, HashCollision, HashOracle,
                             children_extending, comparable, extends,
                             hash_concat, make_checkpoint, make_genesis,
                             mint_child, resolve_prefix)


def build_tree(parents, bits=4, seed=0):
    """Block i+1 is minted on block parents[i] (0 = genesis)."""
    oracle = HashOracle(seed=seed, bits=bits)
    g = make_genesis(oracle)
    store = BlockStore(g)
    blocks = [g]
    for i, p in enumerate(parents):
        b = mint_child(blocks[p], (i,), oracle, 0, i)
        store.add(b)
        blocks.append(b)
    return oracle, store, blocks


def brute_resolve(sigma, store):
    """Longest root-to-block path whose concatenated hashes prefix sigma."""
    best = None
    for b in store.order:
        chain = b.chain
        if chain.blocks[0] not in store:
            continue
        bits = chain.bits
        if sigma.startswith(bits) and (best is None or len(bits) > len(best[1])):
            best = (chain.blocks, bits, b)
    if best is None:
        g = store.genesis
        return (g,), g.hash, g
    return best


trees = st.integers(0, 6).flatmap(
    lambda k: st.tuples(*[st.integers(0, i) for i in range(k)]))


@settings(max_examples=300, deadline=None)
@given(parents=trees, pick=st.integers(0, 6), tail=st.text("01", max_size=6),
       seed=st.integers(0, 50))
def test_resolve_matches_enumeration(parents, pick, tail, seed):
    _, store, blocks = build_tree(list(parents), seed=seed)
    target = blocks[pick % len(blocks)]
    sigma = target.chain.bits[: len(target.chain.bits) - len(tail) // 2] + tail
    res = resolve_prefix(sigma, store)
    chain, reduct, last = brute_resolve(sigma, store)
    assert res.last is last
    assert res.reduct == reduct
    assert res.chain == tuple(chain)


@settings(max_examples=200, deadline=None)
@given(parents=trees, sigma=st.text("01", max_size=30))
def test_resolution_is_a_prefix(parents, sigma):
    _, store, _ = build_tree(list(parents))
    res = resolve_prefix(sigma, store)
    if res.last is not store.genesis:
        assert sigma.startswith(res.reduct)
        assert hash_concat(res.chain) == res.reduct


def test_resolve_falls_back_to_genesis():
    _, store, blocks = build_tree([0])
    g = blocks[0]
    flipped = "".join("1" if c == "0" else "0" for c in g.hash)
    res = resolve_prefix(flipped, store)
    assert res.last is g and res.chain == (g,)


def test_children_extending_partial_hash():
    _, store, blocks = build_tree([0, 0, 0], bits=8)
    g = blocks[0]
    kid = blocks[2]
    e = children_extending(g.hash + kid.hash[:3], store)
    assert kid in e
    assert all(b.hash.startswith(kid.hash[:3]) for b in e)
    assert children_extending(g.hash, store) == [blocks[1], blocks[2], blocks[3]]


def test_oracle_values_are_unique_and_stable():
    o = HashOracle(seed=3, bits=8)
    vals = [o(("k", i)) for i in range(200)]
    assert len(set(vals)) == 200
    assert all(len(v) == 8 and set(v) <= {"0", "1"} for v in vals)
    assert o(("k", 5)) == vals[5]
    assert o.audit() == 200


def test_oracle_seed_reproducible():
    a, b = HashOracle(seed=9), HashOracle(seed=9)
    assert [a(i) for i in range(10)] == [b(i) for i in range(10)]


def test_sha256_mode_aborts_on_collision():
    o = HashOracle(seed=0, bits=2, mode="sha256")
    with pytest.raises(HashCollision):
        for i in range(10):
            o(i)


def test_store_rejects_colliding_block():
    oracle, store, blocks = build_tree([0])
    g = blocks[0]
    twin = type(g)(id=("evil",), parent_hash=g.hash, txs=(), hash=blocks[1].hash, parent=g)
    with pytest.raises(HashCollision):
        store.add(twin)


def test_chain_linking():
    _, store, blocks = build_tree([0, 1, 2])
    c = blocks[3].chain
    assert c.linked and len(c) == 4
    assert c.bits == "".join(b.hash for b in blocks[:4])
    broken = Chain((blocks[0], blocks[2]))
    assert not broken.linked and broken.bits == ""
    assert not Chain((blocks[1],)).linked


def test_add_chain_adds_missing_parents_first():
    oracle, store, blocks = build_tree([0, 1, 2])
    other = BlockStore(blocks[0])
    assert other.add_chain(blocks[3].chain) == 3
    assert other.order == blocks[:4]
    assert other.add_chain(blocks[3].chain) == 0


def test_checkpoint_roots_are_shared_and_resolvable():
    oracle, store, blocks = build_tree([0], bits=8)
    fin = blocks[1].chain.bits + "0110"
    cp = make_checkpoint(oracle, 1, fin)
    assert make_checkpoint(oracle, 1, fin) is cp
    store.add(cp)
    kid = mint_child(cp, (), oracle, 1, 0)
    store.add(kid)
    res = resolve_prefix(fin + kid.hash, store)
    assert res.last is kid and res.chain == (cp, kid)
    assert kid.chain.linked and kid.chain.bits == fin + kid.hash


@given(a=st.text("01", max_size=12), b=st.text("01", max_size=12))
def test_prefix_relations(a, b):
    assert extends(a, a + b)
    assert comparable(a, a + b) and comparable(a + b, a)
    if comparable(a, b):
        assert a.startswith(b) or b.startswith(a)


def test_block_heights():
    _, _, blocks = build_tree([0, 1, 1, 3])
    assert [b.height for b in blocks] == [0, 1, 2, 2, 3]


def test_children_in_arrival_order():
    _, store, blocks = build_tree([0, 0, 0, 0])
    assert store.kids(blocks[0]) == blocks[1:]
    for perm in itertools.islice(itertools.permutations(blocks[1:]), 5):
        s2 = BlockStore(blocks[0])
        for b in perm:
            s2.add(b)
        assert s2.kids(blocks[0]) == list(perm)
