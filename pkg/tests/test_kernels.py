import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frosty import _kernels_py as pure
from frosty import kernels

backends = [pure]
if kernels.compiled is not None:
    backends.append(kernels.compiled)

bits = st.text("01", max_size=40)
groups = st.lists(st.tuples(bits, st.integers(1, 5)), max_size=12)


def naive_lcp(a, b):
    i = 0
    while i < min(len(a), len(b)) and a[i] == b[i]:
        i += 1
    return i


def naive_kth(gs, ref, kth):
    best = -1
    for length in range(len(ref) + 1):
        if sum(w for v, w in gs if naive_lcp(v, ref) >= length) >= kth:
            best = length
    return best


@pytest.mark.parametrize("impl", backends, ids=lambda m: m.__name__)
@settings(max_examples=300, deadline=None)
@given(a=bits, b=bits)
def test_lcp(impl, a, b):
    assert impl.lcp(a, b) == naive_lcp(a, b)


@pytest.mark.parametrize("impl", backends, ids=lambda m: m.__name__)
@settings(max_examples=300, deadline=None)
@given(gs=groups, ref=bits, kth=st.integers(1, 20))
def test_kth_lcp(impl, gs, ref, kth):
    expected = naive_kth(gs, ref, kth)
    if sum(w for _, w in gs) < kth:
        expected = -1
    assert impl.kth_lcp(gs, ref, kth) == expected


@pytest.mark.parametrize("impl", backends, ids=lambda m: m.__name__)
@settings(max_examples=200, deadline=None)
@given(gs=groups, pos=st.integers(0, 40), bit=st.sampled_from("01"), prefix=bits)
def test_bit_helpers(impl, gs, pos, bit, prefix):
    c0 = sum(w for v, w in gs if len(v) > pos and v[pos] == "0")
    c1 = sum(w for v, w in gs if len(v) > pos and v[pos] == "1")
    assert tuple(impl.bit_split(gs, pos)) == (c0, c1)
    assert list(impl.keep_bit(gs, pos, bit)) == [g for g in gs if len(g[0]) > pos and g[0][pos] == bit]
    assert impl.count_extending(gs, prefix) == sum(w for v, w in gs if v.startswith(prefix))


@pytest.mark.parametrize("impl", backends, ids=lambda m: m.__name__)
@settings(max_examples=300, deadline=None)
@given(vals=st.lists(st.text("01", max_size=10), max_size=9))
def test_majority_prefix(impl, vals):
    best = ""
    for v in vals:
        for i in range(len(v) + 1):
            if 2 * sum(x.startswith(v[:i]) for x in vals) > len(vals) and i > len(best):
                best = v[:i]
    assert impl.majority_prefix(vals) == best


def test_backend_selection():
    assert kernels.BACKEND in ("cython", "python")
    assert kernels.pure is pure
    if kernels.BACKEND == "cython":
        assert kernels.impl is kernels.compiled
