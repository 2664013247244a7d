"""Pure-Python string kernels (fallback for the compiled ``_kernels``).

Every function here has an identically named, identically behaving
counterpart in ``_kernels.pyx``.
"""


def lcp(a, b):
    """Length of the longest common prefix of two strings."""
    n = min(len(a), len(b))
    if a[:n] == b[:n]:
        return n
    lo, hi = 0, n
    # invariant: a[:lo] == b[:lo] and a[:hi] != b[:hi]
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if a.startswith(b[lo:mid], lo):
            lo = mid
        else:
            hi = mid
    return lo


def kth_lcp(groups, ref, kth):
    """Largest l such that values sharing >= l leading chars with ``ref``
    carry total weight >= kth; -1 when the total weight is below kth.

    ``groups`` is a sequence of ``(value, weight)`` pairs.
    """
    total = 0
    for _, w in groups:
        total += w
    if total < kth:
        return -1
    scored = sorted(((lcp(v, ref), w) for v, w in groups), reverse=True)
    acc = 0
    for length, w in scored:
        acc += w
        if acc >= kth:
            return length
    return -1


def count_extending(groups, prefix):
    """Total weight of values having ``prefix`` as an initial segment."""
    acc = 0
    for v, w in groups:
        if v.startswith(prefix):
            acc += w
    return acc


def bit_split(alive, pos):
    """Weights of alive values whose char at ``pos`` is '0' and '1'."""
    c0 = c1 = 0
    for v, w in alive:
        if len(v) > pos:
            if v[pos] == "0":
                c0 += w
            else:
                c1 += w
    return c0, c1


def keep_bit(alive, pos, bit):
    """The alive values whose char at ``pos`` equals ``bit``."""
    return [g for g in alive if len(g[0]) > pos and g[0][pos] == bit]


def majority_prefix(values):
    """Longest string that is an initial segment of more than half of
    ``values``.  Values sharing a prefix are contiguous once sorted, so the
    answer is the best common prefix over windows of majority size."""
    if not values:
        return ""
    need = len(values) // 2 + 1
    vs = sorted(values)
    best, arg = -1, 0
    for i in range(len(vs) - need + 1):
        m = lcp(vs[i], vs[i + need - 1])
        if m > best:
            best, arg = m, i
    return vs[arg][:best]
