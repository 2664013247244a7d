# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled string kernels; see ``_kernels_py`` for the reference semantics."""


cpdef Py_ssize_t lcp(str a, str b):
    cdef Py_ssize_t n = min(len(a), len(b))
    cdef Py_ssize_t i = 0
    while i < n and a[i] == b[i]:
        i += 1
    return i


cpdef Py_ssize_t kth_lcp(groups, str ref, Py_ssize_t kth):
    cdef Py_ssize_t total = 0, acc = 0, w
    cdef list scored = []
    for v, w in groups:
        total += w
    if total < kth:
        return -1
    for v, w in groups:
        scored.append((lcp(v, ref), w))
    scored.sort(reverse=True)
    for length, w in scored:
        acc += w
        if acc >= kth:
            return length
    return -1


cpdef Py_ssize_t count_extending(groups, str prefix):
    cdef Py_ssize_t acc = 0
    for v, w in groups:
        if (<str>v).startswith(prefix):
            acc += <Py_ssize_t>w
    return acc


cpdef tuple bit_split(list alive, Py_ssize_t pos):
    cdef Py_ssize_t c0 = 0, c1 = 0
    cdef str v
    cdef tuple g
    for g in alive:
        v = <str>g[0]
        if len(v) > pos:
            if v[pos] == u"0":
                c0 += <Py_ssize_t>g[1]
            else:
                c1 += <Py_ssize_t>g[1]
    return c0, c1


cpdef list keep_bit(list alive, Py_ssize_t pos, str bit):
    cdef list out = []
    cdef Py_UCS4 ch = bit[0]
    cdef str v
    cdef tuple g
    for g in alive:
        v = <str>g[0]
        if len(v) > pos and v[pos] == ch:
            out.append(g)
    return out


cpdef str majority_prefix(values):
    if not values:
        return ""
    cdef Py_ssize_t need = len(values) // 2 + 1
    cdef list vs = sorted(values)
    cdef Py_ssize_t best = -1, arg = 0, i, m
    for i in range(len(vs) - need + 1):
        m = lcp(vs[i], vs[i + need - 1])
        if m > best:
            best = m
            arg = i
    return (<str>vs[arg])[:best]
