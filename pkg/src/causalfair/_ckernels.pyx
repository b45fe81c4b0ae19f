# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Mirrors ``_pykernels`` exactly; see that module for the contracts."""

from libc.stdlib cimport llabs

ctypedef unsigned long long u64


cdef inline int _lowbit(u64 m) nogil:
    cdef int i = 0
    while not (m & 1):
        m >>= 1
        i += 1
    return i


cdef u64 _closure(const u64[:] adj, u64 seed) nogil:
    cdef u64 out = seed, frontier = seed, nxt
    cdef int v
    while frontier:
        nxt = 0
        while frontier:
            v = _lowbit(frontier)
            frontier &= frontier - 1
            nxt |= adj[v]
        frontier = nxt & ~out
        out |= nxt
    return out


def ancestors_mask(const u64[:] parents, u64 seed):
    return _closure(parents, seed)


def dsep(const u64[:] parents, const u64[:] children, int x, int y, u64 given):
    cdef u64 anc = _closure(parents, given)
    # up: entered from a child; down: entered from a parent
    cdef u64 seen_up = 0, seen_down = 0
    cdef u64 todo_up = (<u64>1) << x, todo_down = 0
    cdef u64 reached = 0, bit
    cdef int v
    while todo_up or todo_down:
        if todo_up:
            v = _lowbit(todo_up)
            bit = (<u64>1) << v
            todo_up &= ~bit
            seen_up |= bit
            if given & bit:
                continue
            reached |= bit
            todo_up |= parents[v] & ~seen_up
            todo_down |= children[v] & ~seen_down
        else:
            v = _lowbit(todo_down)
            bit = (<u64>1) << v
            todo_down &= ~bit
            seen_down |= bit
            if not (given & bit):
                reached |= bit
                todo_down |= children[v] & ~seen_down
            if anc & bit:
                todo_up |= parents[v] & ~seen_up
        if reached & ((<u64>1) << y):
            return False
    return True


cdef inline double _gap2(long long a, long long b, long long c, long long d, long long n) nogil:
    # |ad - bc| / n^2 is the L-inf deviation of a 2x2 count table from independence
    return <double>llabs(a * d - b * c) / <double>(n * n)


def scan_binary(int resolution, double eps, double tau, bint exempt_perfect):
    cdef int n = resolution
    cdef long long c[8]
    cdef long long tested = 0, passing = 0, exempted = 0
    cdef long long k, m00, m01, m10, m11
    cdef double dp, eo, pp, cal, bias, g
    cdef int nsat, i0, i1, i2, i3, i4, i5, i6
    cdef bint pre, perfect
    witnesses = []
    trivial = []
    for i0 in range(n + 1):
        c[0] = i0
        for i1 in range(n - i0 + 1):
            c[1] = i1
            for i2 in range(n - i0 - i1 + 1):
                c[2] = i2
                for i3 in range(n - i0 - i1 - i2 + 1):
                    c[3] = i3
                    for i4 in range(n - i0 - i1 - i2 - i3 + 1):
                        c[4] = i4
                        for i5 in range(n - i0 - i1 - i2 - i3 - i4 + 1):
                            c[5] = i5
                            for i6 in range(n - i0 - i1 - i2 - i3 - i4 - i5 + 1):
                                c[6] = i6
                                c[7] = n - i0 - i1 - i2 - i3 - i4 - i5 - i6
                                tested += 1
                                # entry index = 4*a + 2*y + yhat
                                dp = _gap2(c[0] + c[2], c[1] + c[3], c[4] + c[6], c[5] + c[7], n)
                                bias = _gap2(c[0] + c[1], c[2] + c[3], c[4] + c[5], c[6] + c[7], n)
                                m00 = c[0] + c[4]
                                m01 = c[1] + c[5]
                                m10 = c[2] + c[6]
                                m11 = c[3] + c[7]
                                cal = _gap2(m00, m01, m10, m11, n)
                                eo = 0.0
                                k = c[0] + c[1] + c[4] + c[5]
                                if k > 0:
                                    eo = _gap2(c[0], c[1], c[4], c[5], k)
                                k = c[2] + c[3] + c[6] + c[7]
                                if k > 0:
                                    g = _gap2(c[2], c[3], c[6], c[7], k)
                                    if g > eo:
                                        eo = g
                                pp = 0.0
                                k = c[0] + c[2] + c[4] + c[6]
                                if k > 0:
                                    pp = _gap2(c[0], c[2], c[4], c[6], k)
                                k = c[1] + c[3] + c[5] + c[7]
                                if k > 0:
                                    g = _gap2(c[1], c[3], c[5], c[7], k)
                                    if g > pp:
                                        pp = g
                                pre = cal >= tau and bias >= tau
                                if pre:
                                    passing += 1
                                nsat = (dp <= eps) + (eo <= eps) + (pp <= eps)
                                if nsat < 2:
                                    continue
                                row = (c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7])
                                if not pre:
                                    trivial.append(row)
                                    continue
                                perfect = ((m00 == 0 or m01 == 0) and (m10 == 0 or m11 == 0)
                                           and (m00 == 0 or m10 == 0) and (m01 == 0 or m11 == 0))
                                if exempt_perfect and perfect:
                                    exempted += 1
                                    trivial.append(row)
                                else:
                                    witnesses.append(row)
    return tested, passing, witnesses, trivial, exempted
