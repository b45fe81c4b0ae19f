"""Pure-Python kernels, used when the compiled extension is unavailable.

Graphs are passed as lists of bitmasks: ``parents[v]`` has bit ``u`` set when
``u -> v``. Binary (A, Y, Yhat) tables are 8 integer counts indexed
``4*a + 2*y + yhat`` that sum to the grid resolution.
"""


def _closure(adj, seed):
    out = frontier = seed
    while frontier:
        nxt = 0
        while frontier:
            low = frontier & -frontier
            nxt |= adj[low.bit_length() - 1]
            frontier ^= low
        frontier = nxt & ~out
        out |= nxt
    return out


def ancestors_mask(parents, seed):
    """Bitmask of ``seed`` plus all of its ancestors."""
    return _closure(parents, seed)


def dsep(parents, children, x, y, given):
    """Reachability over (node, direction) states; True when no active trail joins x and y."""
    anc = _closure(parents, given)
    seen_up = seen_down = 0
    todo_up, todo_down = 1 << x, 0
    reached = 0
    target = 1 << y
    while todo_up or todo_down:
        if todo_up:
            bit = todo_up & -todo_up
            v = bit.bit_length() - 1
            todo_up ^= bit
            seen_up |= bit
            if given & bit:
                continue
            reached |= bit
            todo_up |= parents[v] & ~seen_up
            todo_down |= children[v] & ~seen_down
        else:
            bit = todo_down & -todo_down
            v = bit.bit_length() - 1
            todo_down ^= bit
            seen_down |= bit
            if not given & bit:
                reached |= bit
                todo_down |= children[v] & ~seen_down
            if anc & bit:
                todo_up |= parents[v] & ~seen_up
        if reached & target:
            return False
    return True


def _gap2(a, b, c, d, n):
    return abs(a * d - b * c) / (n * n)


def scan_binary(resolution, eps, tau, exempt_perfect):
    """Classify every composition of ``resolution`` into 8 cells.

    Returns ``(tested, passing, witnesses, trivial, exempted)``; compositions are
    visited in lexicographic order so both lists come out sorted.
    """
    n = resolution
    tested = passing = exempted = 0
    witnesses, trivial = [], []
    for c0 in range(n + 1):
        r0 = n - c0
        for c1 in range(r0 + 1):
            r1 = r0 - c1
            for c2 in range(r1 + 1):
                r2 = r1 - c2
                for c3 in range(r2 + 1):
                    r3 = r2 - c3
                    for c4 in range(r3 + 1):
                        r4 = r3 - c4
                        for c5 in range(r4 + 1):
                            r5 = r4 - c5
                            for c6 in range(r5 + 1):
                                c7 = r5 - c6
                                tested += 1
                                dp = _gap2(c0 + c2, c1 + c3, c4 + c6, c5 + c7, n)
                                bias = _gap2(c0 + c1, c2 + c3, c4 + c5, c6 + c7, n)
                                m00, m01, m10, m11 = c0 + c4, c1 + c5, c2 + c6, c3 + c7
                                cal = _gap2(m00, m01, m10, m11, n)
                                eo = 0.0
                                k = c0 + c1 + c4 + c5
                                if k:
                                    eo = _gap2(c0, c1, c4, c5, k)
                                k = c2 + c3 + c6 + c7
                                if k:
                                    eo = max(eo, _gap2(c2, c3, c6, c7, k))
                                pp = 0.0
                                k = c0 + c2 + c4 + c6
                                if k:
                                    pp = _gap2(c0, c2, c4, c6, k)
                                k = c1 + c3 + c5 + c7
                                if k:
                                    pp = max(pp, _gap2(c1, c3, c5, c7, k))
                                pre = cal >= tau and bias >= tau
                                if pre:
                                    passing += 1
                                if (dp <= eps) + (eo <= eps) + (pp <= eps) < 2:
                                    continue
                                row = (c0, c1, c2, c3, c4, c5, c6, c7)
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
