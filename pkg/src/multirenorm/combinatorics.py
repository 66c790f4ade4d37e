"""Combinatorial data of restrictive-interval cycles and their algebra.

Labels of a cycle are canonically named by orbit index: label n is the n-th
image of the marked interval, so it sits on fiber n mod N.  A class of
equivalent data is then fully described by the position of every label inside
its fiber together with the critical label of each fiber.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import lru_cache

from .errors import (CombinatorialExplosion, InvalidCombinatorics, NMismatch,
                     OrderAmbiguity, ParseError)

FACTOR_CAP = 64


@dataclass(frozen=True)
class CombinatorialData:
    """Abstract labelled data; labels are arbitrary hashable names."""

    n_type: int
    m: int
    fiber_orders: tuple  # per fiber, labels from left to right
    pi: dict
    crit: tuple  # critical label of each fiber
    marked: object

    def __hash__(self):
        return hash((self.n_type, self.m, self.fiber_orders, self.crit, self.marked,
                     tuple(sorted(self.pi.items(), key=repr))))

    def fiber_of(self):
        return {a: j for j, order in enumerate(self.fiber_orders) for a in order}

    def violations(self):
        out = []
        N, m = self.n_type, self.m
        if m < 2:
            out.append("m must be at least 2")
        if len(self.fiber_orders) != N or any(len(o) != m for o in self.fiber_orders):
            return out + ["each fiber must carry m labels"]
        fib = self.fiber_of()
        if len(fib) != N * m:
            return out + ["labels must be distinct"]
        if set(self.pi) != set(fib) or set(self.pi.values()) != set(fib):
            return out + ["pi must be a permutation of the labels"]
        for a, b in self.pi.items():
            if fib[b] != (fib[a] + 1) % N:
                out.append(f"pi({a!r}) is not on the next fiber")
                break
        if len(self.crit) != N or any(fib.get(c) != j for j, c in enumerate(self.crit)):
            return out + ["exactly one critical label per fiber"]
        if self.marked != self.crit[0]:
            out.append("marked label must be critical on fiber 0")
        pos = {a: i for order in self.fiber_orders for i, a in enumerate(order)}
        for j, order in enumerate(self.fiber_orders):
            c = self.crit[j]
            if pos[self.pi[c]] != m - 1:
                out.append(f"critical label of fiber {j} must map rightmost")
            left = [a for a in order if pos[a] < pos[c]]
            right = [a for a in order if pos[a] > pos[c]]
            li = [pos[self.pi[a]] for a in left]
            ri = [pos[self.pi[a]] for a in right]
            if li != sorted(li) or ri != sorted(ri, reverse=True):
                out.append(f"monotonicity fails on fiber {j}")
        # reachability from critical labels, and the single-cycle requirement
        seen, a = [], self.marked
        for _ in range(N * m):
            seen.append(a)
            a = self.pi[a]
        if len(set(seen)) != N * m or a != self.marked:
            out.append("pi must be a single cycle through all labels")
        return out


@dataclass(frozen=True)
class Combinatorics:
    """Canonical representative: positions indexed by orbit index."""

    n_type: int
    m: int
    pos: tuple
    crit: tuple  # orbit index of the critical label, per fiber

    @property
    def k(self):
        return self.n_type * self.m

    def fiber_labels(self, j):
        return sorted(range(j, self.k, self.n_type), key=lambda n: self.pos[n])

    def visits(self):
        """Orbit indices of critical labels in visiting order."""
        return sorted(self.crit)

    @property
    def canonical(self) -> str:
        N, m, k = self.n_type, self.m, self.k
        gpos = [(n % N) * m + self.pos[n] for n in range(k)]
        table = [0] * k
        for n in range(k):
            table[gpos[n]] = gpos[(n + 1) % k]
        ord_s = "|".join(",".join(str(n) for n in self.fiber_labels(j)) for j in range(N))
        return (f"v1;N={N};m={m};ord={ord_s};pi={','.join(map(str, table))};"
                f"crit={','.join(str(gpos[c]) for c in self.crit)};P={gpos[0]}")

    def __str__(self):
        return self.canonical

    def data(self) -> CombinatorialData:
        k, N = self.k, self.n_type
        return CombinatorialData(
            N, self.m, tuple(tuple(self.fiber_labels(j)) for j in range(N)),
            {n: (n + 1) % k for n in range(k)}, tuple(self.crit), 0)

    def itinerary(self) -> str:
        """L/R word of the marked orbit relative to critical labels, ending in C."""
        out = []
        for n in range(1, self.k):
            c = self.crit[n % self.n_type]
            if n == c:
                out.append("C")
            else:
                out.append("L" if self.pos[n] < self.pos[c] else "R")
        return "".join(out) + "C"


def violations(M: Combinatorics):
    N, m, k = M.n_type, M.m, M.k
    out = []
    if m < 2:
        out.append("m must be at least 2")
    if len(M.pos) != k:
        return out + ["wrong number of labels"]
    for j in range(N):
        if sorted(M.pos[j::N]) != list(range(m)):
            return out + [f"positions on fiber {j} are not a permutation"]
    if len(M.crit) != N or M.crit[0] != 0 or any(c % N != j or not 0 <= c < k
                                                   for j, c in enumerate(M.crit)):
        return out + ["critical labels malformed"]
    for j in range(N):
        c = M.crit[j]
        if M.pos[(c + 1) % k] != m - 1:
            out.append(f"critical label of fiber {j} must map rightmost")
        labels = M.fiber_labels(j)
        pc = M.pos[c]
        li = [M.pos[(a + 1) % k] for a in labels if M.pos[a] < pc]
        ri = [M.pos[(a + 1) % k] for a in labels if M.pos[a] > pc]
        if li != sorted(li) or ri != sorted(ri, reverse=True):
            out.append(f"monotonicity fails on fiber {j}")
    return out


def is_valid(M: Combinatorics) -> bool:
    return not violations(M)


def checked(M: Combinatorics) -> Combinatorics:
    v = violations(M)
    if v:
        raise InvalidCombinatorics("; ".join(v))
    return M


def canonical_form(data: CombinatorialData) -> Combinatorics:
    v = data.violations()
    if v:
        raise InvalidCombinatorics("; ".join(v))
    pos = {a: i for order in data.fiber_orders for i, a in enumerate(order)}
    k = data.n_type * data.m
    orbit = [data.marked]
    for _ in range(k - 1):
        orbit.append(data.pi[orbit[-1]])
    index = {a: n for n, a in enumerate(orbit)}
    return checked(Combinatorics(data.n_type, data.m, tuple(pos[a] for a in orbit),
                                 tuple(index[c] for c in data.crit)))


_CANON = re.compile(
    r"^v1;N=(\d+);m=(\d+);ord=([0-9,|]+);pi=([0-9,]+);crit=([0-9,]+);P=(\d+)$")


def parse(text: str) -> Combinatorics:
    mt = _CANON.match(text.strip())
    if not mt:
        raise ParseError("parse: invalid canonical combinatorics")
    try:
        N, m = int(mt.group(1)), int(mt.group(2))
        table = [int(t) for t in mt.group(4).split(",")]
        crit = tuple(int(t) for t in mt.group(5).split(","))
        P = int(mt.group(6))
        if N < 1 or m < 1 or len(table) != N * m:
            raise ValueError
        # global position g = fiber * m + position; labels are positions
        orders = tuple(tuple(range(j * m, (j + 1) * m)) for j in range(N))
        data = CombinatorialData(N, m, orders, dict(enumerate(table)), crit, P)
        M = canonical_form(data)
    except (ValueError, KeyError, IndexError, InvalidCombinatorics) as exc:
        raise ParseError("parse: invalid canonical combinatorics") from exc
    if M.canonical != text.strip():
        raise ParseError("parse: invalid canonical combinatorics")
    return M


def doubling(n_type: int = 1) -> Combinatorics:
    """The m = 2 combinatorics whose critical orbit meets every critical point
    in its first N steps.  Positions are then forced, so it is unique."""
    N = n_type
    if N < 1:
        raise InvalidCombinatorics("N must be positive")
    pos = [0] * (2 * N)
    pos[N] = 1  # fiber 0: label 0 left, label N right
    for j in range(1, N):
        pos[j] = 1  # other fibers: critical label j is the image of j - 1, so rightmost
    return checked(Combinatorics(N, 2, tuple(pos), tuple(range(N))))


M2 = Combinatorics(1, 2, (0, 1), (0,))


def _zleft(M: Combinatorics):
    """Side (True = left) of the periodic endpoint of every orbit interval."""
    k, N = M.k, M.n_type
    crit = set(M.crit)
    z = [True] * (k + 1)
    for i in range(1, k):
        if i in crit:
            z[i + 1] = True
        else:
            left = M.pos[i] < M.pos[M.crit[i % N]]
            z[i + 1] = z[i] if left else not z[i]
    z[0] = z[k]
    return z[:k]


def orientation_flags(M: Combinatorics):
    """sigma_i: how the order of the next critical arrival is seen inside label i."""
    k, N = M.k, M.n_type
    crit = set(M.crit)
    z = _zleft(M)
    sigma = [0] * k
    for c in crit:
        sigma[c] = 1 if z[c] else -1
    # walk backwards from each critical label (label 0 stands for arrival at k)
    for i in range(k - 1, 0, -1):
        if i in crit:
            continue
        nxt = (i + 1) % k
        o = 1 if M.pos[i] < M.pos[M.crit[i % N]] else -1
        sigma[i] = o * sigma[nxt]
    return sigma


def _arrival(M1: Combinatorics):
    """tau(i): visit index of the next critical arrival from label i; wrap flag."""
    vis = M1.visits()
    k1 = M1.k
    tau, wrap = [0] * k1, [False] * k1
    for i in range(1, k1):
        for t, v in enumerate(vis):
            if v >= i:
                tau[i] = t
                break
        else:
            tau[i], wrap[i] = 0, True
    return vis, tau, wrap


def product(M1: Combinatorics, M2_: Combinatorics) -> Combinatorics:
    if M1.n_type != M2_.n_type:
        raise NMismatch(f"N differs: {M1.n_type} vs {M2_.n_type}")
    N, m1, m2 = M1.n_type, M1.m, M2_.m
    k1, k2 = M1.k, M2_.k
    k = k1 * m2
    vis, tau, wrap = _arrival(M1)
    sigma = orientation_flags(M1)
    pos = [0] * k
    for n in range(k):
        i, Q = n % k1, n // k1
        q = ((Q + 1) * N if wrap[i] else Q * N + tau[i]) % k2
        p2 = M2_.pos[q]
        pos[n] = M1.pos[i] * m2 + (p2 if sigma[i] > 0 else m2 - 1 - p2)
    crit = [0] * N
    for t, v in enumerate(vis):
        Q = (M2_.crit[t] - t) // N
        crit[v % N] = Q * k1 + v
    return checked(Combinatorics(N, m1 * m2, tuple(pos), tuple(crit)))


def product_word(word) -> Combinatorics:
    acc = word[0]
    for M in word[1:]:
        acc = product(acc, M)
    return acc


def _split(M: Combinatorics, m1: int):
    """The unique candidate pair (M1, M2) with m(M1) = m1, or None."""
    N, m = M.n_type, M.m
    m2 = m // m1
    k1 = N * m1
    k = M.k
    pos1 = [0] * k1
    base = [0] * k1
    for i in range(k1):
        ps = sorted(M.pos[n] for n in range(i, k, k1))
        if ps[-1] - ps[0] != m2 - 1:
            return None
        base[i] = ps[0]
        if ps[0] % m2:
            return None
        pos1[i] = ps[0] // m2
    crit1 = tuple(M.crit[j] % k1 for j in range(N))
    M1 = Combinatorics(N, m1, tuple(pos1), crit1)
    if violations(M1):
        return None
    sigma = orientation_flags(M1)
    vis = M1.visits()
    k2 = N * m2
    pos2 = [0] * k2
    for t, v in enumerate(vis):
        for Q in range(m2):
            n = Q * k1 + v
            off = M.pos[n] - base[v]
            pos2[Q * N + t] = off if sigma[v] > 0 else m2 - 1 - off
    crit2 = [0] * N
    for t, v in enumerate(vis):
        crit2[t] = (M.crit[v % N] // k1) * N + t
    M2_ = Combinatorics(N, m2, tuple(pos2), tuple(crit2))
    if violations(M2_):
        return None
    if product(M1, M2_) != M:
        return None
    return M1, M2_


@lru_cache(maxsize=None)
def factorizations(M: Combinatorics) -> frozenset:
    """All distinct ordered factorizations into primitive combinatorics."""
    if M.m > FACTOR_CAP:
        raise CombinatorialExplosion(f"m={M.m} exceeds factorization cap {FACTOR_CAP}")
    found = set()
    for m1 in range(2, M.m // 2 + 1):
        if M.m % m1:
            continue
        pair = _split(M, m1)
        if pair is None:
            continue
        for left in factorizations(pair[0]):
            for right in factorizations(pair[1]):
                found.add(left + right)
    if not found:
        found.add((M,))
    return frozenset(found)


def factorize(M: Combinatorics):
    """Ordered primitive factors, first factor outermost."""
    checked(M)
    facs = sorted(factorizations(M), key=lambda t: [f.canonical for f in t])
    return list(facs[0])


def is_primitive(M: Combinatorics) -> bool:
    return len(factorize(M)) == 1


def extract_from_intervals(n_type: int, intervals, tol: float = 1e-10,
                           abs_tol: float = 0.0, visits=None) -> CombinatorialData:
    """Data of the cycle J, F(J), ..., F^{k-1}(J) given as FiberIntervals.

    ``visits`` (already verified critical visit times) overrides the interior
    test, which cannot see a critical point sitting on an interval endpoint."""
    k = len(intervals)
    if k % n_type:
        raise OrderAmbiguity("cycle length is not a multiple of N")
    m = k // n_type
    orders, crit = [], []
    for j in range(n_type):
        labels = sorted(range(j, k, n_type), key=lambda i: (intervals[i].lo + intervals[i].hi))
        for a, b in zip(labels, labels[1:]):
            A, B = intervals[a], intervals[b]
            scale = max(A.hi - A.lo, B.hi - B.lo)
            if A.hi - B.lo > max(tol * scale, abs_tol) or A.lo > B.lo:
                raise OrderAmbiguity(f"orbit intervals {a} and {b} overlap on fiber {j}")
        if visits is not None:
            cs = [i for i in visits if i % n_type == j]
        else:
            cs = [i for i in labels if intervals[i].lo < 0 < intervals[i].hi]
        if len(cs) != 1:
            raise OrderAmbiguity(f"fiber {j} has {len(cs)} critical intervals")
        orders.append(tuple(labels))
        crit.append(cs[0])
    data = CombinatorialData(n_type, m, tuple(orders), {i: (i + 1) % k for i in range(k)},
                             tuple(crit), 0)
    v = data.violations()
    if v:
        raise InvalidCombinatorics("; ".join(v))
    return data


def extract(periodic) -> CombinatorialData:
    """Data of a verified periodic interval (anything with ``n_type`` and
    ``orbit_intervals``)."""
    return extract_from_intervals(periodic.n_type, periodic.orbit_intervals,
                                  abs_tol=getattr(periodic, "overlap_tol", 0.0),
                                  visits=getattr(periodic, "visit_times", None))


def enumerate_combinatorics(n_type: int, m: int):
    """Every valid combinatorics with the given N and m.

    Labels are inserted in orbit order into per-fiber ordered lists.  The
    monotonicity rule bounds the admissible insertion slots of each new label
    by the images of already placed labels on the same side of the same
    critical label, so only consistent branches are explored.
    """
    if m < 2:
        return []
    N, k = n_type, n_type * m
    out = []
    for rest in itertools.product(*[range(j, k, N) for j in range(1, N)]):
        crit = (0,) + tuple(rest)
        top_of = {(c + 1) % k: (c + 1) % N for c in crit}
        capped = [False] * N  # fiber already holds its rightmost label
        order = [[] for _ in range(N)]
        placed = [False] * k

        def same_side_images(a):
            """Placed labels b on a's fiber, same side of the critical label,
            with placed images; yields (b is left of a, image of b)."""
            j = a % N
            lst = order[j]
            c = crit[j]
            ic, ia = lst.index(c), lst.index(a)
            left = ia < ic
            for ib, b in enumerate(lst):
                if b == a or b == c or (ib < ic) != left:
                    continue
                img = (b + 1) % k
                if placed[img]:
                    yield ib < ia, img, left

        def bounds(n):
            a = n - 1
            j = n % N
            lst = order[j]
            lo, hi = 0, len(lst)
            if capped[j]:
                hi = len(lst) - 1
            if a == crit[a % N]:
                return lo, hi
            for below, img, left in same_side_images(a):
                ii = lst.index(img)
                # increasing on the left, decreasing on the right
                if below == left:
                    lo = max(lo, ii + 1)
                else:
                    hi = min(hi, ii)
            return lo, hi

        def consistent(n, img):
            a = n
            if a == crit[a % N]:
                return True
            j = img % N
            lst = order[j]
            ii = lst.index(img)
            for below, other, left in same_side_images(a):
                io = lst.index(other)
                if (io < ii) != (below == left):
                    return False
            return True

        def place(n, slot):
            j = n % N
            order[j].insert(slot, n)
            placed[n] = True

        def unplace(n):
            order[n % N].remove(n)
            placed[n] = False

        def emit():
            pos = [0] * k
            for lst in order:
                for i, a in enumerate(lst):
                    pos[a] = i
            out.append(Combinatorics(N, m, tuple(pos), crit))

        def dfs(n):
            if n == k:
                if consistent(k - 1, 0):
                    emit()
                return
            j = n % N
            if placed[n]:
                # placed out of turn (a critical label): check it as an image
                a = n - 1
                if a != crit[a % N] and not consistent(a, n):
                    return
                if n in top_of and order[j][-1] != n:
                    return
                was = capped[j]
                if n in top_of:
                    capped[j] = True
                dfs(n + 1)
                capped[j] = was
                return
            lo, hi = bounds(n)
            if n in top_of:
                if capped[j]:
                    return
                slots = [len(order[j])] if lo <= len(order[j]) <= hi else []
            else:
                slots = range(lo, hi + 1)
            for s in slots:
                place(n, s)
                was = capped[j]
                if n in top_of:
                    capped[j] = True
                dfs(n + 1)
                capped[j] = was
                unplace(n)

        # critical labels go in first so every side is known from the start
        for c in crit:
            order[c % N].append(c)
            placed[c] = True
        if 0 in top_of:
            capped[0] = True
        dfs(1)
    return out
