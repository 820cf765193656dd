"""Permutations of integer points, stabilizer chains and subgroup searches.

Permutations are stored as image tuples and compose left to right, so
``(p * q)[x] == q[p[x]]``.  Every group carries a deterministic
Schreier-Sims chain built on demand; derived groups (stabilizers,
intersections, restrictions) cache their chains so repeated queries in a
solver loop stay cheap.
"""
from __future__ import annotations

import logging
import random
from operator import itemgetter
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

log = logging.getLogger(__name__)


class GroupError(ValueError):
    pass


class RestrictError(GroupError):
    """The target set is not closed under the group."""


class LiftError(GroupError):
    """No group element restricts to the requested permutation."""


_new = tuple.__new__
_IDENT: Dict[int, tuple] = {}


class Perm(tuple):
    """A permutation of ``range(n)`` given by its image tuple."""

    __slots__ = ()

    @classmethod
    def identity(cls, n: int) -> "Perm":
        return cls(range(n))

    @classmethod
    def from_cycles(cls, cycles: Iterable[Sequence[int]], n: int) -> "Perm":
        img = list(range(n))
        seen = set()
        for cyc in cycles:
            for x in cyc:
                if not 0 <= x < n:
                    raise GroupError(f"point {x} outside domain of size {n}")
                if x in seen:
                    raise GroupError(f"point {x} repeated in cycle notation")
                seen.add(x)
            for a, b in zip(cyc, list(cyc[1:]) + [cyc[0]]):
                img[a] = b
        return cls(img)

    @classmethod
    def from_map(cls, mapping: Dict[int, int], n: int) -> "Perm":
        img = list(range(n))
        for a, b in mapping.items():
            img[a] = b
        if len(set(img)) != n:
            raise GroupError("mapping is not a bijection")
        return cls(img)

    def __mul__(self, other: "Perm") -> "Perm":  # type: ignore[override]
        if len(self) > 1:
            return _new(Perm, itemgetter(*self)(other))
        return Perm(map(other.__getitem__, self))

    def __invert__(self) -> "Perm":
        inv = [0] * len(self)
        for i, x in enumerate(self):
            inv[x] = i
        return Perm(inv)

    def __pow__(self, e: int) -> "Perm":
        base = self if e >= 0 else ~self
        out = Perm.identity(len(self))
        for _ in range(abs(e)):
            out = out * base
        return out

    @property
    def degree(self) -> int:
        return len(self)

    def is_identity(self) -> bool:
        n = len(self)
        ident = _IDENT.get(n)
        if ident is None:
            ident = _IDENT[n] = tuple(range(n))
        return tuple.__eq__(self, ident)

    def support(self) -> List[int]:
        return [i for i, x in enumerate(self) if i != x]

    def cycles(self) -> List[Tuple[int, ...]]:
        seen = [False] * len(self)
        out = []
        for i in range(len(self)):
            if seen[i] or self[i] == i:
                continue
            cyc = []
            j = i
            while not seen[j]:
                seen[j] = True
                cyc.append(j)
                j = self[j]
            out.append(tuple(cyc))
        return out

    def image(self, points: Iterable[int]) -> frozenset:
        return frozenset(self[x] for x in points)

    def __repr__(self) -> str:
        return f"Perm({format_perm(self)})"


def format_perm(p: Perm, name: Callable[[int], str] = str) -> str:
    """Cycle notation such as ``((0 3)(1 4))``; the identity prints as ``()``."""
    return "(" + "".join("(" + " ".join(name(x) for x in c) + ")" for c in p.cycles()) + ")"


def parse_perm(text: str, n: int, index: Callable[[str], int] = int) -> Perm:
    """Inverse of :func:`format_perm`.  ``index`` maps a point token to an int."""
    s = text.strip()
    if s.startswith("(") and s.endswith(")") and (s[1:2] in ("(", ")") or s == "()"):
        s = s[1:-1]
    cycles = []
    pos = 0
    while pos < len(s):
        if s[pos].isspace():
            pos += 1
            continue
        if s[pos] != "(":
            raise GroupError(f"malformed cycle notation near {s[pos:pos + 10]!r}")
        end = s.find(")", pos)
        if end < 0:
            raise GroupError("unbalanced parenthesis in cycle notation")
        toks = s[pos + 1:end].replace(",", " ").split()
        if toks:
            cycles.append([index(t) for t in toks])
        pos = end + 1
    return Perm.from_cycles(cycles, n)


def _orbit_reps(b: int, gens: Sequence[Perm], ident: Perm) -> Dict[int, Perm]:
    reps = {b: ident}
    queue = [b]
    for x in queue:
        ux = reps[x]
        for s in gens:
            y = s[x]
            if y not in reps:
                reps[y] = ux * s
                queue.append(y)
    return reps


class Chain:
    """Base, strong generators and explicit transversals for each level."""

    def __init__(self, n: int, base: List[int], gens: List[List[Perm]]):
        self.n = n
        self.ident = Perm.identity(n)
        self.base = base
        self.gens = gens
        self.reps: List[Dict[int, Perm]] = [_orbit_reps(b, g, self.ident) for b, g in zip(base, gens)]
        self._invs: List[Optional[Dict[int, Perm]]] = [None] * len(base)

    def inv_reps(self, i: int) -> Dict[int, Perm]:
        d = self._invs[i]
        if d is None:
            d = {y: ~u for y, u in self.reps[i].items()}
            self._invs[i] = d
        return d

    def order(self) -> int:
        out = 1
        for r in self.reps:
            out *= len(r)
        return out

    def strip(self, g: Perm, start: int = 0) -> Tuple[Perm, int]:
        for i in range(start, len(self.base)):
            inv = self.inv_reps(i).get(g[self.base[i]])
            if inv is None:
                return g, i
            g = g * inv
        return g, len(self.base)

    def transversal(self, i: int) -> List[Tuple[int, Perm]]:
        """Level ``i`` coset representatives in ascending image order."""
        reps = self.reps[i]
        return [(y, reps[y]) for y in sorted(reps)]

    def strong_gens(self) -> List[Perm]:
        return list(self.gens[0]) if self.gens else []

    def elements(self) -> Iterator[Perm]:
        def rec(i: int, acc: Perm) -> Iterator[Perm]:
            if i < 0:
                yield acc
                return
            for _, u in self.transversal(i):
                yield from rec(i - 1, acc * u)

        yield from rec(len(self.base) - 1, self.ident)

    def _rebuild(self, lo: int, hi: int) -> None:
        for l in range(lo, hi + 1):
            self.reps[l] = _orbit_reps(self.base[l], self.gens[l], self.ident)
            self._invs[l] = None


def _first_moved(h: Perm, rank: Sequence[int]) -> int:
    best = -1
    for x, y in enumerate(h):
        if x != y and (best < 0 or rank[x] < rank[best]):
            best = x
    return best


def schreier_sims(gens: Iterable[Perm], n: int, prefix: Sequence[int] = (),
                  prefer: Sequence[int] = (), known_order: Optional[int] = None) -> Chain:
    """Deterministic incremental Schreier-Sims.

    The base starts with ``prefix`` verbatim (levels may be trivial there);
    further base points are chosen by ``prefer`` and then ascending index.
    When ``known_order`` is supplied, construction stops as soon as the
    product of the basic orbit lengths reaches it; that is enough to certify
    the chain.
    """
    ident = Perm.identity(n)
    uniq: List[Perm] = []
    seen = set()
    for g in gens:
        if len(g) != n:
            raise GroupError(f"generator degree {len(g)} != {n}")
        if g not in seen and not g.is_identity():
            seen.add(g)
            uniq.append(g)
    rank = [n + x for x in range(n)]
    for i, b in enumerate(list(prefix) + list(prefer)):
        if rank[b] >= n:
            rank[b] = i
    base: List[int] = list(dict.fromkeys(prefix))
    for g in uniq:
        if all(g[b] == b for b in base):
            base.append(_first_moved(g, rank))
    levels = [[g for g in uniq if all(g[b] == b for b in base[:i])] for i in range(len(base))]
    ch = Chain(n, base, levels)
    if known_order is not None and ch.order() == known_order:
        return ch
    if known_order is not None and uniq:
        _random_fill(ch, uniq, known_order, rank)
        if ch.order() == known_order:
            return ch
    i = len(base) - 1
    while i >= 0:
        jump = None
        reps = ch.reps[i]
        for x in list(reps):
            ux = reps[x]
            for s in ch.gens[i]:
                y = s[x]
                uxs = ux * s
                if uxs == reps[y]:
                    continue
                h, j = ch.strip(uxs * ch.inv_reps(i)[y], i + 1)
                if j < len(ch.base) or not h.is_identity():
                    if j == len(ch.base):
                        ch.base.append(_first_moved(h, rank))
                        ch.gens.append([])
                        ch.reps.append({})
                        ch._invs.append(None)
                    for l in range(i + 1, j + 1):
                        ch.gens[l].append(h)
                    ch._rebuild(i + 1, j)
                    jump = j
                    break
            if jump is not None:
                break
        if jump is None:
            i -= 1
            continue
        if known_order is not None and ch.order() == known_order:
            return ch
        i = jump
    if known_order is not None and ch.order() != known_order:
        raise GroupError(f"chain order {ch.order()} disagrees with known order {known_order}")
    return ch


def _random_fill(ch: Chain, gens: List[Perm], order: int, rank: Sequence[int], tries: int = 400) -> None:
    """Sift product-replacement elements into ``ch`` until it reaches ``order``.

    With the order known in advance this certifies the chain; if the
    budget runs out the caller finishes with the deterministic pass.
    """
    rng = random.Random(len(gens) * 7919 + ch.n)
    pool = list(gens) * max(1, -(-10 // len(gens)))
    acc = ch.ident
    for _ in range(50):
        i, j = rng.sample(range(len(pool)), 2) if len(pool) > 1 else (0, 0)
        pool[i] = pool[i] * pool[j]
        acc = acc * pool[i]
    misses = 0
    while ch.order() < order and misses < tries:
        i, j = rng.sample(range(len(pool)), 2) if len(pool) > 1 else (0, 0)
        pool[i] = pool[i] * pool[j]
        acc = acc * pool[i]
        h, j = ch.strip(acc)
        if j == len(ch.base) and h.is_identity():
            misses += 1
            continue
        if j == len(ch.base):
            ch.base.append(_first_moved(h, rank))
            ch.gens.append([])
            ch.reps.append({})
            ch._invs.append(None)
        for l in range(j + 1):
            ch.gens[l].append(h)
        ch._rebuild(0, j)


class PermGroup:
    """A permutation group on ``range(n)`` given by generators."""

    def __init__(self, gens: Iterable[Perm], n: int, *, chain: Optional[Chain] = None):
        self.n = n
        self.gens: Tuple[Perm, ...] = tuple(g for g in dict.fromkeys(Perm(x) for x in gens)
                                            if not g.is_identity())
        for g in self.gens:
            if len(g) != n:
                raise GroupError(f"generator degree {len(g)} != {n}")
        self._chain = chain
        self._order: Optional[int] = chain.order() if chain is not None else None
        self._chains: Dict[Tuple[int, ...], Chain] = {}
        self._stab: Dict[frozenset, "PermGroup"] = {}
        self._orbits: Optional[List[frozenset]] = None
        self._orbit_of: Optional[Dict[int, frozenset]] = None
        self._moved: Optional[frozenset] = None
        self._blocks: Dict[Tuple[frozenset, frozenset], List[frozenset]] = {}
        self.meta: Dict[object, object] = {}

    # --- basics ---------------------------------------------------------

    @classmethod
    def trivial(cls, n: int) -> "PermGroup":
        return cls((), n)

    @property
    def identity(self) -> Perm:
        return Perm.identity(self.n)

    def chain(self, prefix: Sequence[int] = (), prefer: Sequence[int] = ()) -> Chain:
        """A chain whose base begins with ``prefix``; cached per argument pair."""
        if not prefix and not prefer:
            if self._chain is None:
                self._chain = schreier_sims(self.gens, self.n, known_order=self._order)
                self._order = self._chain.order()
            return self._chain
        key = (tuple(prefix), tuple(prefer))
        ch = self._chains.get(key)
        if ch is None:
            src = self._chain.strong_gens() if self._chain is not None else self.gens
            ch = schreier_sims(src, self.n, key[0], key[1], self._order)
            if self._order is None:
                self._order = ch.order()
            self._chains[key] = ch
        return ch

    def order(self) -> int:
        if self._order is None:
            self.chain()
        assert self._order is not None
        return self._order

    def is_trivial(self) -> bool:
        return not self.gens

    def contains(self, p: Perm) -> bool:
        if len(p) != self.n:
            return False
        h, j = self.chain().strip(Perm(p))
        return h.is_identity()

    __contains__ = contains

    def sift(self, p: Perm) -> Tuple[Perm, int]:
        """Residue and the level at which sifting stopped."""
        return self.chain().strip(Perm(p))

    def elements(self) -> Iterator[Perm]:
        return self.chain().elements()

    def strong_gens(self) -> List[Perm]:
        return self.chain().strong_gens()

    def issubgroup(self, other: "PermGroup") -> bool:
        return all(other.contains(g) for g in self.gens)

    def equals(self, other: "PermGroup") -> bool:
        if self is other:
            return True
        if self.n != other.n:
            return False
        return self.issubgroup(other) and other.issubgroup(self)

    def moved_points(self) -> frozenset:
        if self._moved is None:
            self._moved = frozenset(x for g in self.gens for x in g.support())
        return self._moved

    # --- orbits ---------------------------------------------------------

    def orbit(self, x: int) -> frozenset:
        if self._orbit_of is None:
            self.orbits()
        assert self._orbit_of is not None
        return self._orbit_of[x]

    def orbits(self) -> List[frozenset]:
        """All orbits, fixed points included, sorted by least element."""
        if self._orbits is None:
            owner: Dict[int, frozenset] = {}
            out = []
            for x in range(self.n):
                if x in owner:
                    continue
                orb = [x]
                seen = {x}
                for y in orb:
                    for g in self.gens:
                        z = g[y]
                        if z not in seen:
                            seen.add(z)
                            orb.append(z)
                o = frozenset(orb)
                for y in orb:
                    owner[y] = o
                out.append(o)
            self._orbits = out
            self._orbit_of = owner
        return self._orbits

    def orbit_transversal(self, x: int) -> Dict[int, Perm]:
        """Map each point ``y`` of ``x``'s orbit to an element sending ``x`` to ``y``."""
        return _orbit_reps(x, self.gens, self.identity)

    def closure(self, points: Iterable[int]) -> frozenset:
        out = set()
        for x in points:
            if x not in out:
                out |= self.orbit(x)
        return frozenset(out)

    # --- derived groups -------------------------------------------------

    def restrict(self, points: Iterable[int]) -> "PermGroup":
        """Action on a closed set, extended by the identity elsewhere."""
        pts = frozenset(points)
        out = []
        for g in self.gens:
            if g.image(pts) != pts:
                raise RestrictError("set is not closed under the group")
            out.append(Perm(g[x] if x in pts else x for x in range(self.n)))
        return PermGroup(out, self.n)

    def _stab_point(self, a: int) -> "PermGroup":
        key = frozenset((a,))
        hit = self._stab.get(key)
        if hit is not None:
            return hit
        if a not in self.moved_points():
            res = self
        else:
            res = self._tail((a,))
        self._stab[key] = res
        return res

    def _tail(self, prefix: Sequence[int]) -> "PermGroup":
        ch = self.chain(prefix)
        L = len(prefix)
        sub = Chain(self.n, ch.base[L:], ch.gens[L:])
        return PermGroup(sub.strong_gens(), self.n, chain=sub)

    def pointwise_stabilizer(self, points: Iterable[int]) -> "PermGroup":
        key = frozenset(points) & self.moved_points()
        if not key:
            return self
        hit = self._stab.get(key)
        if hit is not None:
            return hit
        res = None
        for a in sorted(key):
            sub = key - {a}
            par = self if not sub else self._stab.get(sub)
            if par is not None:
                res = par._stab_point(a)
                break
        if res is None:
            res = self._tail(sorted(key))
        self._stab[key] = res
        return res

    def set_stabilizer(self, points: Iterable[int]) -> "PermGroup":
        pts = frozenset(points)
        cls = [1 if x in pts else 0 for x in range(self.n)]
        return _class_stabilizer(self, cls)

    def multiset_stabilizer(self, sets: Sequence[Iterable[int]]) -> "PermGroup":
        """Elements mapping each of the given sets to itself."""
        cls = [0] * self.n
        for i, s in enumerate(sets):
            for x in s:
                cls[x] |= 1 << i
        return _class_stabilizer(self, cls)

    def intersect(self, other: "PermGroup") -> "PermGroup":
        return _intersection(self, other)

    def lift(self, h: Perm, points: Iterable[int]) -> Perm:
        """An element agreeing with ``h`` on ``points`` (which must be closed)."""
        V = sorted(set(points))
        ch = self.chain(V)
        g = Perm(h)
        acc = self.identity
        for i in range(len(V)):
            b = ch.base[i]
            u = ch.reps[i].get(g[b])
            if u is None:
                raise LiftError("permutation is not the restriction of a group element")
            g = g * ch.inv_reps(i)[g[b]]
            acc = u * acc
        if any(g[x] != x for x in V):
            raise LiftError("permutation is not the restriction of a group element")
        return acc

    def block_system(self, orbit: Iterable[int], seed: Iterable[int]) -> List[frozenset]:
        """Minimal block system on ``orbit`` with ``seed`` inside one block."""
        W = frozenset(orbit)
        S = frozenset(seed)
        key = (W, S)
        hit = self._blocks.get(key)
        if hit is None:
            hit = minimal_blocks(self.gens, W, S)
            self._blocks[key] = hit
        return hit

    def __repr__(self) -> str:
        return f"PermGroup(<{', '.join(format_perm(g) for g in self.gens)}>, n={self.n})"


def minimal_blocks(gens: Sequence[Perm], orbit: Iterable[int], seed: Iterable[int]) -> List[frozenset]:
    """Union-find merging until the partition is respected by every generator."""
    pts = sorted(orbit)
    parent = {x: x for x in pts}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    seed = sorted(seed)
    queue = []
    for s in seed[1:]:
        a, b = find(seed[0]), find(s)
        if a != b:
            parent[max(a, b)] = min(a, b)
            queue.append((seed[0], s))
    for x, y in queue:
        for g in gens:
            a, b = find(g[x]), find(g[y])
            if a != b:
                parent[max(a, b)] = min(a, b)
                queue.append((g[x], g[y]))
    blocks: Dict[int, List[int]] = {}
    for x in pts:
        blocks.setdefault(find(x), []).append(x)
    return sorted((frozenset(b) for b in blocks.values()), key=min)


# --- backtrack searches ---------------------------------------------------

_FAIL = object()


def _subgroup_search(G: PermGroup, prefix: Sequence[int], prefer: Sequence[int],
                     step: Callable[[int, int, object], object],
                     final: Callable[[Perm], bool],
                     start_state: object = None) -> PermGroup:
    """Subgroup of elements whose base images pass ``step`` and which pass ``final``.

    ``step(level, image, state)`` returns the child state or ``_FAIL``.  The
    search finds one element per surviving coset of the next stabilizer, going
    bottom-up, so the generators collected form a strong generating set on the
    chain's base.
    """
    ch = G.chain(prefix, prefer)
    base = ch.base
    m = len(base)
    found: List[List[Perm]] = [[] for _ in range(m)]
    ident = G.identity

    def dfs(j: int, t: Perm, state: object) -> Optional[Perm]:
        if j == m:
            return t if final(t) else None
        for y, u in ch.transversal(j):
            z = t[y]
            st = step(j, z, state)
            if st is _FAIL:
                continue
            r = dfs(j + 1, u * t, st)
            if r is not None:
                return r
        return None

    states = [start_state]
    # states along the identity path: level i maps b_i to itself
    for i in range(m):
        st = step(i, base[i], states[-1])
        if st is _FAIL:
            raise GroupError("identity fails the search property")
        states.append(st)

    for i in reversed(range(m)):
        kgens = [g for lvl in range(i, m) for g in found[lvl]]
        korb = set(_orbit_reps(base[i], kgens, ident))
        dead = set()
        for y, u in ch.transversal(i):
            if y in korb or y in dead:
                continue
            st = step(i, y, states[i])
            g = None if st is _FAIL else dfs(i + 1, u, st)
            if g is None:
                dead |= set(_orbit_reps(y, kgens, ident))
            else:
                found[i].append(g)
                kgens.append(g)
                korb = set(_orbit_reps(base[i], kgens, ident))
    fb, fg = [], []
    for i in range(m):
        gl = [g for lvl in range(i, m) for g in found[lvl]]
        if gl and len(_orbit_reps(base[i], gl, ident)) > 1:
            fb.append(base[i])
            fg.append(gl)
    sub = Chain(G.n, fb, fg)
    return PermGroup(sub.strong_gens(), G.n, chain=sub)


def _class_stabilizer(G: PermGroup, cls: Sequence[int]) -> PermGroup:
    if G.is_trivial():
        return G
    moved = G.moved_points()
    if all(cls[g[x]] == cls[x] for g in G.gens for x in moved):
        return G
    sizes: Dict[int, int] = {}
    for x in moved:
        sizes[cls[x]] = sizes.get(cls[x], 0) + 1
    order = sorted(moved, key=lambda x: (sizes[cls[x]], x))
    ch = G.chain((), order)

    def step(j: int, z: int, state: object) -> object:
        return None if cls[z] == cls[ch.base[j]] else _FAIL

    def final(g: Perm) -> bool:
        return all(cls[g[x]] == cls[x] for x in moved)

    return _subgroup_search(G, (), order, step, final)


def _intersection(G1: PermGroup, G2: PermGroup) -> PermGroup:
    if G1.n != G2.n:
        raise GroupError("degree mismatch")
    if G1.is_trivial() or G2.is_trivial():
        return PermGroup.trivial(G1.n)
    if G1.order() > G2.order():
        G1, G2 = G2, G1
    ch1 = G1.chain()
    base1 = list(ch1.base)
    ch2 = G2.chain(base1)

    def step(j: int, z: int, r: object) -> object:
        assert isinstance(r, Perm)
        y = (~r)[z] if not r.is_identity() else z
        u = ch2.reps[j].get(y)
        if u is None:
            return _FAIL
        return u * r

    def final(g: Perm) -> bool:
        return G2.contains(g)

    return _subgroup_search(G1, (), (), step, final, G1.identity)


def stable_extensions(c1: Iterable[int], G1: PermGroup, c2: Iterable[int], G2: PermGroup) -> PermGroup:
    """Elements agreeing with some element of each group on that group's closure.

    Points outside both closures are fixed.
    """
    n = G1.n
    K1 = G1.closure(c1)
    K2 = G2.closure(c2)
    R1 = G1.restrict(K1)
    R2 = G2.restrict(K2)
    cap = K1 & K2
    S1 = R1.set_stabilizer(cap)
    S2 = R2.set_stabilizer(cap)
    inter = S1.restrict(cap).intersect(S2.restrict(cap))
    rest2 = K2 - cap
    gens: List[Perm] = []
    gens += R1.pointwise_stabilizer(cap).gens
    gens += R2.pointwise_stabilizer(cap).gens
    for h in inter.strong_gens():
        l1 = S1.lift(h, cap)
        l2 = S2.lift(h, cap)
        l2r = Perm(l2[x] if x in rest2 else x for x in range(n))
        gens.append(l1 * l2r)
    return PermGroup(gens, n)


def symmetric_group(points: Sequence[int], n: int) -> PermGroup:
    pts = list(points)
    if len(pts) < 2:
        return PermGroup.trivial(n)
    gens = [Perm.from_cycles([pts[:2]], n)]
    if len(pts) > 2:
        gens.append(Perm.from_cycles([pts], n))
    return PermGroup(gens, n)
