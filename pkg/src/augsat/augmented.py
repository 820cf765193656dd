"""Literals, augmented clauses (base clause plus group) and resolution.

Variable ``v`` gives the points ``2v`` (positive) and ``2v + 1`` (negative),
so negation is ``p ^ 1``.  Groups act on all ``2 * nvars`` points and must
respect negation.
"""
from __future__ import annotations

import logging
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from .perm_core import GroupError, Perm, PermGroup, format_perm, stable_extensions

log = logging.getLogger(__name__)


class ClauseError(ValueError):
    pass


class ResolutionError(ValueError):
    pass


def lit(var: int, positive: bool = True) -> int:
    return 2 * var + (0 if positive else 1)


def neg(p: int) -> int:
    return p ^ 1


def var_of(p: int) -> int:
    return p >> 1


def is_positive(p: int) -> bool:
    return not p & 1


def from_dimacs(x: int) -> int:
    return lit(abs(x) - 1, x > 0)


def to_dimacs(p: int) -> int:
    v = var_of(p) + 1
    return v if is_positive(p) else -v


def negate_set(points: Iterable[int]) -> frozenset:
    return frozenset(p ^ 1 for p in points)


def mask_of(points: Iterable[int]) -> int:
    m = 0
    for p in points:
        m |= 1 << p
    return m


def points_of(mask: int) -> List[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def is_signed(p: Perm) -> bool:
    """Membership in the group of permutations that commute with negation."""
    return all(p[x ^ 1] == p[x] ^ 1 for x in range(0, len(p), 2))


def complete_signed(p: Perm) -> Perm:
    """Extend a permutation given on positive literals to the negatives.

    A permutation that already respects negation is returned unchanged; if it
    moves a negative literal inconsistently it is rejected.
    """
    if is_signed(p):
        return p
    img = list(p)
    for x in range(0, len(p), 2):
        if p[x ^ 1] != x ^ 1 and p[x ^ 1] != p[x] ^ 1:
            raise GroupError("generator does not respect negation")
        img[x ^ 1] = p[x] ^ 1
    q = Perm(img)
    if len(set(q)) != len(q) or not is_signed(q):
        raise GroupError("generator does not respect negation")
    return q


def signed_group(gens: Iterable[Perm], nvars: int) -> PermGroup:
    return PermGroup([complete_signed(Perm(g)) for g in gens], 2 * nvars)


class AugmentedClause:
    """A clause together with a group; it stands for every image of the base."""

    def __init__(self, lits: Iterable[int], group: PermGroup, *, learned: bool = False,
                 label: str = ""):
        base = tuple(sorted(lits))
        if len(set(base)) != len(base):
            raise ClauseError("duplicate literal in clause")
        bs = frozenset(base)
        if any(p ^ 1 in bs for p in base):
            raise ClauseError("clause contains a complementary pair")
        n = group.n
        if n % 2:
            raise ClauseError("group degree must be even")
        if any(not 0 <= p < n for p in base):
            raise ClauseError("literal outside the group's domain")
        for g in group.gens:
            if not is_signed(g):
                raise ClauseError("group element does not respect negation")
        self.lits = base
        self.base = bs
        self.mask = mask_of(base)
        self.group = group
        self.nvars = n // 2
        self.learned = learned
        self.label = label
        self._stab: Optional[PermGroup] = None
        self._closure: Optional[frozenset] = None
        self.cache: Dict[object, object] = {}

    def __len__(self) -> int:
        return len(self.lits)

    def __repr__(self) -> str:
        return f"AugmentedClause({list(self.lits)}, {self.group!r})"

    def stabilizer(self) -> PermGroup:
        """Set stabilizer of the base clause in the group."""
        if self._stab is None:
            self._stab = self.group.set_stabilizer(self.base)
        return self._stab

    def closure(self) -> frozenset:
        if self._closure is None:
            self._closure = self.group.closure(self.base)
        return self._closure

    def instance(self, g: Perm) -> frozenset:
        return frozenset(g[p] for p in self.lits)

    def num_instances(self) -> int:
        return self.group.order() // self.stabilizer().order()

    def instances(self) -> Iterator[frozenset]:
        """Enumerate the distinct images of the base clause (orbit search)."""
        seen = {self.base}
        queue = [self.base]
        yield self.base
        for c in queue:
            for g in self.group.gens:
                d = frozenset(g[p] for p in c)
                if d not in seen:
                    seen.add(d)
                    queue.append(d)
                    yield d

    def with_base(self, lits: Iterable[int]) -> "AugmentedClause":
        """Same group, new base; used when a search picks another instance."""
        c = AugmentedClause(lits, self.group, learned=self.learned, label=self.label)
        return c

    def text(self, name=None) -> str:
        name = name or (lambda p: ("-" if p & 1 else "") + f"x{(p >> 1) + 1}")
        body = " ".join(name(p) for p in self.lits) or "<empty>"
        if self.group.is_trivial():
            return body
        pos = lambda x: name(x)
        return body + " GROUP <" + " ".join(format_perm(g, pos) for g in self.group.gens) + ">"


def make_augmented(lits: Iterable[int], generators: Iterable[Perm], nvars: int, **kw) -> AugmentedClause:
    return AugmentedClause(lits, signed_group(generators, nvars), **kw)


def ground_clause(lits: Iterable[int], nvars: int, **kw) -> AugmentedClause:
    return AugmentedClause(lits, PermGroup.trivial(2 * nvars), **kw)


class Assignment:
    """A partial assignment kept as an ordered trail of true literals."""

    def __init__(self, nvars: int, trail: Iterable[int] = ()):
        self.nvars = nvars
        self.trail: List[int] = []
        self.pos = [-1] * nvars
        self.S = 0
        self.U = (1 << (2 * nvars)) - 1
        for p in trail:
            self.push(p)

    def push(self, p: int) -> None:
        v = p >> 1
        if self.pos[v] >= 0:
            raise ValueError(f"variable {v} already assigned")
        self.pos[v] = len(self.trail)
        self.trail.append(p)
        self.S |= 1 << p
        self.U &= ~(3 << (2 * v))

    def pop(self) -> int:
        p = self.trail.pop()
        v = p >> 1
        self.pos[v] = -1
        self.S &= ~(1 << p)
        self.U |= 3 << (2 * v)
        return p

    def truncate(self, length: int) -> List[int]:
        out = []
        while len(self.trail) > length:
            out.append(self.pop())
        out.reverse()
        return out

    def value(self, p: int) -> Optional[bool]:
        if self.pos[p >> 1] < 0:
            return None
        return bool(self.S >> p & 1)

    def position(self, p: int) -> int:
        """Trail index of the variable of ``p``, or -1."""
        return self.pos[p >> 1]

    @property
    def live(self) -> int:
        """Mask of literals that are not false."""
        return self.S | self.U

    def copy(self) -> "Assignment":
        return Assignment(self.nvars, self.trail)

    def __len__(self) -> int:
        return len(self.trail)


def poss(lits: Iterable[int], P: Assignment) -> int:
    """Number of literals of the clause not falsified by ``P``, minus one."""
    live = P.live
    return sum(1 for p in lits if live >> p & 1) - 1


def poss_min(clause: AugmentedClause, P: Assignment) -> int:
    """Least value of :func:`poss` over the clause's instances."""
    from .transporter import transport

    k = len(clause) - 1
    best = len(clause) - 1
    while k >= 0 and transport(clause, 0, P.live, k) is not None:
        best = k - 1
        k -= 1
    return best


def resolve_ground(c1: Iterable[int], c2: Iterable[int], pivot: Optional[int] = None) -> frozenset:
    """Resolvent of two ground clauses; ``pivot`` is the literal taken from ``c1``."""
    a, b = frozenset(c1), frozenset(c2)
    if pivot is None:
        cands = [p for p in a if p ^ 1 in b]
        if not cands:
            raise ResolutionError("clauses do not clash")
        pivot = min(cands)
    if pivot not in a or pivot ^ 1 not in b:
        raise ResolutionError("pivot does not clash")
    out = (a - {pivot}) | (b - {pivot ^ 1})
    if any(p ^ 1 in out for p in out):
        raise ResolutionError("resolvent is tautological")
    return out


def resolvent_group(c1: AugmentedClause, c2: AugmentedClause, fast_path: bool = True) -> PermGroup:
    """Group of a resolvent: stable extensions restricted to signed permutations.

    Working with negation-closed closures keeps every generator signed and does
    not lose any signed stable extension.
    """
    G1, G2 = c1.group, c2.group
    if fast_path and G1.equals(G2):
        return G1
    b1 = c1.base | negate_set(c1.base)
    b2 = c2.base | negate_set(c2.base)
    Z = stable_extensions(b1, G1, b2, G2)
    if not all(is_signed(g) for g in Z.gens):
        raise ResolutionError("stable extension left the signed group")
    return Z


def resolve_augmented(c1: AugmentedClause, c2: AugmentedClause, pivot: Optional[int] = None,
                      fast_path: bool = True, g1: Optional[Perm] = None,
                      g2: Optional[Perm] = None) -> AugmentedClause:
    """Resolve two augmented clauses, optionally on chosen instances ``g1``/``g2``."""
    a = c1.instance(g1) if g1 is not None else c1.base
    b = c2.instance(g2) if g2 is not None else c2.base
    base = resolve_ground(a, b, pivot)
    Z = resolvent_group(c1, c2, fast_path)
    return AugmentedClause(base, Z, learned=True)
