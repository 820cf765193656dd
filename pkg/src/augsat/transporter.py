"""Coset-tree searches over a clause's group.

Given an augmented clause ``(c, G)`` and disjoint literal sets ``S``
(satisfied) and ``U`` (unvalued), the searches look for ``g`` in ``G`` with
``c^g`` avoiding ``S`` and meeting ``U`` in at most ``k`` points.  A node of
the tree is a coset ``H t`` where ``H`` fixes the points chosen so far; node
tests are done on preimages ``V^(t^-1)`` so the cached structure of ``H``
(orbits, block systems, stabilizers) can be reused across queries.

Sets of literals are passed around as int bitmasks.
"""
from __future__ import annotations

import logging
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .augmented import AugmentedClause, mask_of, points_of
from .perm_core import Perm, PermGroup

log = logging.getLogger(__name__)

Points = Union[int, Iterable[int]]


@dataclass
class TransportConfig:
    lex_prune: bool = True
    double_coset: bool = True   # pruning that needs the stabilizer of S and U
    blocks: bool = True         # block-system overlap bound instead of plain orbits
    pointwise_K: bool = False
    node_limit: Optional[int] = None
    trace: bool = False         # record one line per tested node


@dataclass
class TransportStats:
    calls: int = 0
    nodes: int = 0
    overlap_pruned: int = 0
    lex_pruned: int = 0
    k_groups: int = 0
    limit_hits: int = 0

    def add(self, other: "TransportStats") -> None:
        for f in self.__dataclass_fields__:
            setattr(self, f, getattr(self, f) + getattr(other, f))


DEFAULT = TransportConfig()


class NodeLimit(Exception):
    pass


@dataclass
class SearchResult:
    """Outcome of one search.

    ``found`` is the witness (a solution, or a falsified instance in the
    unit-consequence modes).  ``skeleton`` lists ``(literal, g)`` with
    ``c^g`` unit on ``literal``; complete it under ``K`` when ``K`` is set.
    """
    found: Optional[Perm] = None
    skeleton: List[Tuple[int, Perm]] = field(default_factory=list)
    watch: int = 0
    K: Optional[PermGroup] = None
    nodes: int = 0
    limit_hit: bool = False
    trace: List[str] = field(default_factory=list)


def _as_mask(x: Points) -> int:
    if isinstance(x, int):
        return x
    return mask_of(x)


class _Profile:
    """What a search needs to know about ``H = G_F`` relative to the clause."""

    __slots__ = ("H", "F", "moved_c", "fixed_c", "blocks", "closure", "orbit_mask", "children")

    def __init__(self, clause: AugmentedClause, F: frozenset, H: PermGroup, use_blocks: bool):
        self.H = H
        self.F = F
        moved = H.moved_points()
        self.moved_c = sorted((x for x in clause.lits if x in moved), key=lambda x: (len(H.orbit(x)), x))
        self.fixed_c = mask_of(x for x in clause.lits if x not in moved)
        blocks = []
        closure = 0
        seen = set()
        self.orbit_mask: Dict[int, int] = {}
        for x in sorted(clause.lits, key=lambda p: min(H.orbit(p))):
            W = H.orbit(x)
            if W in seen:
                continue
            seen.add(W)
            wm = mask_of(W)
            closure |= wm
            cw = W & clause.base
            bl = H.block_system(W, cw) if use_blocks and len(W) > 1 else [W]
            blocks.append((len(cw), tuple(mask_of(b) for b in bl), len(bl[0]), wm))
            for y in cw:
                self.orbit_mask[y] = wm
        self.blocks = blocks
        self.closure = closure
        self.children: Dict[int, Tuple[List[Tuple[int, Perm, Perm]], frozenset]] = {}

    def child(self, alpha: int) -> Tuple[List[Tuple[int, Perm, Perm]], frozenset]:
        hit = self.children.get(alpha)
        if hit is None:
            ch = self.H.chain((alpha,))
            hit = ([(y, u, ~u) for y, u in ch.reps[0].items()], self.F | {alpha})
            self.children[alpha] = hit
        return hit


def _profile(clause: AugmentedClause, F: frozenset, use_blocks: bool) -> _Profile:
    key = ("prof", F, use_blocks)
    p = clause.cache.get(key)
    if p is None:
        p = _Profile(clause, F, clause.group.pointwise_stabilizer(F), use_blocks)
        clause.cache[key] = p
    return p  # type: ignore[return-value]


def _overlap(prof: _Profile, V: int) -> int:
    m = 0
    for cc, blocks, bsize, wm in prof.blocks:
        if not wm & V:
            continue
        lo = bsize - cc
        mn = bsize
        for b in blocks:
            x = (b & V).bit_count()
            if x < mn:
                mn = x
                if mn <= lo:
                    break
        if mn > lo:
            m += mn - lo
    return m


def _overlap_witness(prof: _Profile, V: int, k: int) -> int:
    m = 0
    W = 0
    for cc, blocks, bsize, wm in prof.blocks:
        if not wm & V:
            continue
        lo = bsize - cc
        mn = min((b & V).bit_count() for b in blocks)
        if mn > lo:
            m += mn - lo
            W |= wm & V
    return W if m > k else 0


def overlap_bound(clause: AugmentedClause, V: Points, blocks: bool = True, fixed: Iterable[int] = ()) -> int:
    """Lower bound on ``|c^g & V|`` over ``g`` in the stabilizer of ``fixed``."""
    return _overlap(_profile(clause, frozenset(fixed), blocks), _as_mask(V))


def overlap_witness(clause: AugmentedClause, V: Points, k: int, blocks: bool = True,
                    fixed: Iterable[int] = ()) -> frozenset:
    """Points of ``V`` that certify the bound exceeds ``k``; empty when it does not."""
    W = _overlap_witness(_profile(clause, frozenset(fixed), blocks), _as_mask(V), k)
    return frozenset(points_of(W))


def _preimage(pts: Sequence[int], tinv: Sequence[int]) -> int:
    m = 0
    for p in pts:
        m |= 1 << tinv[p]
    return m


_K_CACHE: Dict[tuple, Tuple[PermGroup, PermGroup]] = {}


def stabilizer_of_sets(G: PermGroup, S: int, U: int, w: Optional[int] = None,
                       pointwise: bool = False) -> PermGroup:
    """``G_{S,U}`` (plus ``{w}``), or the pointwise stabilizer of ``S | U`` when asked."""
    key = (id(G), S, U, w, pointwise)
    hit = _K_CACHE.get(key)
    if hit is not None and hit[0] is G:
        return hit[1]
    if pointwise:
        pts = points_of(S | U)
        if w is not None:
            pts.append(w)
        K = G.pointwise_stabilizer(pts)
    else:
        sets = [points_of(S), points_of(U)]
        if w is not None:
            sets.append([w])
        K = G.multiset_stabilizer(sets)
    if len(_K_CACHE) > 512:
        _K_CACHE.clear()
    _K_CACHE[key] = (G, K)
    return K


class _Search:
    def __init__(self, clause: AugmentedClause, S: int, U: int, k: int, w: Optional[int],
                 mode: str, cfg: TransportConfig, stats: Optional[TransportStats]):
        self.c = clause
        self.S, self.U, self.k, self.w = S, U, k, w
        self.Sl = points_of(S)
        self.SUl = points_of(S | U)
        self.mode = mode
        self.cfg = cfg
        self.stats = stats
        self.nodes = 0
        self.limit = cfg.node_limit
        self.lex = cfg.lex_prune
        self.J = clause.stabilizer() if self.lex else None
        self._K: Optional[PermGroup] = None
        self.K_used = False
        self.skeleton: List[Tuple[int, Perm]] = []
        self.watch = 0
        self.lex_pruned = 0
        self.overlap_pruned = 0
        self.trace: Optional[List[str]] = [] if cfg.trace else None

    # --- lexicographic pruning ------------------------------------------

    def K(self) -> PermGroup:
        if self._K is None:
            if self.stats is not None:
                self.stats.k_groups += 1
            self._K = stabilizer_of_sets(self.c.group, self.S, self.U, self.w, self.cfg.pointwise_K)
        return self._K

    def _jorbit(self, F: Tuple[int, ...], k: int) -> frozenset:
        """Orbit of ``F[k-1]`` under the stabilizer of ``F[:k-1]`` in ``J``."""
        key = ("jorb", F[:k])
        hit = self.c.cache.get(key)
        if hit is None:
            assert self.J is not None
            hit = self.J.pointwise_stabilizer(F[:k - 1]).orbit(F[k - 1])
            self.c.cache[key] = hit
        return hit  # type: ignore[return-value]

    def _moved_orbits(self, F: Tuple[int, ...], prof: _Profile) -> List[Tuple[int, List[int]]]:
        key = ("mp", F)
        hit = self.c.cache.get(key)
        if hit is None:
            assert self.J is not None
            M = prof.H.moved_points()
            out = []
            for i in range(len(F)):
                O = self.J.pointwise_stabilizer(M | frozenset(F[:i])).orbit(F[i])
                if len(O) > 1:
                    out.append((i, sorted(O)))
            hit = out
            self.c.cache[key] = hit
        return hit  # type: ignore[return-value]

    def _pruned(self, F: Tuple[int, ...], prof: _Profile, t: Perm, parent_zs: Optional[List[int]]) -> str:
        d = len(F)
        if d == 0:
            return ""
        zd = t[F[-1]]
        # points moved by the residual group
        for i, O in self._moved_orbits(F, prof):
            zi = t[F[i]]
            for o in O:
                if t[o] < zi:
                    return "moved"
        # orbit tail: the image of the last fixed point is too large
        s = len(self._jorbit(F, d))
        if s > 1 and parent_zs is not None:
            if len(parent_zs) - bisect_left(parent_zs, zd) <= s - 1:
                return "tail"
        if not self.cfg.double_coset:
            return ""
        K = self.K()
        if K.is_trivial():
            return ""
        xd = F[-1]
        zs = [t[x] for x in F]
        for kk in range(1, d + 1):
            if kk < d and xd not in self._jorbit(F, kk):
                continue
            orb = K.pointwise_stabilizer(zs[:kk - 1]).orbit(zd)
            if zs[kk - 1] > min(orb):
                self.K_used = True
                return "coset"
        return ""

    # --- the tree -------------------------------------------------------

    def run(self) -> Optional[Perm]:
        G = self.c.group
        root = _profile(self.c, frozenset(), self.cfg.blocks)
        t = G.identity
        self._count()
        if self._reject((), root, t, ~t, None):
            return None
        return self.expand((), root, t, ~t)

    def _count(self) -> None:
        self.nodes += 1
        if self.limit is not None and self.nodes > self.limit:
            raise NodeLimit()

    def _reject(self, F: Tuple[int, ...], prof: _Profile, t: Perm, tinv: Perm,
                parent_zs: Optional[List[int]]) -> bool:
        """Node tests: overlap bounds first, lexicographic pruning last."""
        why = self._why(F, prof, t, tinv, parent_zs)
        if self.trace is not None:
            self.trace.append(f"{len(F)} {[t[x] for x in F]} {why or 'open'}")
        return bool(why)

    def _why(self, F, prof, t, tinv, parent_zs) -> str:
        w = self.w
        if w is not None and not prof.closure >> tinv[w] & 1:
            self.overlap_pruned += 1
            return "closure"
        VS = _preimage(self.Sl, tinv)
        VSU = _preimage(self.SUl, tinv)
        if self.mode == "watched":
            if _overlap_witness(prof, VS, 0):
                self.overlap_pruned += 1
                return "satisfied"
            Wt = _overlap_witness(prof, VSU, 1)
            if Wt:
                self.watch |= _preimage(points_of(Wt), t)
                self.overlap_pruned += 1
                return "overlap"
        else:
            if VS and _overlap(prof, VS) > 0:
                self.overlap_pruned += 1
                return "satisfied"
            if _overlap(prof, VSU) > self.k:
                self.overlap_pruned += 1
                return "overlap"
        if self.lex and prof.moved_c:
            why = self._pruned(F, prof, t, parent_zs)
            if why:
                self.lex_pruned += 1
                return why
        return ""

    def expand(self, F: Tuple[int, ...], prof: _Profile, t: Perm, tinv: Perm) -> Optional[Perm]:
        if not prof.moved_c:
            if self.mode == "one":
                return t
            img = 0
            for x in self.c.lits:
                img |= 1 << t[x]
            live = img & self.U
            if not live:
                return t
            self.skeleton.append((live.bit_length() - 1, t))
            return None
        alpha = prof.moved_c[0]
        w = self.w
        if w is not None and not prof.fixed_c >> tinv[w] & 1:
            y = tinv[w]
            for x in prof.moved_c:
                if y in prof.H.orbit(x):
                    alpha = x
                    break
        reps, F2 = prof.child(alpha)
        kids = sorted(((t[y], u, ui) for y, u, ui in reps), key=lambda e: e[0])
        zs = [z for z, _, _ in kids]
        child = _profile(self.c, F2, self.cfg.blocks)
        F = F + (alpha,)
        for _, u, ui in kids:
            t2 = u * t
            t2inv = tinv * ui
            if self._reject(F, child, t2, t2inv, zs):
                continue
            self._count()
            r = self.expand(F, child, t2, t2inv)
            if r is not None:
                return r
        return None

    def finish(self, found: Optional[Perm], limit_hit: bool = False) -> SearchResult:
        if self.stats is not None:
            st = self.stats
            st.calls += 1
            st.nodes += self.nodes
            st.lex_pruned += self.lex_pruned
            st.overlap_pruned += self.overlap_pruned
            st.limit_hits += int(limit_hit)
        K = self._K if self.K_used else None
        return SearchResult(found, self.skeleton, self.watch, K, self.nodes, limit_hit, self.trace or [])


def _search(clause, S, U, k, w, mode, config, stats) -> SearchResult:
    cfg = config or DEFAULT
    srch = _Search(clause, _as_mask(S), _as_mask(U), k, w, mode, cfg, stats)
    try:
        found = srch.run()
    except NodeLimit:
        return srch.finish(None, True)
    return srch.finish(found)


def transport(clause: AugmentedClause, S: Points, U: Points, k: int, required: Optional[int] = None,
              config: Optional[TransportConfig] = None, stats: Optional[TransportStats] = None) -> Optional[Perm]:
    """Some ``g`` with ``c^g`` missing ``S`` and ``|c^g & (S | U)| <= k``, else None.

    With ``required`` the instance must also contain that literal.
    """
    cfg = config or DEFAULT
    if cfg.node_limit is not None:
        cfg = TransportConfig(**{**cfg.__dict__, "node_limit": None})
    return _search(clause, S, U, k, required, "one", cfg, stats).found


@dataclass
class BoundedResult:
    status: str            # "found", "none" or "limit"
    perm: Optional[Perm] = None
    nodes: int = 0


def transport_bounded(clause: AugmentedClause, S: Points, U: Points, k: int, required: Optional[int] = None,
                      node_limit: int = 100, config: Optional[TransportConfig] = None,
                      stats: Optional[TransportStats] = None) -> BoundedResult:
    """Node-limited search pruning with the pointwise stabilizer of ``S | U``."""
    if node_limit <= 0:
        return BoundedResult("limit")
    base = config or DEFAULT
    cfg = TransportConfig(**{**base.__dict__, "node_limit": node_limit, "pointwise_K": True})
    res = _search(clause, S, U, k, required, "one", cfg, stats)
    if res.limit_hit:
        return BoundedResult("limit", None, res.nodes)
    return BoundedResult("found" if res.found is not None else "none", res.found, res.nodes)


def unit_search(clause: AugmentedClause, S: Points, U: Points, config: Optional[TransportConfig] = None,
                stats: Optional[TransportStats] = None) -> SearchResult:
    """Conflict or a skeletal set of unit consequences."""
    return _search(clause, S, U, 1, None, "all", config, stats)


def watched_search(clause: AugmentedClause, S: Points, U: Points, w: int,
                   config: Optional[TransportConfig] = None, stats: Optional[TransportStats] = None) -> SearchResult:
    """As :func:`unit_search` restricted to instances containing ``w``.

    ``watch`` collects literals that witness pruned subtrees.
    """
    return _search(clause, S, U, 1, w, "watched", config, stats)


def transport_all(clause: AugmentedClause, S: Points, U: Points, config: Optional[TransportConfig] = None,
                  stats: Optional[TransportStats] = None):
    """``(True, g)`` for a falsified instance ``c^g``, else ``(False, skeleton)``."""
    r = unit_search(clause, S, U, config, stats)
    if r.found is not None:
        return True, r.found
    return False, r.skeleton


def transport_watched(clause: AugmentedClause, S: Points, U: Points, w: int,
                      config: Optional[TransportConfig] = None, stats: Optional[TransportStats] = None):
    """``(flag, g-or-skeleton, watch literals)``."""
    r = watched_search(clause, S, U, w, config, stats)
    W = frozenset(points_of(r.watch))
    if r.found is not None:
        return True, r.found, W
    return False, r.skeleton, W


def complete(skeleton: Sequence[Tuple[int, Perm]], K: Optional[PermGroup]) -> List[Tuple[int, Perm]]:
    """Close a skeletal set under ``K``: one pair per reachable literal."""
    out: List[Tuple[int, Perm]] = []
    have = set()
    for l, g in skeleton:
        if l in have:
            continue
        if K is None or K.is_trivial():
            have.add(l)
            out.append((l, g))
            continue
        for l2, h in K.orbit_transversal(l).items():
            if l2 not in have:
                have.add(l2)
                out.append((l2, g * h))
    return out


def unit_consequences(clause: AugmentedClause, S: Points, U: Points, config: Optional[TransportConfig] = None,
                      stats: Optional[TransportStats] = None):
    """``(conflict_perm_or_None, [(literal, g), ...])`` with every unit literal listed."""
    r = unit_search(clause, S, U, config, stats)
    if r.found is not None:
        return r.found, []
    return None, complete(r.skeleton, r.K)
