"""Relevance-bounded learning over augmented clauses.

The loop is the classic one: propagate, and on a conflict resolve the
falsified instance against the reason of its deepest literal, back up until
the resolvent is unit, learn it and continue.  Unit propagation is driven by
watching sets; every clause keeps a literal mask ``W`` that is updated from
the witnesses the watched search returns.
"""
from __future__ import annotations

import logging
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Deque, Dict, List, Optional, Sequence, Tuple

from .augmented import (Assignment, AugmentedClause, from_dimacs, mask_of, points_of, resolve_ground,
                        resolvent_group, to_dimacs)
from .perm_core import Perm
from .transporter import (TransportConfig, TransportStats, complete, transport, transport_bounded,
                          unit_search, watched_search)

log = logging.getLogger(__name__)

Reason = Optional[Tuple["Entry", Perm]]


@dataclass
class SolverConfig:
    relevance_k: int = 3
    lex_prune: bool = True
    min_resolvents: bool = True
    node_limit: int = 100
    fast_path: bool = True
    sweep_min: int = 50
    max_conflicts: Optional[int] = None
    time_limit: Optional[float] = None
    trace: bool = False
    watch_removal: bool = True


@dataclass
class SolverStats:
    decisions: int = 0
    conflicts: int = 0
    propagations: int = 0
    unit_tests: int = 0
    learned: int = 0
    deleted: int = 0
    resolutions: int = 0
    rescans: int = 0
    late_conflicts: int = 0
    ms: float = 0.0
    transport: TransportStats = field(default_factory=TransportStats)

    @property
    def nodes(self) -> int:
        """Search nodes: one per branching decision."""
        return self.decisions


@dataclass
class SolveResult:
    status: str                      # "SAT", "UNSAT" or "UNKNOWN"
    model: Optional[List[int]] = None
    stats: SolverStats = field(default_factory=SolverStats)
    learned: List[AugmentedClause] = field(default_factory=list)
    trace: List[str] = field(default_factory=list)


class Entry:
    __slots__ = ("clause", "W", "learned", "alive")

    def __init__(self, clause: AugmentedClause, learned: bool):
        self.clause = clause
        self.W = mask_of(clause.closure())
        self.learned = learned
        self.alive = True


def depth(lits, P: Assignment) -> int:
    """Falsification depth: 1-based trail position of the latest falsified literal."""
    best = 0
    for x in lits:
        if P.S >> (x ^ 1) & 1:
            d = P.position(x) + 1
            if d > best:
                best = d
    return best


def compare_nogoods(c1, c2, P: Assignment) -> int:
    """-1, 0 or 1 as nogood ``c1`` is falsified earlier than, as early as, or later than ``c2``.

    Depths are compared; on a tie the shared deepest literal is dropped from
    both and the comparison repeats.
    """
    a, b = set(c1), set(c2)
    while True:
        da, db = depth(a, P), depth(b, P)
        if da != db:
            return -1 if da < db else 1
        if da == 0:
            return 0
        x = P.trail[da - 1] ^ 1
        a.discard(x)
        b.discard(x)


def min_resolvent(a: AugmentedClause, ga: Perm, b: AugmentedClause, gb: Perm, l: int, P: Assignment,
                  node_limit: Optional[int] = 100, config: Optional[TransportConfig] = None,
                  stats: Optional[TransportStats] = None) -> Tuple[Perm, Perm]:
    """Instances of ``a`` (containing ``l``) and ``b`` (containing ``-l``) whose resolvent backs up furthest.

    Instances are kept falsified apart from the pivot pair, so the resolvent
    stays a nogood for ``P``.  ``node_limit=None`` searches exhaustively.
    """
    unavoid = (1 << l) | (1 << (l ^ 1))
    live = P.live & ~unavoid
    af, bf = a.instance(ga), b.instance(gb)

    def search(cl, S, req):
        if node_limit is None:
            return transport(cl, S, 0, 0, required=req, config=config, stats=stats)
        r = transport_bounded(cl, S, 0, 0, required=req, node_limit=node_limit, config=config, stats=stats)
        return r.perm

    def rest(x):
        return [p for p in x if not unavoid >> p & 1]

    p = depth(rest(af | bf), P)
    while p > 0:
        late = 0
        for q in P.trail[p - 1:]:
            late |= 1 << (q ^ 1)
        S = (late | live) & ~unavoid
        g = ga if not mask_of(af) & S else search(a, S, l)
        h = gb if g is None or not mask_of(bf) & S else search(b, S, l ^ 1)
        if g is None or h is None:
            unavoid |= 1 << (P.trail[p - 1] ^ 1)
        else:
            ga, gb = g, h
            af, bf = a.instance(g), b.instance(h)
        p = depth(rest(af | bf), P)
    return ga, gb


class Solver:
    """One solver run.  ``on_decision`` fires before each branch and
    ``on_backtrack`` once propagation settles after each backtrack; both are
    instrumentation hooks receiving the solver."""

    def __init__(self, clauses: Sequence[AugmentedClause], nvars: int, config: Optional[SolverConfig] = None,
                 on_decision: Optional[Callable[["Solver"], None]] = None,
                 on_backtrack: Optional[Callable[["Solver"], None]] = None):
        self.cfg = config or SolverConfig()
        self.tcfg = TransportConfig(lex_prune=self.cfg.lex_prune)
        self.nvars = nvars
        for c in clauses:
            if c.nvars != nvars:
                raise ValueError("clause degree does not match the variable count")
        self.entries: List[Entry] = [Entry(c, False) for c in clauses]
        self.P = Assignment(nvars)
        self.reasons: List[Reason] = []
        self.stats = SolverStats()
        self.learned_log: List[AugmentedClause] = []
        self.trace: List[str] = []
        self.on_decision = on_decision
        self.on_backtrack = on_backtrack
        self.queue: Deque[Tuple[int, Reason]] = deque()
        self.queued = 0
        self.scores = self._scores()

    # --- branching ------------------------------------------------------

    def _scores(self) -> List[float]:
        """Static literal weights: number of instances each literal occurs in."""
        sc = [0.0] * (2 * self.nvars)
        for e in self.entries:
            c = e.clause
            G = c.group
            ninst = c.num_instances()
            for orb in {G.orbit(x) for x in c.lits}:
                share = ninst * len(orb & c.base) / len(orb)
                for x in orb:
                    sc[x] += share
        return sc

    def _choose(self) -> Optional[int]:
        best, bs = None, -1.0
        U = self.P.U
        for x in range(2 * self.nvars):
            if U >> x & 1 and self.scores[x] > bs:
                best, bs = x, self.scores[x]
        return best

    # --- trail ----------------------------------------------------------

    def _assign(self, x: int, r: Reason) -> None:
        self.P.push(x)
        self.reasons.append(r)

    def _backtrack(self, length: int) -> None:
        self.P.truncate(length)
        del self.reasons[length:]
        self.queue.clear()
        self.queued = 0

    def _enqueue(self, x: int, r: Reason) -> None:
        if self.queued >> x & 1 or self.P.pos[x >> 1] >= 0:
            return
        self.queued |= 1 << x
        self.queue.append((x, r))

    def _note(self, msg: str) -> None:
        if self.cfg.trace:
            self.trace.append(msg)

    # --- propagation ----------------------------------------------------

    def _rescan(self) -> Optional[Tuple[Entry, Perm]]:
        """Queue every unit consequence of the current trail."""
        self.stats.rescans += 1
        P = self.P
        for e in self.entries:
            if not e.alive:
                continue
            self.stats.unit_tests += 1
            r = unit_search(e.clause, P.S, P.U, self.tcfg, self.stats.transport)
            if r.found is not None:
                return e, r.found
            for z, h in complete(r.skeleton, r.K):
                self._enqueue(z, (e, h))
        return None

    def _retracted_unvalued(self) -> int:
        """Unvalued mask of the trail cut just before its latest decision."""
        P = self.P
        last = next((i for i in range(len(P.trail) - 1, -1, -1) if self.reasons[i] is None), -1)
        if last < 0:
            return (1 << (2 * self.nvars)) - 1
        Up = P.U
        for q in P.trail[last:]:
            Up |= 3 << (q & ~1)
        return Up

    def _watch_step(self, e: Entry, nl: int, Up: int) -> Optional[Perm]:
        """Process clause ``e`` after its watched literal ``nl`` became false.

        Returns a falsified instance, or queues units and updates ``e.W``.
        ``Up`` bounds the unvalued literals at any retraction of the trail.
        """
        P = self.P
        self.stats.unit_tests += 1
        res = watched_search(e.clause, P.S, P.U, nl, self.tcfg, self.stats.transport)
        if res.found is not None:
            return res.found
        for z, h in complete(res.skeleton, res.K):
            self._enqueue(z, (e, h))
        V = res.watch
        if V and res.K is not None:
            V = mask_of(y for x in points_of(V) for y in res.K.orbit(x))
        e.W |= P.U & V
        if self.cfg.watch_removal and not res.skeleton:
            if transport(e.clause, 0, e.W & Up & ~(1 << nl), 1, required=nl, config=self.tcfg,
                         stats=self.stats.transport) is None:
                e.W &= ~(1 << nl)
        return None

    def _propagate(self) -> Optional[Tuple[Entry, Perm]]:
        P = self.P
        while self.queue:
            l, r = self.queue.popleft()
            self.queued &= ~(1 << l)
            if P.pos[l >> 1] >= 0:
                if P.S >> l & 1:
                    continue
                assert r is not None
                return r
            Up = self._retracted_unvalued()
            self._assign(l, r)
            self.stats.propagations += 1
            nl = l ^ 1
            for e in list(self.entries):
                if e.alive and e.W >> nl & 1:
                    g = self._watch_step(e, nl, Up)
                    if g is not None:
                        return e, g
        return None

    # --- conflicts ------------------------------------------------------

    def _analyze(self, conflict: Tuple[Entry, Perm]) -> Tuple[AugmentedClause, bool]:
        """Nogood to back up on, and whether it is new."""
        e, g = conflict
        c = e.clause
        inst = c.instance(g)
        P = self.P
        if not inst:
            return c, False
        x = max(inst, key=lambda q: P.position(q))
        pos = P.position(x)
        r = self.reasons[pos]
        if r is None:
            return AugmentedClause(inst, c.group), False
        re, h = r
        rc = re.clause
        if self.cfg.min_resolvents:
            g, h = min_resolvent(c, g, rc, h, x, P, self.cfg.node_limit, self.tcfg, self.stats.transport)
        base = resolve_ground(c.instance(g), rc.instance(h), x)
        Z = resolvent_group(c, rc, self.cfg.fast_path)
        self.stats.resolutions += 1
        return AugmentedClause(base, Z, learned=True), True

    def _learn(self, c: AugmentedClause) -> None:
        self.entries.append(Entry(c, True))
        self.learned_log.append(c)
        self.stats.learned += 1
        learned = [e for e in self.entries if e.learned and e.alive]
        if len(learned) < self.cfg.sweep_min:
            return
        k = self.cfg.relevance_k
        live = self.P.live
        keep = []
        for e in self.entries:
            if e.learned and e.clause is not c and len(e.clause) > k + 1:
                if transport(e.clause, 0, live, k + 1, config=self.tcfg, stats=self.stats.transport) is None:
                    e.alive = False
                    self.stats.deleted += 1
                    continue
            keep.append(e)
        self.entries = keep

    def _falsified(self) -> Optional[Tuple[Entry, Perm]]:
        for e in self.entries:
            g = transport(e.clause, self.P.S, 0, 0, config=self.tcfg, stats=self.stats.transport)
            if g is not None:
                return e, g
        return None

    # --- main loop ------------------------------------------------------

    def solve(self) -> SolveResult:
        t0 = time.perf_counter()
        status = self._run(t0)
        self.stats.ms = (time.perf_counter() - t0) * 1000.0
        model = None
        if status == "SAT":
            model = [to_dimacs(x) for x in sorted(self.P.trail, key=lambda q: q >> 1)]
        return SolveResult(status, model, self.stats, self.learned_log, self.trace)

    def _run(self, t0: float) -> str:
        cfg = self.cfg
        conflict = self._rescan()
        settled = True
        while True:
            if cfg.time_limit is not None and time.perf_counter() - t0 > cfg.time_limit:
                return "UNKNOWN"
            if conflict is None:
                conflict = self._propagate()
                if conflict is None and not settled:
                    settled = True
                    if self.on_backtrack is not None:
                        self.on_backtrack(self)
            if conflict is not None:
                self.stats.conflicts += 1
                if cfg.max_conflicts is not None and self.stats.conflicts > cfg.max_conflicts:
                    return "UNKNOWN"
                nog, new = self._analyze(conflict)
                self._note(f"conflict {self.stats.conflicts}: learn {[to_dimacs(x) for x in nog.lits]}")
                if not nog.lits:
                    return "UNSAT"
                q = max(self.P.position(x) for x in nog.lits)
                self._backtrack(q)
                if new:
                    self._learn(nog)
                settled = False
                conflict = self._rescan()
                continue
            if self.P.U == 0:
                conflict = self._falsified()
                if conflict is not None:
                    self.stats.late_conflicts += 1
                    continue
                return "SAT"
            if self.on_decision is not None:
                self.on_decision(self)
            x = self._choose()
            assert x is not None
            self.stats.decisions += 1
            self._note(f"decide {to_dimacs(x)}")
            self._enqueue(x, None)


def solve(clauses: Sequence[AugmentedClause], nvars: int, config: Optional[SolverConfig] = None,
          **kw) -> SolveResult:
    return Solver(clauses, nvars, config, **kw).solve()


def ground_cnf(cnf: Sequence[Sequence[int]], nvars: int) -> List[AugmentedClause]:
    """Trivial-group clauses from DIMACS-style integer clauses."""
    from .augmented import ground_clause
    return [ground_clause({from_dimacs(x) for x in cl}, nvars) for cl in cnf]



def _instance_masks(clause: AugmentedClause, limit: int) -> List[int]:
    got = clause.cache.get("instance_masks")
    if got is None:
        got = []
        for c in clause.instances():
            got.append(mask_of(c))
            if len(got) > limit:
                raise ValueError("too many instances to enumerate")
        clause.cache["instance_masks"] = got
    return got


def _prefix_states(trail: Sequence[int], nvars: int) -> List[Tuple[int, int]]:
    S, U = 0, (1 << (2 * nvars)) - 1
    out = [(S, U)]
    for q in trail:
        S |= 1 << q
        U &= ~(3 << (q & ~1))
        out.append((S, U))
    return out


def backtrack_points(trail: Sequence[int], clauses: Sequence[AugmentedClause], nvars: int,
                     limit: int = 20000) -> List[int]:
    """Lengths of the trail prefixes that are closed under unit propagation, plus the trail itself."""
    masks = [m for c in clauses for m in _instance_masks(c, limit)]
    out = []
    states = _prefix_states(trail, nvars)
    for i, (S, U) in enumerate(states):
        if i == len(trail) or all(m & S or (m & U).bit_count() > 1 for m in masks):
            out.append(i)
    return out


def _unsettled(m: int, S: int, U: int) -> bool:
    return not m & S and (m & U).bit_count() >= 2


def retraction(trail: Sequence[int], clauses: Sequence[AugmentedClause], C, nvars: int,
               limit: int = 20000) -> Optional[Tuple[int, ...]]:
    """Latest backtrack point of ``trail`` at which ground clause ``C`` is unsettled (None if there is none)."""
    m = mask_of(C)
    states = _prefix_states(trail, nvars)
    for i in reversed(backtrack_points(trail, clauses, nvars, limit)):
        if _unsettled(m, *states[i]):
            return tuple(trail[:i])
    return None


def watch_violations(solver: Solver, limit: int = 20000) -> List[Tuple[AugmentedClause, frozenset]]:
    """Instances whose clause's watching set is too small at the current trail.

    Brute force over all instances; meant for small problems.  At the
    retraction of each instance at least two of its watched literals must be
    unvalued.
    """
    entries = [e for e in solver.entries if e.alive]
    trail = solver.P.trail
    states = _prefix_states(trail, solver.nvars)
    points = backtrack_points(trail, [e.clause for e in entries], solver.nvars, limit)
    bad = []
    for e in entries:
        for m in _instance_masks(e.clause, limit):
            for i in reversed(points):
                S, U = states[i]
                if _unsettled(m, S, U):
                    if (m & U & e.W).bit_count() < 2:
                        bad.append((e.clause, frozenset(points_of(m))))
                    break
    return bad
