"""Parser and elaborator for the ``.zap`` problem language.

A file declares sorts and predicates, optionally names groups, and then
lists axioms.  An axiom is either a ground clause annotated with groups
(``-in[1 1] -in[2 1] GROUP G ;``) or ``quantifiers literals result ;``
where the result is empty (a clause), a comparison (cardinality) or ``%2=``
(parity).  Elaboration turns every axiom into augmented clauses over a
shared table of ground atoms.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

from .augmented import AugmentedClause, ClauseError
from .perm_core import Perm, PermGroup

KEYWORDS = {"SORT", "PREDICATE", "GROUP", "FORALL", "EXISTS", "NOTEQ"}
COMPARISONS = (">=", "<=", "=", ">", "<")


class ParseError(ValueError):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {msg}" if line else msg)
        self.line = line
        self.col = col


class ElaborationError(ValueError):
    pass


# --- AST ----------------------------------------------------------------

Arg = Union[int, str]


@dataclass(frozen=True)
class Atom:
    pred: str
    args: Tuple[Arg, ...] = ()

    def text(self) -> str:
        if not self.args:
            return self.pred
        return f"{self.pred}[{' '.join(str(a) for a in self.args)}]"


@dataclass(frozen=True)
class Literal:
    atom: Atom
    negated: bool = False

    def text(self) -> str:
        return ("-" if self.negated else "") + self.atom.text()


@dataclass(frozen=True)
class ResultSpec:
    kind: str = "plain"              # plain | comparison | parity
    op: Optional[str] = None
    value: int = 0


@dataclass(frozen=True)
class Quantifier:
    kind: str                        # FORALL | EXISTS | NOTEQ
    vars: Tuple[str, ...]


@dataclass(frozen=True)
class Axiom:
    quants: Tuple[Quantifier, ...]
    lits: Tuple[Literal, ...]
    result: ResultSpec = ResultSpec()
    groups: Tuple[str, ...] = ()


Cycle = Tuple[Literal, ...]
Generator = Tuple[Cycle, ...]


@dataclass
class ProblemAST:
    sorts: Dict[str, int] = field(default_factory=dict)
    predicates: Dict[str, Tuple[str, ...]] = field(default_factory=dict)
    groups: Dict[str, Tuple[Generator, ...]] = field(default_factory=dict)
    axioms: List[Axiom] = field(default_factory=list)


# --- lexer --------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+) | (?P<comment>//[^\n]*) |
    (?P<op>%2=|>=|<=|=|>|<|⊕) |
    (?P<punct>[()\[\];\-]) |
    (?P<int>\d+) |
    (?P<name>[A-Za-z_][A-Za-z0-9_]*)
""", re.VERBOSE)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> List[Token]:
    out = []
    pos, line, start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - start + 1)
        kind = m.lastgroup
        tok = m.group()
        if kind not in ("ws", "comment"):
            out.append(Token(kind, tok, line, pos - start + 1))
        nl = tok.count("\n")
        if nl:
            line += nl
            start = pos + tok.rindex("\n") + 1
        pos = m.end()
    out.append(Token("eof", "", line, pos - start + 1))
    return out


# --- parser -------------------------------------------------------------

class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.ast = ProblemAST()

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg: str, tok: Optional[Token] = None):
        tok = tok or self.peek()
        raise ParseError(msg, tok.line, tok.col)

    def expect(self, text: str) -> Token:
        t = self.peek()
        if t.text != text:
            self.error(f"expected {text!r}, found {t.text or 'end of input'!r}")
        return self.next()

    def name(self) -> Token:
        t = self.peek()
        if t.kind != "name":
            self.error(f"expected a name, found {t.text or 'end of input'!r}")
        return self.next()

    def integer(self) -> int:
        neg = False
        if self.peek().text == "-":
            self.next()
            neg = True
        t = self.peek()
        if t.kind != "int":
            self.error(f"expected an integer, found {t.text or 'end of input'!r}")
        self.next()
        return -int(t.text) if neg else int(t.text)

    def parse(self) -> ProblemAST:
        while self.peek().kind != "eof":
            t = self.peek()
            if t.text == "SORT":
                self.sort()
            elif t.text == "PREDICATE":
                self.predicate()
            elif t.text == "GROUP":
                self.group()
            else:
                self.axiom()
        return self.ast

    def sort(self):
        self.next()
        n = self.name()
        if n.text in self.ast.sorts:
            self.error(f"sort {n.text!r} redefined", n)
        size = self.integer()
        if size < 1:
            self.error("sort size must be positive", n)
        self.expect(";")
        self.ast.sorts[n.text] = size

    def predicate(self):
        self.next()
        n = self.name()
        if n.text in self.ast.predicates or n.text in KEYWORDS:
            self.error(f"predicate {n.text!r} redefined", n)
        sorts = []
        if self.peek().text == "(":
            self.next()
            while self.peek().text != ")":
                s = self.name()
                if s.text not in self.ast.sorts:
                    self.error(f"undefined sort {s.text!r}", s)
                sorts.append(s.text)
            self.next()
        self.expect(";")
        self.ast.predicates[n.text] = tuple(sorts)

    def group(self):
        self.next()
        n = self.name()
        if n.text in self.ast.groups:
            self.error(f"group {n.text!r} redefined", n)
        self.expect("<")
        gens = []
        while self.peek().text == "(":
            self.next()
            cycles = []
            while self.peek().text == "(":
                self.next()
                cyc = []
                while self.peek().text != ")":
                    cyc.append(self.literal({}, ground=True))
                self.next()
                if not cyc:
                    self.error("empty cycle")
                cycles.append(tuple(cyc))
            self.expect(")")
            gens.append(tuple(cycles))
        self.expect(">")
        self.expect(";")
        self.ast.groups[n.text] = tuple(gens)

    def axiom(self):
        first = self.peek()
        quants = []
        bound: Dict[str, Optional[str]] = {}
        while self.peek().text in ("FORALL", "EXISTS", "NOTEQ"):
            kind = self.next().text
            self.expect("(")
            vs = []
            while self.peek().text != ")":
                v = self.name()
                if v.text in bound or v.text in KEYWORDS:
                    self.error(f"variable {v.text!r} bound twice", v)
                bound[v.text] = None
                vs.append(v.text)
            self.next()
            quants.append(Quantifier(kind, tuple(vs)))
        lits = []
        xor = False
        while True:
            t = self.peek()
            if t.text == "⊕":
                if not lits:
                    self.error("'⊕' before any literal")
                self.next()
                xor = True
                continue
            if t.text == "-" or t.kind == "name" and t.text != "GROUP":
                lits.append(self.literal(bound, ground=not quants))
                continue
            break
        result = ResultSpec()
        t = self.peek()
        if t.text in COMPARISONS or t.text == "%2=":
            op = self.next().text
            val = self.integer()
            if op == "%2=" or xor:
                if op not in ("%2=", "="):
                    self.error("'⊕' chains take '= r'", t)
                if val not in (0, 1):
                    self.error("parity residue must be 0 or 1", t)
                result = ResultSpec("parity", None, val)
            else:
                result = ResultSpec("comparison", op, val)
        elif xor:
            self.error("'⊕' chain without '= r'", t)
        groups = []
        if self.peek().text == "GROUP":
            gt = self.next()
            if quants or result.kind != "plain":
                self.error("GROUP annotations apply to ground clauses only", gt)
            while self.peek().kind == "name":
                g = self.next()
                if g.text not in self.ast.groups:
                    self.error(f"undefined group {g.text!r}", g)
                groups.append(g.text)
            if not groups:
                self.error("GROUP without a designator")
        self.expect(";")
        if not lits:
            self.error("axiom without literals", first)
        for v, s in bound.items():
            if s is None:
                self.error(f"variable {v!r} is never used", first)
        self.ast.axioms.append(Axiom(tuple(quants), tuple(lits), result, tuple(groups)))

    def literal(self, bound: Dict[str, Optional[str]], ground: bool) -> Literal:
        neg = False
        if self.peek().text == "-":
            self.next()
            neg = True
        n = self.name()
        if n.text in KEYWORDS:
            self.error(f"unexpected keyword {n.text!r}", n)
        preds = self.ast.predicates
        args: List[Arg] = []
        if self.peek().text == "[":
            self.next()
            while self.peek().text != "]":
                t = self.peek()
                if t.kind == "int":
                    args.append(int(self.next().text))
                elif t.kind == "name":
                    args.append(self.next().text)
                else:
                    self.error(f"bad predicate argument {t.text!r}")
            self.next()
            if n.text not in preds:
                self.error(f"undefined predicate {n.text!r}", n)
        elif n.text in preds and preds[n.text]:
            self.error(f"predicate {n.text!r} needs arguments", n)
        if n.text in preds:
            sorts = preds[n.text]
            if len(args) != len(sorts):
                self.error(f"{n.text} takes {len(sorts)} arguments, got {len(args)}", n)
            for a, s in zip(args, sorts):
                if isinstance(a, int):
                    if not 1 <= a <= self.ast.sorts[s]:
                        self.error(f"index {a} outside sort {s!r} (size {self.ast.sorts[s]})", n)
                else:
                    if a not in bound:
                        self.error(f"unbound variable {a!r}", n)
                    if bound[a] is not None and bound[a] != s:
                        self.error(f"variable {a!r} used at sorts {bound[a]!r} and {s!r}", n)
                    bound[a] = s
        return Literal(Atom(n.text, tuple(args)), neg)


def parse(text: str) -> ProblemAST:
    return _Parser(text).parse()


# --- printing -----------------------------------------------------------

def format_problem(ast: ProblemAST) -> str:
    """Canonical text; ``parse(format_problem(a))`` rebuilds ``a``."""
    out = []
    for s, n in ast.sorts.items():
        out.append(f"SORT {s} {n} ;")
    for p, sorts in ast.predicates.items():
        out.append(f"PREDICATE {p}({' '.join(sorts)}) ;" if sorts else f"PREDICATE {p} ;")
    for g, gens in ast.groups.items():
        body = " ".join("(" + " ".join("(" + " ".join(l.text() for l in c) + ")" for c in gen) + ")"
                        for gen in gens)
        out.append(f"GROUP {g} < {body} > ;")
    for ax in ast.axioms:
        parts = [f"{q.kind}({' '.join(q.vars)})" for q in ax.quants]
        parts += [l.text() for l in ax.lits]
        r = ax.result
        if r.kind == "comparison":
            parts.append(f"{r.op} {r.value}")
        elif r.kind == "parity":
            parts.append(f"%2= {r.value}")
        if ax.groups:
            parts.append("GROUP " + " ".join(ax.groups))
        out.append(" ".join(parts) + " ;")
    return "\n".join(out) + ("\n" if out else "")


# --- elaboration --------------------------------------------------------

GroundAtom = Tuple[str, Tuple[int, ...]]


@dataclass
class Problem:
    clauses: List[AugmentedClause]
    atoms: List[GroundAtom]
    index: Dict[GroundAtom, int]

    @property
    def nvars(self) -> int:
        return len(self.atoms)

    def name(self, var: int) -> str:
        p, args = self.atoms[var]
        return f"{p}[{' '.join(map(str, args))}]" if args else p

    def lit_name(self, point: int) -> str:
        return ("-" if point & 1 else "") + self.name(point >> 1)


def _symmetric_gens(items: Sequence) -> List[List]:
    """Generators of Sym(items) as item sequences: a transposition and the full cycle."""
    items = list(items)
    if len(items) < 2:
        return []
    gens = [[items[0], items[1]]]
    if len(items) > 2:
        gens.append(items)
    return gens


class _Elaborator:
    def __init__(self, ast: ProblemAST):
        self.ast = ast
        self.atoms: Dict[GroundAtom, None] = {}

    # ground atoms --------------------------------------------------------

    def all_atoms(self, pred: str) -> Iterator[GroundAtom]:
        sorts = self.ast.predicates.get(pred, ())
        for args in itertools.product(*(range(1, self.ast.sorts[s] + 1) for s in sorts)):
            yield pred, tuple(args)

    def collect(self) -> Dict[GroundAtom, int]:
        seen = set()
        for gens in self.ast.groups.values():
            for gen in gens:
                for cyc in gen:
                    for l in cyc:
                        seen.add((l.atom.pred, l.atom.args))
        for ax in self.ast.axioms:
            universal = any(q.kind != "EXISTS" for q in ax.quants)
            for l in ax.lits:
                a = l.atom
                if all(isinstance(x, int) for x in a.args):
                    seen.add((a.pred, a.args))
                elif universal and ax.result.kind == "plain":
                    # the clause's group relabels every atom of the predicate
                    seen.update(self.all_atoms(a.pred))
                else:
                    sorts = self.ast.predicates[a.pred]
                    doms = [range(1, self.ast.sorts[s] + 1) if isinstance(x, str) else (x,)
                            for x, s in zip(a.args, sorts)]
                    seen.update((a.pred, tuple(args)) for args in itertools.product(*doms))
        # declared predicates first, then bare names in order of appearance
        order = {p: i for i, p in enumerate(self.ast.predicates)}
        appear: Dict[str, int] = {}
        for gens in self.ast.groups.values():
            for gen in gens:
                for cyc in gen:
                    for l in cyc:
                        appear.setdefault(l.atom.pred, len(appear))
        for ax in self.ast.axioms:
            for l in ax.lits:
                appear.setdefault(l.atom.pred, len(appear))
        rank = lambda a: (0, order[a[0]], a[1]) if a[0] in order else (1, appear[a[0]], a[1])
        return {a: i for i, a in enumerate(sorted(seen, key=rank))}

    # helpers -------------------------------------------------------------

    def point(self, lit: Literal, env: Dict[str, int]) -> int:
        a = lit.atom
        args = tuple(x if isinstance(x, int) else env[x] for x in a.args)
        return 2 * self.index[(a.pred, args)] + int(lit.negated)

    def perm_from_pairs(self, moves: Dict[int, int]) -> Perm:
        """Signed permutation from literal images; complements follow."""
        img = list(range(2 * self.n))
        for u, w in moves.items():
            img[u] = w
            img[u ^ 1] = w ^ 1
        if sorted(img) != list(range(2 * self.n)):
            raise ElaborationError("group generator is not a permutation")
        return Perm(img)

    def literal_sym(self, pts: Sequence[int]) -> List[Perm]:
        gens = []
        for cyc in _symmetric_gens(pts):
            gens.append(self.perm_from_pairs({cyc[i]: cyc[(i + 1) % len(cyc)] for i in range(len(cyc))}))
        return gens

    def group(self, gens: Iterable[Perm]) -> PermGroup:
        return PermGroup(list(gens) or [], 2 * self.n)

    def clause(self, lits: Iterable[int], gens: Iterable[Perm], label: str) -> AugmentedClause:
        try:
            return AugmentedClause(lits, self.group(gens), label=label)
        except ClauseError as e:
            raise ElaborationError(f"{label}: {e}") from None

    # axioms --------------------------------------------------------------

    def run(self) -> Problem:
        self.index = self.collect()
        self.n = len(self.index)
        self.named = {}
        for g, gens in self.ast.groups.items():
            perms = []
            for gen in gens:
                moves: Dict[int, int] = {}
                for cyc in gen:
                    pts = [self.point(l, {}) for l in cyc]
                    for i, u in enumerate(pts):
                        if u in moves or u ^ 1 in moves:
                            raise ElaborationError(f"group {g}: literal repeated in a generator")
                        moves[u] = pts[(i + 1) % len(pts)]
                perms.append(self.perm_from_pairs(moves))
            self.named[g] = perms
        out: List[AugmentedClause] = []
        for k, ax in enumerate(self.ast.axioms):
            out.extend(self.axiom(ax, f"axiom {k + 1}"))
        atoms = [None] * self.n
        for a, i in self.index.items():
            atoms[i] = a
        return Problem(out, atoms, self.index)

    def axiom(self, ax: Axiom, label: str) -> List[AugmentedClause]:
        kinds = [q.kind for q in ax.quants]
        if "EXISTS" in kinds and any(k != "EXISTS" for k in kinds[kinds.index("EXISTS"):]):
            raise ElaborationError(f"{label}: EXISTS must follow the universal quantifiers")
        if all(k == "EXISTS" for k in kinds):
            return [c for lits in self.expand_exists(ax, {}) for c in self.ground(ax, lits, label)]
        if ax.result.kind == "plain":
            return self.universal_clause(ax, label)
        out = []
        for env in self.universal_envs(ax):
            for lits in self.expand_exists(ax, env):
                out.extend(self.ground(ax, lits, label))
        return out

    def var_sorts(self, ax: Axiom) -> Dict[str, str]:
        out = {}
        for l in ax.lits:
            for x, s in zip(l.atom.args, self.ast.predicates.get(l.atom.pred, ())):
                if isinstance(x, str):
                    out[x] = s
        return out

    def expand_exists(self, ax: Axiom, env: Dict[str, int]) -> List[List[int]]:
        """Literal points with existential variables spread over their domain (ascending)."""
        sorts = self.var_sorts(ax)
        ex = [v for q in ax.quants if q.kind == "EXISTS" for v in q.vars]
        pts: List[int] = []
        for l in ax.lits:
            mine = [v for v in ex if v in l.atom.args]
            for vals in itertools.product(*(range(1, self.ast.sorts[sorts[v]] + 1) for v in mine)):
                e = dict(env)
                e.update(zip(mine, vals))
                pts.append(self.point(l, e))
        return [pts]

    def constants(self, ax: Axiom) -> Dict[str, set]:
        out: Dict[str, set] = {}
        for l in ax.lits:
            for x, s in zip(l.atom.args, self.ast.predicates.get(l.atom.pred, ())):
                if isinstance(x, int):
                    out.setdefault(s, set()).add(x)
        return out

    def patterns(self, ax: Axiom) -> Iterator[Dict[str, Union[int, Tuple[str]]]]:
        """Equality patterns of the universal variables.

        Each pattern maps a variable to an explicit constant of its sort or to
        a block tag; variables sharing a tag are equal.  NOTEQ variables avoid
        each other and the constants.
        """
        sorts = self.var_sorts(ax)
        noteq = {v for q in ax.quants if q.kind == "NOTEQ" for v in q.vars}
        univ = [v for q in ax.quants if q.kind != "EXISTS" for v in q.vars]
        consts = self.constants(ax)
        by_sort: Dict[str, List[str]] = {}
        for v in univ:
            by_sort.setdefault(sorts[v], []).append(v)
        per_sort = []
        for s, vs in by_sort.items():
            opts = []
            for assignment in self._sort_patterns(vs, noteq, sorted(consts.get(s, ())),
                                                  self.ast.sorts[s]):
                opts.append(assignment)
            per_sort.append(opts)
        for combo in itertools.product(*per_sort):
            env: Dict[str, Union[int, Tuple[str]]] = {}
            for a in combo:
                env.update(a)
            yield env

    def _sort_patterns(self, vs: List[str], noteq: set, consts: List[int], size: int):
        free_room = size - len(consts)
        n_noteq = sum(1 for v in vs if v in noteq)
        if n_noteq > free_room:
            raise ElaborationError("NOTEQ uses more distinct values than the sort holds")

        def rec(i, env, blocks):
            if i == len(vs):
                if len(blocks) <= free_room:
                    yield dict(env)
                return
            v = vs[i]
            strict = v in noteq
            if not strict:
                for c in consts:
                    env[v] = c
                    yield from rec(i + 1, env, blocks)
            for b in blocks:
                if strict and any(w in noteq for w in b):
                    continue
                env[v] = ("b", b[0])
                b.append(v)
                yield from rec(i + 1, env, blocks)
                b.pop()
            env[v] = ("b", v)
            blocks.append([v])
            yield from rec(i + 1, env, blocks)
            blocks.pop()
            del env[v]

        yield from rec(0, {}, [])

    def universal_envs(self, ax: Axiom) -> Iterator[Dict[str, int]]:
        """Every ground binding of the universal variables allowed by the quantifiers."""
        sorts = self.var_sorts(ax)
        consts = self.constants(ax)
        for pat in self.patterns(ax):
            blocks: Dict[Tuple, str] = {}
            for v, val in pat.items():
                if isinstance(val, tuple):
                    blocks.setdefault(val, sorts[v])
            keys = list(blocks)
            doms = [[x for x in range(1, self.ast.sorts[blocks[k]] + 1) if x not in consts.get(blocks[k], ())]
                    for k in keys]
            for vals in itertools.product(*doms):
                chosen = dict(zip(keys, vals))
                ok = True
                for s in set(blocks.values()):
                    used = [chosen[k] for k in keys if blocks[k] == s]
                    if len(used) != len(set(used)):
                        ok = False
                if ok:
                    yield {v: (chosen[val] if isinstance(val, tuple) else val) for v, val in pat.items()}

    def universal_clause(self, ax: Axiom, label: str) -> List[AugmentedClause]:
        sorts = self.var_sorts(ax)
        consts = self.constants(ax)
        preds = {l.atom.pred for l in ax.lits}
        out = []
        for pat in self.patterns(ax):
            env: Dict[str, int] = {}
            nxt: Dict[str, int] = {}
            tag_val: Dict[Tuple, int] = {}
            for v in sorted(pat, key=lambda v: self._first_use(ax, v)):
                val = pat[v]
                if isinstance(val, int):
                    env[v] = val
                    continue
                if val not in tag_val:
                    s = sorts[v]
                    free = [x for x in range(1, self.ast.sorts[s] + 1) if x not in consts.get(s, ())]
                    tag_val[val] = free[nxt.get(s, 0)]
                    nxt[s] = nxt.get(s, 0) + 1
                env[v] = tag_val[val]
            lits = set(self.expand_exists(ax, env)[0])
            if any(p ^ 1 in lits for p in lits):
                continue
            gens = []
            for s in {sorts[v] for v in pat if isinstance(pat[v], tuple)}:
                free = [x for x in range(1, self.ast.sorts[s] + 1) if x not in consts.get(s, ())]
                for cyc in _symmetric_gens(free):
                    gens.append(self.relabel(preds, s, {cyc[i]: cyc[(i + 1) % len(cyc)] for i in range(len(cyc))}))
            out.append(self.clause(lits, gens, label))
        return out

    def _first_use(self, ax: Axiom, v: str) -> Tuple[int, int]:
        for i, l in enumerate(ax.lits):
            if v in l.atom.args:
                return i, l.atom.args.index(v)
        return len(ax.lits), 0

    def relabel(self, preds: Iterable[str], sort: str, mapping: Dict[int, int]) -> Perm:
        """Rename domain elements of ``sort`` in every atom of ``preds``."""
        moves = {}
        for p in preds:
            sorts = self.ast.predicates.get(p, ())
            if sort not in sorts:
                continue
            for a in self.all_atoms(p):
                args = tuple(mapping.get(x, x) if s == sort else x for x, s in zip(a[1], sorts))
                if args != a[1]:
                    moves[2 * self.index[a]] = 2 * self.index[(p, args)]
        return self.perm_from_pairs(moves)

    def ground(self, ax: Axiom, pts: List[int], label: str) -> List[AugmentedClause]:
        r = ax.result
        if r.kind == "plain":
            lits = set(pts)
            if any(p ^ 1 in lits for p in lits):
                return []
            gens = [g for name in ax.groups for g in self.named[name]]
            return [self.clause(lits, gens, label)]
        if r.kind == "parity":
            return self.parity(pts, r.value, label)
        return self.cardinality(pts, r.op, r.value, label)

    def parity(self, pts: List[int], residue: int, label: str) -> List[AugmentedClause]:
        if not pts:
            raise ElaborationError(f"{label}: parity over zero literals")
        count: Dict[int, int] = {}
        for p in pts:
            residue ^= p & 1
            count[p >> 1] = count.get(p >> 1, 0) ^ 1
        vs = [v for v in sorted(count, key=[p >> 1 for p in pts].index) if count[v]]
        if not vs:
            return [] if residue == 0 else [self.clause((), (), label)]
        base = [2 * v for v in vs]
        if residue == 0:
            base[0] ^= 1
        gens = []
        for v in vs[1:]:
            img = list(range(2 * self.n))
            for u in (vs[0], v):
                img[2 * u], img[2 * u + 1] = 2 * u + 1, 2 * u
            gens.append(Perm(img))
        return [self.clause(base, gens, label)]

    def cardinality(self, pts: List[int], op: str, n: int, label: str) -> List[AugmentedClause]:
        if op == ">":
            return self.cardinality(pts, ">=", n + 1, label)
        if op == "<":
            return self.cardinality(pts, "<=", n - 1, label)
        if op == "=":
            return self.cardinality(pts, ">=", n, label) + self.cardinality(pts, "<=", n, label)
        if op == "<=":
            return self.cardinality([p ^ 1 for p in pts], ">=", len(pts) - n, label)
        # at least n of pts; a complementary pair contributes exactly one
        lits = list(pts)
        if len(set(lits)) != len(lits):
            raise ElaborationError(f"{label}: repeated literal in a cardinality constraint")
        s = set(lits)
        for p in list(lits):
            if p in s and p ^ 1 in s:
                s -= {p, p ^ 1}
                n -= 1
        lits = [p for p in lits if p in s]
        m = len(lits)
        if n <= 0:
            return []
        if n > m:
            raise ElaborationError(f"{label}: cardinality bound {n} exceeds the {m} literals")
        return [self.clause(lits[:m - n + 1], self.literal_sym(lits), label)]


def elaborate(ast: ProblemAST) -> Problem:
    return _Elaborator(ast).run()


def load(text: str) -> Problem:
    return elaborate(parse(text))
