"""Benchmark generators, DIMACS export, the CSV harness and the ``augsat`` command."""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

from .augmented import to_dimacs as lit_to_dimacs
from .frontend import Problem, load
from .solver import Solver, SolverConfig

log = logging.getLogger(__name__)

CSV_COLUMNS = ["instance", "family", "param", "result", "decisions", "conflicts", "transport_nodes",
               "unit_tests", "learned", "ms"]
ENCODINGS = ("group", "quantified", "ground")


class BudgetError(RuntimeError):
    pass


# --- generators ---------------------------------------------------------

def _cycles_text(cycles: Iterable[Sequence[str]]) -> str:
    return "(" + " ".join("(" + " ".join(c) + ")" for c in cycles) + ")"


def _sym_cycles(m: int) -> List[List[int]]:
    """Point sequences for (1 2) and (1 3 4 ... m), which generate Sym(m)."""
    out = []
    if m >= 2:
        out.append([1, 2])
    if m >= 3:
        out.append([1] + list(range(3, m + 1)))
    return out


def gen_pigeonhole(n: int, encoding: str = "group") -> str:
    """``n`` pigeons in ``n - 1`` holes."""
    if n < 2:
        raise ValueError("pigeonhole needs at least 2 pigeons")
    h = n - 1
    head = [f"SORT pigeon {n} ;", f"SORT hole {h} ;", "PREDICATE in(pigeon hole) ;", ""]
    if encoding == "quantified":
        return "\n".join(head + ["NOTEQ (x y z) -in[x z] -in[y z] ;", "FORALL(z) EXISTS(h) in[z h] ;", ""])
    if encoding == "ground":
        lines = [" ".join(f"in[{p} {j}]" for j in range(1, h + 1)) + " ;" for p in range(1, n + 1)]
        lines += [f"-in[{p} {j}] -in[{q} {j}] ;"
                  for j in range(1, h + 1) for p in range(1, n + 1) for q in range(p + 1, n + 1)]
        return "\n".join(head + lines + [""])
    if encoding != "group":
        raise ValueError(f"unknown encoding {encoding!r}")
    gens = []
    for cyc in _sym_cycles(n):
        gens.append(_cycles_text([[f"in[{p} {j}]" for p in cyc] for j in range(1, h + 1)]))
    for cyc in _sym_cycles(h):
        gens.append(_cycles_text([[f"in[{p} {j}]" for j in cyc] for p in range(1, n + 1)]))
    lines = ["GROUP G < " + "\n          ".join(gens) + " > ;", ""]
    first_hole = "-in[1 1] -in[2 1] GROUP G ;" if n >= 2 else ""
    lines += [first_hole, " ".join(f"in[1 {j}]" for j in range(1, h + 1)) + " GROUP G ;", ""]
    return "\n".join(head + lines)


Graph = Tuple[int, List[Tuple[int, int]]]


def complete_graph(n: int) -> Graph:
    return n, [(u, v) for u in range(1, n + 1) for v in range(u + 1, n + 1)]


def parse_graph(text: str) -> Graph:
    """``n`` followed by edge pairs ``u v``; separators may be whitespace or ``;``."""
    toks = text.replace(";", " ").split()
    if not toks:
        raise ValueError("empty graph file")
    nums = [int(t) for t in toks]
    n, rest = nums[0], nums[1:]
    if len(rest) % 2:
        raise ValueError("odd number of edge endpoints")
    edges = []
    for u, v in zip(rest[::2], rest[1::2]):
        if not (1 <= u <= n and 1 <= v <= n) or u == v:
            raise ValueError(f"bad edge {u} {v}")
        edges.append((min(u, v), max(u, v)))
    return n, sorted(set(edges))


def _connected(g: Graph) -> bool:
    n, edges = g
    adj = {v: set() for v in range(1, n + 1)}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    seen, todo = {1}, [1]
    while todo:
        for w in adj[todo.pop()]:
            if w not in seen:
                seen.add(w)
                todo.append(w)
    return len(seen) == n


def _edge_names(edges: Sequence[Tuple[int, int]]) -> dict:
    if len(edges) <= 26:
        return {e: chr(ord("a") + i) for i, e in enumerate(edges)}
    return {e: f"e{e[0]}_{e[1]}" for e in edges}


def gen_tseitin(graph: Graph, charge_vertex: int = 1, encoding: str = "group") -> str:
    """One parity axiom per vertex; the charge is 1 at ``charge_vertex`` only."""
    n, edges = graph
    if n < 1 or not _connected(graph):
        raise ValueError("Tseitin graphs must be connected")
    name = _edge_names(edges)
    lines = []
    for v in range(1, n + 1):
        up = [e for e in edges if e[0] == v]
        down = [e for e in edges if e[1] == v]
        vs = [name[e] for e in up + down]
        r = 1 if v == charge_vertex else 0
        if encoding == "group":
            lines.append(" ".join(vs) + f" %2= {r} ;")
        elif encoding == "ground":
            for signs in itertools.product((0, 1), repeat=len(vs)):
                # forbid each assignment of the wrong parity
                if sum(signs) % 2 != r:
                    lines.append(" ".join(("-" if s else "") + x for s, x in zip(signs, vs)) + " ;")
        else:
            raise ValueError(f"unknown encoding {encoding!r}")
    return "\n".join(lines) + "\n"


def gen_clique(c: int, g: int, encoding: str = "group") -> str:
    """A graph on ``g`` nodes containing a ``c``-clique, to be coloured with ``c - 1`` colours."""
    if not 2 <= c <= g:
        raise ValueError("clique instances need 2 <= c <= g")
    k = c - 1
    head = [f"SORT color {k} ;", f"SORT node {g} ;", f"SORT clique {c} ;", "",
            "PREDICATE edge( node node ) ;", "PREDICATE color( node color ) ;",
            "PREDICATE clique( clique node ) ;", ""]
    edge = lambda i, j: f"edge[{min(i, j)} {max(i, j)}]"
    if encoding == "ground":
        lines = [" ".join(f"color[{i} {l}]" for l in range(1, k + 1)) + " ;" for i in range(1, g + 1)]
        lines += [" ".join(f"clique[{i} {j}]" for j in range(1, g + 1)) + " ;" for i in range(1, c + 1)]
        pairs = [(i, j) for i in range(1, g + 1) for j in range(i + 1, g + 1)]
        lines += [f"-{edge(i, j)} -color[{i} {l}] -color[{j} {l}] ;" for i, j in pairs for l in range(1, k + 1)]
        lines += [f"-clique[{i} {j}] -clique[{q} {j}] ;"
                  for i in range(1, c + 1) for q in range(i + 1, c + 1) for j in range(1, g + 1)]
        lines += [f"{edge(i, j)} -clique[{a} {i}] -clique[{b} {j}] ;"
                  for i, j in pairs for a in range(1, c + 1) for b in range(1, c + 1) if a != b]
        return "\n".join(head + lines + [""])
    if encoding != "group":
        raise ValueError(f"unknown encoding {encoding!r}")

    def group(name, gens):
        body = "\n".join(_cycles_text(cs) for cs in gens)
        return f"GROUP {name} <\n{body}\n> ;"

    adjacent = lambda m: [[j, j + 1] for j in range(1, m)]
    color_gens = [[[f"color[{i} {a}]", f"color[{i} {b}]"] for i in range(1, g + 1)] for a, b in adjacent(k)]
    clique_gens = [[[f"clique[{a} {j}]", f"clique[{b} {j}]"] for j in range(1, g + 1)] for a, b in adjacent(c)]
    swap = []
    swap += [[edge(1, j), edge(2, j)] for j in range(3, g + 1)]
    swap += [[f"color[1 {l}]", f"color[2 {l}]"] for l in range(1, k + 1)]
    swap += [[f"clique[{i} 1]", f"clique[{i} 2]"] for i in range(1, c + 1)]
    node_gens = [swap]
    if g >= 3:
        sigma = {v: v for v in range(1, g + 1)}
        for v in range(2, g + 1):
            sigma[v] = v + 1 if v < g else 2
        rot = [[f"color[{v} {l}]" for v in range(2, g + 1)] for l in range(1, k + 1)]
        done = set()
        for e in [(i, j) for i in range(1, g + 1) for j in range(i + 1, g + 1)]:
            if e in done:
                continue
            orbit = [e]
            done.add(e)
            while True:
                u, w = orbit[-1]
                nxt = tuple(sorted((sigma[u], sigma[w])))
                if nxt == e:
                    break
                orbit.append(nxt)
                done.add(nxt)
            if len(orbit) > 1:
                rot.append([edge(*x) for x in orbit])
        rot += [[f"clique[{i} {v}]" for v in range(2, g + 1)] for i in range(1, c + 1)]
        node_gens.append([cy for cy in rot if len(cy) > 1])
    groups = []
    if color_gens:
        groups.append(group("COLOR", color_gens))
    if clique_gens:
        groups.append(group("CLIQUE", clique_gens))
    groups.append(group("NODES", node_gens))
    ref = lambda *names: " ".join(nm for nm in names if nm != "COLOR" or color_gens)
    lines = [
        " ".join(f"color[1 {l}]" for l in range(1, k + 1)) + " GROUP NODES ;",
        " ".join(f"clique[1 {j}]" for j in range(1, g + 1)) + " GROUP CLIQUE ;",
        f"-{edge(1, 2)} -color[1 1] -color[2 1] GROUP {ref('NODES', 'COLOR')} ;",
        "-clique[1 1] -clique[2 1] GROUP NODES CLIQUE ;",
        f"-clique[1 1] -clique[2 2] {edge(1, 2)} GROUP NODES CLIQUE ;",
    ]
    return "\n".join(head + groups + [""] + lines + [""])


def generate(family: str, params: Sequence[str], encoding: str = "group") -> str:
    if family == "pigeonhole":
        return gen_pigeonhole(int(params[0]), encoding)
    if family == "tseitin":
        p = params[0]
        graph = complete_graph(int(p)) if p.isdigit() else parse_graph(open(p).read())
        charge = int(params[1]) if len(params) > 1 else 1
        return gen_tseitin(graph, charge, encoding)
    if family == "clique":
        return gen_clique(int(params[0]), int(params[1]), encoding)
    raise ValueError(f"unknown family {family!r}")


# --- DIMACS -------------------------------------------------------------

def ground_instances(problem: Problem, budget: int = 1_000_000) -> List[Tuple[int, ...]]:
    """Distinct ground instances as DIMACS integer tuples."""
    seen = set()
    out = []
    for c in problem.clauses:
        for inst in c.instances():
            if inst in seen:
                continue
            seen.add(inst)
            if len(seen) > budget:
                raise BudgetError(f"more than {budget} ground clauses")
            out.append(tuple(sorted((lit_to_dimacs(p) for p in inst), key=lambda x: (abs(x), x))))
    return out


def to_dimacs(problem: Problem, budget: int = 1_000_000) -> str:
    cls = ground_instances(problem, budget)
    lines = [f"p cnf {problem.nvars} {len(cls)}"]
    lines += [" ".join(map(str, c)) + (" 0" if c else "0") for c in cls]
    return "\n".join(lines) + "\n"


def read_dimacs(text: str) -> Tuple[int, List[List[int]]]:
    """Strict reader: one header, zero-terminated clauses, count must match."""
    nv = nc = None
    clauses: List[List[int]] = []
    cur: List[int] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if nv is not None or len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"bad header {line!r}")
            nv, nc = int(parts[2]), int(parts[3])
            continue
        if nv is None:
            raise ValueError("clause before header")
        for t in line.split():
            x = int(t)
            if x == 0:
                clauses.append(cur)
                cur = []
            elif abs(x) > nv:
                raise ValueError(f"literal {x} out of range")
            else:
                cur.append(x)
    if cur or nv is None or len(clauses) != nc:
        raise ValueError("clause count does not match header")
    return nv, clauses


# --- harness ------------------------------------------------------------

@dataclass
class InstanceSpec:
    family: str
    params: Tuple[str, ...]
    encoding: str = "group"

    @property
    def ident(self) -> str:
        return "-".join((self.family,) + tuple(p.replace("/", "_") for p in self.params) + (self.encoding,))


def _expand(tok: str) -> List[str]:
    if ".." in tok:
        a, b = tok.split("..")
        return [str(i) for i in range(int(a), int(b) + 1)]
    return [tok]


def parse_specs(text: str) -> List[InstanceSpec]:
    """Lines ``family params... [encoding]``; integer params may be ranges ``a..b``."""
    out = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        fam, rest = toks[0], toks[1:]
        enc = "group"
        if rest and rest[-1] in ENCODINGS:
            enc = rest.pop()
        for combo in itertools.product(*(_expand(t) for t in rest)):
            out.append(InstanceSpec(fam, tuple(combo), enc))
    return out


def run_instance(spec: InstanceSpec, config: SolverConfig) -> dict:
    row = {"instance": spec.ident, "family": spec.family, "param": ",".join(spec.params)}
    try:
        problem = load(generate(spec.family, spec.params, spec.encoding))
        s = Solver(problem.clauses, problem.nvars, config)
        r = s.solve()
        st = r.stats
        row.update(result=r.status if r.status != "UNKNOWN" else "LIMIT", decisions=st.decisions,
                   conflicts=st.conflicts, transport_nodes=st.transport.nodes, unit_tests=st.unit_tests,
                   learned=st.learned, ms=round(st.ms, 1))
    except Exception as e:  # the harness reports and keeps going
        log.warning("%s failed: %s", spec.ident, e)
        row.update(result="LIMIT", decisions=0, conflicts=0, transport_nodes=0, unit_tests=0, learned=0, ms=0)
    return row


def run_harness(specs: Sequence[InstanceSpec], config: Optional[SolverConfig] = None, jobs: int = 1) -> str:
    config = config or SolverConfig(time_limit=60.0)
    if jobs > 1 and len(specs) > 1:
        with ProcessPoolExecutor(jobs) as ex:
            rows = list(ex.map(run_instance, specs, [config] * len(specs)))
    else:
        rows = [run_instance(s, config) for s in specs]
    buf = io.StringIO()
    w = csv.DictWriter(buf, CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


# --- command line -------------------------------------------------------

def _config(args) -> SolverConfig:
    return SolverConfig(relevance_k=args.relevance_k, node_limit=args.node_limit, lex_prune=not args.no_lex_prune,
                        min_resolvents=not args.base_resolvents, trace=args.trace, time_limit=args.time_limit)


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = argparse.ArgumentParser(prog="augsat", description="SAT over clauses augmented with permutation groups")
    ap.add_argument("--relevance-k", type=int, default=3)
    ap.add_argument("--node-limit", type=int, default=100, help="transport budget when searching resolvents")
    ap.add_argument("--no-lex-prune", action="store_true")
    ap.add_argument("--base-resolvents", action="store_true", help="resolve base instances as given")
    ap.add_argument("--trace", action="store_true")
    ap.add_argument("--time-limit", type=float, default=60.0, help="seconds per instance")
    ap.add_argument("--out")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)
    p = sub.add_parser("solve")
    p.add_argument("file")
    p = sub.add_parser("gen")
    p.add_argument("family", choices=["pigeonhole", "tseitin", "clique"])
    p.add_argument("params", nargs="+")
    p.add_argument("--encoding", choices=ENCODINGS, default="group")
    p = sub.add_parser("dimacs")
    p.add_argument("file")
    p.add_argument("--budget", type=int, default=1_000_000)
    p = sub.add_parser("bench")
    p.add_argument("specfile")
    p.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")

    if args.cmd == "gen":
        _emit(generate(args.family, args.params, args.encoding), args.out)
        return 0
    if args.cmd == "dimacs":
        with open(args.file) as f:
            _emit(to_dimacs(load(f.read()), args.budget), args.out)
        return 0
    if args.cmd == "bench":
        with open(args.specfile) as f:
            specs = parse_specs(f.read())
        _emit(run_harness(specs, _config(args), args.jobs), args.out)
        return 0
    with open(args.file) as f:
        problem = load(f.read())
    r = Solver(problem.clauses, problem.nvars, _config(args)).solve()
    lines = [f"c {t}" for t in r.trace]
    st = r.stats
    lines.append(f"c decisions {st.decisions} conflicts {st.conflicts} transport_nodes {st.transport.nodes} "
                 f"unit_tests {st.unit_tests} learned {st.learned} ms {st.ms:.1f}")
    if r.status == "SAT":
        lines.append("s SATISFIABLE")
        lines.append("v " + " ".join(problem.lit_name(2 * (abs(x) - 1) + (x < 0)) for x in r.model))
        code = 10
    elif r.status == "UNSAT":
        lines.append("s UNSATISFIABLE")
        code = 20
    else:
        lines.append("s UNKNOWN")
        code = 0
    _emit("\n".join(lines) + "\n", args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
