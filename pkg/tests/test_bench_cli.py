import csv
import io
import itertools

import pytest

from augsat.bench_cli import (BudgetError, InstanceSpec, complete_graph, gen_clique, gen_pigeonhole, gen_tseitin,
                              main, parse_graph, parse_specs, read_dimacs, run_harness, to_dimacs)
from augsat.frontend import load, tokenize

PHP4_LISTING = """\
SORT pigeon 4 ;
SORT hole 3 ;
PREDICATE in(pigeon hole) ;
GROUP G < ((in[1 1] in[2 1]) (in[1 2] in[2 2]) (in[1 3] in[2 3]))
          ((in[1 1] in[3 1] in[4 1]) (in[1 2] in[3 2] in [4 2])
           (in[1 3] in[3 3] in [4 3]))
          ((in[1 1] in[1 2]) (in[2 1] in[2 2]) (in[3 1] in[3 2])
           (in[4 1] in[4 2]))
          ((in[1 1] in[1 3]) (in[2 1] in[2 3]) (in[3 1] in[3 3])
           (in[4 1] in[4 3])) > ;
-in[1 1] -in[2 1] GROUP G ;
in[1 1] in[1 2] in[1 3] GROUP G ;
"""


def toks(text):
    return [(t.kind, t.text) for t in tokenize(text)]


def brute_sat(nv, cnf):
    for bits in itertools.product((0, 1), repeat=nv):
        if all(any((x > 0) == bool(bits[abs(x) - 1]) for x in c) for c in cnf):
            return True
    return False


def test_pigeonhole_generator_reproduces_listing():
    assert toks(gen_pigeonhole(4)) == toks(PHP4_LISTING)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_pigeonhole_encodings_have_equal_ground_sets(n):
    sets = [{frozenset(c) for c in read_dimacs(to_dimacs(load(gen_pigeonhole(n, e))))[1]}
            for e in ("group", "quantified", "ground")]
    assert sets[0] == sets[1] == sets[2]
    assert len(sets[0]) == n + (n - 1) * n * (n - 1) // 2


def test_dimacs_counts():
    assert to_dimacs(load(gen_pigeonhole(4))).splitlines()[0] == "p cnf 12 22"
    assert to_dimacs(load(gen_tseitin(complete_graph(4)))).splitlines()[0] == "p cnf 6 16"
    assert to_dimacs(load(gen_clique(3, 4))).splitlines()[0].split()[3] == "67"
    named = [{frozenset(p.lit_name(x) for x in inst) for c in p.clauses for inst in c.instances()}
             for p in (load(gen_clique(3, 4, "ground")), load(gen_clique(3, 4)))]
    assert named[0] == named[1]


def test_dimacs_budget():
    with pytest.raises(BudgetError):
        to_dimacs(load(gen_pigeonhole(5)), budget=10)


@pytest.mark.parametrize("text", [
    "1 2 0\n",
    "p cnf 2 1\n1 3 0\n",
    "p cnf 2 2\n1 2 0\n",
    "p cnf 2 1\n1 2\n",
    "p cnf 2 1\np cnf 2 1\n1 0\n",
    "p dnf 2 1\n1 0\n",
])
def test_strict_dimacs_reader_rejects(text):
    with pytest.raises(ValueError):
        read_dimacs(text)


def test_dimacs_reader_accepts_comments_and_wrapped_clauses():
    assert read_dimacs("c hi\np cnf 3 2\n1 -2\n 3 0 -1 0\n") == (3, [[1, -2, 3], [-1]])


@pytest.mark.parametrize("text", [gen_pigeonhole(3), gen_pigeonhole(4), gen_tseitin(complete_graph(3)),
                                  gen_tseitin(complete_graph(4)), gen_tseitin((4, [(1, 2), (2, 3), (3, 4)]))])
def test_small_instances_unsat_by_exhaustion(text):
    nv, cnf = read_dimacs(to_dimacs(load(text)))
    assert not brute_sat(nv, cnf)


def test_tseitin_without_charge_is_sat():
    nv, cnf = read_dimacs(to_dimacs(load(gen_tseitin(complete_graph(4), charge_vertex=0))))
    assert brute_sat(nv, cnf)


def test_tseitin_long_edge_names():
    text = gen_tseitin(complete_graph(8))
    assert "e1_2" in text and load(text).nvars == 28


def test_parse_graph():
    assert parse_graph("3\n1 2 ; 3 2\n") == (3, [(1, 2), (2, 3)])
    with pytest.raises(ValueError):
        parse_graph("3 1 1")
    with pytest.raises(ValueError):
        gen_tseitin((3, [(1, 2)]))


def test_clique_generator_shape():
    p = load(gen_clique(3, 4))
    assert p.nvars == 26
    assert [c.num_instances() for c in p.clauses] == [4, 3, 12, 12, 36]


def test_parse_specs():
    specs = parse_specs("# comment\npigeonhole 3..5\nclique 3 4 ground\n\ntseitin 4\n")
    assert [s.ident for s in specs] == ["pigeonhole-3-group", "pigeonhole-4-group", "pigeonhole-5-group",
                                        "clique-3-4-ground", "tseitin-4-group"]


def test_harness_empty_list_is_header_only():
    assert run_harness([]).strip() == "instance,family,param,result,decisions,conflicts,transport_nodes,unit_tests," \
                                      "learned,ms"


def test_harness_rows():
    out = run_harness([InstanceSpec("pigeonhole", ("3",)), InstanceSpec("nosuch", ("1",))])
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows[0]["result"] == "UNSAT" and int(rows[0]["decisions"]) >= 0
    assert rows[1]["result"] == "LIMIT"


def test_cli_exit_codes(tmp_path, capsys):
    f = tmp_path / "php.zap"
    f.write_text(gen_pigeonhole(4))
    assert main(["solve", str(f)]) == 20
    assert "s UNSATISFIABLE" in capsys.readouterr().out
    g = tmp_path / "sat.zap"
    g.write_text("a b ;\n-a ;\n")
    assert main(["solve", str(g)]) == 10
    assert "v -a b" in capsys.readouterr().out
    assert main(["gen", "pigeonhole", "4"]) == 0
    assert toks(capsys.readouterr().out) == toks(PHP4_LISTING)
    assert main(["dimacs", str(f)]) == 0
    assert capsys.readouterr().out.startswith("p cnf 12 22")
    spec = tmp_path / "specs.txt"
    spec.write_text("pigeonhole 3..4\n")
    out = tmp_path / "out.csv"
    assert main(["--out", str(out), "bench", str(spec)]) == 0
    assert len(out.read_text().splitlines()) == 3
