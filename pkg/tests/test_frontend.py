import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from augsat.bench_cli import gen_pigeonhole
from augsat.frontend import ElaborationError, ParseError, ProblemAST, elaborate, format_problem, load, parse

PHP4_GROUP = """\
// domain specs
SORT pigeon 4 ;
SORT hole 3 ;

// predicate specs
PREDICATE in(pigeon hole) ;

// group specs
GROUP G < ((in[1 1] in[2 1]) (in[1 2] in[2 2]) (in[1 3] in[2 3]))
          ((in[1 1] in[3 1] in[4 1]) (in[1 2] in[3 2] in [4 2])
           (in[1 3] in[3 3] in [4 3])) // permute pigeons
          ((in[1 1] in[1 2]) (in[2 1] in[2 2]) (in[3 1] in[3 2])
           (in[4 1] in[4 2])) // permute holes
          ((in[1 1] in[1 3]) (in[2 1] in[2 3]) (in[3 1] in[3 3])
           (in[4 1] in[4 3])) > ;

// group-based encoding
-in[1 1] -in[2 1] GROUP G ;
in[1 1] in[1 2] in[1 3] GROUP G ;
"""

PHP9_QUANT = """\
SORT pigeon 9;
SORT hole 8;
PREDICATE in(pigeon hole);

// quantification-based encoding
NOTEQ (x y z) -in[x z] -in[y z] ;
FORALL(z) EXISTS(h) in[z h] ;
"""


def instance_names(problem):
    return {frozenset(problem.lit_name(p) for p in inst) for c in problem.clauses for inst in c.instances()}


def test_group_listing_structure():
    ast = parse(PHP4_GROUP)
    assert ast.sorts == {"pigeon": 4, "hole": 3}
    assert ast.predicates == {"in": ("pigeon", "hole")}
    assert len(ast.groups["G"]) == 4
    assert len(ast.axioms) == 2
    p = elaborate(ast)
    assert p.nvars == 12
    assert all(c.group.order() == 144 for c in p.clauses)


def test_quantified_listing_structure():
    ast = parse(PHP9_QUANT)
    kinds = [[q.kind for q in ax.quants] for ax in ast.axioms]
    assert kinds == [["NOTEQ"], ["FORALL", "EXISTS"]]
    p = elaborate(ast)
    assert p.nvars == 72
    assert sum(c.num_instances() for c in p.clauses) == 9 + 8 * 36


def test_encodings_agree_for_four_pigeons():
    quant = PHP9_QUANT.replace("pigeon 9", "pigeon 4").replace("hole 8", "hole 3")
    a, b = load(PHP4_GROUP), load(quant)
    assert a.atoms == b.atoms
    assert instance_names(a) == instance_names(b)
    assert len(instance_names(a)) == 22


def test_empty_input():
    assert parse("") == ProblemAST()
    assert parse("// nothing\n") == ProblemAST()
    assert elaborate(parse("")).clauses == []


@pytest.mark.parametrize("text", [PHP4_GROUP, PHP9_QUANT, gen_pigeonhole(5, "ground"),
                                  "a ⊕ b ⊕ c = 1 ;\nx1 x2 x3 >= 2 ;\n-p q < 2 ;"])
def test_print_round_trip(text):
    ast = parse(text)
    assert parse(format_problem(ast)) == ast


@pytest.mark.parametrize("text,where", [
    ("SORT s 2 ;\nPREDICATE p(s) ;\np[3] ;", (3, 1)),
    ("SORT s 2 ;\nPREDICATE p(t) ;", (2, 13)),
    ("SORT s 2 ;\nPREDICATE p(s) ;\np[1 1] ;", (3, 1)),
    ("q GROUP H ;", (1, 9)),
    ("SORT s 2 ;\nPREDICATE p(s) ;\np[x] ;", (3, 1)),
    ("a b", (1, 4)),
])
def test_positioned_errors(text, where):
    with pytest.raises(ParseError) as e:
        parse(text)
    assert (e.value.line, e.value.col) == where


def test_cardinality_instances_are_all_small_subsets():
    for m in range(2, 8):
        for n in range(1, m + 1):
            names = [f"x{i}" for i in range(1, m + 1)]
            p = load(" ".join(names) + f" >= {n} ;")
            want = {frozenset(c) for c in itertools.combinations(names, m - n + 1)}
            assert instance_names(p) == want


def test_cardinality_example():
    p = load("x1 x2 x3 >= 2 ;")
    (c,) = p.clauses
    assert [p.lit_name(x) for x in c.lits] == ["x1", "x2"]
    assert c.group.order() == 6


def test_cardinality_bound_out_of_range():
    with pytest.raises(ElaborationError):
        load("a b >= 3 ;")


def _assignments(m):
    return itertools.product((0, 1), repeat=m)


def _satisfies(problem, bits):
    true = {2 * v + (0 if bits[v] else 1) for v in range(problem.nvars)}
    return all(any(p in true for p in inst) for c in problem.clauses for inst in c.instances())


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 1), st.integers(0, 10 ** 6))
def test_parity_models_match_residue(m, r, seed):
    rng = random.Random(seed)
    signs = [rng.random() < 0.4 for _ in range(m)]
    text = " ".join(("-" if s else "") + f"v{i}" for i, s in enumerate(signs)) + f" %2= {r} ;"
    p = load(text)
    order = [p.name(v) for v in range(p.nvars)]
    for bits in _assignments(m):
        val = dict(zip(order, bits))
        total = sum(1 - val[f"v{i}"] if s else val[f"v{i}"] for i, s in enumerate(signs))
        assert _satisfies(p, bits) == (total % 2 == r)


def test_parity_example_instances():
    p = load("a b c %2= 1 ;")
    got = {frozenset(x) for x in instance_names(p)}
    want = set()
    for signs in _assignments(3):
        if sum(signs) % 2 == 0:
            want.add(frozenset(("-" if s else "") + v for s, v in zip(signs, "abc")))
    assert got == want and len(got) == 4
    assert instance_names(load("a ⊕ b ⊕ c = 1 ;")) == instance_names(p)


def test_parity_with_cancelling_literals():
    assert load("a -a %2= 1 ;").clauses == []
    (c,) = load("a -a %2= 0 ;").clauses
    assert list(c.instances()) == [frozenset()]


def test_noteq_with_too_many_variables():
    with pytest.raises(ElaborationError):
        load("SORT s 2 ;\nPREDICATE p(s s s) ;\nNOTEQ (x y z) p[x y z] ;")


def test_forall_includes_equal_values():
    # FORALL lets x and y coincide; NOTEQ does not
    p = load("SORT s 3 ;\nPREDICATE p(s) ;\nFORALL(x y) -p[x] -p[y] ;")
    q = load("SORT s 3 ;\nPREDICATE p(s) ;\nNOTEQ(x y) -p[x] -p[y] ;")
    assert frozenset({"-p[1]"}) in instance_names(p)
    assert frozenset({"-p[1]"}) not in instance_names(q)
    assert len(instance_names(p)) == 6 and len(instance_names(q)) == 3


def test_quantified_cardinality_expands():
    p = load("SORT s 3 ;\nPREDICATE p(s s) ;\nFORALL(x) p[x 1] p[x 2] p[x 3] >= 2 ;")
    assert len(p.clauses) == 3
    assert all(c.num_instances() == 3 for c in p.clauses)
