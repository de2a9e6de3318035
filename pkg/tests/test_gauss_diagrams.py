from __future__ import annotations
from fractions import Fraction

import pytest

from knotstrata.errors import InputError
from knotstrata.gauss_diagrams import (
    GaussDiagram,
    add_kink,
    builtin_formulas,
    count_representations,
    evaluate_formula,
    format_formula,
    format_gauss,
    mirror,
    parse_formula,
    parse_gauss,
    project_to_diagram,
    resolve_formula,
    reverse,
)

TREFOIL = "compact: O1+ U2+ O3+ U1+ O2+ U3+"
V2 = "1 * D[|1>3, 4>2]"
V3 = "1/2 * D[1>3, 2>5, 4>6] + 1/3 * D[4>1, 2>5, 6>3]"


@pytest.fixture
def formulas():
    return builtin_formulas()


# ---------------- Gauss codes ----------------
def test_parse_trefoil():
    d = parse_gauss(TREFOIL)
    assert d.kind == "compact"
    assert d.n_crossings == 3
    assert d.positions() == {1: (3, 0), 2: (1, 4), 3: (5, 2)}
    assert format_gauss(d) == TREFOIL


def test_basepoint_mark_rotates_the_word():
    d = parse_gauss("compact: O2+ U3+ @ O1+ U2+ O3+ U1+")
    assert d == parse_gauss(TREFOIL)


def test_unicode_minus_and_case():
    d = parse_gauss("COMPACT: o1− u1−")
    assert d.signs == {1: -1}
    assert format_gauss(d) == "compact: O1- U1-"


def test_mirror_and_reverse_words():
    d = parse_gauss(TREFOIL)
    assert format_gauss(mirror(d)) == "compact: U1- O2- U3- O1- U2- O3-"
    assert format_gauss(reverse(d)) == "compact: U3+ O2+ U1+ O3+ U2+ O1+"
    assert mirror(mirror(d)) == d


@pytest.mark.parametrize("text,offset,fragment", [
    ("foo: O1+ U1+", 0, "must start with"),
    ("compact: O1+ U1+ X2+", 17, "malformed token"),
    ("compact: O1+ U1-", 13, "conflicting signs"),
    ("compact: O1+ O1+", 13, "over twice"),
    ("long: O1+ @ U1+", 10, "basepoint"),
    ("compact: O1− U1+", 15, "conflicting signs"),
])
def test_parse_errors_carry_byte_offsets(text, offset, fragment):
    with pytest.raises(InputError, match=fragment) as exc:
        parse_gauss(text)
    assert exc.value.where["offset"] == offset


def test_incomplete_crossings_are_listed():
    with pytest.raises(InputError, match=r"crossing ids \[1\] are incomplete") as exc:
        parse_gauss("compact: O1+ U2+ O2+")
    assert exc.value.where["ids"] == [1]
    assert exc.value.where["offset"] == 9


def test_kinks():
    d = parse_gauss(TREFOIL)
    k = add_kink(d, 2, sign=-1)
    assert k.n_crossings == 4
    assert k.word[2:4] == ((4, True), (4, False))
    with pytest.raises(InputError):
        add_kink(d, 7)


def test_diagram_validation():
    with pytest.raises(ValueError):
        GaussDiagram(kind="compact", signs={1: 1}, word=((1, True), (1, True)))
    with pytest.raises(ValueError):
        GaussDiagram(kind="compact", signs={1: 2}, word=((1, True), (1, False)))


# ---------------- arrow formulas ----------------
def test_builtin_formulas_round_trip(formulas):
    assert format_formula(formulas["v2"]) == V2
    assert format_formula(formulas["v3"]) == V3
    assert formulas["v2"].punctured
    assert not formulas["v3"].punctured
    assert resolve_formula("V2") == formulas["v2"]
    assert resolve_formula(V3) == formulas["v3"]


def test_negative_terms():
    f = parse_formula("D[1>2] - 2 * D[2>1]")
    assert [c for c, _ in f.terms] == [Fraction(1), Fraction(-2)]
    assert format_formula(f) == "1 * D[1>2] - 2 * D[2>1]"


@pytest.mark.parametrize("text,fragment", [
    ("1 * D[1>1]", "invalid arrow diagram"),
    ("D[|1>3, 4>2] + D[1>3, 2>4]", "mix punctured"),
    ("2 D[1>2]", "missing"),
    ("D[1>2] D[1>2]", "joined"),
    ("D[1>2, x]", "malformed arrow"),
    ("D[1>2 |]", "must open"),
    ("", "empty"),
])
def test_formula_errors(text, fragment):
    with pytest.raises(InputError, match=fragment):
        parse_formula(text)


def test_single_arrow_counts():
    d = parse_gauss(TREFOIL)
    assert count_representations(parse_formula("D[|1>2]").terms[0][1], d) == 1
    assert count_representations(parse_formula("D[|2>1]").terms[0][1], d) == 2
    assert count_representations(parse_formula("D[1>2]").terms[0][1], d) == 3


# ---------------- values ----------------
def test_trefoil_values(formulas):
    d = parse_gauss(TREFOIL)
    assert evaluate_formula(formulas["v2"], d) == 1
    assert evaluate_formula(formulas["v3"], d) == 1
    assert evaluate_formula(formulas["v3"], mirror(d)) == -1
    assert evaluate_formula(formulas["v2"], mirror(d)) == 1
    assert evaluate_formula(formulas["v2"], reverse(d)) == 1


def test_values_ignore_kinks(formulas):
    d = parse_gauss(TREFOIL)
    for pos in range(len(d.word) + 1):
        for sign in (1, -1):
            k = add_kink(d, pos, sign=sign, over_first=pos % 2 == 0)
            assert evaluate_formula(formulas["v2"], k) == 1
            assert evaluate_formula(formulas["v3"], k) == 1


def test_long_diagrams(formulas):
    d = parse_gauss(TREFOIL.replace("compact", "long"))
    assert evaluate_formula(formulas["v2"], d) == 1
    with pytest.raises(InputError, match="absolute"):
        evaluate_formula(formulas["v3"], d)
    assert evaluate_formula(formulas["v3"], d.closed()) == 1


def test_projected_fixtures(knots, formulas):
    tre = project_to_diagram(knots["trefoil"])
    assert tre.n_crossings == 3
    assert evaluate_formula(formulas["v2"], tre) == 1
    assert abs(evaluate_formula(formulas["v3"], tre)) == 1
    eight = project_to_diagram(knots["figure_eight"])
    assert eight.n_crossings == 4
    assert evaluate_formula(formulas["v2"], eight) == -1
    assert evaluate_formula(formulas["v3"], eight) == 0
    long_tre = project_to_diagram(knots["long_trefoil"])
    assert long_tre.kind == "long"
    assert evaluate_formula(formulas["v2"], long_tre) == 1
    with pytest.raises(InputError):
        project_to_diagram(knots["trefoil"], n=4)


def _v2_by_pairs(d: GaussDiagram) -> int:
    pos, total = d.positions(), 0
    for a, (au, ao) in pos.items():
        for b, (bu, bo) in pos.items():
            if a != b and au < bo < ao < bu:
                total += d.signs[a] * d.signs[b]
    return total


def test_v2_agrees_with_pair_count(knots, formulas):
    d = parse_gauss(TREFOIL)
    cases = [d, mirror(d), reverse(d), add_kink(d, 2, sign=-1), add_kink(mirror(d), 5, over_first=False),
             project_to_diagram(knots["figure_eight"]), GaussDiagram(kind="compact", signs={})]
    for case in cases:
        assert evaluate_formula(formulas["v2"], case) == _v2_by_pairs(case)
    assert evaluate_formula(formulas["v2"], cases[-1]) == 0


# ---------------- Reidemeister corpus ----------------
UNKNOTS = ["compact: ", "compact: O1+ U1+", "compact: O1+ O2- U2- U1+"]
# closed 3-braids s1 s2 s1 s2 and s2 s1 s2 s2, one braid relation (Reidemeister III) apart
BRAID_TREFOILS = ["compact: O1+ O2+ U4+ U1+ O3+ O4+ U2+ U3+", "compact: O2+ O3+ U4+ O1+ U3+ O4+ U1+ U2+"]


def _bigon(d: GaussDiagram, over_at: int, under_at: int, sign: int = 1) -> GaussDiagram:
    """Reidemeister II: one strand pushed across another, before word[over_at] and word[under_at]."""
    a = max(d.signs, default=0) + 1
    b = a + 1
    word = list(d.word)
    word[under_at:under_at] = [(b, False), (a, False)]
    word[over_at:over_at] = [(a, True), (b, True)]
    return GaussDiagram(kind=d.kind, signs={**d.signs, a: sign, b: -sign}, word=tuple(word))


@pytest.fixture
def corpus(knots):
    eight = project_to_diagram(knots["figure_eight"])
    return {
        "unknot": [parse_gauss(t) for t in UNKNOTS],
        "trefoil": [parse_gauss(TREFOIL)] + [parse_gauss(t) for t in BRAID_TREFOILS]
                   + [_bigon(parse_gauss(TREFOIL), 2, 4)],
        "figure_eight": [eight, _bigon(eight, 1, 6, sign=-1)],
    }


def test_corpus_values(corpus, formulas):
    expected = {"unknot": (0, 0), "trefoil": (1, 1), "figure_eight": (-1, 0)}
    for name, codes in corpus.items():
        v2, v3 = expected[name]
        for d in codes:
            assert evaluate_formula(formulas["v2"], d) == v2, (name, format_gauss(d))
            assert evaluate_formula(formulas["v3"], d) == v3, (name, format_gauss(d))
            assert evaluate_formula(formulas["v2"], mirror(d)) == v2
            assert evaluate_formula(formulas["v3"], mirror(d)) == -v3


def test_braid_relation_codes(formulas):
    d1, d2 = (parse_gauss(t) for t in BRAID_TREFOILS)
    assert d1 != d2
    assert d1.n_crossings == d2.n_crossings == 4
    assert _v2_by_pairs(d1) == _v2_by_pairs(d2) == 1
    assert evaluate_formula(formulas["v3"], d1) == evaluate_formula(formulas["v3"], d2) == 1


def test_values_ignore_bigons(formulas):
    d = parse_gauss(TREFOIL)
    size = len(d.word)
    for over_at in range(size + 1):
        for under_at in range(over_at, size + 1):
            b = _bigon(d, over_at, under_at, sign=1 if under_at % 2 else -1)
            assert b.n_crossings == 5
            assert evaluate_formula(formulas["v2"], b) == 1
            assert evaluate_formula(formulas["v3"], b) == 1
