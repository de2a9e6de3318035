from __future__ import annotations
import itertools
import re
from fractions import Fraction
from typing import Dict, FrozenSet, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, model_validator

from .curve_model import ParamCurve, align_axes, crossings
from .errors import InputError
from .schema import RunConfig

DiagramKind = Literal["long", "compact"]

# A visit of the word: (crossing id, passes over)
Visit = Tuple[int, bool]


class GaussDiagram(BaseModel):
    """Crossing combinatorics of a knot diagram, read from the basepoint.

    Compact words are cyclic; the basepoint sits before word[0].
    """
    model_config = ConfigDict(frozen=True)

    kind: DiagramKind
    signs: Dict[int, int]
    word: Tuple[Visit, ...] = ()

    @model_validator(mode="after")
    def _check(self) -> "GaussDiagram":
        seen: Dict[int, List[bool]] = {}
        for cid, over in self.word:
            seen.setdefault(cid, []).append(over)
        for cid, overs in seen.items():
            if sorted(overs) != [False, True]:
                raise ValueError(f"crossing {cid} must be visited once over and once under")
        if set(seen) != set(self.signs):
            raise ValueError("signs must be given for exactly the crossings of the word")
        if any(s not in (1, -1) for s in self.signs.values()):
            raise ValueError("crossing signs must be +1 or -1")
        return self

    @property
    def n_crossings(self) -> int:
        return len(self.signs)

    def positions(self) -> Dict[int, Tuple[int, int]]:
        """crossing id -> (under position, over position), 0-based from the basepoint."""
        under: Dict[int, int] = {}
        over: Dict[int, int] = {}
        for pos, (cid, is_over) in enumerate(self.word):
            (over if is_over else under)[cid] = pos
        return {cid: (under[cid], over[cid]) for cid in self.signs}

    def closed(self) -> "GaussDiagram":
        return GaussDiagram(kind="compact", signs=dict(self.signs), word=self.word)


class ArrowDiagram(BaseModel):
    """Arrows (tail, head) on endpoints 1..2k; tail is the lower strand.

    Punctured diagrams are read linearly from a basepoint placed before endpoint 1,
    absolute ones live on a circle.
    """
    model_config = ConfigDict(frozen=True)

    arrows: Tuple[Tuple[int, int], ...]
    punctured: bool = False

    @model_validator(mode="after")
    def _check(self) -> "ArrowDiagram":
        ends = [e for a in self.arrows for e in a]
        if any(t == h for t, h in self.arrows):
            raise ValueError("an arrow needs two distinct endpoints")
        if len(set(ends)) != len(ends):
            raise ValueError("duplicate arrow endpoints")
        if sorted(ends) != list(range(1, len(ends) + 1)):
            raise ValueError(f"endpoints must be 1..{len(ends)}")
        return self

    @property
    def order(self) -> int:
        return len(self.arrows)

    def key(self) -> FrozenSet[Tuple[int, int]]:
        return frozenset(self.arrows)

    def rotated(self, r: int) -> FrozenSet[Tuple[int, int]]:
        m = 2 * self.order
        return frozenset(((t - 1 + r) % m + 1, (h - 1 + r) % m + 1) for t, h in self.arrows)


class ArrowFormula(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    terms: Tuple[Tuple[Fraction, ArrowDiagram], ...]

    @property
    def punctured(self) -> bool:
        return bool(self.terms) and self.terms[0][1].punctured


# ---------------- helpers ----------------
def _byte_offset(text: str, i: int) -> int:
    return len(text[:i].encode("utf-8"))


def _fail(text: str, i: int, msg: str) -> InputError:
    return InputError(msg, where={"offset": _byte_offset(text, i)})


_MINUS = "-−"
_HEADER = re.compile(r"\s*(long|compact)\s*:", re.IGNORECASE)
_TOKEN = re.compile(r"([OU])(\d+)([+\-−])", re.IGNORECASE)


# ---------------- Gauss codes ----------------
def parse_gauss(text: str) -> GaussDiagram:
    """'long: O1+ U2+ ...' or 'compact: ...'; an '@' token marks the basepoint of a compact code."""
    m = _HEADER.match(text)
    if not m:
        raise _fail(text, 0, "Gauss code must start with 'long:' or 'compact:'")
    kind = m.group(1).lower()
    word: List[Visit] = []
    signs: Dict[int, int] = {}
    first_at: Dict[int, int] = {}
    base: Optional[int] = None
    for tok in re.finditer(r"[^\s,]+", text[m.end():]):
        at = m.end() + tok.start()
        raw = tok.group(0)
        if raw == "@":
            if kind != "compact":
                raise _fail(text, at, "only compact codes carry a basepoint mark")
            if base is not None:
                raise _fail(text, at, "more than one basepoint mark")
            base = len(word)
            continue
        t = _TOKEN.fullmatch(raw)
        if not t:
            raise _fail(text, at, f"malformed token {raw!r} (expected like O1+ or U2-)")
        cid = int(t.group(2))
        over = t.group(1).upper() == "O"
        sign = -1 if t.group(3) in _MINUS else 1
        if cid in signs and signs[cid] != sign:
            raise _fail(text, at, f"crossing {cid} has conflicting signs")
        if any(c == cid and o == over for c, o in word):
            raise _fail(text, at, f"crossing {cid} passed {'over' if over else 'under'} twice")
        signs[cid] = sign
        first_at.setdefault(cid, at)
        word.append((cid, over))
    counts: Dict[int, int] = {}
    for cid, _ in word:
        counts[cid] = counts.get(cid, 0) + 1
    incomplete = sorted(c for c, k in counts.items() if k != 2)
    if incomplete:
        raise InputError(f"crossing ids {incomplete} are incomplete (need one over and one under visit)",
                         where={"offset": _byte_offset(text, first_at[incomplete[0]]), "ids": incomplete})
    if base:
        word = word[base:] + word[:base]
    return GaussDiagram(kind=kind, signs=signs, word=tuple(word))


def format_gauss(diagram: GaussDiagram) -> str:
    toks = [f"{'O' if over else 'U'}{cid}{'+' if diagram.signs[cid] > 0 else '-'}" for cid, over in diagram.word]
    return f"{diagram.kind}: " + " ".join(toks)


def mirror(diagram: GaussDiagram) -> GaussDiagram:
    """Reflection through the projection plane: every crossing flips sign and over/under."""
    return GaussDiagram(kind=diagram.kind, signs={c: -s for c, s in diagram.signs.items()},
                        word=tuple((c, not o) for c, o in diagram.word))


def reverse(diagram: GaussDiagram) -> GaussDiagram:
    """Opposite orientation; crossing signs are unchanged."""
    return GaussDiagram(kind=diagram.kind, signs=dict(diagram.signs), word=tuple(reversed(diagram.word)))


def add_kink(diagram: GaussDiagram, position: int, sign: int = 1, over_first: bool = True) -> GaussDiagram:
    """Insert a Reidemeister I loop before word[position]."""
    if not 0 <= position <= len(diagram.word):
        raise InputError(f"kink position {position} outside 0..{len(diagram.word)}")
    cid = max(diagram.signs, default=0) + 1
    loop = ((cid, over_first), (cid, not over_first))
    word = diagram.word[:position] + loop + diagram.word[position:]
    return GaussDiagram(kind=diagram.kind, signs={**diagram.signs, cid: sign}, word=word)


def project_to_diagram(knot: ParamCurve, n: int = 3, cfg: Optional[RunConfig] = None) -> GaussDiagram:
    """Gauss diagram of the planar projection; ids follow the first visit from the basepoint."""
    if n != 3 or knot.n != 3:
        raise InputError("project_to_diagram needs a knot in R^3")
    cfg = cfg or RunConfig()
    cs = crossings(align_axes(knot, cfg), cfg)
    visits = sorted([(c.s, k, c.over == "s") for k, c in enumerate(cs)] + [(c.t, k, c.over == "t") for k, c in enumerate(cs)])
    ids: Dict[int, int] = {}
    word: List[Visit] = []
    for _, k, over in visits:
        ids.setdefault(k, len(ids) + 1)
        word.append((ids[k], over))
    return GaussDiagram(kind=knot.kind, signs={ids[k]: c.sign for k, c in enumerate(cs)}, word=tuple(word))


# ---------------- arrow formulas ----------------
_TERM = re.compile(r"\s*([+\-−])?\s*(\d+(?:/\d+)?)?\s*(\*)?\s*D\s*\[([^\]]*)\]")
_ARROW = re.compile(r"\s*(\d+)\s*>\s*(\d+)\s*")


def _parse_arrows(text: str, start: int, body: str) -> ArrowDiagram:
    punctured = body.lstrip().startswith("|")
    if punctured:
        body = body.replace("|", "", 1)
    elif "|" in body:
        raise _fail(text, start + body.index("|"), "the basepoint mark '|' must open the diagram")
    arrows = []
    for part in body.split(","):
        if not part.strip():
            continue
        a = _ARROW.fullmatch(part)
        if not a:
            raise _fail(text, start, f"malformed arrow {part.strip()!r} (expected like 1>3)")
        arrows.append((int(a.group(1)), int(a.group(2))))
    try:
        return ArrowDiagram(arrows=tuple(arrows), punctured=punctured)
    except ValueError as e:
        msg = e.errors()[0]["msg"] if hasattr(e, "errors") else str(e)
        raise _fail(text, start, f"invalid arrow diagram: {msg}") from e


def parse_formula(text: str) -> ArrowFormula:
    """'1/2 * D[1>3, 2>5, 4>6] + 1/3 * D[4>1, 2>5, 6>3]'; 'D[|1>3, 4>2]' is punctured."""
    pos = 0
    terms: List[Tuple[Fraction, ArrowDiagram]] = []
    while pos < len(text):
        if not text[pos:].strip():
            break
        m = _TERM.match(text, pos)
        if not m:
            raise _fail(text, pos, "expected a term like '1/2 * D[1>3, 2>4]'")
        if terms and not m.group(1):
            raise _fail(text, m.start(), "terms must be joined by + or -")
        coeff = Fraction(m.group(2)) if m.group(2) else Fraction(1)
        if m.group(2) and not m.group(3):
            raise _fail(text, m.start(2), "missing '*' between coefficient and diagram")
        if m.group(1) and m.group(1) in _MINUS:
            coeff = -coeff
        terms.append((coeff, _parse_arrows(text, m.start(4), m.group(4))))
        pos = m.end()
    if not terms:
        raise _fail(text, 0, "empty formula")
    if len({d.punctured for _, d in terms}) > 1:
        raise _fail(text, 0, "a formula cannot mix punctured and absolute diagrams")
    return ArrowFormula(terms=tuple(terms))


def format_formula(formula: ArrowFormula) -> str:
    out = []
    for i, (c, d) in enumerate(formula.terms):
        body = ("|" if d.punctured else "") + ", ".join(f"{t}>{h}" for t, h in d.arrows)
        sign = "-" if c < 0 else ("+" if i else "")
        out.append(f"{sign} {abs(c)} * D[{body}]".strip())
    return " ".join(out)


def _pattern(diagram: GaussDiagram, pos: Dict[int, Tuple[int, int]], subset: Tuple[int, ...]) -> FrozenSet[Tuple[int, int]]:
    ends = sorted(p for cid in subset for p in pos[cid])
    rank = {p: i + 1 for i, p in enumerate(ends)}
    return frozenset((rank[pos[cid][0]], rank[pos[cid][1]]) for cid in subset)


def count_representations(term: ArrowDiagram, diagram: GaussDiagram) -> int:
    """Signed number of subdiagrams of `diagram` matching `term`."""
    pos = diagram.positions()
    target = term.key()
    total = 0
    for subset in itertools.combinations(sorted(diagram.signs), term.order):
        pat = _pattern(diagram, pos, subset)
        if term.punctured:
            hits = int(pat == target)
        else:
            hits = sum(1 for r in range(2 * term.order) if term.rotated(r) == pat)
        if hits:
            sign = 1
            for cid in subset:
                sign *= diagram.signs[cid]
            total += hits * sign
    return total


def evaluate_formula(formula: ArrowFormula, diagram: GaussDiagram) -> Fraction:
    if not formula.punctured and diagram.kind == "long":
        raise InputError("absolute diagrams are counted on compact diagrams; close the long diagram first")
    return sum((c * count_representations(d, diagram) for c, d in formula.terms), Fraction(0))


def builtin_formulas() -> Dict[str, ArrowFormula]:
    # tails are the lower strands
    return {
        "v2": parse_formula("1 * D[|1>3, 4>2]"),
        "v3": parse_formula("1/2 * D[1>3, 2>5, 4>6] + 1/3 * D[4>1, 2>5, 6>3]"),
    }


def resolve_formula(name_or_text: str) -> ArrowFormula:
    builtins = builtin_formulas()
    key = name_or_text.strip().lower()
    if key in builtins:
        return builtins[key]
    return parse_formula(name_or_text)
