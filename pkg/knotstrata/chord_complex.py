from __future__ import annotations
import itertools
import re
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from .errors import InputError

# A site of the configuration: (group label, 0 for none; star flag)
Site = Tuple[int, bool]
Chord = Tuple[int, int]

MAX_COMPLEXITY = 3


class GCDCell(BaseModel):
    """A generalized chord diagram: an (A,b)-configuration with a non-marginal face.

    Sites are numbered 1..m from left to right; chords join sites of one group.
    """
    model_config = ConfigDict(frozen=True)

    sites: Tuple[Site, ...]
    chords: Tuple[Chord, ...] = ()

    @property
    def m(self) -> int:
        return len(self.sites)

    @property
    def n_stars(self) -> int:
        return sum(1 for _, star in self.sites if star)

    @property
    def q(self) -> int:
        return len(self.chords) + self.n_stars

    def groups(self) -> Dict[int, List[int]]:
        out: Dict[int, List[int]] = {}
        for i, (g, _) in enumerate(self.sites, start=1):
            if g:
                out.setdefault(g, []).append(i)
        return out

    @property
    def group_sizes(self) -> Tuple[int, ...]:
        return tuple(sorted((len(v) for v in self.groups().values()), reverse=True))

    @property
    def complexity(self) -> int:
        return sum(a - 1 for a in self.group_sizes) + self.n_stars

    @property
    def degree(self) -> int:
        return self.m + self.q - 1

    def __str__(self) -> str:
        return format_cell(self)


class Chain2:
    """A chain over the field with two elements: a finite set of cells."""

    __slots__ = ("cells",)

    def __init__(self, cells: Iterable[GCDCell] = ()):
        acc: set = set()
        for c in cells:
            acc ^= {c}
        self.cells: FrozenSet[GCDCell] = frozenset(acc)

    def __add__(self, other: "Chain2") -> "Chain2":
        return Chain2._of(self.cells ^ other.cells)

    @classmethod
    def _of(cls, cells: FrozenSet[GCDCell]) -> "Chain2":
        out = cls()
        out.cells = cells
        return out

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Chain2) and self.cells == other.cells

    def __hash__(self) -> int:
        return hash(self.cells)

    def __len__(self) -> int:
        return len(self.cells)

    def __iter__(self):
        return iter(sorted(self.cells, key=cell_key))

    def __bool__(self) -> bool:
        return bool(self.cells)

    @property
    def grading(self) -> Optional[Tuple[int, int]]:
        grades = {(c.complexity, c.degree) for c in self.cells}
        if len(grades) > 1:
            raise InputError(f"chain mixes gradings {sorted(grades)}")
        return next(iter(grades), None)

    def __repr__(self) -> str:
        return "Chain2(" + " + ".join(format_cell(c) for c in self) + ")" if self.cells else "Chain2(0)"


# ---------------- helpers ----------------
def cell_key(cell: GCDCell) -> Tuple:
    return (cell.complexity, cell.degree, cell.m, cell.sites, cell.chords)


def _connected(members: Sequence[int], chords: Iterable[Chord]) -> bool:
    parent = {v: v for v in members}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in chords:
        if a in parent and b in parent:
            parent[find(a)] = find(b)
    return len({find(v) for v in members}) == 1


def _non_marginal(sites: Sequence[Site], chords: Sequence[Chord]) -> bool:
    groups: Dict[int, List[int]] = {}
    for i, (g, _) in enumerate(sites, start=1):
        if g:
            groups.setdefault(g, []).append(i)
    return all(_connected(members, [c for c in chords if sites[c[0] - 1][0] == g])
               for g, members in groups.items())


def _canonical(sites: Sequence[Site], chords: Iterable[Chord]) -> GCDCell:
    """Relabel groups by first appearance, dissolve one-point groups, sort chords."""
    sizes: Dict[int, int] = {}
    for g, _ in sites:
        if g:
            sizes[g] = sizes.get(g, 0) + 1
    relabel: Dict[int, int] = {}
    out: List[Site] = []
    for g, star in sites:
        if g and sizes[g] >= 2:
            relabel.setdefault(g, len(relabel) + 1)
            out.append((relabel[g], star))
        else:
            out.append((0, star))
    return GCDCell(sites=tuple(out), chords=tuple(sorted((min(a, b), max(a, b)) for a, b in chords)))


def _validate(sites: Sequence[Site], chords: Sequence[Chord]) -> None:
    for i, (g, star) in enumerate(sites, start=1):
        if not g and not star:
            raise InputError(f"site {i} is neither a group member nor a star")
    sizes: Dict[int, int] = {}
    for g, _ in sites:
        if g:
            sizes[g] = sizes.get(g, 0) + 1
    if any(v < 2 for v in sizes.values()):
        raise InputError("every group needs at least two sites")
    for a, b in chords:
        if not (1 <= a <= len(sites) and 1 <= b <= len(sites)) or a == b:
            raise InputError(f"chord ({a},{b}) does not join two sites")
        if not sites[a - 1][0] or sites[a - 1][0] != sites[b - 1][0]:
            raise InputError(f"chord ({a},{b}) joins sites of different groups")
    if len(set((min(a, b), max(a, b)) for a, b in chords)) != len(chords):
        raise InputError("duplicate chord")
    if not _non_marginal(sites, chords):
        raise InputError("marginal face: the chords do not connect every group")


def make_cell(sites: Sequence[Site], chords: Sequence[Chord] = ()) -> GCDCell:
    _validate(sites, chords)
    return _canonical(sites, chords)


# ---------------- text form ----------------
_SITE = re.compile(r"(\d+)?(\*)?")
_CHORD = re.compile(r"\(\s*(\d+)\s*,\s*(\d+)\s*\)")


def parse_cell(text: str) -> GCDCell:
    """'[1 2 2 1 2 | chords: (1,4)(2,5)(3,5)]'; a site is a group label, '*' or 'k*'."""
    body = text.strip()
    if body.startswith("[") and body.endswith("]"):
        body = body[1:-1]
    left, _, right = body.partition("|")
    sites: List[Site] = []
    for tok in left.split():
        m = _SITE.fullmatch(tok)
        if not m or not (m.group(1) or m.group(2)):
            raise InputError(f"malformed site token {tok!r}", where={"offset": text.find(tok)})
        sites.append((int(m.group(1) or 0), bool(m.group(2))))
    right = re.sub(r"^\s*chords\s*:", "", right.strip())
    chords = [(int(a), int(b)) for a, b in _CHORD.findall(right)]
    if _CHORD.sub("", right).strip(" ;,"):
        raise InputError(f"malformed chord list {right.strip()!r}")
    if not sites:
        raise InputError("a cell needs at least one site")
    return make_cell(sites, chords)


def format_cell(cell: GCDCell) -> str:
    toks = [(str(g) if g else "") + ("*" if star else "") for g, star in cell.sites]
    chords = "".join(f"({a},{b})" for a, b in cell.chords)
    return f"[{' '.join(toks)} | chords: {chords}]"


def chain(*texts: str) -> Chain2:
    return Chain2(parse_cell(t) for t in texts)


# ---------------- enumeration ----------------
def _faces(sites: Sequence[Site]) -> List[Tuple[Chord, ...]]:
    groups: Dict[int, List[int]] = {}
    for i, (g, _) in enumerate(sites, start=1):
        if g:
            groups.setdefault(g, []).append(i)
    per_group: List[List[Tuple[Chord, ...]]] = []
    for members in groups.values():
        pairs = list(itertools.combinations(members, 2))
        opts = []
        for r in range(len(members) - 1, len(pairs) + 1):
            for sub in itertools.combinations(pairs, r):
                if _connected(members, sub):
                    opts.append(sub)
        per_group.append(opts)
    return [tuple(itertools.chain.from_iterable(combo)) for combo in itertools.product(*per_group)]


def _configurations(p: int) -> List[Tuple[Site, ...]]:
    """Canonical site sequences of complexity p."""
    out = set()
    for group_part in _partitions_ge2(p):
        for b in range(p + 1):
            if sum(a - 1 for a in group_part) + b != p:
                continue
            out.update(_arrange(group_part, b))
    return sorted(out)


def _partitions_ge2(p: int) -> List[Tuple[int, ...]]:
    """Multisets A with sum(a - 1) <= p, every a >= 2."""
    res: List[Tuple[int, ...]] = [()]

    def rec(left: int, max_part: int, acc: Tuple[int, ...]) -> None:
        for a in range(min(max_part, left + 1), 1, -1):
            nxt = acc + (a,)
            res.append(nxt)
            rec(left - (a - 1), a, nxt)

    rec(p, p + 1, ())
    return res


def _arrange(group_part: Tuple[int, ...], b: int) -> List[Tuple[Site, ...]]:
    n_group_pts = sum(group_part)
    labels = [g for g, a in enumerate(group_part, start=1) for _ in range(a)]
    out = set()
    for perm in set(itertools.permutations(labels)):
        base = [(g, False) for g in perm]
        # k stars on distinct group points, b-k stars as new sites
        for k in range(min(b, n_group_pts) + 1):
            for on in itertools.combinations(range(n_group_pts), k):
                starred = [(g, i in on) for i, (g, _) in enumerate(base)]
                extra = b - k
                total = len(starred) + extra
                for pos in itertools.combinations(range(total), extra):
                    it = iter(starred)
                    sites = [(0, True) if i in pos else next(it) for i in range(total)]
                    cell = _canonical(sites, ())
                    out.add(cell.sites)
    return list(out)


@lru_cache(maxsize=None)
def _cells(p: int) -> Tuple[GCDCell, ...]:
    cells = []
    for sites in _configurations(p):
        for face in _faces(sites):
            cells.append(GCDCell(sites=sites, chords=tuple(sorted(face))))
    return tuple(sorted(cells, key=cell_key))


def enumerate_cells(p: int, degree: Optional[int] = None) -> List[GCDCell]:
    """All cells of complexity exactly p, optionally of one degree; 'top' is max degree."""
    if not 1 <= p <= MAX_COMPLEXITY:
        raise InputError(f"complexity {p} not supported (1..{MAX_COMPLEXITY})")
    cells = list(_cells(p))
    if degree is None:
        return cells
    return [c for c in cells if c.degree == degree]


def top_degree(p: int) -> int:
    return max(c.degree for c in enumerate_cells(p))


# ---------------- boundary ----------------
def _collide(cell: GCDCell, i: int) -> Optional[GCDCell]:
    """Limit of sites i, i+1 (0-based) merging; None when it leaves the term or degenerates."""
    (ga, sa), (gb, sb) = cell.sites[i], cell.sites[i + 1]
    a, b = i + 1, i + 2
    chords = list(cell.chords)
    if sa and sb:
        return None
    if ga and ga == gb:
        if (a, b) not in chords or sa or sb:
            return None
        chords.remove((a, b))
        merged: Site = (ga, True)
    elif ga and gb:
        merged = (ga, sa or sb)
    else:
        merged = (ga or gb, True)

    def move(j: int) -> int:
        return j if j <= a else j - 1

    new_chords = [(move(x), move(y)) for x, y in chords]
    if len(set(new_chords)) != len(new_chords):
        return None
    sites = list(cell.sites[:i]) + [merged] + list(cell.sites[i + 2:])
    if ga and gb and ga != gb:
        sites = [(ga if g == gb else g, st) for g, st in sites]
    return _canonical(sites, new_chords)


def boundary(cell: GCDCell) -> Chain2:
    """Codimension-one faces in the same filtration term, mod 2."""
    terms: List[GCDCell] = []
    for ch in cell.chords:
        rest = [c for c in cell.chords if c != ch]
        if _non_marginal(cell.sites, rest):
            terms.append(GCDCell(sites=cell.sites, chords=tuple(rest)))
    for i in range(cell.m - 1):
        face = _collide(cell, i)
        if face is not None:
            terms.append(face)
    return Chain2(terms)


def boundary_chain(ch: Chain2) -> Chain2:
    out = Chain2()
    for c in ch.cells:
        out = out + boundary(c)
    return out


def verify_cycle(ch: Chain2) -> bool:
    return not boundary_chain(ch)


# ---------------- linear algebra over GF(2) ----------------
def _rank(M: np.ndarray) -> int:
    R = (np.asarray(M, dtype=np.uint8) % 2).copy()
    rows, cols = R.shape
    rank = 0
    for col in range(cols):
        if rank == rows:
            break
        hits = np.nonzero(R[rank:, col])[0]
        if hits.size == 0:
            continue
        piv = rank + hits[0]
        if piv != rank:
            R[[rank, piv]] = R[[piv, rank]]
        below = np.nonzero(R[:, col])[0]
        for r in below:
            if r != rank:
                R[r] ^= R[rank]
        rank += 1
    return rank


def boundary_matrix(p: int, degree: int) -> np.ndarray:
    """Matrix of the boundary from degree to degree-1 (rows: targets, columns: sources)."""
    src = enumerate_cells(p, degree)
    dst = enumerate_cells(p, degree - 1)
    index = {c: k for k, c in enumerate(dst)}
    M = np.zeros((len(dst), len(src)), dtype=np.uint8)
    for j, c in enumerate(src):
        for face in boundary(c).cells:
            M[index[face], j] ^= 1
    return M


def homology_rank(p: int, degree: int) -> int:
    n = len(enumerate_cells(p, degree))
    if n == 0:
        return 0
    d_out = boundary_matrix(p, degree)
    d_in = boundary_matrix(p, degree + 1)
    rank_out = _rank(d_out) if d_out.size else 0
    rank_in = _rank(d_in) if d_in.size else 0
    return n - rank_out - rank_in


def homology_table(p: int) -> Dict[int, int]:
    degrees = sorted({c.degree for c in enumerate_cells(p)})
    return {d: homology_rank(p, d) for d in degrees}


def is_boundary(ch: Chain2) -> bool:
    """Whether some chain x of the next degree up has boundary(x) == ch."""
    if not ch:
        return True
    p, degree = ch.grading
    src = enumerate_cells(p, degree + 1)
    if not src:
        return False
    B = boundary_matrix(p, degree + 1)
    dst = enumerate_cells(p, degree)
    index = {c: k for k, c in enumerate(dst)}
    target = np.zeros((len(dst), 1), dtype=np.uint8)
    for c in ch.cells:
        target[index[c], 0] = 1
    return _rank(B) == _rank(np.hstack([B, target]))


# ---------------- principal parts ----------------
def principal_part_tt() -> Chain2:
    """Two-cell principal part of the Teiblum-Turchin class."""
    return chain("[1 2 2 1 2 | chords: (1,4)(2,5)(3,5)]",
                 "[1 1 1 1 | chords: (1,3)(1,4)(2,4)(3,4)]")


def principal_part_odd() -> Chain2:
    """Five-cell principal part written for odd n, reduced mod 2."""
    return chain("[1 1 1 1 | chords: (1,3)(2,3)(2,4)(3,4)]",
                 "[1 1 1 1 | chords: (1,4)(2,3)(2,4)(3,4)]",
                 "[1 2 2 1 2 | chords: (1,4)(2,5)(3,5)]",
                 "[1 2 1 2 1 | chords: (1,5)(2,4)(3,5)]",
                 "[1 1 2 1 2 | chords: (1,4)(2,4)(3,5)]")


# ---------------- golden equations ----------------
# complexity -> (cell, faces of its boundary mod 2)
GOLDEN_BOUNDARIES: Dict[int, Tuple[Tuple[str, Tuple[str, ...]], ...]] = {
    1: (
        ("[* | chords: ]", ()),
        ("[1 1 | chords: (1,2)]", ("[* | chords: ]",)),
    ),
    2: (
        ("[1 2 1 2 | chords: (1,3)(2,4)]",
         ("[1 1 1 | chords: (1,2)(1,3)]", "[1 1 1 | chords: (1,2)(2,3)]", "[1 1 1 | chords: (1,3)(2,3)]")),
        ("[1 1 2 2 | chords: (1,2)(3,4)]",
         ("[* 1 1 | chords: (2,3)]", "[1 1 1 | chords: (1,2)(2,3)]", "[1 1 * | chords: (1,2)]")),
        ("[1 2 2 1 | chords: (1,4)(2,3)]",
         ("[1 1 1 | chords: (1,2)(1,3)]", "[1 * 1 | chords: (1,3)]", "[1 1 1 | chords: (1,3)(2,3)]")),
        ("[1 1 1 | chords: (1,2)(1,3)(2,3)]",
         ("[1 1 1 | chords: (1,2)(1,3)]", "[1 1 1 | chords: (1,2)(2,3)]", "[1 1 1 | chords: (1,3)(2,3)]")),
        ("[1 1 1 | chords: (1,2)(1,3)]", ("[1* 1 | chords: (1,2)]",)),
        ("[1 1 1 | chords: (1,2)(2,3)]", ("[1* 1 | chords: (1,2)]", "[1 1* | chords: (1,2)]")),
        ("[1 1 1 | chords: (1,3)(2,3)]", ("[1 1* | chords: (1,2)]",)),
        ("[* 1 1 | chords: (2,3)]", ("[1* 1 | chords: (1,2)]", "[* * | chords: ]")),
        ("[1 * 1 | chords: (1,3)]", ("[1* 1 | chords: (1,2)]", "[1 1* | chords: (1,2)]")),
        ("[1 1 * | chords: (1,2)]", ("[* * | chords: ]", "[1 1* | chords: (1,2)]")),
        ("[1* 1 | chords: (1,2)]", ()),
        ("[1 1* | chords: (1,2)]", ()),
        ("[* * | chords: ]", ()),
    ),
}

# complexity -> total homology rank of the filtration term
GOLDEN_HOMOLOGY_RANK = {1: 0, 2: 1, 3: 2}
