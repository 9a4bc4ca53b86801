"""Site alphabets, transition rules and penalty patterns of the line construction.

A shape is the string of site symbols of a chain of ``L = n * R`` sites, without the
qubit data. Block boundaries sit after every ``n`` sites and are never stored. The text
rendering separates sites by spaces and blocks by ``|``::

    G B B | E E E

Symbols (12-state alphabet): ``D`` dead, ``E`` unborn, ``A`` qubit left of the active
site, ``B`` qubit right of the active site, ``G`` gate flag, ``R`` right-moving flag,
``L`` left-moving flag, ``T`` turning flag. The 9-state alphabet merges ``A``/``B``
into ``q`` and ``D``/``E`` into ``e``; the 13-state alphabet adds the start state ``S``.

Qubit data lives on the two-dimensional symbols. Every rule keeps the left-to-right
order of the data slots, so the data of a configuration is a bit string indexed by
slot; only the gate rule changes it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, NamedTuple

import numpy as np

START = "^"
END = "$"

ALPHABETS = {
    12: "DEABGRLT",
    9: "eqGRLT",
    13: "DEABGRLTS",
}
TWO_DIM = frozenset("ABGRq")
ACTIVE = frozenset("GRLT")
INACTIVE = {12: "DEAB", 9: "eq", 13: "DEABS"}

TO_9 = str.maketrans({"A": "q", "B": "q", "D": "e", "E": "e"})


class ShapeError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Shape:
    symbols: str
    n: int
    alphabet: int = 12

    def __post_init__(self):
        L = len(self.symbols)
        if self.n < 2 or L % self.n or L // self.n < 2:
            raise ShapeError(f"length {L} is not n*R with n={self.n}, R>=2")
        bad = set(self.symbols) - set(ALPHABETS[self.alphabet])
        if bad:
            raise ShapeError(f"symbols {sorted(bad)} not in the {self.alphabet}-state alphabet")

    @property
    def L(self) -> int:
        return len(self.symbols)

    @property
    def R(self) -> int:
        return len(self.symbols) // self.n

    def __len__(self):
        return len(self.symbols)

    def __getitem__(self, i):
        return self.symbols[i]

    def boundary_after(self, i: int) -> bool:
        """True if a block boundary separates site ``i`` from site ``i + 1``."""
        return (i + 1) % self.n == 0

    def actives(self) -> list[int]:
        return [i for i, x in enumerate(self.symbols) if x in ACTIVE]

    @property
    def data_width(self) -> int:
        return sum(x in TWO_DIM for x in self.symbols)

    def slot(self, i: int) -> int:
        """Index of the data slot held by site ``i`` (number of qubit sites before it)."""
        return sum(x in TWO_DIM for x in self.symbols[:i])

    def replace(self, i: int, pair: str) -> "Shape":
        """Overwrite sites ``i`` and ``i + 1`` (chain-end markers in ``pair`` are kept as is)."""
        s = list(self.symbols)
        for k, x in zip((i, i + 1), pair):
            if 0 <= k < len(s):
                s[k] = x
        return Shape("".join(s), self.n, self.alphabet)

    def render(self) -> str:
        blocks = [" ".join(self.symbols[k : k + self.n]) for k in range(0, self.L, self.n)]
        return " | ".join(blocks)

    def __str__(self):
        return self.render()


def parse_shape(text: str, n: int | None = None, alphabet: int | None = None) -> Shape:
    """Parse the text rendering. ``n`` is taken from the block separators if not given."""
    text = text.strip().strip("|")
    blocks = [b.split() for b in text.split("|")]
    symbols = "".join("".join(b) for b in blocks)
    if n is None:
        widths = {len(b) for b in blocks}
        if len(widths) != 1:
            raise ShapeError(f"ragged blocks in {text!r}")
        n = widths.pop()
    if alphabet is None:
        alphabet = 9 if set(symbols) & set("eq") else 13 if "S" in symbols else 12
    return Shape(symbols, n, alphabet)


# -- transition rules -------------------------------------------------------------------


class Rule(NamedTuple):
    rule_id: str
    left: str
    right: str
    boundary: bool
    new_left: str
    new_right: str
    kind: str  # "move", "gate" or "fresh0"


_RULES_12 = [
    Rule("1", "G", "B", False, "A", "G", "gate"),
    Rule("2a", "G", "E", True, "A", "T", "move"),
    Rule("2b", "T", "E", False, "L", "E", "move"),
    Rule("2c", "T", "E", True, "L", "E", "move"),
    Rule("2d", "T", END, True, "L", END, "move"),
    Rule("3a", "A", "L", False, "L", "B", "move"),
    Rule("3b", "A", "L", True, "L", "B", "move"),
    Rule("4a", "D", "L", False, "D", "T", "move"),
    Rule("4b", "D", "L", True, "D", "T", "move"),
    Rule("4c", START, "L", True, START, "T", "move"),
    Rule("4d", "T", "B", False, "D", "R", "move"),
    Rule("5a", "R", "B", False, "A", "R", "move"),
    Rule("5b", "R", "B", True, "A", "R", "move"),
    Rule("5c", "R", "E", False, "A", "T", "move"),
    Rule("6", "T", "B", True, "D", "G", "move"),
]
START_RULE = Rule("1s", "G", "S", False, "A", "G", "fresh0")


def _project_rule(r: Rule) -> Rule:
    return r._replace(
        left=r.left.translate(TO_9),
        right=r.right.translate(TO_9),
        new_left=r.new_left.translate(TO_9),
        new_right=r.new_right.translate(TO_9),
    )


RULES = {
    12: _RULES_12,
    9: [_project_rule(r) for r in _RULES_12],
    13: _RULES_12 + [START_RULE],
}


def _rule_allowed(rule: Rule, alphabet: int, edge: int, n: int) -> bool:
    """Position dependence: with the start state the first block uses only the start rule."""
    if alphabet != 13:
        return True
    in_first_block = 0 <= edge < n - 1
    if rule.rule_id == "1":
        return not in_first_block
    if rule.rule_id == "1s":
        return in_first_block
    return True


@lru_cache(maxsize=None)
def _tables(alphabet: int):
    fwd: dict[tuple, list[Rule]] = {}
    bwd: dict[tuple, list[Rule]] = {}
    for r in RULES[alphabet]:
        fwd.setdefault((r.left, r.right, r.boundary), []).append(r)
        bwd.setdefault((r.new_left, r.new_right, r.boundary), []).append(r)
    return fwd, bwd


def edges(shape: Shape) -> Iterator[tuple[int, str, str, bool]]:
    """Every adjacent pair ``(i, left, right, boundary)`` including the chain ends.

    ``i`` is the index of the left site; the left chain end is edge ``-1``. Chain ends
    count as block boundaries.
    """
    s = shape.symbols
    L = len(s)
    yield -1, START, s[0], True
    for i in range(L - 1):
        yield i, s[i], s[i + 1], (i + 1) % shape.n == 0
    yield L - 1, s[L - 1], END, True


@dataclass(frozen=True)
class RuleApplication:
    rule_id: str
    site: int
    direction: str
    kind: str
    block: int
    offset: int

    @property
    def is_gate(self) -> bool:
        return self.kind == "gate"


def _application(rule: Rule, i: int, direction: str, n: int) -> RuleApplication:
    # for gate rules the flag sits on site i (forward) and the gate is rounds[block][offset]
    return RuleApplication(rule.rule_id, i, direction, rule.kind, i // n if i >= 0 else 0, i % n if i >= 0 else 0)


def successors(shape: Shape) -> list[tuple[Shape, RuleApplication]]:
    """All forward rule matches anywhere on the chain."""
    fwd, _ = _tables(shape.alphabet)
    out = []
    for i, a, b, bnd in edges(shape):
        for rule in fwd.get((a, b, bnd), ()):
            if _rule_allowed(rule, shape.alphabet, i, shape.n):
                out.append((shape.replace(i, rule.new_left + rule.new_right), _application(rule, i, "forward", shape.n)))
    return out


def predecessors(shape: Shape) -> list[tuple[Shape, RuleApplication]]:
    """All backward rule matches anywhere on the chain."""
    _, bwd = _tables(shape.alphabet)
    out = []
    for i, a, b, bnd in edges(shape):
        for rule in bwd.get((a, b, bnd), ()):
            if _rule_allowed(rule, shape.alphabet, i, shape.n):
                out.append((shape.replace(i, rule.left + rule.right), _application(rule, i, "backward", shape.n)))
    return out


def _single(shape: Shape, found: list, what: str):
    if len(shape.actives()) != 1:
        raise ShapeError(f"{shape}: expected exactly one active site, found {len(shape.actives())}")
    if len(found) > 1:
        raise AssertionError(f"{shape}: {len(found)} {what} transitions")
    return found[0] if found else None


def forward(shape: Shape) -> tuple[Shape, RuleApplication] | None:
    return _single(shape, successors(shape), "forward")


def backward(shape: Shape) -> tuple[Shape, RuleApplication] | None:
    return _single(shape, predecessors(shape), "backward")


def initial_shape(n: int, R: int, alphabet: int = 12) -> Shape:
    fill = {12: "B", 9: "q", 13: "S"}[alphabet]
    empty = "e" if alphabet == 9 else "E"
    return Shape("G" + fill * (n - 1) + empty * (n * (R - 1)), n, alphabet)


def final_shape(n: int, R: int, alphabet: int = 12) -> Shape:
    dead, done = ("e", "q") if alphabet == 9 else ("D", "A")
    return Shape(dead * (n * (R - 1)) + done * (n - 1) + "G", n, alphabet)


def trace(shape: Shape, max_steps: int | None = None) -> list[Shape]:
    """Iterate ``forward`` until no rule applies (or ``max_steps`` moves were made)."""
    out = [shape]
    while max_steps is None or len(out) <= max_steps:
        nxt = forward(out[-1])
        if nxt is None:
            break
        out.append(nxt[0])
    return out


def legal_trace(n: int, R: int, alphabet: int = 12) -> list[Shape]:
    return trace(initial_shape(n, R, alphabet))


def project_to_9state(shape: Shape) -> Shape:
    if shape.alphabet != 12:
        raise ShapeError("projection needs a 12-state shape")
    return Shape(shape.symbols.translate(TO_9), shape.n, 9)


# -- penalty patterns -------------------------------------------------------------------

SITES_12 = frozenset("DEABGRLT")


class Pattern(NamedTuple):
    group: int
    left: frozenset
    right: frozenset
    boundary: bool | None  # None: with or without a boundary


def _p(group, left, right, boundary=None):
    return Pattern(group, frozenset(left), frozenset(right), boundary)


PENALTY_PATTERNS = [
    _p(1, "E", SITES_12 - {"E"}),
    _p(1, SITES_12 - {"D"}, "D"),
    _p(2, START, "B", True),
    _p(2, "A", END, True),
    _p(3, "B", SITES_12 - {"B", "E"}),
    _p(3, SITES_12 - {"A", "D"}, "A"),
    _p(4, "D", "B"),
    _p(4, "A", "E"),
    _p(4, "D", "E"),
    _p(5, "A", "B"),
    _p(6, ACTIVE, ACTIVE),
    _p(7, "D", "G", False),
    _p(7, "G", "E", False),
    _p(7, "A", "G", True),
    _p(7, "G", "B", True),
    _p(7, "D", "R", True),
    _p(7, "R", "E", True),
    _p(7, START, "R", True),
    _p(7, "R", END, True),
]


class Violation(NamedTuple):
    group: int
    site: int


def find_violations(shape: Shape, groups=range(1, 8)) -> list[Violation]:
    """Forbidden arrangements present in a 12-state shape.

    Each adjacent pair counts once, under the lowest group that forbids it; ``site`` is
    the left index of the pair (``-1`` for the left chain end). Group 2 also forbids a
    single ``E`` anywhere in the first block and a single ``D`` anywhere in the last
    block; those hits report the site itself.
    """
    if shape.alphabet != 12:
        raise ShapeError("penalty patterns are defined for the 12-state alphabet")
    groups = set(groups)
    hits = []
    n, L = shape.n, shape.L
    s = shape.symbols
    if 2 in groups:
        hits += [Violation(2, i) for i in range(n) if s[i] == "E"]
        hits += [Violation(2, i) for i in range(L - n, L) if s[i] == "D"]
    for i, a, b, bnd in edges(shape):
        for p in PENALTY_PATTERNS:
            if p.group in groups and a in p.left and b in p.right and p.boundary in (None, bnd):
                hits.append(Violation(p.group, i))
                break
    return sorted(hits, key=lambda v: (v.site, v.group))


def penalty_count(shape: Shape) -> int:
    return len(find_violations(shape))


# -- legality ---------------------------------------------------------------------------


class Kind(enum.Enum):
    LEGAL = "Legal"
    EXCEPTION_I = "ExceptionI"
    EXCEPTION_II = "ExceptionII"
    EXCEPTION_III = "ExceptionIII"
    DETECTABLE = "LocallyDetectableIllegal"


def _split(symbols: str, dead: str, unborn: str):
    i0 = len(symbols) - len(symbols.lstrip(dead))
    core = symbols[i0:].rstrip(unborn)
    return i0, core


def _core_form(core: str, done: str, pend: str):
    """Return ``(active, left_len, right_len)`` if core is done* X pend* with one active X."""
    act = [k for k, x in enumerate(core) if x in ACTIVE]
    if len(act) != 1:
        return None
    k = act[0]
    if set(core[:k]) - {done} or set(core[k + 1 :]) - {pend}:
        return None
    return core[k], k, len(core) - k - 1


def is_legal(shape: Shape) -> bool:
    """Match against the five valid qubit-string forms with their length/alignment rules."""
    if shape.alphabet == 9:
        return is_legal(lift_9state(shape)) if lift_9state(shape) is not None else False
    n, s = shape.n, shape.symbols
    i0, core = _split(s, "D", "E")
    if not core:
        return False
    pend = "B"
    if shape.alphabet == 13 and "S" in core:
        # start states only trail a gate flag sweeping the first block
        if i0 != 0 or core[0] not in "AG":
            return False
        pend = "S"
    form = _core_form(core, "A", pend)
    if form is None:
        return False
    x, j, k = form
    aligned = i0 % n == 0
    if x == "G":
        return len(core) == n and aligned
    if pend == "S":
        return False
    if x == "R":
        return len(core) == n and not aligned
    if x == "L":
        return len(core) == n + 1
    if x == "T":
        return len(core) == n + 1 and (j == 0 or k == 0)
    return False


def lift_9state(shape: Shape) -> Shape | None:
    """Undo the 9-state merge for a shape with one active site (``None`` otherwise)."""
    act = shape.actives()
    if len(act) != 1:
        return None
    a = act[0]
    s = shape.symbols
    lead = len(s[:a]) - len(s[:a].lstrip("e"))
    out = []
    for i, x in enumerate(s):
        if x == "e":
            out.append("D" if i < lead else "E")
        elif x == "q":
            out.append("A" if i < a else "B")
        else:
            out.append(x)
    return Shape("".join(out), shape.n, 12)


def classify_shape(shape: Shape) -> Kind:
    if is_legal(shape):
        return Kind.LEGAL
    if shape.alphabet != 12:
        return Kind.DETECTABLE
    if find_violations(shape, groups=range(1, 7)):
        return Kind.DETECTABLE
    i0, core = _split(shape.symbols, "D", "E")
    form = _core_form(core, "A", "B")
    if form is None:
        raise AssertionError(f"{shape}: passes groups 1-6 but has no single-flag qubit string")
    x, j, k = form
    if x == "T" and j > 0 and k > 0:
        return Kind.EXCEPTION_I
    want = shape.n if x in "GR" else shape.n + 1
    if len(core) != want:
        return Kind.EXCEPTION_II
    aligned = i0 % shape.n == 0
    if (x == "R" and aligned) or (x == "G" and not aligned):
        return Kind.EXCEPTION_III
    raise AssertionError(f"{shape}: passes groups 1-6, not legal, and matches no exception")


def legal_shapes(n: int, R: int) -> list[Shape]:
    """All 12-state shapes of the valid forms, generated directly from those forms."""
    L = n * R
    out = set()

    def put(start: int, core: str):
        if start >= 0 and start + len(core) <= L:
            out.add(Shape("D" * start + core + "E" * (L - start - len(core)), n))

    for start in range(L):
        for j in range(n):
            core = "A" * j + "G" + "B" * (n - 1 - j)
            if start % n == 0:
                put(start, core)
            elif start + n <= L:
                put(start, core.replace("G", "R"))
        for j in range(n + 1):
            put(start, "A" * j + "L" + "B" * (n - j))
        put(start, "T" + "B" * n)
        put(start, "A" * n + "T")
    return sorted(out, key=lambda s: s.symbols)


# -- shape enumeration and vectorised pattern counts ---------------------------------------


def all_shapes(n: int, R: int, alphabet: int = 12) -> Iterator[Shape]:
    from itertools import product

    for t in product(ALPHABETS[alphabet], repeat=n * R):
        yield Shape("".join(t), n, alphabet)


def single_active_codes(L: int, alphabet: int = 12, position: int | None = None) -> np.ndarray:
    """Integer-coded array of every shape with exactly one active site.

    Codes index ``ALPHABETS[alphabet]``. With ``position`` only shapes whose active site
    is there are produced.
    """
    sym = ALPHABETS[alphabet]
    inactive = np.array([sym.index(x) for x in INACTIVE[alphabet]], dtype=np.int8)
    active = np.array([sym.index(x) for x in "GRLT"], dtype=np.int8)
    rest = L - 1
    m = len(inactive)
    idx = np.arange(m**rest)
    digits = np.empty((idx.size, rest), dtype=np.int8)
    for k in range(rest):
        digits[:, rest - 1 - k] = inactive[(idx // m**k) % m]
    chunks = []
    for p in range(L) if position is None else [position]:
        for a in active:
            block = np.empty((idx.size, L), dtype=np.int8)
            block[:, :p] = digits[:, :p]
            block[:, p] = a
            block[:, p + 1 :] = digits[:, p:]
            chunks.append(block)
    return np.concatenate(chunks)


def all_codes(L: int, alphabet: int = 12) -> np.ndarray:
    m = len(ALPHABETS[alphabet])
    idx = np.arange(m**L)
    out = np.empty((idx.size, L), dtype=np.int8)
    for k in range(L):
        out[:, L - 1 - k] = (idx // m**k) % m
    return out


def codes_to_shapes(codes: np.ndarray, n: int, alphabet: int = 12) -> list[Shape]:
    sym = np.array(list(ALPHABETS[alphabet]))
    return [Shape("".join(row), n, alphabet) for row in sym[codes]]


def _edge_columns(codes: np.ndarray, n: int):
    """Yield ``(edge, left_codes, right_codes, boundary)`` with -1/-2 for chain ends."""
    N, L = codes.shape
    start = np.full(N, -1, dtype=np.int8)
    end = np.full(N, -2, dtype=np.int8)
    yield -1, start, codes[:, 0], True
    for i in range(L - 1):
        yield i, codes[:, i], codes[:, i + 1], (i + 1) % n == 0
    yield L - 1, codes[:, L - 1], end, True


def _code_set(symbols, sym: str) -> list[int]:
    table = {START: -1, END: -2}
    return [table[x] if x in table else sym.index(x) for x in symbols if x in table or x in sym]


def transition_counts(codes: np.ndarray, n: int, alphabet: int = 12) -> tuple[np.ndarray, np.ndarray]:
    """Number of forward and backward rule matches for each coded shape."""
    sym = ALPHABETS[alphabet]
    fwd = np.zeros(len(codes), dtype=np.int16)
    bwd = np.zeros(len(codes), dtype=np.int16)
    for i, left, right, bnd in _edge_columns(codes, n):
        for r in RULES[alphabet]:
            if r.boundary != bnd or not _rule_allowed(r, alphabet, i, n):
                continue
            (a,), (b,) = _code_set(r.left, sym), _code_set(r.right, sym)
            fwd += (left == a) & (right == b)
            (a,), (b,) = _code_set(r.new_left, sym), _code_set(r.new_right, sym)
            bwd += (left == a) & (right == b)
    return fwd, bwd


def penalty_counts(codes: np.ndarray, n: int) -> np.ndarray:
    """Vectorised ``len(find_violations(.))`` for 12-state coded shapes."""
    sym = ALPHABETS[12]
    N, L = codes.shape
    total = np.zeros(N, dtype=np.int16)
    E, D = sym.index("E"), sym.index("D")
    total += (codes[:, :n] == E).sum(axis=1)
    total += (codes[:, L - n :] == D).sum(axis=1)
    compiled = [(p, np.array(_code_set(p.left, sym)), np.array(_code_set(p.right, sym))) for p in PENALTY_PATTERNS]
    for _, left, right, bnd in _edge_columns(codes, n):
        hit = np.zeros(N, dtype=bool)
        for p, lset, rset in compiled:
            if p.boundary in (None, bnd):
                hit |= np.isin(left, lset) & np.isin(right, rset)
        total += hit
    return total
