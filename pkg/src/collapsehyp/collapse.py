"""Free faces, elementary collapses, collapse search and certificates.

A certificate is a :class:`CollapseSequence`. Its text form has one line
per step::

    collapse 1 2 ; 0 1 2
    collapse 1 ; 0 1
    point 0

Lines starting with ``#`` are comments. Steps are numbered from 1; "step
0" refers to the input complex before any collapse.
"""

import hashlib
import time
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np

from .complex import Face, SimplicialComplex, format_facet_list, make_face
from .errors import BudgetExceededError, InvalidInputError, StaleStepError


@dataclass(frozen=True)
class ElementaryCollapse:
    """Removal of ``free_face`` together with its unique proper coface."""

    free_face: Face
    coface: Face

    def __post_init__(self):
        f, g = make_face(self.free_face), make_face(self.coface)
        if len(g) != len(f) + 1 or not set(f) < set(g):
            raise InvalidInputError(f"{g} is not a codimension-one coface of {f}")
        object.__setattr__(self, "free_face", f)
        object.__setattr__(self, "coface", g)

    @property
    def dimension(self):
        """Dimension ``k`` of the removed cell."""
        return len(self.coface) - 1

    @property
    def apex(self):
        """The vertex of the coface opposite the free face."""
        (w,) = set(self.coface) - set(self.free_face)
        return w

    def to_line(self):
        return "collapse " + " ".join(map(str, self.free_face)) + " ; " + " ".join(map(str, self.coface))


def complex_id(c: SimplicialComplex) -> str:
    return hashlib.sha256(format_facet_list(c).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class CollapseSequence:
    steps: tuple
    initial_id: str
    terminal_id: str
    terminal_vertex: Optional[object] = None

    @property
    def is_full(self):
        """True when the sequence ends at a single vertex."""
        return self.terminal_vertex is not None

    def __len__(self):
        return len(self.steps)

    def to_text(self, header=None):
        lines = []
        if header:
            lines.extend(f"# {h}" for h in header)
        lines.append(f"# initial {self.initial_id}")
        lines.extend(s.to_line() for s in self.steps)
        if self.is_full:
            lines.append(f"point {self.terminal_vertex}")
        else:
            lines.append(f"# terminal {self.terminal_id} (not a point)")
        return "\n".join(lines) + "\n"


def parse_certificate(text, *, source="<string>"):
    """Parse certificate text into ``(steps, terminal_vertex)``."""
    steps = []
    terminal = None
    tokens_all = []
    raw = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        raw.append((lineno, line))
        tokens_all.extend(line.replace(";", " ").split()[1:])
    as_int = all(_is_int(t) for t in tokens_all)
    conv = int if as_int else str
    for lineno, line in raw:
        head, _, rest = line.partition(" ")
        if head == "collapse":
            left, sep, right = rest.partition(";")
            if not sep:
                raise InvalidInputError(f"{source}:{lineno}: expected ';' between free face and coface")
            try:
                steps.append(ElementaryCollapse(tuple(map(conv, left.split())), tuple(map(conv, right.split()))))
            except InvalidInputError as exc:
                raise InvalidInputError(f"{source}:{lineno}: {exc}") from None
        elif head == "point":
            parts = rest.split()
            if len(parts) != 1:
                raise InvalidInputError(f"{source}:{lineno}: 'point' takes one vertex")
            terminal = conv(parts[0])
        else:
            raise InvalidInputError(f"{source}:{lineno}: unknown directive {head!r}")
    return steps, terminal


def _is_int(tok):
    try:
        int(tok)
    except ValueError:
        return False
    return True


# ---------------------------------------------------------------------------
# Mutable collapse state


class _State:
    """Face set with the codimension-one cofaces of every face."""

    def __init__(self, c: SimplicialComplex):
        self.faces = set(c.faces)
        self.co = {f: set() for f in self.faces}
        for g in self.faces:
            if len(g) > 1:
                for h in combinations(g, len(g) - 1):
                    self.co[h].add(g)
        self.free = {f for f, s in self.co.items() if len(s) == 1}

    def copy(self):
        other = _State.__new__(_State)
        other.faces = set(self.faces)
        other.co = {f: set(s) for f, s in self.co.items()}
        other.free = set(self.free)
        return other

    def is_free(self, e: ElementaryCollapse):
        # a face with a single codimension-one coface has no other cofaces
        return e.free_face in self.faces and self.co[e.free_face] == {e.coface}

    def apply(self, e: ElementaryCollapse):
        f, g = e.free_face, e.coface
        for x in (f, g):
            self.faces.discard(x)
            del self.co[x]
            self.free.discard(x)
        for x in (f, g):
            if len(x) > 1:
                for h in combinations(x, len(x) - 1):
                    if h in self.co:
                        s = self.co[h]
                        s.discard(x)
                        if len(s) == 1:
                            self.free.add(h)
                        else:
                            self.free.discard(h)

    def free_collapses(self):
        out = [ElementaryCollapse(f, next(iter(self.co[f]))) for f in self.free]
        out.sort(key=lambda e: (-len(e.coface), e.coface, e.free_face))
        return out

    def complex(self):
        return SimplicialComplex.from_faces(self.faces) if self.faces else SimplicialComplex()


def free_faces(c: SimplicialComplex):
    """All elementary collapses available in ``c``."""
    return _State(c).free_collapses()


def collapse_step(c: SimplicialComplex, e: ElementaryCollapse, *, check_homology=False) -> SimplicialComplex:
    """Apply one elementary collapse; raises :class:`StaleStepError` if ``e`` is not free."""
    st = _State(c)
    if not st.is_free(e):
        raise StaleStepError(f"{e.to_line()!r} is not a free pair in the complex")
    st.apply(e)
    out = st.complex()
    if check_homology and not _same_homology(out.homology(), c.homology()):
        raise AssertionError("homology changed under an elementary collapse")
    return out


def _same_homology(a, b):
    n = max(len(a), len(b))
    pad = [None] * n
    trivial = lambda g: g is None or g.is_trivial()  # noqa: E731
    return all(
        (x == y) or (trivial(x) and trivial(y)) for x, y in zip(list(a) + pad[len(a):], list(b) + pad[len(b):])
    )


@dataclass
class ReplayVerdict:
    valid: bool
    failing_step: Optional[int] = None
    reason: str = ""
    terminal: Optional[SimplicialComplex] = None

    def __bool__(self):
        return self.valid


def replay(c: SimplicialComplex, steps) -> ReplayVerdict:
    """Check every step in order. ``failing_step`` is 1-based."""
    if isinstance(steps, CollapseSequence):
        seq = steps
        steps = seq.steps
        if seq.initial_id != complex_id(c):
            return ReplayVerdict(False, 0, "certificate was issued for a different complex")
    st = _State(c)
    for i, e in enumerate(steps, start=1):
        if not st.is_free(e):
            return ReplayVerdict(False, i, f"step {i} ({e.to_line()}) is not a free pair", st.complex())
        st.apply(e)
    return ReplayVerdict(True, None, "", st.complex())


def replay_states(c: SimplicialComplex, steps):
    """Complexes ``C_n, C_{n-1}, ..., C_0`` visited by a valid sequence."""
    st = _State(c)
    out = [st.complex()]
    for i, e in enumerate(steps, start=1):
        if not st.is_free(e):
            raise StaleStepError(f"step {i} ({e.to_line()}) is not a free pair", step_index=i)
        st.apply(e)
        out.append(st.complex())
    return out


# ---------------------------------------------------------------------------
# Search


@dataclass
class CollapseResult:
    """Outcome of :func:`find_collapse`.

    ``status`` is ``"collapsible"``, ``"non-collapsible"`` (exhaustive
    search finished without success) or ``"not-found"`` (heuristic gave up
    or the exhaustive search hit its depth limit).
    """

    status: str
    sequence: Optional[CollapseSequence] = None
    partial: Optional[CollapseSequence] = None
    reason: str = ""
    stats: dict = field(default_factory=dict)

    @property
    def success(self):
        return self.status == "collapsible"


def _sequence(c, steps, st):
    terminal = st.complex()
    vertex = terminal.vertices[0] if len(st.faces) == 1 else None
    return CollapseSequence(tuple(steps), complex_id(c), complex_id(terminal), vertex)


class _Budget:
    def __init__(self, max_steps, max_seconds):
        self.max_steps = max_steps
        self.max_seconds = max_seconds
        self.steps = 0
        self.start = time.perf_counter()

    def tick(self, stats):
        self.steps += 1
        if self.max_steps is not None and self.steps > self.max_steps:
            raise BudgetExceededError("step budget exceeded", {**stats, "steps_explored": self.steps})
        if self.max_seconds is not None and self.steps % 64 == 0:
            if time.perf_counter() - self.start > self.max_seconds:
                raise BudgetExceededError("time budget exceeded", {**stats, "steps_explored": self.steps})


def find_collapse(
    c: SimplicialComplex,
    strategy="greedy",
    *,
    seed=0,
    restarts=16,
    depth_limit=None,
    budget_steps=None,
    budget_seconds=None,
) -> CollapseResult:
    """Search for a collapse of ``c`` to a single vertex.

    ``strategy="greedy"`` collapses at random among the free pairs of
    maximal dimension and retries with seeds ``seed, seed+1, ...``;
    ``strategy="exhaustive"`` runs a memoized depth-first search over
    collapse states.
    """
    if len(c.faces) == 0:
        raise InvalidInputError("empty complex")
    if len(c.faces) == 1:
        st = _State(c)
        return CollapseResult("collapsible", _sequence(c, [], st), stats={"restarts_used": 0})
    st0 = _State(c)
    if not st0.free:
        return CollapseResult(
            "non-collapsible",
            partial=_sequence(c, [], st0),
            reason="no free faces at step 0",
            stats={"free_faces": 0},
        )
    budget = _Budget(budget_steps, budget_seconds)
    if strategy == "greedy":
        return _greedy(c, seed, restarts, budget)
    if strategy == "exhaustive":
        return _exhaustive(c, depth_limit, budget)
    raise InvalidInputError(f"unknown strategy {strategy!r}")


def _greedy(c, seed, restarts, budget):
    best = None
    stats = {"restarts_used": 0}
    for r in range(restarts):
        rng = np.random.default_rng(seed + r)
        st = _State(c)
        steps = []
        while st.free:
            budget.tick(stats)
            options = st.free_collapses()
            top = options[0].dimension
            options = [e for e in options if e.dimension == top]
            e = options[int(rng.integers(len(options)))]
            st.apply(e)
            steps.append(e)
        stats["restarts_used"] = r + 1
        seq = _sequence(c, steps, st)
        if seq.is_full:
            stats["seed"] = seed + r
            return CollapseResult("collapsible", seq, stats=stats)
        if best is None or len(st.faces) < best[0]:
            best = (len(st.faces), seq)
    return CollapseResult(
        "not-found",
        partial=best[1],
        reason=f"greedy search stuck after {restarts} restarts (smallest core has {best[0]} faces)",
        stats=stats,
    )


def _exhaustive(c, depth_limit, budget):
    visited = set()
    stats = {"states": 0, "depth_cutoffs": 0}
    st = _State(c)
    path = []

    def dfs(depth):
        if len(st.faces) == 1:
            return True
        key = frozenset(st.faces)
        if key in visited:
            return False
        visited.add(key)
        stats["states"] += 1
        if depth_limit is not None and depth >= depth_limit:
            stats["depth_cutoffs"] += 1
            return False
        for e in st.free_collapses():
            budget.tick(stats)
            saved = st.copy()
            st.apply(e)
            path.append(e)
            if dfs(depth + 1):
                return True
            path.pop()
            st.faces, st.co, st.free = saved.faces, saved.co, saved.free
        return False

    if dfs(0):
        return CollapseResult("collapsible", _sequence(c, path, st), stats=stats)
    partial = _sequence(c, [], _State(c))
    if stats["depth_cutoffs"]:
        return CollapseResult("not-found", partial=partial, reason="depth limit reached", stats=stats)
    return CollapseResult("non-collapsible", partial=partial, reason="exhaustive search exhausted", stats=stats)


def cone_collapse(c: SimplicialComplex, apex=None) -> CollapseSequence:
    """Certificate collapsing a cone onto its apex.

    Every face ``s`` missing the apex is collapsed into ``s + apex``, top
    dimension first. The reverse order adds one cone ``apex * s`` at a
    time, which keeps reverse constructions small.
    """
    if apex is None:
        common = set(c.vertices)
        for f in c.facets:
            common &= set(f)
        if not common:
            raise InvalidInputError("complex is not a cone")
        apex = min(common, key=repr)
    if any(apex not in f for f in c.facets):
        raise InvalidInputError(f"complex is not a cone with apex {apex!r}")
    base = [f for f in c.faces if apex not in f]
    base.sort(key=lambda f: (-len(f), f))
    steps = tuple(ElementaryCollapse(f, make_face(f + (apex,))) for f in base)
    return CollapseSequence(steps, complex_id(c), complex_id(SimplicialComplex([(apex,)])), apex)
