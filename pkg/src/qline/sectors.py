"""Invariant shape sets under the transition rules and their energy certificates.

An orbit is a connected component of the graph whose edges are single rule
applications (forward or backward, anywhere on the chain). Orbits are
type 1 (all legal), type 2 (all illegal, every member violates a penalty pattern) or
type 3 (all illegal, some member violates nothing).
"""

from __future__ import annotations

import csv
import functools
import io
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import automaton as am
from . import spectral
from .automaton import Shape
from .circuit import CanonicalCircuit, step_count
from .hamiltonian import Basis, build_hprop, hfinal_diagonal, hinit_diagonal, penalty_diagonal
from .report import dump_json

FULL_ENUMERATION_MAX_L = 6
SEED_ENUMERATION_MAX_L = 8


class SectorError(ValueError):
    pass


@dataclass
class Orbit:
    shapes: tuple[Shape, ...]
    violations: tuple[int, ...]
    legal: tuple[bool, ...]
    type: int = field(init=False)

    def __post_init__(self):
        self.type = classify(self)

    def __len__(self):
        return len(self.shapes)

    @property
    def n(self) -> int:
        return self.shapes[0].n

    @property
    def R(self) -> int:
        return self.shapes[0].R

    @property
    def data_width(self) -> int:
        return self.shapes[0].data_width

    @property
    def dim(self) -> int:
        return sum(2**s.data_width for s in self.shapes)

    @property
    def detectable_fraction(self) -> float:
        return sum(v > 0 for v in self.violations) / len(self.shapes)

    @property
    def actives(self) -> int:
        return len(self.shapes[0].actives())


def classify(orbit: Orbit) -> int:
    if all(orbit.legal):
        return 1
    if any(orbit.legal):
        raise SectorError(f"orbit of {orbit.shapes[0]} mixes legal and illegal shapes")
    return 2 if all(v > 0 for v in orbit.violations) else 3


def orbit_of(seed: Shape) -> list[Shape]:
    """All shapes reachable from ``seed`` by forward and backward rule applications."""
    seen = {seed.symbols: seed}
    queue = deque([seed])
    while queue:
        s = queue.popleft()
        for t, _ in am.successors(s) + am.predecessors(s):
            if t.symbols not in seen:
                seen[t.symbols] = t
                queue.append(t)
    return sorted(seen.values())


def make_orbit(shapes) -> Orbit:
    shapes = tuple(sorted(shapes))
    return Orbit(shapes, tuple(am.penalty_count(s) for s in shapes), tuple(am.is_legal(s) for s in shapes))


def decompose(n: int, R: int, alphabet: int = 12, single_active: bool = False) -> list[Orbit]:
    """Partition the shape space into orbits, ordered by smallest member.

    The full space is enumerated for ``L <= 6``; ``single_active`` restricts to shapes
    with exactly one active site (closed under the rules, since they conserve the
    number of active sites).
    """
    L = n * R
    if single_active:
        codes = am.single_active_codes(L, alphabet)
    elif L <= FULL_ENUMERATION_MAX_L:
        codes = am.all_codes(L, alphabet)
    else:
        raise SectorError(f"full enumeration is limited to L <= {FULL_ENUMERATION_MAX_L}")
    shapes = sorted(am.codes_to_shapes(codes, n, alphabet))
    seen: set[str] = set()
    orbits = []
    for s in shapes:
        if s.symbols in seen:
            continue
        members = orbit_of(s)
        seen.update(m.symbols for m in members)
        orbits.append(make_orbit(members) if alphabet == 12 else Orbit(tuple(members), (0,) * len(members), tuple(am.is_legal(m) for m in members)))
    return orbits


def undetectable_seeds(n: int, R: int) -> list[Shape]:
    """Every 12-state shape with no penalty hit, by vectorised enumeration.

    The full space is scanned for ``L <= 8``; beyond that only single-active shapes.
    """
    L = n * R
    if L <= SEED_ENUMERATION_MAX_L:
        m = len(am.ALPHABETS[12])
        out = []
        # chunk on the first site to bound memory
        for first in range(m):
            rest = am.all_codes(L - 1, 12)
            codes = np.concatenate([np.full((len(rest), 1), first, dtype=np.int8), rest], axis=1)
            pc = am.penalty_counts(codes, n)
            out.append(codes[pc == 0])
            del rest, codes, pc
        codes = np.concatenate(out)
    else:
        codes = am.single_active_codes(L, 12)
        codes = codes[am.penalty_counts(codes, n) == 0]
    return sorted(am.codes_to_shapes(codes, n, 12))


@functools.lru_cache(maxsize=8)
def low_energy_orbits(n: int, R: int) -> tuple[Orbit, ...]:
    """Orbits that contain at least one shape without penalty hits (types 1 and 3).

    All other orbits are type 2 and carry energy at least 1.
    """
    seen: set[str] = set()
    orbits = []
    for s in undetectable_seeds(n, R):
        if s.symbols in seen:
            continue
        members = orbit_of(s)
        seen.update(m.symbols for m in members)
        orbits.append(make_orbit(members))
    return tuple(orbits)


def legal_orbit(n: int, R: int) -> Orbit:
    return make_orbit(am.legal_trace(n, R))


# -- sector operators ----------------------------------------------------------------------


def sector_basis(orbit: Orbit) -> Basis:
    return Basis(orbit.shapes)


def sector_operator(orbit: Orbit, c: CanonicalCircuit | None, terms=("prop", "penalty"), dense_limit=spectral.DENSE_LIMIT, sparse=False):
    """Restriction of the chosen terms to the span of the orbit's shapes.

    ``terms`` is any of ``prop``, ``penalty``, ``init``, ``final``. Dense output is
    refused above ``dense_limit``; pass ``sparse=True`` for the iterative path.
    """
    basis = sector_basis(orbit)
    if not sparse and basis.dim > dense_limit:
        raise SectorError(f"sector dimension {basis.dim} exceeds {dense_limit}; use sparse=True")
    H = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    diag = np.zeros(basis.dim)
    if "prop" in terms:
        H = H + build_hprop(c, basis)
    if "penalty" in terms:
        diag += penalty_diagonal(basis)
    if "init" in terms:
        diag += hinit_diagonal(c, basis)
    if "final" in terms:
        diag += hfinal_diagonal(c, basis)
    H = (H + sp.diags(diag.astype(complex))).tocsr()
    return H if sparse else H.toarray()


def reduced_operator(orbit: Orbit) -> np.ndarray:
    if orbit.actives != 1:
        raise SectorError("the shape-level reduction needs exactly one active site")
    return _reduced(orbit)


def _reduced(orbit: Orbit) -> np.ndarray:
    """Shape-level matrix of ``H_prop + H_penalty`` on the orbit.

    Along an orbit every shape has at most one successor and one predecessor, and
    gate transitions never lie on a cycle, so the data maps can be absorbed into a
    per-shape change of basis. The sector operator is then this matrix tensored with
    the identity on the data.
    """
    idx = {s.symbols: k for k, s in enumerate(orbit.shapes)}
    A = np.diag(np.array(orbit.violations, dtype=float))
    for k, s in enumerate(orbit.shapes):
        for t, _ in am.successors(s):
            j = idx[t.symbols]
            A[k, k] += 0.5
            A[j, j] += 0.5
            A[k, j] -= 0.5
            A[j, k] -= 0.5
    return A


def sector_min_energy(orbit: Orbit, c: CanonicalCircuit, terms=("prop", "penalty", "init", "final")) -> float:
    if orbit.dim <= spectral.DENSE_LIMIT:
        return float(np.linalg.eigvalsh(sector_operator(orbit, c, terms))[0])
    H = sector_operator(orbit, c, terms, sparse=True)
    return float(spectral.smallest_eigs(H, 1).eigenvalues[0])


@dataclass
class SectorBound:
    orbit_id: int
    size: int
    type: int
    detectable_fraction: float
    exact_min_energy: float
    kitaev_bound: float
    v: float
    theta: float
    fraction_constant: float  # c with fraction = 1/(c n^2 R)
    energy_constant: float  # c' with exact = 1/(c' K^3)
    first_violation_steps: int
    certified: bool = True

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def steps_to_violation(orbit: Orbit) -> int:
    """Largest distance from any member to the nearest detectable one (-1 if none is)."""
    idx = {s.symbols: k for k, s in enumerate(orbit.shapes)}
    dist = [-1] * len(orbit)
    queue = deque()
    for k, v in enumerate(orbit.violations):
        if v > 0:
            dist[k] = 0
            queue.append(k)
    if not queue:
        return -1
    while queue:
        k = queue.popleft()
        s = orbit.shapes[k]
        for t, _ in am.successors(s) + am.predecessors(s):
            j = idx[t.symbols]
            if dist[j] < 0:
                dist[j] = dist[k] + 1
                queue.append(j)
    return max(dist)


def clairvoyance_check(orbit: Orbit, c: CanonicalCircuit | None = None, orbit_id: int = -1) -> SectorBound:
    """Certify a type-3 sector: detectable fraction, exact minimum, and the angle bound.

    Uses the full sector operator when it is small enough and the shape-level reduced
    operator otherwise (same spectrum up to multiplicity).
    """
    if orbit.type != 3:
        raise SectorError(f"orbit of {orbit.shapes[0]} is type {orbit.type}, not 3")
    n, R = orbit.n, orbit.R
    K = step_count(n, R)
    frac = orbit.detectable_fraction
    if orbit.dim <= spectral.DENSE_LIMIT:
        A1 = sector_operator(orbit, c, ("prop",))
        A2 = sector_operator(orbit, c, ("penalty",))
    else:
        A2 = np.diag(np.array(orbit.violations, dtype=float))
        A1 = reduced_operator(orbit) - A2
    try:
        cert = spectral.kitaev_bound(A1, A2)
        certified = True
    except spectral.AngleError:
        # null spaces share a vector: a zero-energy state lives in this sector
        exact = float(np.linalg.eigvalsh(A1 + A2)[0])
        cert = spectral.KitaevCertificate(0.0, 0.0, 0.0, exact)
        certified = False
    return SectorBound(
        orbit_id=orbit_id,
        size=len(orbit),
        type=3,
        detectable_fraction=frac,
        exact_min_energy=cert.min_eig,
        kitaev_bound=cert.bound,
        v=cert.v,
        theta=cert.theta,
        fraction_constant=1 / (frac * n * n * R) if frac else float("inf"),
        energy_constant=1 / (cert.min_eig * K**3) if cert.min_eig > 0 else float("inf"),
        first_violation_steps=steps_to_violation(orbit),
        certified=certified,
    )


# -- full-space route (L <= 6) -------------------------------------------------------------


def full_space_operator(c: CanonicalCircuit | None, n: int, R: int, terms=("prop", "penalty")):
    """Full-space basis, operator, and the diagonal of its non-propagation terms."""
    basis = Basis.full(n, R)
    diag = np.zeros(basis.dim)
    if "penalty" in terms:
        diag += penalty_diagonal(basis)
    if "init" in terms:
        diag += hinit_diagonal(c, basis)
    if "final" in terms:
        diag += hfinal_diagonal(c, basis)
    H = build_hprop(c, basis) if "prop" in terms else sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    return basis, (H + sp.diags(diag.astype(complex))).tocsr(), diag


def orbit_minima(orbits: list[Orbit], c: CanonicalCircuit | None, terms=("prop", "penalty"), skip_above: float | None = None) -> np.ndarray:
    """Smallest eigenvalue per orbit from the assembled full-space operator.

    The operator splits into connected blocks, each inside one orbit; blocks whose
    diagonal floor reaches ``skip_above`` report that floor instead (a lower bound).
    """
    n, R = orbits[0].n, orbits[0].R
    basis, H, floor = full_space_operator(c, n, R, terms)
    orbit_of_shape = np.empty(len(basis.shapes), dtype=np.int64)
    for k, o in enumerate(orbits):
        for s in o.shapes:
            orbit_of_shape[basis.index[s.symbols]] = k
    state_orbit = orbit_of_shape[basis.shape_of_state()]
    labels, minima, _ = spectral.component_minima(H, floor if skip_above is not None else None, skip_above)
    comp_orbit = np.empty(len(minima), dtype=np.int64)
    comp_orbit[labels] = state_orbit
    if np.any(comp_orbit[labels] != state_orbit):
        raise SectorError("a connected block straddles two orbits")
    out = np.full(len(orbits), np.inf)
    np.minimum.at(out, comp_orbit, minima)
    return out


# -- reports -----------------------------------------------------------------------------


def _num(x: float) -> float | str:
    return float(f"{x:.17g}") if np.isfinite(x) else str(x)


def sector_records(orbits: list[Orbit], c: CanonicalCircuit | None = None) -> list[dict]:
    """One record per orbit: size, type, detectable fraction, minimum energy and bound.

    Type-2 sectors report the penalty floor ``min(violations)`` as their bound; their
    minimum is computed exactly only when small.
    """
    recs = []
    for k, o in enumerate(orbits):
        rec = {
            "orbit": k,
            "first": o.shapes[0].render(),
            "size": len(o),
            "dim": o.dim,
            "actives": o.actives,
            "type": o.type,
            "detectable_fraction": _num(o.detectable_fraction),
        }
        if o.type == 3:
            b = clairvoyance_check(o, c, k)
            rec.update(min_energy=_num(b.exact_min_energy), bound=_num(b.kitaev_bound), v=_num(b.v), theta=_num(b.theta))
        elif o.type == 2:
            rec["bound"] = _num(float(min(o.violations)))
            if o.dim <= 256:
                rec["min_energy"] = _num(float(np.linalg.eigvalsh(sector_operator(o, c, ("prop", "penalty")))[0]))
        else:
            rec["min_energy"] = _num(float(np.linalg.eigvalsh(reduced_operator(o))[0]))
            rec["bound"] = 0.0
        recs.append(rec)
    return recs


def records_jsonl(recs: list[dict]) -> str:
    return "".join(dump_json(r, indent=None) + "\n" for r in recs)


def summary_csv(recs: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["type", "orbits", "shapes", "min_energy", "min_bound", "min_detectable_fraction"])
    for t in (1, 2, 3):
        rs = [r for r in recs if r["type"] == t]
        if not rs:
            continue
        energies = [r["min_energy"] for r in rs if isinstance(r.get("min_energy"), float)]
        w.writerow(
            [
                t,
                len(rs),
                sum(r["size"] for r in rs),
                f"{min(energies):.17g}" if energies else "",
                f"{min(r['bound'] for r in rs):.17g}",
                f"{min(r['detectable_fraction'] for r in rs):.17g}",
            ]
        )
    return buf.getvalue()
