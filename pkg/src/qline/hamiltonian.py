"""Sparse Hamiltonian terms over the shape (x) data basis.

A basis is an explicit list of shapes; each shape contributes ``2**w`` states where
``w`` is its number of qubit-carrying sites. Within a shape the data bits are in site
order with the leftmost slot most significant. The full-space basis sorts shapes by
their rendering; the legal basis keeps time order.

Operators are ``scipy.sparse.csr_matrix`` objects.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from . import automaton as am
from .automaton import Shape
from .circuit import CanonicalCircuit, CircuitError, is_identity

FULL_SPACE_MAX_L = 6


class BasisError(ValueError):
    pass


class Basis:
    def __init__(self, shapes: Sequence[Shape]):
        self.shapes = list(shapes)
        if not self.shapes:
            raise BasisError("empty basis")
        self.n = self.shapes[0].n
        self.R = self.shapes[0].R
        self.alphabet = self.shapes[0].alphabet
        self.index = {s.symbols: k for k, s in enumerate(self.shapes)}
        if len(self.index) != len(self.shapes):
            raise BasisError("duplicate shapes in basis")
        self.widths = np.array([s.data_width for s in self.shapes], dtype=np.int64)
        self.offsets = np.concatenate([[0], np.cumsum(2**self.widths)])
        self.dim = int(self.offsets[-1])

    @classmethod
    def full(cls, n: int, R: int, alphabet: int = 12) -> "Basis":
        if n * R > FULL_SPACE_MAX_L:
            raise BasisError(f"full-space assembly is limited to L <= {FULL_SPACE_MAX_L}")
        codes = am.all_codes(n * R, alphabet)
        shapes = am.codes_to_shapes(codes, n, alphabet)
        return cls(sorted(shapes))

    @classmethod
    def legal(cls, n: int, R: int, alphabet: int = 12) -> "Basis":
        return cls(am.legal_trace(n, R, alphabet))

    def __len__(self):
        return len(self.shapes)

    def __contains__(self, shape: Shape):
        return shape.symbols in self.index

    def block(self, shape: Shape) -> slice:
        k = self.index[shape.symbols]
        return slice(int(self.offsets[k]), int(self.offsets[k + 1]))

    def state_index(self, shape: Shape, bits: Sequence[int]) -> int:
        if len(bits) != shape.data_width:
            raise BasisError(f"{shape} holds {shape.data_width} data bits, got {len(bits)}")
        x = int("".join(map(str, bits)), 2) if bits else 0
        return self.block(shape).start + x

    def shape_of_state(self) -> np.ndarray:
        """Shape id of every basis state."""
        return np.repeat(np.arange(len(self.shapes)), 2**self.widths)

    def codes(self) -> np.ndarray:
        sym = am.ALPHABETS[self.alphabet]
        lut = {x: k for k, x in enumerate(sym)}
        return np.array([[lut[x] for x in s.symbols] for s in self.shapes], dtype=np.int8)

    def projector_mask(self, shapes: Iterable[Shape]) -> np.ndarray:
        """Boolean mask over basis states belonging to the given shapes."""
        mask = np.zeros(self.dim, dtype=bool)
        for s in shapes:
            mask[self.block(s)] = True
        return mask


# -- data flow ---------------------------------------------------------------------------


def data_map(shape: Shape, app: am.RuleApplication, c: CanonicalCircuit | None) -> sp.spmatrix:
    """Linear map from the data of ``shape`` to the data of its forward successor."""
    w = shape.data_width
    if app.direction != "forward":
        raise ValueError("data maps are defined for forward applications")
    if app.kind == "move":
        return sp.identity(2**w, dtype=complex, format="csr")
    k = shape.slot(app.site)
    if app.kind == "gate":
        if c is None:
            raise ValueError("gate rule needs a circuit")
        u = c.gate(app.block, app.offset)
        return sp.kron(sp.kron(sp.identity(2**k), sp.csr_matrix(u)), sp.identity(2 ** (w - k - 2)), format="csr")
    if app.kind == "fresh0":
        ket0 = sp.csr_matrix(np.array([[1], [0]], dtype=complex))
        return sp.kron(sp.kron(sp.identity(2 ** (k + 1)), ket0), sp.identity(2 ** (w - k - 1)), format="csr")
    raise ValueError(app.kind)


def _ramp(lengths: np.ndarray) -> np.ndarray:
    starts = np.cumsum(lengths) - lengths
    return np.arange(int(lengths.sum())) - np.repeat(starts, lengths)


def _check_circuit(c: CanonicalCircuit, n: int, R: int):
    if (c.n, c.R) != (n, R):
        raise CircuitError(f"circuit is {c.n}x{c.R}, basis is {n}x{R}")


def build_hprop(c: CanonicalCircuit | None, basis: Basis, strict: bool = True) -> sp.csr_matrix:
    """Propagation Hamiltonian: one term 1/2 (|a><a| + |b><b| - |b><a| - |a><b|) per rule match.

    ``strict`` rejects transitions leaving the basis; otherwise they are dropped, which
    only makes sense when the caller knows the basis is not closed.
    """
    if c is not None:
        _check_circuit(c, basis.n, basis.R)
    moves_a, moves_b, moves_d = [], [], []
    rows, cols, vals = [], [], []
    cache: dict = {}
    for k, s in enumerate(basis.shapes):
        for t, app in am.successors(s):
            j = basis.index.get(t.symbols)
            if j is None:
                if strict:
                    raise BasisError(f"{s} -> {t} leaves the basis")
                continue
            oa, ob = int(basis.offsets[k]), int(basis.offsets[j])
            if app.kind == "move":
                moves_a.append(oa)
                moves_b.append(ob)
                moves_d.append(2 ** int(basis.widths[k]))
                continue
            key = (s.data_width, s.slot(app.site), app.kind, app.block, app.offset)
            if key not in cache:
                m = data_map(s, app, c).tocoo()
                cache[key] = (m, (m @ m.conj().T).tocoo())
            m, mm = cache[key]
            da = 2 ** int(basis.widths[k])
            rows += [oa + np.arange(da), ob + mm.row, ob + m.row, oa + m.col]
            cols += [oa + np.arange(da), ob + mm.col, oa + m.col, ob + m.row]
            vals += [np.full(da, 0.5), 0.5 * mm.data, -0.5 * m.data, -0.5 * m.data.conj()]
    if moves_d:
        d = np.array(moves_d)
        ramp = _ramp(d)
        a = np.repeat(moves_a, d) + ramp
        b = np.repeat(moves_b, d) + ramp
        half = np.full(a.size, 0.5)
        rows += [a, b, a, b]
        cols += [a, b, b, a]
        vals += [half, half, -half, -half]
    if not rows:
        return sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    rows, cols, vals = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals).astype(complex)
    return sp.coo_matrix((vals, (rows, cols)), shape=(basis.dim, basis.dim)).tocsr()


def _diag(values: np.ndarray) -> sp.csr_matrix:
    return sp.diags(values.astype(complex), format="csr")


def flag_bit_diagonal(basis: Basis, site: int, bit: int) -> np.ndarray:
    """Indicator over basis states: gate flag on ``site`` holding data ``bit``."""
    out = np.zeros(basis.dim)
    for k, s in enumerate(basis.shapes):
        if s[site] != "G":
            continue
        w = int(basis.widths[k])
        slot = s.slot(site)
        x = np.arange(2**w)
        out[basis.offsets[k] : basis.offsets[k + 1]] = ((x >> (w - 1 - slot)) & 1) == bit
    return out


def hinit_diagonal(c: CanonicalCircuit, basis: Basis) -> np.ndarray:
    out = np.zeros(basis.dim)
    for i in c.ancillas:
        out += flag_bit_diagonal(basis, i, 1)
    return out


def hfinal_site(c: CanonicalCircuit) -> int:
    return (c.R - 1) * c.n + c.out


def hfinal_diagonal(c: CanonicalCircuit, basis: Basis) -> np.ndarray:
    return flag_bit_diagonal(basis, hfinal_site(c), 0)


def penalty_diagonal(basis: Basis) -> np.ndarray:
    if basis.alphabet != 12:
        raise BasisError("penalty patterns are defined for the 12-state alphabet")
    counts = am.penalty_counts(basis.codes(), basis.n).astype(float)
    return np.repeat(counts, 2**basis.widths)


def _require_first_last_identity(c: CanonicalCircuit):
    for r in (0, c.R - 1):
        if not all(is_identity(g) for g in c.rounds[r]):
            raise CircuitError(f"round {r} must be identity-only")


def build_hinit(c: CanonicalCircuit, basis: Basis) -> sp.csr_matrix:
    _check_circuit(c, basis.n, basis.R)
    _require_first_last_identity(c)
    return _diag(hinit_diagonal(c, basis))


def build_hfinal(c: CanonicalCircuit, basis: Basis) -> sp.csr_matrix:
    _check_circuit(c, basis.n, basis.R)
    _require_first_last_identity(c)
    return _diag(hfinal_diagonal(c, basis))


def build_hpenalty(basis: Basis) -> sp.csr_matrix:
    return _diag(penalty_diagonal(basis))


def build_h0_adiabatic(basis: Basis) -> sp.csr_matrix:
    """``I - |G(0)><G(0)|`` on the first site."""
    return _diag(1.0 - flag_bit_diagonal(basis, 0, 0))


def start_state_penalties(basis: Basis) -> np.ndarray:
    """Diagonal of the conditional chain that pins the start-state initial shape.

    Terms: gate on site 0 needs S on site 1; S on site i needs S on i+1 inside the first
    block; S on the last first-block site needs E after it; beyond the first block E
    must be followed by E.
    """
    if basis.alphabet != 13:
        raise BasisError("start-state terms need the 13-state alphabet")
    n, L = basis.n, basis.n * basis.R
    counts = np.zeros(len(basis.shapes))
    for k, s in enumerate(basis.shapes):
        v = int(s[0] == "G" and s[1] != "S")
        v += sum(s[i] == "S" and s[i + 1] != "S" for i in range(1, n - 1))
        v += int(s[n - 1] == "S" and s[n] != "E")
        v += sum(s[i] == "E" and s[i + 1] != "E" for i in range(n, L - 1))
        counts[k] = v
    return np.repeat(counts, 2**basis.widths)


def build_13state_terms(basis: Basis) -> sp.csr_matrix:
    return _diag(start_state_penalties(basis))


def build_h0_13(basis: Basis) -> sp.csr_matrix:
    return build_h0_adiabatic(basis) + build_13state_terms(basis)


def build_h1_13(c: CanonicalCircuit, basis: Basis) -> sp.csr_matrix:
    return build_hprop(c, basis) + build_13state_terms(basis)


def full_h(c: CanonicalCircuit, basis: Basis) -> sp.csr_matrix:
    """``H_prop + H_init + H_final + H_penalty`` on one basis."""
    diag = hinit_diagonal(c, basis) + hfinal_diagonal(c, basis) + penalty_diagonal(basis)
    return (build_hprop(c, basis) + _diag(diag)).tocsr()


def interpolate(h0, h1, s: float):
    """``(1 - s) H0 + s H1``."""
    return (1 - s) * h0 + s * h1


# -- history states ------------------------------------------------------------------------


def history_frames(c: CanonicalCircuit, psi0: np.ndarray, alphabet: int = 12) -> list[tuple[Shape, np.ndarray]]:
    """Follow the legal trace, carrying the data vector through each rule."""
    shape = am.initial_shape(c.n, c.R, alphabet)
    vec = np.asarray(psi0, dtype=complex)
    if vec.shape != (2**shape.data_width,):
        raise BasisError(f"input must have {2 ** shape.data_width} amplitudes")
    frames = [(shape, vec)]
    while True:
        nxt = am.forward(shape)
        if nxt is None:
            return frames
        new, app = nxt
        vec = data_map(shape, app, c) @ vec
        shape = new
        frames.append((shape, vec))


def history_state(c: CanonicalCircuit, psi0: np.ndarray, basis: Basis, alphabet: int = 12) -> np.ndarray:
    frames = history_frames(c, psi0, alphabet)
    out = np.zeros(basis.dim, dtype=complex)
    for shape, vec in frames:
        out[basis.block(shape)] = vec
    return out / np.sqrt(len(frames))


def history_basis(c: CanonicalCircuit, basis: Basis, x: int = 0, alphabet: int = 12) -> np.ndarray:
    """Columns ``|gamma_x(t)>`` for ``t = 0..K`` with input the computational state ``x``."""
    w = am.initial_shape(c.n, c.R, alphabet).data_width
    psi0 = np.zeros(2**w, dtype=complex)
    psi0[x] = 1
    frames = history_frames(c, psi0, alphabet)
    cols = np.zeros((basis.dim, len(frames)), dtype=complex)
    for t, (shape, vec) in enumerate(frames):
        cols[basis.block(shape), t] = vec
    return cols


def restrict_to_history_basis(c: CanonicalCircuit, op: sp.spmatrix | None = None, x: int = 0, alphabet: int = 12):
    """Matrix of ``op`` (default ``H_prop``) in the basis ``|gamma_x(t)>``."""
    basis = Basis.legal(c.n, c.R, alphabet)
    if op is None:
        op = build_hprop(c, basis)
    v = history_basis(c, basis, x, alphabet)
    return v.conj().T @ (op @ v)


def path_matrix(K: int) -> np.ndarray:
    """Tridiagonal diag(1/2, 1, ..., 1, 1/2) with -1/2 off the diagonal, size K+1."""
    m = np.diag(np.full(K + 1, 1.0)) - 0.5 * np.eye(K + 1, k=1) - 0.5 * np.eye(K + 1, k=-1)
    m[0, 0] = m[K, K] = 0.5
    return m


# -- export ----------------------------------------------------------------------------------


def is_hermitian(op, tol: float = 1e-12) -> bool:
    d = op - op.conj().T
    return (abs(d).max() if d.nnz else 0.0) <= tol


def export_triplets(op: sp.spmatrix, path: str | Path) -> None:
    """Write ``dim nnz`` then one ``row col re im`` line per nonzero, row-major."""
    m = sp.csr_matrix(op)
    m.sum_duplicates()
    m.sort_indices()
    coo = m.tocoo()
    lines = [f"{m.shape[0]} {m.nnz}"]
    lines += [f"{r} {c} {v.real:.17g} {v.imag:.17g}" for r, c, v in zip(coo.row, coo.col, coo.data)]
    Path(path).write_text("\n".join(lines) + "\n")


def load_triplets(path: str | Path) -> sp.csr_matrix:
    with open(path) as fh:
        dim, nnz = map(int, fh.readline().split())
        data = np.loadtxt(fh, ndmin=2) if nnz else np.zeros((0, 4))
    if len(data) != nnz:
        raise ValueError(f"{path}: header says {nnz} entries, found {len(data)}")
    rows, cols = data[:, 0].astype(int), data[:, 1].astype(int)
    return sp.csr_matrix((data[:, 2] + 1j * data[:, 3], (rows, cols)), shape=(dim, dim))
