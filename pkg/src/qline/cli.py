"""Command-line entry point: ``qline trace|spectrum|sectors|adiabatic|qma|orbits``.

Exit codes: 0 on success, 2 when a promise is violated, 1 on any error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import adiabatic as ad
from . import automaton as am
from . import hamiltonian as hm
from . import qma
from . import sectors as sec
from . import spectral
from .circuit import CircuitError, basis_state, identity_circuit, load_circuit
from .report import dump_json, fmt


def emit(text: str, out: str | None) -> None:
    if out is None:
        click.echo(text, nl=False)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


def _circuit(circuit: str | None, n: int | None, r: int | None):
    if circuit:
        return load_circuit(circuit)
    if n is None or r is None:
        raise click.UsageError("give --circuit or both --n and --r")
    return identity_circuit(n, r)


class Failure(click.ClickException):
    exit_code = 1


class _Group(click.Group):
    """Every error, usage errors included, exits with status 1; 2 is reserved."""

    def main(self, *args, standalone_mode=True, **kwargs):
        try:
            rv = super().main(*args, standalone_mode=False, **kwargs)
        except click.ClickException as exc:
            exc.show()
            sys.exit(1)
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(1)
        sys.exit(rv if isinstance(rv, int) else 0)


@click.group(cls=_Group)
@click.option("--workers", default=1, show_default=True, help="Worker count; results never depend on it.")
@click.pass_context
def main(ctx, workers):
    """Line-Hamiltonian construction for nearest-neighbour circuits."""
    ctx.obj = {"workers": workers}


@main.command()
@click.option("--n", type=int, help="Qubits per block.")
@click.option("--r", type=int, help="Number of rounds (blocks).")
@click.option("--circuit", type=click.Path(exists=True, dir_okay=False), help="Circuit file; sets n and R.")
@click.option("--shape", help="Start from this shape instead of the initial one.")
@click.option("--alphabet", type=click.Choice(["12", "9", "13"]), default="12", show_default=True)
@click.option("--format", "form", type=click.Choice(["ascii", "json"]), default="ascii", show_default=True)
@click.option("--max-steps", type=int, default=None)
@click.option("-o", "--out", type=click.Path(dir_okay=False))
def trace(n, r, circuit, shape, alphabet, form, max_steps, out):
    """Print the forward trace, one shape per line."""
    try:
        if shape:
            start = am.parse_shape(shape, n, int(alphabet))
        else:
            c = _circuit(circuit, n, r)
            start = am.initial_shape(c.n, c.R, int(alphabet))
        shapes = am.trace(start, max_steps)
    except (am.ShapeError, CircuitError) as exc:
        raise Failure(str(exc))
    if form == "ascii":
        emit("".join(s.render() + "\n" for s in shapes), out)
    else:
        emit(json.dumps([s.render() for s in shapes], indent=1) + "\n", out)


@main.command()
@click.option("--n", type=int)
@click.option("--r", type=int)
@click.option("--circuit", type=click.Path(exists=True, dir_okay=False))
@click.option("--operator", type=click.Choice(["prop", "h0", "full"]), default="prop", show_default=True)
@click.option("--space", type=click.Choice(["legal", "full"]), default="legal", show_default=True)
@click.option("--k", "k", type=int, default=8, show_default=True)
@click.option("-o", "--out", type=click.Path(dir_okay=False))
def spectrum(n, r, circuit, operator, space, k, out):
    """Smallest eigenvalues as CSV (index, eigenvalue, residual)."""
    try:
        c = _circuit(circuit, n, r)
        basis = hm.Basis.legal(c.n, c.R) if space == "legal" else hm.Basis.full(c.n, c.R)
        if operator == "prop":
            H = hm.build_hprop(c, basis)
        elif operator == "h0":
            H = hm.build_h0_adiabatic(basis)
        else:
            H = hm.full_h(c, basis)
        k = min(k, basis.dim)
        res = spectral.smallest_eigs(H, k) if space == "legal" else spectral.block_spectrum(H, k)
    except (hm.BasisError, CircuitError, spectral.ConvergenceError) as exc:
        raise Failure(str(exc))
    emit(spectral.spectrum_csv(res), out)


@main.command()
@click.option("--n", type=int)
@click.option("--r", type=int)
@click.option("--circuit", type=click.Path(exists=True, dir_okay=False))
@click.option("--outdir", type=click.Path(file_okay=False), help="Write sectors.jsonl and summary.csv here.")
def sectors(n, r, circuit, outdir):
    """Per-orbit report over the full shape space (chain length at most 6)."""
    try:
        c = _circuit(circuit, n, r)
        orbits = sec.decompose(c.n, c.R)
    except (sec.SectorError, CircuitError) as exc:
        raise Failure(str(exc))
    recs = sec.sector_records(orbits, c)
    lines = sec.records_jsonl(recs)
    summary = sec.summary_csv(recs)
    if outdir:
        emit(lines, str(Path(outdir) / "sectors.jsonl"))
        emit(summary, str(Path(outdir) / "summary.csv"))
    else:
        emit(summary, None)


@main.command()
@click.option("--n", type=int, help="Shape parameters when no circuit is given")
@click.option("--r", type=int)
@click.option("--shape", help="Print the orbit containing this shape.")
def orbits(n, r, shape):
    """List orbits (id, type, size, first member) or the members of one orbit."""
    try:
        if shape:
            s = am.parse_shape(shape, n)
            o = sec.make_orbit(sec.orbit_of(s))
            click.echo(f"# type {o.type} size {len(o)} detectable_fraction {fmt(o.detectable_fraction)}")
            for m, v in zip(o.shapes, o.violations):
                click.echo(f"{m.render()}\t{v}")
            return
        if n is None or r is None:
            raise click.UsageError("give --shape or both --n and --r")
        for k, o in enumerate(sec.decompose(n, r)):
            click.echo(f"{k}\t{o.type}\t{len(o)}\t{o.shapes[0].render()}")
    except (am.ShapeError, sec.SectorError) as exc:
        raise Failure(str(exc))


@main.command()
@click.option("--n", type=int)
@click.option("--r", type=int)
@click.option("--circuit", type=click.Path(exists=True, dir_okay=False))
@click.option("--T", "T", type=float, default=None, help="Total time; omit for a doubling sweep.")
@click.option("--target", type=float, default=0.99, show_default=True)
@click.option("--input", "bits", default=None, help="Input bit string (default all zeros).")
@click.option("-o", "--out", type=click.Path(dir_okay=False), help="JSON report path.")
@click.option("--gap-csv", type=click.Path(dir_okay=False), help="Gap-vs-s CSV path.")
def adiabatic(n, r, circuit, T, target, bits, out, gap_csv):
    """Evolve under the interpolated Hamiltonian and decode the output."""
    try:
        c = _circuit(circuit, n, r)
        sector = ad.LegalSector(c)
        x = 0 if bits is None else int(bits, 2)
        if not 0 <= x < 2**c.n:
            raise click.UsageError(f"input must have {c.n} bits")
        scan = ad.min_gap_scan(sector)
        init = sector.initial_state(x)
        if T is None:
            sweep = []
            Tk = 1.0
            while True:
                psi = ad.evolve(sector, ad.Schedule(Tk), init)
                fid = ad.ground_fidelity(sector, psi)
                sweep.append({"T": Tk, "fidelity": fid})
                if fid >= target or Tk >= 2.0**20:
                    break
                Tk *= 2
            T = Tk
        else:
            psi = ad.evolve(sector, ad.Schedule(T), init)
            sweep = [{"T": T, "fidelity": ad.ground_fidelity(sector, psi)}]
        decoded = ad.decode_output(sector, psi)
    except (CircuitError, ad.NormDriftError, ad.DecodeError, ValueError) as exc:
        raise Failure(str(exc))
    oracle = np.abs(c.unitary() @ basis_state(format(x, f"0{c.n}b"))) ** 2
    report = {
        "T": T,
        "K": sector.K,
        "fidelity": decoded.fidelity,
        "g_min": scan.g_min,
        "s*": scan.s_star,
        "gap_bound": scan.bound,
        "final_weight": decoded.final_weight,
        "output_distribution": decoded.distribution,
        "oracle_distribution": {format(k, f"0{c.n}b"): float(p) for k, p in enumerate(oracle)},
        "sweep": sweep,
    }
    emit(dump_json(report) + "\n", out)
    if gap_csv:
        emit(scan.csv(), gap_csv)


def _family(text: str):
    out = []
    for part in text.split(";"):
        a, b = part.split(",")
        out.append((int(a), int(b)))
    return out


@main.command("qma")
@click.option("--instance", type=click.Path(exists=True, dir_okay=False), help="Instance file.")
@click.option("--circuit", type=click.Path(exists=True, dir_okay=False))
@click.option("--E", "E", type=float)
@click.option("--delta", type=float)
@click.option("--scan", default=None, help="Separation scan over sizes, e.g. '2,2;2,3;2,4;3,2'.")
@click.option("-o", "--out", type=click.Path(dir_okay=False))
def qma_cmd(instance, circuit, E, delta, scan, out):
    """Decide an instance (exit 2 if the promise is violated) or run a separation scan."""
    try:
        if scan:
            rows, fits = qma.separation_scan(_family(scan))
            header = "n,R,K,E0_yes,E0_yes_p,E0_no,ratio,legal_no,data_no\n"
            body = "".join(
                ",".join([str(x.n), str(x.R), str(x.K)] + [fmt(v) for v in (x.E0_yes, x.E0_yes_p, x.E0_no, x.ratio, x.legal_no, x.data_no)]) + "\n"
                for x in rows
            )
            emit(header + body, out)
            click.echo(dump_json(fits), err=True)
            return
        if instance:
            inst = qma.load_instance(instance)
        elif circuit and E is not None and delta is not None:
            inst = qma.Instance(load_circuit(circuit), E, delta)
        else:
            raise click.UsageError("give --instance, or --circuit with --E and --delta")
        verdict = qma.decide(inst)
    except (CircuitError, qma.ScopeError, ValueError) as exc:
        raise Failure(str(exc))
    emit(dump_json(verdict.as_dict()) + "\n", out)
    if verdict.decision == qma.VIOLATED:
        sys.exit(2)


if __name__ == "__main__":
    main()
