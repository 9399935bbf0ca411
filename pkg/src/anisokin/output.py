"""File writers: VTK snapshots, JSON summaries, diagnostics CSV, failure dumps."""

import csv
import json
import os

import numpy as np


def _ensure_dir(path):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)


def write_vtk(path, state):
    """Legacy ASCII structured-points file with cell data."""
    g = state.grid
    _ensure_dir(path)
    # VTK cell data runs x fastest, so transpose the (i, j) arrays
    flat = lambda a: np.asarray(a).T.ravel()
    uc, vc = state.flow.v.to_centers()
    lines = ["# vtk DataFile Version 3.0", f"anisokin t={state.t!r}", "ASCII", "DATASET STRUCTURED_POINTS",
             f"DIMENSIONS {g.nx + 1} {g.ny + 1} 1", "ORIGIN 0 0 0", f"SPACING {g.hx!r} {g.hy!r} 1",
             f"CELL_DATA {g.size}"]
    for name, arr in (("c_plus", state.charges.c_plus), ("c_minus", state.charges.c_minus),
                      ("psi", state.psi), ("pressure", state.flow.p)):
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [" ".join(f"{x:.17g}" for x in flat(arr))]
    lines.append("VECTORS velocity double")
    lines += [f"{a:.17g} {b:.17g} 0" for a, b in zip(flat(uc), flat(vc))]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_vtk_scalars(path):
    """Minimal reader for files written by :func:`write_vtk` (used in tests and demos)."""
    with open(path) as fh:
        tokens = fh.read().split("\n")
    dims = next(l for l in tokens if l.startswith("DIMENSIONS")).split()[1:3]
    nx, ny = int(dims[0]) - 1, int(dims[1]) - 1
    out = {}
    for k, line in enumerate(tokens):
        if line.startswith("SCALARS"):
            name = line.split()[1]
            vals = np.array(tokens[k + 2].split(), float)
            out[name] = vals.reshape(ny, nx).T
    return out


def write_summary(path, summary):
    _ensure_dir(path)
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_rows(path, rows, columns):
    _ensure_dir(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(float(r[c])) if isinstance(r[c], (float, np.floating)) else r[c] for c in columns])


def dump_state(path, state):
    _ensure_dir(path)
    np.savez(path, t=state.t, u=state.flow.v.u, v=state.flow.v.v, p=state.flow.p,
             c_plus=state.charges.c_plus, c_minus=state.charges.c_minus, psi=state.psi, phi=state.phi,
             xi=state.xi)
    return path


def diagnostics_path(ledger_path):
    stem, _ = os.path.splitext(ledger_path)
    return stem + "_diagnostics.csv"
