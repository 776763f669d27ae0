"""JSON/CSV formats for codes, simplicial solutions and run manifests."""

from __future__ import annotations

import csv
import io
import json
import os
import platform
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .kl import CodeParams, CodewordTable
from .simplicial import LVector, RegionSpec, SimplicialSolution

CODE_VERSION = 1
COMPOSITION_ORDER = "suffix-lex"


class FormatError(ValueError):
    """Malformed input file."""


def atomic_write(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- code files ----------------------------------------------------------------

def code_to_dict(table: CodewordTable, metadata: dict | None = None) -> dict:
    p = table.params
    # float repr is the shortest string that round-trips exactly
    rows = [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(table.coeffs, dtype=complex)]
    out = {
        "version": CODE_VERSION,
        "params": {"n": p.n, "q_p": p.q_p, "q_l": p.q_l, "t": p.t},
        "composition_order": COMPOSITION_ORDER,
        "codewords": rows,
    }
    if metadata:
        out["metadata"] = metadata
    return out


def code_from_dict(d: dict) -> tuple:
    try:
        if d["version"] != CODE_VERSION:
            raise FormatError(f"unsupported code file version {d['version']}")
        if d["composition_order"] != COMPOSITION_ORDER:
            raise FormatError(f"unknown composition order {d['composition_order']!r}")
        pr = d["params"]
        params = CodeParams(int(pr["n"]), int(pr["q_p"]), int(pr["q_l"]), int(pr["t"]))
        rows = d["codewords"]
        if len(rows) != params.q_l or any(len(r) != params.dim for r in rows):
            raise FormatError(f"codeword table must be {params.q_l} x {params.dim}")
        arr = np.array(rows, dtype=float)
        if arr.shape != (params.q_l, params.dim, 2):
            raise FormatError("each entry must be a [real, imaginary] pair")
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed code file: {exc}") from exc
    return CodewordTable(params, arr[..., 0] + 1j * arr[..., 1]), d.get("metadata", {})


def save_code(path, table: CodewordTable, metadata: dict | None = None):
    atomic_write(path, json.dumps(code_to_dict(table, metadata), indent=1) + "\n")


def load_code(path) -> tuple:
    """Returns ``(table, metadata)``."""
    try:
        with open(path) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc
    return code_from_dict(d)


# -- simplicial solutions --------------------------------------------------------

def _frac(x: Fraction) -> list:
    x = Fraction(x)
    return [str(x.numerator), str(x.denominator)]


def _unfrac(pair) -> Fraction:
    return Fraction(int(pair[0]), int(pair[1]))


def solution_to_dict(sol: SimplicialSolution) -> dict:
    spec = sol.spec
    return {
        "t": sol.t, "q": spec.q, "q_l": sol.q_l, "b": spec.b,
        "l_max": _frac(spec.l_max), "g": sol.g, "delta": sol.delta, "n": sol.n,
        "f_sq": [{"l": list(l.entries), "residue": l.residue, "value": _frac(v)}
                 for l, v in sorted(sol.f_sq.items(), key=lambda kv: (kv[0].residue, kv[0].entries))],
    }


def solution_from_dict(d: dict) -> SimplicialSolution:
    try:
        spec = RegionSpec(int(d["q"]), int(d["b"]), _unfrac(d["l_max"]))
        f_sq = {LVector.of(e["l"], spec.q): _unfrac(e["value"]) for e in d["f_sq"]}
        return SimplicialSolution(spec, int(d["t"]), int(d["q_l"]), int(d["g"]), int(d["delta"]), int(d["n"]), f_sq)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed simplicial solution: {exc}") from exc


def save_solution(path, sol: SimplicialSolution):
    atomic_write(path, json.dumps(solution_to_dict(sol), indent=1) + "\n")


def load_solution(path) -> SimplicialSolution:
    with open(path) as fh:
        return solution_from_dict(json.load(fh))


# -- csv ---------------------------------------------------------------------------

def csv_text(rows, fields) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def write_csv(path, rows, fields):
    atomic_write(path, csv_text(rows, fields))


# -- manifests ---------------------------------------------------------------------

def build_id() -> str:
    from . import __version__

    rev = "unknown"
    try:
        rev = subprocess.run(["git", "rev-parse", "--short", "HEAD"], capture_output=True, text=True,
                             cwd=Path(__file__).parent, timeout=5).stdout.strip() or rev
    except (OSError, subprocess.SubprocessError):
        pass
    return f"picodes {__version__} ({rev}) python {platform.python_version()} numpy {np.__version__}"


@dataclass
class RunManifest:
    argv: list
    seed: int | None
    build: str = field(default_factory=build_id)
    started: float = field(default_factory=time.time)
    wall_time: float = 0.0
    outputs: list = field(default_factory=list)

    def finish(self, path):
        self.wall_time = time.time() - self.started
        atomic_write(path, json.dumps(self.__dict__, indent=1) + "\n")


def start_manifest(seed=None) -> RunManifest:
    return RunManifest(argv=list(sys.argv), seed=seed)
