"""Reading and writing inequalities, vertex sets, facet lists and class tables."""
from __future__ import annotations

import csv
import io as _io
import json
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator

from .core import TIInequality, format_fraction, to_fraction

TABLE2_HEADER = ["#", "beta_NS", "beta_Q", "beta_Q_TI", "beta_C",
                 "alpha", "beta", "gamma1", "omega1", "omega3", "epsilon1",
                 "gamma2", "omega2", "epsilon2"]


def _rat(x) -> str:
    return str(format_fraction(Fraction(x)))


def _num(x, digits: int = 6) -> str:
    if x is None:
        return ""
    if isinstance(x, Fraction):
        return _rat(x)
    return f"{x:.{digits}f}"


def dumps_inequality(q: TIInequality) -> str:
    return json.dumps(q.to_dict(), sort_keys=True)


def loads_inequality(text: str) -> TIInequality:
    return TIInequality.from_dict(json.loads(text))


def write_inequality(path, q: TIInequality) -> None:
    Path(path).write_text(json.dumps(q.to_dict(), sort_keys=True, indent=1) + "\n")


def read_inequality(path) -> TIInequality:
    return loads_inequality(Path(path).read_text())


def write_jsonl(path, inequalities: Iterable[TIInequality]) -> int:
    count = 0
    with open(path, "w") as fh:
        for q in inequalities:
            fh.write(dumps_inequality(q) + "\n")
            count += 1
    return count


def read_jsonl(path) -> Iterator[TIInequality]:
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield loads_inequality(line)


def vertices_csv(vs) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index"] + [f"c{k}" for k in range(vs.dim)] + ["strategies"])
    for i, v in enumerate(vs.vertices):
        w.writerow([i] + [int(c) for c in v] + [" ".join(map(str, vs.provenance[i]))])
    return buf.getvalue()


def facets_csv(fl) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    dim = fl.array.shape[1] - 1
    w.writerow(["index", "beta_c"] + [f"c{k}" for k in range(dim)])
    for i, row in enumerate(fl.array):
        w.writerow([i] + [_rat(int(x)) for x in row])
    return buf.getvalue()


def class_table_csv(table, bounds: dict | None = None) -> str:
    """CSV of a class table.

    At n=4 the columns follow the n=4 report layout; other n use the native
    coefficient order.  ``bounds`` maps class index to a dict with optional
    keys ``beta_n``, ``beta_q`` and ``beta_q_ti``.
    """
    bounds = bounds or {}
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if table.n == 4:
        w.writerow(TABLE2_HEADER)
    else:
        k = len(table.classes[0].representative.coefficients()) if table.classes else 0
        w.writerow(TABLE2_HEADER[:5] + [f"c{i}" for i in range(k)])
    for idx, cls in enumerate(table.classes):
        q = cls.representative
        b = bounds.get(idx, {})
        coeffs = q.table2_row() if table.n == 4 else q.coefficients()
        w.writerow([idx + 1, _num(b.get("beta_n")), _num(b.get("beta_q")), _num(b.get("beta_q_ti")),
                    _rat(q.beta_c) if q.beta_c is not None else ""] + [_rat(c) for c in coeffs])
    return buf.getvalue()


def read_class_csv(path) -> list[dict]:
    """Rows of a class CSV with exact rationals parsed back."""
    out = []
    with open(path) as fh:
        for row in csv.DictReader(fh):
            parsed = {}
            for k, v in row.items():
                if v == "":
                    parsed[k] = None
                elif k in ("beta_Q", "beta_Q_TI"):
                    parsed[k] = float(v)
                else:
                    parsed[k] = to_fraction(v)
            out.append(parsed)
    return out


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n")


def dmin_csv(rows: list[dict]) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["class_id", "D", "best_beta", "seeds", "target_reached"])
    for r in rows:
        w.writerow([r["class_id"], r["D"], f"{r['best_beta']:.6f}", r["seeds"], int(r["target_reached"])])
    return buf.getvalue()
