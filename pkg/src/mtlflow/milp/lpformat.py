"""Write :class:`MilpModel` in the CPLEX LP text format."""
from __future__ import annotations

import math
import re

from .model import BINARY, EQ, GE, LE, MilpModel, ModelError

# first character may not be a digit or a period; 'e'/'E' leads are ambiguous
_NAME_RE = re.compile(r"^[A-Za-z_!\"#$%&()/,;?@`'{}|~][A-Za-z0-9_!\"#$%&()/,.;?@`'{}|~]*$")
_RESERVED = {"st", "s.t.", "subject", "to", "minimize", "maximize", "min", "max",
             "bounds", "bound", "binary", "binaries", "bin", "general", "generals",
             "gen", "end", "free", "inf", "infinity"}


class LpNameError(ModelError):
    pass


def _check_name(name: str) -> None:
    if (not _NAME_RE.match(name) or len(name) > 255 or name.lower() in _RESERVED
            or re.match(r"^[eE][0-9+\-.]", name)):
        raise LpNameError(f"{name!r} is not a legal LP-format name")


def _num(a: float) -> str:
    return repr(float(a)) if a != int(a) else str(int(a))


def _terms(coefs: dict, names: list[str], per_line: int = 8) -> str:
    parts = []
    for k, (j, a) in enumerate(sorted(coefs.items())):
        sign = "-" if a < 0 else "+"
        mag = abs(a)
        term = names[j] if mag == 1 else f"{_num(mag)} {names[j]}"
        if k == 0:
            parts.append(f"- {term}" if a < 0 else term)
        else:
            parts.append(f"{sign} {term}")
    lines = [" ".join(parts[i:i + per_line]) for i in range(0, len(parts), per_line)]
    return "\n   ".join(lines)


def export_lp(m: MilpModel, title: str = "model") -> str:
    """Serialise ``m``; variable and constraint names are kept verbatim.

    Raises :class:`LpNameError` on illegal or colliding names.
    """
    names = [v.name for v in m.variables]
    seen = set()
    for nm in names:
        _check_name(nm)
        if nm in seen:
            raise LpNameError(f"duplicate variable name {nm!r}")
        seen.add(nm)
    # rows and columns live in separate namespaces
    seen = set()
    row_names = []
    for i, c in enumerate(m.constraints):
        nm = c.name or f"c{i}"
        _check_name(nm)
        if nm in seen:
            raise LpNameError(f"duplicate constraint name {nm!r}")
        seen.add(nm)
        row_names.append(nm)

    out = [f"\\ {title}", "Minimize"]
    obj = _terms(m.objective, names)
    if m.objective_constant:
        const = _num(abs(m.objective_constant))
        sign = "-" if m.objective_constant < 0 else "+"
        obj = f"{obj} {sign} {const}" if obj else f"{'-' if sign == '-' else ''}{const}"
    out.append(f" obj: {obj if obj else '0'}")

    out.append("Subject To")
    rel = {LE: "<=", GE: ">=", EQ: "="}
    for nm, c in zip(row_names, m.constraints):
        lhs = _terms(c.coefs, names)
        if not lhs:
            if not names:
                raise ModelError("constraint without variables in an empty model")
            lhs = f"0 {names[0]}"
        out.append(f" {nm}: {lhs} {rel[c.sense]} {_num(c.rhs)}")

    out.append("Bounds")
    for v in m.variables:
        if v.kind == BINARY:
            continue
        lo, hi = v.lb, v.ub
        if lo == -math.inf and hi == math.inf:
            out.append(f" {v.name} free")
        elif lo == hi:
            out.append(f" {v.name} = {_num(lo)}")
        else:
            lo_s = "-inf" if lo == -math.inf else _num(lo)
            hi_s = "+inf" if hi == math.inf else _num(hi)
            out.append(f" {lo_s} <= {v.name} <= {hi_s}")

    out.append("Binary")
    bins = [v.name for v in m.variables if v.kind == BINARY]
    for i in range(0, len(bins), 10):
        out.append(" " + " ".join(bins[i:i + 10]))
    out.append("End")
    return "\n".join(out) + "\n"
