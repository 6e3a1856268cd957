"""Plain-text spectrum description files.

Statements are ``key = value`` and are separated by newlines or ``;``.
``#`` starts a comment.  Recognised keys::

    J     = 4                       # optional; defaults to the deepest scale used
    scale = -1                      # following pieces belong to this scale
    piece = [0.25, 0.575), const 1.0
    piece = [0.75, 1.0], sin2 amp=1.0 omega=2 phase=-0.25pi offset=0.5
    table = 0.1 0.2 0.3             # piecewise constant on equal cells of [0, 1)

Numbers may carry a ``pi`` suffix (``-0.25pi``); ``pi`` alone means pi.
A piece closes with ``)`` (half-open) or ``]`` (closed).
"""
from __future__ import annotations

import math
import re
from importlib import resources
from pathlib import Path

from .spectrum import Piece, SpectrumSpec, Table

__all__ = ["SpecParseError", "loads", "load", "dumps", "load_builtin"]


class SpecParseError(ValueError):
    def __init__(self, message, line, column):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


_NUMBER = re.compile(r"[+-]?(?:\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)?(?:pi)?$")


def _number(text, line, col):
    text = text.strip()
    if not text or not _NUMBER.match(text) or text in "+-":
        raise SpecParseError(f"expected a number, got {text!r}", line, col)
    if text.endswith("pi"):
        head = text[:-2]
        coef = 1.0 if head in ("", "+") else -1.0 if head == "-" else float(head)
        return coef * math.pi
    return float(text)


def _statements(text):
    """Yield ``(line, column, key, value, value_column)``."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        pos = 0
        for chunk in body.split(";"):
            start = pos
            pos += len(chunk) + 1
            if not chunk.strip():
                continue
            col = start + len(chunk) - len(chunk.lstrip()) + 1
            if "=" not in chunk:
                raise SpecParseError(f"expected 'key = value', got {chunk.strip()!r}", lineno, col)
            key, value = chunk.split("=", 1)
            vcol = start + len(key) + 2 + (len(value) - len(value.lstrip()))
            yield lineno, col, key.strip().lower(), value.strip(), vcol


_PIECE = re.compile(r"\[\s*([^,\]\)]+?)\s*,\s*([^,\]\)]+?)\s*([\)\]])\s*,\s*(\w+)\s*(.*)$")


def _piece(value, line, col):
    m = _PIECE.match(value)
    if not m:
        raise SpecParseError("malformed piece; expected '[a, b), const c' or '[a, b), sin2 ...'", line, col)
    a = _number(m.group(1), line, col + m.start(1))
    b = _number(m.group(2), line, col + m.start(2))
    closed = m.group(3) == "]"
    kind = m.group(4).lower()
    rest = m.group(5).strip()
    rcol = col + m.start(5)
    try:
        if kind == "const":
            return Piece.constant(a, b, _number(rest, line, rcol), closed=closed)
        if kind == "sin2":
            params = {"amp": 1.0, "omega": 1.0, "phase": 0.0, "offset": 0.0}
            for tok in re.finditer(r"(\S+)", rest):
                if "=" not in tok.group(1):
                    raise SpecParseError(f"expected name=value, got {tok.group(1)!r}", line, rcol + tok.start())
                name, val = tok.group(1).split("=", 1)
                if name not in params:
                    raise SpecParseError(f"unknown sin2 parameter {name!r}", line, rcol + tok.start())
                params[name] = _number(val, line, rcol + tok.start() + len(name) + 1)
            return Piece(a, b, params["offset"], params["amp"], params["omega"], params["phase"], closed)
    except ValueError as exc:
        if isinstance(exc, SpecParseError):
            raise
        raise SpecParseError(str(exc), line, col) from None
    raise SpecParseError(f"unknown piece kind {kind!r}", line, col + m.start(4))


def loads(text):
    """Parse a spectrum description from a string."""
    J = None
    current = None
    scales = {}
    for line, col, key, value, vcol in _statements(text):
        if key == "j":
            J = int(_number(value, line, vcol))
            if J < 1:
                raise SpecParseError("J must be >= 1", line, vcol)
        elif key == "scale":
            current = _number(value, line, vcol)
            if current != int(current) or current >= 0:
                raise SpecParseError("scale must be a negative integer", line, vcol)
            current = int(current)
            if current in scales:
                raise SpecParseError(f"scale {current} declared twice", line, vcol)
            scales[current] = []
        elif key in ("piece", "table"):
            if current is None:
                raise SpecParseError(f"'{key}' before any 'scale ='", line, col)
            entry = scales[current]
            if key == "piece":
                if isinstance(entry, Table):
                    raise SpecParseError("cannot mix pieces and a table in one scale", line, col)
                entry.append(_piece(value, line, vcol))
            else:
                if entry:
                    raise SpecParseError("cannot mix pieces and a table in one scale", line, col)
                vals = [_number(v, line, vcol) for v in value.replace(",", " ").split()]
                try:
                    scales[current] = Table(vals)
                except ValueError as exc:
                    raise SpecParseError(str(exc), line, vcol) from None
        else:
            raise SpecParseError(f"unknown key {key!r}", line, col)
    deepest = -min(scales) if scales else 1
    if J is None:
        J = deepest
    elif J < deepest:
        raise SpecParseError(f"J = {J} but scale {-deepest} is declared", 1, 1)
    try:
        return SpectrumSpec(J, scales)
    except ValueError as exc:
        raise SpecParseError(str(exc), 1, 1) from None


def load(path):
    return loads(Path(path).read_text())


def load_builtin(name):
    return loads(resources.files("lswspec.data").joinpath(name).read_text())


def dumps(spec):
    lines = [f"J = {spec.J}"]
    for j in spec.active_scales():
        lines.append(f"scale = {j}")
        entry = spec.scales[j]
        if isinstance(entry, Table):
            lines.append(f"table = {entry.to_text()}")
        else:
            lines.extend(f"piece = {p.to_text()}" for p in entry)
    return "\n".join(lines) + "\n"
