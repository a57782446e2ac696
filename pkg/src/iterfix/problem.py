"""Plain-text problem files.

Example::

    # product equation on the positive half-line
    [lambda]
    9/10, 1/10

    [function G]
    piece (0,1]: 1;
    piece [1,2]: 2^(x-1);
    piece [2,inf): 2^(log(2)/log(x))

    [interval]
    1, 2

    [params]
    delta = log2
    M = 20*log2/9
    Mstar = 2*log2

    [options]
    grid = 1025
    tol = 1e-10

Numbers anywhere may be constant expressions. ``[interval]`` is J when G is
given and I when F is given. Everything after ``#`` on a line is ignored.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .expr import ExprError, PiecewiseExpr, parse, parse_constant

SECTION_RE = re.compile(r"^\[\s*([A-Za-z_]+)(?:\s+([A-Za-z_]+))?\s*\]\s*$")
OPTION_KEYS = {"grid": int, "tol": float, "max_iters": int, "axis": str, "normalize": str}
PARAM_ALIASES = {"delta": "delta", "m": "M", "mstar": "Mstar", "m*": "Mstar"}


class ProblemError(ValueError):
    reason = "bad_problem_file"


@dataclass
class Problem:
    lam: tuple[float, ...]
    function_name: str  # "G" or "F"
    function_source: str
    function: PiecewiseExpr
    interval: tuple[float, float]
    params: dict[str, float]
    options: dict = field(default_factory=dict)

    @property
    def delta(self) -> float:
        return self.params["delta"]

    @property
    def M(self) -> float:
        return self.params["M"]

    @property
    def Mstar(self) -> float:
        return self.params["Mstar"]


def _numbers(text: str) -> list[float]:
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    return [parse_constant(p) for p in parts]


def parse_problem(text: str) -> Problem:
    sections: dict[str, list[str]] = {}
    current = None
    fname = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        m = SECTION_RE.match(line.strip())
        if m:
            kind, arg = m.group(1).lower(), m.group(2)
            if kind == "function":
                if arg not in ("G", "F"):
                    raise ProblemError(f"line {lineno}: function section must be 'G' or 'F'")
                if fname is not None:
                    raise ProblemError(f"line {lineno}: only one function section is allowed")
                fname = arg
            elif kind not in ("lambda", "interval", "params", "options"):
                raise ProblemError(f"line {lineno}: unknown section [{kind}]")
            current = "function" if kind == "function" else kind
            if current in sections:
                raise ProblemError(f"line {lineno}: duplicate section [{kind}]")
            sections[current] = []
            continue
        if current is None:
            raise ProblemError(f"line {lineno}: text before the first section")
        sections[current].append(line)

    for required in ("lambda", "function", "interval", "params"):
        if required not in sections:
            raise ProblemError(f"missing section [{required}]")

    try:
        lam = tuple(_numbers(" ".join(sections["lambda"])))
        interval = _numbers(" ".join(sections["interval"]))
        source = "\n".join(sections["function"])
        func = parse(source)
    except ExprError as exc:
        raise ProblemError(str(exc)) from exc
    if len(interval) != 2 or not interval[0] < interval[1]:
        raise ProblemError(f"[interval] needs two increasing numbers, got {interval}")

    params = {}
    for line in sections["params"]:
        key, _, value = line.partition("=")
        name = PARAM_ALIASES.get(key.strip().lower())
        if name is None or not value.strip():
            raise ProblemError(f"bad parameter line {line.strip()!r}")
        try:
            params[name] = parse_constant(value.strip())
        except ExprError as exc:
            raise ProblemError(f"parameter {name}: {exc}") from exc
    missing = {"delta", "M", "Mstar"} - params.keys()
    if missing:
        raise ProblemError(f"missing parameters: {', '.join(sorted(missing))}")

    options = {}
    for line in sections.get("options", []):
        key, _, value = line.partition("=")
        key = key.strip().lower().replace("-", "_")
        if key not in OPTION_KEYS:
            raise ProblemError(f"unknown option {key!r}")
        conv = OPTION_KEYS[key]
        try:
            options[key] = conv(parse_constant(value.strip())) if conv in (int, float) else value.strip()
        except (ExprError, ValueError) as exc:
            raise ProblemError(f"option {key}: {exc}") from exc

    return Problem(lam, fname, source, func, (interval[0], interval[1]), params, options)


def load_problem(path) -> Problem:
    return parse_problem(Path(path).read_text())
