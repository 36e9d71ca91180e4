"""Parser for NekRS-style solver logfiles.

Three kinds of content are extracted:

* the timer table, printed as an indented tree::

      name                    time
        solve                 6.12031e+01s  0.61
          min                 2.31879e-02s
          flop/s              3.36729e+13
          pressureSolve       3.42052e+01s  0.56  2000

* kernel autotuning lines (``Ax: N=7 FP64 GDOF/s=13.2 GB/s=1260 GFLOPS=2184 kv0``)
* communication probes (``pw+device (MPI: 7.37e-05s / bi-bw:  54.5GB/s/rank)``)

Anything else is skipped and counted.  When a log contains several timer
tables (they are printed periodically during a run) the last one wins.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

MAX_LINE_BYTES = 4096
INDENT_WIDTH = 2

_HEADER = re.compile(r"^\s*name\s+time\s*$")
_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_PROBE = re.compile(
    rf"^\s*(?P<mode>pw\+device|pw\+host)\s*\(MPI:\s*(?P<mpi>\S+?)s\s*/\s*bi-bw:\s*(?P<bw>\S+?)GB/s/rank\)\s*$"
)
_KERNEL_START = re.compile(r"^\s*[A-Za-z_]\w*:\s+N=")
_KERNEL = re.compile(
    r"^\s*(?P<kernel>[A-Za-z_]\w*):\s+N=(?P<N>\S+)\s+(?P<prec>FP64|FP32)"
    r"\s+GDOF/s=\s*(?P<gdof>\S+)\s+GB/s=\s*(?P<gb>\S+)\s+GFLOPS=\s*(?P<gflops>\S+)"
    r"\s+(?P<variant>\S+)\s*$"
)
_FLOPS = re.compile(r"^\s*flop/s\s+(?P<rate>\S+)(?:\s+\(\s*(?P<per_rank>\S+)\s+GFLOPS/rank\s*\))?\s*$")
_NUMERIC_TOKEN = re.compile(r"^[-+.\deE]+$")


class LogParseError(ValueError):
    """A recognized line carries a malformed field."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class TimerLookupError(LookupError):
    pass


@dataclass(frozen=True)
class TimerNode:
    name: str
    seconds: float
    fraction: float | None = None
    count: int | None = None
    children: tuple["TimerNode", ...] = ()
    depth: int = 0

    def child(self, name: str) -> "TimerNode":
        matches = [c for c in self.children if c.name == name]
        if not matches:
            raise TimerLookupError(f"no timer {name!r} under {self.name!r}")
        if len(matches) > 1:
            raise TimerLookupError(f"timer {name!r} is ambiguous under {self.name!r}")
        return matches[0]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "seconds": self.seconds,
            "fraction": self.fraction,
            "count": self.count,
            "depth": self.depth,
            "children": [c.to_dict() for c in self.children],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TimerNode":
        return cls(
            name=d["name"],
            seconds=d["seconds"],
            fraction=d.get("fraction"),
            count=d.get("count"),
            depth=d.get("depth", 0),
            children=tuple(cls.from_dict(c) for c in d.get("children", [])),
        )


@dataclass(frozen=True)
class KernelPerf:
    kernel: str
    N: int
    precision: str
    gdof_per_s: float
    gb_per_s: float
    gflops: float
    variant: str

    @property
    def key(self) -> tuple[str, int, str]:
        return (self.kernel, self.N, self.precision)


@dataclass(frozen=True)
class BandwidthProbe:
    mode: str
    mpi_seconds: float
    bibw_gb_per_s_per_rank: float


@dataclass(frozen=True)
class LogReport:
    timers: tuple[TimerNode, ...] = ()
    kernels: tuple[KernelPerf, ...] = ()
    probes: tuple[BandwidthProbe, ...] = ()
    solve_min: float | None = None
    solve_max: float | None = None
    aggregate_flops: float | None = None
    gflops_per_rank: float | None = None
    # Describes the source text rather than the report content.
    skipped_lines: int = field(default=0, compare=False)

    def to_dict(self) -> dict:
        return {
            "timers": [t.to_dict() for t in self.timers],
            "kernels": [vars(k).copy() for k in self.kernels],
            "probes": [vars(p).copy() for p in self.probes],
            "solve_min": self.solve_min,
            "solve_max": self.solve_max,
            "aggregate_flops": self.aggregate_flops,
            "gflops_per_rank": self.gflops_per_rank,
            "skipped_lines": self.skipped_lines,
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, d: dict) -> "LogReport":
        return cls(
            timers=tuple(TimerNode.from_dict(t) for t in d.get("timers", [])),
            kernels=tuple(KernelPerf(**k) for k in d.get("kernels", [])),
            probes=tuple(BandwidthProbe(**p) for p in d.get("probes", [])),
            solve_min=d.get("solve_min"),
            solve_max=d.get("solve_max"),
            aggregate_flops=d.get("aggregate_flops"),
            gflops_per_rank=d.get("gflops_per_rank"),
            skipped_lines=d.get("skipped_lines", 0),
        )


@dataclass
class _TimerLine:
    lineno: int
    indent: int
    name: str
    seconds: float
    fraction: float | None
    count: int | None


@dataclass
class _Builder:
    name: str
    seconds: float
    fraction: float | None
    count: int | None
    depth: int
    children: list = field(default_factory=list)

    def freeze(self) -> TimerNode:
        return TimerNode(
            name=self.name,
            seconds=self.seconds,
            fraction=self.fraction,
            count=self.count,
            children=tuple(c.freeze() for c in self.children),
            depth=self.depth,
        )


def _to_float(token: str, lineno: int, what: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise LogParseError(lineno, f"malformed {what} {token!r}") from None


def _to_int(token: str, lineno: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise LogParseError(lineno, f"malformed {what} {token!r}") from None


def _parse_timer(line: str, lineno: int) -> _TimerLine | None:
    tokens = line.split()
    time_idx = None
    for i in range(len(tokens) - 1, 0, -1):
        tok = tokens[i]
        if tok.endswith("s") and re.fullmatch(_NUM, tok[:-1]):
            time_idx = i
            break
    if time_idx is None:
        return None
    trailing = tokens[time_idx + 1 :]
    if len(trailing) > 2 or not all(_NUMERIC_TOKEN.match(t) for t in trailing):
        return None
    fraction = _to_float(trailing[0], lineno, "fraction") if trailing else None
    count = _to_int(trailing[1], lineno, "count") if len(trailing) > 1 else None
    return _TimerLine(
        lineno=lineno,
        indent=len(line) - len(line.lstrip(" ")),
        name=" ".join(tokens[:time_idx]),
        seconds=float(tokens[time_idx][:-1]),
        fraction=fraction,
        count=count,
    )


def _build_tree(lines: list[_TimerLine]) -> tuple[list[_Builder], float | None, float | None]:
    roots: list[_Builder] = []
    solve_min = solve_max = None
    if not lines:
        return roots, solve_min, solve_max
    base = min(t.indent for t in lines)
    stack: list[_Builder] = []
    for t in lines:
        level = (t.indent - base) // INDENT_WIDTH
        del stack[level:]
        parent = stack[-1] if stack else None
        if parent is not None and parent.name == "solve" and t.name in ("min", "max"):
            if t.name == "min":
                solve_min = t.seconds
            else:
                solve_max = t.seconds
            continue
        node = _Builder(t.name, t.seconds, t.fraction, t.count, depth=len(stack))
        (parent.children if parent is not None else roots).append(node)
        stack.append(node)
    return roots, solve_min, solve_max


def parse_log(text: str | bytes) -> LogReport:
    """Parse logfile text into a :class:`LogReport`.

    Raises :class:`LogParseError` (with the line number) when a line is
    recognized as a timer, kernel, probe or flop-rate line but one of its
    numeric fields does not parse, or when a line exceeds 4096 bytes.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise LogParseError(0, f"input is not UTF-8: {exc}") from None

    kernels: list[KernelPerf] = []
    probes: list[BandwidthProbe] = []
    blocks: list[list[_TimerLine]] = [[]]
    aggregate = per_rank = None
    skipped = 0

    for lineno, line in enumerate(text.splitlines(), start=1):
        if len(line.encode("utf-8")) > MAX_LINE_BYTES:
            raise LogParseError(lineno, f"line longer than {MAX_LINE_BYTES} bytes")
        line = line.expandtabs(8).rstrip()
        if not line.strip():
            continue
        if _HEADER.match(line):
            if blocks[-1]:
                blocks.append([])
            continue

        stripped = line.lstrip()
        if stripped.startswith("pw+"):
            m = _PROBE.match(line)
            if m is None:
                raise LogParseError(lineno, "malformed bandwidth probe line")
            probes.append(
                BandwidthProbe(
                    mode=m["mode"],
                    mpi_seconds=_to_float(m["mpi"], lineno, "MPI time"),
                    bibw_gb_per_s_per_rank=_to_float(m["bw"], lineno, "bandwidth"),
                )
            )
            continue
        if _KERNEL_START.match(line):
            m = _KERNEL.match(line)
            if m is None:
                raise LogParseError(lineno, "malformed kernel performance line")
            kernels.append(
                KernelPerf(
                    kernel=m["kernel"],
                    N=_to_int(m["N"], lineno, "N"),
                    precision=m["prec"],
                    gdof_per_s=_to_float(m["gdof"], lineno, "GDOF/s"),
                    gb_per_s=_to_float(m["gb"], lineno, "GB/s"),
                    gflops=_to_float(m["gflops"], lineno, "GFLOPS"),
                    variant=m["variant"],
                )
            )
            continue
        if stripped.startswith("flop/s"):
            m = _FLOPS.match(line)
            if m is None:
                raise LogParseError(lineno, "malformed flop/s line")
            rate = _to_float(m["rate"], lineno, "flop rate")
            if aggregate is None:
                aggregate = rate
            if m["per_rank"] is not None:
                per_rank = _to_float(m["per_rank"], lineno, "GFLOPS/rank")
            continue

        timer = _parse_timer(line, lineno)
        if timer is None:
            skipped += 1
        else:
            blocks[-1].append(timer)

    table = next((b for b in reversed(blocks) if b), [])
    roots, solve_min, solve_max = _build_tree(table)
    return LogReport(
        timers=tuple(r.freeze() for r in roots),
        kernels=tuple(kernels),
        probes=tuple(probes),
        solve_min=solve_min,
        solve_max=solve_max,
        aggregate_flops=aggregate,
        gflops_per_rank=per_rank,
        skipped_lines=skipped,
    )


def load_log(path: str | Path) -> LogReport:
    return parse_log(Path(path).read_bytes())


def iter_timers(report: LogReport) -> Iterator[tuple[tuple[str, ...], TimerNode]]:
    """Depth-first ``(path, node)`` pairs over the timer tree."""

    def walk(nodes, prefix):
        for node in nodes:
            path = prefix + (node.name,)
            yield path, node
            yield from walk(node.children, path)

    yield from walk(report.timers, ())


def find_timer(report: LogReport, path: list[str] | tuple[str, ...]) -> TimerNode:
    """Resolve a timer by exact names from the root, e.g. ``["solve", "pressureSolve"]``."""
    if not path:
        raise TimerLookupError("timer path is empty")
    matches = [t for t in report.timers if t.name == path[0]]
    if not matches:
        raise TimerLookupError(f"no top-level timer {path[0]!r}")
    if len(matches) > 1:
        raise TimerLookupError(f"top-level timer {path[0]!r} is ambiguous")
    node = matches[0]
    for name in path[1:]:
        node = node.child(name)
    return node


def timer_consistency(report: LogReport, tolerance: float = 0.01) -> list[str]:
    """Warn about parents whose children add up to more than the parent.

    Children summing to less is normal (untimed work in between).
    """
    warnings = []
    for path, node in iter_timers(report):
        if not node.children:
            continue
        total = sum(c.seconds for c in node.children)
        if total > node.seconds * (1.0 + tolerance):
            warnings.append(
                f"{'/'.join(path)}: children sum to {total:.6g}s, "
                f"more than the parent's {node.seconds:.6g}s"
            )
    return warnings


def format_log(report: LogReport) -> str:
    """Render a report in the logfile layout; :func:`parse_log` reads it back unchanged."""
    out = [f"{'name':<24}time"]

    def emit(node: TimerNode) -> None:
        indent = " " * (INDENT_WIDTH * (node.depth + 1))
        fields = [f"{indent}{node.name:<{22 - INDENT_WIDTH * node.depth}}", f"{node.seconds!r}s"]
        if node.fraction is not None:
            fields.append(repr(node.fraction))
            if node.count is not None:
                fields.append(str(node.count))
        out.append("  ".join(fields))
        if node.name == "solve" and node.depth == 0:
            inner = " " * (INDENT_WIDTH * 2)
            if report.solve_min is not None:
                out.append(f"{inner}{'min':<20}  {report.solve_min!r}s")
            if report.solve_max is not None:
                out.append(f"{inner}{'max':<20}  {report.solve_max!r}s")
            if report.aggregate_flops is not None:
                out.append(f"{inner}{'flop/s':<20}  {report.aggregate_flops!r}")
        for child in node.children:
            emit(child)

    for root in report.timers:
        emit(root)
    for p in report.probes:
        out.append(f"{p.mode:<9} (MPI: {p.mpi_seconds!r}s / bi-bw: {p.bibw_gb_per_s_per_rank!r}GB/s/rank)")
    for k in report.kernels:
        out.append(
            f" {k.kernel}: N={k.N} {k.precision} GDOF/s={k.gdof_per_s!r} "
            f"GB/s={k.gb_per_s!r} GFLOPS={k.gflops!r} {k.variant}"
        )
    has_solve = any(t.name == "solve" for t in report.timers)
    if report.aggregate_flops is not None and (report.gflops_per_rank is not None or not has_solve):
        line = f"flop/s  {report.aggregate_flops!r}"
        if report.gflops_per_rank is not None:
            line += f"  ({report.gflops_per_rank!r} GFLOPS/rank)"
        out.append(line)
    return "\n".join(out) + "\n"
