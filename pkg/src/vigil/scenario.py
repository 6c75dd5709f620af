"""Scenario scripts: a tiny line-oriented DSL for driver/environment timelines.

A script names a scenario, lists time-ordered ground-truth events (eye
state, alcohol level, sensor noise), and ends at a fixed time:

    # comment
    scenario "rush hour"
    at 5s eyes closed
    at 6.5s alcohol 450ppm
    at 10s noise seed 42 jitter 1.5 flip 0.01
    end 60s

Times are seconds with an `s` suffix and convert to integer milliseconds
(sub-millisecond digits are floored away). Files use the `.vgl` extension.
The parser is total: bad input produces positioned diagnostics, never an
unhandled crash.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .sensors import NoiseSpec, PPM_MAX


@dataclass(frozen=True)
class EyesEvent:
    closed: bool


@dataclass(frozen=True)
class AlcoholEvent:
    ppm: float


@dataclass(frozen=True)
class NoiseEvent:
    spec: NoiseSpec


@dataclass(frozen=True)
class ScenarioEvent:
    at_ms: int
    action: EyesEvent | AlcoholEvent | NoiseEvent


@dataclass(frozen=True)
class ScenarioScript:
    name: str
    events: tuple[ScenarioEvent, ...]
    end_at_ms: int


@dataclass(frozen=True)
class Diagnostic:
    line: int     # 1-based
    column: int   # 1-based
    message: str
    severity: str = "error"  # "error" | "warning"

    def render(self, filename: str = "<scenario>") -> str:
        return f"{filename}:{self.line}:{self.column}: {self.severity}: {self.message}"


class ScenarioParseError(ValueError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        first = diagnostics[0] if diagnostics else Diagnostic(1, 1, "parse failed")
        super().__init__(first.render())


@dataclass(frozen=True)
class GroundTruth:
    eyes_closed: bool
    ppm: float
    noise: NoiseSpec | None


_TIME_RE = re.compile(r"^(\d+)(?:\.(\d+))?s$")
_PPM_RE = re.compile(r"^(\d+(?:\.\d+)?)ppm$")
_REAL_RE = re.compile(r"^\d+(?:\.\d+)?$")
_INT_RE = re.compile(r"^\d+$")
_STRING_RE = re.compile(r'^"[^"]*"$')
_TOKEN_RE = re.compile(r'"[^"]*"|\S+')


def _strip_comment(line: str) -> str:
    in_quote = False
    for i, ch in enumerate(line):
        if ch == '"':
            in_quote = not in_quote
        elif ch == "#" and not in_quote:
            return line[:i]
    return line


def _time_to_ms(text: str) -> int | None:
    m = _TIME_RE.match(text)
    if not m:
        return None
    whole, frac = m.group(1), m.group(2) or ""
    return int(whole) * 1000 + int(frac.ljust(3, "0")[:3])


def _kind_name(action) -> str:
    if isinstance(action, EyesEvent):
        return "eyes"
    if isinstance(action, AlcoholEvent):
        return "alcohol"
    return "noise"


class _LineParser:
    """One script line split into positioned tokens."""

    def __init__(self, lineno: int, text: str, diagnostics: list[Diagnostic]):
        self.lineno = lineno
        self.diagnostics = diagnostics
        self.tokens = [(m.start() + 1, m.group()) for m in _TOKEN_RE.finditer(text)]
        self.pos = 0

    def error(self, message: str, column: int | None = None) -> None:
        if column is None:
            column = self.tokens[self.pos - 1][0] if self.pos else 1
        self.diagnostics.append(Diagnostic(self.lineno, column, message))

    def take(self, expected: str) -> tuple[int, str] | None:
        if self.pos >= len(self.tokens):
            last_col = self.tokens[-1][0] + len(self.tokens[-1][1]) if self.tokens else 1
            self.diagnostics.append(Diagnostic(
                self.lineno, last_col, f"expected {expected}, found end of line"))
            return None
        col, tok = self.tokens[self.pos]
        self.pos += 1
        return col, tok

    def finish(self) -> bool:
        if self.pos < len(self.tokens):
            col, tok = self.tokens[self.pos]
            self.error(f"unexpected token {tok!r}", col)
            return False
        return True


def lint_scenario(source: str) -> tuple[ScenarioScript | None, list[Diagnostic]]:
    """Parse a script, collecting every diagnostic. Returns (script, diags);
    the script is None when any diagnostic is an error."""
    diagnostics: list[Diagnostic] = []
    name: str | None = None
    events: list[ScenarioEvent] = []
    end_at_ms: int | None = None
    end_line = 0
    prev_at = 0
    seen: set[tuple[int, str]] = set()  # (at_ms, kind) duplicates are rejected

    lines = source.splitlines()
    for lineno, raw in enumerate(lines, start=1):
        text = _strip_comment(raw)
        if not text.strip():
            continue
        lp = _LineParser(lineno, text, diagnostics)
        got = lp.take("a keyword")
        if got is None:
            continue
        col, keyword = got

        if end_at_ms is not None:
            lp.error(f"content after 'end' (line {end_line})", col)
            continue

        if keyword == "scenario":
            if name is not None:
                lp.error("duplicate 'scenario' header", col)
                continue
            got = lp.take("a quoted name")
            if got is None:
                continue
            ncol, tok = got
            if not _STRING_RE.match(tok):
                lp.error(f"expected a quoted name, found {tok!r}", ncol)
                continue
            name = tok[1:-1]
            lp.finish()
            continue

        if name is None:
            lp.error("script must start with: scenario \"name\"", col)
            return None, diagnostics

        if keyword == "end":
            got = lp.take("a time like '60s'")
            if got is None:
                continue
            tcol, tok = got
            at = _time_to_ms(tok)
            if at is None:
                lp.error(f"expected a time like '60s', found {tok!r}", tcol)
                continue
            if at < prev_at:
                lp.error(f"end time {tok} precedes the last event", tcol)
                continue
            if not lp.finish():
                continue
            end_at_ms = at
            end_line = lineno
            continue

        if keyword != "at":
            lp.error(f"unknown keyword {keyword!r} (expected 'at' or 'end')", col)
            continue

        got = lp.take("a time like '5s'")
        if got is None:
            continue
        tcol, tok = got
        at = _time_to_ms(tok)
        if at is None:
            lp.error(f"expected a time like '5s', found {tok!r}", tcol)
            continue
        if at < prev_at:
            lp.error(f"event at {tok} is out of order", tcol)
            continue

        got = lp.take("an event kind")
        if got is None:
            continue
        kcol, kind = got
        action: EyesEvent | AlcoholEvent | NoiseEvent | None = None
        if kind == "eyes":
            got = lp.take("'open' or 'closed'")
            if got is None:
                continue
            scol, stok = got
            if stok not in ("open", "closed"):
                lp.error(f"expected 'open' or 'closed', found {stok!r}", scol)
                continue
            action = EyesEvent(closed=stok == "closed")
        elif kind == "alcohol":
            got = lp.take("a level like '450ppm'")
            if got is None:
                continue
            pcol, ptok = got
            m = _PPM_RE.match(ptok)
            if not m:
                lp.error(f"expected a level like '450ppm', found {ptok!r}", pcol)
                continue
            ppm = float(m.group(1))
            if ppm > PPM_MAX:
                lp.error(f"ppm outside [0,{PPM_MAX:.0f}]: {ptok}", pcol)
                continue
            action = AlcoholEvent(ppm=ppm)
        elif kind == "noise":
            fields: dict[str, float] = {}
            bad = False
            for label, pattern, what in (("seed", _INT_RE, "an integer"),
                                         ("jitter", _REAL_RE, "a number"),
                                         ("flip", _REAL_RE, "a number")):
                got = lp.take(f"'{label}'")
                if got is None or got[1] != label:
                    if got is not None:
                        lp.error(f"expected '{label}', found {got[1]!r}", got[0])
                    bad = True
                    break
                got = lp.take(what)
                if got is None:
                    bad = True
                    break
                vcol, vtok = got
                if not pattern.match(vtok):
                    lp.error(f"expected {what}, found {vtok!r}", vcol)
                    bad = True
                    break
                fields[label] = float(vtok)
            if bad:
                continue
            try:
                spec = NoiseSpec(seed=int(fields["seed"]),
                                 alcohol_jitter=fields["jitter"],
                                 eye_flip_prob=fields["flip"])
            except ValueError as exc:
                lp.error(str(exc), kcol)
                continue
            action = NoiseEvent(spec=spec)
        else:
            lp.error(f"unknown event kind {kind!r} "
                     "(expected 'eyes', 'alcohol' or 'noise')", kcol)
            continue

        if not lp.finish():
            continue
        key = (at, _kind_name(action))
        if key in seen:
            lp.error(f"duplicate {key[1]} event at the same time", tcol)
            continue
        seen.add(key)
        events.append(ScenarioEvent(at_ms=at, action=action))
        prev_at = at

    eof_line = len(lines) + 1
    if name is None:
        diagnostics.append(Diagnostic(
            eof_line, 1, "script must start with: scenario \"name\""))
    elif end_at_ms is None:
        diagnostics.append(Diagnostic(eof_line, 1, "missing 'end' line"))

    if any(d.severity == "error" for d in diagnostics):
        return None, diagnostics

    script = ScenarioScript(name=name, events=tuple(events), end_at_ms=end_at_ms)
    for ev in events:
        if ev.at_ms == end_at_ms:
            diagnostics.append(Diagnostic(
                end_line, 1,
                f"{_kind_name(ev.action)} event at the end time has no effect",
                severity="warning"))
    return script, diagnostics


def parse_scenario(source: str) -> ScenarioScript:
    script, diagnostics = lint_scenario(source)
    if script is None:
        raise ScenarioParseError([d for d in diagnostics if d.severity == "error"])
    return script


def _format_ms(ms: int) -> str:
    whole, frac = divmod(ms, 1000)
    if frac == 0:
        return f"{whole}s"
    return f"{whole}.{str(frac).zfill(3).rstrip('0')}s"


def _format_real(x: float) -> str:
    if x == int(x):
        return str(int(x))
    return repr(x)


def format_scenario(script: ScenarioScript) -> str:
    """Canonical text form; parse(format(s)) == s and formatting is
    idempotent over parsed sources."""
    lines = [f'scenario "{script.name}"']
    for ev in script.events:
        t = _format_ms(ev.at_ms)
        a = ev.action
        if isinstance(a, EyesEvent):
            lines.append(f"at {t} eyes {'closed' if a.closed else 'open'}")
        elif isinstance(a, AlcoholEvent):
            lines.append(f"at {t} alcohol {_format_real(a.ppm)}ppm")
        else:
            lines.append(f"at {t} noise seed {a.spec.seed} "
                         f"jitter {_format_real(a.spec.alcohol_jitter)} "
                         f"flip {_format_real(a.spec.eye_flip_prob)}")
    lines.append(f"end {_format_ms(script.end_at_ms)}")
    return "\n".join(lines) + "\n"


def ground_truth_at(script: ScenarioScript, t: float) -> GroundTruth:
    """Ground truth at `t` seconds: piecewise constant, an event taking
    effect exactly at its own timestamp."""
    ms = int(round(t * 1000.0))
    if not 0 <= ms <= script.end_at_ms:
        raise ValueError(f"t={t} outside [0, {script.end_at_ms / 1000.0}]")
    return ground_truth_at_ms(script, ms)


def ground_truth_at_ms(script: ScenarioScript, ms: int) -> GroundTruth:
    if not 0 <= ms <= script.end_at_ms:
        raise ValueError(f"t_ms={ms} outside [0, {script.end_at_ms}]")
    eyes = False
    ppm = 0.0
    noise: NoiseSpec | None = None
    for ev in script.events:
        if ev.at_ms > ms:
            break
        a = ev.action
        if isinstance(a, EyesEvent):
            eyes = a.closed
        elif isinstance(a, AlcoholEvent):
            ppm = a.ppm
        else:
            noise = a.spec
    return GroundTruth(eyes_closed=eyes, ppm=ppm, noise=noise)


class GroundTruthTimeline:
    """Pointer-based evaluator for engines that advance time monotonically."""

    def __init__(self, script: ScenarioScript):
        self._events = script.events
        self._idx = 0
        self.eyes_closed = False
        self.ppm = 0.0
        self.noise: NoiseSpec | None = None

    def advance_to(self, ms: int) -> "GroundTruthTimeline":
        while self._idx < len(self._events) and self._events[self._idx].at_ms <= ms:
            a = self._events[self._idx].action
            if isinstance(a, EyesEvent):
                self.eyes_closed = a.closed
            elif isinstance(a, AlcoholEvent):
                self.ppm = a.ppm
            else:
                self.noise = a.spec
            self._idx += 1
        return self


def sensor_change_instants(script: ScenarioScript) -> tuple[list[int], list[int]]:
    """Times (ms) of eye and alcohol ground-truth events; the engines take
    an extra sensor sample at each so a change is never missed."""
    eyes = sorted({ev.at_ms for ev in script.events if isinstance(ev.action, EyesEvent)})
    alcohol = sorted({ev.at_ms for ev in script.events if isinstance(ev.action, AlcoholEvent)})
    return eyes, alcohol
