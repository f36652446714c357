"""Core object identification: escape states, temporaries, importance, ranking."""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError
from .trace import STATIC_OWNER, Kind, Trace


class EscapeState(str, enum.Enum):
    GLOBAL = "GlobalEscape"
    REFERENCE = "ReferenceEscape"
    CAPTURED = "Captured"


@dataclass(frozen=True)
class RankingConfig:
    L_t_long: float = 0.5
    L_t_short: float = 0.1
    I_t: float = 0.0

    def __post_init__(self) -> None:
        for name in ("L_t_long", "L_t_short"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.L_t_short > self.L_t_long:
            raise ValueError("L_t_short must not exceed L_t_long")
        if self.I_t < 0:
            raise ValueError("I_t must be non-negative")


@dataclass(frozen=True)
class ObjectProfile:
    object_id: str
    type_name: str
    escape_state: EscapeState
    lifetime: int
    write_freq: int
    read_freq: int
    invoke_freq: int
    importance: float = 0.0
    is_temporary: bool = False


@dataclass(frozen=True)
class Ranking:
    """Non-temporary objects by importance, descending.

    Ties break on (type name, object id).  ``importance`` is aligned with
    ``objects``.
    """

    objects: tuple[str, ...]
    importance: tuple[float, ...]

    def above(self, threshold: float) -> list[str]:
        out = []
        for o, imp in zip(self.objects, self.importance):
            if not imp > threshold:
                break
            out.append(o)
        return out


# ---------------------------------------------------------------------------


def assign_escape_states(trace: Trace, model=None) -> dict[str, EscapeState]:
    """Escape state of every object from the (flow-insensitive) write graph.

    ``model`` is accepted for interface symmetry; static-ness is already
    explicit in the trace (``STATIC`` owners).
    """
    codes = _escape_codes(trace)
    return {o: _STATE_BY_CODE[int(c)] for o, c in zip(trace.objects, codes)}


_STATE_BY_CODE = {0: EscapeState.CAPTURED, 1: EscapeState.REFERENCE, 2: EscapeState.GLOBAL}


def _escape_codes(trace: Trace) -> np.ndarray:
    writes = np.flatnonzero((trace.kind == Kind.WRITE) & (trace.value >= 0))
    owners = trace.obj[writes].astype(np.int64)
    values = trace.value[writes].astype(np.int64)
    return escape_codes_from_edges(len(trace.objects), owners, values)


def escape_codes_from_edges(n_objects: int, owners: np.ndarray, values: np.ndarray) -> np.ndarray:
    """0 = Captured, 1 = ReferenceEscape, 2 = GlobalEscape.

    ``owners`` uses ``STATIC_OWNER`` for static fields.  An object is global
    when reachable from a static write through owner -> value edges.
    """
    state = np.zeros(n_objects, dtype=np.int8)
    owners = np.asarray(owners, dtype=np.int64)
    values = np.asarray(values, dtype=np.int64)
    heap = (owners >= 0) & (owners != values)
    state[values[heap]] = 1

    roots = np.unique(values[owners == STATIC_OWNER])
    if len(roots) == 0:
        return state
    edges = np.unique(np.stack([owners[owners >= 0], values[owners >= 0]], axis=1), axis=0)
    adj: dict[int, list[int]] = {}
    for a, b in edges.tolist():
        adj.setdefault(a, []).append(b)
    seen = np.zeros(n_objects, dtype=np.bool_)
    stack = roots.tolist()
    for r in stack:
        seen[r] = True
    while stack:
        x = stack.pop()
        for y in adj.get(x, ()):
            if not seen[y]:
                seen[y] = True
                stack.append(y)
    state[seen] = 2
    return state


def access_frequencies(trace: Trace) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(write, read, invoke) counts per object, excluding self-accesses.

    Accesses with no enclosing frame come from EXTERNAL and count.
    """
    n = len(trace.objects)
    caller = trace.caller
    out = []
    for k in (Kind.WRITE, Kind.READ, Kind.ENTRY):
        sel = (trace.kind == k) & (trace.obj >= 0)
        sel &= caller != trace.obj
        out.append(np.bincount(trace.obj[sel], minlength=n).astype(np.int64))
    return out[0], out[1], out[2]


def harmonic_importance(w: float, r: float, m: float) -> float:
    if w <= 0 or r <= 0 or m <= 0:
        return 0.0
    return 3.0 / (1.0 / w + 1.0 / r + 1.0 / m)


def build_profiles(trace: Trace) -> list[ObjectProfile]:
    esc = _escape_codes(trace)
    w, r, m = access_frequencies(trace)
    life = trace.object_lifetimes
    return [
        ObjectProfile(
            object_id=o,
            type_name=trace.object_types[i],
            escape_state=_STATE_BY_CODE[int(esc[i])],
            lifetime=int(life[i]),
            write_freq=int(w[i]),
            read_freq=int(r[i]),
            invoke_freq=int(m[i]),
        )
        for i, o in enumerate(trace.objects)
    ]


def mark_temporaries(profiles: Sequence[ObjectProfile], config: RankingConfig) -> list[ObjectProfile]:
    if not profiles:
        return []
    life_max = max(p.lifetime for p in profiles)
    out = []
    for p in profiles:
        temp = (p.escape_state is EscapeState.CAPTURED and p.lifetime < life_max * config.L_t_long) or (
            p.escape_state is EscapeState.REFERENCE and p.lifetime < life_max * config.L_t_short
        )
        out.append(replace(p, is_temporary=temp))
    return out


def compute_importance(profiles: Iterable[ObjectProfile]) -> list[ObjectProfile]:
    return [replace(p, importance=harmonic_importance(p.write_freq, p.read_freq, p.invoke_freq)) for p in profiles]


def build_ranking(profiles: Iterable[ObjectProfile], config: RankingConfig | None = None) -> Ranking:
    kept = [p for p in profiles if not p.is_temporary]
    kept.sort(key=lambda p: (-p.importance, p.type_name, p.object_id))
    return Ranking(tuple(p.object_id for p in kept), tuple(p.importance for p in kept))


def rank(trace: Trace, config: RankingConfig | None = None) -> tuple[list[ObjectProfile], Ranking]:
    config = config or RankingConfig()
    profiles = compute_importance(mark_temporaries(build_profiles(trace), config))
    return profiles, build_ranking(profiles, config)


# ---------------------------------------------------------------------------
# CSV

RANK_COLUMNS = (
    "object_id", "type", "escape_state", "lifetime",
    "write_freq", "read_freq", "invoke_freq", "importance", "is_temporary",
)


def _csv_order(p: ObjectProfile) -> tuple:
    return (p.is_temporary, -p.importance, p.type_name, p.object_id)


def profiles_to_csv(profiles: Iterable[ObjectProfile]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(RANK_COLUMNS)
    for p in sorted(profiles, key=_csv_order):
        wr.writerow(
            [
                p.object_id, p.type_name, p.escape_state.value, p.lifetime,
                p.write_freq, p.read_freq, p.invoke_freq, repr(float(p.importance)),
                "true" if p.is_temporary else "false",
            ]
        )
    return buf.getvalue()


def load_rank_csv(path: str | Path) -> tuple[list[ObjectProfile], Ranking]:
    path = Path(path)
    profiles = []
    with open(path, newline="", encoding="utf-8") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if header is None or tuple(header) != RANK_COLUMNS:
            raise ParseError("unexpected rank CSV header", location="line 1", path=str(path))
        for lineno, row in enumerate(rd, 2):
            try:
                oid, tname, esc, life, w, r, m, imp, temp = row
                importance = float(imp)
                if not math.isfinite(importance) or temp not in ("true", "false"):
                    raise ValueError(imp)
                profiles.append(
                    ObjectProfile(oid, tname, EscapeState(esc), int(life), int(w), int(r), int(m), importance, temp == "true")
                )
            except ValueError as exc:
                raise ParseError(f"bad rank row: {exc}", location=f"line {lineno}", path=str(path)) from None
    return profiles, build_ranking(profiles)
