"""Execution traces: loading, bracket matching and per-thread slicing.

Events are stored column-wise in numpy arrays so that multi-million event
traces stay compact.  Ids from the file are interned to dense integer codes;
``Trace.methods``, ``Trace.objects``, ``Trace.fields`` and ``Trace.threads``
map codes back to the original strings.

Per-event link columns, all filled during the single loading pass:

``link``
    Entry: index of the innermost enclosing Entry on the same thread (-1 at
    the top level).  Exit: index of its Entry.  Field access: index of the
    Entry on top of the stack when the access happened (-1 if none).
``match``
    Entry: index of the matching Exit.  Exit: index of its Entry.
"""

from __future__ import annotations

import enum
import warnings
from array import array
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable, Iterator

import numpy as np

from .errors import IntegrityError, ParseError

EXTERNAL = "EXTERNAL"
STATIC = "STATIC"
NONOBJECT = "-"

# sentinel codes in the integer columns
NO_OBJECT = -1
STATIC_OWNER = -2
EXTERNAL_CODE = -1


class Kind(enum.IntEnum):
    ENTRY = 0
    EXIT = 1
    WRITE = 2
    READ = 3


class TruncatedTraceWarning(UserWarning):
    """Raised (as a warning) when Entries are still open at end of file."""


@dataclass(frozen=True)
class Event:
    """Decoded view of one event, for inspection and tests."""

    index: int
    seq: int
    thread: str
    kind: Kind
    method: str | None = None
    callee_object: str | None = None
    is_constructor: bool = False
    owner: str | None = None
    field: str | None = None
    value: str | None = None


class Trace:
    def __init__(
        self,
        *,
        seq: np.ndarray,
        kind: np.ndarray,
        thread: np.ndarray,
        method: np.ndarray,
        obj: np.ndarray,
        field: np.ndarray,
        value: np.ndarray,
        ctor: np.ndarray,
        link: np.ndarray,
        match: np.ndarray,
        methods: list[str],
        objects: list[str],
        object_types: list[str],
        fields: list[str],
        threads: list[str],
    ):
        self.seq = seq
        self.kind = kind
        self.thread = thread
        self.method = method
        self.obj = obj
        self.field = field
        self.value = value
        self.ctor = ctor
        self.link = link
        self.match = match
        self.methods = methods
        self.objects = objects
        self.object_types = object_types
        self.fields = fields
        self.threads = threads
        self.object_code = {o: i for i, o in enumerate(objects)}
        self.method_code = {m: i for i, m in enumerate(methods)}
        self.thread_code = {t: i for i, t in enumerate(threads)}
        for arr in (seq, kind, thread, method, obj, field, value, ctor, link, match):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return len(self.seq)

    # -- derived indices -------------------------------------------------

    @cached_property
    def entries(self) -> np.ndarray:
        return np.flatnonzero(self.kind == Kind.ENTRY)

    @cached_property
    def caller(self) -> np.ndarray:
        """Per event: object code of the enclosing frame, or -1 (EXTERNAL).

        For Entry events this is the sender of the message; for field
        accesses it is the accessing object.
        """
        out = np.full(len(self), EXTERNAL_CODE, dtype=np.int32)
        has = self.link >= 0
        is_exit = self.kind == Kind.EXIT
        # an Exit's link is its own Entry; the caller is that Entry's parent
        parent = self.link.copy()
        parent[is_exit] = self.link[self.link[is_exit]]
        has = parent >= 0
        out[has] = self.obj[parent[has]]
        return out

    @cached_property
    def self_call(self) -> np.ndarray:
        """Entry whose callee equals the callee of its enclosing Entry."""
        out = np.zeros(len(self), dtype=np.bool_)
        e = self.entries
        par = self.link[e]
        ok = par >= 0
        out[e[ok]] = self.obj[par[ok]] == self.obj[e[ok]]
        return out

    @cached_property
    def _thread_layout(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        order = np.argsort(self.thread, kind="stable").astype(np.int32)
        counts = np.bincount(self.thread, minlength=len(self.threads))
        offsets = np.zeros(len(self.threads) + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        pos = np.empty(len(self), dtype=np.int32)
        pos[order] = np.arange(len(self), dtype=np.int32)
        return order, offsets, pos

    @property
    def thread_order(self) -> np.ndarray:
        """Event indices grouped by thread, in trace order within a thread."""
        return self._thread_layout[0]

    @property
    def thread_offsets(self) -> np.ndarray:
        return self._thread_layout[1]

    @property
    def thread_pos(self) -> np.ndarray:
        """Position of each event inside ``thread_order``."""
        return self._thread_layout[2]

    @cached_property
    def object_span(self) -> tuple[np.ndarray, np.ndarray]:
        """(first seq, last seq) per object code over every referencing event."""
        n = len(self.objects)
        first = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
        last = np.full(n, np.iinfo(np.int64).min, dtype=np.int64)
        for col in (self.obj, self.value):
            sel = col >= 0
            codes = col[sel]
            seqs = self.seq[sel]
            np.minimum.at(first, codes, seqs)
            np.maximum.at(last, codes, seqs)
        unseen = first > last
        first[unseen] = 0
        last[unseen] = 0
        return first, last

    @property
    def object_lifetimes(self) -> np.ndarray:
        first, last = self.object_span
        return last - first

    # -- queries -----------------------------------------------------------

    def event(self, i: int) -> Event:
        k = Kind(int(self.kind[i]))
        base = dict(index=int(i), seq=int(self.seq[i]), thread=self.threads[self.thread[i]], kind=k)
        if k in (Kind.ENTRY, Kind.EXIT):
            return Event(
                **base,
                method=self.methods[self.method[i]],
                callee_object=self.objects[self.obj[i]],
                is_constructor=bool(self.ctor[i]),
            )
        owner = STATIC if self.obj[i] == STATIC_OWNER else self.objects[self.obj[i]]
        value = None
        if k is Kind.WRITE:
            value = NONOBJECT if self.value[i] < 0 else self.objects[self.value[i]]
        return Event(**base, owner=owner, field=self.fields[self.field[i]], value=value)

    def events(self, indices: Iterable[int]) -> list[Event]:
        return [self.event(int(i)) for i in indices]

    def index_of_seq(self, seq: int) -> int:
        i = int(np.searchsorted(self.seq, seq))
        if i >= len(self) or self.seq[i] != seq:
            raise KeyError(seq)
        return i

    def slice(self, i_start: int, i_end: int, thread: str | int) -> np.ndarray:
        """Indices of events on ``thread`` with ``i_start <= seq <= i_end``."""
        return slice_trace(self, i_start, i_end, thread)

    def caller_of(self, i: int) -> str:
        return caller_of(self, i)

    def object_type(self, obj: str) -> str:
        return self.object_types[self.object_code[obj]]


def slice_trace(trace: Trace, i_start: int, i_end: int, thread: str | int) -> np.ndarray:
    if i_start > i_end:
        raise ValueError("i_start must not exceed i_end")
    t = trace.thread_code.get(thread) if isinstance(thread, str) else int(thread)
    if t is None:
        return np.empty(0, dtype=np.int32)
    lo = int(np.searchsorted(trace.seq, i_start, side="left"))
    hi = int(np.searchsorted(trace.seq, i_end, side="right"))
    order = trace.thread_order
    a, b = trace.thread_offsets[t], trace.thread_offsets[t + 1]
    own = order[a:b]
    # ``own`` is increasing, so the window is contiguous within it
    j0 = int(np.searchsorted(own, lo, side="left"))
    j1 = int(np.searchsorted(own, hi, side="left"))
    return own[j0:j1]


def caller_of(trace: Trace, i: int) -> str:
    """Object that sent Entry ``i``: the enclosing frame's callee, or EXTERNAL."""
    if trace.kind[i] != Kind.ENTRY:
        raise ValueError(f"event {i} is not an Entry")
    par = int(trace.link[i])
    return EXTERNAL if par < 0 else trace.objects[trace.obj[par]]


# ---------------------------------------------------------------------------
# loading


def load_trace(
    path: str | Path,
    progress: Callable[[int], None] | None = None,
    progress_every: int = 1_000_000,
) -> Trace:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_trace(fh, source=str(path), progress=progress, progress_every=progress_every)


def parse_trace(
    lines: Iterable[str],
    source: str | None = None,
    progress: Callable[[int], None] | None = None,
    progress_every: int = 1_000_000,
) -> Trace:
    """Parse trace text in one streaming pass.

    Open Entries left at end of input are closed with synthetic Exit events
    (seq numbers continuing after the last event) and a
    :class:`TruncatedTraceWarning` is issued.
    """
    methods: dict[str, int] = {}
    objects: dict[str, int] = {}
    object_types: list[str] = []
    fields: dict[str, int] = {}
    threads: dict[str, int] = {}
    stacks: list[list[int]] = []

    c_seq = array("q")
    c_kind = array("b")
    c_thread = array("i")
    c_method = array("i")
    c_obj = array("i")
    c_field = array("i")
    c_value = array("i")
    c_ctor = array("b")
    c_link = array("i")
    c_match = array("i")

    def perr(lineno: int, msg: str) -> ParseError:
        return ParseError(msg, location=f"line {lineno}", path=source)

    def ierr(lineno: int, msg: str) -> IntegrityError:
        return IntegrityError(msg, location=f"line {lineno}", path=source)

    last_seq: int | None = None
    n = 0
    lineno = 0
    next_beat = progress_every
    for lineno, line in enumerate(lines, 1):
        p = line.split()
        if not p or p[0][0] == "#":
            continue
        k = p[0]
        if k == "O":
            if len(p) != 3:
                raise perr(lineno, "object declaration needs: O <object_id> <type_name>")
            if p[1] in objects or p[1] in (STATIC, NONOBJECT, EXTERNAL):
                raise perr(lineno, f"object {p[1]!r} declared twice or reserved")
            objects[p[1]] = len(object_types)
            object_types.append(p[2])
            continue
        if len(p) < 5:
            raise perr(lineno, f"too few fields for event {k!r}")
        try:
            s = int(p[1])
        except ValueError:
            raise perr(lineno, f"bad seq {p[1]!r}") from None
        if last_seq is not None and s <= last_seq:
            raise perr(lineno, f"seq {s} is not greater than previous seq {last_seq}")
        last_seq = s
        th = threads.get(p[2])
        if th is None:
            th = threads[p[2]] = len(threads)
            stacks.append([])
        st = stacks[th]

        if k == "E":
            if len(p) > 6 or (len(p) == 6 and p[5] != "C"):
                raise perr(lineno, "entry needs: E <seq> <thread> <method_id> <object_id> [C]")
            m = methods.get(p[3])
            if m is None:
                m = methods[p[3]] = len(methods)
            o = objects.get(p[4])
            if o is None:
                raise ierr(lineno, f"undeclared object {p[4]!r}")
            c_method.append(m)
            c_obj.append(o)
            c_field.append(-1)
            c_value.append(-1)
            c_ctor.append(1 if len(p) == 6 else 0)
            c_link.append(st[-1] if st else -1)
            c_match.append(-1)
            c_kind.append(0)
            st.append(n)
        elif k == "X":
            if len(p) != 5:
                raise perr(lineno, "exit needs: X <seq> <thread> <method_id> <object_id>")
            m = methods.get(p[3])
            o = objects.get(p[4])
            if not st or m is None or o is None or c_method[st[-1]] != m or c_obj[st[-1]] != o:
                raise ierr(lineno, f"unmatched exit at seq {s}")
            top = st.pop()
            c_method.append(m)
            c_obj.append(o)
            c_field.append(-1)
            c_value.append(-1)
            c_ctor.append(0)
            c_link.append(top)
            c_match.append(top)
            c_match[top] = n
            c_kind.append(1)
        elif k == "W":
            if len(p) != 6:
                raise perr(lineno, "write needs: W <seq> <thread> <owner|STATIC> <field_id> <value|->")
            if p[3] == STATIC:
                o = STATIC_OWNER
            else:
                o = objects.get(p[3])
                if o is None:
                    raise ierr(lineno, f"undeclared object {p[3]!r}")
            f = fields.get(p[4])
            if f is None:
                f = fields[p[4]] = len(fields)
            if p[5] == NONOBJECT:
                v = -1
            else:
                v = objects.get(p[5])
                if v is None:
                    raise ierr(lineno, f"undeclared object {p[5]!r}")
            c_method.append(-1)
            c_obj.append(o)
            c_field.append(f)
            c_value.append(v)
            c_ctor.append(0)
            c_link.append(st[-1] if st else -1)
            c_match.append(-1)
            c_kind.append(2)
        elif k == "R":
            if len(p) != 5:
                raise perr(lineno, "read needs: R <seq> <thread> <owner> <field_id>")
            o = objects.get(p[3])
            if o is None:
                raise ierr(lineno, f"undeclared object {p[3]!r}")
            f = fields.get(p[4])
            if f is None:
                f = fields[p[4]] = len(fields)
            c_method.append(-1)
            c_obj.append(o)
            c_field.append(f)
            c_value.append(-1)
            c_ctor.append(0)
            c_link.append(st[-1] if st else -1)
            c_match.append(-1)
            c_kind.append(3)
        else:
            raise perr(lineno, f"unknown event kind {k!r}")
        c_seq.append(s)
        c_thread.append(th)
        n += 1
        if progress is not None and n >= next_beat:
            progress(n)
            next_beat += progress_every

    open_frames = sum(len(st) for st in stacks)
    if open_frames:
        warnings.warn(
            f"{source or 'trace'}: {open_frames} unclosed entries at end of input were auto-closed",
            TruncatedTraceWarning,
            stacklevel=2,
        )
        s = last_seq if last_seq is not None else 0
        for th, st in enumerate(stacks):
            while st:
                top = st.pop()
                s += 1
                c_seq.append(s)
                c_kind.append(1)
                c_thread.append(th)
                c_method.append(c_method[top])
                c_obj.append(c_obj[top])
                c_field.append(-1)
                c_value.append(-1)
                c_ctor.append(0)
                c_link.append(top)
                c_match.append(top)
                c_match[top] = n
                n += 1

    def col(buf: array, dtype) -> np.ndarray:
        return np.frombuffer(buf, dtype=dtype) if len(buf) else np.empty(0, dtype=dtype)

    return Trace(
        seq=col(c_seq, np.int64),
        kind=col(c_kind, np.int8),
        thread=col(c_thread, np.int32),
        method=col(c_method, np.int32),
        obj=col(c_obj, np.int32),
        field=col(c_field, np.int32),
        value=col(c_value, np.int32),
        ctor=col(c_ctor, np.int8),
        link=col(c_link, np.int32),
        match=col(c_match, np.int32),
        methods=list(methods),
        objects=list(objects),
        object_types=object_types,
        fields=list(fields),
        threads=list(threads),
    )


def iter_trace_lines(trace: Trace) -> Iterator[str]:
    """Serialise ``trace`` back to the line format (object headers first)."""
    for o, t in zip(trace.objects, trace.object_types):
        yield f"O {o} {t}\n"
    for i in range(len(trace)):
        e = trace.event(i)
        if e.kind is Kind.ENTRY:
            yield f"E {e.seq} {e.thread} {e.method} {e.callee_object}{' C' if e.is_constructor else ''}\n"
        elif e.kind is Kind.EXIT:
            yield f"X {e.seq} {e.thread} {e.method} {e.callee_object}\n"
        elif e.kind is Kind.WRITE:
            yield f"W {e.seq} {e.thread} {e.owner} {e.field} {e.value}\n"
        else:
            yield f"R {e.seq} {e.thread} {e.owner} {e.field}\n"
