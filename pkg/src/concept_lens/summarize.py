"""Summarized sequence diagrams: important groups, lifelines and intergroup messages."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .codemodel import CodeModel
from .core import Ranking
from .grouping import ObjectGroup
from .patterns import MetaPattern, pattern_ids
from .trace import Trace

EXTERNAL = "EXTERNAL"
INSTANCE = "instance"
CLASS = "class"

_EXT = -2  # lifeline code of EXTERNAL in the message arrays
_NONE = -1


@dataclass(frozen=True)
class DisplayGroup:
    group_id: str
    members: frozenset[str]
    pattern_ids: frozenset[str] = frozenset()


@dataclass(frozen=True)
class Lifeline:
    group_id: str
    group_type_name: str
    level: str
    members: frozenset[str]
    type_names: frozenset[str] = frozenset()

    @property
    def label(self) -> str:
        return f"{self.group_id}:{self.group_type_name}"


@dataclass(frozen=True)
class Message:
    seq: int
    source: str  # group id or EXTERNAL
    target: str
    label: str
    kind: str = "call"


@dataclass
class SummarizedDiagram:
    level: str
    lifelines: list[Lifeline] = field(default_factory=list)
    messages: list[Message] = field(default_factory=list)
    has_external: bool = False

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "lifelines": [
                {
                    "group_id": l.group_id,
                    "group_type_name": l.group_type_name,
                    "level": l.level,
                    "members": sorted(l.members),
                    "type_names": sorted(l.type_names),
                }
                for l in self.lifelines
            ],
            "messages": [
                {"seq": m.seq, "from": m.source, "to": m.target, "label": m.label, "kind": m.kind}
                for m in self.messages
            ],
        }


def select_important_groups(
    ranking: Ranking, I_t: float, groups: Iterable[ObjectGroup | DisplayGroup]
) -> list[DisplayGroup]:
    """Groups holding an object whose importance exceeds ``I_t``.

    An important object outside every group becomes a singleton group
    ``s:<object id>``.  Groups with identical member sets collapse into one.
    """
    by_obj: dict[str, list[DisplayGroup]] = {}
    for g in groups:
        dg = _as_display(g)
        for o in dg.members:
            by_obj.setdefault(o, []).append(dg)
    picked: dict[frozenset[str], DisplayGroup] = {}
    for o in ranking.above(I_t):
        hits = by_obj.get(o) or [DisplayGroup(f"s:{o}", frozenset([o]))]
        for g in hits:
            prev = picked.get(g.members)
            picked[g.members] = g if prev is None else _merge([prev, g])
    return sorted(picked.values(), key=lambda g: g.group_id)


def _as_display(g: ObjectGroup | DisplayGroup) -> DisplayGroup:
    if isinstance(g, DisplayGroup):
        return g
    return DisplayGroup(g.id, g.members, frozenset([g.pattern_id]))


def _merge(groups: Sequence[DisplayGroup]) -> DisplayGroup:
    return DisplayGroup(
        min(g.group_id for g in groups),
        frozenset().union(*(g.members for g in groups)),
        frozenset().union(*(g.pattern_ids for g in groups)),
    )


def type_name_set(group: DisplayGroup, type_of: Mapping[str, str]) -> frozenset[str]:
    return frozenset(type_of[o] for o in group.members)


def to_class_level(groups: Iterable[DisplayGroup], type_of: Mapping[str, str]) -> list[DisplayGroup]:
    """Union the groups whose member type-name sets are equal."""
    buckets: dict[frozenset[str], list[DisplayGroup]] = {}
    for g in groups:
        buckets.setdefault(type_name_set(g, type_of), []).append(g)
    return sorted((_merge(gs) for gs in buckets.values()), key=lambda g: g.group_id)


def group_type_name(members: Iterable[str], type_of: Mapping[str, str]) -> str:
    counts = Counter(type_of[o] for o in members)
    return min(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0]


class _TypeLookup(Mapping[str, str]):
    def __init__(self, trace: Trace):
        self._trace = trace

    def __getitem__(self, obj: str) -> str:
        return self._trace.object_types[self._trace.object_code[obj]]

    def __iter__(self):
        return iter(self._trace.objects)

    def __len__(self) -> int:
        return len(self._trace.objects)


def object_types(trace: Trace) -> Mapping[str, str]:
    return _TypeLookup(trace)


def _pattern_methods(patterns: Iterable[MetaPattern]) -> dict[str, set[str]]:
    ids = pattern_ids(patterns)
    return {pid: {p.template_method, *p.hooks.methods} for p, pid in ids.items()}


def route_message(
    method: str,
    callee: str,
    displayed: Sequence[DisplayGroup],
    patterns: Iterable[MetaPattern],
) -> DisplayGroup | None:
    """Lifeline that receives a message ``method`` sent to ``callee``.

    Prefers a group built for a pattern whose template or hook method is
    ``method``; otherwise the first containing group by group id.
    """
    holding = sorted((g for g in displayed if callee in g.members), key=lambda g: g.group_id)
    if not holding:
        return None
    pm = _pattern_methods(patterns)
    for g in holding:
        if any(method in pm.get(pid, ()) for pid in g.pattern_ids):
            return g
    return holding[0]


@dataclass(frozen=True)
class DiagramOptions:
    level: str = CLASS
    include_external: bool = False
    returns: bool = False


def emit_diagram(
    trace: Trace,
    model: CodeModel,
    displayed: Sequence[DisplayGroup],
    patterns: Iterable[MetaPattern],
    options: DiagramOptions = DiagramOptions(),
) -> SummarizedDiagram:
    """Intergroup messages among ``displayed`` groups, in trace order.

    A message's sender is the lifeline its enclosing call was routed to, so
    calls inside a group's own chain stay intra-group and are omitted.  A
    self-call stays on its caller's lifeline whenever that lifeline holds the
    object.
    """
    groups = sorted(displayed, key=lambda g: g.group_id)
    n_obj = len(trace.objects)
    code = trace.object_code

    default = np.full(n_obj, _NONE, dtype=np.int64)
    for li in range(len(groups) - 1, -1, -1):
        for o in groups[li].members:
            default[code[o]] = li

    pm = _pattern_methods(patterns)
    override: dict[int, int] = {}
    for li, g in enumerate(groups):
        meths: set[int] = set()
        for pid in g.pattern_ids:
            for mid in pm.get(pid, ()):
                mc = trace.method_code.get(mid)
                if mc is not None:
                    meths.add(mc)
        for mc in meths:
            for o in g.members:
                key = mc * n_obj + code[o]
                if key not in override or override[key] > li:
                    override[key] = li

    entries = trace.entries
    routed = np.full(len(trace), _NONE, dtype=np.int64)
    e_obj = trace.obj[entries].astype(np.int64)
    routed[entries] = default[e_obj]
    if override:
        keys = np.fromiter(override.keys(), dtype=np.int64, count=len(override))
        vals = np.fromiter(override.values(), dtype=np.int64, count=len(override))
        srt = np.argsort(keys)
        keys, vals = keys[srt], vals[srt]
        ek = trace.method[entries].astype(np.int64) * n_obj + e_obj
        at = np.searchsorted(keys, ek)
        at_c = np.minimum(at, len(keys) - 1)
        hit = (at < len(keys)) & (keys[at_c] == ek)
        routed[entries[hit]] = vals[at_c[hit]]

    self_entries = entries[trace.self_call[entries]]
    if len(self_entries):
        member_keys = np.sort(
            np.fromiter(
                (li * n_obj + code[o] for li, g in enumerate(groups) for o in g.members), dtype=np.int64
            )
        )
        _kernels.keep_self_calls_local(
            self_entries.astype(np.int64), trace.link, trace.obj, routed, member_keys, n_obj
        )

    target = routed[entries]
    parent = trace.link[entries]
    source = np.full(len(entries), _EXT, dtype=np.int64)
    has_par = parent >= 0
    source[has_par] = routed[parent[has_par]]
    source[source == _NONE] = _EXT

    keep = (target >= 0) & (source != target)
    if not options.include_external:
        keep &= source != _EXT
    sel = entries[keep]
    src = source[keep]
    dst = target[keep]

    ids = [g.group_id for g in groups]
    labels = {}

    def label(mc: int) -> str:
        lab = labels.get(mc)
        if lab is None:
            m = model.methods.get(trace.methods[mc])
            lab = labels[mc] = f"{m.name if m else trace.methods[mc]}()"
        return lab

    def name(li: int) -> str:
        return EXTERNAL if li == _EXT else ids[li]

    msgs: list[tuple[int, int, Message]] = []
    seqs = trace.seq
    meth = trace.method
    for e, s, d in zip(sel.tolist(), src.tolist(), dst.tolist()):
        lab = label(int(meth[e]))
        msgs.append((int(seqs[e]), 0, Message(int(seqs[e]), name(s), name(d), lab, "call")))
        if options.returns:
            x = int(trace.match[e])
            msgs.append((int(seqs[x]), 1, Message(int(seqs[x]), name(d), name(s), lab, "return")))
    msgs.sort(key=lambda t: (t[0], t[1]))
    messages = [m for _, _, m in msgs]

    types = object_types(trace)
    first_seen = _first_appearance(messages)
    lifelines = []
    for g in groups:
        lifelines.append(
            Lifeline(
                g.group_id,
                group_type_name(g.members, types),
                options.level,
                g.members,
                type_name_set(g, types),
            )
        )
    lifelines.sort(key=lambda l: (first_seen.get(l.group_id, len(first_seen)), l.group_id))
    diagram = SummarizedDiagram(options.level, lifelines, messages, has_external=EXTERNAL in first_seen)
    return diagram


# ---------------------------------------------------------------------------
# rendering


def _first_appearance(messages: Iterable[Message]) -> dict[str, int]:
    """Rank of each lifeline by its first message; a sender precedes its receiver."""
    first: dict[str, int] = {}
    for m in messages:
        for gid in (m.source, m.target):
            if gid not in first:
                first[gid] = len(first)
    return first


def _ordered_participants(d: SummarizedDiagram) -> list[tuple[str, str]]:
    """(group id, display label) in lifeline order, EXTERNAL placed by first use."""
    first = _first_appearance(d.messages)
    parts = [(l.group_id, l.label) for l in d.lifelines]
    if d.has_external:
        parts.append((EXTERNAL, EXTERNAL))
    parts.sort(key=lambda p: (first.get(p[0], len(first)), p[0]))
    return parts


def render_plantuml(d: SummarizedDiagram) -> str:
    parts = _ordered_participants(d)
    alias = {gid: f"L{i}" for i, (gid, _) in enumerate(parts)}
    out = ["@startuml"]
    for gid, lab in parts:
        out.append(f'participant "{lab}" as {alias[gid]}')
    for m in d.messages:
        arrow = "->" if m.kind == "call" else "-->"
        out.append(f"{alias[m.source]} {arrow} {alias[m.target]} : {m.label}")
    out.append("@enduml")
    return "\n".join(out) + "\n"


def render_mermaid(d: SummarizedDiagram) -> str:
    parts = _ordered_participants(d)
    alias = {gid: f"L{i}" for i, (gid, _) in enumerate(parts)}
    out = ["sequenceDiagram"]
    for gid, lab in parts:
        out.append(f"    participant {alias[gid]} as {lab}")
    for m in d.messages:
        arrow = "->>" if m.kind == "call" else "-->>"
        out.append(f"    {alias[m.source]}{arrow}{alias[m.target]}: {m.label}")
    return "\n".join(out) + "\n"


def render_json(d: SummarizedDiagram) -> str:
    return json.dumps(d.to_dict(), indent=1) + "\n"


RENDERERS = {"plantuml": render_plantuml, "mermaid": render_mermaid, "json": render_json}


def summarize(
    trace: Trace,
    model: CodeModel,
    patterns: Sequence[MetaPattern],
    groups: Iterable[ObjectGroup],
    ranking: Ranking,
    I_t: float,
    options: DiagramOptions = DiagramOptions(),
) -> SummarizedDiagram:
    """Selection, optional class-level conversion and message emission."""
    shown = select_important_groups(ranking, I_t, groups)
    if options.level == CLASS:
        shown = to_class_level(shown, object_types(trace))
    return emit_diagram(trace, model, shown, patterns, options)
