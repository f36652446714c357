"""Object grouping over an execution trace, one soft cluster per meta pattern.

Recursive patterns gather the objects reached through a chain of
template/hook calls; connection patterns gather the hook objects a template
object talks to.  Unification patterns never group.  Seeds sharing a
template object and pattern are unioned, then groups that are strict subsets
of another group of the same pattern are dropped.

``Mode.MP_D`` relaxes chain membership to name equality so that delegate
objects joining a chain are absorbed as well.
"""

from __future__ import annotations

import enum
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import _kernels
from .codemodel import CodeModel
from .errors import IntegrityError, ParseError
from .patterns import MetaPattern, pattern_ids
from .trace import Kind, Trace


class Mode(str, enum.Enum):
    MP = "mp"
    MP_D = "mpd"


@dataclass(frozen=True)
class GroupSeed:
    template_object: str
    pattern: MetaPattern
    members: frozenset[str]


@dataclass(frozen=True)
class ObjectGroup:
    id: str
    pattern_id: str
    pattern: MetaPattern
    members: frozenset[str]
    # every template object whose unified seed produced exactly this member set
    template_objects: tuple[str, ...]

    @property
    def template_object(self) -> str:
        return self.template_objects[0]


@dataclass(frozen=True)
class GroupingResult:
    mode: Mode
    groups: tuple[ObjectGroup, ...]

    def __iter__(self):
        return iter(self.groups)

    def __len__(self) -> int:
        return len(self.groups)

    def member_sets(self) -> set[tuple[str, frozenset[str]]]:
        return {(g.pattern_id, g.members) for g in self.groups}


def configured_threads(default: int = 1) -> int:
    raw = os.environ.get("CONCEPT_LENS_THREADS")
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        return default


class Grouper:
    """Per-(trace, model, patterns) lookup tables shared by every seed."""

    def __init__(self, trace: Trace, model: CodeModel, patterns: Sequence[MetaPattern]):
        self.trace = trace
        self.model = model
        self.patterns = sorted(patterns, key=lambda p: p.key)
        self.ids = pattern_ids(self.patterns)
        names, sigs = [], []
        for mid in trace.methods:
            m = model.methods.get(mid)
            if m is None:
                raise IntegrityError(f"trace method {mid!r} is not in the code model")
            names.append(m.name)
            sigs.append((m.name, model.types[m.declaring_type].name))
        self._names = np.array(names, dtype=object)
        self._sigs = sigs
        self._by_method = self._entries_by_method()

    def _entries_by_method(self) -> dict[int, np.ndarray]:
        e = self.trace.entries
        if len(e) == 0:
            return {}
        m = self.trace.method[e]
        order = np.argsort(m, kind="stable")
        e_sorted = e[order]
        m_sorted = m[order]
        cuts = np.flatnonzero(np.diff(m_sorted)) + 1
        starts = np.concatenate(([0], cuts))
        ends = np.concatenate((cuts, [len(m_sorted)]))
        return {int(m_sorted[a]): e_sorted[a:b] for a, b in zip(starts, ends)}

    # -- lookup tables -----------------------------------------------------

    def _hook_names(self, p: MetaPattern) -> set[str]:
        return {self.model.methods[h].name for h in p.hooks.methods}

    def _hook_sigs(self, p: MetaPattern) -> set[tuple[str, str]]:
        return {self.model.method_signature(h) for h in p.hooks.methods}

    def _name_flags(self, p: MetaPattern) -> np.ndarray:
        names = self._hook_names(p)
        return np.fromiter((n in names for n in self._names), dtype=np.bool_, count=len(self._names))

    def _sig_flags(self, p: MetaPattern) -> np.ndarray:
        sigs = self._hook_sigs(p)
        return np.fromiter((s in sigs for s in self._sigs), dtype=np.bool_, count=len(self._sigs))

    def activations(self, p: MetaPattern) -> np.ndarray:
        code = self.trace.method_code.get(p.template_method)
        if code is None:
            return np.empty(0, dtype=np.int32)
        return self._by_method.get(code, np.empty(0, dtype=np.int32))

    # -- seeding -----------------------------------------------------------

    def _run(self, p: MetaPattern, acts: np.ndarray, mode: Mode) -> dict[int, set[int]]:
        """Unified seeds for ``acts``: template object code -> member codes."""
        tr = self.trace
        cat = p.ptype.category
        if len(acts) == 0 or not (cat.is_recursive or cat.is_connection):
            return {}
        acts = np.asarray(acts, dtype=np.int64)
        direct = cat.is_connection and mode is Mode.MP
        if not direct:
            acts = _kernels.rewind_self_calls(acts, tr.link, tr.self_call)
            acts = np.unique(acts)
        tobj = tr.obj[acts].astype(np.int64)
        ranks_sorted = np.argsort(tobj, kind="stable")
        acts = acts[ranks_sorted]
        tobj = tobj[ranks_sorted]
        order, _, pos = tr._thread_layout
        if direct:
            t, m = _kernels.direct_scan(
                acts, tobj, tr.kind, tr.method, tr.obj, tr.link, tr.match, order, pos,
                self._sig_flags(p), len(tr.objects),
            )
        else:
            chain = self._sig_flags(p) if mode is Mode.MP else self._name_flags(p)
            t, m = _kernels.chain_scan(
                acts, tobj, tr.kind, tr.method, tr.obj, tr.match, tr.self_call, order, pos,
                chain, self._name_flags(p), cat.is_recursive, cat.is_connection, len(tr.objects),
            )
        out: dict[int, set[int]] = {}
        for a, b in zip(t.tolist(), m.tolist()):
            out.setdefault(a, set()).add(b)
        return out

    def _seed(self, e_entry: int, p: MetaPattern, mode: Mode) -> GroupSeed:
        tr = self.trace
        if tr.kind[e_entry] != Kind.ENTRY:
            raise ValueError(f"event {e_entry} is not an Entry")
        seeds = self._run(p, np.array([e_entry]), mode)
        direct = p.ptype.category.is_connection and mode is Mode.MP
        e = e_entry if direct else int(_kernels.rewind_self_calls(np.array([e_entry], dtype=np.int64), tr.link, tr.self_call)[0])
        t_code = int(tr.obj[e])
        members = frozenset(tr.objects[c] for c in seeds.get(t_code, ()))
        return GroupSeed(tr.objects[t_code], p, members)

    def seed_recursive(self, e_entry: int, p: MetaPattern, mode: Mode = Mode.MP) -> GroupSeed:
        if not p.ptype.category.is_recursive:
            raise ValueError("pattern is not recursive")
        return self._seed(e_entry, p, mode)

    def seed_connection(self, e_entry: int, p: MetaPattern, mode: Mode = Mode.MP) -> GroupSeed:
        if not p.ptype.category.is_connection:
            raise ValueError("pattern is not a connection pattern")
        return self._seed(e_entry, p, mode)

    # -- whole trace -------------------------------------------------------

    def group(self, mode: Mode = Mode.MP, threads: int | None = None) -> GroupingResult:
        threads = configured_threads() if threads is None else threads
        work = [p for p in self.patterns if p.ptype.category.is_recursive or p.ptype.category.is_connection]

        def task(p: MetaPattern):
            return p, self._run(p, self.activations(p), mode)

        if threads > 1 and len(work) > 1:
            # make sure compiled kernels exist before fanning out
            self.trace._thread_layout, self.trace.self_call  # noqa: B018
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(task, work))
        else:
            results = [task(p) for p in work]

        objs = self.trace.objects
        raw: list[tuple[MetaPattern, frozenset[str], tuple[str, ...]]] = []
        for p, seeds in results:
            by_members: dict[frozenset[int], list[int]] = {}
            for t_code, mem in seeds.items():
                by_members.setdefault(frozenset(mem), []).append(t_code)
            kept = _drop_strict_subsets(list(by_members))
            for mem in kept:
                tobjs = sorted(by_members[mem], key=lambda c: (self.trace.object_span[0][c], objs[c]))
                raw.append((p, frozenset(objs[c] for c in mem), tuple(objs[c] for c in tobjs)))
        raw.sort(key=lambda r: (r[0].key, sorted(r[1])))
        groups = tuple(
            ObjectGroup(f"g{i}", self.ids[p], p, mem, tobjs) for i, (p, mem, tobjs) in enumerate(raw)
        )
        return GroupingResult(mode, groups)


def _drop_strict_subsets(sets: list[frozenset[int]]) -> list[frozenset[int]]:
    """Keep the sets that are not a strict subset of another set in ``sets``."""
    postings: dict[int, list[int]] = {}
    for i, s in enumerate(sets):
        for x in s:
            postings.setdefault(x, []).append(i)
    kept = []
    for i, s in enumerate(sets):
        pivot = min(s, key=lambda x: len(postings[x]))
        dominated = any(
            j != i and len(sets[j]) > len(s) and s < sets[j] for j in postings[pivot]
        )
        if not dominated:
            kept.append(s)
    return kept


def group_objects(
    trace: Trace,
    model: CodeModel,
    patterns: Sequence[MetaPattern],
    mode: Mode = Mode.MP,
    threads: int | None = None,
) -> GroupingResult:
    return Grouper(trace, model, patterns).group(mode, threads=threads)


# ---------------------------------------------------------------------------
# group file


def groups_to_dict(result: GroupingResult) -> dict[str, Any]:
    return {
        "mode": result.mode.value,
        "groups": [
            {
                "id": g.id,
                "pattern": g.pattern_id,
                "pattern_type": g.pattern.ptype.abbrev,
                "template_method": g.pattern.template_method,
                "template_object": g.template_object,
                "template_objects": list(g.template_objects),
                "members": sorted(g.members),
            }
            for g in result.groups
        ],
    }


def dump_groups(result: GroupingResult, path: str | Path | None = None) -> str:
    text = json.dumps(groups_to_dict(result), indent=1) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def load_groups(path: str | Path, patterns: Iterable[MetaPattern]) -> GroupingResult:
    path = Path(path)
    by_id = {pid: p for p, pid in pattern_ids(patterns).items()}
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, location=f"line {exc.lineno} column {exc.colno}", path=str(path)) from None
    try:
        mode = Mode(doc["mode"])
        groups = []
        for i, row in enumerate(doc["groups"]):
            p = by_id.get(row["pattern"])
            if p is None:
                raise IntegrityError(f"unknown pattern {row['pattern']!r}", location=f"$.groups[{i}]", path=str(path))
            groups.append(
                ObjectGroup(row["id"], row["pattern"], p, frozenset(row["members"]), tuple(row["template_objects"]))
            )
    except IntegrityError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad group file: {exc}", path=str(path)) from None
    return GroupingResult(mode, tuple(groups))
