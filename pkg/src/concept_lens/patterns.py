"""Template/hook meta-pattern detection over a :class:`CodeModel`.

Hooks are override-connected method families.  Every invocation site whose
static target is a hook makes its enclosing method a template method; the
relationship between the two declaring types picks the category.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

from .codemodel import THIS_OR_SUPER, CodeModel, InvocationSite
from .errors import IntegrityError, ParseError, UnknownIdError


class Category(str, enum.Enum):
    UNIFICATION = "Unification"
    RECURSIVE_UNIFICATION = "RecursiveUnification"
    RECURSIVE_CONNECTION = "RecursiveConnection"
    CONNECTION = "Connection"

    @property
    def is_recursive(self) -> bool:
        return self in (Category.RECURSIVE_UNIFICATION, Category.RECURSIVE_CONNECTION)

    @property
    def is_connection(self) -> bool:
        return self is Category.CONNECTION


class Multiplicity(str, enum.Enum):
    ONE = "One"
    N = "N"


_ABBREV = {
    Category.UNIFICATION: "Uni",
    Category.RECURSIVE_UNIFICATION: "RUni",
    Category.RECURSIVE_CONNECTION: "RCon",
    Category.CONNECTION: "Con",
}
_CATEGORY_ORDER = {c: i for i, c in enumerate(Category)}


@dataclass(frozen=True, order=True)
class PatternType:
    category: Category
    multiplicity: Multiplicity

    @property
    def abbrev(self) -> str:
        """Short name as in the seven-pattern catalogue: Uni, 11-RCon, 1N-Con, ..."""
        if self.category is Category.UNIFICATION:
            return "Uni"
        mul = "11" if self.multiplicity is Multiplicity.ONE else "1N"
        return f"{mul}-{_ABBREV[self.category]}"


ALL_PATTERN_TYPES: tuple[str, ...] = (
    "Uni", "11-RUni", "1N-RUni", "11-RCon", "1N-RCon", "11-Con", "1N-Con",
)


@dataclass(frozen=True)
class HookSet:
    methods: frozenset[str]

    def __post_init__(self) -> None:
        if len(self.methods) < 2:
            raise ValueError("a hook set needs at least two methods")

    @property
    def key(self) -> tuple[str, ...]:
        return tuple(sorted(self.methods))


@dataclass(frozen=True)
class MetaPattern:
    template_method: str
    hooks: HookSet
    ptype: PatternType

    @property
    def key(self) -> tuple:
        return (self.template_method, self.hooks.key, _CATEGORY_ORDER[self.ptype.category], self.ptype.multiplicity.value)


def detect_hooks(model: CodeModel) -> set[HookSet]:
    """Partition overriding methods into override-connected hook sets.

    Constructors and methods declared in library-root types never count, and
    neither do override edges that end at a library-root method, so a class
    that only overrides ``toString`` contributes nothing.
    """

    def eligible(mid: str) -> bool:
        m = model.methods[mid]
        return not m.is_constructor and not model.types[m.declaring_type].is_library_root

    parent: dict[str, str] = {}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for mid in model.methods:
        if not eligible(mid):
            continue
        for sup in model.methods[mid].overrides:
            if not eligible(sup):
                continue
            parent.setdefault(mid, mid)
            parent.setdefault(sup, sup)
            ra, rb = find(mid), find(sup)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)

    comps: dict[str, set[str]] = {}
    for mid in parent:
        comps.setdefault(find(mid), set()).add(mid)
    return {HookSet(frozenset(c)) for c in comps.values()}


def _multiplicity(model: CodeModel, template_type: str, hook_type: str) -> Multiplicity:
    found_collection = False
    for f in model.fields_visible_in(template_type):
        target = model.types.get(f.declared_type)
        if target is None or target.is_library_root:
            continue
        if model.subtype_of(target.id, hook_type) or model.subtype_of(hook_type, target.id):
            if f.is_collection:
                found_collection = True
    return Multiplicity.N if found_collection else Multiplicity.ONE


def detect_pattern_type(model: CodeModel, m_t: str, m_h: str, site: InvocationSite) -> PatternType:
    for mid in (m_t, m_h):
        if mid not in model.methods:
            raise UnknownIdError(mid)
    if site.caller_method != m_t or site.callee_method != m_h:
        raise ValueError("site does not connect the given template and hook methods")
    t_t = model.methods[m_t].declaring_type
    t_h = model.methods[m_h].declaring_type
    if site.receiver_kind == THIS_OR_SUPER:
        return PatternType(Category.UNIFICATION, Multiplicity.ONE)
    mul = _multiplicity(model, t_t, t_h)
    if t_t == t_h:
        return PatternType(Category.RECURSIVE_UNIFICATION, mul)
    if model.subtype_of(t_t, t_h):
        return PatternType(Category.RECURSIVE_CONNECTION, mul)
    return PatternType(Category.CONNECTION, mul)


def detect_meta_patterns(model: CodeModel, hooks: Iterable[HookSet]) -> set[MetaPattern]:
    owner: dict[str, HookSet] = {}
    for h in hooks:
        for mid in h.methods:
            owner[mid] = h
    found: set[MetaPattern] = set()
    for site in model.invocations:
        h = owner.get(site.callee_method)
        if h is None:
            continue
        ptype = detect_pattern_type(model, site.caller_method, site.callee_method, site)
        found.add(MetaPattern(site.caller_method, h, ptype))
    return found


def detect(model: CodeModel) -> list[MetaPattern]:
    """Hooks then patterns, in the canonical order used for pattern ids."""
    return sorted(detect_meta_patterns(model, detect_hooks(model)), key=lambda p: p.key)


def count_by_type(patterns: Iterable[MetaPattern]) -> dict[str, int]:
    counts = {name: 0 for name in ALL_PATTERN_TYPES}
    for p in patterns:
        counts[p.ptype.abbrev] += 1
    return counts


# ---------------------------------------------------------------------------
# pattern report file


def pattern_ids(patterns: Iterable[MetaPattern]) -> dict[MetaPattern, str]:
    return {p: f"p{i}" for i, p in enumerate(sorted(patterns, key=lambda p: p.key))}


def patterns_to_dict(model: CodeModel, patterns: Iterable[MetaPattern]) -> dict[str, Any]:
    ids = pattern_ids(patterns)
    rows = []
    for p, pid in sorted(ids.items(), key=lambda kv: int(kv[1][1:])):
        tm = model.methods[p.template_method]
        rows.append(
            {
                "id": pid,
                "type": p.ptype.abbrev,
                "category": p.ptype.category.value,
                "multiplicity": p.ptype.multiplicity.value,
                "template_method": p.template_method,
                "template": f"{model.types[tm.declaring_type].name}#{tm.name}",
                "hooks": sorted(p.hooks.methods),
                "hook_names": sorted(
                    {f"{model.types[model.methods[h].declaring_type].name}#{model.methods[h].name}" for h in p.hooks.methods}
                ),
            }
        )
    return {"patterns": rows}


def dump_patterns(model: CodeModel, patterns: Iterable[MetaPattern], path: str | Path | None = None) -> str:
    text = json.dumps(patterns_to_dict(model, patterns), indent=1) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def load_patterns(path: str | Path, model: CodeModel) -> list[MetaPattern]:
    """Read a pattern report back, checking its method ids against ``model``."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, location=f"line {exc.lineno} column {exc.colno}", path=str(path)) from None
    try:
        rows = doc["patterns"]
        out = []
        for i, row in enumerate(rows):
            for mid in [row["template_method"], *row["hooks"]]:
                if mid not in model.methods:
                    raise IntegrityError(f"unknown method {mid!r}", location=f"$.patterns[{i}]", path=str(path))
            out.append(
                MetaPattern(
                    row["template_method"],
                    HookSet(frozenset(row["hooks"])),
                    PatternType(Category(row["category"]), Multiplicity(row["multiplicity"])),
                )
            )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, IntegrityError):
            raise
        raise ParseError(f"bad pattern report: {exc}", path=str(path)) from None
    return sorted(out, key=lambda p: p.key)
