"""Static code facts: types, methods, fields and invocation sites.

The code model stands in for source code.  A frontend for a real language
would emit this JSON document; everything downstream only looks at it.
See ``docs/formats.md`` and ``schemas/code_model.schema.json``.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping

import jsonschema

from .errors import IntegrityError, ParseError, UnknownIdError

THIS_OR_SUPER = "this_or_super"
OTHER = "other"


@dataclass(frozen=True)
class TypeDecl:
    id: str
    name: str
    kind: str = "class"
    supertype_ids: frozenset[str] = frozenset()
    is_library_root: bool = False


@dataclass(frozen=True)
class MethodDecl:
    id: str
    name: str
    declaring_type: str
    is_constructor: bool = False
    is_static: bool = False
    # transitive closure, filled in by the loader
    overrides: frozenset[str] = frozenset()


@dataclass(frozen=True)
class FieldDecl:
    id: str
    name: str
    declaring_type: str
    declared_type: str
    is_collection: bool = False
    is_static: bool = False


@dataclass(frozen=True)
class InvocationSite:
    caller_method: str
    callee_method: str
    receiver_kind: str = OTHER


@dataclass(frozen=True, eq=True)
class CodeModel:
    """Immutable bundle of code facts, indexed by id.

    Build through :func:`build_code_model` or :func:`load_code_model`, which
    validate referential integrity and close ``overrides`` transitively.
    """

    types: Mapping[str, TypeDecl] = field(default_factory=dict)
    methods: Mapping[str, MethodDecl] = field(default_factory=dict)
    fields: Mapping[str, FieldDecl] = field(default_factory=dict)
    invocations: tuple[InvocationSite, ...] = ()

    def __hash__(self) -> int:  # identity hash; the mappings are not hashable
        return id(self)

    @cached_property
    def _ancestors(self) -> dict[str, frozenset[str]]:
        out: dict[str, frozenset[str]] = {}

        def visit(tid: str) -> frozenset[str]:
            hit = out.get(tid)
            if hit is not None:
                return hit
            acc = {tid}
            for sup in self.types[tid].supertype_ids:
                acc |= visit(sup)
            res = frozenset(acc)
            out[tid] = res
            return res

        for tid in self.types:
            visit(tid)
        return out

    @cached_property
    def overridden_by(self) -> dict[str, frozenset[str]]:
        """Method id -> ids of methods that override it (transitively)."""
        rev: dict[str, set[str]] = {mid: set() for mid in self.methods}
        for m in self.methods.values():
            for sup in m.overrides:
                rev[sup].add(m.id)
        return {k: frozenset(v) for k, v in rev.items()}

    @cached_property
    def type_by_name(self) -> dict[str, TypeDecl]:
        return {t.name: t for t in self.types.values()}

    def subtype_of(self, a: str, b: str) -> bool:
        return subtype_of(self, a, b)

    def fields_visible_in(self, type_id: str) -> list[FieldDecl]:
        """Fields declared in ``type_id`` or inherited from its supertypes."""
        anc = self._ancestors[type_id]
        return [f for f in self.fields.values() if f.declaring_type in anc]

    def method_signature(self, method_id: str) -> tuple[str, str]:
        """(simple name, declaring type name) used for overload-blind equality."""
        m = self.methods[method_id]
        return m.name, self.types[m.declaring_type].name


def subtype_of(model: CodeModel, a: str, b: str) -> bool:
    """True iff ``a`` is ``b`` or transitively extends/implements it."""
    for tid in (a, b):
        if tid not in model.types:
            raise UnknownIdError(tid)
    return b in model._ancestors[a]


# ---------------------------------------------------------------------------
# loading


def _schema() -> dict:
    text = resources.files("concept_lens").joinpath("schemas/code_model.schema.json").read_text("utf-8")
    return json.loads(text)


_VALIDATOR: jsonschema.protocols.Validator | None = None


def _validator():
    global _VALIDATOR
    if _VALIDATOR is None:
        schema = _schema()
        _VALIDATOR = jsonschema.Draft202012Validator(schema)
    return _VALIDATOR


def _json_path(path: Iterable[Any]) -> str:
    out = "$"
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def load_code_model(path: str | Path) -> CodeModel:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"not UTF-8: {exc}", path=str(path)) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, location=f"line {exc.lineno} column {exc.colno}", path=str(path)) from None
    return build_code_model(doc, source=str(path))


def build_code_model(doc: Mapping[str, Any], source: str | None = None) -> CodeModel:
    """Validate a decoded code-model document and index it."""
    errors = sorted(_validator().iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        raise ParseError(err.message, location=_json_path(err.absolute_path), path=source)

    def fail(msg: str, where: str) -> IntegrityError:
        return IntegrityError(msg, location=where, path=source)

    types: dict[str, TypeDecl] = {}
    for i, t in enumerate(doc["types"]):
        if t["id"] in types:
            raise fail(f"duplicate type id {t['id']!r}", f"$.types[{i}].id")
        types[t["id"]] = TypeDecl(
            id=t["id"],
            name=t["name"],
            kind=t.get("kind", "class"),
            supertype_ids=frozenset(t.get("supertype_ids", ())),
            is_library_root=bool(t.get("is_library_root", False)),
        )
    for i, t in enumerate(doc["types"]):
        for j, sup in enumerate(t.get("supertype_ids", ())):
            if sup not in types:
                raise fail(f"unknown supertype id {sup!r}", f"$.types[{i}].supertype_ids[{j}]")
        if t.get("is_library_root") and t.get("supertype_ids"):
            raise fail(f"library root {t['id']!r} has supertypes in the model", f"$.types[{i}]")
    _check_acyclic(types, fail)

    anc = CodeModel(types=types)._ancestors

    raw_methods: dict[str, dict] = {}
    for i, m in enumerate(doc["methods"]):
        where = f"$.methods[{i}]"
        if m["id"] in raw_methods:
            raise fail(f"duplicate method id {m['id']!r}", where + ".id")
        if m["declaring_type"] not in types:
            raise fail(f"unknown declaring type {m['declaring_type']!r}", where + ".declaring_type")
        raw_methods[m["id"]] = dict(m, _where=where)
    for mid, m in raw_methods.items():
        where = m["_where"]
        ovs = m.get("overrides", ())
        if m.get("is_constructor") and ovs:
            raise fail(f"constructor {mid!r} cannot override", where + ".overrides")
        for j, sup in enumerate(ovs):
            target = raw_methods.get(sup)
            if target is None:
                raise fail(f"unknown overridden method {sup!r}", f"{where}.overrides[{j}]")
            if target["name"] != m["name"]:
                raise fail(f"{mid!r} overrides {sup!r} with a different name", f"{where}.overrides[{j}]")
            dt, st = m["declaring_type"], target["declaring_type"]
            if dt == st or st not in anc[dt]:
                raise fail(f"{sup!r} is not declared in a supertype of {dt!r}", f"{where}.overrides[{j}]")

    closed = _close_overrides({mid: set(m.get("overrides", ())) for mid, m in raw_methods.items()})
    methods = {
        mid: MethodDecl(
            id=mid,
            name=m["name"],
            declaring_type=m["declaring_type"],
            is_constructor=bool(m.get("is_constructor", False)),
            is_static=bool(m.get("is_static", False)),
            overrides=frozenset(closed[mid]),
        )
        for mid, m in raw_methods.items()
    }

    fields: dict[str, FieldDecl] = {}
    for i, f in enumerate(doc["fields"]):
        where = f"$.fields[{i}]"
        if f["id"] in fields:
            raise fail(f"duplicate field id {f['id']!r}", where + ".id")
        if f["declaring_type"] not in types:
            raise fail(f"unknown declaring type {f['declaring_type']!r}", where + ".declaring_type")
        fields[f["id"]] = FieldDecl(
            id=f["id"],
            name=f["name"],
            declaring_type=f["declaring_type"],
            declared_type=f["declared_type"],
            is_collection=bool(f.get("is_collection", False)),
            is_static=bool(f.get("is_static", False)),
        )

    invocations = []
    for i, s in enumerate(doc["invocations"]):
        for key in ("caller_method", "callee_method"):
            if s[key] not in methods:
                raise fail(f"unknown method {s[key]!r}", f"$.invocations[{i}].{key}")
        invocations.append(InvocationSite(s["caller_method"], s["callee_method"], s["receiver_kind"]))

    return CodeModel(types=types, methods=methods, fields=fields, invocations=tuple(invocations))


def _check_acyclic(types: Mapping[str, TypeDecl], fail) -> None:
    indeg = {tid: 0 for tid in types}
    for t in types.values():
        for sup in t.supertype_ids:
            indeg[sup] += 1
    queue = deque(tid for tid, d in indeg.items() if d == 0)
    seen = 0
    while queue:
        tid = queue.popleft()
        seen += 1
        for sup in types[tid].supertype_ids:
            indeg[sup] -= 1
            if indeg[sup] == 0:
                queue.append(sup)
    if seen != len(types):
        cyc = sorted(tid for tid, d in indeg.items() if d > 0)
        raise fail(f"supertype cycle through {cyc[0]!r}", "$.types")


def _close_overrides(direct: dict[str, set[str]]) -> dict[str, set[str]]:
    # supertype DAG is acyclic and overrides point strictly upward, so plain DFS terminates
    memo: dict[str, set[str]] = {}

    def visit(mid: str) -> set[str]:
        if mid in memo:
            return memo[mid]
        acc: set[str] = set()
        for sup in direct[mid]:
            acc.add(sup)
            acc |= visit(sup)
        memo[mid] = acc
        return acc

    return {mid: visit(mid) for mid in direct}


# ---------------------------------------------------------------------------
# writing


def code_model_to_dict(model: CodeModel) -> dict[str, list[dict[str, Any]]]:
    return {
        "types": [
            {
                "id": t.id,
                "name": t.name,
                "kind": t.kind,
                "supertype_ids": sorted(t.supertype_ids),
                "is_library_root": t.is_library_root,
            }
            for t in model.types.values()
        ],
        "methods": [
            {
                "id": m.id,
                "name": m.name,
                "declaring_type": m.declaring_type,
                "is_constructor": m.is_constructor,
                "is_static": m.is_static,
                "overrides": sorted(m.overrides),
            }
            for m in model.methods.values()
        ],
        "fields": [
            {
                "id": f.id,
                "name": f.name,
                "declaring_type": f.declaring_type,
                "declared_type": f.declared_type,
                "is_collection": f.is_collection,
                "is_static": f.is_static,
            }
            for f in model.fields.values()
        ],
        "invocations": [
            {"caller_method": s.caller_method, "callee_method": s.callee_method, "receiver_kind": s.receiver_kind}
            for s in model.invocations
        ],
    }


def dump_code_model(model: CodeModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(code_model_to_dict(model), indent=1) + "\n", encoding="utf-8")
