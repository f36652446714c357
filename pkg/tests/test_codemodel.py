import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from concept_lens.codemodel import (
    build_code_model,
    code_model_to_dict,
    dump_code_model,
    load_code_model,
    subtype_of,
)
from concept_lens.errors import IntegrityError, ParseError, UnknownIdError

from conftest import model_from


def test_filesystem_model_loads_with_override_edges(fs_model):
    assert {"FileBase", "Dir", "File"} <= set(fs_model.types)
    assert fs_model.methods["Dir#getDiskUsage"].overrides == {"FileBase#getDiskUsage"}
    assert fs_model.methods["File#getDiskUsage"].overrides == {"FileBase#getDiskUsage"}
    assert fs_model.overridden_by["FileBase#getDiskUsage"] == {"Dir#getDiskUsage", "File#getDiskUsage"}


def test_empty_model_is_fine():
    m = build_code_model({"types": [], "methods": [], "fields": [], "invocations": []})
    assert not m.types and not m.methods and not m.invocations


def test_unknown_supertype_is_an_integrity_error_naming_the_id():
    doc = {"types": [{"id": "A", "name": "A", "supertype_ids": ["Ghost"]}], "methods": [], "fields": [], "invocations": []}
    with pytest.raises(IntegrityError, match="Ghost") as exc:
        build_code_model(doc)
    assert exc.value.location == "$.types[0].supertype_ids[0]"


@pytest.mark.parametrize(
    "doc, needle",
    [
        ({"types": [{"id": "A"}], "methods": [], "fields": [], "invocations": []}, "name"),
        ({"types": [], "methods": [], "fields": []}, "invocations"),
        ({"types": [{"id": "A", "name": "A", "kind": "enum"}], "methods": [], "fields": [], "invocations": []}, "enum"),
    ],
)
def test_schema_violations_are_parse_errors(doc, needle):
    with pytest.raises(ParseError, match=needle):
        build_code_model(doc)


def test_malformed_json_reports_line(tmp_path):
    p = tmp_path / "m.json"
    p.write_text('{"types": [\n  {"id": "A",, }\n]}')
    with pytest.raises(ParseError) as exc:
        load_code_model(p)
    assert exc.value.location.startswith("line 2")
    assert str(p) in str(exc.value)


@pytest.mark.parametrize(
    "types, methods, invocations, needle",
    [
        ([("A", ["B"]), ("B", ["A"])], [], [], "cycle"),
        ([("A", [])], [("A#f", []), ("A#f", [])], [], "duplicate"),
        ([("A", []), ("B", ["A"])], [("A#f", []), ("B#g", ["A#f"])], [], "different name"),
        ([("A", []), ("B", [])], [("A#f", []), ("B#f", ["A#f"])], [], "supertype"),
        ([("A", []), ("B", ["A"])], [("A#<init>", [], True), ("B#<init>", ["A#<init>"], True)], [], "constructor"),
        ([("A", [])], [("A#f", [])], [("A#f", "A#nope", "other")], "A#nope"),
    ],
)
def test_integrity_violations(types, methods, invocations, needle):
    with pytest.raises(IntegrityError, match=needle):
        model_from(types, methods, (), invocations)


def test_library_root_with_supertypes_rejected():
    with pytest.raises(IntegrityError, match="library root"):
        model_from([("A", []), ("Obj", ["A"], True)])


def test_overrides_are_closed_transitively():
    m = model_from(
        [("A", []), ("B", ["A"]), ("C", ["B"])],
        [("A#f", []), ("B#f", ["A#f"]), ("C#f", ["B#f"])],
    )
    assert m.methods["C#f"].overrides == {"A#f", "B#f"}


def test_subtype_examples(fs_model):
    assert subtype_of(fs_model, "Dir", "FileBase")
    assert subtype_of(fs_model, "FileBase", "FileBase")
    assert not subtype_of(fs_model, "FileBase", "Dir")
    with pytest.raises(UnknownIdError):
        subtype_of(fs_model, "Dir", "Nope")


def test_fields_visible_include_inherited(fs_model):
    names = {f.id for f in fs_model.fields_visible_in("Dir")}
    assert names == {"Dir.children", "FileBase.name", "FileBase.size"}


def test_round_trip(tmp_path, fs_model):
    out = tmp_path / "m.json"
    dump_code_model(fs_model, out)
    again = load_code_model(out)
    assert again == fs_model
    assert code_model_to_dict(again) == code_model_to_dict(fs_model)


# -- random hierarchies ---------------------------------------------------------


@st.composite
def hierarchies(draw):
    n = draw(st.integers(1, 9))
    types = []
    for i in range(n):
        sups = draw(st.lists(st.integers(0, i - 1), max_size=2, unique=True)) if i else []
        types.append((f"T{i}", [f"T{s}" for s in sups]))
    return types


def _reach(types, a, b):
    sups = dict(types)
    stack, seen = [a], set()
    while stack:
        t = stack.pop()
        if t == b:
            return True
        if t in seen:
            continue
        seen.add(t)
        stack.extend(sups[t])
    return False


@settings(max_examples=60, deadline=None)
@given(hierarchies())
def test_subtype_matches_reachability_and_is_a_preorder(types):
    m = model_from(types)
    ids = [t for t, _ in types]
    for a in ids:
        assert subtype_of(m, a, a)
        for b in ids:
            assert subtype_of(m, a, b) == _reach(types, a, b)
            for c in ids:
                if subtype_of(m, a, b) and subtype_of(m, b, c):
                    assert subtype_of(m, a, c)


@settings(max_examples=30, deadline=None)
@given(hierarchies(), hierarchies())
def test_disconnected_hierarchies_never_relate(t1, t2):
    t2 = [(f"U{t[1:]}", [f"U{s[1:]}" for s in sups]) for t, sups in t2]
    m = model_from(t1 + t2)
    for a, _ in t1:
        for b, _ in t2:
            assert not subtype_of(m, a, b) and not subtype_of(m, b, a)


@settings(max_examples=30, deadline=None)
@given(hierarchies())
def test_round_trip_random(tmp_path_factory, types):
    methods = [(f"{t}#f", []) for t, _ in types[:1]]
    m = model_from(types, methods)
    p = tmp_path_factory.mktemp("rt") / "m.json"
    dump_code_model(m, p)
    assert load_code_model(p) == m
    assert json.loads(p.read_text())["types"][0]["id"] == types[0][0]
