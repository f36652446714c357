import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from concept_lens.codemodel import InvocationSite
from concept_lens.errors import IntegrityError
from concept_lens.patterns import (
    Category,
    HookSet,
    MetaPattern,
    Multiplicity,
    PatternType,
    count_by_type,
    detect,
    detect_hooks,
    detect_meta_patterns,
    detect_pattern_type,
    dump_patterns,
    load_patterns,
)

from conftest import model_from

GDU = {"FileBase#getDiskUsage", "Dir#getDiskUsage", "File#getDiskUsage"}


def test_filesystem_hooks(fs_model):
    assert detect_hooks(fs_model) == {HookSet(frozenset(GDU))}


def test_no_overrides_no_hooks():
    m = model_from([("A", []), ("B", [])], [("A#f", []), ("B#f", [])])
    assert detect_hooks(m) == set()


def test_library_root_overrides_are_not_hooks():
    m = model_from(
        [("Object", [], True), ("A", ["Object"]), ("B", ["A"])],
        [("Object#toString", []), ("A#toString", ["Object#toString"]), ("A#run", []), ("B#run", ["A#run"])],
        invocations=[("A#run", "A#toString", "this_or_super")],
    )
    assert detect_hooks(m) == {HookSet(frozenset({"A#run", "B#run"}))}
    assert detect_meta_patterns(m, detect_hooks(m)) == set()


def test_constructors_are_not_hooks():
    m = model_from([("A", []), ("B", ["A"])], [("A#<init>", [], True), ("B#<init>", [], True)])
    assert detect_hooks(m) == set()


def test_filesystem_patterns(fs_model):
    pats = {(p.template_method, p.ptype.abbrev) for p in detect(fs_model)}
    assert pats == {("Dir#getDiskUsage", "1N-RCon"), ("A#run", "11-Con")}


def test_observer_is_1n_connection():
    m = model_from(
        [("Model", []), ("View", []), ("TableView", ["View"]), ("ChartView", ["View"])],
        [
            ("Model#notifyPropertyChanged", []),
            ("View#onPropertyChanged", []),
            ("TableView#onPropertyChanged", ["View#onPropertyChanged"]),
            ("ChartView#onPropertyChanged", ["View#onPropertyChanged"]),
        ],
        [("Model.views", "Model", "View", True)],
        [("Model#notifyPropertyChanged", "View#onPropertyChanged", "other")],
    )
    (p,) = detect(m)
    assert p.template_method == "Model#notifyPropertyChanged"
    assert p.ptype == PatternType(Category.CONNECTION, Multiplicity.N)
    assert len(p.hooks.methods) == 3


def test_no_hook_invocation_no_pattern():
    m = model_from([("A", []), ("B", ["A"])], [("A#f", []), ("B#f", ["A#f"]), ("A#g", [])], invocations=[("A#f", "A#g", "other")])
    assert detect(m) == []


def _classify_model():
    return model_from(
        [("Base", []), ("Sub", ["Base"]), ("Other", []), ("Holder", [])],
        [
            ("Base#h", []), ("Sub#h", ["Base#h"]),
            ("Base#t", []), ("Sub#t", []), ("Other#t", []), ("Holder#t", []),
        ],
        [("Holder.one", "Holder", "Base", False), ("Holder.many", "Holder", "Sub", True),
         ("Sub.items", "Sub", "Base", True)],
    )


@pytest.mark.parametrize(
    "m_t, recv, expected",
    [
        ("Base#t", "this_or_super", (Category.UNIFICATION, Multiplicity.ONE)),
        ("Base#t", "other", (Category.RECURSIVE_UNIFICATION, Multiplicity.ONE)),  # Sub.items is not visible in Base
        ("Sub#t", "other", (Category.RECURSIVE_CONNECTION, Multiplicity.N)),
        ("Other#t", "other", (Category.CONNECTION, Multiplicity.ONE)),
        ("Holder#t", "other", (Category.CONNECTION, Multiplicity.N)),  # scalar and collection: N
    ],
)
def test_detect_pattern_type_rules(m_t, recv, expected):
    m = _classify_model()
    site = InvocationSite(m_t, "Base#h", recv)
    got = detect_pattern_type(m, m_t, "Base#h", site)
    assert (got.category, got.multiplicity) == expected


def test_detect_pattern_type_rejects_mismatched_site():
    m = _classify_model()
    with pytest.raises(ValueError):
        detect_pattern_type(m, "Sub#t", "Base#h", InvocationSite("Other#t", "Base#h", "other"))


def test_duplicate_sites_collapse():
    m = model_from(
        [("A", []), ("B", ["A"])],
        [("A#f", []), ("B#f", ["A#f"]), ("A#t", [])],
        invocations=[("A#t", "A#f", "other"), ("A#t", "A#f", "other"), ("A#t", "B#f", "other")],
    )
    # the repeated site collapses; calling the subclass hook from A is a different category
    assert sorted(p.ptype.abbrev for p in detect(m)) == ["11-Con", "11-RUni"]


def test_abbrev_catalogue():
    names = {PatternType(c, mu).abbrev for c in Category for mu in Multiplicity}
    assert names == {"Uni", "11-RUni", "1N-RUni", "11-RCon", "1N-RCon", "11-Con", "1N-Con"}


def test_report_round_trip(tmp_path, fs_model):
    p = tmp_path / "p.json"
    dump_patterns(fs_model, detect(fs_model), p)
    assert load_patterns(p, fs_model) == detect(fs_model)
    assert count_by_type(load_patterns(p, fs_model))["1N-RCon"] == 1


def test_report_with_unknown_method(tmp_path, fs_model):
    p = tmp_path / "p.json"
    text = dump_patterns(fs_model, detect(fs_model)).replace("Dir#getDiskUsage", "Dir#gone", 1)
    p.write_text(text)
    with pytest.raises(IntegrityError, match="Dir#gone"):
        load_patterns(p, fs_model)


# -- random models ------------------------------------------------------------------


@st.composite
def override_models(draw):
    n_types = draw(st.integers(1, 7))
    types = []
    for i in range(n_types):
        sups = draw(st.lists(st.integers(0, i - 1), max_size=2, unique=True)) if i else []
        types.append((f"T{i}", [f"T{s}" for s in sups]))
    root = draw(st.booleans())
    if root:
        types = [("Obj", [], True)] + [(t, s or ["Obj"]) for t, s in types]
    sups = dict((t[0], t[1]) for t in types)

    def ancestors(t):
        out, stack = set(), list(sups[t])
        while stack:
            x = stack.pop()
            if x not in out:
                out.add(x)
                stack.extend(sups[x])
        return out

    names = ["f", "g", "h"]
    methods = []
    declared = {}
    if root:
        methods.append(("Obj#f", []))
        declared.setdefault("f", []).append("Obj")
    for t, *_ in types:
        if t == "Obj":
            continue
        for nm in draw(st.lists(st.sampled_from(names), unique=True, max_size=3)):
            ovs = [f"{a}#{nm}" for a in ancestors(t) if a in declared.get(nm, []) and draw(st.booleans())]
            methods.append((f"{t}#{nm}", ovs))
            declared.setdefault(nm, []).append(t)
    mids = [m for m, _ in methods]
    fields = []
    for i, (t, *_) in enumerate(types):
        if draw(st.booleans()) and len(types) > 1:
            tgt = draw(st.sampled_from([x for x, *_ in types]))
            fields.append((f"{t}.x{i}", t, tgt, draw(st.booleans())))
    sites = []
    if mids:
        for _ in range(draw(st.integers(0, 6))):
            sites.append(
                (draw(st.sampled_from(mids)), draw(st.sampled_from(mids)), draw(st.sampled_from(["this_or_super", "other"])))
            )
    return model_from(types, methods, fields, sites)


def _components(model):
    """Independent oracle: BFS over eligible direct+transitive override edges."""
    ok = {
        mid for mid, m in model.methods.items()
        if not m.is_constructor and not model.types[m.declaring_type].is_library_root
    }
    adj = {m: set() for m in ok}
    for mid in ok:
        for sup in model.methods[mid].overrides:
            if sup in ok:
                adj[mid].add(sup)
                adj[sup].add(mid)
    comps, seen = [], set()
    for s in ok:
        if s in seen or not adj[s]:
            continue
        comp, stack = set(), [s]
        while stack:
            x = stack.pop()
            if x in comp:
                continue
            comp.add(x)
            stack.extend(adj[x])
        seen |= comp
        comps.append(frozenset(comp))
    return set(comps)


@settings(max_examples=150, deadline=None)
@given(override_models())
def test_hook_sets_partition_override_components(model):
    hooks = detect_hooks(model)
    assert {h.methods for h in hooks} == _components(model)
    seen = set()
    for h in hooks:
        assert not (seen & h.methods)
        seen |= h.methods
        assert len(h.methods) >= 2


@settings(max_examples=150, deadline=None)
@given(override_models())
def test_classification_is_total_and_follows_the_rules(model):
    hooks = detect_hooks(model)
    owner = {m: h for h in hooks for m in h.methods}
    pats = detect_meta_patterns(model, hooks)
    expected = set()
    for s in model.invocations:
        if s.callee_method not in owner:
            continue
        tt = model.methods[s.caller_method].declaring_type
        th = model.methods[s.callee_method].declaring_type
        if s.receiver_kind == "this_or_super":
            cat = Category.UNIFICATION
        elif tt == th:
            cat = Category.RECURSIVE_UNIFICATION
        elif model.subtype_of(tt, th):
            cat = Category.RECURSIVE_CONNECTION
        else:
            cat = Category.CONNECTION
        got = detect_pattern_type(model, s.caller_method, s.callee_method, s)
        assert got.category is cat
        assert got == detect_pattern_type(model, s.caller_method, s.callee_method, s)
        expected.add(MetaPattern(s.caller_method, owner[s.callee_method], got))
    assert pats == expected
