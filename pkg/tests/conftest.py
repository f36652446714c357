from __future__ import annotations

import textwrap
from pathlib import Path

import pytest

from concept_lens.codemodel import build_code_model
from concept_lens.trace import parse_trace

FIXTURES = Path(__file__).parent / "fixtures"
FILESYSTEM = FIXTURES / "filesystem"


def model_from(types=(), methods=(), fields=(), invocations=()):
    """Build a code model from compact tuples.

    types: (id, [supers]) or (id, [supers], is_library_root)
    methods: (id, [overrides]) or (id, [overrides], is_constructor); id is "Type#name"
    fields: (id, declaring_type, declared_type, is_collection)
    invocations: (caller, callee, receiver_kind)
    """
    doc = {"types": [], "methods": [], "fields": [], "invocations": []}
    for t in types:
        tid, sups, *rest = t
        doc["types"].append(
            {"id": tid, "name": tid, "supertype_ids": list(sups), "is_library_root": bool(rest and rest[0])}
        )
    for m in methods:
        mid, ovs, *rest = m
        owner, name = mid.split("#")
        doc["methods"].append(
            {"id": mid, "name": name, "declaring_type": owner, "overrides": list(ovs),
             "is_constructor": bool(rest and rest[0])}
        )
    for fid, owner, declared, coll in fields:
        doc["fields"].append(
            {"id": fid, "name": fid.rsplit(".", 1)[-1], "declaring_type": owner,
             "declared_type": declared, "is_collection": coll}
        )
    for caller, callee, recv in invocations:
        doc["invocations"].append({"caller_method": caller, "callee_method": callee, "receiver_kind": recv})
    return build_code_model(doc)


def trace_from(text: str, source: str = "<test>"):
    return parse_trace(textwrap.dedent(text).strip().splitlines(), source)


@pytest.fixture(scope="session")
def fs_model():
    from concept_lens.codemodel import load_code_model

    return load_code_model(FILESYSTEM / "model.json")


@pytest.fixture(scope="session")
def fs_trace():
    from concept_lens.trace import load_trace

    return load_trace(FILESYSTEM / "trace.txt")


# -- acceptance report ---------------------------------------------------------

_ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion check")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    num, title = marker.args
    if call.when == "call" or (call.when == "setup" and call.excinfo is not None):
        ok = call.excinfo is None
        prev = _ACCEPTANCE.get(num)
        if prev is None or prev[1] == "PASS":
            _ACCEPTANCE[num] = (title, "PASS" if ok else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        title, status = _ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num}: {status}  {title}")


# -- random well-formed traces -------------------------------------------------


def random_trace_lines(rnd, n_events=60, n_threads=3, n_objects=6, methods=("m0", "m1", "m2"), fields=("f0", "f1"),
                       close_all=True):
    """Simulate per-thread call stacks and return trace lines.

    ``rnd`` is a ``random.Random``.  Objects are ``o0..`` of types ``T0..``.
    """
    lines = [f"O o{i} T{i % 3}" for i in range(n_objects)]
    stacks = {f"t{t}": [] for t in range(n_threads)}
    seq = 0
    for _ in range(n_events):
        t = rnd.choice(list(stacks))
        st = stacks[t]
        seq += rnd.randint(1, 3)
        r = rnd.random()
        if st and r < 0.3:
            m, o = st.pop()
            lines.append(f"X {seq} {t} {m} {o}")
        elif r < 0.65:
            m, o = rnd.choice(methods), f"o{rnd.randrange(n_objects)}"
            ctor = " C" if rnd.random() < 0.1 else ""
            st.append((m, o))
            lines.append(f"E {seq} {t} {m} {o}{ctor}")
        elif r < 0.85:
            owner = "STATIC" if rnd.random() < 0.1 else f"o{rnd.randrange(n_objects)}"
            val = "-" if rnd.random() < 0.3 else f"o{rnd.randrange(n_objects)}"
            lines.append(f"W {seq} {t} {owner} {rnd.choice(fields)} {val}")
        else:
            lines.append(f"R {seq} {t} o{rnd.randrange(n_objects)} {rnd.choice(fields)}")
    if close_all:
        for t, st in stacks.items():
            while st:
                m, o = st.pop()
                seq += 1
                lines.append(f"X {seq} {t} {m} {o}")
    return lines


# -- generated scenarios -------------------------------------------------------


def run_scenario(spec):
    """Generate in memory and return (scenario, trace, detected patterns)."""
    from concept_lens.generator import generate
    from concept_lens.patterns import detect

    sc = generate(spec)
    tr = parse_trace(list(sc.iter_lines()), "<generated>")
    return sc, tr, detect(sc.model)


def oracle_sets(rows):
    return {
        (r["template_method"], tuple(sorted(r["hooks"])), r["category"], r["multiplicity"], frozenset(r["members"]))
        for r in rows
    }


def grouped_sets(result):
    return {
        (
            g.pattern.template_method,
            tuple(sorted(g.pattern.hooks.methods)),
            g.pattern.ptype.category.value,
            g.pattern.ptype.multiplicity.value,
            g.members,
        )
        for g in result
    }
