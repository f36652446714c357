"""Synthetic programs, traces and grouping oracles.

Each scenario is a set of independent pattern *instances* (a composite or
decorator tree, a linked structure, an observer hub, a template method with a
self-call hook) driven by one driver object per thread.  The generator wires
every object itself, so it knows which objects each template activation
reaches and writes the expected groups down directly instead of running the
grouper.

Output files (see ``docs/formats.md``): ``model.json``, ``trace.txt``,
``oracle.json`` and ``truth.json``.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterator

from .codemodel import OTHER, THIS_OR_SUPER, CodeModel, build_code_model
from .patterns import ALL_PATTERN_TYPES

OBJECT = "java.lang.Object"
DRIVER = "gen.Driver"
TEMP = "gen.Temp"


@dataclass
class ScenarioSpec:
    # instances per pattern type, keyed by Uni, 11-RUni, 1N-RUni, 11-RCon, 1N-RCon, 11-Con, 1N-Con
    pattern_mix: dict[str, int] = field(default_factory=lambda: {"1N-RCon": 1})
    depth: tuple[int, int] = (1, 3)
    fanout: tuple[int, int] = (1, 3)
    delegate_prob: float = 0.0
    threads: int = 1
    temp_rate: float = 0.2
    seed: int = 0
    activations: tuple[int, int] = (1, 3)
    self_call_prob: float = 0.3
    # keep activating instances until each thread has emitted about this share
    target_events: int | None = None
    max_chunk: int = 6

    def __post_init__(self) -> None:
        unknown = set(self.pattern_mix) - set(ALL_PATTERN_TYPES)
        if unknown:
            raise ValueError(f"unknown pattern types: {sorted(unknown)}")
        if any(v < 0 for v in self.pattern_mix.values()):
            raise ValueError("pattern counts must be non-negative")
        self.depth = tuple(self.depth)
        self.fanout = tuple(self.fanout)
        self.activations = tuple(self.activations)
        for name in ("depth", "fanout", "activations"):
            lo, hi = getattr(self, name)
            if lo < 1 or hi < lo:
                raise ValueError(f"{name} must be a range with 1 <= lo <= hi")
        if not 0.0 <= self.delegate_prob <= 1.0:
            raise ValueError("delegate_prob must be a probability")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ScenarioSpec":
        return cls(**d)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        for k in ("depth", "fanout", "activations"):
            d[k] = list(d[k])
        return d


# ---------------------------------------------------------------------------
# static structure


class _ModelBuilder:
    def __init__(self) -> None:
        self.types: list[dict] = []
        self.methods: list[dict] = []
        self.fields: list[dict] = []
        self.sites: list[dict] = []
        self._type_ids: set[str] = set()

    def type(self, name: str, supers=(OBJECT,), kind: str = "class", root: bool = False) -> str:
        self.types.append(
            {"id": name, "name": name, "kind": kind, "supertype_ids": list(supers), "is_library_root": root}
        )
        self._type_ids.add(name)
        return name

    def method(self, tname: str, name: str, overrides=(), ctor: bool = False) -> str:
        mid = f"{tname}#{name}"
        self.methods.append(
            {"id": mid, "name": name, "declaring_type": tname, "is_constructor": ctor,
             "is_static": False, "overrides": list(overrides)}
        )
        return mid

    def field(self, tname: str, name: str, declared: str, coll: bool = False, static: bool = False) -> str:
        fid = f"{tname}.{name}"
        self.fields.append(
            {"id": fid, "name": name, "declaring_type": tname, "declared_type": declared,
             "is_collection": coll, "is_static": static}
        )
        return fid

    def site(self, caller: str, callee: str, recv: str = OTHER) -> None:
        self.sites.append({"caller_method": caller, "callee_method": callee, "receiver_kind": recv})

    def build(self) -> CodeModel:
        return build_code_model(self.doc())

    def doc(self) -> dict:
        return {"types": self.types, "methods": self.methods, "fields": self.fields, "invocations": self.sites}


@dataclass
class _PatternDecl:
    template_method: str
    hooks: tuple[str, ...]
    category: str
    multiplicity: str
    abbrev: str

    def key(self) -> tuple:
        return (self.template_method, self.hooks, self.category, self.multiplicity)


@dataclass
class _Node:
    obj: str
    method: str  # executed op method
    children: list["_Node"] = field(default_factory=list)
    helper: str | None = None


# Events are tuples without seq/thread; the interleaver adds both.
# ("E", method, obj, ctor) ("X", method, obj) ("W", owner, field, value) ("R", owner, field) ("O", obj, type)


class _Instance:
    """Common bookkeeping: objects, patterns, oracle member sets."""

    def __init__(self, k: int):
        self.k = k
        self.objects: list[tuple[str, str]] = []  # (object id, type name)
        self.ctors: dict[str, str] = {}
        self.wiring: list[tuple] = []  # setup writes
        self.patterns: list[_PatternDecl] = []
        # pattern key -> (mp members, mpd members)
        self.oracle: dict[tuple, tuple[set[str], set[str]]] = {}
        self.concept_types: set[str] = set()
        self.client = ""

    def new(self, tname: str, short: str, ctor: str) -> str:
        oid = f"{short}{self.k}_{len(self.objects)}"
        self.objects.append((oid, tname))
        self.ctors[oid] = ctor
        return oid

    def setup_events(self) -> list[tuple]:
        ev = []
        for oid, _ in self.objects:
            ev.append(("E", self.ctors[oid], oid, True))
            ev.append(("X", self.ctors[oid], oid))
        ev.extend(self.wiring)
        return ev


class _Tree(_Instance):
    """Recursive-pattern instance: composite/decorator (RCon) or linked nodes (RUni)."""

    def __init__(self, k: int, mb: _ModelBuilder, rng: random.Random, spec: ScenarioSpec, cat: str, many: bool):
        super().__init__(k)
        op = f"op{k}"
        helper_t = mb.type(f"gen.Helper{k}")
        h_op = mb.method(helper_t, op)
        h_ctor = mb.method(helper_t, "<init>", ctor=True)
        h_state = mb.field(helper_t, f"state{k}", "int")
        if cat == "RCon":
            base = mb.type(f"gen.Base{k}")
            base_op = mb.method(base, op)
            mb.method(base, "toString", overrides=[f"{OBJECT}#toString"])
            inner_t = mb.type(f"gen.{'Comp' if many else 'Deco'}{k}", supers=[base])
            leaf_t = mb.type(f"gen.Leaf{k}", supers=[base])
            inner_op = mb.method(inner_t, op, overrides=[base_op])
            leaf_op = mb.method(leaf_t, op, overrides=[base_op])
            hooks = (base_op, inner_op, leaf_op)
            callee, ref_t = base_op, base
            size = mb.field(base, f"size{k}", "int")
            helper_field = mb.field(leaf_t, f"helper{k}", helper_t)
            leaf_helper_sites = [leaf_op]
        else:
            base = inner_t = mb.type(f"gen.Node{k}")
            leaf_t = mb.type(f"gen.NodeSub{k}", supers=[inner_t])
            inner_op = mb.method(inner_t, op)
            leaf_op = mb.method(leaf_t, op, overrides=[inner_op])
            hooks = (inner_op, leaf_op)
            callee, ref_t = inner_op, inner_t
            size = mb.field(inner_t, f"size{k}", "int")
            helper_field = mb.field(inner_t, f"helper{k}", helper_t)
            leaf_helper_sites = [inner_op, leaf_op]
        inner_ctor = mb.method(inner_t, "<init>", ctor=True)
        leaf_ctor = mb.method(leaf_t, "<init>", ctor=True)
        link = mb.field(inner_t, f"{'children' if many else 'next'}{k}", ref_t, coll=many)
        self.visit = rng.random() < spec.self_call_prob
        if self.visit:
            visit = mb.method(inner_t, f"visit{k}")
            mb.site(inner_op, visit, THIS_OR_SUPER)
            mb.site(visit, callee)
            template = visit
        else:
            visit = None
            mb.site(inner_op, callee)
            template = inner_op
        for m in leaf_helper_sites:
            mb.site(m, h_op)
        client_t = mb.type(f"gen.Client{k}")
        start = mb.method(client_t, f"start{k}")
        client_ctor = mb.method(client_t, "<init>", ctor=True)
        root_field = mb.field(client_t, f"root{k}", ref_t)
        mb.site(start, callee)

        cat_name = "RecursiveConnection" if cat == "RCon" else "RecursiveUnification"
        mul = "N" if many else "One"
        rec = _PatternDecl(template, tuple(sorted(hooks)), cat_name, mul, f"{'1N' if many else '11'}-{cat}")
        cli = _PatternDecl(start, tuple(sorted(hooks)), "Connection", "One", "11-Con")
        self.patterns = [rec, cli]
        self.op, self.visit_id, self.start, self.size, self.h_op, self.h_state = op, visit, start, size, h_op, h_state

        depth = rng.randint(*spec.depth)

        def make(level: int, internal: bool) -> _Node:
            if internal:
                node = _Node(self.new(inner_t, "n", inner_ctor), inner_op)
                n_kids = rng.randint(*spec.fanout) if many else 1
                for i in range(n_kids):
                    deeper = level + 1 < depth and (i == 0 or (many and rng.random() < 0.5))
                    child = make(level + 1, deeper)
                    node.children.append(child)
                    self.wiring.append(("W", node.obj, link, child.obj))
                return node
            if cat == "RUni" and rng.random() < 0.5:
                node = _Node(self.new(inner_t, "n", inner_ctor), inner_op)
            else:
                node = _Node(self.new(leaf_t, "l", leaf_ctor), leaf_op)
            if rng.random() < spec.delegate_prob:
                node.helper = self.new(helper_t, "h", h_ctor)
                self.wiring.append(("W", node.obj, helper_field, node.helper))
            return node

        self.root = make(0, True)
        self.client = self.new(client_t, "c", client_ctor)
        self.wiring.append(("W", self.client, root_field, self.root.obj))

        nodes, helpers = set(), set()
        stack = [self.root]
        while stack:
            nd = stack.pop()
            nodes.add(nd.obj)
            if nd.helper:
                helpers.add(nd.helper)
            stack.extend(nd.children)
        types = dict(self.objects)
        self.oracle[rec.key()] = (set(nodes), nodes | helpers)
        self.oracle[cli.key()] = ({self.root.obj}, nodes | helpers)
        self.concept_types = {types[o] for o in nodes | helpers}

    def activate(self, rng: random.Random) -> list[tuple]:
        ev: list[tuple] = [("E", self.start, self.client, False), ("R", self.root.obj, self.size)]
        self._visit(self.root, ev, rng)
        ev.append(("X", self.start, self.client))
        return ev

    def _visit(self, nd: _Node, ev: list[tuple], rng: random.Random) -> None:
        ev.append(("E", nd.method, nd.obj, False))
        if nd.children:
            if self.visit_id:
                ev.append(("E", self.visit_id, nd.obj, False))
            for c in nd.children:
                ev.append(("R", c.obj, self.size))
                if rng.random() < 0.3:
                    ev.append(("W", c.obj, self.size, "-"))
                self._visit(c, ev, rng)
            if self.visit_id:
                ev.append(("X", self.visit_id, nd.obj))
        if nd.helper:
            ev.append(("R", nd.helper, self.h_state))
            ev.append(("E", self.h_op, nd.helper, False))
            ev.append(("X", self.h_op, nd.helper))
        ev.append(("X", nd.method, nd.obj))


class _Hub(_Instance):
    """Connection-pattern instance: a subject notifying listeners (or one state object)."""

    def __init__(self, k: int, mb: _ModelBuilder, rng: random.Random, spec: ScenarioSpec, many: bool):
        super().__init__(k)
        upd = f"update{k}"
        listener = mb.type(f"gen.Listener{k}", kind="interface", supers=[])
        l_upd = mb.method(listener, upd)
        views = [mb.type(f"gen.ViewA{k}", supers=[OBJECT, listener]), mb.type(f"gen.ViewB{k}", supers=[OBJECT, listener])]
        v_upd = {v: mb.method(v, upd, overrides=[l_upd]) for v in views}
        v_ctor = {v: mb.method(v, "<init>", ctor=True) for v in views}
        v_helper = {v: mb.field(v, f"helper{k}", f"gen.Helper{k}") for v in views}
        helper_t = mb.type(f"gen.Helper{k}")
        h_upd = mb.method(helper_t, upd)
        h_ctor = mb.method(helper_t, "<init>", ctor=True)
        self.h_state = mb.field(helper_t, f"state{k}", "int")
        for v in views:
            mb.site(v_upd[v], h_upd)
        subject = mb.type(f"gen.Subject{k}")
        notify = mb.method(subject, f"notify{k}")
        s_ctor = mb.method(subject, "<init>", ctor=True)
        link = mb.field(subject, f"{'listeners' if many else 'state'}{k}", listener, coll=many)
        self.size = mb.field(subject, f"size{k}", "int")
        self.fire = rng.random() < spec.self_call_prob
        if self.fire:
            fire = mb.method(subject, f"fire{k}")
            mb.site(notify, fire, THIS_OR_SUPER)
            mb.site(fire, l_upd)
            template = fire
        else:
            fire = None
            mb.site(notify, l_upd)
            template = notify
        client_t = mb.type(f"gen.Client{k}")
        start = mb.method(client_t, f"start{k}")
        c_ctor = mb.method(client_t, "<init>", ctor=True)
        c_field = mb.field(client_t, f"subject{k}", subject)
        mb.site(start, notify)

        hooks = tuple(sorted([l_upd, *v_upd.values()]))
        self.decl = _PatternDecl(template, hooks, "Connection", "N" if many else "One", f"{'1N' if many else '11'}-Con")
        self.patterns = [self.decl]
        self.many = many
        self.link = link
        self.notify, self.fire_id, self.start = notify, fire, start
        self.h_upd = h_upd

        self.subject = self.new(subject, "s", s_ctor)
        self.listeners: list[tuple[str, str, str | None]] = []  # (obj, update method, helper)
        for _ in range(rng.randint(*spec.fanout)):
            v = rng.choice(views)
            obj = self.new(v, "v", v_ctor[v])
            helper = None
            if rng.random() < spec.delegate_prob:
                helper = self.new(helper_t, "h", h_ctor)
                self.wiring.append(("W", obj, v_helper[v], helper))
            self.listeners.append((obj, v_upd[v], helper))
            # a single-state subject still sees every candidate once during setup
            self.wiring.append(("W", self.subject, link, obj))
        self.client = self.new(client_t, "c", c_ctor)
        self.wiring.append(("W", self.client, c_field, self.subject))
        self.mp: set[str] = set()
        self.mpd: set[str] = set()
        self.oracle[self.decl.key()] = (self.mp, self.mpd)
        self._types = dict(self.objects)

    def activate(self, rng: random.Random) -> list[tuple]:
        ev: list[tuple] = [("E", self.start, self.client, False)]
        if self.many:
            chosen = [l for l in self.listeners if rng.random() < 0.6]
        else:
            chosen = [rng.choice(self.listeners)]
            ev.append(("W", self.subject, self.link, chosen[0][0]))
        ev.append(("R", self.subject, self.size))
        ev.append(("E", self.notify, self.subject, False))
        if self.fire_id:
            ev.append(("E", self.fire_id, self.subject, False))
        for obj, upd, helper in chosen:
            ev.append(("R", obj, self.size))
            ev.append(("E", upd, obj, False))
            if helper:
                ev.append(("W", helper, self.h_state, "-"))
                ev.append(("E", self.h_upd, helper, False))
                ev.append(("X", self.h_upd, helper))
            ev.append(("X", upd, obj))
            self.mp.add(obj)
            self.mpd.add(obj)
            if helper:
                self.mpd.add(helper)
        if self.fire_id:
            ev.append(("X", self.fire_id, self.subject))
        ev.append(("X", self.notify, self.subject))
        ev.append(("X", self.start, self.client))
        self.concept_types = {self._types[o] for o in self.mpd}
        return ev


class _Uni(_Instance):
    """Unification instance: a template method calling an overridable hook on ``this``."""

    def __init__(self, k: int, mb: _ModelBuilder, rng: random.Random, spec: ScenarioSpec):
        super().__init__(k)
        tmpl = mb.type(f"gen.Tmpl{k}")
        sub = mb.type(f"gen.TmplSub{k}", supers=[tmpl])
        t = mb.method(tmpl, f"t{k}")
        h = mb.method(tmpl, f"h{k}")
        sh = mb.method(sub, f"h{k}", overrides=[h])
        sub_ctor = mb.method(sub, "<init>", ctor=True)
        self.size = mb.field(tmpl, f"size{k}", "int")
        mb.site(t, h, THIS_OR_SUPER)
        client_t = mb.type(f"gen.Client{k}")
        start = mb.method(client_t, f"start{k}")
        c_ctor = mb.method(client_t, "<init>", ctor=True)
        c_field = mb.field(client_t, f"target{k}", tmpl)
        mb.site(start, t)
        self.patterns = [_PatternDecl(t, tuple(sorted([h, sh])), "Unification", "One", "Uni")]
        self.t, self.sh, self.start = t, sh, start
        self.obj = self.new(sub, "u", sub_ctor)
        self.client = self.new(client_t, "c", c_ctor)
        self.wiring.append(("W", self.client, c_field, self.obj))
        self.concept_types = {sub}

    def activate(self, rng: random.Random) -> list[tuple]:
        return [
            ("E", self.start, self.client, False),
            ("R", self.obj, self.size),
            ("E", self.t, self.obj, False),
            ("E", self.sh, self.obj, False),
            ("X", self.sh, self.obj),
            ("X", self.t, self.obj),
            ("X", self.start, self.client),
        ]


# ---------------------------------------------------------------------------


class Scenario:
    """A generated program.  ``iter_lines`` streams the trace; the oracle is
    complete once the stream is exhausted."""

    def __init__(self, spec: ScenarioSpec):
        self.spec = spec
        rng = random.Random(spec.seed)
        mb = _ModelBuilder()
        mb.type(OBJECT, supers=[], root=True)
        mb.method(OBJECT, "toString")
        mb.type(DRIVER)
        self.run = mb.method(DRIVER, "run")
        self.driver_ctor = mb.method(DRIVER, "<init>", ctor=True)
        self.registry = mb.field(DRIVER, "INSTANCES", DRIVER, coll=True, static=True)
        self.clients_field = mb.field(DRIVER, "clients", OBJECT, coll=True)
        mb.type(TEMP)
        self.compute = mb.method(TEMP, "compute")
        self.temp_ctor = mb.method(TEMP, "<init>", ctor=True)
        self.temp_val = mb.field(TEMP, "val", "int")
        mb.site(self.run, self.compute)

        self.instances: list[_Instance] = []
        k = 0
        for ptype in ALL_PATTERN_TYPES:
            for _ in range(spec.pattern_mix.get(ptype, 0)):
                if ptype == "Uni":
                    inst: _Instance = _Uni(k, mb, rng, spec)
                elif ptype.endswith("-Con"):
                    inst = _Hub(k, mb, rng, spec, many=ptype.startswith("1N"))
                else:
                    inst = _Tree(k, mb, rng, spec, ptype[3:], many=ptype.startswith("1N"))
                mb.site(self.run, inst.start)
                self.instances.append(inst)
                k += 1
        self.model = mb.build()
        self._model_doc = mb.doc()
        self.by_thread: list[list[_Instance]] = [[] for _ in range(spec.threads)]
        for i, inst in enumerate(self.instances):
            self.by_thread[i % spec.threads].append(inst)
        self.temporaries: list[str] = []
        self.event_count = 0
        self._done = False

    # -- declared facts -----------------------------------------------------

    def pattern_counts(self) -> dict[str, int]:
        counts = {name: 0 for name in ALL_PATTERN_TYPES}
        for inst in self.instances:
            for p in inst.patterns:
                counts[p.abbrev] += 1
        return counts

    def oracle(self) -> dict[str, list[dict]]:
        if not self._done:
            raise RuntimeError("oracle is only complete after the trace has been streamed")
        out: dict[str, list[dict]] = {"mp": [], "mpd": []}
        for inst in self.instances:
            decls = {p.key(): p for p in inst.patterns}
            for key, (mp, mpd) in inst.oracle.items():
                p = decls[key]
                for mode, members in (("mp", mp), ("mpd", mpd)):
                    if members:
                        out[mode].append(
                            {"template_method": p.template_method, "hooks": list(p.hooks), "category": p.category,
                             "multiplicity": p.multiplicity, "members": sorted(members)}
                        )
        for mode in out:
            out[mode].sort(key=lambda r: (r["template_method"], r["members"]))
        return out

    def ground_truth(self) -> dict:
        concepts = []
        for inst in self.instances:
            if inst.concept_types:
                concepts.append({"concept_name": f"concept{inst.k}", "types": sorted(inst.concept_types)})
        return {"concepts": concepts}

    # -- trace stream -------------------------------------------------------

    def _thread_blocks(self, t: int) -> Iterator[list[tuple]]:
        spec = self.spec
        rng = random.Random(spec.seed * 7919 + t + 1)
        drv = f"driver{t}"
        yield [("E", self.driver_ctor, drv, True), ("X", self.driver_ctor, drv)]
        yield [("W", "STATIC", self.registry, drv)]
        yield [("E", self.run, drv, False)]
        mine = self.by_thread[t]
        for inst in mine:
            for ev in inst.setup_events():
                yield [ev]
            yield [("W", drv, self.clients_field, inst.client)]
        if spec.target_events is None:
            plan = [inst for inst in mine for _ in range(rng.randint(*spec.activations))]
            rng.shuffle(plan)
            todo: Iterator[_Instance] = iter(plan)
        else:
            todo = self._endless(mine, rng, spec.target_events // spec.threads)
        n_temp = 0
        for inst in todo:
            for ev in inst.activate(rng):
                yield [ev]
            if rng.random() < spec.temp_rate:
                tmp = f"tmp{t}_{n_temp}"
                n_temp += 1
                self.temporaries.append(tmp)
                yield [
                    ("O", tmp, TEMP),
                    ("E", self.temp_ctor, tmp, True),
                    ("X", self.temp_ctor, tmp),
                    ("W", tmp, self.temp_val, "-"),
                    ("R", tmp, self.temp_val),
                    ("E", self.compute, tmp, False),
                    ("X", self.compute, tmp),
                ]
        yield [("X", self.run, drv)]

    def _endless(self, mine: list[_Instance], rng: random.Random, share: int) -> Iterator[_Instance]:
        first = list(mine)
        rng.shuffle(first)
        yield from first
        while mine and self._emitted_share < share:
            yield rng.choice(mine)

    def iter_lines(self) -> Iterator[str]:
        spec = self.spec
        yield f"O driver{0} {DRIVER}\n"
        for t in range(1, spec.threads):
            yield f"O driver{t} {DRIVER}\n"
        for inst in self.instances:
            for oid, tname in inst.objects:
                yield f"O {oid} {tname}\n"
        rng = random.Random(spec.seed * 104729 + 17)
        streams = {t: self._thread_blocks(t) for t in range(spec.threads)}
        counts = {t: 0 for t in streams}
        seq = 0
        while streams:
            for t in list(streams):
                self._emitted_share = counts[t]
                take = rng.randint(1, spec.max_chunk)
                gen = streams[t]
                for _ in range(take):
                    block = next(gen, None)
                    if block is None:
                        del streams[t]
                        break
                    for ev in block:
                        kind = ev[0]
                        if kind == "O":
                            yield f"O {ev[1]} {ev[2]}\n"
                            continue
                        seq += 1
                        counts[t] += 1
                        if kind == "E":
                            yield f"E {seq} t{t} {ev[1]} {ev[2]}{' C' if ev[3] else ''}\n"
                        elif kind == "X":
                            yield f"X {seq} t{t} {ev[1]} {ev[2]}\n"
                        elif kind == "W":
                            yield f"W {seq} t{t} {ev[1]} {ev[2]} {ev[3]}\n"
                        else:
                            yield f"R {seq} t{t} {ev[1]} {ev[2]}\n"
        self.event_count = seq
        self._done = True

    _emitted_share = 0

    # -- files ----------------------------------------------------------------

    def model_json(self) -> str:
        return json.dumps(self._model_doc, indent=1) + "\n"

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "model": out / "model.json",
            "trace": out / "trace.txt",
            "oracle": out / "oracle.json",
            "truth": out / "truth.json",
        }
        paths["model"].write_text(self.model_json(), encoding="utf-8")
        with open(paths["trace"], "w", encoding="utf-8") as fh:
            buf = []
            for line in self.iter_lines():
                buf.append(line)
                if len(buf) >= 65536:
                    fh.write("".join(buf))
                    buf.clear()
            fh.write("".join(buf))
        oracle = self.oracle()
        oracle["pattern_counts"] = self.pattern_counts()
        oracle["temporaries"] = sorted(self.temporaries)
        oracle["spec"] = self.spec.to_dict()
        paths["oracle"].write_text(json.dumps(oracle, indent=1) + "\n", encoding="utf-8")
        paths["truth"].write_text(json.dumps(self.ground_truth(), indent=1) + "\n", encoding="utf-8")
        return paths


def generate(spec: ScenarioSpec, out_dir: str | Path | None = None) -> Scenario:
    """Build the scenario; with ``out_dir`` also write the four files."""
    sc = Scenario(spec)
    if out_dir is not None:
        sc.write(out_dir)
    return sc
