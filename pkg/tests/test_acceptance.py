"""Acceptance gate: one test per shipped guarantee.

The run summary prints one ACCEPTANCE line per test here (see conftest).
Each test is self-contained and pins its own tolerances; helpers are kept
minimal so a failure reads as a broken guarantee, not a broken harness.
"""

from __future__ import annotations

import ctypes
import importlib.util
import random
import shutil
import subprocess
import time
from pathlib import Path

import pytest

from metaffi import types as t
from metaffi import xllr
from metaffi.allocator import ErrorSlot, default_allocator, read_string8
from metaffi.api import MetaFFIRuntime, make_host_callable, release_handle
from metaffi.cdt import encode_into, decode
from metaffi.cli import main
from metaffi.function_path import parse_function_path
from metaffi.idl import finalize_construction, idl_from_json, idl_to_json, IdlError
from metaffi.plugin_abi import IDL_INPUT_PATH, discover_and_load_plugin
from metaffi.types import MetaFFITypeInfo
from metaffi.xcall import (
    XCallError,
    alloc_cdts_buffer,
    cache_indices,
    free_cdts_buffer,
    invoke_xcall,
)

from generators import entries_to_text, random_idl, random_path_entries
from oracles import CacheModel, naive_split_path
from test_idl_json import EXPECTED_PATHS

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden" / "counter_metaffi_host.py"

INT64 = MetaFFITypeInfo(t.INT64)
FLOAT64 = MetaFFITypeInfo(t.FLOAT64)
STRING8 = MetaFFITypeInfo(t.STRING8)
HANDLE = MetaFFITypeInfo(t.HANDLE)
CALLABLE = MetaFFITypeInfo(t.CALLABLE)
ANY_TREE = MetaFFITypeInfo(t.ANY | t.ARRAY, dimensions=-1)

MIXED_TREE = [1, [2, 3], [[4, 5], [6, 7]]]


@pytest.fixture
def tabular():
    runtime = MetaFFIRuntime("tabular")
    runtime.load_runtime_plugin()
    yield runtime
    runtime.release_runtime_plugin()


@pytest.fixture
def corpus(tabular):
    return tabular.load_module(str(FIXTURES / "counter.tabular"))


def _engine():
    return discover_and_load_plugin("runtime", "tabular").module.engine


def _drain_tabular(baseline: int) -> None:
    while xllr.registry_snapshot().get("tabular", (0, 0))[0] > baseline:
        xllr.free_runtime_plugin("tabular")


def test_add_and_host_callback_round_trip_quickly(tabular, corpus):
    """Load a guest function, call it, then hand the guest a host callable
    and receive the result of the guest calling back. Budget: one second."""
    start = time.perf_counter()

    add = corpus.load("callable=add", [INT64, INT64], [INT64])
    assert add(1, 2) == 3

    op = tabular.make_callable(lambda a, b: a + b, [INT64, INT64], [INT64])
    call_op = corpus.load(
        "callable=call_callback_binary_op", [CALLABLE, INT64, INT64], [INT64]
    )
    assert call_op(op, 1, 2) == 3

    for caller in (add, call_op):
        caller.free()
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0, f"took {elapsed:.3f}s"


def test_deep_binding_object_lifecycle(corpus):
    """Constructor -> stamped handle -> method -> field read -> release;
    the handle table returns to its baseline and stale use is an error."""
    eng = _engine()
    baseline = eng.handle_table.size()

    ctor = corpus.load(
        "class=Counter,callable=<init>,overload_index=1", [INT64], [HANDLE]
    )
    inc = corpus.load("class=Counter,callable=inc,instance_required", [HANDLE], [])
    get_value = corpus.load(
        "class=Counter,field=value,instance_required,getter", [HANDLE], [INT64]
    )

    counter = ctor(5)
    assert counter.runtime_id == eng.RUNTIME_ID
    assert eng.handle_table.size() == baseline + 1

    inc(counter)
    inc(counter)
    assert get_value(counter) == 7

    release_handle(counter)
    assert eng.handle_table.size() == baseline
    with pytest.raises(eng.HandleError, match="stale"):
        eng.handle_table.resolve(counter)

    for caller in (ctor, inc, get_value):
        caller.free()


def test_cdts_cache_discipline(tabular, corpus):
    """10,000 small calls touch the allocator zero times; a 51-cell call
    spills to the heap; nested use unwinds to the exact starting indices."""
    add = corpus.load("callable=add", [INT64, INT64], [INT64])
    add(1, 2)  # warm the entity so the loop below is pure call traffic

    before = default_allocator.snapshot()
    for i in range(10_000):
        assert add(i, i + 1) == 2 * i + 1
    assert default_allocator.snapshot() == before

    # one cell beyond the cache line takes the heap path, and says so
    sink = make_host_callable(lambda *a: None, [t.INT64] * 51, [])
    pair = alloc_cdts_buffer(51, 0)
    assert not pair.from_cache
    for i, cell in enumerate(pair[0]):
        encode_into(cell, i, INT64)
    invoke_xcall(sink.xcall, pair)
    free_cdts_buffer(pair)
    after = default_allocator.snapshot()
    assert after[0] - before[0] == after[1] - before[1] == 1  # the heap pair

    # nested alloc/free against the replay model, index-exact at each step
    model = CacheModel()
    start_indices = cache_indices()
    assert start_indices == (model.cdt_index, model.cdts_index)
    pairs = []
    for params, rets in ((2, 1), (3, 2), (1, 1), (0, 0)):
        cached = model.alloc(params, rets)
        live = alloc_cdts_buffer(params, rets)
        assert live.from_cache == cached
        assert cache_indices() == model.indices
        pairs.append(live)
    while pairs:
        free_cdts_buffer(pairs.pop())
        model.free()
        assert cache_indices() == model.indices
    assert cache_indices() == start_indices

    add.free()


def test_mixed_dimension_array_round_trip(corpus):
    """A tree mixing scalars, vectors, and matrices crosses the boundary
    twice and comes back structurally identical."""
    echo = corpus.load("callable=echo", [ANY_TREE], [ANY_TREE])
    assert echo(MIXED_TREE) == MIXED_TREE
    echo.free()


def test_function_path_parser_agrees_with_oracle():
    """Differential against a naive splitter on 10,000 randomized paths,
    plus the documented two-entry forms and round-trip identity."""
    rng = random.Random(0xF00D)
    for _ in range(10_000):
        entries = random_path_entries(rng)
        text = entries_to_text(entries)
        fp = parse_function_path(text)
        assert fp.entries == tuple(naive_split_path(text))
        assert parse_function_path(fp.to_string()).entries == fp.entries

    fp = parse_function_path(
        "class=org.apache.logging.log4j.LogManager,callable=getLogger"
    )
    assert fp.entries == (
        ("class", "org.apache.logging.log4j.LogManager"),
        ("callable", "getLogger"),
    )
    fp = parse_function_path(
        "class=org.apache.logging.log4j.Logger,callable=error,instance_required"
    )
    assert fp.lookup("callable") == "error"
    assert fp.has_tag("instance_required")


def test_idl_round_trip_and_rejections():
    """1,000 randomized definition trees survive JSON round-trips,
    finalization is idempotent, and every curated invalid document is
    rejected with a message naming the offending path."""
    rng = random.Random(0xACCE)
    for _ in range(1_000):
        tree = random_idl(rng)
        assert idl_from_json(idl_to_json(tree)) == tree

    for _ in range(50):
        tree = random_idl(rng)
        once = finalize_construction(tree)
        assert finalize_construction(once) == once

    invalid_dir = FIXTURES / "idl_invalid"
    assert {p.stem for p in invalid_dir.glob("*.json")} == set(EXPECTED_PATHS)
    for name, path_fragment in EXPECTED_PATHS.items():
        document = (invalid_dir / f"{name}.json").read_text(encoding="utf-8")
        with pytest.raises(IdlError) as excinfo:
            idl_from_json(document)
        assert path_fragment in str(excinfo.value), name


def test_codegen_golden_and_behavioral_equivalence(tmp_path, monkeypatch, capsys):
    """The command line emits a byte-identical wrapper, the wrapper agrees
    with raw xcalls across the whole corpus, and the unimplemented guest
    direction reports cleanly."""
    shutil.copy(FIXTURES / "counter.tabular", tmp_path / "counter.tabular")
    monkeypatch.chdir(tmp_path)
    refs_before = xllr.registry_snapshot().get("tabular", (0, 0))[0]

    assert main(["-c", "--idl", "counter.tabular", "-h"]) == 0
    generated = tmp_path / "counter_metaffi_host.py"
    assert generated.read_bytes() == GOLDEN.read_bytes()

    spec = importlib.util.spec_from_file_location("counter_wrapper", generated)
    wrapper = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(wrapper)

    runtime = MetaFFIRuntime("tabular")
    runtime.load_runtime_plugin()
    try:
        corpus = runtime.load_module(str(FIXTURES / "counter.tabular"))
        raw_add = corpus.load("callable=add", [INT64, INT64], [INT64])
        raw_add_f = corpus.load(
            "callable=add,overload_index=1", [FLOAT64, FLOAT64], [FLOAT64]
        )
        raw_div = corpus.load("callable=div", [FLOAT64, FLOAT64], [FLOAT64])
        rng = random.Random(0xC0DE)
        for _ in range(50):
            a, b = rng.randint(-10**6, 10**6), rng.randint(-10**6, 10**6)
            assert wrapper.add(a, b) == raw_add(a, b)
            x, y = rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3)
            assert wrapper.add_1(x, y) == raw_add_f(x, y)
            assert wrapper.div(x, y or 1.0) == raw_div(x, y or 1.0)
        for caller in (raw_add, raw_add_f, raw_div):
            caller.free()

        assert wrapper.echo(MIXED_TREE) == MIXED_TREE
        assert wrapper.noop() is None
        with pytest.raises(XCallError, match="division by zero"):
            wrapper.div(1.0, 0.0)

        counter = wrapper.Counter.new_1(40)
        counter.inc()
        counter.inc()
        assert counter.value == 42
        counter.value = 10
        assert counter.value == 10
        counter.release()

        wrapper.set_seed(7)
        assert wrapper.get_seed() == 7
        assert wrapper.get_motto() == "measure twice"
        assert not hasattr(wrapper, "set_motto")  # readonly global

        op = make_host_callable(lambda a, b: a * b, [t.INT64, t.INT64], [t.INT64])
        assert wrapper.call_callback_binary_op(op, 6, 7) == 42
    finally:
        _drain_tabular(refs_before)

    # guest direction: honest not-implemented, no leaked error storage
    before = default_allocator.snapshot()
    code = main(["-c", "--idl", "counter.tabular", "-g"])
    captured = capsys.readouterr()
    assert code == 2
    assert "Not Implemented" in captured.err
    after = default_allocator.snapshot()
    assert after[0] - before[0] == after[1] - before[1]


def test_allocator_balance_over_integration_workload(tabular, corpus):
    """A workload touching every allocating subsystem ends with every
    allocation freed, and the global counters agree at this point too."""
    before = default_allocator.snapshot()

    echo = corpus.load("callable=echo", [ANY_TREE], [ANY_TREE])
    div = corpus.load("callable=div", [FLOAT64, FLOAT64], [FLOAT64])
    ctor = corpus.load("class=Counter,callable=<init>", [], [HANDLE])
    for _ in range(25):
        assert echo(["text", ["más", "漢字"], MIXED_TREE]) == [
            "text", ["más", "漢字"], MIXED_TREE,
        ]
        with pytest.raises(XCallError, match="division by zero"):
            div(1.0, 0.0)
        handle = ctor()
        release_handle(handle)

    plugin = discover_and_load_plugin("idl", "tabular")
    err = ErrorSlot()
    buffer = plugin.parse_idl(IDL_INPUT_PATH, str(FIXTURES / "counter.tabular"), err)
    assert err.take() is None
    idl_from_json(read_string8(buffer))
    default_allocator.free(buffer)

    for caller in (echo, div, ctor):
        caller.free()

    after = default_allocator.snapshot()
    assert after[0] - before[0] == after[1] - before[1]
    assert default_allocator.balanced()


@pytest.fixture(scope="module")
def native_lib(tmp_path_factory):
    src = FIXTURES / "native" / "fixture.c"
    out = tmp_path_factory.mktemp("acceptance_native") / "libfixture.so"
    subprocess.run(["cc", "-shared", "-fPIC", "-O2", "-o", str(out), str(src)], check=True)
    return str(out)


def test_native_plugin_matches_direct_calls(native_lib):
    """Every whitelisted signature shape agrees with an independent ctypes
    binding of the same shared library: 1,000 randomized input tuples."""
    lib = ctypes.CDLL(native_lib)
    lib.add_i64.argtypes = [ctypes.c_int64, ctypes.c_int64]
    lib.add_i64.restype = ctypes.c_int64
    lib.mul_f64.argtypes = [ctypes.c_double, ctypes.c_double]
    lib.mul_f64.restype = ctypes.c_double
    lib.str_len8.argtypes = [ctypes.c_char_p]
    lib.str_len8.restype = ctypes.c_int64
    lib.mix3.argtypes = [ctypes.c_int64, ctypes.c_double, ctypes.c_int64]
    lib.mix3.restype = ctypes.c_double

    xllr.load_runtime_plugin("native")
    try:
        shapes = {
            "add_i64": ((INT64, INT64), (INT64,)),
            "mul_f64": ((FLOAT64, FLOAT64), (FLOAT64,)),
            "str_len8": ((STRING8,), (INT64,)),
            "mix3": ((INT64, FLOAT64, INT64), (FLOAT64,)),
        }
        xcalls = {
            name: xllr.load_function(
                "native", native_lib, f"callable={name}", params=p, rets=r
            )
            for name, (p, r) in shapes.items()
        }

        def call(name, *args):
            params, rets = shapes[name]
            pair = alloc_cdts_buffer(len(params), len(rets))
            try:
                for cell, info, value in zip(pair[0], params, args):
                    encode_into(cell, value, info, default_allocator)
                invoke_xcall(xcalls[name], pair)
                return tuple(decode(cell) for cell in pair[1])
            finally:
                free_cdts_buffer(pair)

        rng = random.Random(0xD1FF)
        for _ in range(250):  # 250 tuples per shape, 1,000 total
            a, b = rng.randint(-(1 << 31), 1 << 31), rng.randint(-(1 << 31), 1 << 31)
            assert call("add_i64", a, b) == (lib.add_i64(a, b),)
            x, y = rng.uniform(-1e6, 1e6), rng.uniform(-1e6, 1e6)
            assert call("mul_f64", x, y) == (lib.mul_f64(x, y),)
            text = "".join(rng.choice("abcdefgh ä漢") for _ in range(rng.randint(0, 24)))
            assert call("str_len8", text) == (lib.str_len8(text.encode("utf-8")),)
            n, f, m = rng.randint(-1000, 1000), rng.uniform(-100, 100), rng.randint(-1000, 1000)
            assert call("mix3", n, f, m) == (lib.mix3(n, f, m),)

        for xcall in xcalls.values():
            xllr.free_xcall("native", xcall)
    finally:
        xllr.free_runtime_plugin("native")
