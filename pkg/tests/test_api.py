from __future__ import annotations

import pytest

from metaffi import (
    HandleValue,
    MetaFFIError,
    MetaFFIRuntime,
    MetaFFITypeInfo,
    MetaFFITypes,
    make_host_callable,
)
from metaffi.api import release_handle
from metaffi.xcall import XCallError, call_callable

INT64 = MetaFFITypes.metaffi_int64_type
FLOAT64 = MetaFFITypes.metaffi_float64_type
STRING8 = MetaFFITypes.metaffi_string8_type
HANDLE = MetaFFITypes.metaffi_handle_type
CALLABLE = MetaFFITypes.metaffi_callable_type


@pytest.fixture
def runtime():
    rt = MetaFFIRuntime("tabular")
    rt.load_runtime_plugin()
    yield rt
    rt.release_runtime_plugin()


@pytest.fixture
def corpus(runtime, fixtures_dir):
    return runtime.load_module(str(fixtures_dir / "counter.tabular"))


def test_add_through_the_wrapper(corpus):
    add = corpus.load("callable=add", [INT64, INT64], [INT64])
    assert add(1, 2) == 3
    add.free()


def test_callback_listing_flow(runtime, corpus):
    """Wrap a host function, hand it to the guest, guest calls back."""
    seen = []

    def host_add(a, b):
        seen.append((a, b))
        return a + b

    op = runtime.make_callable(host_add, [INT64, INT64], [INT64])
    call_op = corpus.load(
        "callable=call_callback_binary_op", [CALLABLE, INT64, INT64], [INT64]
    )
    assert call_op(op, 1, 2) == 3
    assert seen == [(1, 2)]
    call_op.free()


def test_counter_lifecycle_through_the_wrapper(corpus):
    ctor = corpus.load("class=Counter,callable=<init>", [], [HANDLE])
    inc = corpus.load("class=Counter,callable=inc,instance_required", [HANDLE], [])
    get_value = corpus.load(
        "class=Counter,field=value,instance_required,getter", [HANDLE], [INT64]
    )
    counter = ctor()
    assert isinstance(counter, HandleValue)
    inc(counter)
    inc(counter)
    inc(counter)
    assert get_value(counter) == 3
    release_handle(counter)
    for caller in (ctor, inc, get_value):
        caller.free()


def test_wrong_arity_raises_idiomatically(corpus):
    add = corpus.load("callable=add", [INT64, INT64], [INT64])
    with pytest.raises(MetaFFIError, match="expects 2 argument"):
        add(1)
    with pytest.raises(MetaFFIError, match="expects 2 argument"):
        add(1, 2, 3)
    add.free()


def test_guest_errors_raise(corpus):
    div = corpus.load("callable=div", [FLOAT64, FLOAT64], [FLOAT64])
    with pytest.raises(XCallError, match="division by zero"):
        div(1.0, 0.0)
    assert div(1.0, 2.0) == 0.5
    div.free()


def test_no_params_no_rets_returns_none(corpus):
    noop = corpus.load("callable=noop")
    assert noop() is None
    noop.free()


def test_multiple_return_values_come_back_as_a_tuple(runtime):
    def stats(x, y):
        return x + y, x * y

    cv = make_host_callable(stats, [INT64, INT64], [INT64, INT64])
    assert call_callable(cv, (3, 4)) == (7, 12)


def test_host_callable_without_data_uses_the_bare_shape():
    hits = []
    cv = make_host_callable(lambda: hits.append(1), [], [])
    assert call_callable(cv, ()) is None
    assert hits == [1]


def test_host_callable_errors_propagate():
    def boom():
        raise RuntimeError("kaput")

    cv = make_host_callable(boom, [], [])
    with pytest.raises(XCallError, match="kaput"):
        call_callable(cv, ())


def test_host_callable_result_arity_checked():
    cv = make_host_callable(lambda: (1, 2), [], [INT64])
    # fn returns a tuple but one ret is declared: the tuple is the value,
    # which is not an int64 -> encode failure surfaces as an error
    with pytest.raises(XCallError):
        call_callable(cv, ())


def test_call_callable_checks_arity():
    cv = make_host_callable(lambda a: a, [INT64], [INT64])
    with pytest.raises(XCallError, match="expects 1"):
        call_callable(cv, (1, 2))


def test_type_info_accepted_alongside_bare_constants(corpus):
    add = corpus.load(
        "callable=add",
        [MetaFFITypeInfo(INT64), INT64],
        [MetaFFITypeInfo(INT64)],
    )
    assert add(20, 22) == 42
    add.free()


def test_echo_passes_handles_through_opaquely(corpus):
    """A handle declared any crosses unresolved and returns pointing at the
    identical guest object."""
    from metaffi.plugin_abi import discover_and_load_plugin

    eng = discover_and_load_plugin("runtime", "tabular").module.engine
    ctor = corpus.load("class=Counter,callable=<init>", [], [HANDLE])
    echo = corpus.load("callable=echo", [MetaFFITypes.metaffi_any_type],
                       [MetaFFITypes.metaffi_any_type])
    counter = ctor()
    result = echo(counter)
    assert isinstance(result, HandleValue)
    assert result.runtime_id == counter.runtime_id
    # the guest unwraps its own handle, then re-registers the object on
    # return: a fresh key, the identical object
    assert eng.handle_table.resolve(result) is eng.handle_table.resolve(counter)
    release_handle(counter)
    release_handle(result)
    for caller in (ctor, echo):
        caller.free()
