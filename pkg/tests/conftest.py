import pytest

from realshield import benchmark_names, engine
from realshield import abstract, benchmark, load_spec, synthesize

# verify every UNSAT core for minimality while the suite runs
engine.CHECK_CORES = True

_cache = {}


def synthesized(name):
    """Abstract spec and synthesis result for a bundled benchmark, computed once per session."""
    if name not in _cache:
        a = abstract(load_spec(benchmark(name)))
        _cache[name] = (a, synthesize(a))
    return _cache[name]


@pytest.fixture(params=benchmark_names())
def bundled(request):
    return synthesized(request.param)


@pytest.fixture
def running():
    return synthesized("running_example")


# -- acceptance summary -------------------------------------------------------

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None or call.when != "call":
        return
    n, title = mark.args
    ok = call.excinfo is None
    prev = _criteria.get(n, (title, True))
    _criteria[n] = (title, prev[1] and ok)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        title, ok = _criteria[n]
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}")
