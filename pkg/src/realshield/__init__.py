"""Shield synthesis for real-valued signals: predicate abstraction, safety games and run-time correction."""
from pathlib import Path

from .game import check_realizable, synthesize
from .runtime import Runtime
from .shieldio import load_shield, save_shield
from .sim import ErrorPolicy, simulate
from .spec import abstract, load_spec, parse_spec

BENCHMARKS = Path(__file__).parent / "benchmarks"


def benchmark(name):
    """Path of a bundled benchmark spec by name (without ``.json``)."""
    path = BENCHMARKS / f"{name}.json"
    if not path.exists():
        raise FileNotFoundError(f"no bundled benchmark {name!r}")
    return path


def benchmark_names():
    return sorted(p.stem for p in BENCHMARKS.glob("*.json"))


__all__ = ["BENCHMARKS", "ErrorPolicy", "Runtime", "abstract", "benchmark", "benchmark_names",
           "check_realizable", "load_shield", "load_spec", "parse_spec", "save_shield",
           "simulate", "synthesize"]
