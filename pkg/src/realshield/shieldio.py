"""Shield files: JSON with the embedded spec and a compressed transition table."""
import json

import numpy as np

from .automata import guard_letters, letters_to_guard
from .errors import ShieldSpecMismatch
from .game import MealyShield
from .spec import abstract, parse_spec, spec_hash, to_document

FORMAT = "realshield-shield/1"


def _cube_doc(c):
    return {v: x for v, x in c}


def _rows(shield):
    order = shield.inputs + shield.outputs
    rank = {v: i for i, v in enumerate(order)}
    rows = []
    for s in range(shield.n):
        nxt, out = shield.next[s], shield.out[s]
        keys = {}
        for a in np.flatnonzero(nxt >= 0):
            keys.setdefault((int(nxt[a]), int(out[a])), []).append(int(a))
        for (t, p), letters in keys.items():
            mask = np.zeros(len(nxt), dtype=bool)
            mask[letters] = True
            for c in letters_to_guard(mask, order):
                rows.append((s, sorted((rank[v], x) for v, x in c), c, t, p))
    rows.sort(key=lambda r: (r[0], r[1]))
    return [{"state": s, "input": _cube_doc(c), "next": t,
             "output": {v: bool(p >> i & 1) for i, v in enumerate(shield.primed)}}
            for s, _, c, t, p in rows]


def export_shield(shield, spec, report=None):
    """JSON document for a synthesized shield; ``spec`` is the parsed SpecFile."""
    return {
        "format": FORMAT,
        "spec_hash": spec_hash(spec),
        "spec": to_document(spec),
        "skip_rf": shield.skip_rf,
        "inputs": list(shield.inputs),
        "outputs": list(shield.outputs),
        "primed": list(shield.primed),
        "init": shield.init,
        "states": [{"id": i, "name": n, "components": list(c)}
                   for i, (n, c) in enumerate(zip(shield.names, shield.components))],
        "rows": _rows(shield),
        "report": report or {},
    }


def save_shield(path, shield, spec, report=None):
    with open(path, "w") as f:
        json.dump(export_shield(shield, spec, report), f, indent=1)


def shield_from_document(doc):
    """Return (MealyShield, SpecFile) rebuilt from a shield document."""
    if doc.get("format") != FORMAT:
        raise ShieldSpecMismatch(f"unsupported shield format {doc.get('format')!r}")
    spec = parse_spec(doc["spec"])
    if spec_hash(spec) != doc["spec_hash"]:
        raise ShieldSpecMismatch("embedded spec does not match its recorded hash")
    inputs, outputs, primed = tuple(doc["inputs"]), tuple(doc["outputs"]), tuple(doc["primed"])
    order = inputs + outputs
    n = len(doc["states"])
    nA = 1 << len(order)
    nxt = np.full((n, nA), -1, dtype=np.int64)
    # don't-care letters default to passing O through
    out = np.tile(np.arange(nA, dtype=np.int64) >> len(inputs), (n, 1))
    for row in doc["rows"]:
        cube = tuple(sorted((v, bool(x)) for v, x in row["input"].items()))
        hit = guard_letters((cube,), order)
        p = sum(1 << i for i, v in enumerate(primed) if row["output"][v])
        nxt[row["state"], hit] = row["next"]
        out[row["state"], hit] = p
    shield = MealyShield([s["name"] for s in doc["states"]],
                         [tuple(s["components"]) for s in doc["states"]],
                         nxt, out, inputs, outputs, primed, None, doc.get("skip_rf", False),
                         doc.get("init", 0))
    return shield, spec


def load_shield(path, spec=None):
    """Load a shield file; when ``spec`` is given its hash must match the embedded one."""
    with open(path) as f:
        doc = json.load(f)
    shield, embedded = shield_from_document(doc)
    if spec is not None and spec_hash(spec) != doc["spec_hash"]:
        raise ShieldSpecMismatch(f"shield was synthesized from a different spec ({path})")
    return shield, embedded


def load_abstract(path):
    shield, spec = load_shield(path)
    return shield, abstract(spec)
