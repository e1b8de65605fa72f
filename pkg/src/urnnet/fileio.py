"""File formats: edge lists, state files, configs, and result writers.

All writers are deterministic (sorted keys, repr floats, no timestamps), so
re-running a command from the config block embedded in its own output
reproduces the file byte for byte.
"""

from __future__ import annotations

import json

import numpy as np

from .dynamics import UrnState
from .errors import InvalidParamsError
from .graph import DirectedGraph


def write_edge_list(g: DirectedGraph, path) -> None:
    """Plain text: first line "n m", then one "i j" line per edge (1-based)."""
    lines = [f"{g.n_vertices} {g.n_edges}"]
    lines += [f"{i} {j}" for i, j in g.sorted_edges()]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def read_edge_list(path) -> DirectedGraph:
    with open(path, "r", encoding="ascii") as fh:
        tokens = fh.read().split()
    if len(tokens) < 2:
        raise InvalidParamsError(f"{path}: missing 'n m' header")
    try:
        n, m = int(tokens[0]), int(tokens[1])
        flat = [int(x) for x in tokens[2:]]
    except ValueError as exc:
        raise InvalidParamsError(f"{path}: non-integer token ({exc})") from exc
    if len(flat) != 2 * m:
        raise InvalidParamsError(f"{path}: expected {m} edges, found {len(flat) // 2}")
    edges = frozenset(zip(flat[0::2], flat[1::2]))
    if len(edges) != m:
        raise InvalidParamsError(f"{path}: duplicate edges in list")
    return DirectedGraph(n_vertices=n, edges=edges)


def graph_to_json(g: DirectedGraph) -> dict:
    return {"n": g.n_vertices, "edges": [[i, j] for i, j in g.sorted_edges()]}


def graph_from_json(payload: dict) -> DirectedGraph:
    try:
        n = int(payload["n"])
        edges = frozenset((int(i), int(j)) for i, j in payload["edges"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidParamsError(f"bad graph JSON: {exc}") from exc
    return DirectedGraph(n_vertices=n, edges=edges)


def write_graph_json(g: DirectedGraph, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        json.dump(graph_to_json(g), fh, sort_keys=True)
        fh.write("\n")


def read_graph_json(path) -> DirectedGraph:
    with open(path, "r", encoding="ascii") as fh:
        return graph_from_json(json.load(fh))


def read_graph(path) -> DirectedGraph:
    """Dispatch on extension: .json uses the JSON mirror, anything else the
    edge-list text format."""
    if str(path).endswith(".json"):
        return read_graph_json(path)
    return read_edge_list(path)


def write_initial_state(state: UrnState, path) -> None:
    payload = {"white": [int(x) for x in state.white], "black": [int(x) for x in state.black]}
    with open(path, "w", encoding="ascii") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def read_initial_state(path) -> UrnState:
    with open(path, "r", encoding="ascii") as fh:
        payload = json.load(fh)
    try:
        white = np.array([int(x) for x in payload["white"]], dtype=np.int64)
        black = np.array([int(x) for x in payload["black"]], dtype=np.int64)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidParamsError(f"bad initial state JSON: {exc}") from exc
    return UrnState(white=white, black=black, time=0)


def format_config(config: dict) -> str:
    """Flat "key = value" text, keys sorted."""
    return "".join(f"{k} = {config[k]}\n" for k in sorted(config))


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InvalidParamsError(f"config line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def read_config_file(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def provenance_comments(config: dict, version: str) -> list:
    lines = [f"# version = {version}"]
    lines += [f"# {k} = {config[k]}" for k in sorted(config)]
    return lines


def config_from_output(path) -> dict:
    """Recover the embedded config from a CSV/JSON output file."""
    text = open(path, "r", encoding="utf-8").read()
    if text.lstrip().startswith("{"):
        return {k: str(v) for k, v in json.loads(text).get("config", {}).items()}
    pairs = {}
    for line in text.splitlines():
        if not line.startswith("# "):
            break
        key, _, value = line[2:].partition(" = ")
        pairs[key] = value
    pairs.pop("version", None)
    return pairs


def write_trajectory_csv(path, trajectory, config: dict, version: str) -> None:
    """Header "t,Z_1,...,Z_n" after a provenance comment block."""
    n = len(trajectory[0][1])
    lines = provenance_comments(config, version)
    lines.append("t," + ",".join(f"Z_{i}" for i in range(1, n + 1)))
    for t, z in trajectory:
        lines.append(f"{t}," + ",".join(repr(float(v)) for v in z))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def write_trajectory_jsonl(path, trajectory, config: dict, version: str) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(json.dumps({"config": config, "version": version}, sort_keys=True) + "\n")
        for t, z in trajectory:
            fh.write(json.dumps({"t": int(t), "z": [float(v) for v in z]}) + "\n")


def write_ensemble_json(path, result, config: dict, version: str) -> None:
    payload = {"config": config, "version": version, "result": result.to_dict()}
    with open(path, "w", encoding="ascii") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def write_ensemble_summary_csv(path, result, config: dict, version: str) -> None:
    """Per-checkpoint rows "t,mean_1..mean_n,var_phi"."""
    lines = provenance_comments(config, version)
    lines.append(
        "t," + ",".join(f"mean_{i}" for i in range(1, result.n + 1)) + ",var_phi"
    )
    for k, t in enumerate(result.checkpoints):
        means = ",".join(repr(float(v)) for v in result.mean_z[k])
        lines.append(f"{t},{means},{repr(float(result.var_phi[k]))}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def write_report_json(path, report: dict, config: dict, version: str) -> None:
    payload = {"config": config, "version": version, "report": report}
    with open(path, "w", encoding="ascii") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")
