"""
Command handlers: each runs one experiment step from an ExperimentConfig and writes
its artifacts plus a manifest into the output directory.

Aggregate files carry no timestamps, so reruns of one config give identical
CSV/JSON/SVG bytes; only manifest.json records timing.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import resource
import time
from pathlib import Path

import numpy as np

from cli.models import ExperimentConfig, RunManifest
from core import __version__
from core.boundary import halfplane_cluster_count, limit_direction_density, one_point_end_statistic
from core.errors import EstimatorDegenerate, MissingEstimates
from core.graph import PatchGraph
from core.percolation import clusters, default_tau, estimate_pc, estimate_pu, sample, sweep
from core.render import render_scene
from core.serialization import dumps_graph, load_graph
from core.tiling import Halfplane, dual_graph, generate_tiling

logger = logging.getLogger(__name__)

SWEEP_HEADER = ("p", "seed", "largest", "second", "giants", "root_to_boundary", "pairs_connected", "unique_giant")
CHAIN_HEADER = ("p", "seed", "cluster", "chain", "radius", "arc_count", "angular_diameter")


class RunRecorder:
    """Writes artifacts into one directory and collects them for the manifest."""

    def __init__(self, command: str, config: ExperimentConfig, out_dir: Path | None = None):
        self.command = command
        self.config = config
        self.out_dir = Path(config.out if out_dir is None else out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.files: dict[str, str] = {}
        self._start = time.perf_counter()

    def write_text(self, name: str, text: str) -> Path:
        path = self.out_dir / name
        data = text.encode("utf-8")
        path.write_bytes(data)
        self.files[name] = hashlib.sha256(data).hexdigest()
        logger.info("wrote %s", path)
        return path

    def write_json(self, name: str, obj) -> Path:
        return self.write_text(name, json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def write_csv(self, name: str, header, rows) -> Path:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return self.write_text(name, buffer.getvalue())

    def finish(self) -> RunManifest:
        manifest = RunManifest(
            command=self.command,
            version=__version__,
            config=self.config.echo(),
            files=dict(sorted(self.files.items())),
            wall_clock_seconds=round(time.perf_counter() - self._start, 3),
            peak_rss_kb=int(resource.getrusage(resource.RUSAGE_SELF).ru_maxrss),
        )
        (self.out_dir / "manifest.json").write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
        return manifest


def _patch(config: ExperimentConfig, radius: int) -> PatchGraph:
    g = generate_tiling(config.tiling_symbol(), radius)
    if config.dual:
        return dual_graph(g).graph
    return g


def _pkey(p: float) -> str:
    return repr(float(p))


# ── tiling gen ─────────────────────────────────────────────────────────

def cmd_tiling_gen(config: ExperimentConfig) -> dict:
    """Generate the largest configured patch; write graph.json, stats.json (and dual_graph.json with dual)."""
    symbol = config.tiling_symbol()
    radius = max(config.radii)
    recorder = RunRecorder("tiling gen", config)
    g = generate_tiling(symbol, radius)
    stats = {
        "symbol": [symbol.p, symbol.q],
        "radius": radius,
        "n_vertices": g.n_vertices,
        "n_edges": g.n_edges,
        "n_faces": g.n_faces,
        "layer_counts": [int(c) for c in g.layer_counts],
    }
    recorder.write_text("graph.json", dumps_graph(g))
    if config.dual:
        d = dual_graph(g)
        recorder.write_text("dual_graph.json", dumps_graph(d.graph, kind="dual"))
        stats["dual"] = {"n_vertices": d.graph.n_vertices, "n_edges": d.graph.n_edges, "radius": d.graph.radius}
    recorder.write_json("stats.json", stats)
    recorder.finish()
    return stats


# ── sweep ──────────────────────────────────────────────────────────────

def _middle_phase(results, p_mid: float) -> dict:
    return {
        "p": p_mid,
        "mean_giants": {str(r.radius): float(np.interp(p_mid, r.p_grid, r.mean("giants"))) for r in results},
    }


def cmd_sweep(config: ExperimentConfig) -> dict:
    """
    Coupled sweeps at every radius; one sweep_R<r>.csv per radius and estimates.json
    with both threshold estimates. Estimator failures are recorded, not raised.
    """
    recorder = RunRecorder("sweep", config)
    seeds = config.seed_list()
    grid = config.grid.values()
    results = []
    graphs = {}
    for radius in config.radii:
        g = _patch(config, radius)
        result = sweep(g, seeds, grid, tau=config.tau, workers=config.workers)
        results.append(result)
        graphs[str(radius)] = {"graph": g.describe(), "tau": result.tau, "n_outer": result.n_outer}
        recorder.write_csv(f"sweep_R{radius}.csv", SWEEP_HEADER, result.rows())

    estimates: dict = {
        "version": __version__,
        "config": config.echo(),
        "graphs": graphs,
        "p_c": None,
        "p_u": None,
        "errors": [],
    }
    try:
        estimates["p_c"] = estimate_pc(results, method=config.pc_method).to_dict()
    except EstimatorDegenerate as exc:
        logger.warning("p_c estimate failed: %s", exc)
        estimates["errors"].append({"estimate": "p_c", "code": exc.code, "message": exc.args[0]})
    try:
        estimates["p_u"] = estimate_pu(results).to_dict()
    except EstimatorDegenerate as exc:
        logger.warning("p_u estimate failed: %s", exc)
        estimates["errors"].append({"estimate": "p_u", "code": exc.code, "message": exc.args[0]})
    if estimates["p_c"] and estimates["p_u"]:
        p_mid = (estimates["p_c"]["value"] + estimates["p_u"]["value"]) / 2.0
        estimates["middle_phase"] = _middle_phase(results, p_mid)
    recorder.write_json("estimates.json", estimates)
    recorder.finish()
    return estimates


# ── boundary ───────────────────────────────────────────────────────────

def middle_phase_p(estimates_path: Path) -> float:
    """Midpoint of the p_c and p_u estimates recorded by a previous sweep."""
    if not estimates_path.is_file():
        raise MissingEstimates(f"no sweep estimates at {estimates_path}; run sweep first or pass --p")
    data = json.loads(estimates_path.read_text(encoding="utf-8"))
    p_c, p_u = data.get("p_c"), data.get("p_u")
    if not p_c or not p_u:
        raise MissingEstimates(f"{estimates_path} holds no usable p_c/p_u estimates")
    return (float(p_c["value"]) + float(p_u["value"])) / 2.0


def _resolve_p_values(config: ExperimentConfig, out_dir: Path) -> list[float]:
    if config.p_values == "auto":
        return [middle_phase_p(out_dir / "estimates.json")]
    return [float(p) for p in config.p_values]


def cmd_boundary(config: ExperimentConfig) -> dict:
    """
    End chains at the largest radius plus limit-direction gaps and halfplane counts at
    every radius, for each requested p. Writes chains.csv and boundary.json.
    """
    out_dir = Path(config.out)
    p_values = _resolve_p_values(config, out_dir)
    recorder = RunRecorder("boundary", config)
    seeds = config.seed_list()
    halfplane = Halfplane(*config.halfplane)
    deepest = max(config.radii)

    gaps: dict[str, dict[str, list[float]]] = {_pkey(p): {} for p in p_values}
    counts: dict[str, dict[str, list[int]]] = {_pkey(p): {} for p in p_values}
    statistic = None
    chain_radii: list[int] = []
    tau = config.tau
    for radius in config.radii:
        g = _patch(config, radius)

        def decompositions(g=g, radius=radius):
            for p in p_values:
                gaps[_pkey(p)][str(radius)] = []
                counts[_pkey(p)][str(radius)] = []
                for seed in seeds:
                    dec = clusters(sample(g, p, seed))
                    gaps[_pkey(p)][str(radius)].append(limit_direction_density(dec, g, config.sigma).largest_gap)
                    counts[_pkey(p)][str(radius)].append(halfplane_cluster_count(dec, g, halfplane, config.sigma))
                    yield dec

        if radius == deepest and g.radius > 0:
            chain_radii = config.chain_radii_for(g.radius)
            tau = default_tau(len(g.outer_vertices)) if config.tau is None else config.tau
            statistic = one_point_end_statistic(decompositions(), chain_radii, tau=tau)
        else:
            for _ in decompositions():
                pass
        logger.info("boundary statistics done at radius %d", radius)

    chains = statistic.to_dict() if statistic is not None else None
    if statistic is not None:
        recorder.write_csv("chains.csv", CHAIN_HEADER, statistic.rows)
    else:
        recorder.write_csv("chains.csv", CHAIN_HEADER, [])
    aggregate = {
        "version": __version__,
        "config": config.echo(),
        "p_values": p_values,
        "radius": deepest,
        "chain_radii": chain_radii,
        "tau": tau,
        "sigma": config.sigma,
        "one_point": chains,
        "limit_directions": {
            p: {r: {"mean_gap": float(np.mean(v)), "gaps": v} for r, v in by_r.items()} for p, by_r in gaps.items()
        },
        "halfplane": {
            "endpoints": list(config.halfplane),
            "counts": {
                p: {r: {"mean": float(np.mean(v)), "counts": v} for r, v in by_r.items()} for p, by_r in counts.items()
            },
        },
    }
    recorder.write_json("boundary.json", aggregate)
    recorder.finish()
    return aggregate


# ── render ─────────────────────────────────────────────────────────────

def terminal_arcs(analysis: dict, p: float | None, seed: int | None) -> list[tuple[float, float]]:
    """Terminal arcs stored in a boundary.json, restricted to one sample when p is given."""
    one_point = analysis.get("one_point") or {}
    arcs = []
    for entry in one_point.get("terminal_arcs", []):
        if p is not None and (entry["p"] != p or entry["seed"] != seed):
            continue
        arcs.extend((float(start), float(length)) for start, length in entry["arcs"])
    return arcs


def cmd_render(config: ExperimentConfig, graph_path: Path, analysis_path: Path | None = None) -> Path:
    """Draw a graph file (optionally a sample on it and the arcs of an analysis) to render.svg."""
    recorder = RunRecorder("render", config)
    g = load_graph(graph_path)
    options = config.render
    s = sample(g, options.p, options.seed) if options.p is not None else None
    arcs: list[tuple[float, float]] = []
    if analysis_path is not None and options.arcs:
        analysis = json.loads(Path(analysis_path).read_text(encoding="utf-8"))
        arcs = terminal_arcs(analysis, options.p, options.seed if options.p is not None else None)
    drawing = render_scene(g, s, arcs, stroke_width=options.stroke_width)
    path = recorder.write_text("render.svg", drawing.as_svg())
    recorder.finish()
    return path
