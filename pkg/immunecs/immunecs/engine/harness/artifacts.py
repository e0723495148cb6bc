# -*- coding: utf-8 -*-
"""
Result directories.

Everything a run writes except ``manifest.json`` is a pure function of the
seed and the configuration, so two equal runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from ..evaluator.neural.weights import WeightStore
from ..genome import ArchitectureGenome
from ..log import get_logger
from ..search import Individual

logger = get_logger(__name__)

TRACE = "trace.jsonl"
POPULATION = "population.json"
REGISTRY = "registry.txt"
SUMMARY = "summary.json"
MANIFEST = "manifest.json"
MUTATIONS = "mutations.jsonl"
WEIGHTS = "weights"


def dump_json(path, data):
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def load_json(path):
    return json.loads(Path(path).read_text())


def write_trace(path, trace):
    with Path(path).open("w") as f:
        for stats in trace:
            f.write(json.dumps(stats.to_dict(), sort_keys=True) + "\n")


def write_csv(path, header, rows):
    with Path(path).open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def summarize(result, algorithm, seed, extra=None):
    population = result.population
    summary = {
        "algorithm": algorithm,
        "seed": seed,
        "final_mean_affinity": result.final_mean_affinity,
        "best_affinity": max(i.affinity for i in population),
        "population_size": len(population),
        "evaluations": result.evaluations,
        "generations": result.generations,
        "augmentations": len(result.augmentation_marks),
        "stop_reason": result.stop_reason,
    }
    summary.update(extra or {})
    return summary


def write_run(out_dir, result, summary, manifest):
    """Write trace, population, registry, summary, manifest and any member weights"""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    write_trace(out / TRACE, result.trace)
    dump_json(out / POPULATION, [individual.to_dict() for individual in result.population])
    (out / REGISTRY).write_text("".join(f"{encoding}\n" for encoding in sorted(result.registry)))
    dump_json(out / SUMMARY, summary)
    dump_json(out / MANIFEST, manifest)

    for rank, individual in enumerate(result.population):
        if individual.weights is not None:
            individual.weights.save(out / WEIGHTS / str(rank))

    logger.info(f"Wrote {len(result.population)} individuals to {out}")


def load_population(out_dir, space, with_weights=True):
    """Rebuild the saved population, attaching weight stores when present"""
    out = Path(out_dir)
    records = load_json(out / POPULATION)

    population = []
    for rank, record in enumerate(records):
        weights = None
        weight_dir = out / WEIGHTS / str(rank)
        if with_weights and weight_dir.exists():
            weights = WeightStore.load(weight_dir)

        population.append(Individual(
            genome=ArchitectureGenome.from_dict(record["genome"], space),
            affinity=record["affinity"],
            weights=weights,
            birth_generation=record["birth_generation"],
            lineage=record["lineage"],
        ))
    return population


def run_directories(path):
    """``path`` itself when it holds a run, otherwise its ``seed-*`` subdirectories"""
    path = Path(path)
    if (path / SUMMARY).exists():
        return [path]
    return sorted(p for p in path.glob("seed-*") if (p / SUMMARY).exists())
