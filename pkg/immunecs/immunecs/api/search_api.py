# -*- coding: utf-8 -*-
"""
Search API
Queues immune search runs and exposes their results and the committee vote
"""

from __future__ import unicode_literals
import json
import frappe
from frappe import _

from immunecs.immunecs.engine.committee import Committee, soft_vote
from immunecs.immunecs.engine.exceptions import ImmuneError
from immunecs.immunecs.engine.search import SEARCH_PRESETS
from immunecs.immunecs.engine.space import PRESETS, load_space


def _parse_json(value, label):
    if value is None or not isinstance(value, str):
        return value
    try:
        return json.loads(value)
    except ValueError:
        frappe.throw(_("{0} is not valid JSON").format(label))


@frappe.whitelist()
def start_search_run(run_title, search_space="fmnist-seq", evaluator="surrogate", preset=None,
                     seed=0, config=None):
    """
    Queue an immune search run for the scheduler

    Args:
        run_title: Human-readable title
        search_space: Space preset name or path of a space JSON file
        evaluator: "surrogate" or "neural"
        preset: Search preset ("fmnist" or "cifar"), optional
        seed: Run seed
        config: Run configuration as a dict or JSON string, optional

    Returns:
        dict: {"success": True, "run": run name, "status": "Queued"}
    """
    config = _parse_json(config, "config")
    if config is not None and not isinstance(config, dict):
        frappe.throw(_("config must be a JSON object"))

    run = frappe.get_doc({
        "doctype": "Immune Search Run",
        "naming_series": "RUN-.YYYY.-.MM.-.#####",
        "run_title": run_title,
        "search_space": search_space,
        "evaluator": evaluator,
        "preset": preset,
        "seed": int(seed or 0),
        "config_json": json.dumps(config) if config else None,
    })
    run.insert()

    return {"success": True, "run": run.name, "status": run.status}


@frappe.whitelist()
def get_run_summary(run_name):
    """
    Results of a search run

    Args:
        run_name: Immune Search Run name

    Returns:
        dict: run status and metrics, the final population ordered by rank and
        the per-generation trace
    """
    run = frappe.get_doc("Immune Search Run", run_name)
    run.check_permission("read")

    candidates = frappe.get_all("Immune Candidate",
                                filters={"search_run": run_name},
                                fields=["rank", "encoding", "affinity", "depth", "lineage", "birth_generation"],
                                order_by="rank asc")
    trace = frappe.get_all("Immune Generation Log",
                           filters={"search_run": run_name, "event_type": "generation"},
                           fields=["generation", "mean_affinity", "best_affinity", "evaluations",
                                   "distinct_encodings"],
                           order_by="generation asc")
    augmentations = frappe.get_all("Immune Generation Log",
                                   filters={"search_run": run_name, "event_type": "augmentation"},
                                   pluck="generation", order_by="generation asc")

    return {
        "run": run.name,
        "status": run.status,
        "final_mean_affinity": run.final_mean_affinity,
        "best_affinity": run.best_affinity,
        "evaluations": run.evaluations,
        "generations": run.generations,
        "stop_reason": run.stop_reason,
        "candidates": candidates,
        "trace": trace,
        "augmentation_marks": augmentations,
    }


@frappe.whitelist()
def get_search_space_presets():
    """
    Built-in search spaces and search presets for UI

    Returns:
        dict: {"spaces": {name: space document}, "search_presets": {name: settings}}
    """
    return {
        "spaces": {name: load_space(name).to_dict() for name in PRESETS},
        "search_presets": SEARCH_PRESETS,
    }


@frappe.whitelist()
def committee_vote(probabilities, weights=None):
    """
    Weighted soft majority vote over member class probabilities

    Args:
        probabilities: List (or JSON string) of per-member probability vectors
        weights: Optional list of positive member weights, equal weights when omitted

    Returns:
        dict: {"class_index": int}
    """
    probabilities = _parse_json(probabilities, "probabilities")
    weights = _parse_json(weights, "weights")
    if not probabilities:
        frappe.throw(_("At least one probability vector is required"))

    weights = weights or [1.0] * len(probabilities)
    try:
        committee = Committee(members=tuple(range(len(probabilities))), weights=tuple(float(w) for w in weights))
        return {"class_index": soft_vote(committee, probabilities)}
    except ImmuneError as e:
        frappe.throw(str(e))
