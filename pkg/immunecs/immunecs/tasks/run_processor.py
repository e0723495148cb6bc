import json
import time
from pathlib import Path
from frappe.utils import now, cint
import frappe

from immunecs import __version__
from immunecs.immunecs.engine.config import build_evaluator
from immunecs.immunecs.engine.harness import artifacts
from immunecs.immunecs.engine.mutation import MutationJournal
from immunecs.immunecs.engine.search import search
from immunecs.immunecs.engine.space import load_space

RUNS_PER_TICK = 2


def process_search_runs():
    """Run queued searches - called by scheduler every 5 minutes"""
    try:
        runs = frappe.db.get_all("Immune Search Run",
                                 filters={"status": "Queued"},
                                 fields=["name", "attempts", "max_attempts"],
                                 order_by="creation asc",
                                 limit=50)

        runs = [r for r in runs if cint(r.attempts) < cint(r.max_attempts or 3)][:RUNS_PER_TICK]
        if not runs:
            return

        completed = 0
        failed = 0
        for run in runs:
            if _process_run(run):
                completed += 1
            else:
                failed += 1

        frappe.logger().info(f"Immune search runs processed: {completed} completed, {failed} failed")

    except Exception as e:
        frappe.log_error(f"Search run processor error: {str(e)}", "Immune Search Processor")


def run_output_dir(run_name):
    return Path(frappe.get_site_path("private", "files", "immunecs", run_name))


def _process_run(run):
    """Run one search and store its population and trace"""
    try:
        doc = frappe.get_doc("Immune Search Run", run["name"])
        cfg = doc.get_run_config()
        space = load_space(doc.search_space)
        out_dir = run_output_dir(doc.name)
        out_dir.mkdir(parents=True, exist_ok=True)

        started = time.time()
        _update_run(doc.name, {"status": "Running", "started_on": now(), "output_dir": str(out_dir)})

        evaluator = build_evaluator(doc.evaluator, space, cfg, cfg.search.seed)
        journal_path = out_dir / artifacts.MUTATIONS
        if journal_path.exists():
            journal_path.unlink()
        result = search(cfg.search, space, evaluator, journal=MutationJournal(journal_path))

        extra = {}
        if hasattr(evaluator, "landscape"):
            extra["bump_coverage"] = evaluator.landscape.coverage([i.genome for i in result.population])
        summary = artifacts.summarize(result, "immune", cfg.search.seed, extra)
        manifest = {
            "command": f"scheduler {doc.name}",
            "config": cfg.to_dict(),
            "evaluator": doc.evaluator,
            "seed": cfg.search.seed,
            "space": doc.search_space,
            "timings": {"started": started, "finished": time.time(), "seconds": time.time() - started},
            "version": __version__,
        }
        artifacts.write_run(out_dir, result, summary, manifest)

        _store_candidates(doc.name, result, out_dir)
        _store_trace(doc.name, result)

        _update_run(doc.name, {
            "status": "Completed",
            "finished_on": now(),
            "attempts": cint(run["attempts"]) + 1,
            "final_mean_affinity": summary["final_mean_affinity"],
            "best_affinity": summary["best_affinity"],
            "bump_coverage": summary.get("bump_coverage", 0),
            "evaluations": summary["evaluations"],
            "generations": summary["generations"],
            "stop_reason": summary["stop_reason"],
        })
        return True

    except Exception as e:
        frappe.db.rollback()
        return _handle_run_failure(run, str(e))


def _store_candidates(run_name, result, out_dir):
    for rank, individual in enumerate(result.population):
        weights_dir = out_dir / artifacts.WEIGHTS / str(rank)
        frappe.get_doc({
            "doctype": "Immune Candidate",
            "naming_series": "CAND-.YYYY.-.MM.-.#####",
            "search_run": run_name,
            "rank": rank,
            "affinity": individual.affinity,
            "depth": individual.depth,
            "encoding": individual.encoding,
            "lineage": individual.lineage,
            "birth_generation": individual.birth_generation,
            "genome_json": json.dumps(individual.genome.to_dict()),
            "weights_path": str(weights_dir) if weights_dir.exists() else None,
        }).insert(ignore_permissions=True)


def _store_trace(run_name, result):
    marks = set(result.augmentation_marks)
    for stats in result.trace:
        _log_event(run_name, stats, "generation")
        if stats.generation in marks:
            _log_event(run_name, stats, "augmentation", "Population augmented by one layer per copy")

    _log_event(run_name, result.trace[-1], "stop", f"Stopped: {result.stop_reason}")


def _log_event(run_name, stats, event_type, details=None):
    frappe.get_doc({
        "doctype": "Immune Generation Log",
        "naming_series": "GEN-.YYYY.-.MM.-.#####",
        "search_run": run_name,
        "generation": stats.generation,
        "event_type": event_type,
        "event_time": now(),
        "mean_affinity": stats.mean_affinity,
        "best_affinity": stats.best_affinity,
        "evaluations": stats.evaluations_so_far,
        "distinct_encodings": stats.distinct_encodings,
        "population_depths": ",".join(str(d) for d in stats.population_depths),
        "event_details": details,
    }).insert(ignore_permissions=True)


def _handle_run_failure(run, error_message):
    """Requeue the run until it runs out of attempts"""
    try:
        attempts = cint(run["attempts"]) + 1
        max_attempts = cint(run["max_attempts"] or 3)
        previous = frappe.db.get_value("Immune Search Run", run["name"], "error_log") or ""

        update = {
            "attempts": attempts,
            "error_log": f"{now()} attempt {attempts}: {error_message}\n{previous}",
        }
        if attempts >= max_attempts:
            update["status"] = "Failed"
            update["finished_on"] = now()
            frappe.log_error(f"Search run {run['name']} failed after {attempts} attempts: {error_message}",
                             "Immune Search Processor")
        else:
            update["status"] = "Queued"

        _update_run(run["name"], update)
        return False

    except Exception as e:
        frappe.log_error(f"Search run failure handling error: {str(e)}", "Immune Search Processor")
        return False


def _update_run(run_name, values):
    try:
        frappe.db.set_value("Immune Search Run", run_name, values)
        frappe.db.commit()

    except Exception as e:
        frappe.log_error(f"Search run status update error: {str(e)}", "Immune Search Processor")
