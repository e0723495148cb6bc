# -*- coding: utf-8 -*-
"""
Command line interface.

Installed as the ``immunecs`` console script and exposed to bench through
``commands``, so ``bench immunecs search ...`` works inside a site as well.
"""

from __future__ import unicode_literals

import functools
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import click
import numpy as np

from immunecs import __version__
from immunecs.immunecs.engine.baselines import ga_search, random_search
from immunecs.immunecs.engine.committee import build_committee, ensemble_metrics
from immunecs.immunecs.engine.config import EVALUATORS, RunConfig, build_evaluator, load_run_config
from immunecs.immunecs.engine.evaluator.neural import NeuralEvaluator, build_dataset, full_train, make_split
from immunecs.immunecs.engine.exceptions import ArgumentError, ConfigurationError, EvaluationError
from immunecs.immunecs.engine.harness import artifacts
from immunecs.immunecs.engine.harness.compare import compare_runs
from immunecs.immunecs.engine.harness.experiments import (
    locality_experiment,
    partial_eval_experiment,
    progressive_experiment,
    transfer_experiment,
)
from immunecs.immunecs.engine.harness.stats import ALTERNATIVES
from immunecs.immunecs.engine.log import get_logger
from immunecs.immunecs.engine.mutation import MutationJournal
from immunecs.immunecs.engine.search import search
from immunecs.immunecs.engine.space import load_space

logger = get_logger(__name__)

EXIT_CONFIGURATION = 2
EXIT_EVALUATION = 3

COMMITTEE_REPORT = "committee_report.json"
COMMITTEE_MEMBERS = "committee_members.csv"
TRANSFER_REPORT = "transfer_report.json"
COMPARISON_REPORT = "comparison_report.json"


@dataclass
class CliContext:
    seed: int
    config: RunConfig
    out: Path
    space_ref: str
    evaluator_name: str
    workers: Optional[int] = None

    @property
    def space(self):
        return load_space(self.space_ref)

    def override(self, seed=None, config_path=None, out=None, space_ref=None, evaluator_name=None):
        """Apply options given after the subcommand name"""
        if config_path is not None:
            self.config = _load_config(config_path, self.workers)
        if seed is not None:
            self.seed = seed
        if out is not None:
            self.out = Path(out)
        if space_ref is not None:
            self.space_ref = space_ref
        if evaluator_name is not None:
            self.evaluator_name = evaluator_name


def _load_config(config_path, workers):
    config = load_run_config(config_path)
    if workers is not None:
        config = replace(config, search=replace(config.search, workers=workers))
    return config


def run_options(f):
    """Run options accepted after the subcommand name as well"""

    @click.option("--seed", type=int, default=None, help="Run seed")
    @click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                  help="JSON run configuration")
    @click.option("--out", type=click.Path(file_okay=False), default=None, help="Result directory")
    @click.option("--space", "space_ref", default=None, help="Search space preset name or JSON file")
    @click.option("--evaluator", "evaluator_name", type=click.Choice(EVALUATORS), default=None)
    @functools.wraps(f)
    def wrapper(*args, seed, config_path, out, space_ref, evaluator_name, **kwargs):
        click.get_current_context().find_object(CliContext).override(
            seed, config_path, out, space_ref, evaluator_name)
        return f(*args, **kwargs)

    return wrapper


class ImmuneGroup(click.Group):
    """Turns engine errors into one-line messages and distinct exit codes"""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (ConfigurationError, ArgumentError) as e:
            click.echo(f"Error: {str(e)}", err=True)
            ctx.exit(EXIT_CONFIGURATION)
        except EvaluationError as e:
            click.echo(f"Evaluation failed: {str(e)}", err=True)
            ctx.exit(EXIT_EVALUATION)


def _seeds(seed, repeat):
    if repeat < 1:
        raise ArgumentError(f"--repeat must be at least 1, got {repeat}")
    return list(range(seed, seed + repeat))


def _run_dir(out, seed, repeat):
    return Path(out) if repeat == 1 else Path(out) / f"seed-{seed}"


def _manifest(ctx, cfg, seed, started):
    finished = time.time()
    return {
        "command": " ".join(sys.argv),
        "config": cfg.to_dict(),
        "evaluator": ctx.evaluator_name,
        "seed": seed,
        "space": ctx.space_ref,
        "timings": {"started": started, "finished": finished, "seconds": finished - started},
        "version": __version__,
    }


def _coverage(evaluator, result):
    landscape = getattr(evaluator, "landscape", None)
    if landscape is None:
        return {}
    return {"bump_coverage": landscape.coverage([i.genome for i in result.population])}


def _fresh_journal(out_dir):
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / artifacts.MUTATIONS
    if path.exists():
        path.unlink()
    return MutationJournal(path)


@click.group(cls=ImmuneGroup)
@click.option("--seed", type=int, default=0, show_default=True, help="Run seed")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="JSON run configuration")
@click.option("--out", type=click.Path(file_okay=False), default="results", show_default=True,
              help="Result directory")
@click.option("--space", "space_ref", default="fmnist-seq", show_default=True,
              help="Search space preset name or JSON file")
@click.option("--evaluator", "evaluator_name", type=click.Choice(EVALUATORS), default="surrogate",
              show_default=True)
@click.option("--workers", type=int, default=None, help="Concurrent evaluations")
@click.version_option(__version__)
@click.pass_context
def immunecs(ctx, seed, config_path, out, space_ref, evaluator_name, workers):
    """Immune-inspired neural architecture search"""
    ctx.obj = CliContext(seed=seed, config=_load_config(config_path, workers), out=Path(out), space_ref=space_ref,
                         evaluator_name=evaluator_name, workers=workers)


@immunecs.command("search")
@click.option("--repeat", type=int, default=1, show_default=True, help="Consecutive seeds to run")
@click.option("--budget", type=int, default=None, help="Evaluation cap, overrides search.max_evaluations")
@run_options
@click.pass_obj
def search_command(ctx, repeat, budget):
    """Run the immune search"""
    space = ctx.space
    for seed in _seeds(ctx.seed, repeat):
        started = time.time()
        cfg = ctx.config.with_seed(seed)
        if budget is not None:
            cfg = replace(cfg, search=replace(cfg.search, max_evaluations=budget))

        out_dir = _run_dir(ctx.out, seed, repeat)
        evaluator = build_evaluator(ctx.evaluator_name, space, cfg, seed)
        result = search(cfg.search, space, evaluator, journal=_fresh_journal(out_dir))

        summary = artifacts.summarize(result, "immune", seed, _coverage(evaluator, result))
        artifacts.write_run(out_dir, result, summary, _manifest(ctx, cfg, seed, started))
        click.echo(f"seed {seed}: mean affinity {result.final_mean_affinity:.4f} "
                   f"after {result.evaluations} evaluations ({result.stop_reason}) -> {out_dir}")


@immunecs.command("baseline")
@click.option("--algo", type=click.Choice(["random", "ga"]), required=True)
@click.option("--budget", type=int, default=None, help="Evaluation budget, defaults to search.max_evaluations")
@click.option("--repeat", type=int, default=1, show_default=True)
@run_options
@click.pass_obj
def baseline_command(ctx, algo, budget, repeat):
    """Run random search or the steady-state GA under the same budget accounting"""
    space = ctx.space
    budget = budget if budget is not None else ctx.config.search.max_evaluations
    if budget is None:
        raise ArgumentError("baseline needs --budget or search.max_evaluations in the configuration")

    for seed in _seeds(ctx.seed, repeat):
        started = time.time()
        cfg = ctx.config.with_seed(seed)
        out_dir = _run_dir(ctx.out, seed, repeat)
        evaluator = build_evaluator(ctx.evaluator_name, space, cfg, seed)
        rng = np.random.default_rng(seed)

        if algo == "random":
            result = random_search(space, cfg.experiments.depth_range, budget, evaluator, rng, cfg.search)
        else:
            result = ga_search(space, cfg.search, evaluator, rng, budget)

        summary = artifacts.summarize(result, algo, seed, _coverage(evaluator, result))
        artifacts.write_run(out_dir, result, summary, _manifest(ctx, cfg, seed, started))
        click.echo(f"seed {seed}: {algo} mean affinity {result.final_mean_affinity:.4f} "
                   f"after {result.evaluations} evaluations -> {out_dir}")


@immunecs.command("ensemble")
@click.option("--run", "run_dir", type=click.Path(file_okay=False), default=None,
              help="Run directory holding the population, defaults to --out")
@click.option("--transfer-variant", type=int, default=None,
              help="Also retrain the committee from scratch on this dataset variant")
@run_options
@click.pass_obj
def ensemble_command(ctx, run_dir, transfer_variant):
    """Retrain the final population and evaluate it as a weighted committee"""
    if ctx.evaluator_name != "neural":
        raise ConfigurationError("ensemble needs trained networks; run it with --evaluator neural")

    cfg = ctx.config
    space = ctx.space
    run_dir = Path(run_dir) if run_dir else ctx.out
    population = artifacts.load_population(run_dir, space)
    committee = build_committee(population, cfg.committee.retain)

    dataset = build_dataset(cfg.dataset)
    split = make_split(dataset, seed=[ctx.seed, 0], subset_fraction=1.0,
                       validation_fraction=cfg.train.validation_fraction)
    evaluator = NeuralEvaluator(dataset, cfg.train, cfg.network, seed=ctx.seed)

    outcomes = []
    probabilities = []
    for member in committee.members:
        outcome = full_train(member.genome, member.weights, dataset, split, cfg.full_train, cfg.train,
                             cfg.network, ctx.seed)
        outcomes.append(outcome)
        probabilities.append(evaluator.predict_proba(member.genome, outcome.weights, dataset.test_images))
        logger.info(f"Retrained {member.encoding}: test accuracy {outcome.test_accuracy:.4f}")

    if cfg.committee.weight_source == "validation":
        committee = committee.reweighted([o.validation_accuracy for o in outcomes])

    report = ensemble_metrics(committee, np.stack(probabilities), dataset.test_labels)
    artifacts.dump_json(run_dir / COMMITTEE_REPORT, report.to_dict())
    artifacts.write_csv(
        run_dir / COMMITTEE_MEMBERS,
        ["rank", "encoding", "affinity", "weight", "validation_accuracy", "test_accuracy"],
        [
            [rank, member.encoding, member.affinity, weight, outcome.validation_accuracy, outcome.test_accuracy]
            for rank, (member, weight, outcome) in enumerate(
                zip(committee.members, report.weights, outcomes))
        ],
    )

    summary_path = run_dir / artifacts.SUMMARY
    if summary_path.exists():
        summary = artifacts.load_json(summary_path)
        summary.update({
            "committee_accuracy": report.committee_accuracy,
            "best_member_accuracy": report.best_member_accuracy,
            "ensemble_gain": report.ensemble_gain,
        })
        artifacts.dump_json(summary_path, summary)

    click.echo(f"committee accuracy {report.committee_accuracy:.4f}, "
               f"best member {report.best_member_accuracy:.4f}, gain {report.ensemble_gain:+.4f}")

    if transfer_variant is not None:
        target = build_dataset(replace(cfg.dataset, variant=transfer_variant))
        transfer = transfer_experiment(population, target, cfg.committee.retain, cfg.full_train, cfg.train,
                                       cfg.network, ctx.seed)
        artifacts.dump_json(run_dir / TRANSFER_REPORT, transfer.to_dict())
        click.echo(f"transfer to variant {transfer_variant}: "
                   f"committee accuracy {transfer.committee['committee_accuracy']:.4f}")


@immunecs.command("compare")
@click.argument("dir_a", type=click.Path(exists=True, file_okay=False))
@click.argument("dir_b", type=click.Path(exists=True, file_okay=False))
@click.option("--metric", default="final_mean_affinity", show_default=True)
@click.option("--alternative", type=click.Choice(ALTERNATIVES), default="greater", show_default=True,
              help="Alternative hypothesis for A against B")
@click.pass_obj
def compare_command(ctx, dir_a, dir_b, metric, alternative):
    """Permutation test of a run-level metric between two result directories"""
    report = compare_runs(dir_a, dir_b, metric, alternative)
    ctx.out.mkdir(parents=True, exist_ok=True)
    artifacts.dump_json(ctx.out / COMPARISON_REPORT, report.to_dict())
    click.echo(f"{metric}: A {report.mean_a:.4f} vs B {report.mean_b:.4f}, "
               f"p = {report.p_value:.4g} ({alternative}, {'exact' if report.exact else 'sampled'})")


def _write_experiment(out, name, report, header):
    out.mkdir(parents=True, exist_ok=True)
    artifacts.dump_json(out / f"{name}_report.json", report.to_dict())
    artifacts.write_csv(out / f"{name}_pairs.csv", header, [[row[key] for key in header] for row in report.pairs])


def _echo_correlations(correlations):
    for label, correlation in correlations.items():
        if correlation.defined:
            click.echo(f"  {label}: r = {correlation.spearman_r:.3f}, p = {correlation.p_value:.3g}, "
                       f"n = {correlation.n}")
        else:
            click.echo(f"  {label}: undefined (constant input), n = {correlation.n}")


@immunecs.command("validate-assumptions")
@click.argument("experiment", type=click.Choice(["locality", "partial-eval", "progressive"]))
@click.option("--alternative", type=click.Choice(ALTERNATIVES), default=None,
              help="Overrides experiments.alternative")
@click.option("--force-identity", is_flag=True, help="progressive: append Identity layers only")
@click.option("--no-inherit", is_flag=True, help="partial-eval: re-initialise weights before full training")
@run_options
@click.pass_obj
def validate_assumptions(ctx, experiment, alternative, force_identity, no_inherit):
    """Check locality, partial evaluation or progressive growth"""
    cfg = ctx.config
    exp = cfg.experiments
    alternative = alternative or exp.alternative
    space = ctx.space
    rng = np.random.default_rng(ctx.seed)
    workers = cfg.search.workers

    if experiment == "locality":
        evaluator = build_evaluator(ctx.evaluator_name, space, cfg, ctx.seed)
        report = locality_experiment(space, evaluator, exp.n_parents, exp.n_clones, exp.depths,
                                     cfg.search.mutation, rng, alternative, workers)
        _write_experiment(ctx.out, "locality", report, ["depth", "parent_affinity", "clone_mean", "clone_std"])
        click.echo("parent affinity vs clone mean:")
        _echo_correlations(report.mean_correlation)
        click.echo("parent affinity vs clone std:")
        _echo_correlations(report.std_correlation)

    elif experiment == "progressive":
        evaluator = build_evaluator(ctx.evaluator_name, space, cfg, ctx.seed)
        report = progressive_experiment(space, evaluator, exp.n_genomes, exp.depths, rng, force_identity,
                                        alternative, workers)
        _write_experiment(ctx.out, "progressive", report, ["depth", "pre", "post", "delta"])
        click.echo("affinity before vs after augmentation:")
        _echo_correlations(report.correlation)

    else:
        if not space.decodable:
            raise ConfigurationError(f"partial-eval needs a decodable search space, {space.name} is not")
        report = partial_eval_experiment(space, build_dataset(cfg.dataset), exp.n_genomes, exp.depths, rng,
                                         cfg.train, cfg.full_train, cfg.network, ctx.seed,
                                         inherit=not no_inherit, alternative=alternative, workers=workers)
        _write_experiment(ctx.out, "partial_eval", report,
                          ["depth", "encoding", "partial_affinity", "full_validation_accuracy", "full_test_accuracy"])
        click.echo("partial affinity vs full-training accuracy:")
        _echo_correlations(report.correlation)


commands = [immunecs]
