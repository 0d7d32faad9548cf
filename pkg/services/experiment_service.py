from typing import Any, Callable, Dict, List, Optional, Tuple
import json
import logging
import time

import numpy as np
from pydantic import ValidationError

from app.config import settings
from app.exceptions import ConfigValidationError, DegeneracyError, NoNonEdgesError
from models.enums import ExperimentKind
from models.graph import GraphSample
from models.spectral import SubspaceBasis
from schemas.ensemble import Seed
from schemas.experiment import BraessConfig, ExperimentConfig, RunManifest, SmallBallConfig
from services.deloc_service import default_delta, get_deloc_service
from services.graph_service import get_graph_service
from services.report_store import ReportStore, read_text
from services.small_ball_service import get_small_ball_service
from utils.logger import log_timing
from utils.parallel import ordered_map

logger = logging.getLogger(__name__)

# Generator streams of the small-ball audit: Levy draws and random subspaces
_LEVY_STREAM = 10
_SUBSPACE_STREAM = 11

_GRAPH_KINDS = (ExperimentKind.GRAPH_AUDIT, ExperimentKind.BRAESS, ExperimentKind.NODAL)


def _format_error(error: Dict[str, Any]) -> str:
    loc = ".".join(str(part) for part in error["loc"])
    message = error["msg"]
    if error["type"] == "extra_forbidden":
        message = f"unknown key {error['loc'][-1]!r}"
    return f"{loc}: {message}" if loc else message


def semantic_errors(config: ExperimentConfig) -> List[str]:
    """Cross-field checks that depend on the experiment kind"""
    errors = []
    kind = config.experiment
    if kind is ExperimentKind.DELOC_SURVEY:
        if config.ensemble is None:
            errors.append("ensemble: required for deloc_survey")
        else:
            n = config.ensemble.n
            for eps in config.eps_grid + ([config.eps] if config.eps is not None else []):
                if not 0 < eps <= 1:
                    errors.append(f"eps_grid: {eps} outside (0, 1]")
                elif eps * n < 1:
                    errors.append(
                        f"eps_grid: {eps} is below 1/n = {1 / n:.4g}; the no-gaps guarantee is stated "
                        f"for eps in [8/n, 1) = [{8 / n:.4g}, 1)"
                    )
    if kind in _GRAPH_KINDS:
        graph = config.graph
        if graph is None:
            errors.append(f"graph: required for {kind.value}")
        elif graph.edge_list is None and (graph.n is None or graph.p is None):
            errors.append("graph: give either edge_list or both n and p")
        elif graph.edge_list is not None and kind is ExperimentKind.NODAL:
            errors.append("graph.edge_list: nodal surveys sample G(n, p); give n and p")
    if kind is ExperimentKind.SMALLBALL_AUDIT and config.smallball is not None:
        sb = config.smallball
        for section in ("randomize", "projection", "distance"):
            if getattr(sb, section) is not None and not sb.entry.is_continuous:
                errors.append(f"smallball.{section}: needs a continuous entry law, got {sb.entry.kind.value}")
    if kind is ExperimentKind.DENSITY_CURVE and config.density is None:
        errors.append("density: required for density_curve")
    if kind is ExperimentKind.BRAESS and config.braess is not None:
        if config.braess.mode.value == "sampled" and config.braess.m is None:
            errors.append("braess.m: required in sampled mode")
    return errors


def validate_config(text: str) -> ExperimentConfig:
    """
    Parse and validate a JSON config, collecting every error.

    Raises:
        ConfigValidationError: with the full list of problems
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigValidationError([f"config is not valid JSON: {e}"]) from e
    if not isinstance(data, dict):
        raise ConfigValidationError(["config must be a JSON object"])
    try:
        config = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigValidationError([_format_error(err) for err in e.errors()]) from e
    errors = semantic_errors(config)
    if errors:
        raise ConfigValidationError(errors)
    return config


class ExperimentService:
    """
    Runs one experiment kind from a validated config and writes its reports.
    """

    def __init__(self):
        self.deloc = get_deloc_service()
        self.small_ball = get_small_ball_service()
        self.graphs = get_graph_service()
        self._runners: Dict[ExperimentKind, Callable] = {
            ExperimentKind.DELOC_SURVEY: self._run_deloc_survey,
            ExperimentKind.SMALLBALL_AUDIT: self._run_smallball_audit,
            ExperimentKind.DENSITY_CURVE: self._run_density_curve,
            ExperimentKind.GRAPH_AUDIT: self._run_graph_audit,
            ExperimentKind.BRAESS: self._run_braess,
            ExperimentKind.NODAL: self._run_nodal,
        }

    @log_timing("experiment run")
    def run_experiment(self, config: ExperimentConfig, output_dir: Optional[str] = None,
                       threads: Optional[int] = None, seed: Optional[int] = None) -> RunManifest:
        """
        Run the configured experiment.

        Args:
            config: validated configuration
            output_dir: overrides config.output_dir
            threads: overrides config.threads
            seed: overrides config.master_seed

        Returns:
            RunManifest, also written to manifest.json
        """
        start = time.perf_counter()
        warnings: List[str] = []
        master_seed = seed if seed is not None else config.master_seed
        if master_seed is None:
            master_seed = 0
            warnings.append("master_seed missing; defaulted to 0")
            logger.warning("master_seed missing; defaulted to 0")

        store = ReportStore(output_dir or config.output_dir)
        workers = threads or config.threads or settings.threads
        logger.info(f"Running {config.experiment.value} with seed {master_seed} on {workers} thread(s)")

        row_counts = self._runners[config.experiment](config, store, master_seed, workers)

        manifest = RunManifest(
            app_name=settings.app_name,
            app_version=settings.app_version,
            experiment=config.experiment,
            master_seed=master_seed,
            config=config.model_dump(mode="json"),
            duration_seconds=time.perf_counter() - start,
            row_counts=row_counts,
            outputs=list(store.written) + ["manifest.json"],
            warnings=warnings,
        )
        store.write_manifest(manifest)
        return manifest

    # ==================== Runners ====================

    def _run_deloc_survey(self, config: ExperimentConfig, store: ReportStore, seed: int, threads: int):
        eps = config.eps if config.eps is not None else config.eps_grid[0]
        delta = config.delta if config.delta is not None else default_delta(eps, config.constants.s)
        survey = self.deloc.deloc_survey(config.ensemble, config.trials, config.eps_grid, master_seed=seed,
                                         eps=eps, delta=delta, threads=threads, m=config.constants.m)
        mass_columns = [f"min_mass_{e!r}" for e in survey.summary.eps_grid]
        rows = store.write_csv(
            "deloc_survey.csv",
            ["trial", "index", "eigenvalue_re", "eigenvalue_im", "linf"] + mass_columns,
            ([r.trial, r.index, r.eigenvalue_re, r.eigenvalue_im, r.linf] + r.min_mass for r in survey.rows),
        )
        s = survey.summary
        summary = store.write_csv(
            "deloc_survey_summary.csv",
            ["trials", "n", "eps", "delta", "localized_trials", "localization_frequency", "max_linf",
             "m", "bounded_trials"] + mass_columns,
            [[s.trials, s.n, s.eps, s.delta, s.localized_trials, s.localization_frequency, s.max_linf,
              s.m, s.bounded_trials] + s.min_mass],
        )
        return {"deloc_survey.csv": rows, "deloc_survey_summary.csv": summary}

    def _run_smallball_audit(self, config: ExperimentConfig, store: ReportStore, seed: int, threads: int):
        cfg = config.smallball or SmallBallConfig()
        c = config.constants
        sb = self.small_ball
        rows: List[list] = []

        rng = Seed(master=seed, trial_index=0).generator(stream=_LEVY_STREAM)
        draws = cfg.entry.sample(rng, cfg.samples)
        for r in cfg.levy_r:
            rows.append(["levy", r, sb.levy_concentration(draws, r), None, None, None])

        if cfg.entry.is_continuous:
            unit = sb.rescale_to_unit_density(cfg.entry)
            for t in cfg.superlevel_t:
                report = sb.superlevel_measure(unit, t, c=c.halasz_c)
                bound = report.bound_low_t if t < 0.75 else report.bound_high_t
                rows.append(["superlevel", t, report.measure, None, bound, report.applicable_holds])

        x = np.zeros(cfg.m)
        x[0] = 1.0
        for theta in cfg.theta_grid:
            report = sb.small_ball_Gx(cfg.l, cfg.m, cfg.entry, x, theta, trials=cfg.gx_trials,
                                      master_seed=seed, c0=c.c0, threads=threads)
            rows.append(["small_ball_gx", theta, report.empirical, report.stderr, report.bound, report.holds])

        t_grid = config.t_grid or [0.0, 0.05, 0.1, 0.15, 0.2, 0.25]
        for kind in cfg.tensorization:
            for row in sb.tensorization_audit(kind, t_grid, samples=cfg.tensorization_samples, master_seed=seed,
                                              d=cfg.d, m=cfg.big_m, l=cfg.product_l, c=cfg.product_c,
                                              threads=threads):
                rows.append([f"tensorization_{kind.value.lower()}", row.t, row.empirical, row.stderr,
                             row.bound, row.holds])

        subspaces = Seed(master=seed, trial_index=0).generator(stream=_SUBSPACE_STREAM)
        if cfg.randomize is not None:
            rc = cfg.randomize
            subspace = SubspaceBasis.span(subspaces.normal(size=(rc.k, rc.n)))
            for r in rc.r_grid:
                report = sb.randomize_coordinates_audit(cfg.entry, subspace, r, trials=rc.trials, master_seed=seed)
                rows.append(["randomize_coordinates", r, report.lhs, report.margin, report.rhs, report.holds])

        if cfg.projection is not None:
            pc = cfg.projection
            for d in pc.d:
                subspace = SubspaceBasis.span(subspaces.normal(size=(d, pc.n)))
                report = sb.projection_density_sup([cfg.entry] * pc.n, subspace, samples=pc.samples,
                                                   master_seed=seed, threads=threads)
                rows.append(["projection_density", d, report.sup, report.stderr, report.bound, report.holds])

        if cfg.distance is not None:
            dc = cfg.distance
            for row in sb.distance_small_ball_audit(dc.n, dc.k, cfg.entry, dc.tau_grid, trials=dc.trials,
                                                    master_seed=seed, c=dc.c, threads=threads):
                rows.append(["distance_small_ball", row.tau, row.empirical, row.stderr, row.bound, row.holds])

        count = store.write_csv("smallball_audit.csv",
                                ["audit", "parameter", "empirical", "stderr", "bound", "holds"], rows)
        audits = sorted({row[0] for row in rows})
        summary = store.write_csv(
            "smallball_audit_summary.csv", ["audit", "rows", "holding"],
            [[a, sum(1 for r in rows if r[0] == a), sum(1 for r in rows if r[0] == a and r[5])] for a in audits],
        )
        return {"smallball_audit.csv": count, "smallball_audit_summary.csv": summary}

    def _run_density_curve(self, config: ExperimentConfig, store: ReportStore, seed: int, threads: int):
        curve = self.small_ball.weighted_sum_density(config.density.spec, config.density.eval_points)
        count = store.write_csv("density_curve.csv", ["grid", "value"],
                                ([row["grid"], row["value"]] for row in curve.to_rows()))
        summary = store.write_csv(
            "density_curve_summary.csv", ["integral", "sup", "grid_step", "truncation_window", "tail_bound"],
            [[curve.integral, curve.sup, curve.grid_step, curve.truncation_window, curve.tail_bound]],
        )
        return {"density_curve.csv": count, "density_curve_summary.csv": summary}

    def _graphs(self, config: ExperimentConfig, seed: int) -> List[Tuple[int, Callable[[], GraphSample]]]:
        """Per-trial graph factories: the edge list once, or one G(n, p) per trial"""
        if config.graph.edge_list is not None:
            text = read_text(config.graph.edge_list)
            return [(0, lambda: self.graphs.parse_edge_list(text))]
        n, p = config.graph.n, config.graph.p
        return [(t, lambda t=t: self.graphs.sample_gnp(n, p, Seed(master=seed, trial_index=t)))
                for t in range(config.trials)]

    def _run_graph_audit(self, config: ExperimentConfig, store: ReportStore, seed: int, threads: int):
        c_audit = config.constants.c_audit

        def audit(item):
            trial, factory = item
            graph = factory()
            try:
                return trial, graph, self.graphs.gnp_property_audit(graph, c_audit=c_audit, seed=seed + trial)
            except DegeneracyError as e:
                logger.warning(f"Trial {trial}: {e}")
                return trial, graph, None

        reports = ordered_map(audit, self._graphs(config, seed), threads=threads)
        count = store.write_csv(
            "graph_audit.csv",
            ["trial", "item", "name", "value", "lower", "upper", "holds", "heuristic", "detail"],
            ([t, c.item, c.name, c.value, c.lower, c.upper, c.holds, c.heuristic, c.detail]
             for t, _, report in reports if report is not None for c in report.checks),
        )
        summary = store.write_csv(
            "graph_audit_summary.csv", ["trial", "status", "n", "p", "edge_count", "exact_items_hold"],
            ([t, "ok", r.n, r.p, r.edge_count, r.exact_items_hold] if r is not None
             else [t, "Degenerate", g.n, None, g.edge_count, None]
             for t, g, r in reports),
        )
        return {"graph_audit.csv": count, "graph_audit_summary.csv": summary}

    def _run_braess(self, config: ExperimentConfig, store: ReportStore, seed: int, threads: int):
        braess = config.braess or BraessConfig()
        c = config.constants
        pair_rows, summary_rows, frontier_rows = [], [], []

        for trial, factory in self._graphs(config, seed):
            graph = factory()
            try:
                report = self.graphs.a_minus(graph, mode=braess.mode, m=braess.m, seed=seed + trial,
                                             tie_tol=c.tie_tol, c1=c.c1, c2=c.c2, threads=threads)
            except NoNonEdgesError as e:
                logger.warning(f"Trial {trial}: {e}")
                summary_rows.append([trial, "NoNonEdges", graph.n, None, None, None, 0, None, None])
                continue
            except DegeneracyError as e:
                logger.warning(f"Trial {trial}: {e}")
                summary_rows.append([trial, "Degenerate", graph.n, None, None, None, 0, None, None])
                continue
            for p in report.tested:
                pair_rows.append([trial, p.u, p.w, p.lambda2_new, p.decreased, p.tie, p.sufficient_condition,
                                  p.certificate_bound, p.certified])
            summary_rows.append([trial, "ok", report.n, report.lambda2_base, report.a_minus,
                                 report.same_sign_fraction, len(report.tested), report.degree_hypothesis,
                                 report.multiplicity_flag])
            if braess.frontier:
                for row in self.graphs.braess_condition_frontier(graph, report, braess.c1_grid, braess.c2_grid):
                    frontier_rows.append([trial, row.c1, row.c2, row.flagged, row.false_positives,
                                          row.zero_false_positives])

        counts = {
            "braess.csv": store.write_csv(
                "braess.csv",
                ["trial", "u", "w", "lambda2_new", "decreased", "tie", "sufficient_condition",
                 "certificate_bound", "certified"], pair_rows),
            "braess_summary.csv": store.write_csv(
                "braess_summary.csv",
                ["trial", "status", "n", "lambda2_base", "a_minus", "same_sign_fraction", "tested",
                 "degree_hypothesis", "multiplicity_flag"], summary_rows),
        }
        if braess.frontier:
            counts["braess_frontier.csv"] = store.write_csv(
                "braess_frontier.csv",
                ["trial", "c1", "c2", "flagged", "false_positives", "zero_false_positives"], frontier_rows)
        return counts

    def _run_nodal(self, config: ExperimentConfig, store: ReportStore, seed: int, threads: int):
        rows, summary = self.graphs.nodal_survey(config.graph.n, config.graph.p, config.trials, master_seed=seed,
                                                 zero_tol=config.constants.zero_tol, threads=threads)
        count = store.write_csv(
            "nodal.csv",
            ["trial", "index", "eigenvalue", "domains", "positive_domains", "negative_domains", "zero_count",
             "residual_count", "min_positive_to_negative", "min_negative_to_positive"],
            ([r.trial, r.index, r.eigenvalue, r.domains, r.positive_domains, r.negative_domains, r.zero_count,
              r.residual_count, r.min_positive_to_negative, r.min_negative_to_positive] for r in rows),
        )
        s = summary
        summary_count = store.write_csv(
            "nodal_summary.csv",
            ["trials", "n", "p", "vectors", "two_domain_fraction", "max_residual_count", "residual_reference"],
            [[s.trials, s.n, s.p, s.vectors, s.two_domain_fraction, s.max_residual_count, s.residual_reference]],
        )
        return {"nodal.csv": count, "nodal_summary.csv": summary_count}


# Singleton instance
_experiment_service_instance: Optional[ExperimentService] = None


def get_experiment_service() -> ExperimentService:
    """Get experiment service singleton instance"""
    global _experiment_service_instance
    if _experiment_service_instance is None:
        _experiment_service_instance = ExperimentService()
    return _experiment_service_instance


def run_experiment(config: ExperimentConfig, **kwargs) -> RunManifest:
    return get_experiment_service().run_experiment(config, **kwargs)
