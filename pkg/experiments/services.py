"""
Experiment orchestration
One service runs every subcommand end to end: it builds the system from the
config, computes what the subcommand asks for and exports CSV tables (plus
SVG plots when enabled) after a deterministic gather
"""
import logging
import math
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from core.error_handling import EXIT_OK
from core.exceptions import InsufficientDataError, ValidationError, VerificationFailure
from core.export import CsvExportService, config_hash
from core.reports import VerificationReport
from gibbs.models import GibbsSurrogate
from gibbs.services import GibbsService
from pressure.models import PressureCurve, RootEnclosure
from pressure.services import PressureService, self_similar_kappa
from quantdim import settings
from quantizer.services import QuantizerService
from system.models import CookieCutterSystem
from system.services import GeometryService
from words.services import WordService, check_level_cap

from .interfaces import IExperimentService
from .models import SUBCOMMANDS, ExperimentConfig, ExperimentOutcome
from .tasks import TaskRunner

logger = logging.getLogger(__name__)

# golden-section cost tables grow like m^3, keep verify runs small
QUANTIZER_VERIFY_LEVEL = 6
ANTICHAIN_LEVELS = (1, 2)


@dataclass
class RunContext:
    """Everything a subcommand needs from one validated config"""

    config: ExperimentConfig
    system: CookieCutterSystem
    exporter: CsvExportService
    runner: TaskRunner
    h: Optional[RootEnclosure] = None
    surrogate: Optional[GibbsSurrogate] = None

    @property
    def depth(self) -> int:
        return self.config.depth

    @property
    def tol(self) -> Optional[float]:
        return self.config.tol


class ExperimentService(IExperimentService):
    """
    Runs dim, beta, kappa, measure, quantize, verify and figure1

    Collaborators are injected or default-constructed around one shared
    GeometryService so atlases are built once per process.
    """

    def __init__(
        self,
        geometry: Optional[GeometryService] = None,
        pressure: Optional[PressureService] = None,
        gibbs: Optional[GibbsService] = None,
        quantizer: Optional[QuantizerService] = None,
    ):
        self.geometry = geometry or GeometryService()
        self.pressure = pressure or PressureService(geometry=self.geometry)
        self.gibbs = gibbs or GibbsService(geometry=self.geometry, pressure=self.pressure)
        self.quantizer = quantizer or QuantizerService(gibbs=self.gibbs, geometry=self.geometry)
        self.words = WordService(geometry=self.geometry)

    @property
    def handlers(self) -> Dict[str, Callable[[RunContext], ExperimentOutcome]]:
        return {
            'dim': self.run_dim,
            'beta': self.run_beta,
            'kappa': self.run_kappa,
            'measure': self.run_measure,
            'quantize': self.run_quantize,
            'verify': self.run_verify,
            'figure1': self.run_figure1,
        }

    def run_subcommand(self, name: str, config: ExperimentConfig) -> ExperimentOutcome:
        if name not in SUBCOMMANDS:
            raise ValidationError(f"Unknown subcommand '{name}', expected one of {', '.join(SUBCOMMANDS)}")

        start_time = time.time()
        context = self._context(config)
        logger.info(
            f"Running {name} for {context.system.name} (depth {config.depth}, "
            f"config {context.exporter.provenance}, {config.threads} thread(s))"
        )
        outcome = self.handlers[name](context)

        elapsed = time.time() - start_time
        logger.info(f"{name} finished with exit code {outcome.exit_code}: {len(outcome.artifacts)} file(s) in {elapsed:.2f}s")
        return outcome

    # ------------------------------------------------------------------
    # shared state
    # ------------------------------------------------------------------

    def _context(self, config: ExperimentConfig) -> RunContext:
        system = config.system.build()
        cap = config.system.enumeration_cap or settings.ENUMERATION_CAP
        check_level_cap(system.n_branches, config.depth, cap)
        if not system.is_affine:
            check_level_cap(system.n_branches, config.depth + config.window[1], cap)
        return RunContext(
            config=config,
            system=system,
            exporter=CsvExportService(config.output_dir, provenance=config_hash(config.payload())),
            runner=TaskRunner(config.threads),
        )

    def _dimension(self, context: RunContext) -> RootEnclosure:
        if context.h is None:
            context.h = self.pressure.hausdorff_dimension(context.system, k_max=context.depth, tol=context.tol)
        return context.h

    def _surrogate(self, context: RunContext) -> GibbsSurrogate:
        if context.surrogate is None:
            context.surrogate = self.gibbs.build_surrogate(
                context.system,
                h=self._dimension(context),
                window=tuple(context.config.window),
                depth=context.depth,
            )
        return context.surrogate

    def _temperature_curve(self, context: RunContext) -> PressureCurve:
        return self.pressure.temperature_curve(
            context.system,
            self._surrogate(context),
            context.config.q_grid,
            k_max=context.depth,
            tol=context.tol,
            r_values=context.config.r_values,
            mapper=context.runner,
        )

    # ------------------------------------------------------------------
    # subcommands
    # ------------------------------------------------------------------

    def run_dim(self, context: RunContext) -> ExperimentOutcome:
        h = self._dimension(context)
        row = {'system': context.system.name, 'k_max': context.depth, **h.to_dict()}
        artifacts = [context.exporter.export(pd.DataFrame([row]), 'dim')]
        if h.report is not None:
            artifacts.append(context.exporter.export(h.report.to_frame(), 'dim_checks'))
        return ExperimentOutcome('dim', EXIT_OK, artifacts, {'h_lo': h.lo, 'h_hi': h.hi})

    def run_beta(self, context: RunContext) -> ExperimentOutcome:
        curve = self._temperature_curve(context)
        spectrum = self.pressure.legendre_spectrum(curve)
        shape = self.pressure.check_curve_shape(context.system, self._surrogate(context), curve, context.depth, context.tol)

        artifacts = [
            context.exporter.export(curve.to_frame(spectrum), 'beta'),
            context.exporter.export(shape.to_frame(), 'beta_checks'),
        ]
        if context.config.svg:
            from .plotting import plot_temperature_curve
            artifacts.append(plot_temperature_curve(curve, context.exporter.output_dir / 'beta.svg'))
        return ExperimentOutcome('beta', EXIT_OK, artifacts, shape.summary())

    def run_kappa(self, context: RunContext) -> ExperimentOutcome:
        system = context.system
        surrogate = self._surrogate(context)
        results = context.runner.map(
            lambda r: self.pressure.kappa(system, surrogate, r, context.depth, context.tol),
            context.config.r_values,
        )

        reference = self._self_similar_reference(context)
        rows = []
        for result in results:
            rows.append({
                'r': result.r,
                'q_r_lo': result.q.lo,
                'q_r': result.q.estimate,
                'q_r_hi': result.q.hi,
                'kappa_lo': result.kappa_lo,
                'kappa_mid': result.kappa_mid,
                'kappa_hi': result.kappa_hi,
                'kappa_from_beta': result.kappa_from_beta,
                'direct_kappa_lo': result.direct_kappa_lo,
                'direct_kappa_hi': result.direct_kappa_hi,
                'self_similar': reference(result.r) if reference else math.nan,
            })
        frame = pd.DataFrame(rows)
        return ExperimentOutcome('kappa', EXIT_OK, [context.exporter.export(frame, 'kappa')], {'rows': len(rows)})

    def _self_similar_reference(self, context: RunContext) -> Optional[Callable[[float], float]]:
        """kappa from the self-similar equation with p_j = |s_j|^h, affine systems only"""
        if not context.system.is_affine:
            return None
        ratios = np.abs(np.asarray(context.system.ratios, dtype=float))
        probabilities = ratios ** self._dimension(context).point
        probabilities = probabilities / probabilities.sum()
        return lambda r: self_similar_kappa(ratios, probabilities, r)

    def run_measure(self, context: RunContext) -> ExperimentOutcome:
        surrogate = self._surrogate(context)
        level = context.config.discretization_level
        measure = self.gibbs.discrete_measure(surrogate, level)
        artifacts = [
            context.exporter.export(self.gibbs.measure_frame(surrogate, level), 'measure'),
            context.exporter.export(measure.to_frame(), 'atoms'),
            context.exporter.export(self.gibbs.window_stability(surrogate), 'window_stability'),
        ]
        return ExperimentOutcome('measure', EXIT_OK, artifacts, {'atoms': len(measure), 'radius': measure.radius})

    def run_quantize(self, context: RunContext) -> ExperimentOutcome:
        config = context.config
        measure = self.gibbs.discrete_measure(self._surrogate(context), config.discretization_level)
        h = self._dimension(context).point

        curves = context.runner.map(
            lambda r: self.quantizer.error_curve(measure, r, config.n_grid).with_kappa(h),
            config.r_values,
        )

        curve_frames, fit_rows, quantizer_frames = [], [], []
        for curve in curves:
            frame = curve.to_frame()
            frame.insert(0, 'r', curve.r)
            curve_frames.append(frame)
            fit_rows.append(self._fit_row(curve, h))

            for n in config.n_grid:
                if n >= len(measure):
                    break
                centers = self.quantizer.optimal_quantizer(measure, n, curve.r).to_frame()
                centers.insert(0, 'n', n)
                centers.insert(0, 'r', curve.r)
                quantizer_frames.append(centers)

        artifacts = [
            context.exporter.export(pd.concat(curve_frames, ignore_index=True), 'error_curve'),
            context.exporter.export(pd.DataFrame(fit_rows), 'dr_fit'),
        ]
        if quantizer_frames:
            artifacts.append(context.exporter.export(pd.concat(quantizer_frames, ignore_index=True), 'quantizer'))
        if config.svg:
            from .plotting import plot_error_curves
            artifacts.append(plot_error_curves(curves, context.exporter.output_dir / 'error_curve.svg'))
        return ExperimentOutcome('quantize', EXIT_OK, artifacts, {'atoms': len(measure), 'curves': len(curves)})

    def _fit_row(self, curve, kappa: float) -> Dict[str, object]:
        row: Dict[str, object] = {'r': curve.r, 'kappa_r': kappa, 'atoms': curve.atom_count, 'radius': curve.radius}
        try:
            row.update(self.quantizer.estimate_Dr(curve).to_dict())
            row.update(self.quantizer.coefficient_band(curve, kappa).to_dict())
            row['status'] = 'ok'
        except InsufficientDataError as exc:
            logger.warning(f"No D_{curve.r:g} fit: {exc.message}")
            row['status'] = exc.error_type
        return row

    def run_figure1(self, context: RunContext) -> ExperimentOutcome:
        curve = self._temperature_curve(context)

        samples = curve.to_frame()
        for r in context.config.r_values:
            samples[f"line_r{r:g}"] = r * samples['q']

        rows = curve.figure1_frame()
        rows['line_at_qr'] = rows['r'] * rows['q_r']
        rows['y_intercept'] = rows['beta_at_qr'] / (1.0 - rows['q_r'])

        artifacts = [
            context.exporter.export(samples, 'figure1_beta'),
            context.exporter.export(rows, 'figure1'),
        ]
        if context.config.svg:
            from .plotting import plot_temperature_curve
            artifacts.append(plot_temperature_curve(curve, context.exporter.output_dir / 'figure1.svg', context.config.r_values))
        return ExperimentOutcome('figure1', EXIT_OK, artifacts, {'rows': len(rows)})

    # ------------------------------------------------------------------
    # verify
    # ------------------------------------------------------------------

    def run_verify(self, context: RunContext) -> ExperimentOutcome:
        """
        Every module's checks in one report; failures are exported first and
        then raised as VerificationFailure
        """
        config, system = context.config, context.system
        depth = min(config.verify_depth, config.depth)
        report = VerificationReport(title=f"verify[{system.name}]")

        report.merge(self.geometry.verify_defining_data(system, depth, config.system.grid_points))

        h = self._dimension(context)
        if h.report is not None:
            report.merge(h.report)

        surrogate = self._surrogate(context)
        report.merge(self.gibbs.gibbs_bracket_check(surrogate, depth))

        for result in context.runner.map(
            lambda r: self.pressure.kappa(system, surrogate, r, context.depth, context.tol), config.r_values
        ):
            if result.report is not None:
                report.merge(result.report)

        curve = self._temperature_curve(context)
        report.merge(self.pressure.check_curve_shape(system, surrogate, curve, context.depth, context.tol))

        self._verify_quantizer(context, report)
        self._verify_antichains(context, report, depth)

        artifacts = [context.exporter.export(report.to_frame(), 'verify')]
        summary = report.summary()
        artifacts.append(context.exporter.export(pd.DataFrame([summary]), 'verify_summary'))
        logger.info(f"Verification for {system.name}: {summary['passed']}/{summary['total']} checks passed")

        if not report.passed:
            failed = [check.name for check in report.failures]
            raise VerificationFailure(
                f"{len(failed)} of {summary['total']} checks failed for {system.name}",
                {'failed': ', '.join(failed), 'report': str(artifacts[0])},
            )
        return ExperimentOutcome('verify', EXIT_OK, artifacts, summary)

    def _verify_quantizer(self, context: RunContext, report: VerificationReport) -> None:
        level = min(context.config.discretization_level, QUANTIZER_VERIFY_LEVEL)
        measure = self.gibbs.discrete_measure(self._surrogate(context), level)
        n_values: List[int] = [n for n in context.config.n_grid if n < len(measure)] or [1]
        for r in context.config.r_values:
            report.merge(self.quantizer.verify_quantizer(measure, r, n_values))

    def _verify_antichains(self, context: RunContext, report: VerificationReport, depth: int) -> None:
        surrogate = self._surrogate(context)
        kappa = self._dimension(context).point
        n_branches = context.system.n_branches
        for length in ANTICHAIN_LEVELS:
            antichain = self.words.level_antichain(n_branches, length)
            if antichain.max_length > surrogate.depth:
                continue
            for r in context.config.r_values:
                report.merge(self.quantizer.antichain_bound_check(surrogate, antichain, 2 * len(antichain), r, kappa))
            if length <= depth:
                report.add(self.gibbs.compare_over_antichain(surrogate, antichain, depth))
