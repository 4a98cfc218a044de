import logging
import os

from django.core.management.base import BaseCommand, CommandError

from core.conf import lab_setting
from core.exceptions import ScenarioError
from runner.scenarios import load_scenario, resolve_config

logger = logging.getLogger(__name__)


class ScenarioCommand(BaseCommand):
    """Shared flags, scenario loading and the exit-code contract.

    Exit 2: the scenario could not be loaded (nothing is written).
    Exit 1: the report was written and at least one check failed.
    """
    targets = {}

    def add_arguments(self, parser):
        parser.add_argument('target', type=str)
        parser.add_argument('--config', type=str, help='Scenario JSON path or bundled scenario name')
        parser.add_argument('--seed', type=int)
        parser.add_argument('--out', type=str, help='Output directory for report.json and CSV files')
        parser.add_argument('--grid', type=int, help='Number of nodes K')
        parser.add_argument('--levels', type=int, help='Refinement levels')

    def operation_for(self, target):
        if target not in self.targets:
            raise CommandError(f"Unknown target {target!r}; choose from {', '.join(sorted(self.targets))}",
                               returncode=2)
        return self.targets[target]

    def load(self, config, operation, options):
        try:
            scenario = load_scenario(resolve_config(config), seed=options.get('seed'),
                                     K=options.get('grid'), levels=options.get('levels'))
            if operation is not None and scenario.operation != operation:
                raise ScenarioError(f"Scenario {scenario.name} runs {scenario.operation!r}, not {operation!r}")
        except ScenarioError as e:
            logger.error(f"Scenario rejected: {e}")
            raise CommandError(str(e), returncode=2)
        return scenario

    def out_dir(self, scenario, options):
        return options.get('out') or os.path.join(lab_setting('OUTPUT_DIR'), scenario.name)

    def finish(self, report, out_dir):
        for check in report.checks:
            style = self.style.SUCCESS if check.passed else self.style.ERROR
            self.stdout.write(style(f"{'PASS' if check.passed else 'FAIL'} {check.name} [{check.identity}] "
                                    f"{check.value:.3e} {check.relation} {check.threshold:.3e}"))
        if not report.passed:
            raise CommandError(f"Scenario {report.scenario.name} failed; report in {out_dir}", returncode=1)
        self.stdout.write(self.style.SUCCESS(f"Scenario {report.scenario.name} passed; report in {out_dir}"))
