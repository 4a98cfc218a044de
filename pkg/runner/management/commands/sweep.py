from django.core.management.base import CommandError

from core.exceptions import ScenarioError
from runner.management.base import ScenarioCommand
from runner.scenarios import convergence_sweep


class Command(ScenarioCommand):
    help = 'Run a convergence sweep scenario and fit the log-log slope'

    def handle(self, *args, **options):
        scenario = self.load(options['config'] or options['target'], None, options)
        out_dir = self.out_dir(scenario, options)
        try:
            report = convergence_sweep(scenario, out_dir)
        except ScenarioError as e:
            raise CommandError(str(e), returncode=2)
        self.finish(report, out_dir)
