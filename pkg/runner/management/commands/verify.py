from runner.checks import VERIFY_TARGETS
from runner.management.base import ScenarioCommand
from runner.scenarios import run_scenario


class Command(ScenarioCommand):
    help = 'Run a verification suite: legendre, action-variation, hj, cauchy or quasiclassics'
    targets = VERIFY_TARGETS

    def handle(self, *args, **options):
        operation = self.operation_for(options['target'])
        scenario = self.load(options['config'] or operation, operation, options)
        out_dir = self.out_dir(scenario, options)
        self.finish(run_scenario(scenario, out_dir), out_dir)
