from ._base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Concentration sweep over eps for alpha >= 1'
    experiment = 'thmB_sweep'
