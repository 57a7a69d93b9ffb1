from ._base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Mixture-distance sweep over eps for alpha in (0, 1)'
    experiment = 'thmA_sweep'
