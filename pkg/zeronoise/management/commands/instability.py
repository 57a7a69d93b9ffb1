from ._base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Saddle-node instability exhibit: escape, funnel and concentration at 0'
    experiment = 'thmC_instability'
