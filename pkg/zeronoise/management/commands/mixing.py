from ._base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Covering times of test arcs under T'
    experiment = 'mixing'
