from celery import shared_task
import logging

from .services import experiment_service

logger = logging.getLogger(__name__)


@shared_task(bind=True)
def compute_sweep_point(self, config_data, index):
    """
    Compute one sweep row on a Celery worker

    Args:
        config_data: ExperimentConfig.to_dict() of the sweep
        index: Position in eps_ladder

    Returns:
        Row dict (JSON-serialisable)
    """
    try:
        logger.info(f"Task {self.request.id}: sweep point {index} of {config_data.get('experiment')}")
        return experiment_service.compute_sweep_point(config_data, index)
    except Exception as e:
        logger.error(f"Sweep point {index} failed: {str(e)}")
        raise
