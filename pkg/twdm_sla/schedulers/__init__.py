from .dtwa import DTWA
from .swa import SWA
from .oracle import Oracle
from ..utils import ConfigError

SCHEDULERS = {'dtwa': DTWA, 'swa': SWA, 'oracle': Oracle}


def get_scheduler(name):
    """Scheduler class registered under name ('dtwa', 'swa' or 'oracle')."""
    try:
        return SCHEDULERS[name.lower()]
    except (KeyError, AttributeError):
        raise ConfigError('Unknown algorithm %s. Valid: %s' % (name, ', '.join(SCHEDULERS.keys())))
