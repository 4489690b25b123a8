from .harness import Simulator
from . import schedulers
from . import metrics
from . import exact
from . import model
from . import traffic
from . import sla
from . import scenario
from . import plotting
from . import utils
