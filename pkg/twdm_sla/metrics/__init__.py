from .compliance import Compliance
from .breaches import Breaches
from .runtime import Runtime, runtime_stats
