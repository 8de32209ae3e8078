from . import lv, mc
from .common import PassRecord, StageRecord, TrialMetrics, ceil_lg
from .lv import LasVegasStation, beep_naming_lv
from .mc import MonteCarloStation, beep_naming_mc
from .procedures import detect_collision, next_string, run_detect_collision, run_next_string

PROTOCOLS = {"lv": lv, "mc": mc}

__all__ = [
    "LasVegasStation", "MonteCarloStation", "PROTOCOLS", "PassRecord", "StageRecord",
    "TrialMetrics", "beep_naming_lv", "beep_naming_mc", "ceil_lg", "detect_collision",
    "lv", "mc", "next_string", "run_detect_collision", "run_next_string",
]
