# knockoff_rl/reporting/__init__.py

from knockoff_rl.reporting.curves import emit_curves
from knockoff_rl.reporting.metrics import SelectionMetrics, score_selection

__all__ = ["SelectionMetrics", "emit_curves", "score_selection"]
