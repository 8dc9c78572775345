from .confusion import ConfusionCounts, align_predictions, confusion_counts
from .fairness import bias_ssc, cf_consistency, per_class_recall, rstd
from .classification import macro_f1, per_class_f1
from .report import MetricReport, evaluate_predictions
from .ood import FoldLeakageError, OODResult, ood_evaluate
