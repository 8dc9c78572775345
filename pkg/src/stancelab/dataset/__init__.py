from .balance import balance_report
from .split import leave_one_entity_out_split
from .agreement import fleiss_kappa, majority_labels
