"""
Per-target label balance for an annotated corpus.
"""

from dataclasses import dataclass, field

import pandas as pd

from stancelab.schema import SentimentLabel, StanceLabel


@dataclass(frozen=True)
class TargetBalance:
    target_id: str
    total: int
    stance_counts: dict
    sentiment_counts: dict
    joint_counts: dict = field(default_factory=dict)
    marker_counts: dict = field(default_factory=dict)
    balanced: bool = True


@dataclass(frozen=True)
class BalanceReport:
    per_target: dict
    total: int
    tolerance: int
    imbalanced_targets: list

    @property
    def balanced(self) -> bool:
        return not self.imbalanced_targets

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "tolerance": self.tolerance,
            "balanced": self.balanced,
            "imbalanced_targets": list(self.imbalanced_targets),
            "per_target": {
                t: {
                    "total": b.total,
                    "stance_counts": b.stance_counts,
                    "sentiment_counts": b.sentiment_counts,
                    "joint_counts": b.joint_counts,
                    "marker_counts": b.marker_counts,
                    "balanced": b.balanced,
                }
                for t, b in self.per_target.items()
            },
        }


def _counts(df, column, labels, targets):
    """targets x labels count table, zero-filled for absent targets/labels."""
    if df.empty:
        return pd.DataFrame(0, index=targets, columns=labels)
    table = pd.crosstab(df["target_id"], df[column])
    return table.reindex(index=targets, columns=labels, fill_value=0).fillna(0).astype(int)


def _within_tolerance(values, tolerance):
    return (max(values) - min(values)) <= tolerance if values else True


def balance_report(corpus, tolerance=0):
    """
    Count stance and sentiment labels per target and flag imbalance.

    A target is balanced when its per-stance counts are equal and its
    per-sentiment counts are equal (max - min <= tolerance). Joint
    stance x sentiment cells and bias-marker tallies are informational only.

    Args:
        corpus (Corpus): A validated corpus.
        tolerance (int): Allowed spread between the largest and smallest count.

    Returns:
        BalanceReport
    """
    if tolerance < 0:
        raise ValueError("The balance tolerance can't be negative.")

    stances = [s.value for s in StanceLabel]
    sentiments = [s.value for s in SentimentLabel]
    targets = list(corpus.entity_ids)

    df = pd.DataFrame(
        [
            {
                "target_id": ex.target_id,
                "stance": ex.stance.value,
                "sentiment": ex.sentiment.value,
                "cell": f"{ex.stance.value}/{ex.sentiment.value}",
                "sentiment_leakage": bool(ex.bias_markers and ex.bias_markers.sentiment_leakage),
                "entity_bias": bool(ex.bias_markers and ex.bias_markers.entity_bias),
            }
            for ex in corpus
        ],
        columns=["target_id", "stance", "sentiment", "cell", "sentiment_leakage", "entity_bias"],
    )

    stance_table = _counts(df, "stance", stances, targets)
    sentiment_table = _counts(df, "sentiment", sentiments, targets)
    cells = [f"{st}/{se}" for st in stances for se in sentiments]
    joint_table = _counts(df, "cell", cells, targets)
    markers = df.groupby("target_id")[["sentiment_leakage", "entity_bias"]].sum()
    markers = markers.reindex(index=targets, fill_value=0).astype(int)

    per_target = {}
    imbalanced = []
    for target in targets:
        stance_counts = {k: int(v) for k, v in stance_table.loc[target].items()}
        sentiment_counts = {k: int(v) for k, v in sentiment_table.loc[target].items()}
        balanced = _within_tolerance(list(stance_counts.values()), tolerance) and _within_tolerance(
            list(sentiment_counts.values()), tolerance
        )
        if not balanced:
            imbalanced.append(target)
        per_target[target] = TargetBalance(
            target_id=target,
            total=int(sum(stance_counts.values())),
            stance_counts=stance_counts,
            sentiment_counts=sentiment_counts,
            joint_counts={k: int(v) for k, v in joint_table.loc[target].items()},
            marker_counts={k: int(v) for k, v in markers.loc[target].items()},
            balanced=balanced,
        )

    return BalanceReport(per_target=per_target, total=len(corpus), tolerance=tolerance, imbalanced_targets=imbalanced)
