from fractions import Fraction

import numpy as np
import pytest

from stancelab.dataset import balance_report, fleiss_kappa, leave_one_entity_out_split, majority_labels
from stancelab.dataset.split import leave_one_entity_out_folds
from stancelab.errors import UndefinedAgreementError, UnknownEntityError, ValidationError
from stancelab.schema import AnnotationSet, Corpus, StanceLabel

S, A, N = StanceLabel.SUPPORT, StanceLabel.AGAINST, StanceLabel.NEUTRAL


def _annotations(*rows):
    return AnnotationSet(tuple((f"item-{i}", tuple(r)) for i, r in enumerate(rows)), len(rows[0]))


def test_bundled_corpus_is_balanced(bundled_corpus):
    report = balance_report(bundled_corpus)
    assert report.balanced
    assert report.total == 270
    for target in bundled_corpus.entity_ids:
        assert report.per_target[target].stance_counts == {"support": 30, "against": 30, "neutral": 30}
        assert report.per_target[target].joint_counts["support/negative"] == 10


def test_imbalance_is_flagged(tiny_corpus):
    skewed = tiny_corpus.subset(lambda ex: ex.id != "pita-3")
    report = balance_report(skewed)
    assert report.imbalanced_targets == ["pita"]
    assert balance_report(skewed, tolerance=1).balanced


def test_split_bundled_corpus(bundled_corpus):
    fit_set, eval_set = leave_one_entity_out_split(bundled_corpus, "anan")
    assert len(fit_set) == 180
    assert len(eval_set) == 90
    assert set(fit_set.ids).isdisjoint(eval_set.ids)
    assert set(fit_set.ids) | set(eval_set.ids) == set(bundled_corpus.ids)
    assert all(ex.target_id == "anan" for ex in eval_set)


def test_split_with_no_examples_for_entity(tiny_corpus):
    without_pita = tiny_corpus.subset(lambda ex: ex.target_id != "pita")
    fit_set, eval_set = leave_one_entity_out_split(without_pita, "pita")
    assert len(eval_set) == 0
    assert len(fit_set) == 6


def test_split_errors(tiny_corpus, political_lexicon):
    with pytest.raises(UnknownEntityError):
        leave_one_entity_out_split(tiny_corpus, "prayut")
    single = Corpus(tiny_corpus.examples[:3], political_lexicon[:1])
    with pytest.raises(ValidationError, match="lexicon"):
        leave_one_entity_out_split(single, "pita")


def test_folds_follow_lexicon_order(tiny_corpus):
    assert [held for held, _, _ in leave_one_entity_out_folds(tiny_corpus)] == ["pita", "thaksin", "paetongtarn"]


def test_fleiss_kappa_hand_case():
    """
    (S,S,A) and (A,A,A):
    P_bar = (1/3 + 1) / 2 = 2/3, P_e = (1/3)^2 + (2/3)^2 = 5/9
    kappa = (2/3 - 5/9) / (1 - 5/9) = 0.25
    """
    assert fleiss_kappa(_annotations((S, S, A), (A, A, A))) == pytest.approx(0.25)


def test_fleiss_kappa_unanimous_multi_category():
    assert fleiss_kappa(_annotations((S, S, S), (A, A, A), (N, N, N))) == 1.0


def test_fleiss_kappa_permutation_invariant():
    rows = [(S, S, A), (A, N, A), (N, N, N), (S, A, N)]
    shuffled_items = [rows[2], rows[0], rows[3], rows[1]]
    shuffled_columns = [(r[2], r[0], r[1]) for r in rows]
    kappa = fleiss_kappa(_annotations(*rows))
    assert fleiss_kappa(_annotations(*shuffled_items)) == pytest.approx(kappa)
    assert fleiss_kappa(_annotations(*shuffled_columns)) == pytest.approx(kappa)


def test_fleiss_kappa_single_category_is_undefined():
    with pytest.raises(UndefinedAgreementError):
        fleiss_kappa(_annotations((S, S), (S, S)))


def test_fleiss_kappa_needs_two_annotators():
    with pytest.raises(ValueError):
        fleiss_kappa(_annotations((S,), (A,)))


def test_majority_labels():
    resolved = majority_labels(_annotations((S, S, A), (S, A, N)))
    assert resolved == {"item-0": S, "item-1": None}


def test_fleiss_kappa_matches_hand_computation():
    """P_bar = mean of sum c(c-1) / r(r-1); P_e = sum of squared category shares."""
    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(1000):
        n_items, raters = int(rng.integers(1, 8)), int(rng.integers(2, 6))
        rows = [tuple((S, A, N)[i] for i in rng.integers(0, 3, size=raters)) for _ in range(n_items)]
        counts = [[row.count(label) for label in (S, A, N)] for row in rows]
        totals = [sum(c[j] for c in counts) for j in range(3)]
        if sum(t > 0 for t in totals) < 2:
            continue
        p_bar = sum(Fraction(sum(c * (c - 1) for c in row), raters * (raters - 1)) for row in counts) / n_items
        p_e = sum(Fraction(t, n_items * raters) ** 2 for t in totals)
        expected = (p_bar - p_e) / (1 - p_e)
        assert fleiss_kappa(_annotations(*rows)) == pytest.approx(float(expected), abs=1e-12)
        checked += 1
    assert checked > 900
