import numpy as np
import pytest

from mteval.corpus import Dataset, Segment
from mteval.ensemble import FeatureMatrix
from mteval.errors import ConfigError
from mteval.evaluation import (
    ablation,
    correlation_report,
    cross_lingual_eval,
    evaluate_dataset,
)
from mteval.metrics import REG_BASE_FEATURES, MetricConfig, Resources
from mteval.stats import spearman
from mteval.tokenization import WordPieceVocab


def matrix(rows, names=None, ids=None):
    rows = np.asarray(rows, dtype=float)
    names = names or [f"f{j}" for j in range(rows.shape[1])]
    ids = ids or [f"s{i}" for i in range(rows.shape[0])]
    return FeatureMatrix(rows, names, ids)


# ---------------------------------------------------------------------------
# correlation report
# ---------------------------------------------------------------------------


def test_correlation_report_matches_elementwise_spearman():
    rng = np.random.default_rng(0)
    m = matrix(rng.normal(size=(30, 3)), names=["a", "b", "c"])
    gold = rng.normal(size=30)
    report = correlation_report(m, list(gold))
    for i, x in enumerate("abc"):
        assert report.rho(x, x) == 1.0
        assert abs(report.to_gold[x] - spearman(m.rows[:, i], gold)) < 1e-15
        for j, y in enumerate("abc"):
            assert report.rho(x, y) == report.rho(y, x)
            assert abs(report.rho(x, y) - spearman(m.rows[:, i], m.rows[:, j])) < 1e-15


def test_correlation_report_duplicate_column_and_gold_feature():
    rng = np.random.default_rng(1)
    col = rng.normal(size=20)
    m = matrix(np.column_stack([col, col, rng.normal(size=20)]), names=["a", "a_copy", "b"])
    report = correlation_report(m, list(col))
    assert report.rho("a", "a_copy") == 1.0
    assert report.to_gold["a"] == 1.0


def test_correlation_report_tsv_outputs(tmp_path):
    m = matrix([[1.0, 2.0], [2.0, 1.0], [3.0, 3.0]], names=["x", "y"])
    report = correlation_report(m, [1.0, 2.0, 3.0])
    matrix_path = tmp_path / "matrix.tsv"
    gold_path = tmp_path / "gold.tsv"
    report.write_matrix_tsv(matrix_path)
    report.write_to_gold_tsv(gold_path)
    lines = matrix_path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "metric\tx\ty"
    assert lines[1].startswith("x\t1.000000\t")
    lines = gold_path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "metric\tspearman_to_gold"
    assert lines[1] == "x\t1.000000"


def test_correlation_report_alignment_error():
    with pytest.raises(ValueError):
        correlation_report(matrix(np.zeros((3, 1))), [1.0, 2.0])


# ---------------------------------------------------------------------------
# ablation
# ---------------------------------------------------------------------------


def ablation_fixture(rng, n=60):
    signal = rng.normal(size=n)
    noise = rng.normal(size=n)
    rows = np.column_stack([signal, signal, noise])
    names = ["f_copy", "f_signal", "f_noise"]
    gold = signal + 0.1 * rng.normal(size=n)
    train = matrix(rows[: n // 2], names=names)
    test = matrix(rows[n // 2 :], names=names)
    return train, test, list(gold[: n // 2]), list(gold[n // 2 :])


def test_ablation_two_features_curve_shape():
    rng = np.random.default_rng(2)
    train, test, gold_train, gold_test = ablation_fixture(rng)
    curve = ablation(
        train.select(["f_signal", "f_noise"]),
        test.select(["f_signal", "f_noise"]),
        gold_train,
        gold_test,
        seed=1,
    )
    assert [s.step for s in curve.steps] == [0, 1]
    assert curve.steps[0].eliminated is None
    assert curve.steps[0].remaining_count == 2
    assert curve.steps[1].remaining_count == 1
    for a, b in zip(curve.steps, curve.steps[1:]):
        assert b.remaining_count == a.remaining_count - 1


def test_ablation_drops_duplicate_before_noise():
    rng = np.random.default_rng(3)
    train, test, gold_train, gold_test = ablation_fixture(rng)
    curve = ablation(train, test, gold_train, gold_test, seed=1)
    # the rho=1 duplicate pair dominates; lexicographic tie-break picks f_copy
    assert curve.steps[1].eliminated == "f_copy"
    assert curve.steps[2].eliminated == "f_noise"
    assert [s.remaining_count for s in curve.steps] == [3, 2, 1]
    # the single survivor is the signal, so the last rho stays high
    assert curve.steps[-1].test_rho > 0.8


def test_ablation_order_matches_pairwise_table():
    # planted structure: a ~ b strongly, c ~ d moderately, everything else weak
    rng = np.random.default_rng(4)
    n = 80
    base1 = rng.normal(size=n)
    base2 = rng.normal(size=n)
    rows = np.column_stack(
        [
            base1,
            base1 + 0.05 * rng.normal(size=n),  # b: |rho| to a ~ 1
            base2,
            base2 + 0.6 * rng.normal(size=n),  # d: |rho| to c moderate
        ]
    )
    names = ["a", "b", "c", "d"]
    gold = list(base1 + base2)
    train = matrix(rows, names=names)
    test = matrix(rows, names=names)

    def strongest(remaining):
        cols = {x: train.rows[:, names.index(x)] for x in remaining}
        worst = {}
        for x in remaining:
            worst[x] = max(abs(spearman(cols[x], cols[y])) for y in remaining if y != x)
        top = max(worst.values())
        return min(x for x in remaining if worst[x] == top)

    expected = []
    remaining = list(names)
    while len(remaining) > 1:
        victim = strongest(remaining)
        expected.append(victim)
        remaining.remove(victim)

    curve = ablation(train, test, gold, gold, seed=7)
    assert [s.eliminated for s in curve.steps[1:]] == expected


def test_ablation_step_zero_equals_full_ensemble_rho():
    from mteval.ensemble import predict, select_model

    rng = np.random.default_rng(5)
    train, test, gold_train, gold_test = ablation_fixture(rng)
    curve = ablation(train, test, gold_train, gold_test, seed=9)
    model = select_model(train, gold_train, seed=9)
    want = spearman(predict(model, test), gold_test)
    assert curve.steps[0].test_rho == want


def test_ablation_is_deterministic():
    rng = np.random.default_rng(6)
    train, test, gold_train, gold_test = ablation_fixture(rng)
    a = ablation(train, test, gold_train, gold_test, seed=3)
    b = ablation(train, test, gold_train, gold_test, seed=3)
    assert [(s.step, s.eliminated, s.remaining_count, s.test_rho) for s in a.steps] == [
        (s.step, s.eliminated, s.remaining_count, s.test_rho) for s in b.steps
    ]


def test_ablation_needs_two_features():
    rng = np.random.default_rng(7)
    train, test, gold_train, gold_test = ablation_fixture(rng)
    with pytest.raises(ValueError):
        ablation(train.select(["f_signal"]), test.select(["f_signal"]), gold_train, gold_test, seed=1)


def test_ablation_csv_format(tmp_path):
    rng = np.random.default_rng(8)
    train, test, gold_train, gold_test = ablation_fixture(rng)
    curve = ablation(train, test, gold_train, gold_test, seed=2)
    path = tmp_path / "ablation.csv"
    curve.write_csv(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "step,eliminated,remaining,test_rho"
    assert lines[1].startswith("0,,3,")
    assert len(lines) == 1 + len(curve.steps)


# ---------------------------------------------------------------------------
# dataset-level evaluation
# ---------------------------------------------------------------------------

WP = WordPieceVocab(entries=("[UNK]", "the", "dog", "runs", "der", "hund"))


def make_dataset(name, n, rng, gold=None):
    segments = []
    for i in range(n):
        hyp = "the dog" + " runs" * (1 + i % 4)
        ref = "the dog" + " runs" * (1 + i % 3)
        segments.append(
            Segment(
                id=f"{name}-{i}",
                src_lang="de",
                tgt_lang="en",
                source=f"der hund {i}",
                reference=ref,
                hypothesis=hyp,
                judgements=(float(gold[i]) if gold is not None else float(rng.normal()),),
            )
        )
    return Dataset(segments=segments, name=name)


def external_feature(dataset, values):
    return {segment.id: float(v) for segment, v in zip(dataset.segments, values)}


def test_evaluate_dataset_reports_both_ensembles():
    rng = np.random.default_rng(9)
    n = 40
    f1 = rng.normal(size=n)
    dataset = make_dataset("wmt", n, rng, gold=2.0 * f1)
    config = MetricConfig(mode="reference_based", metrics=("bleu",))
    resources = Resources(wp_vocab=WP, external={"f1": external_feature(dataset, f1)})
    result = evaluate_dataset(dataset, config, resources, seed=4)
    names = result.report.names
    assert names[-2:] == ["RegEMT", "Reg-base"]
    assert "bleu" in names and "f1" in names
    assert set(REG_BASE_FEATURES) <= set(names)
    assert result.n_train + result.n_test == n
    assert result.regemt_kind in ("linear", "mlp")
    # gold is exactly 2*f1, so the ensemble must rank the test split perfectly
    assert result.report.to_gold["f1"] == 1.0
    assert result.report.to_gold["RegEMT"] == 1.0


def test_evaluate_dataset_requires_reg_base():
    rng = np.random.default_rng(10)
    dataset = make_dataset("wmt", 10, rng)
    config = MetricConfig(mode="reference_based", metrics=("bleu",), reg_base=False)
    with pytest.raises(ConfigError, match="reg_base"):
        evaluate_dataset(dataset, config, Resources(wp_vocab=WP), seed=1)


def test_cross_lingual_degenerate_transfer_equals_in_domain():
    from mteval.ensemble import predict, select_model
    from mteval.pipeline import dataset_features

    rng = np.random.default_rng(11)
    n = 30
    f1 = rng.normal(size=n)
    dataset = make_dataset("pair", n, rng, gold=f1 + 0.2 * rng.normal(size=n))
    config = MetricConfig(mode="reference_based", metrics=("bleu",))
    resources = Resources(wp_vocab=WP, external={"f1": external_feature(dataset, f1)})
    got = cross_lingual_eval(dataset, dataset, config, resources, resources, seed=6)
    split = dataset_features(dataset, config, resources, seed=6)
    model = select_model(split.train, split.gold_train, seed=6, sources=split.train_sources)
    want = float(spearman(predict(model, split.test), split.gold_test))
    assert got == want


def test_cross_lingual_gold_equals_shared_feature():
    rng = np.random.default_rng(12)
    f_fit = rng.normal(size=30)
    f_eval = rng.normal(size=24)
    fit_ds = make_dataset("fit", 30, rng, gold=3.0 * f_fit)
    eval_ds = make_dataset("eval", 24, rng, gold=5.0 * f_eval)
    config = MetricConfig(mode="reference_based", metrics=("bleu",), reg_base=False)
    fit_res = Resources(wp_vocab=WP, external={"f1": external_feature(fit_ds, f_fit)})
    eval_res = Resources(wp_vocab=WP, external={"f1": external_feature(eval_ds, f_eval)})
    rho = cross_lingual_eval(fit_ds, eval_ds, config, fit_res, eval_res, seed=2)
    assert rho == 1.0
