import math

import numpy as np
import pytest

from mteval.corpus import Dataset, Segment
from mteval.ensemble import FeatureMatrix
from mteval.errors import ConfigError, DataError
from mteval.metrics import REG_BASE_FEATURES, MetricConfig, MetricVector, Resources
from mteval.pipeline import (
    assemble_features,
    build_resources,
    dataset_features,
    load_external_scores,
    score_features,
)

METRIC_SET = (
    "scm",
    "scm_tfidf",
    "wmd",
    "wmd_tfidf",
    "scm_decontextualized",
    "wmd_decontextualized",
    "wmd_contextual",
    "wmd_contextual_tfidf",
    "bleu",
)


def make_dataset(n=6, oov_hypothesis_at=None):
    segments = []
    for i in range(n):
        hyp = "the dog" + " runs" * (1 + i % 3)
        if i == oov_hypothesis_at:
            hyp = "cat cat"
        segments.append(
            Segment(
                id=f"seg{i}",
                src_lang="de",
                tgt_lang="en",
                source=f"der hund w{i}",
                reference="the dog" + " runs" * (1 + i % 2),
                hypothesis=hyp,
                judgements=(float(i % 4) - 1.5, float(i % 3)),
            )
        )
    return Dataset(segments=segments, name="tiny")


def token_vector(token):
    return np.array([float(sum(map(ord, token)) % 7), float(len(token))])


def write_inputs(tmp_path, dataset):
    static = tmp_path / "static.txt"
    words = sorted({w for s in dataset.segments for w in (s.reference + " " + s.hypothesis).split() if w != "cat"})
    lines = [f"{len(words)} 2"]
    lines += [f"{w} {token_vector(w)[0]} {token_vector(w)[1]}" for w in words]
    static.write_text("\n".join(lines) + "\n", encoding="utf-8")

    vocab = tmp_path / "vocab.txt"
    pieces = sorted({w for s in dataset.segments for w in (s.source + " " + s.reference + " " + s.hypothesis).split()})
    vocab.write_text("\n".join(["[UNK]"] + pieces) + "\n", encoding="utf-8")

    ctx = tmp_path / "contextual.tsv"
    rng = np.random.default_rng(123)
    rows = ["segment_id\tside\ttoken_index\ttoken\tvector"]
    for segment in dataset.segments:
        for side, text in (("source", segment.source), ("reference", segment.reference), ("hypothesis", segment.hypothesis)):
            for i, token in enumerate(text.split()):
                vec = token_vector(token) + 0.05 * rng.normal(size=2)
                rows.append(f"{segment.id}\t{side}\t{i}\t{token}\t{vec[0]} {vec[1]}")
    ctx.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return static, ctx, vocab


@pytest.fixture
def tiny_run(tmp_path):
    dataset = make_dataset(oov_hypothesis_at=4)
    static, ctx, vocab = write_inputs(tmp_path, dataset)
    config = MetricConfig(mode="reference_based", metrics=METRIC_SET)
    resources = build_resources(
        config, dataset, static_path=static, contextual_path=ctx, wordpiece_vocab_path=vocab
    )
    return dataset, config, resources


def test_build_resources_populates_what_the_config_needs(tiny_run):
    dataset, config, resources = tiny_run
    assert resources.static_store is not None and resources.static_store.dim == 2
    assert resources.wp_vocab is not None
    assert resources.decon_store is not None
    assert resources.contextual_groups and resources.contextual_vocab is not None
    # one document per segment side: 6 segments x (source, reference, hypothesis)
    assert resources.vocab_words.n_docs == 18
    assert resources.vocab_pieces.n_docs == 18
    # contextual df unit is the (segment, side) record group
    assert resources.contextual_vocab.n_docs == 18
    assert set(resources.sims) == {
        ("words", "vocabulary"),
        ("words", "idf_descending"),
        ("pieces", "vocabulary"),
    }


def test_build_resources_reports_missing_paths_together():
    config = MetricConfig(mode="reference_based", metrics=("scm", "wmd_contextual"))
    with pytest.raises(ConfigError) as err:
        build_resources(config, make_dataset())
    message = str(err.value)
    assert "static_embeddings" in message
    assert "contextual_records" in message
    assert "wordpiece_vocab" in message


def test_score_features_shape_and_flags(tiny_run):
    dataset, config, resources = tiny_run
    features, flags, placeholders = score_features(dataset, config, resources)
    assert features.feature_names == list(METRIC_SET) + list(REG_BASE_FEATURES)
    assert features.segment_ids == [f"seg{i}" for i in range(6)]
    assert np.all(np.isfinite(features.rows))
    # the all-OOV hypothesis is unscorable for the static-embedding WMDs
    assert "wmd" in flags["seg4"] and "wmd_tfidf" in flags["seg4"]
    assert set(placeholders) == set(METRIC_SET)
    # distances fall back to the worst (largest) observed value
    wmd_col = features.rows[:, features.feature_names.index("wmd")]
    assert placeholders["wmd"] == max(wmd_col[i] for i in range(6) if i != 4)
    assert wmd_col[4] == placeholders["wmd"]


def test_score_features_deterministic_across_threads(tiny_run):
    dataset, config, resources = tiny_run
    single, flags1, _ = score_features(dataset, config, resources, threads=1)
    pooled, flags4, _ = score_features(dataset, config, resources, threads=4)
    assert np.array_equal(single.rows, pooled.rows)
    assert single.segment_ids == pooled.segment_ids
    assert flags1 == flags4


def test_dataset_features_placeholder_uses_train_worst_only(tiny_run):
    dataset, config, resources = tiny_run
    split = dataset_features(dataset, config, resources, seed=5)
    assert split.train.n + split.test.n == 6
    assert len(split.gold_train) == split.train.n
    assert len(split.train_sources) == split.train.n
    col = split.train.feature_names.index("wmd")
    train_vals = [
        split.train.rows[i, col]
        for i, sid in enumerate(split.train.segment_ids)
        if "wmd" not in split.flags.get(sid, {})
    ]
    assert split.placeholders["wmd"] == max(train_vals)
    # the worst train value, not the overall worst, fills the gaps
    flagged = [sid for sid, f in split.flags.items() if "wmd" in f]
    assert flagged == ["seg4"]
    for matrix in (split.train, split.test):
        for i, sid in enumerate(matrix.segment_ids):
            if sid in flagged:
                assert matrix.rows[i, col] == split.placeholders["wmd"]


def test_dataset_features_requires_judgements(tiny_run):
    dataset, config, resources = tiny_run
    bare = Dataset(
        segments=[
            Segment(id="a", src_lang="d", tgt_lang="e", source="x y", reference="x", hypothesis="x"),
            Segment(id="b", src_lang="d", tgt_lang="e", source="z w", reference="x", hypothesis="x"),
        ],
        name="bare",
    )
    with pytest.raises(DataError, match="judgements"):
        dataset_features(bare, MetricConfig(mode="reference_based", metrics=()), Resources(wp_vocab=resources.wp_vocab), seed=1)


# ---------------------------------------------------------------------------
# external score columns
# ---------------------------------------------------------------------------


def test_load_external_scores(tmp_path):
    path = tmp_path / "ext.tsv"
    path.write_text("segment_id\tcomet\tprism\nseg0\t0.5\t1.5\nseg1\t-0.25\t2.0\n", encoding="utf-8")
    scores = load_external_scores(path)
    assert list(scores) == ["comet", "prism"]
    assert scores["comet"]["seg1"] == -0.25


def test_load_external_scores_errors(tmp_path):
    path = tmp_path / "ext.tsv"
    path.write_text("id\tcomet\nseg0\t1.0\n", encoding="utf-8")
    with pytest.raises(DataError, match="segment_id"):
        load_external_scores(path)
    path.write_text("segment_id\n", encoding="utf-8")
    with pytest.raises(DataError, match="no feature columns"):
        load_external_scores(path)
    path.write_text("segment_id\ta\ta\nseg0\t1\t2\n", encoding="utf-8")
    with pytest.raises(DataError, match="duplicate feature"):
        load_external_scores(path)
    path.write_text("segment_id\tRegEMT\nseg0\t1\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="reserved"):
        load_external_scores(path)
    path.write_text("segment_id\ta\nseg0\toops\n", encoding="utf-8")
    with pytest.raises(DataError, match=":2:"):
        load_external_scores(path)
    path.write_text("segment_id\ta\nseg0\t1\nseg0\t2\n", encoding="utf-8")
    with pytest.raises(DataError, match="duplicate segment"):
        load_external_scores(path)


def test_external_columns_join_by_segment_id(tmp_path):
    dataset = make_dataset(n=3)
    _, _, vocab = write_inputs(tmp_path, dataset)
    ext = tmp_path / "ext.tsv"
    ext.write_text(
        "segment_id\tcomet\nseg2\t0.3\nseg0\t0.1\nseg1\t0.2\n", encoding="utf-8"
    )
    config = MetricConfig(mode="reference_based", metrics=("bleu",))
    resources = build_resources(config, dataset, wordpiece_vocab_path=vocab, external_scores_path=ext)
    features, _, _ = score_features(dataset, config, resources)
    col = features.feature_names.index("comet")
    assert features.rows[:, col].tolist() == [0.1, 0.2, 0.3]


def test_external_column_missing_segment_is_an_error(tmp_path):
    dataset = make_dataset(n=3)
    _, _, vocab = write_inputs(tmp_path, dataset)
    ext = tmp_path / "ext.tsv"
    ext.write_text("segment_id\tcomet\nseg0\t0.1\nseg1\t0.2\n", encoding="utf-8")
    config = MetricConfig(mode="reference_based", metrics=("bleu",))
    resources = build_resources(config, dataset, wordpiece_vocab_path=vocab, external_scores_path=ext)
    with pytest.raises(DataError, match="seg2"):
        score_features(dataset, config, resources)


def test_external_column_name_collision_with_native(tmp_path):
    dataset = make_dataset(n=3)
    _, _, vocab = write_inputs(tmp_path, dataset)
    ext = tmp_path / "ext.tsv"
    ext.write_text("segment_id\tbleu\nseg0\t0.1\nseg1\t0.2\nseg2\t0.3\n", encoding="utf-8")
    config = MetricConfig(mode="reference_based", metrics=("bleu",))
    with pytest.raises(ConfigError, match="collide"):
        build_resources(config, dataset, wordpiece_vocab_path=vocab, external_scores_path=ext)


def test_assemble_features_needs_some_feature():
    dataset = make_dataset(n=2)
    config = MetricConfig(mode="reference_based", metrics=(), reg_base=False)
    vectors = [MetricVector(segment_id=s.id, scores={}) for s in dataset.segments]
    with pytest.raises(ConfigError, match="no features"):
        assemble_features(dataset, config, Resources(), vectors)
