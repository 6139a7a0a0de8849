"""Segment-level translation quality metrics.

Implements the soft cosine measure and word mover's distance over static,
decontextualized, and contextual token vectors (with raw-tf and tf-idf
weightings), a part-of-speech transition metric, sentence BLEU, and the
four surface length features behind the Reg-base baseline.  `score_segment`
dispatches all of them for one segment under a `MetricConfig`.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from mteval.corpus import Segment
from mteval.embeddings import ContextualRecord, EmbeddingStore
from mteval.errors import ConfigError, DataError
from mteval.flow import FlowSolution, solve_transport
from mteval.tokenization import WordPieceVocab, whitespace_tokenize, wordpiece_tokenize
from mteval.vsm import SimilarityMatrix, Vocabulary, WeightedBow, bow_nfx, bow_nnx

__all__ = [
    "EMPTY_BOW_FLAG",
    "FlowSolution",
    "METRICS",
    "MetricConfig",
    "MetricInfo",
    "MetricVector",
    "REG_BASE_FEATURES",
    "Resources",
    "TransitionMatrix",
    "UnscorableSegment",
    "compositionality",
    "compute_placeholders",
    "needed_similarity_keys",
    "reg_base_features",
    "scm",
    "score_segment",
    "sentence_bleu",
    "transition_graph",
    "validate_resources",
    "wmd",
    "wmd_contextual",
]

MODES = ("reference_based", "source_based")

EMPTY_BOW_FLAG = "empty bag of words"

#: Names of the four surface features consumed by the Reg-base ensemble.
#: "anchor" is the reference in reference_based mode and the source in
#: source_based mode.
REG_BASE_FEATURES = (
    "reg_chars_anchor",
    "reg_chars_hypothesis",
    "reg_pieces_anchor",
    "reg_pieces_hypothesis",
)


class UnscorableSegment(DataError):
    """A metric cannot produce a score for this segment (e.g. all terms OOV).

    Callers substitute the configured placeholder value and record a flag.
    """


@dataclass(frozen=True)
class MetricInfo:
    """Static facts about one registered metric."""

    higher_is_better: bool
    reference_only: bool  # disallowed in source_based mode
    resources: frozenset[str]  # of: static, contextual, wordpiece, pos


#: Registry of every scoreable metric: direction, mode restrictions, and
#: which loaded resources it needs.
METRICS: dict[str, MetricInfo] = {
    "scm": MetricInfo(True, True, frozenset({"static"})),
    "scm_tfidf": MetricInfo(True, True, frozenset({"static"})),
    "wmd": MetricInfo(False, True, frozenset({"static"})),
    "wmd_tfidf": MetricInfo(False, True, frozenset({"static"})),
    "scm_decontextualized": MetricInfo(True, False, frozenset({"contextual", "wordpiece"})),
    "scm_decontextualized_tfidf": MetricInfo(True, False, frozenset({"contextual", "wordpiece"})),
    "wmd_decontextualized": MetricInfo(False, False, frozenset({"contextual", "wordpiece"})),
    "wmd_decontextualized_tfidf": MetricInfo(False, False, frozenset({"contextual", "wordpiece"})),
    "wmd_contextual": MetricInfo(False, False, frozenset({"contextual"})),
    "wmd_contextual_tfidf": MetricInfo(False, False, frozenset({"contextual"})),
    "compositionality": MetricInfo(False, False, frozenset({"pos"})),
    "bleu": MetricInfo(True, True, frozenset()),
}


@dataclass(frozen=True)
class MetricConfig:
    """Which metrics to compute and how.

    source_based mode admits only metrics that stay meaningful across
    languages: the decontextualized and contextual variants,
    compositionality, and the Reg-base surface features.  Static-embedding
    SCM/WMD and BLEU compare the hypothesis to a same-language reference
    and are rejected there.
    """

    mode: str
    metrics: tuple[str, ...]
    reg_base: bool = True
    lowercase: bool = False
    compositionality_full_matrix: bool = False
    similarity_threshold: float = 0.1
    similarity_exponent: float = 2.0
    similarity_top_k: int = 100

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        seen = set()
        for name in self.metrics:
            if name not in METRICS:
                raise ConfigError(f"unknown metric {name!r}; known: {', '.join(sorted(METRICS))}")
            if name in seen:
                raise ConfigError(f"metric {name!r} enabled twice")
            seen.add(name)
            if self.mode == "source_based" and METRICS[name].reference_only:
                raise ConfigError(f"metric {name!r} needs a same-language reference and cannot run source_based")
        if self.similarity_top_k < 1:
            raise ConfigError("similarity_top_k must be >= 1")

    @property
    def anchor_side(self) -> str:
        return "reference" if self.mode == "reference_based" else "source"


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-normalized directed PoS-transition probabilities of one text."""

    tags: tuple[str, ...]
    probs: np.ndarray

    def __post_init__(self) -> None:
        k = len(self.tags)
        if self.probs.shape != (k, k):
            raise ValueError(f"probs shape {self.probs.shape} does not match {k} tags")
        if np.any(self.probs < 0) or np.any(self.probs > 1 + 1e-12):
            raise ValueError("transition probabilities must lie in [0, 1]")
        row_sums = self.probs.sum(axis=1)
        bad = ~(np.isclose(row_sums, 1.0) | (row_sums == 0.0))
        if np.any(bad):
            raise ValueError("each row must sum to 1 (or be all-zero)")

    def self_prob(self, tag: str) -> float:
        """Self-transition probability of ``tag``; 0 for tags not in this text."""
        try:
            i = self.tags.index(tag)
        except ValueError:
            return 0.0
        return float(self.probs[i, i])


@dataclass
class MetricVector:
    """All configured metric scores of one segment.

    ``flags`` records, per metric, why a score is degenerate: either the
    empty-bag-of-words zero or an unscorable segment that received the
    placeholder value.
    """

    segment_id: str
    scores: dict[str, float]
    flags: dict[str, str] = field(default_factory=dict)


@dataclass
class Resources:
    """Loaded artifacts the configured metrics draw on.

    ``sims`` is keyed by (term space, processing order) with term space
    "words" (whitespace tokens + static vectors) or "pieces" (WordPiece
    tokens + decontextualized vectors) and order "vocabulary" or
    "idf_descending".  ``contextual_vocab`` carries document frequencies of
    token strings over the contextual record file, one document per
    (segment, side) group.
    """

    static_store: EmbeddingStore | None = None
    wp_vocab: WordPieceVocab | None = None
    decon_store: EmbeddingStore | None = None
    contextual_groups: dict[tuple[str, str], list[ContextualRecord]] | None = None
    contextual_vocab: Vocabulary | None = None
    vocab_words: Vocabulary | None = None
    vocab_pieces: Vocabulary | None = None
    sims: dict[tuple[str, str], SimilarityMatrix] = field(default_factory=dict)
    external: dict[str, dict[str, float]] = field(default_factory=dict)


def scm(x: WeightedBow, y: WeightedBow, matrix: SimilarityMatrix) -> float:
    """Soft cosine measure x^T S y / (sqrt(x^T S x) * sqrt(y^T S y)).

    An empty side yields the defined score 0.0 (the caller flags it); equal
    bags short-circuit to exactly 1.0.
    """
    if x.is_zero() or y.is_zero():
        return 0.0
    if x.entries == y.entries:
        return 1.0
    num = _soft_quadratic(x, y, matrix)
    denom = math.sqrt(_soft_quadratic(x, x, matrix)) * math.sqrt(_soft_quadratic(y, y, matrix))
    if denom <= 0.0:
        return 0.0
    return num / denom


def _soft_quadratic(x: WeightedBow, y: WeightedBow, matrix: SimilarityMatrix) -> float:
    """x^T S y over the sparse entries (implicit unit diagonal included)."""
    terms = []
    for i, wx in x.entries.items():
        wy = y.entries.get(i)
        if wy is not None:
            terms.append(wx * wy)
        row = matrix.rows.get(i)
        if row:
            for j, s in row.items():
                wy = y.entries.get(j)
                if wy is not None:
                    terms.append(wx * s * wy)
    return math.fsum(terms)


def wmd(x: WeightedBow, y: WeightedBow, store: EmbeddingStore, vocab: Vocabulary) -> float:
    """Word mover's distance: exact optimum of the transportation problem.

    Both sides are l1-normalized after dropping zero-weight terms and terms
    without an embedding; pairwise Euclidean distances between term vectors
    are the transport costs.
    """
    ix, wx = _embedded_terms(x, store, vocab)
    iy, wy = _embedded_terms(y, store, vocab)
    if not ix:
        raise UnscorableSegment("first side has no embedded terms with positive weight")
    if not iy:
        raise UnscorableSegment("second side has no embedded terms with positive weight")
    ex = np.stack([store[vocab.terms[i]] for i in ix])
    ey = np.stack([store[vocab.terms[i]] for i in iy])
    return _transport_cost(np.asarray(wx), np.asarray(wy), ex, ey)


def _embedded_terms(bow: WeightedBow, store: EmbeddingStore, vocab: Vocabulary):
    indices = []
    weights = []
    for i in sorted(bow.entries):
        w = bow.entries[i]
        if w > 0 and vocab.terms[i] in store:
            indices.append(i)
            weights.append(w)
    return indices, weights


def _transport_cost(wx: np.ndarray, wy: np.ndarray, ex: np.ndarray, ey: np.ndarray) -> float:
    if ex.shape[1] != ey.shape[1]:
        raise DataError(f"embedding dimensions differ between sides: {ex.shape[1]} vs {ey.shape[1]}")
    a = wx / wx.sum()
    b = wy / wy.sum()
    diff = ex[:, None, :] - ey[None, :, :]
    costs = np.sqrt((diff * diff).sum(axis=2))
    return solve_transport(a, b, costs).cost


def wmd_contextual(
    records_x: list[ContextualRecord],
    records_y: list[ContextualRecord],
    weighting: str = "nnx",
    vocab: Vocabulary | None = None,
) -> float:
    """WMD with every token occurrence as its own flow node.

    nnx weights each occurrence 1; nfx weights it by the idf of its token
    string (``vocab`` required, built from the contextual record file).
    """
    if weighting not in ("nnx", "nfx"):
        raise ValueError(f"unknown weighting {weighting!r}")
    if weighting == "nfx" and vocab is None:
        raise ValueError("nfx weighting needs a vocabulary for idf")
    if not records_x:
        raise UnscorableSegment("first side has no contextual vectors")
    if not records_y:
        raise UnscorableSegment("second side has no contextual vectors")

    def parts(records):
        if weighting == "nnx":
            kept = list(records)
            weights = [1.0] * len(kept)
        else:
            kept, weights = [], []
            for record in records:
                w = vocab.idf(record.token)
                if w > 0:
                    kept.append(record)
                    weights.append(w)
        return kept, weights

    kx, wx = parts(records_x)
    ky, wy = parts(records_y)
    if not kx or not ky:
        raise UnscorableSegment("all occurrence weights are zero under nfx")
    ex = np.stack([r.vector for r in kx])
    ey = np.stack([r.vector for r in ky])
    return _transport_cost(np.asarray(wx), np.asarray(wy), ex, ey)


def transition_graph(pos_tags: list[str]) -> TransitionMatrix:
    """Count directed adjacent-tag transitions, then row-normalize."""
    if not pos_tags:
        raise ValueError("cannot build a transition graph from an empty tag list")
    tags: list[str] = []
    index: dict[str, int] = {}
    for tag in pos_tags:
        if tag not in index:
            index[tag] = len(tags)
            tags.append(tag)
    counts = np.zeros((len(tags), len(tags)))
    for a, b in zip(pos_tags, pos_tags[1:]):
        counts[index[a], index[b]] += 1.0
    sums = counts.sum(axis=1, keepdims=True)
    probs = np.divide(counts, sums, out=np.zeros_like(counts), where=sums > 0)
    return TransitionMatrix(tags=tuple(tags), probs=probs)


def compositionality(x: TransitionMatrix, y: TransitionMatrix, full_matrix: bool = False) -> float:
    """l1 distance of self-transition probabilities over the union tag set.

    ``full_matrix`` switches to the l1 distance of the complete transition
    matrices instead of just their diagonals.
    """
    union = list(x.tags) + [t for t in y.tags if t not in x.tags]
    if not full_matrix:
        return math.fsum(abs(x.self_prob(t) - y.self_prob(t)) for t in union)
    return float(np.abs(_embed(x, union) - _embed(y, union)).sum())


def _embed(matrix: TransitionMatrix, union: list[str]) -> np.ndarray:
    out = np.zeros((len(union), len(union)))
    positions = [union.index(t) for t in matrix.tags]
    for a, pa in enumerate(positions):
        for b, pb in enumerate(positions):
            out[pa, pb] = matrix.probs[a, b]
    return out


def sentence_bleu(reference_tokens: list[str], hypothesis_tokens: list[str], max_n: int = 4) -> float:
    """Sentence BLEU: clipped n-gram precisions with add-one smoothing (n >= 2).

    Geometric mean of precisions for n = 1..max_n times the brevity penalty
    min(1, e^(1 - r/h)).  An empty hypothesis or zero unigram overlap is 0.
    """
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    h = len(hypothesis_tokens)
    if h == 0:
        return 0.0
    r = len(reference_tokens)
    log_precisions = 0.0
    for n in range(1, max_n + 1):
        hyp_counts = Counter(_ngrams(hypothesis_tokens, n))
        ref_counts = Counter(_ngrams(reference_tokens, n))
        total = max(h - n + 1, 0)
        clipped = sum(min(count, ref_counts[gram]) for gram, count in hyp_counts.items())
        if n == 1:
            if clipped == 0:
                return 0.0
            precision = clipped / total
        else:
            precision = (clipped + 1) / (total + 1)
        log_precisions += math.log(precision)
    brevity = min(1.0, math.exp(1.0 - r / h))
    return brevity * math.exp(log_precisions / max_n)


def _ngrams(tokens: list[str], n: int):
    return (tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def reg_base_features(
    segment: Segment, vocab: WordPieceVocab, mode: str, lowercase: bool = False
) -> np.ndarray:
    """Four surface features: character lengths and WordPiece counts.

    Order matches REG_BASE_FEATURES: anchor chars, hypothesis chars, anchor
    piece count, hypothesis piece count, where the anchor is the reference
    (reference_based) or the source (source_based).
    """
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}")
    if mode == "reference_based":
        if segment.reference is None:
            raise DataError(f"segment {segment.id!r} has no reference but mode is reference_based")
        anchor = segment.reference
    else:
        anchor = segment.source
    hyp = segment.hypothesis
    if lowercase:
        anchor_toks, hyp_toks = anchor.lower(), hyp.lower()
    else:
        anchor_toks, hyp_toks = anchor, hyp
    return np.array(
        [
            float(len(anchor)),
            float(len(hyp)),
            float(len(wordpiece_tokenize(anchor_toks, vocab))),
            float(len(wordpiece_tokenize(hyp_toks, vocab))),
        ]
    )


def validate_resources(config: MetricConfig, resources: Resources, segments: list[Segment]) -> None:
    """Check, before any scoring starts, that every enabled metric can run.

    All problems are collected and reported together in one ConfigError.
    """
    problems: list[str] = []
    needed: set[str] = set()
    for name in config.metrics:
        needed |= METRICS[name].resources
    if "static" in needed:
        if resources.static_store is None:
            problems.append("static embeddings required by: " + _needing(config, "static"))
        if resources.vocab_words is None:
            problems.append("word vocabulary missing (build it over the dataset before scoring)")
    if "wordpiece" in needed or config.reg_base:
        if resources.wp_vocab is None:
            wanting = _needing(config, "wordpiece")
            label = wanting + " and reg_base" if wanting and config.reg_base else (wanting or "reg_base")
            problems.append("wordpiece vocabulary required by: " + label)
    if "contextual" in needed:
        if resources.contextual_groups is None:
            problems.append("contextual record file required by: " + _needing(config, "contextual"))
        if any(m.startswith(("scm_decontextualized", "wmd_decontextualized")) for m in config.metrics):
            if resources.decon_store is None:
                problems.append("decontextualized store missing (derive it from the contextual records)")
            if resources.vocab_pieces is None:
                problems.append("piece vocabulary missing (build it over the dataset before scoring)")
    for key in needed_similarity_keys(config):
        if key not in resources.sims:
            problems.append(f"similarity matrix for {key[0]} terms in {key[1]} order not built")
    if any(m.startswith("wmd_contextual") and m.endswith("_tfidf") for m in config.metrics):
        if resources.contextual_vocab is None:
            problems.append("contextual token vocabulary missing (needed for wmd_contextual_tfidf idf)")
    if "compositionality" in config.metrics:
        anchor_field = "pos_reference" if config.mode == "reference_based" else "pos_source"
        for segment in segments:
            if getattr(segment, anchor_field) is None or segment.pos_hypothesis is None:
                problems.append(
                    f"segment {segment.id!r} lacks {anchor_field} or pos_hypothesis tags for compositionality"
                )
                break
    if config.mode == "reference_based":
        for segment in segments:
            if segment.reference is None:
                problems.append(f"segment {segment.id!r} has no reference but mode is reference_based")
                break
    if problems:
        raise ConfigError("configuration problems:\n  - " + "\n  - ".join(problems))


def _needing(config: MetricConfig, resource: str) -> str:
    return ", ".join(m for m in config.metrics if resource in METRICS[m].resources)


def needed_similarity_keys(config: MetricConfig) -> set[tuple[str, str]]:
    """(term space, processing order) pairs the enabled SCM variants require."""
    keys = set()
    for name in config.metrics:
        if name == "scm":
            keys.add(("words", "vocabulary"))
        elif name == "scm_tfidf":
            keys.add(("words", "idf_descending"))
        elif name == "scm_decontextualized":
            keys.add(("pieces", "vocabulary"))
        elif name == "scm_decontextualized_tfidf":
            keys.add(("pieces", "idf_descending"))
    return keys


def compute_placeholders(vectors: list[MetricVector], metric_names: list[str]) -> dict[str, float]:
    """Worst observed value per metric, for substituting unscorable segments.

    "Worst" follows the metric's direction: the minimum for
    higher-is-better metrics, the maximum for distances.  Metrics with no
    scorable segment at all fall back to 0.0.
    """
    placeholders: dict[str, float] = {}
    for name in metric_names:
        observed = [v.scores[name] for v in vectors if not math.isnan(v.scores[name])]
        if not observed:
            placeholders[name] = 0.0
        elif METRICS[name].higher_is_better:
            placeholders[name] = min(observed)
        else:
            placeholders[name] = max(observed)
    return placeholders


def score_segment(
    segment: Segment,
    config: MetricConfig,
    resources: Resources,
    placeholders: dict[str, float] | None = None,
) -> MetricVector:
    """Compute every enabled metric for one segment.

    Unscorable metrics score NaN (or the given placeholder) and carry a
    flag naming the reason; resource completeness is the caller's
    responsibility via validate_resources.
    """
    scores: dict[str, float] = {}
    flags: dict[str, str] = {}
    anchor_text = segment.reference if config.mode == "reference_based" else segment.source
    if anchor_text is None:
        raise DataError(f"segment {segment.id!r} has no reference but mode is reference_based")
    for name in config.metrics:
        try:
            value, flag = _compute_metric(name, segment, anchor_text, config, resources)
            if flag is not None:
                flags[name] = flag
        except UnscorableSegment as exc:
            flags[name] = str(exc)
            value = placeholders[name] if placeholders is not None and name in placeholders else float("nan")
        scores[name] = value
    return MetricVector(segment_id=segment.id, scores=scores, flags=flags)


def _compute_metric(
    name: str, segment: Segment, anchor_text: str, config: MetricConfig, resources: Resources
) -> tuple[float, str | None]:
    if name == "bleu":
        return (
            sentence_bleu(_words(anchor_text, config), _words(segment.hypothesis, config)),
            None,
        )
    if name == "compositionality":
        anchor_tags = segment.pos_reference if config.mode == "reference_based" else segment.pos_source
        if anchor_tags is None or segment.pos_hypothesis is None:
            raise UnscorableSegment("missing PoS tags")
        value = compositionality(
            transition_graph(list(anchor_tags)),
            transition_graph(list(segment.pos_hypothesis)),
            full_matrix=config.compositionality_full_matrix,
        )
        return value, None
    if name.startswith("wmd_contextual"):
        groups = resources.contextual_groups or {}
        rx = groups.get((segment.id, config.anchor_side), [])
        ry = groups.get((segment.id, "hypothesis"), [])
        weighting = "nfx" if name.endswith("_tfidf") else "nnx"
        return wmd_contextual(rx, ry, weighting, resources.contextual_vocab), None

    # remaining metrics are bag-of-words: pick term space, weighting, store
    tfidf = name.endswith("_tfidf")
    if "decontextualized" in name:
        vocab = resources.vocab_pieces
        store = resources.decon_store
        space = "pieces"
        tokens_x = _pieces(anchor_text, config, resources)
        tokens_y = _pieces(segment.hypothesis, config, resources)
    else:
        vocab = resources.vocab_words
        store = resources.static_store
        space = "words"
        tokens_x = _words(anchor_text, config)
        tokens_y = _words(segment.hypothesis, config)
    assert vocab is not None and store is not None  # guaranteed by validate_resources
    make_bow = bow_nfx if tfidf else bow_nnx
    x = make_bow(tokens_x, vocab)
    y = make_bow(tokens_y, vocab)
    if name.startswith("scm"):
        order = "idf_descending" if tfidf else "vocabulary"
        matrix = resources.sims[(space, order)]
        if x.is_zero() or y.is_zero():
            return 0.0, EMPTY_BOW_FLAG
        return scm(x, y, matrix), None
    return wmd(x, y, store, vocab), None


def _words(text: str, config: MetricConfig) -> list[str]:
    return whitespace_tokenize(text.lower() if config.lowercase else text)


def _pieces(text: str, config: MetricConfig, resources: Resources) -> list[str]:
    assert resources.wp_vocab is not None
    return wordpiece_tokenize(text.lower() if config.lowercase else text, resources.wp_vocab)
