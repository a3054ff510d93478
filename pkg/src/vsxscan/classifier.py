"""Credential-vs-normal text classification for extracted data points.

The reference model is a lexicon plus a linear model over word and
character n-gram features, trained by class-weighted gradient descent on
a cross-entropy objective. The lexicon contributes a fixed offset to the
logit both during training and at prediction time, so a freshly
initialized model already flags unmistakable terms ("password",
"apikey") while the trained weights handle everything contextual.

The surface (featurize / train / classify / evaluate, plus a flat
versioned serialization) is what a heavier neural backend would have to
match to drop in.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .datapoints import DataPoint, SourceLocation, VectorKind
from .errors import EmptyDataset, EmptyText, SingleClassData

MODEL_FORMAT_VERSION = 1

# Initial logit bias: without evidence, a text is presumed normal.
PRIOR_BIAS = -1.0

_CAMEL_SPLIT = re.compile(r"(?<=[a-z0-9])(?=[A-Z])|(?<=[A-Z])(?=[A-Z][a-z])")
_NON_ALNUM = re.compile(r"[^0-9a-zA-Z]+")


class Label(Enum):
    CREDENTIAL_RELATED = "CredentialRelated"
    NORMAL = "Normal"


@dataclass(frozen=True)
class LabeledDataPoint:
    point: DataPoint
    label: Label


@dataclass(frozen=True)
class FeaturizerConfig:
    char_ngram_sizes: tuple[int, ...] = (3, 4)
    lowercase: bool = True
    # Raw counts beat L2-normalized ones here: key texts are short, and
    # normalizing lets unseen surrounding tokens dilute decisive terms.
    l2_normalize: bool = False
    include_raw: bool = True
    include_vector: bool = True


# Terms that must flag on their own, and deliberately down-weighted vague
# terms that only contribute alongside other evidence.
DEFAULT_MUST_FLAG = {
    "password": 4.0,
    "passwd": 4.0,
    "pwd": 4.0,
    "apikey": 4.0,
    "api-key": 4.0,
    "api_key": 4.0,
    "secret": 4.0,
    "credential": 4.0,
    "accesstoken": 4.0,
    "access-token": 4.0,
    "auth-token": 4.0,
    "privatekey": 4.0,
    "client-secret": 4.0,
}
DEFAULT_AMBIGUOUS = {
    "token": 0.5,
    "key": 0.5,
    "auth": 0.5,
}


@dataclass(frozen=True)
class Lexicon:
    must_flag: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_MUST_FLAG))
    ambiguous: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_AMBIGUOUS))

    def score(self, text: str) -> float:
        squashed = re.sub(r"[^0-9a-z]", "", text.lower())
        tokens = set(tokenize(text))
        total = 0.0
        for term, weight in self.must_flag.items():
            if re.sub(r"[^0-9a-z]", "", term) in squashed:
                total += weight
        for term, weight in self.ambiguous.items():
            if term in tokens:
                total += weight
        return total


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens split on separators and camelCase bounds.

    A camelCase word also contributes its joined lowercase form, so
    "ApiKey" yields "api", "key", and "apikey"; the joined form is what
    shows up in exposed-token rankings.
    """
    tokens: list[str] = []
    for word in _NON_ALNUM.split(text):
        if not word:
            continue
        parts = [p for p in _NON_ALNUM.split(_CAMEL_SPLIT.sub(" ", word).lower()) if p]
        tokens.extend(parts)
        if len(parts) > 1:
            tokens.append(word.lower())
    return tokens


def featurize(point: DataPoint, config: FeaturizerConfig | None = None) -> list[str]:
    """The normalized token stream for one data point.

    Word tokens come first; the original raw text and the vector kind are
    appended as single categorical fields.
    """
    config = config or FeaturizerConfig()
    tokens = tokenize(point.text)
    if not tokens and not point.text.strip():
        raise EmptyText(f"data point has no text ({point.vector.value})")
    features = list(tokens)
    if config.include_raw:
        features.append(f"raw={point.text.strip()}")
    if config.include_vector:
        features.append(f"vec={point.vector.value}")
    return features


def _point_features(point: DataPoint, config: FeaturizerConfig) -> list[str]:
    tokens = tokenize(point.text)
    features = [f"w:{t}" for t in tokens]
    joined = " ".join(tokens)
    for size in config.char_ngram_sizes:
        if size <= 0:
            continue
        for i in range(len(joined) - size + 1):
            features.append(f"c:{joined[i:i + size]}")
    if config.include_raw:
        raw = point.text.strip()
        features.append(f"r:{raw.lower() if config.lowercase else raw}")
    if config.include_vector:
        features.append(f"v:{point.vector.value}")
    return features


@dataclass
class ClassifierModel:
    lexicon: Lexicon
    vocabulary: dict[str, int]
    weights: np.ndarray
    bias: float
    class_weights: tuple[float, float]
    threshold: float = 0.5
    featurizer: FeaturizerConfig = field(default_factory=FeaturizerConfig)
    # Per-epoch training loss; diagnostic only, not serialized.
    loss_history: list[float] = field(default_factory=list, repr=False)

    @staticmethod
    def default(lexicon: Lexicon | None = None) -> "ClassifierModel":
        """The untrained lexicon-only model."""
        return ClassifierModel(
            lexicon=lexicon or Lexicon(),
            vocabulary={},
            weights=np.zeros(0, dtype=np.float64),
            bias=PRIOR_BIAS,
            class_weights=(0.01, 0.1),
        )


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 500
    learning_rate: float = 2.0
    seed: int = 0
    # Quoted verbatim defaults; the assignment under-weights the minority
    # class, so it is deliberately configuration-exposed.
    class_weights: tuple[float, float] = (0.01, 0.1)
    threshold: float = 0.5
    featurizer: FeaturizerConfig = field(default_factory=FeaturizerConfig)
    lexicon: Lexicon = field(default_factory=Lexicon)


@dataclass
class EvalMetrics:
    tp: int
    fp: int
    tn: int
    fn: int
    accuracy: float
    f1: float
    true_positive_rate: float
    true_negative_rate: float
    degenerate: tuple[str, ...] = ()


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -35.0, 35.0)))


def _vectorize(model: ClassifierModel, point: DataPoint) -> np.ndarray:
    x = np.zeros(len(model.vocabulary), dtype=np.float64)
    for feature in _point_features(point, model.featurizer):
        idx = model.vocabulary.get(feature)
        if idx is not None:
            x[idx] += 1.0
    if model.featurizer.l2_normalize:
        norm = math.sqrt(float(np.dot(x, x)))
        if norm > 0:
            x /= norm
    return x


def decision_value(model: ClassifierModel, point: DataPoint) -> float:
    """The raw logit for a data point: linear response plus lexicon offset."""
    if not point.text.strip():
        raise EmptyText(f"data point has no text ({point.vector.value})")
    linear = 0.0
    if len(model.vocabulary):
        linear = float(np.dot(model.weights, _vectorize(model, point)))
    return linear + model.bias + model.lexicon.score(point.text)


def classify(model: ClassifierModel, point: DataPoint) -> tuple[Label, float]:
    """Label one data point; credential-related iff score >= threshold."""
    score = float(_sigmoid(np.array(decision_value(model, point))))
    label = Label.CREDENTIAL_RELATED if score >= model.threshold else Label.NORMAL
    return label, score


def train(data: list[LabeledDataPoint], config: TrainConfig | None = None) -> ClassifierModel:
    """Fit the linear model by class-weighted gradient descent.

    Full-batch descent with deterministic step halving, so the weighted
    cross-entropy loss is non-increasing per epoch and identical inputs
    produce bit-identical models.
    """
    config = config or TrainConfig()
    if not data:
        raise EmptyDataset("no training data")
    labels = {d.label for d in data}
    if len(labels) < 2:
        raise SingleClassData(f"training data has a single class: {labels.pop().value}")

    vocab_terms: set[str] = set()
    for item in data:
        vocab_terms.update(_point_features(item.point, config.featurizer))
    vocabulary = {term: idx for idx, term in enumerate(sorted(vocab_terms))}

    model = ClassifierModel(
        lexicon=config.lexicon,
        vocabulary=vocabulary,
        weights=np.zeros(len(vocabulary), dtype=np.float64),
        bias=PRIOR_BIAS,
        class_weights=config.class_weights,
        threshold=config.threshold,
        featurizer=config.featurizer,
    )

    n = len(data)
    X = np.stack([_vectorize(model, item.point) for item in data])
    y = np.array([1.0 if item.label is Label.CREDENTIAL_RELATED else 0.0 for item in data])
    offsets = np.array([model.lexicon.score(item.point.text) for item in data])
    cw_cred, cw_norm = config.class_weights
    sample_weights = np.where(y == 1.0, cw_cred, cw_norm)

    def loss_at(w, b):
        z = X @ w + b + offsets
        per_example = np.logaddexp(0.0, z) - y * z
        return float(np.sum(sample_weights * per_example) / n)

    w = model.weights
    b = model.bias
    lr = config.learning_rate
    loss = loss_at(w, b)
    history = [loss]
    for _ in range(config.epochs):
        z = X @ w + b + offsets
        dz = sample_weights * (_sigmoid(z) - y) / n
        grad_w = X.T @ dz
        grad_b = float(np.sum(dz))
        stepped = False
        for _ in range(30):
            new_w = w - lr * grad_w
            new_b = b - lr * grad_b
            new_loss = loss_at(new_w, new_b)
            if new_loss <= loss:
                w, b, loss = new_w, new_b, new_loss
                stepped = True
                break
            lr *= 0.5
        history.append(loss)
        if not stepped:
            break

    model.weights = w
    model.bias = float(b)
    model.loss_history = history
    return model


def evaluate(model: ClassifierModel, data: list[LabeledDataPoint]) -> EvalMetrics:
    """Confusion-matrix metrics with CredentialRelated as the positive class.

    A rate with a zero denominator reports 1.0 and is named in
    ``degenerate`` so aggregation stays total without hiding the
    condition.
    """
    if not data:
        raise EmptyDataset("no evaluation data")
    tp = fp = tn = fn = 0
    for item in data:
        predicted, _ = classify(model, item.point)
        actual_pos = item.label is Label.CREDENTIAL_RELATED
        predicted_pos = predicted is Label.CREDENTIAL_RELATED
        if actual_pos and predicted_pos:
            tp += 1
        elif actual_pos:
            fn += 1
        elif predicted_pos:
            fp += 1
        else:
            tn += 1

    degenerate: list[str] = []

    def rate(numerator: int, denominator: int, name: str) -> float:
        if denominator == 0:
            degenerate.append(name)
            return 1.0
        return numerator / denominator

    accuracy = (tp + tn) / len(data)
    precision = rate(tp, tp + fp, "precision")
    recall = rate(tp, tp + fn, "true_positive_rate")
    tnr = rate(tn, tn + fp, "true_negative_rate")
    if precision + recall == 0:
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return EvalMetrics(
        tp=tp, fp=fp, tn=tn, fn=fn,
        accuracy=accuracy, f1=f1,
        true_positive_rate=recall, true_negative_rate=tnr,
        degenerate=tuple(degenerate),
    )


def train_test_split(
    data: list[LabeledDataPoint], test_fraction: float = 0.3, seed: int = 0
) -> tuple[list[LabeledDataPoint], list[LabeledDataPoint]]:
    """Deterministic shuffled split, stratified by label."""
    import random

    rng = random.Random(seed)
    by_label: dict[Label, list[LabeledDataPoint]] = {}
    for item in data:
        by_label.setdefault(item.label, []).append(item)
    train_part: list[LabeledDataPoint] = []
    test_part: list[LabeledDataPoint] = []
    for label in sorted(by_label, key=lambda l: l.value):
        items = list(by_label[label])
        rng.shuffle(items)
        cut = max(1, round(len(items) * test_fraction)) if len(items) > 1 else 0
        test_part.extend(items[:cut])
        train_part.extend(items[cut:])
    return train_part, test_part


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def model_to_json(model: ClassifierModel) -> str:
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "lexicon": {
            "must_flag": model.lexicon.must_flag,
            "ambiguous": model.lexicon.ambiguous,
        },
        "vocabulary": sorted(model.vocabulary, key=model.vocabulary.get),
        "weights": [float(v) for v in model.weights],
        "bias": model.bias,
        "class_weights": list(model.class_weights),
        "threshold": model.threshold,
        "featurizer": {
            "char_ngram_sizes": list(model.featurizer.char_ngram_sizes),
            "lowercase": model.featurizer.lowercase,
            "l2_normalize": model.featurizer.l2_normalize,
            "include_raw": model.featurizer.include_raw,
            "include_vector": model.featurizer.include_vector,
        },
    }
    return json.dumps(payload, sort_keys=True, ensure_ascii=False, indent=1)


def model_from_json(text: str) -> ClassifierModel:
    payload = json.loads(text)
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version: {version!r}")
    fz = payload["featurizer"]
    vocabulary = {term: idx for idx, term in enumerate(payload["vocabulary"])}
    return ClassifierModel(
        lexicon=Lexicon(
            must_flag=dict(payload["lexicon"]["must_flag"]),
            ambiguous=dict(payload["lexicon"]["ambiguous"]),
        ),
        vocabulary=vocabulary,
        weights=np.array(payload["weights"], dtype=np.float64),
        bias=float(payload["bias"]),
        class_weights=tuple(payload["class_weights"]),
        threshold=float(payload["threshold"]),
        featurizer=FeaturizerConfig(
            char_ngram_sizes=tuple(fz["char_ngram_sizes"]),
            lowercase=fz["lowercase"],
            l2_normalize=fz["l2_normalize"],
            include_raw=fz["include_raw"],
            include_vector=fz["include_vector"],
        ),
    )


def save_model(model: ClassifierModel, path: str | Path) -> None:
    Path(path).write_text(model_to_json(model), encoding="utf-8")


def load_model(path: str | Path) -> ClassifierModel:
    return model_from_json(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# Labeled corpus file: one record per line, tab-separated with escaping
# ---------------------------------------------------------------------------

CORPUS_FIELDS = ("extension_id", "vector", "text", "label")


def write_labeled_corpus(rows: list[LabeledDataPoint], path: str | Path) -> None:
    import csv

    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, delimiter="\t", lineterminator="\n")
        writer.writerow(CORPUS_FIELDS)
        for item in rows:
            writer.writerow(
                [item.point.extension_id, item.point.vector.value, item.point.text, item.label.value]
            )


def read_labeled_corpus(path: str | Path) -> list[LabeledDataPoint]:
    import csv

    rows: list[LabeledDataPoint] = []
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle, delimiter="\t")
        header = next(reader, None)
        if header is None:
            raise EmptyDataset(f"{path}: empty corpus file")
        if tuple(header) != CORPUS_FIELDS:
            raise ValueError(f"{path}: unexpected corpus header {header}")
        for record in reader:
            if len(record) != len(CORPUS_FIELDS):
                raise ValueError(f"{path}: malformed record {record}")
            extension_id, vector, text, label = record
            point = DataPoint(
                vector=VectorKind(vector),
                text=text,
                extension_id=extension_id,
                location=SourceLocation(file="corpus"),
            )
            rows.append(LabeledDataPoint(point=point, label=Label(label)))
    if not rows:
        raise EmptyDataset(f"{path}: corpus has a header but no records")
    return rows
