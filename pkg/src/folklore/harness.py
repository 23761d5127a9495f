"""Synthetic streams, regret bookkeeping, online-to-batch, and run export."""

import csv
import io
import json
import math
import subprocess
from dataclasses import asdict, dataclass, fields
from importlib import resources
from pathlib import Path

import numpy as np

from .bandit import BanditConfig, BanditLearner
from .baselines import OgdState, project_rows
from .boosting import AdaBoostOLM, WeakLearnerSim
from .core_math import as_distribution, log_loss, softmax
from .errors import ConfigError, FolkloreError, InvalidInputError
from .learner import FolkloreLearner, LearnerConfig

MODES = ("realizable-soft", "realizable-hard", "adversarial-rotating")
ALGOS = ("folklore", "ogd")
PRNG_NAME = "numpy.random.Philox"
CSV_HEADER = ["t", "loss", "cum_loss", "comparator_loss", "comparator_cum", "regret"]


def make_rng(seed, episode=0):
    """Counter-based generator for one episode; episodes of a run use seed + index."""
    return np.random.Generator(np.random.Philox(int(seed) + int(episode)))


@dataclass
class StreamSpec:
    d: int
    K: int
    B: float
    R: float
    T: int
    seed: int = 0
    mode: str = "realizable-soft"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown stream mode {self.mode!r}; expected one of {MODES}")
        if self.d < 1 or self.K < 2 or self.T < 0:
            raise ConfigError("need d >= 1, K >= 2 and T >= 0")
        if self.B < 0 or self.R < 0:
            raise ConfigError("B and R must be non-negative")


@dataclass
class Stream:
    X: np.ndarray
    Y: np.ndarray
    W_star: np.ndarray

    def __len__(self):
        return len(self.Y)


@dataclass
class StreamRecord:
    t: int
    loss: float
    cum_loss: float
    comparator_loss: float
    comparator_cum: float
    regret: float


def _unit_rows(rng, n, dim):
    V = rng.standard_normal((n, dim))
    return V / np.linalg.norm(V, axis=1, keepdims=True)


def generate_stream(spec, rng=None):
    """Draw ``T`` examples and the generating matrix ``W_star``.

    Rows of ``W_star`` are uniform on the radius-B sphere and ``x`` is uniform
    in the radius-R ball. Labels: sampled from ``softmax(W_star x)``
    (realizable-soft), its argmax (realizable-hard), or ``t mod K``
    (adversarial-rotating, unrelated to ``x``).
    """
    rng = make_rng(spec.seed) if rng is None else rng
    W_star = spec.B * _unit_rows(rng, spec.K, spec.d)
    T = spec.T
    radii = spec.R * rng.random(T) ** (1.0 / spec.d)
    X = _unit_rows(rng, T, spec.d) * radii[:, None] if T else np.zeros((0, spec.d))
    logits = X @ W_star.T
    if spec.mode == "realizable-soft":
        shifted = logits - logits.max(axis=1, keepdims=True) if T else logits
        P = np.exp(shifted)
        P /= P.sum(axis=1, keepdims=True)
        u = rng.random(T)
        Y = np.minimum((P.cumsum(axis=1) < u[:, None]).sum(axis=1), spec.K - 1)
    elif spec.mode == "realizable-hard":
        Y = logits.argmax(axis=1) if T else np.zeros(0, dtype=np.int64)
    else:
        Y = np.arange(T) % spec.K
    return Stream(X, Y.astype(np.int64), W_star)


def batch_fit_comparator(X, Y, K, B, R, iters=500):
    """Projected gradient descent on the average loss over ``{||W||_{2,inf} <= B}``."""
    n, d = X.shape
    W = np.zeros((K, d))
    if n == 0:
        return W
    onehot = np.eye(K)[Y]
    step = 1.0 / max(R * R, 1e-12)
    for _ in range(iters):
        Z = X @ W.T
        Z -= Z.max(axis=1, keepdims=True)
        P = np.exp(Z)
        P /= P.sum(axis=1, keepdims=True)
        W = project_rows(W - step * (P - onehot).T @ X / n, B)
    return W


def records_from_losses(losses, comparator_losses):
    out = []
    cum = comp = 0.0
    for t, (loss, c) in enumerate(zip(losses, comparator_losses), start=1):
        cum += loss
        comp += c
        out.append(StreamRecord(t, float(loss), cum, float(c), comp, cum - comp))
    return out


def comparator_losses(stream, W):
    return [log_loss(W @ x, int(y)) for x, y in zip(stream.X, stream.Y)]


def _comparator(stream, spec, comparator):
    if comparator == "generator":
        return stream.W_star
    if comparator == "batch-fit":
        return batch_fit_comparator(stream.X, stream.Y, spec.K, spec.B, spec.R)
    raise ConfigError(f"unknown comparator {comparator!r}")


def run_episode(algo, spec, comparator="generator", eps=1e-12, step_scale=1.0,
                stream=None, timings=None):
    """Run one learner over a generated stream and account regret per round.

    With ``timings`` (a list) the wall time of every round is appended to it.
    """
    if algo not in ALGOS:
        raise ConfigError(f"unknown algorithm {algo!r}; expected one of {ALGOS}")
    stream = generate_stream(spec) if stream is None else stream
    if algo == "folklore":
        learner = FolkloreLearner(LearnerConfig(d=spec.d, K=spec.K, B=spec.B, R=spec.R, eps=eps))
        play = lambda x, y: learner.step(x, y)[1]
    else:
        learner = OgdState(spec.d, spec.K, spec.B, spec.R, step_scale=step_scale)
        play = lambda x, y: learner.step(x, y)[1]
    clock = None
    if timings is not None:
        from time import perf_counter as clock
    losses = []
    for t, (x, y) in enumerate(zip(stream.X, stream.Y), start=1):
        try:
            if clock is None:
                losses.append(play(x, int(y)))
            else:
                start = clock()
                losses.append(play(x, int(y)))
                timings.append(clock() - start)
        except FolkloreError as exc:
            raise type(exc)(f"round {t}: {exc}") from exc
    W = _comparator(stream, spec, comparator)
    return records_from_losses(losses, comparator_losses(stream, W))


def run_bandit_episode(spec, gamma=None, eps=1e-12, stream=None):
    """Bandit protocol over a generated stream.

    Each record's ``loss`` is the 0/1 mistake and its comparator loss is the
    log loss of ``W_star``, so ``regret`` is the relative mistake count.
    Returns ``(records, info)``.
    """
    stream = generate_stream(spec) if stream is None else stream
    inner = LearnerConfig(d=spec.d, K=spec.K, B=spec.B, R=spec.R, eps=eps)
    config = (BanditConfig.with_default_gamma(inner, max(spec.T, 1)) if gamma is None
              else BanditConfig(gamma, spec.T, inner))
    bandit = BanditLearner(config)
    rng = make_rng(spec.seed, 1)
    mistakes, explores, updates = [], 0, 0
    for x, y in zip(stream.X, stream.Y):
        guess = bandit.round(x, rng)
        explores += bandit.last_explored
        correct = guess == int(y)
        updates += bandit.feedback(correct, int(y) if correct else None)
        mistakes.append(0.0 if correct else 1.0)
    records = records_from_losses(mistakes, comparator_losses(stream, stream.W_star))
    info = {"gamma": config.gamma, "explores": explores, "updates": updates,
            "inner_rounds": bandit.learner.t}
    return records, info


def run_boosting_episode(K, T, n_learners, edge, seed=0, horizon=None, eps=1e-12):
    """AdaBoost.OLM++ with simulated weak learners on uniformly random labels.

    Records carry the 0/1 mistake as loss against a zero comparator.
    """
    rng = make_rng(seed, 2)
    weak = [WeakLearnerSim(K, edge, make_rng(seed, 1000 + i)) for i in range(n_learners)]
    boost = AdaBoostOLM(weak, K, horizon or max(T, 2), eps=eps)
    labels = rng.integers(K, size=T)
    mistakes = []
    for y in labels:
        guess = boost.round(None, rng, truth=int(y))
        boost.feedback(int(y))
        mistakes.append(float(guess != y))
    return records_from_losses(mistakes, [0.0] * T)


def online_to_batch(config, X, Y, rng):
    """Freeze FOLKLORE at a uniform random round of the sample.

    Draws ``tau`` uniform on ``{1..T}`` and returns the predictor that would
    have been used at round ``tau`` (trained on the first ``tau - 1``
    examples), together with ``tau``. Later examples cannot affect that state,
    so they are not replayed.
    """
    T = len(Y)
    if T == 0:
        raise InvalidInputError("online-to-batch needs a non-empty sample")
    tau = int(rng.integers(1, T + 1))
    learner = FolkloreLearner(config)
    for x, y in zip(X[: tau - 1], Y[: tau - 1]):
        learner.step(x, int(y))
    return learner.frozen(), tau


def hessian_dominance_counterexample(B, R):
    """Quadratic forms showing Hessian dominance needs a constant exponential in BR.

    Three classes, ``W = diag(0, 0, B)``, ``x = (0, 0, R)``, true class 0 and
    direction ``v = (e_0 - e_1) kron x``. The regularizer gradient used is the
    symmetric ``softmax(Wx) - 1/K``; any regularizer giving equal gradients
    to tied classes yields the same numbers. Returns
    ``(v^T M v, v^T H v)`` where ``M`` is the gradient outer-product
    difference and ``H`` the loss Hessian.
    """
    if B < 0 or R < 0:
        raise ConfigError("B and R must be non-negative")
    K = 3
    W = np.diag([0.0, 0.0, float(B)])
    x = np.array([0.0, 0.0, float(R)])
    sigma = softmax(W @ x)
    psi = sigma - 1.0 / K
    e0 = np.eye(K)[0]
    a = sigma - e0 - psi
    M = np.outer(a, a) - np.outer(psi, psi)
    H = np.diag(sigma) - np.outer(sigma, sigma)
    xx = np.outer(x, x)
    v = np.kron(np.eye(K)[0] - np.eye(K)[1], x)
    lhs = v @ np.kron(M, xx) @ v
    hess = v @ np.kron(H, xx) @ v
    return float(lhs), float(hess)


def _fmt(value):
    return repr(float(value)) if not isinstance(value, (int, np.integer)) else str(int(value))


def records_to_csv(records):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in records:
        writer.writerow([str(r.t)] + [_fmt(getattr(r, k)) for k in CSV_HEADER[1:]])
    return buf.getvalue()


def parse_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != CSV_HEADER:
        raise InvalidInputError("missing or unexpected CSV header")
    return [StreamRecord(int(row[0]), *(float(v) for v in row[1:])) for row in rows[1:]]


def git_describe():
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True,
                             text=True, timeout=5, cwd=Path(__file__).resolve().parent)
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() or "unknown"


def manifest(records, spec, seed, **extra):
    doc = {
        "spec": asdict(spec) if hasattr(spec, "__dataclass_fields__") else dict(spec),
        "git_describe": git_describe(),
        "seed": int(seed),
        "prng": PRNG_NAME,
        "records": [asdict(r) for r in records],
    }
    doc.update(extra)
    return doc


def manifest_schema():
    text = resources.files("folklore").joinpath("schemas/run_manifest.schema.json").read_text()
    return json.loads(text)


def validate_manifest(doc):
    import jsonschema

    jsonschema.validate(doc, manifest_schema())


def export(records, path, format="csv", spec=None, seed=0, **extra):
    """Write a trace as CSV or as a JSON run manifest."""
    path = Path(path)
    if format == "csv":
        payload = records_to_csv(records)
    elif format == "json":
        if spec is None:
            raise ConfigError("the JSON manifest needs the stream spec")
        payload = json.dumps(manifest(records, spec, seed, **extra), indent=1) + "\n"
    else:
        raise ConfigError(f"unknown export format {format!r}")
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(payload)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def read_records(path):
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        doc = json.loads(text)
        names = [f.name for f in fields(StreamRecord)]
        return [StreamRecord(**{k: r[k] for k in names}) for r in doc["records"]]
    return parse_csv(text)


def excess_risk(predictor, X, Y, W_star):
    """Mean held-out loss of ``predictor`` minus that of ``W_star``, with its standard error."""
    diffs = np.array([log_loss(predictor.predict(x), int(y)) - log_loss(W_star @ x, int(y))
                      for x, y in zip(X, Y)])
    return float(diffs.mean()), float(diffs.std(ddof=1) / math.sqrt(len(diffs)))


def soft_label_loss(z, p):
    """Expected loss of logits ``z`` when labels are drawn from ``p``."""
    return log_loss(z, as_distribution(p, len(p)))
