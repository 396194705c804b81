"""Synthetic search logs with a planted best arm per context value.

Construction, per search:

* ``p`` ranks the items in ideal (label-descending) order,
* ``q = p + eta * d`` is ``p`` disturbed by a random vector ``d``,
* item score pairs are solved so that the designated arm's combined weight
  vector projects the items onto ``p`` and the neutral arm's onto ``q``.

Any other arm's weight vector is a combination ``a * w_designated +
b * w_neutral``, so it ranks by ``p + (b / (a + b)) * eta * d``: rankings
degrade smoothly as an arm moves away from the designated one. ``eta`` is
picked per search from a ladder of candidates so the running mean of the
neutral arm's NDCG tracks ``1 - reward_gap``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Mapping

import numpy as np

from .domain import (
    CONTEXT_FEATURES,
    ArmSpace,
    Context,
    Dataset,
    DatasetHeader,
    Item,
    JugglerPrediction,
    SearchRecord,
)
from .rng import DATAGEN, substream

GRADES = (0, 1, 5)
DEFAULT_ATTRIBUTE_SIGNS = {
    "daily_price": -1,
    "guest_rating": 1,
    "star_rating": 1,
    "margin_pct": -1,
    "margin_abs": -1,
}
ETA_LADDER = np.geomspace(1e-3, 1e3, 121)
MAX_CARRIED_ERROR = 2.0


class UnrealizableGapError(ValueError):
    def __init__(self, requested: float, achieved: float):
        self.requested = requested
        self.achieved = achieved
        super().__init__(f"unrealizable reward_gap {requested:g}: achieved {achieved:.4f}")


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    days: int = 30
    searches_per_day: int = 1000
    items_per_search: int = 20
    vocab_sizes: Mapping[str, int] = field(default_factory=lambda: {"brand": 2, "device": 2, "geo": 3})
    context_feature: str = "brand"
    # Context value of ``context_feature`` -> designated best arm index.
    context_effect: Mapping[str, int] = field(default_factory=dict)
    default_arm: int | None = None
    reward_gap: float = 0.1
    label_noise: float = 0.0
    juggler_range: tuple[float, float] = (0.5, 1.5)
    grade_probs: tuple[float, float, float] = (0.6, 0.3, 0.1)
    # Correlation between the disturbance and the ideal order; negative
    # values make compensation_score anti-correlate with relevance when the
    # designated arm lowers the compensation weight.
    disturbance_correlation: float = 0.0
    attribute_signs: Mapping[str, int] = field(default_factory=lambda: dict(DEFAULT_ATTRIBUTE_SIGNS))
    attribute_strength: float = 1.0
    gap_tolerance: float = 0.01
    arm_space: ArmSpace = field(default_factory=ArmSpace)

    def __post_init__(self):
        if self.days < 1 or self.searches_per_day < 1:
            raise ValueError("days and searches_per_day must be >= 1")
        if self.items_per_search < 2:
            raise ValueError("items_per_search must be >= 2")
        if set(self.vocab_sizes) != set(CONTEXT_FEATURES) or min(self.vocab_sizes.values()) < 1:
            raise ValueError(f"vocab_sizes needs a positive size for each of {CONTEXT_FEATURES}")
        if self.context_feature not in CONTEXT_FEATURES:
            raise ValueError(f"unknown context_feature {self.context_feature!r}")
        if not 0.0 < self.reward_gap <= 1.0:
            raise ValueError("reward_gap must lie in (0, 1]")
        if not 0.0 <= self.label_noise < 1.0:
            raise ValueError("label_noise must lie in [0, 1)")
        if not -1.0 <= self.disturbance_correlation <= 1.0:
            raise ValueError("disturbance_correlation must lie in [-1, 1]")
        lo, hi = self.juggler_range
        if not 0 < lo <= hi:
            raise ValueError("juggler_range must be a positive interval")
        vocab = self.vocab[self.context_feature]
        unknown = set(self.context_effect) - set(vocab)
        if unknown:
            raise ValueError(f"context_effect names unknown values {sorted(unknown)}")
        n_arms = len(self.arm_space)
        for value in vocab:
            arm = self.context_effect.get(value, self.default_arm)
            if arm is None:
                raise ValueError(f"no designated arm for {self.context_feature}={value!r}")
            if not 0 <= arm < n_arms:
                raise ValueError(f"designated arm {arm} out of range")

    @property
    def vocab(self) -> dict[str, tuple[str, ...]]:
        return {f: tuple(f"{f}_{i}" for i in range(self.vocab_sizes[f])) for f in CONTEXT_FEATURES}

    def designated_arm(self, context: Context) -> int:
        value = context.value(self.context_feature)
        return self.context_effect.get(value, self.default_arm)

    def to_json(self) -> dict:
        obj = asdict(self)
        obj["arm_space"] = self.arm_space.to_json()
        obj["juggler_range"] = list(self.juggler_range)
        obj["grade_probs"] = list(self.grade_probs)
        return obj

    @classmethod
    def from_json(cls, obj: Mapping) -> "GenConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(obj) - known
        if extra:
            raise ValueError(f"unknown generator config fields {sorted(extra)}")
        kw = dict(obj)
        if "arm_space" in kw:
            kw["arm_space"] = ArmSpace.from_json(kw["arm_space"])
        for key in ("juggler_range", "grade_probs"):
            if key in kw:
                kw[key] = tuple(kw[key])
        return cls(**kw)


def _draw_labels(rng: np.random.Generator, n: int, cum_probs: np.ndarray) -> np.ndarray:
    grades = np.asarray(GRADES)
    while True:
        labels = grades[np.searchsorted(cum_probs, rng.random(n), side="right")]
        if labels.min() != labels.max():
            return labels


def _draw_juggler(rng, cfg: GenConfig, correction: np.ndarray) -> np.ndarray:
    lo, hi = cfg.juggler_range
    while True:
        w0 = rng.uniform(lo, hi, size=2)
        if not correction.any():
            return w0
        w_star = w0 + correction
        cross = w_star[0] * w0[1] - w_star[1] * w0[0]
        if abs(cross) > 1e-3 * np.linalg.norm(w0) * np.linalg.norm(w_star):
            return w0


def _ndcg_rows(labels: np.ndarray, orders: np.ndarray, idcg: np.ndarray) -> np.ndarray:
    """NDCG of rankings ``orders`` (..., n) of per-search ``labels`` (S, n)."""
    n = labels.shape[-1]
    disc = 1.0 / np.log2(np.arange(2, n + 2, dtype=np.float64))
    gains = np.exp2(labels.astype(np.float64)) - 1.0
    idx = orders if orders.ndim == 2 else orders.reshape(orders.shape[0], -1)
    ranked = np.take_along_axis(gains, idx, axis=1).reshape(orders.shape)
    dcg = np.sum(ranked * disc, axis=-1)
    scale = idcg.reshape((-1,) + (1,) * (dcg.ndim - 1))
    return dcg / scale


def _day(cfg: GenConfig, day: int, vocab) -> dict:
    """Random draws and planted geometry for every search of one day."""
    S, n = cfg.searches_per_day, cfg.items_per_search
    neutral = cfg.arm_space.neutral_index
    cum_probs = np.cumsum(cfg.grade_probs)
    cum_probs /= cum_probs[-1]
    contexts, arms = [], np.empty(S, dtype=np.int64)
    w0 = np.empty((S, 2))
    labels = np.empty((S, n), dtype=np.int64)
    tiebreak, eps, perp = (np.empty((S, n)) for _ in range(3))
    noise_perm = [None] * S
    attr_noise = np.empty((S, 5, n))
    for j in range(S):
        rng = substream(cfg.seed, DATAGEN, day, j)
        ctx = Context(**{f: vocab[f][rng.integers(len(vocab[f]))] for f in CONTEXT_FEATURES})
        contexts.append(ctx)
        arms[j] = cfg.designated_arm(ctx)
        w0[j] = _draw_juggler(rng, cfg, cfg.arm_space.corrections[arms[j]])
        labels[j] = _draw_labels(rng, n, cum_probs)
        tiebreak[j] = rng.random(n)
        eps[j] = rng.standard_normal(n)
        perp[j] = rng.standard_normal(n)
        if rng.random() < cfg.label_noise:
            noise_perm[j] = rng.permutation(n)
        attr_noise[j] = rng.standard_normal((5, n))

    w_star = w0 + cfg.arm_space.corrections[arms]
    ideal = np.lexsort((tiebreak, -labels), axis=-1)
    p = np.empty((S, n))
    np.put_along_axis(p, ideal, np.broadcast_to((n - np.arange(n)) / n, (S, n)), axis=1)
    z = (p - p.mean(axis=1, keepdims=True)) / p.std(axis=1, keepdims=True)
    rho = cfg.disturbance_correlation
    d = rho * z + np.sqrt(1.0 - rho**2) * eps

    gains_sorted = np.exp2(-np.sort(-labels, axis=1).astype(np.float64)) - 1.0
    idcg = gains_sorted @ (1.0 / np.log2(np.arange(2, n + 2, dtype=np.float64)))
    q = p[:, None, :] + ETA_LADDER[None, :, None] * d[:, None, :]
    ladder = _ndcg_rows(labels, np.argsort(-q, axis=-1, kind="stable"), idcg)
    ladder[arms == neutral] = 1.0
    return dict(contexts=contexts, arms=arms, w0=w0, w_star=w_star, labels=labels, p=p, d=d,
                perp=perp, idcg=idcg, ladder=ladder, noise_perm=noise_perm, attr_noise=attr_noise)


def _item_points(day: dict, eta: np.ndarray, neutral: int) -> tuple[np.ndarray, np.ndarray]:
    """Solve item (utility, compensation) pairs from the pinned projections."""
    p, w0 = day["p"], day["w0"]
    q = p + eta[:, None] * day["d"]
    m = np.stack([day["w_star"], w0], axis=1)
    is_neutral = day["arms"] == neutral
    # A neutral designated arm pins only one projection; the orthogonal
    # coordinate is free and drawn at random.
    m[is_neutral, 0] = np.stack([-w0[is_neutral, 1], w0[is_neutral, 0]], axis=1)
    rhs = np.stack([p, q], axis=1)
    rhs[is_neutral, 0] = day["perp"][is_neutral]
    pts = np.linalg.solve(m, rhs)
    return pts[:, 0, :], pts[:, 1, :]


def _attributes(labels: np.ndarray, noise: np.ndarray, cfg: GenConfig) -> dict[str, np.ndarray]:
    lab = labels.astype(np.float64)
    z = (lab - lab.mean(axis=1, keepdims=True)) / lab.std(axis=1, keepdims=True)
    s = {a: cfg.attribute_strength * cfg.attribute_signs.get(a, 0) for a in DEFAULT_ATTRIBUTE_SIGNS}
    e = noise.transpose(1, 0, 2)
    return {
        "daily_price": 120.0 * np.exp(0.25 * s["daily_price"] * z + 0.3 * e[0]),
        "guest_rating": np.clip(8.0 + 0.6 * s["guest_rating"] * z + 0.6 * e[1], 1.0, 10.0),
        "star_rating": np.clip(3.5 + 0.5 * s["star_rating"] * z + 0.7 * e[2], 1.0, 5.0),
        "margin_pct": np.clip(0.15 + 0.03 * s["margin_pct"] * z + 0.03 * e[3], 0.0, 0.5),
        "margin_abs": 20.0 * np.exp(0.3 * s["margin_abs"] * z + 0.3 * e[4]),
    }


@dataclass(frozen=True)
class GenerationReport:
    # Neutral-arm NDCG on the clean labels, per search, read off the
    # ladder (i.e. from the planted projections, not the solved scores).
    planned_neutral_ndcg: np.ndarray
    achieved_gap: float


def generate(cfg: GenConfig) -> Dataset:
    """Build a dataset with the planted structure described in the module docstring.

    Raises UnrealizableGapError when the mean neutral-arm gap over searches
    whose designated arm is not neutral misses ``reward_gap`` by more than
    ``gap_tolerance``.
    """
    return generate_with_report(cfg)[0]


def generate_with_report(cfg: GenConfig) -> tuple[Dataset, GenerationReport]:
    vocab = cfg.vocab
    neutral = cfg.arm_space.neutral_index
    days = [_day(cfg, day, vocab) for day in range(cfg.days)]

    # Error diffusion over each search's ladder keeps the running mean of
    # the neutral arm's NDCG on target.
    target = 1.0 - cfg.reward_gap
    total, count = 0.0, 0
    n_planted = sum(int(np.sum(d["arms"] != neutral)) for d in days)
    # carried error / n_planted bounds the final miss; keep it inside the tolerance
    carry = min(MAX_CARRIED_ERROR, 0.5 * cfg.gap_tolerance * n_planted)
    for day in days:
        etas = np.zeros(len(day["arms"]))
        planned = np.ones(len(day["arms"]))
        for j, arm in enumerate(day["arms"]):
            if arm == neutral:
                continue
            count += 1
            ladder = day["ladder"][j]
            want = count * target - total
            k = int(np.argmin(np.abs(ladder - want)))
            # A perfect neutral ranking ties every arm, so prefer an imperfect
            # one as long as the error carried forward stays bounded.
            imperfect = np.flatnonzero(ladder < 1.0 - 1e-12)
            if imperfect.size:
                alt = int(imperfect[np.argmin(np.abs(ladder[imperfect] - want))])
                if abs(want - ladder[alt]) <= carry:
                    k = alt
            total += ladder[k]
            etas[j] = ETA_LADDER[k]
            planned[j] = ladder[k]
        day["eta"] = etas
        day["planned"] = planned

    records = []
    gaps = []
    item_ids = [f"h{k:03d}" for k in range(cfg.items_per_search)]
    for day_index, day in enumerate(days):
        util, comp = _item_points(day, day["eta"], neutral)
        # Measured gap: rank the clean labels under the neutral weights.
        w0 = day["w0"]
        scores = w0[:, :1] * util + w0[:, 1:] * comp
        neutral_ndcg = _ndcg_rows(day["labels"], np.argsort(-scores, axis=1, kind="stable"), day["idcg"])
        planted = day["arms"] != neutral
        gaps.extend((1.0 - neutral_ndcg[planted]).tolist())

        labels = day["labels"].copy()
        for j, perm in enumerate(day["noise_perm"]):
            if perm is not None:
                labels[j] = labels[j][perm]
        attrs = _attributes(labels, day["attr_noise"], cfg)
        attr_rows = np.stack([attrs[a] for a in DEFAULT_ATTRIBUTE_SIGNS], axis=-1).tolist()
        names = tuple(DEFAULT_ATTRIBUTE_SIGNS)
        util_l, comp_l, lab_l = util.tolist(), comp.tolist(), labels.tolist()
        for j, ctx in enumerate(day["contexts"]):
            items = tuple(
                Item(iid, u, c, lab, dict(zip(names, row)))
                for iid, u, c, lab, row in zip(item_ids, util_l[j], comp_l[j], lab_l[j], attr_rows[j])
            )
            juggler = JugglerPrediction(float(w0[j, 0]), float(w0[j, 1]))
            records.append(SearchRecord(f"d{day_index:03d}-s{j:05d}", day_index, ctx, juggler, items))

    achieved = float(np.mean(gaps)) if gaps else 0.0
    if gaps and abs(achieved - cfg.reward_gap) > cfg.gap_tolerance:
        raise UnrealizableGapError(cfg.reward_gap, achieved)
    report = GenerationReport(np.concatenate([d["planned"] for d in days]), achieved)
    return Dataset(DatasetHeader(vocab=vocab, days=cfg.days), tuple(records)), report


def load_gen_config(path) -> GenConfig:
    with open(path, encoding="utf-8") as fh:
        return GenConfig.from_json(json.load(fh))
