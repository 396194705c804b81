"""Bandit policies with frozen-state selection and batched updates.

All policies share one contract: ``select`` reads the current state and a
caller-supplied random stream, ``update_batch`` applies a list of
observations in order. The simulator only calls ``update_batch`` at day
boundaries, so ``select`` never races with a state change.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from .domain import CONTEXT_FEATURES

ALGORITHMS = ("baseline", "gaussian_thompson", "epsilon_greedy", "rls_thompson")


@dataclass(frozen=True)
class PolicyConfig:
    """Algorithm choice plus hyper-parameters.

    ``prior_mean`` defaults per algorithm: 0.5 for Gaussian Thompson (the
    middle of the reward range) and 0.0 for the RLS intercept coefficient.
    """

    algorithm: str
    name: str | None = None
    epsilon: float = 0.1
    prior_mean: float | None = None
    prior_variance: float = 1.0
    ridge_lambda: float = 1.0
    obs_variance: float = 0.05
    optimistic_init: float = 1.0
    features: tuple[str, ...] = ()
    rls_method: str = "sherman_morrison"

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        object.__setattr__(self, "features", tuple(f for f in CONTEXT_FEATURES if f in self.features))
        if self.algorithm == "epsilon_greedy" and not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if self.prior_variance <= 0 or self.obs_variance <= 0 or self.ridge_lambda <= 0:
            raise ValueError("variances and ridge_lambda must be positive")
        if self.rls_method not in ("sherman_morrison", "precision"):
            raise ValueError(f"unknown rls_method {self.rls_method!r}")
        if self.algorithm == "rls_thompson" and not self.features:
            raise ValueError("rls_thompson needs at least one context feature")

    @property
    def contextual(self) -> bool:
        return self.algorithm == "rls_thompson"

    @property
    def display_name(self) -> str:
        if self.name:
            return self.name
        if self.algorithm == "epsilon_greedy":
            return f"epsilon_greedy_{self.epsilon:g}"
        if self.algorithm == "rls_thompson":
            return "rls_" + "_".join(self.features)
        return self.algorithm

    def to_json(self) -> dict:
        obj = asdict(self)
        obj["features"] = list(self.features)
        return obj

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "PolicyConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(obj) - known
        if extra:
            raise ValueError(f"unknown policy config fields {sorted(extra)}")
        kw = dict(obj)
        if "features" in kw:
            kw["features"] = tuple(kw["features"])
        return cls(**kw)


@dataclass(frozen=True)
class PolicyDecision:
    arm_index: int
    was_exploration: bool = False


@dataclass(frozen=True)
class Observation:
    context_vector: np.ndarray
    arm_index: int
    reward: float


@dataclass(frozen=True)
class GaussianArmState:
    posterior_mean: float
    posterior_variance: float
    pull_count: int


@dataclass(frozen=True)
class EmpiricalArmState:
    mean_reward: float
    pull_count: int


@dataclass(frozen=True)
class LinearArmState:
    mean_vector: np.ndarray
    covariance_matrix: np.ndarray


class Policy:
    algorithm = ""

    def __init__(self, config: PolicyConfig, n_arms: int, dim: int = 0):
        if n_arms < 1:
            raise ValueError("need at least one arm")
        self.config = config
        self.n_arms = n_arms
        self.dim = dim

    def select(self, context_vector: np.ndarray, rng: np.random.Generator) -> PolicyDecision:
        raise NotImplementedError

    def update_batch(self, observations: Sequence[Observation]) -> None:
        for obs in observations:
            self._check(obs)
        for obs in observations:
            self._update_one(obs)
        self._refresh()

    def _update_one(self, obs: Observation) -> None:
        raise NotImplementedError

    def _refresh(self) -> None:
        """Recompute derived quantities after the state changed."""

    def _check(self, obs: Observation) -> None:
        if not 0 <= obs.arm_index < self.n_arms:
            raise ValueError(f"arm_index {obs.arm_index} out of range [0, {self.n_arms})")
        if not 0.0 <= obs.reward <= 1.0:
            raise ValueError(f"reward {obs.reward} outside [0, 1]")

    def _state_json(self) -> dict:
        return {}

    def _load_state(self, state: Mapping) -> None:
        pass

    def snapshot(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "config": self.config.to_json(),
            "n_arms": self.n_arms,
            "dim": self.dim,
            "state": self._state_json(),
        }


def _argmax(values: np.ndarray) -> int:
    # np.argmax returns the first maximum: ties go to the lowest arm index.
    return int(np.argmax(values))


class FixedBaseline(Policy):
    """Always plays the neutral correction, i.e. pure Juggler ranking."""

    algorithm = "baseline"

    def __init__(self, config: PolicyConfig, n_arms: int, dim: int = 0, neutral_index: int = 0):
        super().__init__(config, n_arms, dim)
        self.neutral_index = neutral_index

    def select(self, context_vector, rng):
        return PolicyDecision(self.neutral_index)

    def _update_one(self, obs):
        pass

    def _state_json(self):
        return {"neutral_index": self.neutral_index}

    def _load_state(self, state):
        self.neutral_index = int(state["neutral_index"])


class GaussianThompson(Policy):
    """Independent Normal posterior per arm, known observation variance."""

    algorithm = "gaussian_thompson"

    def __init__(self, config: PolicyConfig, n_arms: int, dim: int = 0):
        super().__init__(config, n_arms, dim)
        mu0 = 0.5 if config.prior_mean is None else config.prior_mean
        self.means = np.full(n_arms, float(mu0))
        self.variances = np.full(n_arms, float(config.prior_variance))
        self.counts = np.zeros(n_arms, dtype=np.int64)

    @property
    def arms(self) -> list[GaussianArmState]:
        return [GaussianArmState(float(m), float(v), int(c))
                for m, v, c in zip(self.means, self.variances, self.counts)]

    def select(self, context_vector, rng):
        draws = self.means + np.sqrt(self.variances) * rng.standard_normal(self.n_arms)
        return PolicyDecision(_argmax(draws))

    def _update_one(self, obs):
        a = obs.arm_index
        s2 = self.config.obs_variance
        prev_mean, prev_var = self.means[a], self.variances[a]
        new_var = 1.0 / (1.0 / prev_var + 1.0 / s2)
        self.means[a] = new_var * (prev_mean / prev_var + obs.reward / s2)
        self.variances[a] = new_var
        self.counts[a] += 1

    def _state_json(self):
        return {"means": self.means.tolist(), "variances": self.variances.tolist(),
                "counts": self.counts.tolist()}

    def _load_state(self, state):
        self.means = np.array(state["means"], dtype=np.float64)
        self.variances = np.array(state["variances"], dtype=np.float64)
        self.counts = np.array(state["counts"], dtype=np.int64)


class EpsilonGreedy(Policy):
    algorithm = "epsilon_greedy"

    def __init__(self, config: PolicyConfig, n_arms: int, dim: int = 0):
        super().__init__(config, n_arms, dim)
        self.means = np.full(n_arms, float(config.optimistic_init))
        self.counts = np.zeros(n_arms, dtype=np.int64)

    @property
    def arms(self) -> list[EmpiricalArmState]:
        return [EmpiricalArmState(float(m), int(c)) for m, c in zip(self.means, self.counts)]

    def select(self, context_vector, rng):
        if rng.random() < self.config.epsilon:
            return PolicyDecision(int(rng.integers(self.n_arms)), was_exploration=True)
        return PolicyDecision(_argmax(self.means))

    def _update_one(self, obs):
        a = obs.arm_index
        self.counts[a] += 1
        self.means[a] += (obs.reward - self.means[a]) / self.counts[a]

    def _state_json(self):
        return {"means": self.means.tolist(), "counts": self.counts.tolist()}

    def _load_state(self, state):
        self.means = np.array(state["means"], dtype=np.float64)
        self.counts = np.array(state["counts"], dtype=np.int64)


class RlsThompson(Policy):
    """Per-arm Bayesian ridge regression with Thompson sampling.

    Each arm keeps a Gaussian posterior N(mean, cov) over its coefficient
    vector. With ``rls_method="sherman_morrison"`` the covariance is updated
    in place by a rank-one correction; with ``"precision"`` the precision
    matrix and the precision-weighted mean are accumulated and the posterior
    is recovered by solving.
    """

    algorithm = "rls_thompson"

    def __init__(self, config: PolicyConfig, n_arms: int, dim: int):
        if dim < 1:
            raise ValueError("rls_thompson needs a feature dimension >= 1")
        super().__init__(config, n_arms, dim)
        lam = config.ridge_lambda
        mu0 = np.zeros(dim)
        mu0[0] = 0.0 if config.prior_mean is None else config.prior_mean
        self.mean = np.tile(mu0, (n_arms, 1))
        self.cov = np.tile(np.eye(dim) / lam, (n_arms, 1, 1))
        if config.rls_method == "precision":
            self.precision = np.tile(np.eye(dim) * lam, (n_arms, 1, 1))
            self.weighted = np.tile(lam * mu0, (n_arms, 1))
        self._dirty: set[int] = set()
        self._refresh(all_arms=True)

    @property
    def arms(self) -> list[LinearArmState]:
        return [LinearArmState(self.mean[a].copy(), self.cov[a].copy()) for a in range(self.n_arms)]

    def _check(self, obs):
        super()._check(obs)
        if np.shape(obs.context_vector) != (self.dim,):
            raise ValueError(f"context dimension {np.shape(obs.context_vector)} != ({self.dim},)")

    def select(self, context_vector, rng):
        x = np.asarray(context_vector, dtype=np.float64)
        if x.shape != (self.dim,):
            raise ValueError(f"context dimension {x.shape} != ({self.dim},)")
        z = rng.standard_normal((self.n_arms, self.dim))
        theta = self.mean + np.einsum("aij,aj->ai", self.chol, z)
        return PolicyDecision(_argmax(theta @ x))

    def _update_one(self, obs):
        a = obs.arm_index
        x = np.asarray(obs.context_vector, dtype=np.float64)
        s2 = self.config.obs_variance
        if self.config.rls_method == "precision":
            self.precision[a] += np.outer(x, x) / s2
            self.weighted[a] += x * (obs.reward / s2)
        else:
            cov = self.cov[a]
            cx = cov @ x
            gain = cx / (s2 + x @ cx)
            self.mean[a] = self.mean[a] + gain * (obs.reward - x @ self.mean[a])
            cov = cov - np.outer(gain, cx)
            self.cov[a] = 0.5 * (cov + cov.T)
        self._dirty.add(a)

    def _refresh(self, all_arms: bool = False):
        arms = range(self.n_arms) if all_arms else sorted(self._dirty)
        if all_arms:
            self.chol = np.zeros_like(self.cov)
        for a in arms:
            if self.config.rls_method == "precision":
                self.mean[a] = np.linalg.solve(self.precision[a], self.weighted[a])
                cov = np.linalg.inv(self.precision[a])
                self.cov[a] = 0.5 * (cov + cov.T)
            self.chol[a] = np.linalg.cholesky(self.cov[a])
        self._dirty.clear()

    def _state_json(self):
        state = {"mean": self.mean.tolist(), "cov": self.cov.tolist()}
        if self.config.rls_method == "precision":
            state["precision"] = self.precision.tolist()
            state["weighted"] = self.weighted.tolist()
        return state

    def _load_state(self, state):
        self.mean = np.array(state["mean"], dtype=np.float64)
        self.cov = np.array(state["cov"], dtype=np.float64)
        if self.config.rls_method == "precision":
            self.precision = np.array(state["precision"], dtype=np.float64)
            self.weighted = np.array(state["weighted"], dtype=np.float64)
        self._dirty.clear()
        self.chol = np.zeros_like(self.cov)
        for a in range(self.n_arms):
            self.chol[a] = np.linalg.cholesky(self.cov[a])


_CLASSES = {cls.algorithm: cls for cls in (FixedBaseline, GaussianThompson, EpsilonGreedy, RlsThompson)}


def make_policy(config: PolicyConfig, n_arms: int, dim: int = 0, neutral_index: int = 0) -> Policy:
    if config.algorithm == "baseline":
        return FixedBaseline(config, n_arms, dim, neutral_index=neutral_index)
    return _CLASSES[config.algorithm](config, n_arms, dim)


def policy_from_snapshot(snapshot: Mapping[str, Any]) -> Policy:
    config = PolicyConfig.from_json(snapshot["config"])
    if config.algorithm != snapshot["algorithm"]:
        raise ValueError("snapshot algorithm does not match its config")
    policy = make_policy(config, int(snapshot["n_arms"]), int(snapshot["dim"]))
    policy._load_state(snapshot["state"])
    return policy


def default_sweep(base: PolicyConfig | None = None) -> list[PolicyConfig]:
    """The eleven standard policy configurations, in reporting order."""
    kw: dict = {}
    if base is not None:
        kw = {k: v for k, v in asdict(base).items() if k not in ("algorithm", "name", "features", "epsilon")}
    rls = [("brand",), ("device",), ("geo",), ("geo", "brand"), ("device", "brand"),
           ("geo", "device"), ("geo", "device", "brand")]
    configs = [
        PolicyConfig("baseline", name="baseline", **kw),
        PolicyConfig("gaussian_thompson", name="gaussian_thompson", **kw),
        PolicyConfig("epsilon_greedy", name="epsilon_greedy_0.3", epsilon=0.3, **kw),
        PolicyConfig("epsilon_greedy", name="epsilon_greedy_0.1", epsilon=0.1, **kw),
    ]
    for feats in rls:
        configs.append(PolicyConfig("rls_thompson", name="rls_" + "_".join(feats), features=feats, **kw))
    return configs
