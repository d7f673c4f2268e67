"""Goal-conditioned DDPG in numpy.

Actor ``pi(s, g)`` and critic ``Q(s, a, g)`` are ReLU MLPs with hand-written
backprop; inputs are the normalised state concatenated with the normalised
goal (universal value functions), plus the scaled action for the critic.
"""

from __future__ import annotations

import io
import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


class MLP:
    """Fully connected ReLU network with an optional ``tanh`` output layer."""

    def __init__(self, sizes: Sequence[int], out_tanh: bool = False, rng=None, out_scale: float = 1.0, dtype=np.float64):
        rng = np.random.default_rng() if rng is None else rng
        self.sizes = list(sizes)
        self.out_tanh = out_tanh
        self.dtype = np.dtype(dtype)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            bound = 1.0 / np.sqrt(n_in)
            if i == len(sizes) - 2:
                bound *= out_scale
            self.weights.append(rng.uniform(-bound, bound, size=(n_in, n_out)).astype(self.dtype))
            self.biases.append(rng.uniform(-bound, bound, size=n_out).astype(self.dtype))

    @property
    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "MLP":
        other = MLP.__new__(MLP)
        other.sizes = list(self.sizes)
        other.out_tanh = self.out_tanh
        other.dtype = self.dtype
        other.weights = [w.copy() for w in self.weights]
        other.biases = [b.copy() for b in self.biases]
        return other

    def forward(self, x: np.ndarray, keep: bool = False):
        h = np.asarray(x, dtype=self.dtype)
        acts = [h]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = np.maximum(h, 0.0)
            elif self.out_tanh:
                h = np.tanh(h)
            acts.append(h)
        return (h, acts) if keep else h

    def backward(self, acts: list[np.ndarray], dout: np.ndarray):
        """Gradients of ``sum(dout * output)``: ``(param_grads, input_grad)``."""
        grads: list[np.ndarray] = [None] * (2 * len(self.weights))  # type: ignore[list-item]
        d = np.asarray(dout, dtype=self.dtype)
        if self.out_tanh:
            d = d * (1.0 - acts[-1] ** 2)
        for i in range(len(self.weights) - 1, -1, -1):
            grads[2 * i] = acts[i].T @ d
            grads[2 * i + 1] = d.sum(axis=0)
            d = d @ self.weights[i].T
            if i > 0:
                d = d * (acts[i] > 0.0)
        return grads, d


class Adam:
    def __init__(self, params: list[np.ndarray], lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class Normalizer:
    """Running mean/std normaliser with output clipping."""

    def __init__(self, size: int, eps: float = 1e-2, clip: float = 5.0):
        self.size, self.eps, self.clip = size, eps, clip
        self.sum = np.zeros(size)
        self.sumsq = np.zeros(size)
        self.count = 0.0
        self.mean = np.zeros(size)
        self.std = np.ones(size)

    def update(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=float).reshape(-1, self.size)
        self.sum += x.sum(axis=0)
        self.sumsq += (x * x).sum(axis=0)
        self.count += x.shape[0]
        self.mean = self.sum / self.count
        var = np.maximum(self.eps**2, self.sumsq / self.count - self.mean**2)
        self.std = np.sqrt(var)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.clip((x - self.mean) / self.std, -self.clip, self.clip)

    def state(self) -> dict:
        return {"sum": self.sum, "sumsq": self.sumsq, "count": np.array(self.count)}

    def load(self, d: dict) -> None:
        self.sum = np.array(d["sum"], dtype=float)
        self.sumsq = np.array(d["sumsq"], dtype=float)
        self.count = float(d["count"])
        if self.count > 0:
            self.mean = self.sum / self.count
            self.std = np.sqrt(np.maximum(self.eps**2, self.sumsq / self.count - self.mean**2))


@dataclass
class AgentConfig:
    hidden: tuple = (256, 256, 256)
    gamma: float = 0.98
    soft_tau: float = 0.05
    actor_lr: float = 1e-3
    critic_lr: float = 1e-3
    noise_sigma: float = 0.2
    random_action_prob: float = 0.3
    action_l2: float = 1.0
    clip_q: bool = True
    normalize: bool = True
    norm_clip: float = 5.0
    dtype: str = "float32"

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if self.dtype not in ("float32", "float64"):
            raise ValueError("dtype must be 'float32' or 'float64'")
        if not 0.0 < self.soft_tau <= 1.0:
            raise ValueError("soft_tau must lie in (0, 1]")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")


@dataclass
class TrainDiagnostics:
    critic_loss: float
    actor_loss: float
    mean_q: float
    extra: dict = field(default_factory=dict)


class BoxCodec:
    """Actions are the box ``[low, high]`` mapped affinely onto ``[-1, 1]``."""

    def __init__(self, low, high):
        self.low = np.asarray(low, dtype=float)
        self.high = np.asarray(high, dtype=float)
        self.center = (self.high + self.low) / 2
        self.half = (self.high - self.low) / 2

    def decode(self, u, obs):
        return self.center + self.half * u

    def encode(self, a, obs):
        return (np.asarray(a, dtype=float) - self.center) / self.half

    def to_dict(self) -> dict:
        return {"kind": "box", "low": self.low.tolist(), "high": self.high.tolist()}


class RelativeCodec:
    """Target position = gripper position + ``max_step * u``; last entry is the finger target.

    The action handed to the environment stays an absolute target position;
    only the network sees it relative to the gripper.
    """

    def __init__(self, max_step: float, finger_max: float, grip_index: int = 0):
        self.max_step = float(max_step)
        self.finger_max = float(finger_max)
        self.grip_index = int(grip_index)

    def _grip(self, obs):
        obs = np.asarray(obs, dtype=float)
        return obs[..., self.grip_index : self.grip_index + 3]

    def decode(self, u, obs):
        u = np.asarray(u, dtype=float)
        a = np.empty_like(u)
        a[..., :3] = self._grip(obs) + self.max_step * u[..., :3]
        a[..., 3] = self.finger_max * (u[..., 3] + 1.0) / 2
        return a

    def encode(self, a, obs):
        a = np.asarray(a, dtype=float)
        u = np.empty_like(a)
        u[..., :3] = (a[..., :3] - self._grip(obs)) / self.max_step
        u[..., 3] = 2.0 * a[..., 3] / self.finger_max - 1.0
        return u

    def to_dict(self) -> dict:
        return {"kind": "relative", "max_step": self.max_step, "finger_max": self.finger_max, "grip_index": self.grip_index}


def codec_from_dict(d: dict):
    if d["kind"] == "box":
        return BoxCodec(d["low"], d["high"])
    return RelativeCodec(d["max_step"], d["finger_max"], d.get("grip_index", 0))


class DDPGAgent:
    """Actor, critic, their target copies, optimisers and normalisers.

    The networks work on normalised actions ``u`` in ``[-1, 1]^k``; ``codec``
    converts between ``u`` and environment actions.
    """

    def __init__(self, obs_dim: int, goal_dim: int, codec, cfg: AgentConfig, seed: int = 0, act_dim: int = 4):
        self.cfg = cfg
        self.obs_dim, self.goal_dim = obs_dim, goal_dim
        self.codec = codec
        self.act_dim = act_dim
        rng = np.random.default_rng(seed)
        in_dim = obs_dim + goal_dim
        self.actor = MLP([in_dim, *cfg.hidden, self.act_dim], out_tanh=True, rng=rng, dtype=cfg.dtype)
        self.critic = MLP([in_dim + self.act_dim, *cfg.hidden, 1], rng=rng, dtype=cfg.dtype)
        self.actor_target = self.actor.copy()
        self.critic_target = self.critic.copy()
        self.actor_opt = Adam(self.actor.params, cfg.actor_lr)
        self.critic_opt = Adam(self.critic.params, cfg.critic_lr)
        self.obs_norm = Normalizer(obs_dim, clip=cfg.norm_clip)
        self.goal_norm = Normalizer(goal_dim, clip=cfg.norm_clip)
        if cfg.gamma < 1.0:
            self.q_range = (-1.0 / (1.0 - cfg.gamma), 0.0)
        else:
            self.q_range = (-np.inf, 0.0)

    # -- inputs -----------------------------------------------------------

    def encode(self, obs, goal) -> np.ndarray:
        obs = np.atleast_2d(obs)
        goal = np.atleast_2d(goal)
        if self.cfg.normalize:
            return np.concatenate([self.obs_norm(obs), self.goal_norm(goal)], axis=1)
        return np.concatenate([obs, goal], axis=1)

    def update_normalizers(self, obs, goals) -> None:
        self.obs_norm.update(obs)
        self.goal_norm.update(goals)

    # -- forward passes ---------------------------------------------------

    def policy_u(self, obs, goal) -> np.ndarray:
        u = self.actor.forward(self.encode(obs, goal)).astype(np.float64)
        if not np.all(np.isfinite(u)):
            raise FloatingPointError("non-finite actor output")
        return u

    def act(self, obs, goal, rng: Optional[np.random.Generator] = None) -> np.ndarray:
        """Environment action(s); exploration noise is added when ``rng`` is given."""
        single = np.ndim(obs) == 1
        u = self.policy_u(obs, goal)
        if rng is not None:
            u = np.stack([self.explore(x, rng) for x in u])
        a = self.codec.decode(u, np.atleast_2d(obs))
        return a[0] if single else a

    def q_value(self, obs, action, goal, clip: Optional[bool] = None) -> np.ndarray:
        obs2 = np.atleast_2d(obs)
        u = np.atleast_2d(self.codec.encode(np.atleast_2d(action), obs2))
        q = self.critic.forward(np.concatenate([self.encode(obs2, goal), u], axis=1))[:, 0].astype(np.float64)
        if self.cfg.clip_q if clip is None else clip:
            q = np.clip(q, *self.q_range)
        return q

    def explore(self, u, rng: np.random.Generator) -> np.ndarray:
        """Perturb a normalised action: uniform with ``random_action_prob``, else Gaussian.

        The Gaussian has standard deviation ``noise_sigma`` in normalised units,
        i.e. that fraction of the action half-range.  Results are clipped to ``[-1, 1]``.
        """
        u = np.asarray(u, dtype=float)
        if rng.random() < self.cfg.random_action_prob:
            return rng.uniform(-1.0, 1.0, size=u.shape)
        return np.clip(u + self.cfg.noise_sigma * rng.standard_normal(u.shape), -1.0, 1.0)

    # -- losses and gradients ---------------------------------------------

    def critic_targets(self, batch) -> np.ndarray:
        x_next = self.encode(batch.next_obs, batch.goals)
        a_next = self.actor_target.forward(x_next)
        q_next = self.critic_target.forward(np.concatenate([x_next, a_next], axis=1))[:, 0]
        y = batch.rewards + self.cfg.gamma * q_next
        if self.cfg.clip_q:
            y = np.clip(y, *self.q_range)
        return y

    def critic_loss_and_grads(self, batch, targets: Optional[np.ndarray] = None):
        y = self.critic_targets(batch) if targets is None else targets
        u = self.codec.encode(batch.actions, batch.obs)
        x = np.concatenate([self.encode(batch.obs, batch.goals), u], axis=1)
        q, acts = self.critic.forward(x, keep=True)
        err = q[:, 0] - y
        n = err.shape[0]
        loss = float(np.mean(err**2))
        grads, _ = self.critic.backward(acts, (2.0 / n) * err[:, None])
        return loss, grads, float(q.mean())

    def actor_loss_and_grads(self, batch):
        x = self.encode(batch.obs, batch.goals)
        y, a_acts = self.actor.forward(x, keep=True)
        q, c_acts = self.critic.forward(np.concatenate([x, y], axis=1), keep=True)
        n, k = y.shape
        l2 = self.cfg.action_l2
        loss = float(-q.mean() + l2 * np.mean(y**2))
        _, dx = self.critic.backward(c_acts, np.full((n, 1), -1.0 / n))
        dy = dx[:, -self.act_dim :] + (2.0 * l2 / (n * k)) * y
        grads, _ = self.actor.backward(a_acts, dy)
        return loss, grads

    def soft_update(self, tau: Optional[float] = None) -> None:
        tau = self.cfg.soft_tau if tau is None else tau
        for net, tgt in ((self.actor, self.actor_target), (self.critic, self.critic_target)):
            for p, t in zip(net.params, tgt.params):
                t *= 1.0 - tau
                t += tau * p

    def train_step(self, batch, update_target: bool = True) -> TrainDiagnostics:
        c_loss, c_grads, mean_q = self.critic_loss_and_grads(batch)
        a_loss, a_grads = self.actor_loss_and_grads(batch)
        for g in c_grads + a_grads:
            if not np.all(np.isfinite(g)):
                log.error("non-finite gradient; critic loss %r actor loss %r", c_loss, a_loss)
                raise FloatingPointError("non-finite gradient in train_step")
        self.critic_opt.step(self.critic.params, c_grads)
        self.actor_opt.step(self.actor.params, a_grads)
        if update_target:
            self.soft_update()
        return TrainDiagnostics(c_loss, a_loss, mean_q)

    # -- checkpoints ------------------------------------------------------

    def state_dict(self) -> dict:
        d: dict = {}
        for name in ("actor", "critic", "actor_target", "critic_target"):
            for i, p in enumerate(getattr(self, name).params):
                d[f"{name}.{i}"] = p
        for name in ("obs_norm", "goal_norm"):
            for k, v in getattr(self, name).state().items():
                d[f"{name}.{k}"] = v
        return d

    def save(self, path_or_file, extra: Optional[dict] = None) -> None:
        meta = {
            "version": CHECKPOINT_VERSION,
            "obs_dim": self.obs_dim,
            "goal_dim": self.goal_dim,
            "act_dim": self.act_dim,
            "codec": self.codec.to_dict(),
            "config": asdict(self.cfg),
            "extra": extra or {},
        }
        np.savez(path_or_file, __meta__=np.array(json.dumps(meta)), **self.state_dict())

    @staticmethod
    def read_meta(path_or_file) -> dict:
        with np.load(path_or_file) as data:
            return json.loads(str(data["__meta__"]))

    @classmethod
    def load(cls, path_or_file) -> "DDPGAgent":
        with np.load(path_or_file) as data:
            meta = json.loads(str(data["__meta__"]))
            if meta["version"] != CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint version {meta['version']}")
            agent = cls(
                meta["obs_dim"],
                meta["goal_dim"],
                codec_from_dict(meta["codec"]),
                AgentConfig(**meta["config"]),
                act_dim=meta["act_dim"],
            )
            for name in ("actor", "critic", "actor_target", "critic_target"):
                for i, p in enumerate(getattr(agent, name).params):
                    src = data[f"{name}.{i}"]
                    if src.shape != p.shape:
                        raise ValueError(f"shape mismatch for {name}.{i}: {src.shape} vs {p.shape}")
                    p[...] = src
            for name in ("obs_norm", "goal_norm"):
                getattr(agent, name).load({k: data[f"{name}.{k}"] for k in ("sum", "sumsq", "count")})
        return agent

    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        self.save(buf)
        return buf.getvalue()
