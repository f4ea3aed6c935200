"""Learned wing controller: pretrained sequence policy, residual PPO, rewards.

The base policy is a small transformer encoder-decoder with a variational
latent bottleneck: three consecutive 12-state vectors are encoded through
self-attention into a 32-d latent distribution, and the decoder
cross-attends a learned query against the sampled latent to produce one
wing action in [0, 1].  Supervised pretraining fits the demonstration
windows with squared error plus a small KL pull toward the unit prior.

On top of the frozen base, a feedforward residual actor (and a value
critic) is trained with clipped-surrogate PPO in the simulator; the
composed command is a = clamp(a_dec + c_aux tanh(a_aux), 0, 1).  Rewards:
peak velocity bonus when crossing the end of acceleration, a terminal
bonus for velocity removed during deceleration, and an action-rate
penalty each step.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .config import SIM_DT, Config
from .control import PitchController
from .dynamics import EnvBatch
from .errors import CorruptFile, DivergedLoss, MissingEvent, SchemaMismatch
from .nn import Tensor, autodiff as ad, no_grad
from .nn.layers import (
    MLP,
    Linear,
    Module,
    TransformerCrossLayer,
    TransformerEncoderLayer,
    parameter,
)
from .nn.optim import Adam
from .trajectory import ReferenceTrajectory

STATE_DIM = 12
WINDOW = 3


class Normalizer:
    """Fixed per-dimension standardization, fit once on the demo windows."""

    def __init__(self, mean=None, std=None):
        self.mean = np.zeros(STATE_DIM) if mean is None else np.asarray(mean, dtype=float)
        self.std = np.ones(STATE_DIM) if std is None else np.asarray(std, dtype=float)

    @classmethod
    def fit(cls, states: np.ndarray):
        flat = states.reshape(-1, states.shape[-1])
        return cls(flat.mean(axis=0), np.maximum(flat.std(axis=0), 1e-3))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std


class BasePolicy(Module):
    def __init__(self, cfg: Config, seed: int = 0, normalizer: Normalizer | None = None):
        p = cfg.pretrain
        rng = np.random.default_rng(seed)
        d = p.latent_dim
        self.cfg_dims = dict(
            latent_dim=p.latent_dim, ff_dim=p.ff_dim, n_heads=p.n_heads, n_layers=p.n_layers
        )
        self.normalizer = normalizer or Normalizer()
        self.embed = Linear(STATE_DIM, d, rng)
        self.mu_token = parameter(rng.normal(0, 0.02, d))
        self.logvar_token = parameter(rng.normal(0, 0.02, d))
        self.encoder = [TransformerEncoderLayer(d, p.n_heads, p.ff_dim, rng) for _ in range(p.n_layers)]
        self.z_proj = Linear(d, d, rng)
        self.query = parameter(rng.normal(0, 0.02, d))
        self.decoder = [TransformerCrossLayer(d, p.n_heads, p.ff_dim, rng) for _ in range(p.n_layers)]
        self.head = Linear(d, 1, rng)

    def encode(self, windows: np.ndarray):
        b = windows.shape[0]
        x = Tensor(self.normalizer(windows))
        tokens = self.embed(x.reshape(b * WINDOW, STATE_DIM)).reshape(b, WINDOW, -1)
        d = tokens.shape[-1]
        mu_tok = self.mu_token.reshape(1, 1, d) + Tensor(np.zeros((b, 1, d)))
        lv_tok = self.logvar_token.reshape(1, 1, d) + Tensor(np.zeros((b, 1, d)))
        seq = ad.concatenate([mu_tok, lv_tok, tokens], axis=1)
        for layer in self.encoder:
            seq = layer(seq)
        return seq[:, 0], seq[:, 1]

    def decode(self, z: Tensor):
        b, d = z.shape
        memory = self.z_proj(z).reshape(b, 1, d)
        q = self.query.reshape(1, 1, d) + Tensor(np.zeros((b, 1, d)))
        for layer in self.decoder:
            q = layer(q, memory)
        return ad.sigmoid(self.head(q.reshape(b, d)).reshape(b))

    def forward_train(self, windows: np.ndarray, rng: np.random.Generator):
        mu, logvar = self.encode(windows)
        eps = Tensor(rng.standard_normal(mu.shape))
        z = mu + ad.exp(logvar * 0.5) * eps
        action = self.decode(z)
        kl = 0.5 * ((mu * mu) + ad.exp(logvar) - logvar - 1.0).sum(axis=-1).mean()
        return action, kl

    def act(self, windows: np.ndarray) -> np.ndarray:
        """Deterministic decode at the posterior mean."""
        with no_grad():
            mu, _ = self.encode(windows)
            return self.decode(mu).data


@dataclass
class PretrainResult:
    policy: BasePolicy
    train_losses: list
    val_mae: list
    kl_values: list


def pretrain(
    windows: np.ndarray,
    targets: np.ndarray,
    cfg: Config,
    epochs: int | None = None,
    seed: int | None = None,
    val_fraction: float = 0.1,
    kl_weight: float | None = None,
) -> PretrainResult:
    """Supervised pretraining of the base policy on demonstration windows.

    The holdout split is taken over whole windows with a seeded shuffle
    before any training; validation reports the mean absolute action
    error at the posterior mean.
    """
    p = cfg.pretrain
    epochs = p.desk_epochs if epochs is None else epochs
    seed = p.seed if seed is None else seed
    kl_weight = p.kl_weight if kl_weight is None else kl_weight
    rng = np.random.default_rng(seed)

    n = len(windows)
    order = rng.permutation(n)
    n_val = max(1, int(round(val_fraction * n)))
    val_idx, train_idx = order[:n_val], order[n_val:]
    w_train, t_train = windows[train_idx], targets[train_idx]
    w_val, t_val = windows[val_idx], targets[val_idx]

    normalizer = Normalizer.fit(w_train)
    policy = BasePolicy(cfg, seed=seed, normalizer=normalizer)
    opt = Adam(policy.parameters(), lr=p.learning_rate)

    losses, maes, kls = [], [], []
    bs = p.batch_size
    for epoch in range(epochs):
        perm = rng.permutation(len(w_train))
        epoch_loss = 0.0
        epoch_kl = 0.0
        n_batches = 0
        for start in range(0, len(perm), bs):
            idx = perm[start : start + bs]
            action, kl = policy.forward_train(w_train[idx], rng)
            err = action - Tensor(t_train[idx])
            loss = (err * err).mean() + kl * kl_weight
            if not np.isfinite(loss.data):
                raise DivergedLoss(f"pretraining loss became {loss.data}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            epoch_loss += float(loss.data)
            epoch_kl += float(kl.data)
            n_batches += 1
        losses.append(epoch_loss / n_batches)
        kls.append(epoch_kl / n_batches)
        maes.append(float(np.mean(np.abs(policy.act(w_val) - t_val))))
    return PretrainResult(policy=policy, train_losses=losses, val_mae=maes, kl_values=kls)


class ResidualActor(Module):
    """Feedforward residual policy head; tanh is applied at composition time."""

    def __init__(self, cfg: Config, seed: int = 0):
        rng = np.random.default_rng(seed)
        sizes = [STATE_DIM, *cfg.rl.hidden_sizes, 1]
        self.net = MLP(sizes, rng, out_scale=0.01)
        self.log_std = parameter(np.array([cfg.rl.log_std_init]))

    def mean(self, obs: Tensor) -> Tensor:
        return self.net(obs).reshape(obs.shape[0])

    def distribution(self, obs: Tensor):
        mu = self.mean(obs)
        std = ad.exp(self.log_std)
        return mu, std


class ValueNet(Module):
    def __init__(self, cfg: Config, seed: int = 0):
        rng = np.random.default_rng(seed + 104729)
        self.net = MLP([STATE_DIM, *cfg.rl.hidden_sizes, 1], rng)

    def __call__(self, obs: Tensor) -> Tensor:
        return self.net(obs).reshape(obs.shape[0])


def compose_action(a_dec, a_aux, c_aux: float):
    """a = clamp(a_dec + c_aux tanh(a_aux), 0, 1).

    c_aux = 0 is the degenerate residual-disabled case (composition
    reduces to the base action exactly); negative gains are rejected.
    """
    if c_aux < 0.0:
        raise ValueError("c_aux must be nonnegative")
    return np.clip(a_dec + c_aux * np.tanh(a_aux), 0.0, 1.0)


def clipped_surrogate(ratio: Tensor, advantages: np.ndarray, clip: float) -> Tensor:
    """PPO clipped surrogate: min(r A, clip(r, 1-c, 1+c) A), elementwise.

    The clipped branch is a constant (no gradient), so ratios outside the
    clip window on the unfavourable side contribute no policy gradient.
    """
    clipped = Tensor(np.clip(ratio.data, 1.0 - clip, 1.0 + clip))
    adv = Tensor(advantages)
    return ad.minimum(ratio * adv, clipped * adv)


@dataclass
class RewardSpec:
    w_peak: float = 5.0
    w_terminal: float = 10.0
    w_rate: float = -0.275
    t_B: float = 0.0
    t_E: float = 0.0

    def __post_init__(self):
        if self.w_rate >= 0.0:
            raise ValueError("the action-rate term must be a penalty")


def episode_reward(trace: dict, spec: RewardSpec) -> np.ndarray:
    """Per-step rewards for one recorded episode.

    trace needs t (step end times), v_x, a (actions), a_prev0 (action
    before the first step).  The peak term lands on the step that crosses
    t_B; the terminal term on the last step.
    """
    t = np.asarray(trace["t"], dtype=float)
    v_x = np.asarray(trace["v_x"], dtype=float)
    a = np.asarray(trace["a"], dtype=float)
    a_prev = np.concatenate([[trace.get("a_prev0", 0.0)], a[:-1]])
    rewards = spec.w_rate * np.abs(a - a_prev)
    crossing = np.nonzero(t >= spec.t_B - 1e-12)[0]
    if len(crossing) == 0:
        raise MissingEvent("trace never crosses the end of the acceleration phase")
    k = int(crossing[0])
    v_b = v_x[k]
    rewards[k] += spec.w_peak * v_b
    rewards[-1] += spec.w_terminal * (v_b - abs(v_x[-1]))
    return rewards


class WingTaskEnv:
    """batched braking task: nominal quadrotor controller + learned wing action.

    Observations are raw 12-state vectors; episodes run the full reference
    horizon and all environments reset together.  Rewards follow the
    three-term spec with |v_B| measured in the travel direction.
    """

    def __init__(self, cfg: Config, traj: ReferenceTrajectory, n_envs: int, seed: int):
        self.cfg = cfg
        self.traj = traj
        self.batch = EnvBatch(cfg, n_envs=n_envs, seed=seed)
        self.ctl = PitchController(cfg.robot, cfg.control, n_envs)
        self.n_steps = int(round(traj.end_time / SIM_DT))
        self.spec = RewardSpec(
            w_peak=cfg.rl.reward_peak, w_terminal=cfg.rl.reward_terminal,
            w_rate=cfg.rl.reward_rate, t_B=traj.t_B, t_E=traj.end_time,
        )
        self._b_step = int(np.ceil(traj.t_B / SIM_DT - 1e-9)) - 1  # step index whose end crosses t_B
        self.reset_episode()

    def reset_episode(self):
        self.batch.new_episode()
        self.ctl.reset()
        self.k = 0
        self.v_b = np.full(self.batch.n, np.nan)
        self.prev_a = np.zeros(self.batch.n)
        self.ref = self.traj.sample_arrays(np.array([0.0]))
        obs = self.batch.observe(self.ref)
        self.window = np.repeat(obs[:, None, :], WINDOW, axis=1)
        return obs

    def observe(self):
        return self.batch.observe(self.ref)

    def step(self, actions: np.ndarray):
        """Advance one tick under the given wing actions.

        Returns (obs, rewards, done, info).  done is global: episodes are
        synchronized across the batch.
        """
        cmds, _, _, _ = self.ctl.motor_commands(
            self.ref, self.batch.theta, self.batch.theta_dot, self.batch.net_prop_speed(), SIM_DT
        )
        self.batch.step(cmds, actions)
        rewards = self.spec.w_rate * np.abs(actions - self.prev_a)
        if self.k == self._b_step:
            self.v_b = self.batch.vel[:, 0].copy()
            rewards = rewards + self.spec.w_peak * self.v_b
        self.prev_a = np.asarray(actions, dtype=float).copy()
        self.k += 1
        done = self.k >= self.n_steps
        if done:
            rewards = rewards + self.spec.w_terminal * (self.v_b - np.abs(self.batch.vel[:, 0]))
        t_next = min(self.k * SIM_DT, self.traj.end_time)
        self.ref = self.traj.sample_arrays(np.array([t_next]))
        obs = self.batch.observe(self.ref)
        self.window = np.concatenate([self.window[:, 1:], obs[:, None, :]], axis=1)
        return obs, rewards, done, dict(v_b=self.v_b, v_x=self.batch.vel[:, 0].copy())


def _gaussian_logp(u, mu, std):
    return -0.5 * (((u - mu) / std) ** 2) - np.log(std) - 0.5 * np.log(2.0 * np.pi)


@dataclass
class TrainHistory:
    episode_returns: list = field(default_factory=list)
    mean_delta_v: list = field(default_factory=list)
    iterations: int = 0


def _collect_and_update(
    cfg: Config,
    env: WingTaskEnv,
    actor: ResidualActor,
    value: ValueNet,
    opts,
    rng: np.random.Generator,
    act_fn,
    iterations: int,
    history: TrainHistory,
):
    """Shared PPO loop for residual and naive training.

    act_fn(u, window) maps the raw Gaussian sample to the environment
    action (residual composition or plain sigmoid).

    Episodes are synchronized across the batch, so most 12-step segments
    carry only the action-rate penalty while the peak/terminal rewards
    land in a few segments per episode.  Advantages are therefore scaled
    by a running std across segments (not per-segment): segments without
    event signal keep proportionally small gradients instead of having
    their noise blown up to unit variance.
    """
    rl = cfg.rl
    actor_opt, value_opt = opts
    norm = getattr(actor, "obs_normalizer", Normalizer())
    obs = env.observe()
    ep_return = np.zeros(env.batch.n)
    running_adv_std = None
    for it in range(iterations):
        obs_buf = np.empty((rl.horizon, env.batch.n, STATE_DIM))
        u_buf = np.empty((rl.horizon, env.batch.n))
        logp_buf = np.empty((rl.horizon, env.batch.n))
        rew_buf = np.empty((rl.horizon, env.batch.n))
        done_buf = np.zeros(rl.horizon, dtype=bool)
        for h in range(rl.horizon):
            obs_n = norm(obs)
            with no_grad():
                mu = actor.mean(Tensor(obs_n)).data
                std = float(np.exp(actor.log_std.data[0]))
            u = mu + std * rng.standard_normal(mu.shape)
            actions = act_fn(u, env.window)
            obs_buf[h] = obs
            u_buf[h] = u
            logp_buf[h] = _gaussian_logp(u, mu, std)
            obs, rewards, done, info = env.step(actions)
            rew_buf[h] = rewards
            done_buf[h] = done
            ep_return += rewards
            if done:
                history.episode_returns.append(float(ep_return.mean()))
                history.mean_delta_v.append(float((info["v_b"] - np.abs(info["v_x"])).mean()))
                ep_return[:] = 0.0
                obs = env.reset_episode()
        with no_grad():
            flat = norm(obs_buf.reshape(-1, STATE_DIM))
            values = value(Tensor(flat)).data.reshape(rl.horizon, env.batch.n)
            boot = value(Tensor(norm(obs))).data
        adv = np.zeros_like(rew_buf)
        last = np.zeros(env.batch.n)
        next_value = boot
        for h in reversed(range(rl.horizon)):
            nonterminal = 0.0 if done_buf[h] else 1.0
            delta = rew_buf[h] + rl.gamma * next_value * nonterminal - values[h]
            last = delta + rl.gamma * rl.gae_lambda * nonterminal * last
            adv[h] = last
            next_value = values[h]
        returns = adv + values
        flat_obs = norm(obs_buf.reshape(-1, STATE_DIM))
        flat_u = u_buf.reshape(-1)
        flat_logp = logp_buf.reshape(-1)
        flat_adv = adv.reshape(-1)
        batch_std = float(flat_adv.std())
        running_adv_std = batch_std if running_adv_std is None else (
            0.95 * running_adv_std + 0.05 * batch_std
        )
        flat_adv = (flat_adv - flat_adv.mean()) / (max(running_adv_std, 1e-6) + 1e-8)
        flat_ret = returns.reshape(-1)
        for _ in range(rl.update_epochs):
            mu_t = actor.mean(Tensor(flat_obs))
            std_t = ad.exp(actor.log_std)
            z = (Tensor(flat_u) - mu_t) / std_t
            logp_t = z * z * (-0.5) - ad.log(std_t) - 0.5 * np.log(2.0 * np.pi)
            ratio = ad.exp(logp_t - Tensor(flat_logp))
            surrogate = clipped_surrogate(ratio, flat_adv, rl.clip)
            policy_loss = -surrogate.mean()
            v_t = value(Tensor(flat_obs))
            v_err = v_t - Tensor(flat_ret)
            value_loss = (v_err * v_err).mean()
            if not (np.isfinite(policy_loss.data) and np.isfinite(value_loss.data)):
                raise DivergedLoss("PPO loss became non-finite")
            actor_opt.zero_grad()
            value_opt.zero_grad()
            (policy_loss + value_loss * rl.value_coef).backward()
            actor_opt.step(max_grad_norm=rl.max_grad_norm)
            value_opt.step(max_grad_norm=rl.max_grad_norm)
            actor.log_std.data = np.clip(actor.log_std.data, -4.0, 0.5)
        history.iterations = it + 1
    return history


def ppo_train(
    cfg: Config,
    traj: ReferenceTrajectory,
    base: BasePolicy,
    seed: int = 0,
    iterations: int | None = None,
    n_envs: int | None = None,
    c_aux: float | None = None,
):
    """Residual PPO on top of the frozen base policy."""
    rl = cfg.rl
    iterations = rl.desk_iterations if iterations is None else iterations
    n_envs = rl.desk_num_envs if n_envs is None else n_envs
    if c_aux is None:
        c_aux = rl.c_aux_by_duration.get(round(traj.total_time, 1), rl.c_aux_default)
    env = WingTaskEnv(cfg, traj, n_envs, seed)
    actor = ResidualActor(cfg, seed=seed)
    actor.obs_normalizer = base.normalizer
    value = ValueNet(cfg, seed=seed)
    opts = (Adam(actor.parameters(), lr=rl.learning_rate),
            Adam(value.parameters(), lr=rl.learning_rate))
    rng = np.random.default_rng(seed + 7919)

    def act_fn(u, window):
        a_dec = base.act(window)
        return compose_action(a_dec, u, c_aux)

    history = _collect_and_update(cfg, env, actor, value, opts, rng, act_fn, iterations, history=TrainHistory())
    actor.c_aux = c_aux
    return actor, value, history


def naive_train(
    cfg: Config,
    traj: ReferenceTrajectory,
    seed: int = 0,
    iterations: int | None = None,
    n_envs: int | None = None,
    normalizer: Normalizer | None = None,
):
    """PPO from scratch with a sigmoid action head (the comparison baseline)."""
    rl = cfg.rl
    iterations = rl.desk_iterations if iterations is None else iterations
    n_envs = rl.desk_num_envs if n_envs is None else n_envs
    env = WingTaskEnv(cfg, traj, n_envs, seed)
    actor = ResidualActor(cfg, seed=seed)
    actor.obs_normalizer = normalizer or Normalizer()
    value = ValueNet(cfg, seed=seed)
    opts = (Adam(actor.parameters(), lr=rl.learning_rate),
            Adam(value.parameters(), lr=rl.learning_rate))
    rng = np.random.default_rng(seed + 7919)

    def act_fn(u, window):
        return 1.0 / (1.0 + np.exp(-u))

    history = _collect_and_update(cfg, env, actor, value, opts, rng, act_fn, iterations, history=TrainHistory())
    return actor, value, history


def rollout_policy(
    cfg: Config,
    traj: ReferenceTrajectory,
    action_source,
    n_envs: int = 1,
    seed: int = 0,
    deterministic: bool = True,
):
    """Run full episodes under a policy callable and record traces.

    action_source(obs, window) -> actions in [0, 1].  Returns a dict with
    per-step actions/v_x/phase arrays (averaged over envs) and per-env
    summary metrics.
    """
    env = WingTaskEnv(cfg, traj, n_envs, seed)
    obs = env.observe()
    actions_t, vx_t, phase_t, t_t = [], [], [], []
    total_reward = np.zeros(n_envs)
    done = False
    while not done:
        phase_t.append(int(env.ref["phase"][0]))
        t_t.append(env.k * SIM_DT)
        acts = np.clip(action_source(obs, env.window), 0.0, 1.0)
        obs, rew, done, info = env.step(acts)
        actions_t.append(acts.copy())
        vx_t.append(info["v_x"].copy())
        total_reward += rew
    return dict(
        t=np.asarray(t_t),
        actions=np.asarray(actions_t),
        v_x=np.asarray(vx_t),
        phase=np.asarray(phase_t),
        v_B=info["v_b"],
        v_E=info["v_x"],
        delta_v=info["v_b"] - np.abs(info["v_x"]),
        total_reward=total_reward,
    )


def residual_action_source(base: BasePolicy, actor: ResidualActor, c_aux: float):
    norm = actor.obs_normalizer

    def source(obs, window):
        a_dec = base.act(window)
        with no_grad():
            mu = actor.mean(Tensor(norm(obs))).data
        return compose_action(a_dec, mu, c_aux)

    return source


def base_action_source(base: BasePolicy):
    def source(obs, window):
        return base.act(window)

    return source


def naive_action_source(actor: ResidualActor):
    norm = actor.obs_normalizer

    def source(obs, window):
        with no_grad():
            mu = actor.mean(Tensor(norm(obs))).data
        return 1.0 / (1.0 + np.exp(-mu))

    return source


# -- bundle serialization ----------------------------------------------------

_MAGIC = b"PTGMBNDL"
_BUNDLE_VERSION = 1


def save_bundle(path, kind: str, modules: dict, meta: dict):
    """Versioned binary bundle: header JSON + named float64 tensors.

    Layout: 8-byte magic, u32 version, u32 header length, header JSON
    (kind, meta, tensor index with shapes), then tensor payloads in index
    order, little-endian float64.
    """
    tensors = {}
    for mod_name, module in modules.items():
        for key, arr in module.state_arrays().items():
            tensors[f"{mod_name}/{key}"] = np.asarray(arr, dtype="<f8")
    index = [dict(name=k, shape=list(v.shape)) for k, v in tensors.items()]
    header = json.dumps(dict(kind=kind, meta=meta, index=index)).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", _BUNDLE_VERSION, len(header)))
        fh.write(header)
        for k in tensors:
            fh.write(tensors[k].tobytes())
    return path


def load_bundle(path):
    """Returns (kind, meta, tensors dict)."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _MAGIC:
            raise CorruptFile(f"{path} is not a policy bundle")
        version, hlen = struct.unpack("<II", fh.read(8))
        if version > _BUNDLE_VERSION:
            raise SchemaMismatch(f"bundle version {version} is newer than supported {_BUNDLE_VERSION}")
        try:
            header = json.loads(fh.read(hlen))
        except json.JSONDecodeError as exc:
            raise CorruptFile(f"unreadable bundle header in {path}") from exc
        tensors = {}
        for entry in header["index"]:
            count = int(np.prod(entry["shape"])) if entry["shape"] else 1
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise CorruptFile(f"truncated tensor payload in {path}")
            tensors[entry["name"]] = np.frombuffer(buf, dtype="<f8").reshape(entry["shape"]).copy()
    return header["kind"], header["meta"], tensors


def save_base_policy(path, policy: BasePolicy, extra_meta=None):
    meta = dict(
        dims=policy.cfg_dims,
        norm_mean=policy.normalizer.mean.tolist(),
        norm_std=policy.normalizer.std.tolist(),
    )
    meta.update(extra_meta or {})
    return save_bundle(path, "base_policy", {"policy": policy}, meta)


def load_base_policy(path, cfg: Config) -> BasePolicy:
    kind, meta, tensors = load_bundle(path)
    if kind != "base_policy":
        raise SchemaMismatch(f"expected a base_policy bundle, found {kind}")
    policy = BasePolicy(cfg, seed=0, normalizer=Normalizer(meta["norm_mean"], meta["norm_std"]))
    policy.load_state_arrays({k.split("/", 1)[1]: v for k, v in tensors.items()})
    return policy


def save_residual(path, actor: ResidualActor, value: ValueNet, c_aux: float, extra_meta=None):
    meta = dict(
        c_aux=c_aux,
        norm_mean=actor.obs_normalizer.mean.tolist(),
        norm_std=actor.obs_normalizer.std.tolist(),
    )
    meta.update(extra_meta or {})
    return save_bundle(path, "residual", {"actor": actor, "value": value}, meta)


def load_residual(path, cfg: Config):
    kind, meta, tensors = load_bundle(path)
    if kind not in ("residual", "naive"):
        raise SchemaMismatch(f"expected a residual/naive bundle, found {kind}")
    actor = ResidualActor(cfg, seed=0)
    value = ValueNet(cfg, seed=0)
    actor.load_state_arrays(
        {k.split("/", 1)[1]: v for k, v in tensors.items() if k.startswith("actor/")}
    )
    value.load_state_arrays(
        {k.split("/", 1)[1]: v for k, v in tensors.items() if k.startswith("value/")}
    )
    actor.obs_normalizer = Normalizer(meta["norm_mean"], meta["norm_std"])
    actor.c_aux = meta.get("c_aux", cfg.rl.c_aux_default)
    return actor, value, meta
