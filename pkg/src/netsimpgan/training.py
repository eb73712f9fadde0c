"""Adversarial training of the imputation and mask GANs with gradient penalty.

Tensors are ``(B, V, T)`` and hold data already scaled to [-1, 1]. ``mask``
is the observation mask ``M`` and ``mask_star`` the prediction mask that
additionally hides the whole future.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .core import Graph
from .gtan import NetworkConfig, build_variant, harden

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "netsimpgan-checkpoint"
CHECKPOINT_VERSION = 1
# observed inputs beyond this magnitude are treated as unscaled data
SCALED_BOUND = 2.0


class TrainingDivergedError(FloatingPointError):
    """A loss became NaN or infinite during training."""


class CheckpointError(ValueError):
    """A checkpoint is unreadable or does not match the expected architecture."""


@dataclass
class TrainConfig:
    batch_size: int = 64
    epochs: int = 1000
    learning_rate: float = 1e-4
    adam_betas: tuple = (0.5, 0.9)
    beta: float = 10.0
    gp_lambda: float = 10.0
    disc_steps: int = 5
    gen_steps: int = 1
    alternation: str = "batch"
    tau: float = 0.0
    harden_fake_masks: bool = False
    recon_reduction: str = "sum"
    checkpoint_every: int = 0
    seed: int = 0

    def __post_init__(self):
        for name in ("batch_size", "epochs", "disc_steps", "gen_steps"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("learning_rate",):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.beta < 0 or self.gp_lambda < 0:
            raise ValueError("beta and gp_lambda must be non-negative")
        if self.alternation not in ("batch", "epoch"):
            raise ValueError("alternation must be 'batch' or 'epoch'")
        if self.recon_reduction not in ("sum", "mean"):
            raise ValueError("recon_reduction must be 'sum' or 'mean'")
        self.adam_betas = tuple(float(b) for b in self.adam_betas)


class ImpGanModel(nn.Module):
    """The imputation generator, mask generator and their two critics on one graph."""

    def __init__(self, graph: Graph, net_cfg: NetworkConfig, t_history: int, tau: float = 0.0):
        super().__init__()
        if net_cfg.n_nodes != graph.node_count:
            raise ValueError("network node count differs from the graph")
        if not 1 <= t_history < net_cfg.n_timesteps:
            raise ValueError(f"t_history={t_history} invalid for T={net_cfg.n_timesteps}")
        self.graph = graph
        self.net_cfg = net_cfg
        self.t_history = t_history
        self.tau = tau
        nets = build_variant(net_cfg)
        self.imputer = nets.imputer
        self.mask_generator = nets.mask_generator
        self.imputation_critic = nets.imputation_critic
        self.mask_critic = nets.mask_critic
        weighted = net_cfg.graph_kind == "gcn"
        self.register_buffer("adj", torch.as_tensor(graph.adjacency(weighted=weighted), dtype=torch.float32))

    @property
    def dtype(self) -> torch.dtype:
        return self.adj.dtype

    def generator_parameters(self):
        return list(self.imputer.parameters()) + list(self.mask_generator.parameters())

    def critic_parameters(self):
        return list(self.imputation_critic.parameters()) + list(self.mask_critic.parameters())

    def manifest(self) -> dict:
        return {
            "network": self.net_cfg.manifest(),
            "t_history": self.t_history,
            "tau": self.tau,
            "node_count": self.graph.node_count,
            "edges": sorted([list(e) for e in self.graph.edges]),
            "edge_weights": None if self.graph.edge_weights is None
            else sorted([[i, j, w] for (i, j), w in self.graph.edge_weights.items()]),
        }

    def generate_masks(self, omega: torch.Tensor) -> torch.Tensor:
        return self.mask_generator(omega, self.adj)


def masking_operator(x: torch.Tensor, mask: torch.Tensor, tau: float = 0.0) -> torch.Tensor:
    """Torch form of the masking operator ``X * M + tau * (1 - M)``.

    Soft masks are blended; binary masks never read the carriers.
    """
    if x.shape != mask.shape:
        raise ValueError(f"shape mismatch: {tuple(x.shape)} vs {tuple(mask.shape)}")
    binary = ((mask == 0) | (mask == 1)).all()
    if binary:
        return torch.where(mask == 1, x, torch.full_like(x, tau))
    return x * mask + tau * (1 - mask)


def prediction_mask(mask: torch.Tensor, t_history: int) -> torch.Tensor:
    out = mask.clone()
    out[..., t_history:] = 0
    return out


def _check_scaled(x: torch.Tensor, mask_star: torch.Tensor) -> None:
    observed = x[mask_star == 1]
    if observed.numel() and observed.abs().max() > SCALED_BOUND:
        raise ValueError(
            f"observed inputs reach {observed.abs().max().item():.3g}; impute_forward expects data scaled to [-1, 1]"
        )


def imputer_raw(model: ImpGanModel, x: torch.Tensor, mask_star: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
    """Raw network output on ``X * M* + Z * (1 - M*)``."""
    y = torch.where(mask_star == 1, x, z)
    return model.imputer(y, model.adj)


def impute_forward(model: ImpGanModel, x, mask_star, z, *, return_raw: bool = False):
    """Copy observed entries and let the network fill the rest.

    Observed entries are copied bit-exactly; carriers under ``mask_star = 0``
    are never read.
    """
    x = torch.as_tensor(x, dtype=model.dtype)
    mask_star = torch.as_tensor(mask_star, dtype=model.dtype)
    z = torch.as_tensor(z, dtype=model.dtype)
    _check_scaled(x, mask_star)
    raw = imputer_raw(model, x, mask_star, z)
    out = torch.where(mask_star == 1, x, raw)
    return (out, raw) if return_raw else out


def lipschitz_penalty(critic, real: torch.Tensor, fake: torch.Tensor,
                      generator: torch.Generator | None = None) -> torch.Tensor:
    """Gradient penalty ``E[(||grad D(x~)||_2 - 1)^2]`` on random interpolates."""
    if real.shape != fake.shape:
        raise ValueError("real and fake inputs must share a shape")
    eps_shape = (real.shape[0],) + (1,) * (real.dim() - 1)
    eps = torch.rand(eps_shape, generator=generator, dtype=real.dtype, device=real.device)
    mixed = (eps * real + (1 - eps) * fake).detach().requires_grad_(True)
    scores = critic(mixed)
    grads, = torch.autograd.grad(scores.sum(), mixed, create_graph=True)
    norms = grads.reshape(grads.shape[0], -1).norm(dim=1)
    return ((norms - 1) ** 2).mean()


def wgan_critic_terms(critic, real: torch.Tensor, fake: torch.Tensor,
                      generator: torch.Generator | None = None) -> tuple[torch.Tensor, torch.Tensor]:
    """``(E[D(real)] - E[D(fake)], gradient penalty)`` from one batched critic pass.

    Equivalent to scoring ``real`` and ``fake`` separately and calling
    :func:`lipschitz_penalty` with the same generator state.
    """
    if real.shape != fake.shape:
        raise ValueError("real and fake inputs must share a shape")
    n = real.shape[0]
    eps_shape = (n,) + (1,) * (real.dim() - 1)
    eps = torch.rand(eps_shape, generator=generator, dtype=real.dtype, device=real.device)
    mixed = (eps * real + (1 - eps) * fake).detach().requires_grad_(True)
    scores = critic(torch.cat([real, fake.detach(), mixed]))
    grads, = torch.autograd.grad(scores[2 * n:].sum(), mixed, create_graph=True)
    norms = grads.reshape(n, -1).norm(dim=1)
    gap = scores[:n].mean() - scores[n : 2 * n].mean()
    return gap, ((norms - 1) ** 2).mean()


def mask_loss(model: ImpGanModel, real_masks: torch.Tensor, omega: torch.Tensor) -> torch.Tensor:
    """``E[D_m(M)] - E[D_m(G_m(omega))]``."""
    critic = model.mask_critic
    return critic(real_masks, model.adj).mean() - critic(model.generate_masks(omega), model.adj).mean()


@dataclass
class ImpLossParts:
    adversarial: torch.Tensor
    reconstruction: torch.Tensor

    @property
    def total(self) -> torch.Tensor:
        return self.adversarial + self.reconstruction


def reconstruction_loss(raw: torch.Tensor, x: torch.Tensor, mask_star: torch.Tensor, reduction: str = "sum"):
    """Batch mean of the L1 distance on entries observed in ``mask_star``."""
    diff = torch.where(mask_star == 1, raw - x, torch.zeros_like(raw)).abs()
    per_sample = diff.reshape(diff.shape[0], -1).sum(dim=1)
    if reduction == "mean":
        per_sample = per_sample / diff[0].numel()
    return per_sample.mean()


def imp_loss(model: ImpGanModel, x: torch.Tensor, mask: torch.Tensor, omega: torch.Tensor, z: torch.Tensor,
             beta: float = 10.0, fake_masks: torch.Tensor | None = None, reduction: str = "sum") -> ImpLossParts:
    """Imputation objective: critic gap on re-masked data plus history L1 term.

    ``fake_masks`` overrides ``G_m(omega)``; when omitted the mask generator's
    soft output is used as is.
    """
    mask_star = prediction_mask(mask, model.t_history)
    x_hat, raw = impute_forward(model, x, mask_star, z, return_raw=True)
    if fake_masks is None:
        fake_masks = model.generate_masks(omega)
    critic = model.imputation_critic
    real_in = masking_operator(x, mask, model.tau)
    fake_in = masking_operator(x_hat, fake_masks, model.tau)
    adversarial = critic(real_in, model.adj).mean() - critic(fake_in, model.adj).mean()
    recon = beta * reconstruction_loss(raw, x, mask_star, reduction)
    return ImpLossParts(adversarial, recon)


HISTORY_FIELDS = ("epoch", "mask_adv", "mask_gp", "imp_adv", "imp_gp", "imp_recon", "gen_mask_loss", "gen_imp_loss")


@dataclass
class TrainState:
    model: ImpGanModel
    config: TrainConfig
    opt_gen: torch.optim.Optimizer
    opt_critic: torch.optim.Optimizer
    generator: torch.Generator
    history: list = field(default_factory=list)
    epoch: int = 0
    out_dir: Path | None = None
    extra: dict = field(default_factory=dict)


def make_state(model: ImpGanModel, config: TrainConfig) -> TrainState:
    opt_gen = torch.optim.Adam(model.generator_parameters(), lr=config.learning_rate, betas=config.adam_betas)
    opt_critic = torch.optim.Adam(model.critic_parameters(), lr=config.learning_rate, betas=config.adam_betas)
    gen = torch.Generator().manual_seed(int(config.seed))
    return TrainState(model, config, opt_gen, opt_critic, gen)


def _noise(state: TrainState, batch: int):
    m = state.model
    omega = torch.randn(batch, m.net_cfg.noise_dim, generator=state.generator, dtype=m.dtype)
    z = torch.randn(batch, m.net_cfg.n_nodes, m.net_cfg.n_timesteps, generator=state.generator, dtype=m.dtype)
    return omega, z


def critic_step(state: TrainState, x: torch.Tensor, mask: torch.Tensor) -> dict:
    """One update of both critics (maximising the two Wasserstein gaps)."""
    model, cfg = state.model, state.config
    omega, z = _noise(state, x.shape[0])
    mask_star = prediction_mask(mask, model.t_history)
    with torch.no_grad():
        soft = model.generate_masks(omega)
        x_hat = impute_forward(model, x, mask_star, z)
    fake_m = harden(soft) if cfg.harden_fake_masks else soft
    adj = model.adj

    def d_m(inp):
        return model.mask_critic(inp, adj)

    def d_i(inp):
        return model.imputation_critic(inp, adj)

    mask_adv, mask_gp = wgan_critic_terms(d_m, mask, soft, state.generator)
    real_i = masking_operator(x, mask, model.tau)
    fake_i = masking_operator(x_hat, fake_m, model.tau)
    imp_adv, imp_gp = wgan_critic_terms(d_i, real_i, fake_i, state.generator)
    loss = -mask_adv - imp_adv + cfg.gp_lambda * (mask_gp + imp_gp)
    _check_finite(state, loss, "critic")
    state.opt_critic.zero_grad(set_to_none=True)
    loss.backward()
    state.opt_critic.step()
    return {"mask_adv": mask_adv.item(), "mask_gp": mask_gp.item(), "imp_adv": imp_adv.item(),
            "imp_gp": imp_gp.item()}


def generator_step(state: TrainState, x: torch.Tensor, mask: torch.Tensor) -> dict:
    """One update of both generators."""
    model, cfg = state.model, state.config
    omega, z = _noise(state, x.shape[0])
    soft = model.generate_masks(omega)
    gen_mask_loss = -model.mask_critic(soft, model.adj).mean()
    # hardened masks are not differentiable, so G_m then learns from L_m alone
    fake_m = harden(soft.detach()) if cfg.harden_fake_masks else soft
    parts = imp_loss(model, x, mask, omega, z, cfg.beta, fake_masks=fake_m, reduction=cfg.recon_reduction)
    gen_imp_loss = parts.total
    loss = gen_mask_loss + gen_imp_loss
    _check_finite(state, loss, "generator")
    state.opt_gen.zero_grad(set_to_none=True)
    loss.backward()
    state.opt_gen.step()
    return {"imp_recon": parts.reconstruction.item(), "gen_mask_loss": gen_mask_loss.item(),
            "gen_imp_loss": gen_imp_loss.item()}


def _check_finite(state: TrainState, loss: torch.Tensor, where: str) -> None:
    if torch.isfinite(loss):
        return
    out_dir = state.out_dir
    msg = f"non-finite {where} loss at epoch {state.epoch}"
    if out_dir is not None:
        path = save_checkpoint(state, Path(out_dir) / f"ckpt_diverged_{state.epoch}.pt")
        msg += f"; diagnostic checkpoint written to {path}"
    raise TrainingDivergedError(msg)


def _batches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    return [order[i : i + batch_size] for i in range(0, n, batch_size)]


def train(model: ImpGanModel, values: np.ndarray, masks: np.ndarray, config: TrainConfig,
          out_dir=None, state: TrainState | None = None, callback=None, extra: dict | None = None) -> TrainState:
    """Alternate critic and generator updates over ``config.epochs`` epochs.

    ``values`` (scaled) and ``masks`` are ``(N, V, T)`` arrays. With
    ``alternation='batch'`` every minibatch gets ``disc_steps`` critic updates
    followed by ``gen_steps`` generator updates; ``'epoch'`` alternates whole
    passes instead. Returns the training state holding the loss history.
    ``extra`` is stored in every checkpoint written along the way.
    """
    if state is None:
        state = make_state(model, config)
    if extra is not None:
        state.extra = dict(extra)
    state.out_dir = None if out_dir is None else Path(out_dir)
    if state.out_dir is not None:
        state.out_dir.mkdir(parents=True, exist_ok=True)
    X = torch.as_tensor(np.asarray(values), dtype=model.dtype)
    M = torch.as_tensor(np.asarray(masks), dtype=model.dtype)
    if X.shape != M.shape or X.dim() != 3:
        raise ValueError("values and masks must be matching (N, V, T) arrays")
    X = torch.where(M == 1, X, torch.zeros_like(X))
    if not torch.isfinite(X).all():
        raise ValueError("observed training values must be finite")
    _check_scaled(X, M)
    rng = np.random.default_rng(int(config.seed))
    model.train()
    for _ in range(config.epochs):
        state.epoch += 1
        records = []
        if config.alternation == "batch":
            for idx in _batches(len(X), config.batch_size, rng):
                rec = {}
                for _ in range(config.disc_steps):
                    rec.update(critic_step(state, X[idx], M[idx]))
                for _ in range(config.gen_steps):
                    rec.update(generator_step(state, X[idx], M[idx]))
                records.append(rec)
        else:
            crit, gen = [], []
            for _ in range(config.disc_steps):
                crit += [critic_step(state, X[i], M[i]) for i in _batches(len(X), config.batch_size, rng)]
            for _ in range(config.gen_steps):
                gen += [generator_step(state, X[i], M[i]) for i in _batches(len(X), config.batch_size, rng)]
            records = crit + gen
        row = {"epoch": state.epoch}
        for key in HISTORY_FIELDS[1:]:
            vals = [r[key] for r in records if key in r]
            row[key] = float(np.mean(vals)) if vals else math.nan
        state.history.append(row)
        if callback is not None:
            callback(state, row)
        if state.out_dir is not None and config.checkpoint_every and state.epoch % config.checkpoint_every == 0:
            save_checkpoint(state, state.out_dir / f"ckpt_{state.epoch}.pt")
    model.eval()
    if state.out_dir is not None:
        write_loss_history(state.history, state.out_dir / "losses.csv")
    return state


def write_loss_history(history: list, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=HISTORY_FIELDS)
        writer.writeheader()
        for row in history:
            writer.writerow({k: (row[k] if k == "epoch" else f"{row[k]:.10g}") for k in HISTORY_FIELDS})


def save_checkpoint(state_or_model, path, extra: dict | None = None) -> Path:
    """Write model parameters and a manifest describing the architecture."""
    if isinstance(state_or_model, TrainState):
        model, epoch = state_or_model.model, state_or_model.epoch
        extra = state_or_model.extra if extra is None else extra
        optim = {"gen": state_or_model.opt_gen.state_dict(), "critic": state_or_model.opt_critic.state_dict()}
        train_cfg = asdict(state_or_model.config)
    else:
        model, epoch, optim, train_cfg = state_or_model, None, None, None
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "manifest": model.manifest(),
        "epoch": epoch,
        "train_config": train_cfg,
        "state_dict": model.state_dict(),
        "optimizers": optim,
        "extra": extra or {},
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(payload, path)
    return path


def load_checkpoint(path, expected: NetworkConfig | None = None) -> tuple[ImpGanModel, dict]:
    """Rebuild a model from a checkpoint, validating it against ``expected``."""
    try:
        payload = torch.load(Path(path), map_location="cpu", weights_only=False)
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from None
    if not isinstance(payload, dict) or payload.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path} is not a netsimpgan checkpoint")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {payload.get('version')}")
    man = payload["manifest"]
    net = dict(man["network"])
    net.pop("channels", None)
    cfg = NetworkConfig(**net)
    if expected is not None and expected.manifest() != cfg.manifest():
        diffs = {k: (v, cfg.manifest()[k]) for k, v in expected.manifest().items() if cfg.manifest()[k] != v}
        raise CheckpointError(f"checkpoint manifest does not match the current configuration: {diffs}")
    weights = None
    if man.get("edge_weights") is not None:
        weights = {(int(i), int(j)): float(w) for i, j, w in man["edge_weights"]}
    graph = Graph(man["node_count"], frozenset(tuple(e) for e in man["edges"]), weights)
    model = ImpGanModel(graph, cfg, man["t_history"], man["tau"])
    dtype = next(iter(payload["state_dict"].values())).dtype
    model.to(dtype)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, payload
