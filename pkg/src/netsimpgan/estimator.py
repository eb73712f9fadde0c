"""Scikit-learn style estimator wrapping the adversarial imputer."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .core import Graph, prediction_mask_array
from .gtan import NetworkConfig
from .metrics import point_predict
from .scaling import NodeMinMaxScaler
from .training import ImpGanModel, TrainConfig, impute_forward, load_checkpoint, save_checkpoint, train
from .validation import check_graph, check_nets_array, check_t_history


@dataclass(frozen=True)
class PredictionEnsemble:
    """``K`` completed matrices per sample, in physical units.

    ``samples`` is ``(N, K, V, T)``; ``mask_star`` is the ``(N, V, T)`` mask the
    model conditioned on. All members agree exactly on ``mask_star == 1``.
    """

    samples: np.ndarray
    mask_star: np.ndarray

    @property
    def n_members(self) -> int:
        return self.samples.shape[1]

    def point(self, metric: str = "mae") -> np.ndarray:
        return point_predict(np.moveaxis(self.samples, 1, 0), metric)


def sample_ensemble(model: ImpGanModel, values, mask_star, K: int = 10, rng: torch.Generator | int | None = None,
                    scaler: NodeMinMaxScaler | None = None) -> PredictionEnsemble:
    """Draw ``K`` completions per sample through the imputation generator.

    ``values`` are scaled ``(N, V, T)`` inputs; with ``scaler`` the members are
    mapped back to physical units and observed entries are restored from the
    inverse transform of the inputs.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if not isinstance(rng, torch.Generator):
        rng = torch.Generator().manual_seed(0 if rng is None else int(rng))
    x = torch.as_tensor(np.asarray(values), dtype=model.dtype)
    m = torch.as_tensor(np.asarray(mask_star), dtype=model.dtype)
    if x.dim() == 2:
        x, m = x[None], m[None]
    model.eval()
    members = []
    with torch.no_grad():
        for _ in range(K):
            z = torch.randn(x.shape, generator=rng, dtype=model.dtype)
            members.append(impute_forward(model, x, m, z).double().numpy())
    samples = np.stack(members, axis=1)  # (N, K, V, T)
    mask_np = m.numpy().astype(np.uint8)
    if scaler is not None:
        samples = scaler.inverse_transform(samples)
    return PredictionEnsemble(samples, mask_np)


class NetsImpGAN(TransformerMixin, BaseEstimator):
    """Predict and impute networked time series with missing history and future.

    ``fit`` learns from incomplete samples whose future is partially observed.
    ``sample`` draws an ensemble of completions, ``predict`` collapses it into
    the point forecast matching a metric, and ``transform`` returns the
    completed matrices (single imputation). Inputs are ``(N, V, T)`` arrays in
    physical units with NaN (or a 0 in ``mask``) marking missing entries.

    Parameters
    ----------
    graph : Graph, optional
        Node graph; an edgeless graph is used when omitted.
    t_history : int, default=8
        Leading columns treated as history; the rest is the future.
    variant : {"full", "no-graph", "no-temporal", "no-attention"}
    n_samples : int, default=10
        Ensemble size used by ``predict`` and ``transform``.
    random_state : int, default=0
        Seeds initialisation, batching and all noise draws.

    The remaining parameters mirror :class:`~netsimpgan.training.TrainConfig`
    and :class:`~netsimpgan.gtan.NetworkConfig`.
    """

    def __init__(self, graph: Graph | None = None, t_history: int = 8, variant: str = "full", depth: int = 3,
                 base_channels: int = 16, n_heads: int = 3, noise_dim: int = 128, tau: float = 0.0,
                 batch_size: int = 64, epochs: int = 1000, learning_rate: float = 1e-4,
                 adam_betas: tuple = (0.5, 0.9), beta: float = 10.0, gp_lambda: float = 10.0,
                 disc_steps: int = 5, gen_steps: int = 1, alternation: str = "batch",
                 harden_fake_masks: bool = False, recon_reduction: str = "sum", n_samples: int = 10,
                 scale: bool = True, random_state: int = 0, dtype: str = "float32"):
        self.graph = graph
        self.t_history = t_history
        self.variant = variant
        self.depth = depth
        self.base_channels = base_channels
        self.n_heads = n_heads
        self.noise_dim = noise_dim
        self.tau = tau
        self.batch_size = batch_size
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.adam_betas = adam_betas
        self.beta = beta
        self.gp_lambda = gp_lambda
        self.disc_steps = disc_steps
        self.gen_steps = gen_steps
        self.alternation = alternation
        self.harden_fake_masks = harden_fake_masks
        self.recon_reduction = recon_reduction
        self.n_samples = n_samples
        self.scale = scale
        self.random_state = random_state
        self.dtype = dtype

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            batch_size=self.batch_size, epochs=self.epochs, learning_rate=self.learning_rate,
            adam_betas=self.adam_betas, beta=self.beta, gp_lambda=self.gp_lambda, disc_steps=self.disc_steps,
            gen_steps=self.gen_steps, alternation=self.alternation, tau=self.tau,
            harden_fake_masks=self.harden_fake_masks, recon_reduction=self.recon_reduction,
            seed=self.random_state,
        )

    def _scale(self, X, mask):
        if self.scaler_ is None:
            return X
        return self.scaler_.transform(X, mask)

    def fit(self, X, mask=None, y=None, out_dir=None, callback=None):
        X, mask = check_nets_array(X, mask)
        _, V, T = X.shape
        graph = check_graph(self.graph, V)
        th = check_t_history(self.t_history, T)
        net_cfg = NetworkConfig(n_nodes=V, n_timesteps=T, variant=self.variant, depth=self.depth,
                                base_channels=self.base_channels, n_heads=self.n_heads, noise_dim=self.noise_dim)
        train_cfg = self._train_config()
        self.scaler_ = NodeMinMaxScaler().fit(X, mask) if self.scale else None
        torch.manual_seed(int(self.random_state))
        model = ImpGanModel(graph, net_cfg, th, self.tau)
        model.to(getattr(torch, self.dtype))
        state = train(model, self._scale(X, mask), mask, train_cfg, out_dir=out_dir, callback=callback,
                      extra=self._checkpoint_extra())
        self.model_ = model
        self.history_ = state.history
        self.n_nodes_ = V
        self.n_timesteps_ = T
        return self

    def conditioning_mask(self, mask: np.ndarray) -> np.ndarray:
        return prediction_mask_array(mask, self.model_.t_history)

    def sample(self, X, mask=None, n_samples: int | None = None, random_state=None) -> PredictionEnsemble:
        """Ensemble of completions conditioned on the history only."""
        check_is_fitted(self, "model_")
        X, mask = check_nets_array(X, mask)
        m_star = self.conditioning_mask(mask)
        K = self.n_samples if n_samples is None else n_samples
        seed = self.random_state if random_state is None else random_state
        ens = sample_ensemble(self.model_, self._scale(X, m_star), m_star, K, seed, self.scaler_)
        # restore observed entries from the inputs so they survive the scaling round trip exactly
        obs = m_star[:, None].astype(bool)
        samples = np.where(obs, X[:, None], ens.samples)
        return PredictionEnsemble(samples, ens.mask_star)

    def predict(self, X, mask=None, metric: str = "mae") -> np.ndarray:
        return self.sample(X, mask).point(metric)

    def transform(self, X, mask=None):
        return self.predict(X, mask, "rmse")

    def _checkpoint_extra(self) -> dict:
        extra = {"params": self.get_params(deep=False) | {"graph": None}}
        if self.scaler_ is not None:
            extra["scaler"] = {"min": self.scaler_.data_min_.tolist(), "max": self.scaler_.data_max_.tolist()}
        return extra

    def save(self, path):
        check_is_fitted(self, "model_")
        return save_checkpoint(self.model_, path, self._checkpoint_extra())

    @classmethod
    def load(cls, path) -> "NetsImpGAN":
        model, payload = load_checkpoint(path)
        params = dict(payload["extra"].get("params", {}))
        params["graph"] = model.graph
        est = cls(**params)
        est.model_ = model
        est.history_ = []
        est.n_nodes_ = model.net_cfg.n_nodes
        est.n_timesteps_ = model.net_cfg.n_timesteps
        scaler = payload["extra"].get("scaler")
        if scaler is None:
            est.scaler_ = None
        else:
            est.scaler_ = NodeMinMaxScaler()
            est.scaler_.data_min_ = np.array(scaler["min"])
            est.scaler_.data_max_ = np.array(scaler["max"])
            est.scaler_.n_nodes_ = len(scaler["min"])
        return est
