"""Sparse auto-encoder over rasterized small cubes.

One sigmoid hidden layer, linear output layer. The training objective is

    L = (1/m) * sum_i ||x_i - xhat_i||^2
        + weight_decay * (sum W1^2 + sum W2^2)
        + beta * sum_j KL(rho || rho'_j)

where xhat = W2 * sigmoid(W1 x + b1) + b2 and rho'_j is the mean activation
of hidden unit j over the minibatch (a true SGD estimate, not a full-dataset
average). Optimization is plain minibatch SGD with seeded shuffling, so a
fixed seed reproduces the model bit for bit.

Feature extraction after training is the bare linear map y = W1 * z on the
standardized patch; `encode_mode="sigmoid"` switches to sigmoid(W1 z + b1)
for comparison. Inputs are standardized to zero mean / unit variance per
dimension with statistics fitted on the training patches.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from ._container import load_container, save_container
from .errors import ConfigError, DataError
from .videoio import Cube, rasterize, rasterize_block, subdivide

SIGMA_FLOOR = 1e-8
RHO_CLAMP = 1e-10
RASTER_ORDER_TAG = "t*(w*h) + row*w + col"

ENCODE_MODES = ("linear", "sigmoid")


@dataclass(frozen=True)
class AEHyper:
    s: int = 1000               # hidden layer width
    rho: float = 0.05           # sparsity target for mean hidden activation
    beta: float = 3.0           # weight of the KL sparsity penalty
    weight_decay: float = 3e-3  # coefficient on sum(W1^2) + sum(W2^2)
    lr: float = 0.01
    batch: int = 64
    epochs: int = 30
    seed: int = 0
    encode_mode: str = "linear"

    def __post_init__(self):
        if self.s < 1:
            raise ConfigError(f"hidden size must be >= 1, got {self.s}")
        if not 0.0 < self.rho < 1.0:
            raise ConfigError(f"sparsity target must be in (0, 1), got {self.rho}")
        if self.beta < 0 or self.weight_decay < 0 or self.lr <= 0:
            raise ConfigError("beta and weight_decay must be >= 0 and lr > 0")
        if self.encode_mode not in ENCODE_MODES:
            raise ConfigError(f"encode_mode must be one of {ENCODE_MODES}, got {self.encode_mode!r}")


@dataclass
class AEModel:
    W1: np.ndarray        # (s, D)
    W2: np.ndarray        # (D, s)
    b1: np.ndarray        # (s,)
    b2: np.ndarray        # (D,)
    mu_z: np.ndarray      # (D,) standardization mean
    sigma_z: np.ndarray   # (D,) standardization std, floored
    hyper: AEHyper
    patch_dims: tuple[int, int, int]  # (w, h, t) of the training patches
    loss_curve: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def D(self) -> int:
        return self.W1.shape[1]

    @property
    def s(self) -> int:
        return self.W1.shape[0]


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # tanh form avoids exp overflow warnings for large |z|
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def standardize_fit(patches: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-dimension mean and std (1/N) over the training patches.

    The std is floored at 1e-8 so constant dimensions do not blow up the
    transform.
    """
    patches = np.asarray(patches, dtype=np.float64)
    if patches.ndim != 2 or patches.shape[0] < 2:
        raise DataError(f"standardize_fit needs >= 2 patches, got shape {patches.shape}")
    mu = patches.mean(axis=0)
    sigma = np.maximum(patches.std(axis=0), SIGMA_FLOOR)
    return mu, sigma


def standardize_apply(x: np.ndarray, mu: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    return (np.asarray(x, dtype=np.float64) - mu) / sigma


def init_model(dim: int, hyper: AEHyper, patch_dims: tuple[int, int, int]) -> AEModel:
    """Fresh model with uniform +-sqrt(6/(s+D+1)) weights and zero biases."""
    rng = np.random.default_rng(hyper.seed)
    r = np.sqrt(6.0 / (hyper.s + dim + 1.0))
    W1 = rng.uniform(-r, r, size=(hyper.s, dim))
    W2 = rng.uniform(-r, r, size=(dim, hyper.s))
    return AEModel(W1=W1, W2=W2, b1=np.zeros(hyper.s), b2=np.zeros(dim),
                   mu_z=np.zeros(dim), sigma_z=np.ones(dim),
                   hyper=hyper, patch_dims=patch_dims)


def forward(model: AEModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hidden activations and reconstruction of one standardized D-vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.D,):
        raise DataError(f"input shape {x.shape} does not match model D={model.D}")
    a = _sigmoid(model.W1 @ x + model.b1)
    xhat = model.W2 @ a + model.b2
    return a, xhat


def _forward_batch(model: AEModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    A = _sigmoid(X @ model.W1.T + model.b1)
    Xhat = A @ model.W2.T + model.b2
    return A, Xhat


def _batch_2d(batch) -> np.ndarray:
    X = np.asarray(batch, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError(f"batch must be a non-empty list of vectors, got shape {X.shape}")
    return X


def _kl_terms(rho: float, rho_hat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """KL(rho || rho') per hidden unit and its derivative w.r.t. rho'.

    rho' is clamped to [1e-10, 1-1e-10]; clamped units get derivative 0.
    """
    clamped = np.clip(rho_hat, RHO_CLAMP, 1.0 - RHO_CLAMP)
    kl = rho * np.log(rho / clamped) + (1.0 - rho) * np.log((1.0 - rho) / (1.0 - clamped))
    dkl = -rho / clamped + (1.0 - rho) / (1.0 - clamped)
    dkl = np.where(rho_hat == clamped, dkl, 0.0)
    return kl, dkl


def loss(model: AEModel, batch, hyper: AEHyper) -> float:
    """Objective value on one minibatch of standardized patches."""
    X = _batch_2d(batch)
    A, Xhat = _forward_batch(model, X)
    m = X.shape[0]
    rec = float(((Xhat - X) ** 2).sum()) / m
    decay = hyper.weight_decay * (float((model.W1 ** 2).sum()) + float((model.W2 ** 2).sum()))
    kl, _ = _kl_terms(hyper.rho, A.mean(axis=0))
    return rec + decay + hyper.beta * float(kl.sum())


def gradients(model: AEModel, batch, hyper: AEHyper) -> dict[str, np.ndarray]:
    """Exact backpropagation gradients of `loss` w.r.t. W1, W2, b1, b2.

    The KL term contributes through the batch-mean activation rho'_j, which
    adds beta/m * dKL/drho'_j to every example's hidden gradient.
    """
    X = _batch_2d(batch)
    m = X.shape[0]
    A, Xhat = _forward_batch(model, X)
    R = Xhat - X
    gW2 = (2.0 / m) * (R.T @ A) + 2.0 * hyper.weight_decay * model.W2
    gb2 = (2.0 / m) * R.sum(axis=0)
    dA = (2.0 / m) * (R @ model.W2)
    _, dkl = _kl_terms(hyper.rho, A.mean(axis=0))
    dA = dA + (hyper.beta / m) * dkl
    dZ = dA * A * (1.0 - A)
    gW1 = dZ.T @ X + 2.0 * hyper.weight_decay * model.W1
    gb1 = dZ.sum(axis=0)
    return {"W1": gW1, "W2": gW2, "b1": gb1, "b2": gb2}


def train(patches, hyper: AEHyper, patch_dims: tuple[int, int, int] | None = None) -> AEModel:
    """Standardize, initialize, and run seeded minibatch SGD.

    Returns the model with its standardization statistics and the recorded
    per-epoch mean minibatch loss. Identical inputs and seed give a
    bit-identical model.
    """
    X = np.asarray(patches, dtype=np.float64)
    if X.ndim != 2:
        raise DataError("training patches must all have the same length")
    n, dim = X.shape
    if n < hyper.batch:
        raise DataError(f"need at least {hyper.batch} patches (one minibatch), got {n}")
    if patch_dims is None:
        patch_dims = (dim, 1, 1)
    model = init_model(dim, hyper, patch_dims)
    mu, sigma = standardize_fit(X)
    model.mu_z, model.sigma_z = mu, sigma
    Xs = standardize_apply(X, mu, sigma)

    rng = np.random.default_rng(hyper.seed + 1)  # init used hyper.seed
    curve = np.zeros(hyper.epochs)
    for epoch in range(hyper.epochs):
        order = rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, hyper.batch):
            B = Xs[order[start:start + hyper.batch]]
            epoch_losses.append(loss(model, B, hyper))
            g = gradients(model, B, hyper)
            model.W1 -= hyper.lr * g["W1"]
            model.W2 -= hyper.lr * g["W2"]
            model.b1 -= hyper.lr * g["b1"]
            model.b2 -= hyper.lr * g["b2"]
        curve[epoch] = float(np.mean(epoch_losses))
    model.loss_curve = curve
    return model


def encode(model: AEModel, x_raw: np.ndarray) -> np.ndarray:
    """Global feature of one raw (unstandardized) rasterized patch."""
    x_raw = np.asarray(x_raw, dtype=np.float64)
    if x_raw.shape != (model.D,):
        raise DataError(f"input shape {x_raw.shape} does not match model D={model.D}")
    z = standardize_apply(x_raw, model.mu_z, model.sigma_z)
    if model.hyper.encode_mode == "sigmoid":
        return _sigmoid(model.W1 @ z + model.b1)
    return model.W1 @ z


def encode_batch(model: AEModel, X_raw: np.ndarray) -> np.ndarray:
    """`encode` applied to rows of a (n, D) array of raw patches."""
    Z = standardize_apply(np.asarray(X_raw, dtype=np.float64), model.mu_z, model.sigma_z)
    if model.hyper.encode_mode == "sigmoid":
        return _sigmoid(Z @ model.W1.T + model.b1)
    return Z @ model.W1.T


def encode_pooled(model: AEModel, big: Cube) -> np.ndarray:
    """Mean of the encodings of the non-overlapping sub-cubes of a big cube."""
    pw, ph, pt = model.patch_dims
    if big.cube_t != pt:
        raise DataError(f"big cube depth {big.cube_t} != model patch depth {pt}")
    subs = subdivide(big, pw, ph)
    feats = encode_batch(model, np.stack([rasterize(s) for s in subs]))
    return feats.mean(axis=0)


def encode_pooled_block(model: AEModel, block: np.ndarray) -> np.ndarray:
    """Pooled encodings of a (n, t, H, W) stack of big cubes, one row each.

    Matches `encode_pooled` on every cube of the stack; used by the
    detector's per-slab batch path.
    """
    pw, ph, pt = model.patch_dims
    n, t, H, W = block.shape
    if t != pt or H % ph or W % pw:
        raise DataError(f"block of {t}x{H}x{W} cubes does not subdivide into "
                        f"model patches {pt}x{ph}x{pw}")
    ry, rx = H // ph, W // pw
    # (n, t, ry, ph, rx, pw) -> (n, ry, rx, t, ph, pw): row-major sub-cube order
    subs = block.reshape(n, t, ry, ph, rx, pw).transpose(0, 2, 4, 1, 3, 5)
    rasters = rasterize_block(subs).reshape(n * ry * rx, pw * ph * pt)
    feats = encode_batch(model, rasters).reshape(n, ry * rx, model.s)
    return feats.mean(axis=1)


def save_model(model: AEModel, path: str | Path) -> None:
    meta = {
        "hyper": asdict(model.hyper),
        "patch_dims": list(model.patch_dims),
        "raster_order": RASTER_ORDER_TAG,
    }
    arrays = {"W1": model.W1, "W2": model.W2, "b1": model.b1, "b2": model.b2,
              "mu_z": model.mu_z, "sigma_z": model.sigma_z, "loss_curve": model.loss_curve}
    save_container(path, "autoencoder", meta, arrays)


def load_model(path: str | Path) -> AEModel:
    meta, arrays = load_container(path, "autoencoder")
    hyper = AEHyper(**meta["hyper"])
    return AEModel(W1=arrays["W1"], W2=arrays["W2"], b1=arrays["b1"], b2=arrays["b2"],
                   mu_z=arrays["mu_z"], sigma_z=arrays["sigma_z"], hyper=hyper,
                   patch_dims=tuple(meta["patch_dims"]), loss_curve=arrays["loss_curve"])
