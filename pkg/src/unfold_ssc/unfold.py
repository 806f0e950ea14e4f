"""Layer-unfolded ADMM network for learnable self-representation.

Each layer replays one ADMM iteration with its own learnable ingredients:
the linear maps W and B (initialized from the analytic solver matrices and
then free), a penalty rho, and a shrinkage threshold theta. rho and theta
are stored as softplus preimages so gradient steps can never push them out
of their valid ranges (rho > 0, theta >= 0). With theta = lambda / rho the
forward pass reproduces the classic solver bit-for-bit up to softplus
round-trip error.

Gradients are hand-written reverse mode over a forward tape; no autodiff
framework is involved.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from unfold_ssc import classic


def softplus(x):
    """log(1 + e^x) computed stably for large |x|."""
    return np.logaddexp(0.0, np.asarray(x, dtype=np.float64))


def softplus_inv(y):
    """Preimage of softplus: log(e^y - 1). Requires y > 0."""
    y = np.asarray(y, dtype=np.float64)
    if np.any(y <= 0):
        raise ValueError("softplus preimage needs a positive value")
    return np.log(np.expm1(y))


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    return np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))


def relu_soft_threshold(v, theta):
    """Shrinkage in its network form: relu(|v| - theta) * sign(v).

    Elementwise identical to the piecewise soft threshold for theta >= 0.
    """
    if theta < 0:
        raise ValueError(f"threshold must be non-negative, got {theta}")
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.maximum(np.abs(v) - theta, 0.0)


@dataclass
class UnfoldLayer:
    W: np.ndarray          # (n, l)
    B: np.ndarray          # (n, n)
    rho_raw: np.ndarray    # 0-d softplus preimage of the penalty
    theta_raw: np.ndarray  # 0-d softplus preimage of the threshold

    @property
    def rho(self) -> float:
        return float(softplus(self.rho_raw))

    @property
    def theta(self) -> float:
        return float(softplus(self.theta_raw))


@dataclass
class UnfoldParams:
    """Learnable state of the unfolded network.

    ``layers`` has one entry per layer, or a single shared entry when
    ``tied`` is set.
    """

    layers: list[UnfoldLayer]
    n_layers: int
    tied: bool = False

    def layer(self, k: int) -> UnfoldLayer:
        return self.layers[0] if self.tied else self.layers[k]

    def layer_name(self, k: int) -> str:
        return "shared" if self.tied else f"layer{k}"

    def named_arrays(self):
        """Deterministic (name, array) walk over every learnable tensor."""
        for idx, layer in enumerate(self.layers):
            name = "shared" if self.tied else f"layer{idx}"
            yield f"{name}.W", layer.W
            yield f"{name}.B", layer.B
            yield f"{name}.rho_raw", layer.rho_raw
            yield f"{name}.theta_raw", layer.theta_raw


@dataclass
class ForwardTape:
    """Everything the backward pass needs from one forward evaluation."""

    Htilde: np.ndarray
    Z_in: list = field(default_factory=list)
    mu_in: list = field(default_factory=list)
    V: list = field(default_factory=list)
    C: list = field(default_factory=list)
    T: list = field(default_factory=list)
    Z_out: list = field(default_factory=list)
    C_raw: np.ndarray | None = None   # final C before diagonal zeroing
    C_out: np.ndarray | None = None


def init_params(Htilde: np.ndarray, rho0: float, n_layers: int,
                theta0: float = 0.005, tied: bool = False) -> UnfoldParams:
    """Analytic initialization from the classic solver matrices.

    Every layer starts from the same W = (2 H^T H + rho0 I)^-1 2 H^T and
    B = (2 H^T H + rho0 I)^-1 (untied layers get independent copies), with
    penalty rho0 and threshold theta0.
    """
    if n_layers < 1:
        raise ValueError("the network needs at least one layer")
    if rho0 <= 0:
        raise ValueError(f"rho0 must be positive, got {rho0}")
    if theta0 <= 0:
        raise ValueError(f"theta0 must be positive, got {theta0}")
    W, B = classic.precompute(Htilde, None, rho0)
    rho_raw = softplus_inv(rho0)
    theta_raw = softplus_inv(theta0)
    count = 1 if tied else n_layers
    layers = [
        UnfoldLayer(W.copy(), B.copy(), np.array(rho_raw), np.array(theta_raw))
        for _ in range(count)
    ]
    return UnfoldParams(layers=layers, n_layers=n_layers, tied=tied)


def forward(params: UnfoldParams, Htilde: np.ndarray,
            Z0: np.ndarray | None = None, mu0: np.ndarray | None = None):
    """Run the unfolded network.

    Per layer k:  V = mu - rho_k Z;  C = W_k H~ - B_k V;
                  Z = shrink(C + mu / rho_k, theta_k) with zero diagonal;
                  mu = mu + rho_k (C - Z).
    Returns (C, tape) where C is the final-layer coefficient matrix with
    its diagonal zeroed.
    """
    Htilde = np.asarray(Htilde, dtype=np.float64)
    n = Htilde.shape[1]
    Z = np.zeros((n, n)) if Z0 is None else np.asarray(Z0, dtype=np.float64)
    mu = np.zeros((n, n)) if mu0 is None else np.asarray(mu0, dtype=np.float64)
    if Z.shape != (n, n) or mu.shape != (n, n):
        raise ValueError("Z0 and mu0 must be n x n for n samples")
    if np.any(np.diagonal(Z) != 0):
        raise ValueError("Z0 must have a zero diagonal")
    tape = ForwardTape(Htilde=Htilde)
    C = None
    for k in range(params.n_layers):
        layer = params.layer(k)
        rho, theta = layer.rho, layer.theta
        V = mu - rho * Z
        C = layer.W @ Htilde - layer.B @ V
        T = C + mu / rho
        Zraw = relu_soft_threshold(T, theta)
        np.fill_diagonal(Zraw, 0.0)
        tape.Z_in.append(Z)
        tape.mu_in.append(mu)
        tape.V.append(V)
        tape.C.append(C)
        tape.T.append(T)
        Z = Zraw
        mu = mu + rho * (C - Z)
        tape.Z_out.append(Z)
    tape.C_raw = C
    C_out = C.copy()
    np.fill_diagonal(C_out, 0.0)
    tape.C_out = C_out
    return C_out, tape


def backward(params: UnfoldParams, tape: ForwardTape, grad_C: np.ndarray):
    """Reverse-mode pass through the whole unfolded network.

    ``grad_C`` is the loss gradient with respect to the returned (diagonal-
    zeroed) coefficient matrix. Returns (grads, grad_Htilde) where ``grads``
    maps the names from ``params.named_arrays`` to arrays of matching shape;
    rho/theta gradients are with respect to their softplus preimages. Tied
    parameters accumulate contributions from every layer. Subgradients at
    the shrinkage kinks are taken as zero.
    """
    Ht = tape.Htilde
    n = Ht.shape[1]
    grads = {name: np.zeros_like(arr) for name, arr in params.named_arrays()}
    gHt = np.zeros_like(Ht)

    off_diag = 1.0 - np.eye(n)
    gC_ext = np.asarray(grad_C, dtype=np.float64) * off_diag  # diag-zeroing is the last op
    gZ_next = np.zeros((n, n))
    gmu_next = np.zeros((n, n))

    for k in range(params.n_layers - 1, -1, -1):
        layer = params.layer(k)
        name = params.layer_name(k)
        rho, theta = layer.rho, layer.theta
        Z_in, mu_in = tape.Z_in[k], tape.mu_in[k]
        V, C, T, Z_out = tape.V[k], tape.C[k], tape.T[k], tape.Z_out[k]

        # mu_out = mu_in + rho (C - Z_out)
        gmu_in = gmu_next.copy()
        gC = gC_ext + rho * gmu_next
        gZ_out = gZ_next - rho * gmu_next
        grho = float(np.sum(gmu_next * (C - Z_out)))

        # Z_out = zero_diag(shrink(T, theta))
        gZraw = gZ_out * off_diag
        active = np.abs(T) > theta
        gT = np.where(active, gZraw, 0.0)
        gtheta = -float(np.sum(np.where(active, gZraw * np.sign(T), 0.0)))

        # T = C + mu_in / rho
        gC = gC + gT
        gmu_in += gT / rho
        grho += float(np.sum(gT * (-mu_in / rho**2)))

        # C = W H~ - B V,  V = mu_in - rho Z_in
        grads[f"{name}.W"] += gC @ Ht.T
        gHt += layer.W.T @ gC
        grads[f"{name}.B"] += -gC @ V.T
        gV = -layer.B.T @ gC
        gmu_in += gV
        gZ_in = -rho * gV
        grho += float(np.sum(gV * (-Z_in)))

        grads[f"{name}.rho_raw"] += grho * sigmoid(layer.rho_raw)
        grads[f"{name}.theta_raw"] += gtheta * sigmoid(layer.theta_raw)

        gC_ext = np.zeros((n, n))
        gZ_next = gZ_in
        gmu_next = gmu_in

    return grads, gHt
