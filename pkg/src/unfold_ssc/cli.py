"""Batch command-line interface.

Subcommands: ``run`` (full pipeline), ``pretrain`` (autoencoder phase only),
``cluster`` (spectral clustering from a saved coefficient matrix), ``eval``
(metrics on saved label files), and ``gen`` (synthetic data).

Configuration is JSON. Precedence: command-line flags over config-file keys
over dataset-preset values over built-in defaults. Validation reports every
problem at once, and unknown keys are errors. Exit codes: 0 success,
2 configuration error, 3 data error, 4 numerical failure.

Heavy imports are deferred into the command handlers so that the
UNFOLD_SSC_THREADS cap can take effect before the numerics stack loads.
"""

from __future__ import annotations

import argparse
import json
import os
import shutil
import sys
from dataclasses import asdict, dataclass

from unfold_ssc import __version__
from unfold_ssc.errors import ConfigError, DataError, NumericalError

PRESETS = {
    "salinas": {
        "patch": 7, "k_clusters": 6, "rho0": 0.1, "admm_layers": 2,
        "alpha": 40.0, "beta": 0.1, "gamma": 0.0001, "rho_theta_lr_mult": 1.0,
    },
    "indian_pines": {
        "patch": 7, "k_clusters": 4, "rho0": 0.9, "admm_layers": 3,
        "alpha": 40.0, "beta": 0.3, "gamma": 0.0003, "rho_theta_lr_mult": 10.0,
    },
    "paviau": {
        "patch": 13, "k_clusters": 8, "rho0": 0.5, "admm_layers": 3,
        "alpha": 40.0, "beta": 1.3, "gamma": 0.01, "rho_theta_lr_mult": 10.0,
    },
}

MODES = ("unfold", "classic", "kmeans-baseline")

# 12 well-separated colors for the cluster map; label color = palette[label % 12].
PALETTE = (
    (230, 25, 75), (60, 180, 75), (255, 225, 25), (0, 130, 200),
    (245, 130, 48), (145, 30, 180), (70, 240, 240), (240, 50, 230),
    (210, 245, 60), (170, 110, 40), (0, 128, 128), (250, 190, 212),
)


@dataclass
class RunConfig:
    values_path: str | None = None
    labels_path: str | None = None
    dataset: str | None = None
    mode: str = "unfold"
    out_dir: str = "ssc_out"
    seed: int = 0
    k_clusters: int | None = None
    patch: int = 7
    knn_init: int = 30
    knn_struct: int = 10
    alpha: float = 10.0
    beta: float = 0.01
    gamma: float = 1e-5
    rho0: float = 0.5
    admm_layers: int = 3
    threshold0: float = 0.005
    tied: bool = False
    pretrain_epochs: int = 400
    joint_epochs: int = 600
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    rho_theta_lr_mult: float = 1.0
    latent_dim: int = 32
    hidden_dims: tuple = (256, 64)
    classic_lambda: float = 0.1
    classic_rho: float = 1.0
    classic_iterations: int = 200
    row_normalize: bool = True
    use_z_output: bool = False


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v):
    return _is_int(v) or isinstance(v, float)


_CHECKS = {
    "values_path": (lambda v: isinstance(v, str) and v, "must be a non-empty path string"),
    "labels_path": (lambda v: isinstance(v, str) and v, "must be a non-empty path string"),
    "dataset": (lambda v: v in PRESETS, f"must be one of {sorted(PRESETS)}"),
    "mode": (lambda v: v in MODES, f"must be one of {MODES}"),
    "out_dir": (lambda v: isinstance(v, str) and v, "must be a non-empty path string"),
    "seed": (lambda v: _is_int(v) and v >= 0, "must be a non-negative integer"),
    "k_clusters": (lambda v: _is_int(v) and v >= 2, "must be an integer >= 2"),
    "patch": (lambda v: _is_int(v) and v >= 1 and v % 2 == 1, "must be an odd positive integer"),
    "knn_init": (lambda v: _is_int(v) and v >= 1, "must be a positive integer"),
    "knn_struct": (lambda v: _is_int(v) and v >= 1, "must be a positive integer"),
    "alpha": (lambda v: _is_num(v) and v >= 0, "must be a non-negative number"),
    "beta": (lambda v: _is_num(v) and v >= 0, "must be a non-negative number"),
    "gamma": (lambda v: _is_num(v) and v >= 0, "must be a non-negative number"),
    "rho0": (lambda v: _is_num(v) and v > 0, "must be a positive number"),
    "admm_layers": (lambda v: _is_int(v) and v >= 1, "must be a positive integer"),
    "threshold0": (lambda v: _is_num(v) and v > 0, "must be a positive number"),
    "tied": (lambda v: isinstance(v, bool), "must be a boolean"),
    "pretrain_epochs": (lambda v: _is_int(v) and v >= 0, "must be a non-negative integer"),
    "joint_epochs": (lambda v: _is_int(v) and v >= 0, "must be a non-negative integer"),
    "learning_rate": (lambda v: _is_num(v) and v > 0, "must be a positive number"),
    "adam_beta1": (lambda v: _is_num(v) and 0 < v < 1, "must be in (0, 1)"),
    "adam_beta2": (lambda v: _is_num(v) and 0 < v < 1, "must be in (0, 1)"),
    "adam_eps": (lambda v: _is_num(v) and v > 0, "must be a positive number"),
    "rho_theta_lr_mult": (lambda v: _is_num(v) and v > 0, "must be a positive number"),
    "latent_dim": (lambda v: _is_int(v) and v >= 1, "must be a positive integer"),
    "hidden_dims": (
        lambda v: isinstance(v, (list, tuple)) and all(_is_int(d) and d >= 1 for d in v),
        "must be a list of positive integers",
    ),
    "classic_lambda": (lambda v: _is_num(v) and v > 0, "must be a positive number"),
    "classic_rho": (lambda v: _is_num(v) and v > 0, "must be a positive number"),
    "classic_iterations": (lambda v: _is_int(v) and v >= 1, "must be a positive integer"),
    "row_normalize": (lambda v: isinstance(v, bool), "must be a boolean"),
    "use_z_output": (lambda v: isinstance(v, bool), "must be a boolean"),
}


def validate_config(path=None, preset=None, overrides=None,
                    require_values=True) -> RunConfig:
    """Build a RunConfig from defaults, preset, JSON file, and overrides.

    Later sources win. Raises ConfigError carrying the complete list of
    problems found; unknown keys are problems.
    """
    errors = []
    merged: dict = {}

    file_keys: dict = {}
    if path is not None:
        try:
            with open(path) as fh:
                file_keys = json.load(fh)
        except OSError as exc:
            raise ConfigError([f"cannot read config file {path}: {exc}"]) from exc
        except json.JSONDecodeError as exc:
            raise ConfigError([f"config file {path} is not valid JSON: {exc}"]) from exc
        if not isinstance(file_keys, dict):
            raise ConfigError([f"config file {path} must hold a JSON object"])

    preset_name = preset or file_keys.get("dataset")
    if preset_name is not None:
        if preset_name in PRESETS:
            merged.update(PRESETS[preset_name])
            merged["dataset"] = preset_name
        else:
            errors.append(f"dataset: unknown preset {preset_name!r}, "
                          f"expected one of {sorted(PRESETS)}")
    merged.update(file_keys)
    if preset is not None and preset in PRESETS:
        merged["dataset"] = preset
    merged.update(overrides or {})

    cleaned: dict = {}
    for key, value in merged.items():
        if key not in _CHECKS:
            errors.append(f"{key}: unknown configuration key")
            continue
        ok, message = _CHECKS[key][0](value), _CHECKS[key][1]
        if not ok:
            errors.append(f"{key}: {message} (got {value!r})")
        else:
            cleaned[key] = value

    if "hidden_dims" in cleaned:
        cleaned["hidden_dims"] = tuple(cleaned["hidden_dims"])

    config = RunConfig(**{k: v for k, v in cleaned.items() if k in RunConfig.__dataclass_fields__})

    if require_values and "values_path" not in cleaned and not any(
        e.startswith("values_path") for e in errors
    ):
        errors.append("values_path: required (no input data configured)")
    if config.k_clusters is None and not any(e.startswith("k_clusters") for e in errors):
        errors.append("k_clusters: required (not set by config or preset)")

    if errors:
        raise ConfigError(errors)
    return config


def _train_config(cfg: RunConfig):
    from unfold_ssc import train

    return train.TrainConfig(
        pretrain_epochs=cfg.pretrain_epochs,
        joint_epochs=cfg.joint_epochs,
        learning_rate=cfg.learning_rate,
        adam_beta1=cfg.adam_beta1,
        adam_beta2=cfg.adam_beta2,
        adam_eps=cfg.adam_eps,
        rho0=cfg.rho0,
        n_layers=cfg.admm_layers,
        theta0=cfg.threshold0,
        tied=cfg.tied,
        knn_init=cfg.knn_init,
        knn_struct=cfg.knn_struct,
        rho_theta_lr_mult=cfg.rho_theta_lr_mult,
        weights=train.LossWeights(alpha=cfg.alpha, beta=cfg.beta, gamma=cfg.gamma),
    )


def _load_inputs(cfg: RunConfig):
    """Load either cube or matrix inputs.

    Returns (X, truth, coords, scene_shape); the last two are None for
    matrix data.
    """
    import numpy as np

    from unfold_ssc import container, data

    values = container.load_any(cfg.values_path)
    if values.ndim == 3 or (cfg.labels_path and values.ndim == 2 and _looks_like_map(cfg)):
        cube = data.load_cube(cfg.values_path, cfg.labels_path)
        if cube.labels is None:
            raise DataError("cube inputs need a label map to pick patch centers")
        patches = data.extract_patches(cube, cfg.patch)
        X = data.flatten_to_matrix(patches)
        return X, np.asarray(patches.center_labels), patches.coords, cube.labels.shape
    X, truth = data.load_matrix(cfg.values_path, cfg.labels_path)
    return X, truth, None, None


def _looks_like_map(cfg: RunConfig) -> bool:
    """A 2-D values file counts as a single-band cube when its label file
    is a same-shaped map rather than a per-column vector."""
    from unfold_ssc import container

    values = container.load_any(cfg.values_path)
    labels = container.load_any(cfg.labels_path)
    return labels.ndim == 2 and labels.shape == values.shape and 1 not in labels.shape


def run_pipeline(cfg: RunConfig) -> dict:
    """Execute one full batch run and write all artifacts.

    Returns a summary dict with the metric values (when ground truth was
    available) and the artifact paths.
    """
    import numpy as np

    from unfold_ssc import autoenc, classic, cluster, data, train, unfold

    X, truth, coords, scene_shape = _load_inputs(cfg)
    n = X.shape[1]
    if cfg.k_clusters > n:
        raise ConfigError([f"k_clusters: {cfg.k_clusters} exceeds the {n} available samples"])

    history = None
    pretrain_history = None
    state = None
    S = None
    if cfg.mode == "unfold":
        tc = _train_config(cfg)
        if tc.knn_init >= n or tc.knn_struct >= n:
            raise ConfigError(
                [f"knn_init/knn_struct: need fewer neighbors than the {n} samples"]
            )
        ae_cfg = autoenc.AeConfig(
            input_dim=X.shape[0], hidden_dims=tuple(cfg.hidden_dims),
            latent_dim=cfg.latent_dim,
        )
        state = train.init_state(ae_cfg, cfg.seed)
        pretrain_history = train.pretrain(state, X, tc)
        history = train.train_joint(state, X, tc)
        Ht = autoenc.normalize_latent(autoenc.encode(state.ae, X))
        C, tape = unfold.forward(state.unfold, Ht, state.z0)
        coeff = tape.Z_out[-1] if cfg.use_z_output else C
        S = cluster.similarity(coeff)
        result = cluster.spectral_cluster(S, cfg.k_clusters, cfg.seed,
                                          row_normalize=cfg.row_normalize)
    elif cfg.mode == "classic":
        cc = classic.ClassicConfig(lam=cfg.classic_lambda, rho=cfg.classic_rho,
                                   iterations=cfg.classic_iterations)
        final = classic.solve(X, cc)
        coeff = final.Z if cfg.use_z_output else final.C
        S = cluster.similarity(coeff)
        result = cluster.spectral_cluster(S, cfg.k_clusters, cfg.seed,
                                          row_normalize=cfg.row_normalize)
    elif cfg.mode == "kmeans-baseline":
        labels = cluster.kmeans(X.T, cfg.k_clusters, cfg.seed)
        result = cluster.ClusterResult(labels=labels, embedding=X.T, wcss=float("nan"))
    else:
        raise ConfigError([f"mode: unknown mode {cfg.mode!r}"])

    from unfold_ssc import metrics as metrics_mod

    scores = metrics_mod.report(result.labels, truth) if truth is not None else None

    os.makedirs(cfg.out_dir, exist_ok=True)
    artifacts = {}
    artifacts["labels.csv"] = _write_labels(cfg.out_dir, "labels.csv", result.labels)
    if truth is not None:
        artifacts["truth.csv"] = _write_labels(cfg.out_dir, "truth.csv", truth)
        artifacts["metrics.json"] = _write_json(cfg.out_dir, "metrics.json", scores)
    if history is not None:
        rows = [
            (i + 1, b.total, b.ae, b.sr, b.sp, b.st) for i, b in enumerate(history)
        ]
        artifacts["loss_history.csv"] = _write_csv(
            cfg.out_dir, "loss_history.csv",
            "epoch,l_all,l_ae,l_sr,l_sp,l_st", rows,
        )
    if pretrain_history is not None:
        artifacts["pretrain_history.csv"] = _write_csv(
            cfg.out_dir, "pretrain_history.csv", "epoch,l_ae",
            [(i + 1, v) for i, v in enumerate(pretrain_history)],
        )
    if S is not None:
        artifacts["similarity.sscm"] = _write_container(cfg.out_dir, "similarity.sscm", S)
    if state is not None:
        artifacts["checkpoint"] = save_checkpoint(os.path.join(cfg.out_dir, "checkpoint"), state)
    if coords is not None and scene_shape is not None:
        artifacts["label_map.ppm"] = _write_ppm(
            cfg.out_dir, "label_map.ppm", scene_shape, coords, result.labels
        )
    manifest = {"config": _config_dict(cfg), "version": __version__}
    artifacts["run_manifest.json"] = _write_json(cfg.out_dir, "run_manifest.json", manifest)

    return {
        "mode": cfg.mode,
        "n_samples": int(n),
        "out_dir": cfg.out_dir,
        "metrics": scores,
        "artifacts": sorted(artifacts),
    }


def _config_dict(cfg: RunConfig) -> dict:
    out = asdict(cfg)
    out["hidden_dims"] = list(cfg.hidden_dims)
    return out


# ---------------------------------------------------------------- artifacts


def _atomic_bytes(path: str, payload: bytes) -> str:
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)
    return path


def _write_labels(out_dir: str, name: str, labels) -> str:
    lines = "".join(f"{int(v)}\n" for v in labels)
    return _atomic_bytes(os.path.join(out_dir, name), lines.encode())


def _write_csv(out_dir: str, name: str, header: str, rows) -> str:
    text = [header]
    for row in rows:
        text.append(",".join(str(v) if isinstance(v, int) else repr(float(v)) for v in row))
    return _atomic_bytes(os.path.join(out_dir, name), ("\n".join(text) + "\n").encode())


def _write_json(out_dir: str, name: str, payload: dict) -> str:
    data = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    return _atomic_bytes(os.path.join(out_dir, name), data.encode())


def _write_container(out_dir: str, name: str, array) -> str:
    from unfold_ssc import container

    path = os.path.join(out_dir, name)
    tmp = path + ".tmp"
    container.write_array(tmp, array)
    os.replace(tmp, path)
    return path


def _write_ppm(out_dir: str, name: str, shape, coords, labels) -> str:
    import numpy as np

    h, w = shape
    img = np.zeros((h, w, 3), dtype=np.uint8)
    palette = np.asarray(PALETTE, dtype=np.uint8)
    img[coords[:, 0], coords[:, 1]] = palette[np.asarray(labels) % len(PALETTE)]
    payload = f"P6\n{w} {h}\n255\n".encode() + img.tobytes()
    return _atomic_bytes(os.path.join(out_dir, name), payload)


def save_checkpoint(path: str, state) -> str:
    """Write AE weights and unfold parameters: one SSCM file per tensor
    plus a JSON manifest with layer counts, the tying flag, and scalars."""
    from unfold_ssc import container

    tmp = path + ".tmp"
    if os.path.isdir(tmp):
        shutil.rmtree(tmp)
    os.makedirs(tmp)
    manifest: dict = {"format": 1, "slope": state.ae.slope, "tensors": {}}

    def put(tag, arr):
        import numpy as np

        fname = tag.replace(".", "_") + ".sscm"
        a = np.asarray(arr, dtype=float)
        container.write_array(os.path.join(tmp, fname), a if a.ndim == 2 else a.reshape(1, -1))
        manifest["tensors"][tag] = {"file": fname, "shape": list(a.shape)}

    manifest["ae"] = {"enc_layers": len(state.ae.enc), "dec_layers": len(state.ae.dec)}
    for name, arr in state.ae.named_arrays():
        put(f"ae.{name}", arr)
    if state.unfold is not None:
        manifest["unfold"] = {
            "n_layers": state.unfold.n_layers,
            "tied": state.unfold.tied,
            "scalars": {},
        }
        for name, arr in state.unfold.named_arrays():
            if name.endswith(("rho_raw", "theta_raw")):
                manifest["unfold"]["scalars"][name] = float(arr)
            else:
                put(f"unfold.{name}", arr)
    with open(os.path.join(tmp, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if os.path.isdir(path):
        shutil.rmtree(path)
    os.replace(tmp, path)
    return path


def load_checkpoint(path: str):
    """Rebuild a TrainState (AE weights, optional unfold params) from disk."""
    import numpy as np

    from unfold_ssc import autoenc, container, train, unfold

    with open(os.path.join(path, "manifest.json")) as fh:
        manifest = json.load(fh)

    def get(tag):
        entry = manifest["tensors"][tag]
        arr = container.read_array(os.path.join(path, entry["file"]))
        return arr.reshape(entry["shape"])

    enc = [
        autoenc.Affine(get(f"ae.enc{i}.W"), get(f"ae.enc{i}.b"))
        for i in range(manifest["ae"]["enc_layers"])
    ]
    dec = [
        autoenc.Affine(get(f"ae.dec{i}.W"), get(f"ae.dec{i}.b"))
        for i in range(manifest["ae"]["dec_layers"])
    ]
    state = train.TrainState(ae=autoenc.AeWeights(enc=enc, dec=dec, slope=manifest["slope"]))
    if "unfold" in manifest:
        info = manifest["unfold"]
        count = 1 if info["tied"] else info["n_layers"]
        layers = []
        for i in range(count):
            prefix = "shared" if info["tied"] else f"layer{i}"
            layers.append(unfold.UnfoldLayer(
                W=get(f"unfold.{prefix}.W"),
                B=get(f"unfold.{prefix}.B"),
                rho_raw=np.array(info["scalars"][f"{prefix}.rho_raw"]),
                theta_raw=np.array(info["scalars"][f"{prefix}.theta_raw"]),
            ))
        state.unfold = unfold.UnfoldParams(layers=layers, n_layers=info["n_layers"],
                                           tied=info["tied"])
    return state


# ---------------------------------------------------------------- commands


def _flag_overrides(args) -> dict:
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        overrides["out_dir"] = args.out
    if getattr(args, "mode", None) is not None:
        overrides["mode"] = args.mode
    if getattr(args, "no_row_norm", False):
        overrides["row_normalize"] = False
    if getattr(args, "use_z_output", False):
        overrides["use_z_output"] = True
    return overrides


def cmd_run(args) -> int:
    cfg = validate_config(args.config, preset=args.preset, overrides=_flag_overrides(args))
    summary = run_pipeline(cfg)
    if summary["metrics"]:
        m = summary["metrics"]
        print(f"acc={m['acc']:.4f} nmi={m['nmi']:.4f} kappa={m['kappa']:.4f} "
              f"n={m['n']}")
    print(f"artifacts written to {summary['out_dir']}")
    return 0


def cmd_pretrain(args) -> int:
    from unfold_ssc import autoenc, train

    cfg = validate_config(args.config, preset=args.preset, overrides=_flag_overrides(args))
    X, _, _, _ = _load_inputs(cfg)
    tc = _train_config(cfg)
    if tc.knn_init >= X.shape[1] or tc.knn_struct >= X.shape[1]:
        raise ConfigError([f"knn_init/knn_struct: need fewer neighbors than the {X.shape[1]} samples"])
    ae_cfg = autoenc.AeConfig(input_dim=X.shape[0], hidden_dims=tuple(cfg.hidden_dims),
                              latent_dim=cfg.latent_dim)
    state = train.init_state(ae_cfg, cfg.seed)
    history = train.pretrain(state, X, tc)
    os.makedirs(cfg.out_dir, exist_ok=True)
    _write_csv(cfg.out_dir, "pretrain_history.csv", "epoch,l_ae",
               [(i + 1, v) for i, v in enumerate(history)])
    save_checkpoint(os.path.join(cfg.out_dir, "checkpoint"), state)
    _write_json(cfg.out_dir, "run_manifest.json",
                {"config": _config_dict(cfg), "version": __version__})
    final = history[-1] if history else float("nan")
    print(f"pretrained {cfg.pretrain_epochs} epochs, final reconstruction loss {final}")
    print(f"artifacts written to {cfg.out_dir}")
    return 0


def cmd_cluster(args) -> int:
    import numpy as np

    from unfold_ssc import cluster, container, metrics as metrics_mod

    C = container.load_any(args.from_c)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise DataError(f"coefficient matrix must be square, got shape {C.shape}")
    if not np.all(np.isfinite(C)):
        raise DataError("coefficient matrix has non-finite entries")
    S = cluster.similarity(C)
    result = cluster.spectral_cluster(S, args.k, args.seed,
                                      row_normalize=not args.no_row_norm)
    os.makedirs(args.out, exist_ok=True)
    _write_labels(args.out, "labels.csv", result.labels)
    if args.truth:
        truth = _read_label_vector(args.truth)
        scores = metrics_mod.report(result.labels, truth)
        _write_json(args.out, "metrics.json", scores)
        print(f"acc={scores['acc']:.4f} nmi={scores['nmi']:.4f} kappa={scores['kappa']:.4f}")
    print(f"artifacts written to {args.out}")
    return 0


def _read_label_vector(path):
    import numpy as np

    from unfold_ssc import container

    arr = container.load_any(path)
    flat = arr.reshape(-1)
    rounded = np.rint(flat)
    if not np.array_equal(flat, rounded):
        raise DataError(f"{path}: labels must be integers")
    return rounded.astype(np.int64)


def cmd_eval(args) -> int:
    from unfold_ssc import metrics as metrics_mod

    pred = _read_label_vector(args.pred)
    truth = _read_label_vector(args.truth)
    if pred.shape != truth.shape:
        raise DataError(f"label count mismatch: {pred.shape[0]} vs {truth.shape[0]}")
    scores = metrics_mod.report(pred, truth)
    print(json.dumps(scores, indent=2, sort_keys=True))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write_json(args.out, "metrics.json", scores)
    return 0


def cmd_gen(args) -> int:
    import numpy as np

    from unfold_ssc import container, data

    os.makedirs(args.out, exist_ok=True)
    if args.kind == "subspaces":
        X, labels = data.gen_subspaces(args.seed, args.clusters, args.ambient_dim,
                                       args.sub_dim, args.per_cluster, args.sigma)
        _write_container(args.out, "values.sscm", X)
        _write_labels(args.out, "labels.csv", labels)
    else:
        cube = data.gen_synthetic_cube(args.seed, args.clusters,
                                       (args.height, args.width), args.bands, args.sigma)
        _write_container(args.out, "values.sscm", cube.values)
        _write_container(args.out, "labels.sscm", cube.labels.astype(np.float64))
    print(f"wrote {args.kind} data to {args.out}")
    return 0


# ---------------------------------------------------------------- entry


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unfold-ssc",
        description="Self-representation subspace clustering, classic and unfolded.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="JSON configuration file")
            p.add_argument("--preset", choices=sorted(PRESETS), help="dataset preset")
        p.add_argument("--seed", type=int, help="run seed")
        p.add_argument("--out", help="output directory")

    p_run = sub.add_parser("run", help="full pipeline: train, cluster, evaluate")
    common(p_run)
    p_run.add_argument("--mode", choices=MODES, help="pipeline variant")
    p_run.add_argument("--no-row-norm", action="store_true",
                       help="skip row normalization of the spectral embedding")
    p_run.add_argument("--use-z-output", action="store_true",
                       help="build the similarity from the auxiliary sparse matrix")
    p_run.set_defaults(func=cmd_run)

    p_pre = sub.add_parser("pretrain", help="autoencoder phase only")
    common(p_pre)
    p_pre.set_defaults(func=cmd_pretrain)

    p_clu = sub.add_parser("cluster", help="spectral clustering from a saved matrix")
    p_clu.add_argument("--from-c", required=True, dest="from_c",
                       help="coefficient matrix file (SSCM or CSV)")
    p_clu.add_argument("--k", type=int, required=True, help="number of clusters")
    p_clu.add_argument("--truth", help="optional true labels for metrics")
    p_clu.add_argument("--no-row-norm", action="store_true")
    p_clu.add_argument("--seed", type=int, default=0)
    p_clu.add_argument("--out", default="ssc_out")
    p_clu.set_defaults(func=cmd_cluster)

    p_eval = sub.add_parser("eval", help="metrics on saved label files")
    p_eval.add_argument("--pred", required=True)
    p_eval.add_argument("--truth", required=True)
    p_eval.add_argument("--out", help="optional directory for metrics.json")
    p_eval.set_defaults(func=cmd_eval)

    p_gen = sub.add_parser("gen", help="synthetic data generators")
    gen_sub = p_gen.add_subparsers(dest="kind", required=True)
    g_sub = gen_sub.add_parser("subspaces", help="union-of-subspaces matrix")
    g_sub.add_argument("--clusters", type=int, default=3)
    g_sub.add_argument("--ambient-dim", type=int, default=30)
    g_sub.add_argument("--sub-dim", type=int, default=3)
    g_sub.add_argument("--per-cluster", type=int, default=100)
    g_sub.add_argument("--sigma", type=float, default=0.01)
    g_sub.add_argument("--seed", type=int, default=0)
    g_sub.add_argument("--out", default="ssc_data")
    g_sub.set_defaults(func=cmd_gen)
    g_cube = gen_sub.add_parser("cube", help="labeled synthetic image cube")
    g_cube.add_argument("--clusters", type=int, default=4)
    g_cube.add_argument("--height", type=int, default=20)
    g_cube.add_argument("--width", type=int, default=20)
    g_cube.add_argument("--bands", type=int, default=16)
    g_cube.add_argument("--sigma", type=float, default=0.02)
    g_cube.add_argument("--seed", type=int, default=0)
    g_cube.add_argument("--out", default="ssc_data")
    g_cube.set_defaults(func=cmd_gen)

    return parser


def main(argv=None) -> int:
    threads = os.environ.get("UNFOLD_SSC_THREADS")
    if threads:
        for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS",
                    "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
            os.environ.setdefault(var, threads)

    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for line in exc.errors:
            print(f"config error: {line}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
