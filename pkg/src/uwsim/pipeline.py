"""Batch dataset generation and evaluation.

A run is described by one JSON config. The input manifest is JSON lines,
one object per sample with ``id``, ``clean`` and ``depth`` paths (relative
paths resolve against the manifest's directory). Each sample gets
``stream_id`` = its row index, which keys its random stream together with
the run seed, so output bytes do not depend on scheduling or worker count.

Per sample, ``<output_dir>/<id>/`` receives:

    initial.png        classical model output
    degraded.png       final simulated image (clamped at export)
    degraded.f32       final simulated image, unclamped float32
    residual.f32       degraded - initial, signed float32
    residual.png       residual mapped [-1, 1] -> [0, 65535]
    transmission.png   per-channel transmission
    scattered.png      scattered-model image before the particle blend
    particles.png      particle layer

(the last two only for the scattering models). ``<output_dir>/manifest.jsonl``
lists every input row once, in input order, with status and SHA-256 hashes.
"""

from __future__ import annotations

import copy
import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import imaging
from .imaging import ImageIOError, downsample_half, load_depth, load_rgb, read_f32
from .metrics import MetricsReport, aggregate, evaluate_pair
from .optics import WaterProfile, degrade_classic, jerlov_preset, transmission
from .rng import RngStream
from .scatter import ScatterParams, simulate_scattered
from .turbidity import TurbidityParams, blend_turbidity, make_particle_layer

log = logging.getLogger(__name__)

MODELS = ("classic", "scatter", "scatter+turbidity")

DEFAULT_CONFIG: dict = {
    "manifest": None,
    "output_dir": None,
    "model": "scatter+turbidity",
    "seed": 0,
    "workers": 1,
    "linearize_srgb": False,
    "water": {"preset": "II", "beta": None, "veiling": None, "preset_file": None},
    "scatter": {
        "alpha": [0.4, 0.3, 0.3],
        "gamma": [1.5, 1.5, 1.5],
        "kernel_cutoff": 3.0,
        "normalization_mode": "verbatim",
        "delta_sigma_eps": 0.25,
        "k_semantics": "equation",
    },
    "turbidity": {
        "u": 0.9,
        "sp_col": [0.6, 0.7, 0.7],
        "pr": [0.01, 0.01, 0.01],
        "sigma": [1.5, 1.5, 1.5],
        "bipolar": False,
    },
    "depth": {"scale": imaging.DEFAULT_DEPTH_SCALE, "clip": list(imaging.DEFAULT_DEPTH_CLIP), "half_res": False},
    "fast": {"exact": False, "bins": 8, "bin_strategy": "uniform"},
    "export": {"clamp": True},
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def set_dotted(cfg: dict, assignment: str) -> None:
    """Apply ``a.b.c=value``; the value is parsed as JSON, else kept as a string."""
    if "=" not in assignment:
        raise ConfigError(f"--set expects key=value, got {assignment!r}")
    key, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = cfg
    parts = key.strip().split(".")
    for part in parts[:-1]:
        nxt = node.get(part)
        if not isinstance(nxt, dict):
            nxt = node[part] = {}
        node = nxt
    node[parts[-1]] = value


@dataclass
class PipelineConfig:
    manifest: Path
    output_dir: Path
    model: str
    seed: int
    water: WaterProfile
    scatter: ScatterParams
    turbidity: TurbidityParams
    k_semantics: str = "equation"
    depth_scale: float = imaging.DEFAULT_DEPTH_SCALE
    depth_clip: tuple[float, float] = imaging.DEFAULT_DEPTH_CLIP
    half_res: bool = False
    exact_scatter: bool = False
    bins: int = 8
    bin_strategy: str = "uniform"
    clamp: bool = True
    linearize_srgb: bool = False
    workers: int = 1
    raw: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> "PipelineConfig":
        cfg = _merge(DEFAULT_CONFIG, data)
        base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
        try:
            if not cfg["manifest"] or not cfg["output_dir"]:
                raise ConfigError("config needs 'manifest' and 'output_dir'")
            if cfg["model"] not in MODELS:
                raise ConfigError(f"model must be one of {MODELS}, got {cfg['model']!r}")
            water = _water_profile(cfg["water"])
            sc = cfg["scatter"]
            scatter = ScatterParams(
                alpha=tuple(sc["alpha"]),
                gamma=tuple(sc["gamma"]),
                kernel_cutoff=float(sc["kernel_cutoff"]),
                normalization_mode=sc["normalization_mode"],
                delta_sigma_eps=float(sc["delta_sigma_eps"]),
            )
            if sc["k_semantics"] not in ("equation", "prose"):
                raise ConfigError("scatter.k_semantics must be 'equation' or 'prose'")
            tb = cfg["turbidity"]
            turbidity = TurbidityParams(
                u=float(tb["u"]),
                sp_col=tuple(tb["sp_col"]),
                pr=tuple(tb["pr"]),
                sigma=tuple(tb["sigma"]),
                bipolar=bool(tb["bipolar"]),
            )
            clip = tuple(float(v) for v in cfg["depth"]["clip"])
            if len(clip) != 2 or not 0 < clip[0] < clip[1]:
                raise ConfigError(f"depth.clip must be [z_min, z_max] with 0 < z_min < z_max, got {clip}")
            if not float(cfg["depth"]["scale"]) > 0:
                raise ConfigError("depth.scale must be positive")
            bins = int(cfg["fast"]["bins"])
            if bins < 1:
                raise ConfigError("fast.bins must be >= 1")
            if cfg["fast"]["bin_strategy"] not in ("uniform", "quantile"):
                raise ConfigError("fast.bin_strategy must be 'uniform' or 'quantile'")
            workers = int(cfg["workers"])
            if workers < 1:
                raise ConfigError("workers must be >= 1")
            return cls(
                manifest=(base_dir / cfg["manifest"]).resolve(),
                output_dir=(base_dir / cfg["output_dir"]).resolve(),
                model=cfg["model"],
                seed=int(cfg["seed"]),
                water=water,
                scatter=scatter,
                turbidity=turbidity,
                k_semantics=sc["k_semantics"],
                depth_scale=float(cfg["depth"]["scale"]),
                depth_clip=clip,
                half_res=bool(cfg["depth"]["half_res"]),
                exact_scatter=bool(cfg["fast"]["exact"]),
                bins=bins,
                bin_strategy=cfg["fast"]["bin_strategy"],
                clamp=bool(cfg["export"]["clamp"]),
                linearize_srgb=bool(cfg["linearize_srgb"]),
                workers=workers,
                raw=cfg,
            )
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc}") from exc

    @classmethod
    def load(cls, path, overrides=(), seed: int | None = None) -> "PipelineConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        for item in overrides:
            set_dotted(data, item)
        if seed is not None:
            data["seed"] = seed
        return cls.from_dict(data, base_dir=path.parent)

    def recorded(self) -> dict:
        """Config as stored in the run record; location-dependent keys are dropped."""
        rec = copy.deepcopy(self.raw)
        for key in ("manifest", "output_dir", "workers"):
            rec.pop(key, None)
        rec["water"] = self.water.to_dict()
        return rec


def _water_profile(water: dict) -> WaterProfile:
    preset = water.get("preset")
    if water.get("beta") is not None:
        if water.get("veiling") is None:
            raise ConfigError("water.beta given without water.veiling")
        return WaterProfile(tuple(water["beta"]), tuple(water["veiling"]), name=preset)
    if preset is None:
        raise ConfigError("water needs a preset name or explicit beta/veiling")
    try:
        return jerlov_preset(preset, veiling=water.get("veiling"), path=water.get("preset_file"))
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from exc


@dataclass
class SampleRecord:
    id: str
    stream_id: int
    clean: str
    depth: str
    status: str = "pending"
    outputs: dict = field(default_factory=dict)
    hashes: dict = field(default_factory=dict)
    error: str | None = None

    def to_json(self) -> str:
        rec = {
            "id": self.id,
            "stream_id": self.stream_id,
            "clean": self.clean,
            "depth": self.depth,
            "status": self.status,
            "outputs": self.outputs,
            "hashes": self.hashes,
        }
        if self.error is not None:
            rec["error"] = self.error
        return json.dumps(rec, sort_keys=True)


def read_manifest(path) -> list[dict]:
    path = Path(path)
    rows = []
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read manifest {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rows.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    return rows


def render_sample(clean: np.ndarray, depth: np.ndarray, cfg: PipelineConfig, stream_id: int) -> dict:
    """All float planes for one sample, before export clamping."""
    imaging.check_pair(clean, depth)
    if cfg.linearize_srgb:
        clean = imaging.srgb_to_linear(clean)
    if cfg.half_res:
        clean = downsample_half(clean)
        depth = downsample_half(depth)
    if cfg.model == "classic":
        t = transmission(depth, cfg.water)
        initial = degrade_classic(clean, t, cfg.water)
        planes = {"transmission": t, "initial": initial, "final": initial.copy()}
    else:
        sim = simulate_scattered(
            clean,
            depth,
            cfg.water,
            cfg.scatter,
            exact=cfg.exact_scatter,
            bins=cfg.bins,
            strategy=cfg.bin_strategy,
            semantics=cfg.k_semantics,
        )
        planes = {
            "transmission": sim["transmission"],
            "initial": sim["initial"],
            "scattered": sim["scattered"],
            "final": sim["scattered"],
        }
        if cfg.model == "scatter+turbidity":
            stream = RngStream(cfg.seed, stream_id)
            sp = make_particle_layer(depth.shape, cfg.turbidity, stream)
            planes["particles"] = sp
            planes["final"] = blend_turbidity(sim["scattered"], sp, cfg.turbidity.u)
    planes["residual"] = planes["final"] - planes["initial"]
    return planes


def _export(img: np.ndarray, clamp: bool) -> np.ndarray:
    return np.clip(img, 0.0, 1.0) if clamp else img


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_residual_png(path, residual: np.ndarray) -> None:
    """Signed residual through the affine map [-1, 1] -> [0, 1] before 16-bit export."""
    imaging.save_rgb(path, np.clip((residual + 1.0) / 2.0, 0.0, 1.0))


def read_residual_png(path) -> np.ndarray:
    return load_rgb(path) * 2.0 - 1.0


def _process(args) -> SampleRecord:
    row, stream_id, cfg, manifest_dir = args
    rec = SampleRecord(
        id=str(row.get("id", stream_id)),
        stream_id=stream_id,
        clean=str(row.get("clean", "")),
        depth=str(row.get("depth", "")),
    )
    try:
        if "clean" not in row or "depth" not in row:
            raise ValueError("manifest row needs 'clean' and 'depth'")
        clean = load_rgb(manifest_dir / row["clean"])
        depth = load_depth(
            manifest_dir / row["depth"],
            scale=cfg.depth_scale,
            clip=cfg.depth_clip,
            expected_shape=clean.shape[:2],
        )
        planes = render_sample(clean, depth, cfg, stream_id)
        sample_dir = cfg.output_dir / rec.id
        files = {
            "initial": ("initial.png", lambda p: imaging.save_rgb(p, _export(planes["initial"], cfg.clamp))),
            "degraded": ("degraded.png", lambda p: imaging.save_rgb(p, _export(planes["final"], cfg.clamp))),
            "degraded_f32": ("degraded.f32", lambda p: imaging.write_f32(p, planes["final"])),
            "residual": ("residual.f32", lambda p: imaging.write_f32(p, planes["residual"])),
            "residual_png": ("residual.png", lambda p: write_residual_png(p, planes["residual"])),
            "transmission": ("transmission.png", lambda p: imaging.save_rgb(p, planes["transmission"])),
        }
        if "scattered" in planes:
            files["scattered"] = ("scattered.png", lambda p: imaging.save_rgb(p, _export(planes["scattered"], cfg.clamp)))
        if "particles" in planes:
            files["particles"] = ("particles.png", lambda p: imaging.save_rgb(p, planes["particles"]))
        for key, (name, writer) in files.items():
            path = sample_dir / name
            writer(path)
            rel = f"{rec.id}/{name}"
            rec.outputs[key] = rel
            rec.hashes[key] = _sha256(path)
        rec.status = "success"
    except (ImageIOError, ValueError, OSError) as exc:
        rec.status = "failure"
        rec.error = str(exc)
        log.warning("sample %s failed: %s", rec.id, exc)
    return rec


def run_generate(cfg: PipelineConfig, workers: int | None = None) -> list[SampleRecord]:
    """Render every manifest row; returns records in input order."""
    rows = read_manifest(cfg.manifest)
    ids = [str(r.get("id", i)) for i, r in enumerate(rows)]
    if len(set(ids)) != len(ids):
        raise ConfigError("manifest ids must be unique")
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(row, i, cfg, cfg.manifest.parent) for i, row in enumerate(rows)]
    workers = workers or cfg.workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_process, jobs))
    else:
        records = [_process(job) for job in jobs]
    with open(cfg.output_dir / "manifest.jsonl", "w") as fh:
        for rec in records:
            fh.write(rec.to_json() + "\n")
    (cfg.output_dir / "run.json").write_text(json.dumps(cfg.recorded(), sort_keys=True, indent=2) + "\n")
    return records


# --- evaluation -------------------------------------------------------------


def _resolve(row: dict, key: str) -> str:
    if key in row:
        return row[key]
    if key in row.get("outputs", {}):
        return row["outputs"][key]
    raise KeyError(f"row {row.get('id')!r} has no {key!r} entry")


def load_plane(path, kind: str, depth_scale: float, depth_clip) -> np.ndarray:
    """Depth planes load in meters; image planes load as float RGB or raw ``.f32``."""
    path = Path(path)
    if kind == "depth":
        if path.suffix.lower() == ".f32":
            return load_depth(path, scale=1.0, clip=depth_clip)
        return load_depth(path, scale=depth_scale, clip=depth_clip)
    if path.suffix.lower() == ".f32":
        return read_f32(path)
    return load_rgb(path)


@dataclass
class EvalConventions:
    pred_key: str = "degraded"
    truth_key: str | None = None
    kind: str = "image"
    half_res: bool = False
    depth_cap: tuple[float, float] | None = None
    depth_scale: float = imaging.DEFAULT_DEPTH_SCALE
    depth_clip: tuple[float, float] = imaging.DEFAULT_DEPTH_CLIP


def evaluate_planes(truth: np.ndarray, pred: np.ndarray, conv: EvalConventions) -> MetricsReport:
    if conv.half_res or (
        truth.shape[:2] != pred.shape[:2]
        and truth.shape[0] == 2 * pred.shape[0]
        and truth.shape[1] == 2 * pred.shape[1]
    ):
        truth = downsample_half(truth)
    if truth.shape != pred.shape:
        raise ValueError(f"dimension mismatch: truth {truth.shape}, prediction {pred.shape}")
    mask = None
    if conv.depth_cap is not None:
        lo, hi = conv.depth_cap
        mask = (truth >= lo) & (truth <= hi)
        if truth.ndim == 3:
            mask = mask.all(axis=2)
        pred = np.clip(pred, max(lo, 1e-3), hi)
    return evaluate_pair(truth, pred, mask=mask)


def run_evaluate(pred_manifest, truth_manifest, conv: EvalConventions | None = None) -> tuple[list[dict], dict]:
    """Per-pair reports (as dicts with ``id`` and ``status``) plus the aggregate over successes."""
    conv = conv or EvalConventions()
    pred_manifest, truth_manifest = Path(pred_manifest), Path(truth_manifest)
    preds = read_manifest(pred_manifest)
    truths = {str(r["id"]): r for r in read_manifest(truth_manifest)}
    pred_ids = [str(r["id"]) for r in preds]
    missing = [i for i in pred_ids if i not in truths]
    if missing or len(truths) != len(pred_ids):
        extra = sorted(set(truths) - set(pred_ids))
        raise ValueError(f"manifest ids do not align (missing in truth: {missing}, missing in prediction: {extra})")
    truth_key = conv.truth_key or conv.pred_key
    results, reports = [], []
    for row in preds:
        rid = str(row["id"])
        try:
            if row.get("status", "success") != "success":
                raise ValueError(f"prediction marked {row.get('status')}")
            pred = load_plane(pred_manifest.parent / _resolve(row, conv.pred_key), conv.kind, conv.depth_scale, conv.depth_clip)
            truth = load_plane(
                truth_manifest.parent / _resolve(truths[rid], truth_key), conv.kind, conv.depth_scale, conv.depth_clip
            )
            report = evaluate_planes(truth, pred, conv)
        except (ImageIOError, ValueError, KeyError, OSError) as exc:
            results.append({"id": rid, "status": "failure", "error": str(exc)})
            continue
        reports.append(report)
        results.append({"id": rid, "status": "success", **report.to_dict()})
    agg = aggregate(reports)
    agg["failed"] = len(results) - len(reports)
    return results, agg
