"""Orchestration behind the ``train``, ``sweep``, ``verify`` and ``report`` commands.

Output layout under ``<out>``::

    train/summary.json
    train/<MODE>/seed_<s>/metrics.csv
    train/<MODE>/seed_<s>/policy.ckpt
    sweep/report.json
    sweep/tables/<MODE>_seed_<s>.csv, <MODE>_mean.csv
    sweep/plot_data.csv, sweep/plot_data_success.csv
    verify/conformance.json

Every file carries the config hash and seed list.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Any

from . import checkpoint
from .config import RunConfig
from .learner import EpisodeMetrics, Trainer, TrainerConfig, estimate_optimal_return
from .robustness import RobustnessReport, perturbation_sweep
from .theory import run_conformance_suite


class MissingCheckpoints(FileNotFoundError):
    def __init__(self, paths: list[Path]):
        self.paths = [str(p) for p in paths]
        listing = "\n  ".join(self.paths)
        super().__init__(f"missing checkpoints (run `train` first or pass train_inline):\n  {listing}")


def _stamp(cfg: RunConfig) -> list[str]:
    return [f"# config_hash: {cfg.config_hash}", f"# seeds: {json.dumps(cfg.seeds)}"]


def _write_text(path: Path, text: str) -> str:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return str(path)


def _write_json(path: Path, obj: Any) -> str:
    return _write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _require(cfg: RunConfig, *sections: str):
    missing = [s for s in sections if getattr(cfg, s) is None]
    if missing:
        raise ValueError(f"config is missing required section(s): {', '.join(missing)}")


def metrics_csv(cfg: RunConfig, rows: list[EpisodeMetrics]) -> str:
    buf = io.StringIO()
    buf.write("\n".join(_stamp(cfg)) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EpisodeMetrics.FIELDS)
    for m in rows:
        w.writerow(m.row())
    return buf.getvalue()


def optimal_return_for(cfg: RunConfig, env, seed: int) -> float | None:
    spec = cfg.trainer.optimal_return
    if spec is None:
        return None
    if spec.source == "value":
        return float(spec.value)
    base = cfg.trainer.trainer_config("SAC1", seed, None)
    if spec.source == "exact":
        return estimate_optimal_return(env, base, method="exact")
    return estimate_optimal_return(env, base.replace(episodes=spec.sac_episodes), method="sac",
                                   eval_every=spec.eval_every)


def checkpoint_path(out: Path, mode: str, seed: int) -> Path:
    return Path(out) / "train" / mode / f"seed_{seed}" / "policy.ckpt"


def train(cfg: RunConfig, out: str | Path | None = None) -> dict[str, Any]:
    """Train every configured mode for every seed; returns a summary."""
    _require(cfg, "env", "trainer")
    out = Path(out or cfg.output_dir)
    env = cfg.env.build()
    files, optimal = [], {}
    for seed in cfg.seeds:
        r_star = optimal_return_for(cfg, env, seed)
        optimal[str(seed)] = r_star
        for mode in cfg.trainer.modes:
            tc: TrainerConfig = cfg.trainer.trainer_config(mode, seed, r_star)
            trainer = Trainer(env, tc).run()
            run_dir = out / "train" / mode / f"seed_{seed}"
            files.append(_write_text(run_dir / "metrics.csv", metrics_csv(cfg, trainer.metrics)))
            meta = {"config_hash": cfg.config_hash, "seeds": cfg.seeds, "seed": seed, "mode": mode,
                    "optimal_return": r_star, "trainer": tc.to_dict(), "env": env.describe()}
            files.append(str(checkpoint.save_checkpoint(run_dir / "policy.ckpt", trainer.checkpoint_arrays(), meta)))
    summary = {"config_hash": cfg.config_hash, "seeds": cfg.seeds, "modes": cfg.trainer.modes,
               "optimal_return": optimal, "config": cfg.canonical()}
    files.append(_write_json(out / "train" / "summary.json", summary))
    return {"files": files, "optimal_return": optimal, "config_hash": cfg.config_hash}


def load_policies(cfg: RunConfig, out: Path) -> dict[str, list]:
    paths = {(m, s): checkpoint_path(out, m, s) for m in cfg.trainer.modes for s in cfg.seeds}
    missing = [p for p in paths.values() if not p.exists()]
    if missing:
        raise MissingCheckpoints(missing)
    return {m: [checkpoint.load_policy(paths[m, s]) for s in cfg.seeds] for m in cfg.trainer.modes}


def render_report(report: RobustnessReport, out: Path, stamp: list[str]) -> list[str]:
    head = "\n".join(stamp) + "\n"
    files = []
    for m in report.modes:
        for i, seed in enumerate(report.seeds):
            files.append(_write_text(out / "tables" / f"{m}_seed_{seed}.csv", head + report.table_csv(m, i)))
        files.append(_write_text(out / "tables" / f"{m}_mean.csv", head + report.table_csv(m)))
    files.append(_write_text(out / "plot_data.csv", head + report.plot_csv("return")))
    files.append(_write_text(out / "plot_data_success.csv", head + report.plot_csv("success")))
    return files


def sweep(cfg: RunConfig, out: str | Path | None = None, train_inline: bool = False) -> dict[str, Any]:
    _require(cfg, "env", "trainer", "eval")
    out = Path(out or cfg.output_dir)
    if train_inline:
        train(cfg, out)
    policies = load_policies(cfg, out)
    env = cfg.env.build()
    report = perturbation_sweep(policies, env, cfg.eval.spec(), cfg.eval.levels, cfg.eval.budget_k,
                                cfg.eval.n_eval, cfg.seeds)
    report.provenance.update(config_hash=cfg.config_hash, config=cfg.canonical())
    sweep_dir = out / "sweep"
    files = [_write_text(sweep_dir / "report.json", report.to_json() + "\n")]
    files += render_report(report, sweep_dir, _stamp(cfg))
    return {"files": files, "config_hash": cfg.config_hash, "errors": report.errors,
            "selected_curve": report.selected_curve.tolist()}


def verify(cfg: RunConfig, out: str | Path | None = None) -> dict[str, Any]:
    _require(cfg, "verify")
    out = Path(out or cfg.output_dir)
    v = cfg.verify
    result = run_conformance_suite(v.n_instances, v.seed, v.max_states, v.max_actions, v.n_candidates,
                                   v.mutation, v.mi_instances, v.mi_horizon)
    result.update(config_hash=cfg.config_hash, seeds=cfg.seeds, config=cfg.canonical())
    path = _write_json(out / "verify" / "conformance.json", result)
    return {"files": [path], "violations": result["violations"], "vacuous": result["vacuous"],
            "config_hash": cfg.config_hash}


def report(report_path: str | Path, out: str | Path | None = None) -> dict[str, Any]:
    """Re-render tables and plot data from a stored report.json."""
    report_path = Path(report_path)
    if not report_path.exists():
        raise FileNotFoundError(f"report not found: {report_path}")
    rep = RobustnessReport.from_json(report_path.read_text())
    prov = rep.provenance
    stamp = [f"# config_hash: {prov.get('config_hash', 'unknown')}", f"# seeds: {json.dumps(rep.seeds)}"]
    files = render_report(rep, Path(out) if out else report_path.parent, stamp)
    return {"files": files, "config_hash": prov.get("config_hash")}
