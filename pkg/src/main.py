import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

import pandas as pd
from dotenv import load_dotenv

from .config import LOG_LEVEL_ENV, RunConfig, build_run_config, output_root
from .database.db_setup import best_runs, create_session_factory, save_eval_records
from .errors import ConfigError, NonFiniteLossError
from .integration.pipeline import CorpusPipeline
from .ndgrad import set_precision
from .synthgen import gen_corpus, write_scene
from .training import FloorplanModel, Trainer, load_samples, run_gradient_suite

logger = logging.getLogger(__name__)

COMMANDS = ("synth", "preprocess", "train", "infer", "eval", "gradcheck")
EXIT_OK, EXIT_FAILURE, EXIT_CONFIG, EXIT_NON_FINITE = 0, 1, 2, 3


def _output_dir(config: RunConfig, default: str) -> Path:
    out = Path(config.output) if config.output else output_root() / default
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require(config: RunConfig, name: str) -> Path:
    value = getattr(config, name)
    if not value:
        raise ConfigError(f"'{config.command}' needs --{name}")
    path = Path(value)
    if not path.exists():
        raise ConfigError(f"--{name} {path} does not exist")
    return path


def _record_config(config: RunConfig, out: Path):
    (out / "run_config.json").write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True))


def synth(config: RunConfig) -> Dict:
    out = _output_dir(config, "corpus")
    scenes = gen_corpus(config.seed, config.count, config.scene_spec())
    for scene in scenes:
        write_scene(scene, out)
        if scene.flags:
            logger.warning(f"{scene.scene_id}: {', '.join(scene.flags)}")
    _record_config(config, out)
    return {"output": str(out), "scenes": len(scenes)}


def preprocess(config: RunConfig) -> Dict:
    source = _require(config, "input")
    out = _output_dir(config, "images")
    images = CorpusPipeline(config.jobs).preprocess(source, out, config.preprocess_config())
    _record_config(config, out)
    return {"output": str(out), "images": len(images)}


def train(config: RunConfig) -> Dict:
    corpus = _require(config, "input")
    out = _output_dir(config, "train")
    encoder = config.encoder_config()
    samples = load_samples(corpus, with_images=encoder.mode == "tiny-encoder")
    model = FloorplanModel(encoder, config.decoder_config())
    _record_config(config, out)
    result = Trainer(model, config.train_config(), out).train_three_stage(samples)
    final = result.log.iloc[-1]
    return {"output": str(out), "checkpoint": str(result.checkpoints[-1]),
            "steps": len(result.log), "final_loss": float(final["total"])}


def infer(config: RunConfig) -> Dict:
    checkpoint = _require(config, "checkpoint")
    source = _require(config, "input")
    out = _output_dir(config, "infer")
    model = FloorplanModel.load(checkpoint)
    written = CorpusPipeline(config.jobs).infer(model, source, out, config.gamma,
                                                config.validity_threshold, config.seed)
    _record_config(config, out)
    return {"output": str(out), "floorplans": len(written)}


def evaluate(config: RunConfig) -> Dict:
    predictions = _require(config, "input")
    gt = Path(config.gt) if config.gt else predictions
    if not gt.exists():
        raise ConfigError(f"--gt {gt} does not exist")
    out = _output_dir(config, "eval")
    report, rows = CorpusPipeline(config.jobs).evaluate(predictions, gt, out, config.corner_tol,
                                                        config.angle_tol, config.iou_threshold)
    _record_config(config, out)
    summary = {"output": str(out), "report": report.to_dict()}
    if not config.no_db:
        db_path = output_root() / "results.db"
        db_path.parent.mkdir(parents=True, exist_ok=True)
        factory = create_session_factory(f"sqlite:///{db_path}")
        save_eval_records(factory, str(out), rows)
        summary["database"] = str(db_path)
        summary["best_runs"] = best_runs(factory, limit=5)
    return summary


def gradcheck(config: RunConfig) -> Dict:
    results = run_gradient_suite(configs=config.gradcheck_configs, seed=config.seed)
    table = pd.DataFrame([{"check": r.name, "checked": r.checked, "skipped": r.skipped,
                           "max_rel_err": r.max_rel_err, "result": "PASS" if r.passed else "FAIL"}
                          for r in results])
    if config.output:
        out = _output_dir(config, "gradcheck")
        table.to_csv(out / "gradcheck.csv", index=False)
    print(table.to_string(index=False), file=sys.stderr)
    failed = int((table["result"] == "FAIL").sum())
    return {"checks": len(table), "failed": failed, "passed": failed == 0,
            "max_rel_err": float(table["max_rel_err"].max())}


HANDLERS: Dict[str, Callable[[RunConfig], Dict]] = {
    "synth": synth,
    "preprocess": preprocess,
    "train": train,
    "infer": infer,
    "eval": evaluate,
    "gradcheck": gradcheck,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="floorplan", description="Room-wise implicit floorplan reconstruction")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="key = value config file; flags override it")
    parser.add_argument("--input")
    parser.add_argument("--output")
    parser.add_argument("--gt", help="ground-truth corpus for eval (defaults to --input)")
    parser.add_argument("--checkpoint")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--jobs", type=int)
    parser.add_argument("--encoder", choices=["tiny", "table"])
    parser.add_argument("--m", type=int)
    parser.add_argument("--l", type=int)
    parser.add_argument("--u", type=int)
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--query-points", type=int)
    parser.add_argument("--schedule", choices=["staged", "joint"])
    parser.add_argument("--epochs", type=int, help="epochs of every stage")
    parser.add_argument("--batch-size", type=int)
    parser.add_argument("--count", type=int, help="scenes to synthesize")
    parser.add_argument("--corner-tol", type=float)
    parser.add_argument("--angle-tol", type=float)
    parser.add_argument("--no-db", action="store_true", default=None)
    parser.add_argument("--no-height", dest="use_height_channel", action="store_false", default=None,
                        help="density channel only, for images and the tiny encoder")
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    args = vars(build_parser().parse_args(argv))
    command, config_path = args.pop("command"), args.pop("config")
    try:
        config = build_run_config(command, config_path, args)
        set_precision(config.precision)
        logger.info(f"Running {command} (seed {config.seed})")
        summary = HANDLERS[command](config)
    except ConfigError as e:
        return _fail(e, EXIT_CONFIG)
    except NonFiniteLossError as e:
        return _fail(e, EXIT_NON_FINITE, checkpoint=str(e.checkpoint_path) if e.checkpoint_path else None)
    except Exception as e:
        logger.exception(f"{command} failed")
        return _fail(e, EXIT_FAILURE)
    print(json.dumps({"status": "ok", "command": command, **summary}, indent=2, default=str))
    if command == "gradcheck" and not summary["passed"]:
        return EXIT_FAILURE
    return EXIT_OK


def _fail(error: Exception, code: int, **extra) -> int:
    logger.error(f"{type(error).__name__}: {error}")
    print(json.dumps({"status": "error", "error": str(error), "type": type(error).__name__, **extra}))
    return code


def main():
    load_dotenv()
    logging.basicConfig(level=os.getenv(LOG_LEVEL_ENV, "INFO").upper(),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    sys.exit(run())


if __name__ == "__main__":
    main()
