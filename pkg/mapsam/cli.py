"""
CLI Module
Command-line entry point: gen-data, pretrain, finetune, eval, infer, ablate
"""

import argparse
import logging
import os
import sys
from typing import Dict, List, Optional

from .checkpoint import load_checkpoint
from .config import RunConfig, load_run_config
from .data import build_dataset, read_manifest, subsample, write_manifest
from .errors import ConfigError, DataError, MapSAMError, NumericError
from .evaluation import ReportBuilder
from .supervisor import ExperimentSupervisor, WorkflowManager

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

LOG_FORMAT = "[%(levelname)s] %(name)s: %(message)s"


def setup_logging(verbose: bool = False, quiet: bool = False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(level)


def exit_code_for(error: BaseException) -> int:
    """0 success, 2 config, 3 data (incl. checkpoints), 4 numeric, 1 anything else"""
    if isinstance(error, ConfigError):
        return EXIT_CONFIG
    if isinstance(error, DataError):
        return EXIT_DATA
    if isinstance(error, NumericError):
        return EXIT_NUMERIC
    return EXIT_FAILURE


def parse_overrides(pairs: Optional[List[str]]) -> Dict[str, str]:
    """`section.key=value` strings -> mapping"""
    overrides: Dict[str, str] = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep or "." not in key:
            raise ConfigError(f"--set expects section.key=value, got '{pair}'")
        overrides[key.strip()] = value.strip()
    return overrides


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'") from e


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI-style run configuration file")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override one config value")
    common.add_argument("--seed", type=int, help="run seed (falls back to MAPSAM_SEED)")
    common.add_argument("-v", "--verbose", action="store_true")
    common.add_argument("-q", "--quiet", action="store_true")

    model_flags = argparse.ArgumentParser(add_help=False)
    model_flags.add_argument("--rank", type=int, help="adapter rank")
    model_flags.add_argument("--taps", type=_int_list, help="encoder tap layers, e.g. 1,2,3,4")
    model_flags.add_argument("--no-dora", action="store_true", help="keep the encoder frozen without adapters")
    model_flags.add_argument("--no-semantic", action="store_true", help="point prompts without the target embedding")
    model_flags.add_argument("--no-masked-attention", action="store_true", help="unmasked token-to-image attention")

    parser = argparse.ArgumentParser(prog="mapsam", description="MapSAM desk-scale training and evaluation")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-data", parents=[common], help="generate a synthetic dataset or a few-shot subset")
    gen.add_argument("--root", default=None, help="dataset directory (default: data.root)")
    gen.add_argument("--class", dest="feature_class", choices=("railway", "vineyard"))
    gen.add_argument("--counts", type=_int_list, help="train,val,test tile counts")
    gen.add_argument("--size", type=int, help="tile side length (default: encoder.image_size)")
    gen.add_argument("--workers", type=int, default=None)
    gen.add_argument("--from-manifest", help="subsample this manifest instead of generating")
    gen.add_argument("--k-shot", type=int)
    gen.add_argument("--fraction", type=float)
    gen.add_argument("--manifest-name", help="output manifest file name")

    pre = sub.add_parser("pretrain", parents=[common], help="pretrain the encoder by masked-patch reconstruction")
    pre.add_argument("--manifest", action="append", default=[], help="dataset manifest whose train rasters join the corpus (repeatable)")
    pre.add_argument("--synthetic", type=int, help="generated railway + vineyard tiles (default data.pretrain_count without --manifest)")
    pre.add_argument("--out", required=True, help="checkpoint to write")
    pre.add_argument("--log", help="metric log (appended)")
    pre.add_argument("--init", help="starting checkpoint")
    pre.add_argument("--epochs", type=int)

    fine = sub.add_parser("finetune", parents=[common, model_flags], help="finetune adapters, prompt heads and decoder")
    fine.add_argument("--manifest", required=True)
    fine.add_argument("--init", help="pretrain checkpoint, or finetune checkpoint with --resume")
    fine.add_argument("--out", required=True)
    fine.add_argument("--log", help="metric log (appended)")
    fine.add_argument("--resume", action="store_true")
    fine.add_argument("--epochs", type=int)

    ev = sub.add_parser("eval", parents=[common], help="score a checkpoint on a split")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--manifest", required=True)
    ev.add_argument("--split", default="test", choices=("train", "val", "test"))
    ev.add_argument("--head", default="final", choices=("final", "coarse"))
    ev.add_argument("--report", help="write the table here as well as to stdout")
    ev.add_argument("--regime", default="full", help="training regime label for the table (full, 10-shot ...)")

    inf = sub.add_parser("infer", parents=[common], help="predict one raster")
    inf.add_argument("--checkpoint", required=True)
    inf.add_argument("--raster", required=True, help="PPM raster")
    inf.add_argument("--out-dir", required=True)
    inf.add_argument("--dump-intermediates", action="store_true")

    abl = sub.add_parser("ablate", parents=[common], help="component ablation and/or tap-layer sweep")
    abl.add_argument("--manifest", required=True)
    abl.add_argument("--seeds", type=int, default=3, help="number of seeds, starting at the run seed")
    abl.add_argument("--mode", choices=("components", "taps", "both"), default="components")
    abl.add_argument("--work-dir", help="where per-variant checkpoints and logs go")
    abl.add_argument("--output", help="write the table(s) here as well as to stdout")
    return parser


class MapSAMCli:
    """Command handlers; each returns an exit code"""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config = self._load_config()

    def _flag_overrides(self) -> Dict[str, object]:
        args = self.args
        overrides: Dict[str, object] = parse_overrides(args.set)
        epochs = getattr(args, "epochs", None)
        if epochs is not None:
            key = "training.pretrain_epochs" if args.command == "pretrain" else "training.epochs"
            overrides[key] = epochs
        if getattr(args, "rank", None) is not None:
            overrides["adaptation.rank"] = args.rank
        if getattr(args, "taps", None):
            overrides["encoder.feature_tap_layers"] = args.taps
        if getattr(args, "no_dora", False):
            overrides["ablation.dora"] = False
        if getattr(args, "no_semantic", False):
            overrides["ablation.semantic_prompt"] = False
        if getattr(args, "no_masked_attention", False):
            overrides["ablation.masked_attention"] = False
        if getattr(args, "workers", None) is not None:
            overrides["training.workers"] = args.workers
        return overrides

    def _load_config(self) -> RunConfig:
        return load_run_config(self.args.config, self._flag_overrides(), self.args.seed)

    def run(self) -> int:
        handlers = {
            "gen-data": self.cmd_gen_data,
            "pretrain": self.cmd_pretrain,
            "finetune": self.cmd_finetune,
            "eval": self.cmd_eval,
            "infer": self.cmd_infer,
            "ablate": self.cmd_ablate,
        }
        return handlers[self.args.command]()

    def cmd_gen_data(self) -> int:
        """Generate a dataset, or subsample the train split of an existing manifest"""
        args, config = self.args, self.config
        seed = config.training.seed
        if args.from_manifest:
            if args.k_shot is None and args.fraction is None:
                raise ConfigError("--from-manifest needs --k-shot or --fraction")
            dataset = subsample(read_manifest(args.from_manifest), seed, k_shot=args.k_shot, fraction=args.fraction)
            name = args.manifest_name or (
                f"manifest_{args.k_shot}shot.txt" if args.k_shot is not None else f"manifest_frac{args.fraction:g}.txt"
            )
            path = os.path.join(dataset.root, name)
            write_manifest(path, dataset.entries)
            logger.info("[GEN] %s: %d train tiles (%s) -> %s", args.from_manifest, len(dataset.train), dataset.regime, path)
            return EXIT_OK

        root = args.root or config.data.root
        counts = args.counts or [config.data.train_count, config.data.val_count, config.data.test_count]
        if len(counts) != 3:
            raise ConfigError(f"--counts needs train,val,test, got {counts}")
        dataset = build_dataset(
            args.feature_class or config.data.feature_class,
            counts,
            seed,
            root,
            size=args.size or config.encoder.image_size,
            workers=config.training.workers,
        )
        if args.k_shot is not None or args.fraction is not None:
            sub = subsample(dataset, seed, k_shot=args.k_shot, fraction=args.fraction)
            name = args.manifest_name or (
                f"manifest_{args.k_shot}shot.txt" if args.k_shot is not None else f"manifest_frac{args.fraction:g}.txt"
            )
            write_manifest(os.path.join(root, name), sub.entries)
            logger.info("[GEN] %s subset: %d train tiles", sub.regime, len(sub.train))
        return EXIT_OK

    def cmd_pretrain(self) -> int:
        manager = WorkflowManager(self.config)
        datasets = [manager.load_dataset(path) for path in self.args.manifest]
        synthetic = self.args.synthetic
        if synthetic is None:
            synthetic = 0 if datasets else self.config.data.pretrain_count
        if synthetic < 0:
            raise ConfigError(f"--synthetic must be non-negative, got {synthetic}")
        manager.run_pretrain(
            datasets, self.args.out, log_path=self.args.log, init_path=self.args.init, synthetic_count=synthetic
        )
        return EXIT_OK

    def cmd_finetune(self) -> int:
        manager = WorkflowManager(self.config)
        dataset = manager.load_dataset(self.args.manifest)
        manager.run_finetune(
            dataset, self.args.out, init_path=self.args.init, log_path=self.args.log, resume=self.args.resume
        )
        return EXIT_OK

    def cmd_eval(self) -> int:
        checkpoint = load_checkpoint(self.args.checkpoint)
        config = checkpoint.run_config()
        manager = WorkflowManager(self.config)
        dataset = read_manifest(self.args.manifest)
        report = manager.run_evaluation(checkpoint, dataset, self.args.split, head=self.args.head)
        header = ReportBuilder.format_report_header(
            "MapSAM evaluation",
            {"checkpoint": self.args.checkpoint, "manifest": self.args.manifest, "split": self.args.split},
        )
        text = header + ReportBuilder.build_evaluation_table(report, config.data.feature_class, self.args.regime)
        self._emit(text, self.args.report)
        return EXIT_OK

    def cmd_infer(self) -> int:
        checkpoint = load_checkpoint(self.args.checkpoint)
        manager = WorkflowManager(self.config)
        manager.run_inference(checkpoint, self.args.raster, self.args.out_dir, self.args.dump_intermediates)
        return EXIT_OK

    def cmd_ablate(self) -> int:
        manager = WorkflowManager(self.config)
        dataset = manager.load_dataset(self.args.manifest, splits=("train", "test"))
        base = self.config.training.seed
        seeds = [base + i for i in range(self.args.seeds)]
        supervisor = ExperimentSupervisor(self.config, dataset, self.args.work_dir)
        parts = [ReportBuilder.format_report_header(
            "MapSAM ablation", {"manifest": self.args.manifest, "seeds": ",".join(str(s) for s in seeds)}
        )]
        if self.args.mode in ("components", "both"):
            parts.append(supervisor.run_component_ablation(seeds).table)
        if self.args.mode in ("taps", "both"):
            parts.append(supervisor.run_tap_sweep(seeds).table)
        self._emit("\n".join(parts), self.args.output)
        return EXIT_OK

    @staticmethod
    def _emit(text: str, path: Optional[str]):
        sys.stdout.write(text)
        if path:
            try:
                with open(path, "w", encoding="utf-8") as f:
                    f.write(text)
            except OSError as e:
                raise DataError(f"cannot write {path}: {e}") from e


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one command and map errors to exit codes"""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose, args.quiet)
    try:
        return MapSAMCli(args).run()
    except MapSAMError as e:
        logger.error("%s: %s", type(e).__name__, e)
        logger.debug("Traceback", exc_info=True)
        return exit_code_for(e)
    except KeyboardInterrupt:
        logger.warning("[STOP] Interrupted by user")
        return EXIT_FAILURE
