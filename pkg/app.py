"""
命令行入口

子命令:
    ingest    校验数据集并输出摘要
    generate  生成合成数据集
    metrics   计算指标并写出 CSV 与运行清单
    regress   拟合同质性与持续性回归
    figures   生成图表数据

出错时向 stderr 输出一行 JSON {"error": code, "message": ...} 并以状态码 1 退出；
参数错误以状态码 2 退出。
"""
import argparse
from dataclasses import replace
import json
from pathlib import Path
import sys
from typing import List, Optional

from utils.core.config import Config
from utils.core.config import PIPELINE_BACKENDS
from utils.core.errors import CohortNetError
from utils.core.logging import setup_logger
from utils.graph.dataset import load_bundle
from utils.graph.snapshot import Scope
from utils.graph.timegrid import UNITS
from utils.inference.ols import COV_TYPES
from utils.metrics.homophily import B_RULES
from utils.pipeline.figures import run_figures
from utils.pipeline.regress import run_regressions
from utils.pipeline.runner import METRIC_NAMES
from utils.pipeline.runner import MetricOptions
from utils.pipeline.runner import run_metrics
from utils.synth.generator import generate
from utils.synth.scenario import load_scenario
from utils.synth.scenario import preset_scenario
from utils.synth.scenario import scenario_presets
from utils.synth.writer import write_dataset

logger = setup_logger(logger_name="CohortNet", log_level="INFO")


def _add_data_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data-dir", help="数据目录（edges.csv, attributes.csv, cohorts.csv, schools.csv, closeness.csv）")
    parser.add_argument("--edges", help="边文件，优先于 --data-dir")
    parser.add_argument("--attributes", help="属性文件")
    parser.add_argument("--cohorts", help="班级开学日文件")
    parser.add_argument("--schools", help="学校协变量文件")
    parser.add_argument("--closeness", help="亲密度排名文件（可选）")


def _load(args: argparse.Namespace):
    return load_bundle(args.data_dir, edges=args.edges, attributes=args.attributes, cohorts=args.cohorts, schools=args.schools, closeness=args.closeness)


def _apply_overrides(args: argparse.Namespace) -> None:
    """命令行参数覆盖配置中的对应项"""
    config = Config()
    overrides = {
        "seed": "root_seed",
        "months_before": "grid_months_before",
        "months_after": "grid_months_after",
        "top_k": "cff_top_k",
        "path_threshold": "path_exact_threshold",
        "path_samples": "path_sample_sources",
        "min_incidences": "homophily_min_incidences",
    }
    for argument, attribute in overrides.items():
        value = getattr(args, argument, None)
        if value is not None:
            setattr(config, attribute, value)


def _print_json(data) -> None:
    print(json.dumps(data, ensure_ascii=False, indent=2, sort_keys=True, default=str))


def cmd_ingest(args: argparse.Namespace) -> int:
    bundle = _load(args)
    _print_json({**bundle.summary(), "paths": bundle.paths})
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    if args.config:
        config = load_scenario(args.config)
        if args.seed is not None:
            config = replace(config, seed=args.seed)
    else:
        config = preset_scenario(args.preset, seed=7 if args.seed is None else args.seed, n_schools=args.n_schools, entry_years=args.entry_years,
                                 cohort_size=args.cohort_size)
    bundle = generate(config, workers=args.workers)
    paths = write_dataset(bundle, args.out)
    with (Path(args.out) / "scenario.json").open("w", encoding="utf-8") as f:
        json.dump(config.to_dict(), f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")
    _print_json({**bundle.summary(), "paths": paths})
    return 0


def cmd_metrics(args: argparse.Namespace) -> int:
    bundle = _load(args)
    options = MetricOptions(
        unit=args.unit,
        scope=Scope(args.scope),
        top_k=args.top_k,
        path_threshold=args.path_threshold,
        path_samples=args.path_samples,
        b_rule=args.b_rule,
        directed=not args.undirected,
        class_size_filter=args.class_size_filter,
        exclude_recent_years=args.exclude_recent_years,
    )
    manifest = run_metrics(bundle, args.metrics, args.out or str(Config().output_dir), options, workers=args.workers, progress=args.progress, backend=args.backend)
    _print_json({"output_dir": manifest.output_dir, "metrics": manifest.metrics, "cohorts": len(manifest.cohorts)})
    return 0


def cmd_regress(args: argparse.Namespace) -> int:
    bundle = _load(args)
    summary = run_regressions(bundle.schools, args.out or str(Config().output_dir), cov_type=args.cov_type, min_incidences=args.min_incidences)
    _print_json(summary)
    return 0


def cmd_figures(args: argparse.Namespace) -> int:
    names = [n.strip() for n in args.names.split(",") if n.strip()] if args.names else None
    written = run_figures(args.out or str(Config().output_dir), names)
    _print_json(written)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cohortnet", description="大学班级社交网络的时间切片分析")
    sub = parser.add_subparsers(dest="command", required=True)

    ingest = sub.add_parser("ingest", help="校验数据集并输出摘要")
    _add_data_arguments(ingest)
    ingest.set_defaults(handler=cmd_ingest)

    gen = sub.add_parser("generate", help="生成合成数据集")
    source = gen.add_mutually_exclusive_group(required=True)
    source.add_argument("--preset", choices=sorted(scenario_presets()))
    source.add_argument("--config", help="场景 JSON 文件")
    gen.add_argument("--out", required=True)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--n-schools", type=int, default=1)
    gen.add_argument("--cohort-size", type=int, default=300)
    gen.add_argument("--entry-years", type=int, nargs="+", default=[2011, 2012])
    gen.add_argument("--workers", type=int)
    gen.set_defaults(handler=cmd_generate)

    metrics = sub.add_parser("metrics", help="计算指标")
    _add_data_arguments(metrics)
    metrics.add_argument("--out")
    metrics.add_argument("--metrics", default=",".join(METRIC_NAMES), help=f"逗号分隔，可选: {','.join(METRIC_NAMES)}")
    metrics.add_argument("--unit", choices=UNITS, default="month")
    metrics.add_argument("--scope", choices=[s.value for s in Scope], default=Scope.COHORT.value)
    metrics.add_argument("--workers", type=int)
    metrics.add_argument("--backend", choices=PIPELINE_BACKENDS, help="按班级并行的方式，默认配置 PIPELINE_BACKEND（process）")
    metrics.add_argument("--seed", type=int)
    metrics.add_argument("--top-k", type=int)
    metrics.add_argument("--path-threshold", type=int)
    metrics.add_argument("--path-samples", type=int)
    metrics.add_argument("--months-before", type=int)
    metrics.add_argument("--months-after", type=int)
    metrics.add_argument("--b-rule", choices=B_RULES, default="endpoint", help="b_i 的计算方式（默认 endpoint）：endpoint 为合格边端点中特征 i 的占比（Σb=1），either 为任一端特征为 i 的边占比")
    metrics.add_argument("--undirected", action="store_true", help="CFF 按无向关系评估")
    metrics.add_argument("--class-size-filter", action="store_true", help="只保留人数与报告班级规模相符的班级")
    metrics.add_argument("--exclude-recent-years", type=int, default=0)
    metrics.add_argument("--progress", action="store_true")
    metrics.set_defaults(handler=cmd_metrics)

    regress = sub.add_parser("regress", help="拟合回归")
    _add_data_arguments(regress)
    regress.add_argument("--out")
    regress.add_argument("--cov-type", choices=COV_TYPES, default="CR1")
    regress.add_argument("--min-incidences", type=int)
    regress.set_defaults(handler=cmd_regress)

    figures = sub.add_parser("figures", help="生成图表数据")
    figures.add_argument("--out")
    figures.add_argument("--names", help="逗号分隔的图名，默认全部")
    figures.set_defaults(handler=cmd_figures)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _apply_overrides(args)
    try:
        return args.handler(args)
    except CohortNetError as e:
        logger.error(f"{args.command} 失败: {e}")
        print(json.dumps({"error": e.code, "message": str(e)}, ensure_ascii=False), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
