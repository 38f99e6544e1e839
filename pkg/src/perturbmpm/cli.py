"""Command-line entry point.

Subcommands: infer, sample, uncertainty, synth-experiment, biomarker,
oracle-check.  Exit codes: 0 success, 1 usage error, 2 data or format
error, 3 capacity exceeded.  Identical invocations on identical inputs
produce bitwise-identical outputs; every output file gets a sidecar
manifest recording the resolved configuration and seed.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from . import __version__
from .config import load_model, parse_config
from .errors import CapacityError, ConfigError, FormatError, ModelShapeError
from .evaluation import SyntheticExperimentConfig, run_biomarker_experiment, \
    run_synthetic_experiment
from .gumbel import GumbelSampler, SamplingConfig, empirical_marginals, \
    perturb_and_mpm
from .meanfield import mean_field_infer, mpm_decode
from .metrics import entropy_map, required_sample_size, total_variation
from .oracle import enumerate_gibbs, exact_marginals, \
    perturb_and_map_full_order_many
from .tensorio import entropy_heatmap_image, write_biomarker_csv, \
    write_error_curve_csv, write_manifest, write_marginals_csv, write_pgm, \
    write_tensor, write_uncertainty_csv

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_CAPACITY = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="pmpm",
                     description="Approximate CRF sampling by Gumbel "
                                 "perturbation and mean-field MPM decoding.")
    parser.add_argument("--version", action="version",
                        version=f"pmpm {__version__}")
    sub = parser.add_subparsers(dest="command")

    def model_cmd(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--model", required=True, help="model config file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--backend", choices=("exact", "lattice"),
                       default=None, help="override the config backend")
        return p

    p = model_cmd("infer", "mean-field marginals and MPM labeling")
    p.add_argument("--out", required=True, help="output marginals (.pmt)")
    p.add_argument("--csv", help="also export marginals as CSV")

    p = model_cmd("sample", "draw perturbed-MPM samples")
    p.add_argument("--samples", type=int, default=None,
                   help="override the config sample count")
    p.add_argument("--out", required=True,
                   help="output (T, N) u32 label tensor (.pmt)")

    p = model_cmd("uncertainty", "entropy uncertainty map from samples")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--threshold", type=float, default=None,
                   help="override the config uncertainty threshold")
    p.add_argument("--out", required=True, help="entropy tensor (.pmt)")
    p.add_argument("--heatmap", help="also export an 8-bit PGM heatmap")
    p.add_argument("--csv", help="also export per-voxel entropy as CSV")

    p = sub.add_parser("synth-experiment",
                       help="sampler-vs-oracle error curves on random grids")
    p.add_argument("--out", required=True, help="error-curve CSV path")
    p.add_argument("--grids", type=int, nargs="+", default=[6, 9, 12])
    p.add_argument("--samples", type=int, nargs="+",
                   default=[10, 100, 1000, 10000])
    p.add_argument("--inits", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log-scale", action="store_true",
                   help="compare log-probabilities instead of probabilities")

    p = sub.add_parser("biomarker",
                       help="uncertainty-corrected resection volumes")
    p.add_argument("--pre-model", required=True)
    p.add_argument("--post-model", required=True)
    p.add_argument("--truth-pre", required=True, help="label tensor (.pmt)")
    p.add_argument("--truth-post", required=True, help="label tensor (.pmt)")
    p.add_argument("--target-label", type=int, default=1)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--backend", choices=("exact", "lattice"), default=None)
    p.add_argument("--out", required=True, help="report CSV path")

    p = sub.add_parser("oracle-check",
                       help="compare samplers against the exact oracle")
    p.add_argument("--n", type=int, default=6, help="grid size")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _resolve(cfg, args):
    """Apply command-line overrides to a parsed RunConfig."""
    updates = {}
    for flag, field in (("seed", "seed"), ("backend", "backend"),
                        ("samples", "n_samples"), ("threshold", "threshold")):
        value = getattr(args, flag, None)
        if value is not None:
            updates[field] = value
    return dataclasses.replace(cfg, **updates) if updates else cfg


def _sampling_config(cfg) -> SamplingConfig:
    return SamplingConfig(cfg.n_samples, seed=cfg.seed,
                          inference=cfg.inference())


def _cmd_infer(args) -> int:
    cfg = _resolve(parse_config(args.model), args)
    model = load_model(cfg)
    q, n_iter = mean_field_infer(model, cfg.inference())
    write_tensor(args.out, q)
    write_manifest(args.out, "infer", cfg.echo(), __version__)
    if args.csv:
        write_marginals_csv(args.csv, q)
        write_manifest(args.csv, "infer", cfg.echo(), __version__)
    labels = mpm_decode(q)
    print(f"converged in {n_iter} iterations; "
          f"label counts {np.bincount(labels, minlength=model.n_labels).tolist()}")
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_sample(args) -> int:
    cfg = _resolve(parse_config(args.model), args)
    model = load_model(cfg)
    samples = perturb_and_mpm(model, _sampling_config(cfg))
    write_tensor(args.out, samples.labels.astype(np.uint32))
    write_manifest(args.out, "sample", cfg.echo(), __version__)
    print(f"wrote {len(samples)} samples of {samples.n_voxels} voxels "
          f"to {args.out}")
    if cfg.epsilon is not None:
        need = required_sample_size(cfg.epsilon, cfg.delta, model.n_labels)
        print(f"required_sample_size(eps={cfg.epsilon}, delta={cfg.delta}, "
              f"m={model.n_labels}) = {need}")
    return EXIT_OK


def _cmd_uncertainty(args) -> int:
    cfg = _resolve(parse_config(args.model), args)
    model = load_model(cfg)
    samples = perturb_and_mpm(model, _sampling_config(cfg))
    marginals = empirical_marginals(samples)
    entropy = entropy_map(marginals)
    write_tensor(args.out, entropy)
    write_manifest(args.out, "uncertainty", cfg.echo(), __version__)
    if args.heatmap:
        if len(cfg.dims) != 2:
            raise ConfigError("PGM heatmaps require a 2-d grid")
        write_pgm(args.heatmap,
                  entropy_heatmap_image(entropy, model.n_labels, cfg.dims))
        write_manifest(args.heatmap, "uncertainty", cfg.echo(), __version__)
    if args.csv:
        write_uncertainty_csv(args.csv, entropy)
        write_manifest(args.csv, "uncertainty", cfg.echo(), __version__)
    flagged = int(np.sum(entropy > cfg.threshold))
    print(f"{flagged} of {model.n_voxels} voxels above "
          f"threshold {cfg.threshold} bits")
    return EXIT_OK


def _cmd_synth_experiment(args) -> int:
    cfg = SyntheticExperimentConfig(
        grid_sizes=tuple(args.grids), sample_counts=tuple(args.samples),
        n_inits=args.inits, base_seed=args.seed, log_scale=args.log_scale)
    curve = run_synthetic_experiment(cfg)
    write_error_curve_csv(args.out, curve)
    echo = "\n".join(f"{k} = {v!r}" for k, v in
                     dataclasses.asdict(cfg).items())
    write_manifest(args.out, "synth-experiment", echo, __version__)
    for row in curve.rows:
        print(f"N={row.n_voxels:4d} T={row.n_samples:7d} "
              f"sampled={row.sampled_error:.6f} "
              f"mean_field={row.mean_field_error:.6f}")
    return EXIT_OK


def _cmd_biomarker(args) -> int:
    from .tensorio import read_tensor

    pre_cfg = _resolve(parse_config(args.pre_model), args)
    post_cfg = _resolve(parse_config(args.post_model), args)
    pre_model = load_model(pre_cfg)
    post_model = load_model(post_cfg)
    truth_pre = read_tensor(args.truth_pre)
    truth_post = read_tensor(args.truth_post)
    report = run_biomarker_experiment(
        pre_model, post_model, truth_pre.ravel(), truth_post.ravel(),
        _sampling_config(pre_cfg), args.target_label,
        threshold=pre_cfg.threshold)
    write_biomarker_csv(args.out, report)
    write_manifest(args.out, "biomarker", pre_cfg.echo(), __version__)
    print(f"EOR {report.eor:.4f} (corrected {report.eor_corrected:.4f}, "
          f"truth {report.truth_eor:.4f})")
    print(f"residual volume error {report.rtv_error:.2f} "
          f"(corrected {report.rtv_error_corrected:.2f})")
    return EXIT_OK


def _cmd_oracle_check(args) -> int:
    from .evaluation import random_grid_model

    model = random_grid_model(args.n, args.seed)
    exact = exact_marginals(enumerate_gibbs(model))
    run = perturb_and_mpm(model, SamplingConfig(args.samples, seed=args.seed))
    tv_mpm = total_variation(empirical_marginals(run), exact)
    full = perturb_and_map_full_order_many(
        model, GumbelSampler(args.seed), args.samples)
    from .gumbel import SampleSet
    tv_full = total_variation(
        empirical_marginals(SampleSet(full, model.n_labels)), exact)
    print(f"N={args.n} T={args.samples}")
    print(f"TV(full-order perturbation, exact) = {tv_full:.6f}")
    print(f"TV(perturbed MPM, exact)           = {tv_mpm:.6f}")
    return EXIT_OK


_COMMANDS = {
    "infer": _cmd_infer,
    "sample": _cmd_sample,
    "uncertainty": _cmd_uncertainty,
    "synth-experiment": _cmd_synth_experiment,
    "biomarker": _cmd_biomarker,
    "oracle-check": _cmd_oracle_check,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except CapacityError as exc:
        print(f"pmpm: capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ConfigError, FormatError, ModelShapeError, ValueError,
            OSError) as exc:
        print(f"pmpm: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
