"""Command-line interface.

Subcommands: ``fit`` (estimate a density from CSV data), ``eval`` (evaluate a
fitted model at points), ``synth`` (Gaussian-copula synthetic data),
``oracle`` (closed-form tables for block Gaussians) and ``diagnose`` (risk
decomposition on synthetic truth).  Exit codes: 0 success, 2 parameter error,
3 data error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .bounds import (
    BoundParams,
    bc_envelope,
    estimate_bounding_constant,
    final_bound,
    selection_bound,
    uc_threshold,
)
from .diagnostics import risk_decomposition_report
from .errors import DataError, ParameterError, StructureError
from .gaussian import (
    GaussianBlockSpec,
    GaussianCopulaDensity,
    bias_upper_bound,
    block_eigenvalues,
    det_block_perturbed,
    det_equicorrelated,
    kl_almost_independent,
    kl_equicorrelated_structure,
    optimal_structure,
    sample_gaussian_copula_block,
)
from .pipeline import (
    IsdeConfig,
    evaluate_joint,
    rescale_to_unit_cube,
    result_from_dict,
    result_to_dict,
    run,
)

EXIT_OK = 0
EXIT_PARAMETER = 2
EXIT_DATA = 3


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage and 0 on --help
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER
    except (DataError, StructureError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isde", description=__doc__)
    parser.add_argument("--version", action="version", version=f"isde {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit a factorised density to CSV data")
    fit.add_argument("--input", required=True, help="CSV file, one row per observation")
    fit.add_argument("--k", required=True, type=int, help="maximum block size")
    fit.add_argument("--split", type=float, default=0.5, help="fraction used for fitting")
    fit.add_argument("--beta", type=float, default=2.0, help="assumed smoothness in (0, 2]")
    fit.add_argument("--kernel", default="epanechnikov", help="epanechnikov | triangular | box")
    fit.add_argument("--bandwidth-scale", type=float, default=1.0)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--no-shuffle", action="store_true", help="split without shuffling")
    fit.add_argument("--rescale", action="store_true", help="min-max map columns onto [0, 1]")
    fit.add_argument("--output", required=True, help="where to write the result JSON")
    fit.set_defaults(handler=_cmd_fit)

    ev = sub.add_parser("eval", help="evaluate a fitted model at points")
    ev.add_argument("--model", required=True, help="result JSON produced by fit")
    ev.add_argument("--points", required=True, help="CSV of evaluation points")
    ev.add_argument("--output", help="write JSON here instead of stdout")
    ev.set_defaults(handler=_cmd_eval)

    synth = sub.add_parser("synth", help="sample Gaussian-copula data with known structure")
    synth.add_argument("--d", required=True, type=int)
    synth.add_argument("--kstar", required=True, type=int, help="true block size (divides d)")
    synth.add_argument("--sigma", required=True, type=float, help="within-block correlation")
    synth.add_argument("--epsilon", type=float, default=0.0, help="cross-block correlation")
    synth.add_argument("--n", required=True, type=int)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--output", help="write CSV here instead of stdout")
    synth.set_defaults(handler=_cmd_synth)

    oracle = sub.add_parser("oracle", help="closed-form tables for block Gaussians")
    oracle.add_argument("--d", required=True, type=int)
    oracle.add_argument("--kstar", required=True, type=int)
    oracle.add_argument("--sigma", required=True, type=float)
    oracle.add_argument("--epsilon", type=float, default=0.0)
    oracle.add_argument("--format", choices=("json", "csv"), default="json")
    oracle.add_argument("--output", help="write here instead of stdout")
    oracle.set_defaults(handler=_cmd_oracle)

    diag = sub.add_parser("diagnose", help="risk decomposition on synthetic truth")
    diag.add_argument("--d", required=True, type=int)
    diag.add_argument("--kstar", required=True, type=int)
    diag.add_argument("--sigma", required=True, type=float)
    diag.add_argument("--epsilon", type=float, default=0.0)
    diag.add_argument("--k", required=True, type=int, help="block-size cap for the fit")
    diag.add_argument("--n-data", type=int, default=2000)
    diag.add_argument("--n-mc", type=int, default=20000)
    diag.add_argument("--seed", type=int, default=0)
    diag.add_argument("--A", type=float, default=1.0, help="assumed envelope constant")
    diag.add_argument("--delta-n", type=float, default=0.05)
    diag.add_argument("--output", help="write JSON here instead of stdout")
    diag.set_defaults(handler=_cmd_diagnose)

    return parser


def _cmd_fit(args) -> int:
    data = _read_csv(args.input)
    rescale_map = None
    if args.rescale:
        data, rescale_map = rescale_to_unit_cube(data)
    config = IsdeConfig(
        k=args.k,
        split_fraction=args.split,
        beta=args.beta,
        kernel=args.kernel,
        bandwidth_scale=args.bandwidth_scale,
        seed=args.seed,
        shuffle=not args.no_shuffle,
    )
    result = run(data, config)
    _write_json(result_to_dict(result, rescale=rescale_map), args.output)
    print(f"partition={result.partition.to_index_lists()} score={result.score!r}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    with open(args.model) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise StructureError(f"model file is not valid JSON: {exc}") from None
    result = result_from_dict(payload)
    points = _read_csv(args.points)
    values = evaluate_joint(result, points)
    _write_json({"density": np.asarray(values).tolist()}, args.output)
    return EXIT_OK


def _cmd_synth(args) -> int:
    spec = GaussianBlockSpec(d=args.d, k_star=args.kstar, sigma=args.sigma, epsilon=args.epsilon)
    sample = sample_gaussian_copula_block(spec, args.n, args.seed)
    header = ",".join(f"x{j + 1}" for j in range(args.d))
    lines = [header]
    lines.extend(",".join(repr(float(v)) for v in row) for row in sample)
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_oracle(args) -> int:
    spec = GaussianBlockSpec(d=args.d, k_star=args.kstar, sigma=args.sigma, epsilon=args.epsilon)
    exact, leading = kl_almost_independent(spec)
    payload = {
        "spec": {"d": spec.d, "k_star": spec.k_star, "sigma": spec.sigma, "epsilon": spec.epsilon},
        "determinant_block": det_equicorrelated(spec.k_star, spec.sigma),
        "determinant": det_block_perturbed(spec),
        "eigenvalues": [[v, m] for v, m in block_eigenvalues(spec)],
        "kl_to_unperturbed": {"exact": exact, "leading": leading},
        "optimal_structures": {},
        "bias_upper_bounds": {},
    }
    if 0.0 < spec.sigma < 1.0:
        for k in range(1, spec.d + 1):
            structure = optimal_structure(spec.d, k, spec.sigma)
            payload["optimal_structures"][str(k)] = {
                "sizes": list(structure.sizes),
                "kl": kl_equicorrelated_structure(spec.d, spec.sigma, structure),
            }
        for k in range(1, spec.k_star):
            payload["bias_upper_bounds"][str(k)] = bias_upper_bound(spec, k)
    if args.format == "json":
        _write_json(payload, args.output)
    else:
        rows = ["quantity,key,value"]
        rows.append(f"determinant_block,,{payload['determinant_block']!r}")
        rows.append(f"determinant,,{payload['determinant']!r}")
        for v, m in payload["eigenvalues"]:
            rows.append(f"eigenvalue,mult={m},{v!r}")
        rows.append(f"kl_to_unperturbed,exact,{exact!r}")
        rows.append(f"kl_to_unperturbed,leading,{leading!r}")
        for k, entry in payload["optimal_structures"].items():
            sizes = "+".join(map(str, entry["sizes"]))
            rows.append(f"optimal_structure,k={k},{sizes}")
            rows.append(f"optimal_structure_kl,k={k},{entry['kl']!r}")
        for k, value in payload["bias_upper_bounds"].items():
            rows.append(f"bias_upper_bound,k={k},{value!r}")
        text = "\n".join(rows) + "\n"
        if args.output:
            with open(args.output, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    return EXIT_OK


def _cmd_diagnose(args) -> int:
    spec = GaussianBlockSpec(d=args.d, k_star=args.kstar, sigma=args.sigma, epsilon=args.epsilon)
    truth = GaussianCopulaDensity.from_spec(spec)
    config = IsdeConfig(k=args.k, seed=args.seed)
    report = risk_decomposition_report(truth, config, n_mc=args.n_mc, n_data=args.n_data)

    n_holdout = args.n_data - int(config.split_fraction * args.n_data)
    m_fit = args.n_data - n_holdout
    params = BoundParams(
        d=args.d, k=args.k, n=n_holdout, m=m_fit, A=args.A, delta_n=args.delta_n
    )
    # the envelope constant A is assumed, not verified; estimated_A is a
    # plug-in heuristic from the fitted marginals, reported for comparison
    data = truth.sample(args.n_data, np.random.default_rng(args.seed))
    fitted = run(data, config)
    theory = {
        "A": args.A,
        "estimated_A_heuristic": estimate_bounding_constant(fitted.models),
        "delta_n": args.delta_n,
        "selection_bound": selection_bound(params),
        "final_bound_c1": final_bound(params, report.best_structure.block_count),
        "uc_thresholds": {str(s): uc_threshold(args.A, s) for s in range(1, args.k + 1)},
        "bc_envelopes": {
            str(s): list(bc_envelope(args.A, s)) for s in range(1, args.k + 1)
        },
    }
    payload = report.to_dict()
    payload["theory"] = theory
    _write_json(payload, args.output)
    return EXIT_OK


def _read_csv(path: str) -> np.ndarray:
    """CSV matrix reader; the first line may be a header."""
    with open(path) as fh:
        first = fh.readline()
        if not first.strip():
            raise DataError(f"{path} is empty")
        has_header = False
        for cell in first.strip().split(","):
            try:
                float(cell)
            except ValueError:
                has_header = True
                break
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1 if has_header else 0, ndmin=2)
    except ValueError as exc:
        raise DataError(f"could not parse {path} as a numeric CSV: {exc}") from None
    return data


def _write_json(payload, path: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    sys.exit(main())
