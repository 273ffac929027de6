"""Command-line interface.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 structural or
model failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import estimator, formats, linalg, moments
from .flatten import Signature
from .otd import StructureViolation, otd, verify
from .tensor import ShapeError

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_STRUCTURE = 0, 1, 2, 3


class InputError(Exception):
    pass


def _emit(report: dict, as_json: bool, out=None):
    out = out or sys.stdout
    if as_json:
        out.write(json.dumps(report, indent=1) + "\n")
        return
    for key, val in report.items():
        if isinstance(val, float):
            val = formats.fmt_float(val)
        elif isinstance(val, bool):
            val = "true" if val else "false"
        elif isinstance(val, (list, tuple)):
            val = " ".join(formats.fmt_float(v) if isinstance(v, float) else str(v) for v in val)
        out.write(f"{key}: {val}\n")


def _positive(text):
    val = float(text)
    if not val > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return val


def _float_list(text):
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _signature_for(text, degree):
    sig = Signature.singletons(degree) if text is None else Signature.parse(text)
    if sig.degree != degree:
        raise InputError(f"signature {sig.format()} covers {sig.degree} modes, tensor has {degree}")
    return sig


def cmd_decompose(args) -> int:
    T = formats.read_tensor(args.input)
    sig = _signature_for(args.signature, T.degree)
    try:
        D = otd(T, sig, tol=args.tol, split_policy=args.split_policy)
    except StructureViolation as exc:
        best = otd(T, sig, tol=args.tol, strict=False)
        rep = verify(T, best, args.verify_tol)
        _emit({"status": "structure-violation", "message": str(exc),
               "residual": rep.residual, "max_gram_deviation": rep.max_gram_deviation},
              args.json)
        return EXIT_STRUCTURE
    text = formats.dumps_decomposition(D)
    if args.output:
        Path(args.output).write_text(text)
    # report on exactly what was written, so a later verify reproduces it
    rep = verify(T, formats.read_decomposition(_StringSource(text)), args.verify_tol)
    _emit({"status": "ok" if rep.ok else "verify-failed",
           "signature": sig.format(), "rank": D.rank, "weights": [float(w) for w in D.weights],
           "residual": rep.residual, "max_gram_deviation": rep.max_gram_deviation,
           "ok": rep.ok}, args.json)
    return EXIT_OK if rep.ok else EXIT_VERIFY


class _StringSource:
    def __init__(self, text):
        self._text = text

    def read(self):
        return self._text


def cmd_verify(args) -> int:
    T = formats.read_tensor(args.input)
    D = formats.read_decomposition(args.decomposition)
    if D.signature.degree != T.degree:
        raise InputError("decomposition signature does not match the tensor degree")
    rep = verify(T, D, args.tol)
    _emit({"residual": rep.residual, "max_gram_deviation": rep.max_gram_deviation, "ok": rep.ok},
          args.json)
    return EXIT_OK if rep.ok else EXIT_VERIFY


def _build_model(args) -> moments.MixtureModel:
    if args.model:
        model = formats.read_model(args.model)
    else:
        if args.dim is None or (args.rank is None and args.weights is None):
            raise InputError("give --model, or --dim with --rank and/or --weights")
        r = args.rank if args.rank is not None else len(args.weights)
        weights = args.weights if args.weights is not None else [1.0 / r] * r
        if len(weights) != r:
            raise InputError(f"{len(weights)} weights given for rank {r}")
        if args.random_means is None:
            raise InputError("--random-means SEED is required without --model")
        model = moments.MixtureModel.random(args.dim, weights, seed=args.random_means)
    try:
        model.validate(tol=1e-9)
    except ValueError as exc:
        raise InputError(f"invalid model: {exc}") from exc
    return model


def cmd_generate(args) -> int:
    model = _build_model(args)
    if args.count < 1:
        raise InputError("--count must be positive")
    try:
        S = moments.sample_mixture(model, args.count, seed=args.seed, law=args.law)
    except moments.SamplingError as exc:
        raise InputError(str(exc)) from exc
    formats.write_samples(S, args.output)
    truth = args.truth or f"{args.output}.truth"
    formats.write_model(model, truth)
    report = {"samples": args.count, "dim": model.n, "rank": model.r,
              "output": str(args.output), "truth": str(truth)}
    if args.check:
        for d in (2, 3):
            diff = moments.empirical_moment(S, d).array - moments.model_moment(model, d).array
            report[f"moment{d}_error"] = float(np.linalg.norm(diff))
    _emit(report, args.json)
    return EXIT_OK


def cmd_estimate(args) -> int:
    if args.moments:
        M2 = formats.read_tensor(args.moments[0])
        M3 = formats.read_tensor(args.moments[1])
    elif args.input:
        S = formats.read_samples(args.input)
        M2, M3 = moments.empirical_moment(S, 2), moments.empirical_moment(S, 3)
    else:
        raise InputError("give --input SAMPLES or --moments M2 M3")
    tol_res = None if args.tol_residual is None or args.tol_residual == float("inf") else args.tol_residual
    try:
        res = estimator.identify(M2, M3, tol_rank=args.tol_rank, averaging=args.averaging,
                                 tol_residual=tol_res)
    except (estimator.ModelViolation, estimator.DecompositionFailed) as exc:
        report = {"status": "model-violation" if isinstance(exc, estimator.ModelViolation)
                  else "decomposition-failed", "message": str(exc)}
        if isinstance(exc, estimator.DecompositionFailed):
            report["residual"] = float(exc.residual)
        _emit(report, args.json)
        return EXIT_STRUCTURE
    if args.output:
        formats.write_model(res.model, args.output)
    report = {"status": "ok", "rank": res.rank,
              "weights": [float(w) for w in res.model.weights],
              "weight_sum": res.weight_sum,
              "whitened_residual": res.whitened_residual,
              "m2_singular_values": [float(s) for s in res.m2_singular_values],
              "mean_norms": [float(x) for x in res.mean_norms],
              "min_alignment": float(res.alignment.min()) if res.alignment.size else 1.0}
    if args.truth:
        mean_err, weight_err = estimator.score(res.model, formats.read_model(args.truth))
        report["max_mean_error"] = mean_err
        report["max_weight_error"] = weight_err
    _emit(report, args.json)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="orthotensor", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit the report as JSON")

    d = sub.add_parser("decompose", parents=[common], help="orthogonal atomic decomposition")
    d.add_argument("--input", required=True, help="tensor file")
    d.add_argument("--output", help="decomposition file to write")
    d.add_argument("--signature", help="e.g. 1|2,3 (default: one block per mode)")
    d.add_argument("--tol", type=_positive, default=linalg.DEFAULT_TOL,
                   help="relative SVD rank threshold")
    d.add_argument("--verify-tol", type=_positive, default=1e-8)
    d.add_argument("--split-policy", choices=("first", "all"), default="first")
    d.set_defaults(func=cmd_decompose)

    v = sub.add_parser("verify", parents=[common], help="check a decomposition against a tensor")
    v.add_argument("--input", required=True, help="tensor file")
    v.add_argument("--decomposition", required=True, help="decomposition file")
    v.add_argument("--tol", type=_positive, default=1e-8)
    v.set_defaults(func=cmd_verify)

    g = sub.add_parser("generate", parents=[common], help="sample a rank-one mixture")
    g.add_argument("--output", required=True, help="sample file to write")
    g.add_argument("--truth", help="ground-truth model file (default: OUTPUT.truth)")
    g.add_argument("--model", help="model file to sample from")
    g.add_argument("--dim", type=int)
    g.add_argument("--rank", type=int)
    g.add_argument("--weights", type=_float_list, help="comma-separated weights")
    g.add_argument("--random-means", type=int, metavar="SEED")
    g.add_argument("--count", type=int, default=1000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--law", choices=moments.SCALAR_LAWS, default="one")
    g.add_argument("--check", action="store_true", help="report moment errors vs. the model")
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("estimate", parents=[common], help="estimate a mixture from moments")
    e.add_argument("--input", help="sample file")
    e.add_argument("--moments", nargs=2, metavar=("M2", "M3"), help="moment tensor files")
    e.add_argument("--output", help="model file to write")
    e.add_argument("--tol-rank", type=_positive, default=estimator.DEFAULT_TOL_RANK)
    e.add_argument("--tol-residual", type=_positive, default=estimator.DEFAULT_TOL_RESIDUAL)
    e.add_argument("--averaging", choices=estimator.AVERAGING_MODES, default="none")
    e.add_argument("--truth", help="ground-truth model file to score against")
    e.set_defaults(func=cmd_estimate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, formats.FormatError, ShapeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
