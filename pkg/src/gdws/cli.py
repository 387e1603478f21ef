"""Command-line front end.

Exit codes: 0 success, 1 file I/O failure, 2 validation failure,
3 nothing to rewrite (no convolution layer with K >= 2). Diagnostics go to
stderr; tables and JSON reports go to stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .alpha import check_alpha_cover, compute_alpha_fd, load_alpha, save_alpha
from .container import ContainerError, load_feature_map, load_model, save_model
from .network import (build_lego_network, build_mego_gamma,
                      build_mego_uniform, format_report, report,
                      verify_network)
from .types import ShapeError


class NothingToRewrite(RuntimeError):
    pass


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gdws",
        description="Rewrite standard 2D convolutions into generalized "
                    "depthwise-separable form.")
    sub = p.add_subparsers(dest="cmd", required=True)

    ap = sub.add_parser(
        "approx",
        help="minimum-complexity rewrite under a squared-error budget")
    ap.add_argument("--model", required=True, help="standard-variant manifest")
    ap.add_argument("--alpha", required=True, help="per-channel error weights")
    ap.add_argument("--beta", required=True, type=float,
                    help="budget on the weighted SQUARED weight error; "
                         "0 requests the exact rewrite")
    ap.add_argument("--out", required=True, help="output manifest path")
    ap.add_argument("--threads", type=int, default=None,
                    help="worker threads for per-layer work "
                         "(default: available parallelism)")

    mp = sub.add_parser(
        "mego",
        help="minimum-error rewrite under a filter budget, or a uniform "
             "per-layer MAC reduction")
    mp.add_argument("--model", required=True)
    mp.add_argument("--alpha", default=None,
                    help="optional error weights (unweighted if absent)")
    grp = mp.add_mutually_exclusive_group(required=True)
    grp.add_argument("--gamma-per-layer", type=int, default=None,
                     help="filter budget applied to every conv layer")
    grp.add_argument("--uniform", type=float, default=None,
                     help="percent MAC reduction applied to every conv layer")
    mp.add_argument("--out", required=True)
    mp.add_argument("--threads", type=int, default=None)

    rp = sub.add_parser("report", help="per-layer MAC/parameter/rank table")
    rp.add_argument("--model", required=True)

    vp = sub.add_parser("verify", help="compare a rewrite against its original")
    vp.add_argument("--orig", required=True)
    vp.add_argument("--gdws", required=True)
    vp.add_argument("--probes", type=int, default=20)
    vp.add_argument("--seed", type=int, default=0,
                    help="probe generation seed (the rewrite itself is "
                         "deterministic and seed-free)")
    vp.add_argument("--alpha", default=None)

    fp = sub.add_parser("alpha-fd",
                        help="finite-difference sensitivity weights")
    fp.add_argument("--model", required=True)
    fp.add_argument("--inputs", required=True,
                    help="directory of .gdwt feature-map files")
    fp.add_argument("--out", required=True)
    fp.add_argument("--step", type=float, default=1e-3)
    return p


def _require_rewritable(net) -> None:
    if not any(l.spec.kernel > 1 for l in net.conv_layers()):
        raise NothingToRewrite(
            "model has no convolution layer with K >= 2 to rewrite")


def _workers(n: int | None) -> int:
    return n if n and n > 0 else (os.cpu_count() or 1)


def _cmd_approx(args) -> int:
    net = load_model(args.model)
    _require_rewritable(net)
    if args.beta < 0:
        raise ValueError("--beta must be non-negative")
    af = load_alpha(args.alpha)
    check_alpha_cover(af, net)
    out = build_lego_network(net, af.layers, args.beta,
                             workers=_workers(args.threads))
    save_model(out, args.out)
    rows, macs = report(out)
    print(format_report(rows, macs))
    return 0


def _cmd_mego(args) -> int:
    net = load_model(args.model)
    _require_rewritable(net)
    alphas = None
    if args.alpha is not None:
        af = load_alpha(args.alpha)
        check_alpha_cover(af, net)
        alphas = af.layers
    if args.uniform is not None:
        out = build_mego_uniform(net, args.uniform,
                                 workers=_workers(args.threads))
    else:
        out = build_mego_gamma(net, alphas, args.gamma_per_layer,
                               workers=_workers(args.threads))
    save_model(out, args.out)
    rows, macs = report(out)
    print(format_report(rows, macs))
    return 0


def _cmd_report(args) -> int:
    net = load_model(args.model)
    rows, macs = report(net)
    print(format_report(rows, macs))
    return 0


def _cmd_verify(args) -> int:
    orig = load_model(args.orig)
    gnet = load_model(args.gdws)
    if args.probes < 0:
        raise ValueError("--probes must be non-negative")
    rng = np.random.default_rng(args.seed)
    probes = [rng.standard_normal(orig.input_shape)
              for _ in range(args.probes)]
    alphas = None
    if args.alpha is not None:
        af = load_alpha(args.alpha)
        check_alpha_cover(af, orig)
        alphas = af.layers
    rep = verify_network(orig, gnet, probes, alphas)
    print(json.dumps(rep.to_dict(), indent=1, sort_keys=True))
    return 0


def _cmd_alpha_fd(args) -> int:
    net = load_model(args.model)
    _require_rewritable(net)
    if args.step <= 0:
        raise ValueError("--step must be positive")
    indir = Path(args.inputs)
    if not indir.is_dir():
        raise FileNotFoundError(f"{indir}: not a directory")
    files = sorted(indir.glob("*.gdwt"))
    if not files:
        raise ValueError(f"{indir}: no .gdwt feature-map files")
    samples = [load_feature_map(f) for f in files]
    af = compute_alpha_fd(net, samples, h=args.step)
    save_alpha(af, args.out)
    print(f"wrote {len(af.layers)} layer vector(s) from {len(samples)} "
          f"sample(s) to {args.out}", file=sys.stderr)
    return 0


_DISPATCH = {
    "approx": _cmd_approx,
    "mego": _cmd_mego,
    "report": _cmd_report,
    "verify": _cmd_verify,
    "alpha-fd": _cmd_alpha_fd,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _DISPATCH[args.cmd](args)
    except NothingToRewrite as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (ContainerError, ShapeError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
