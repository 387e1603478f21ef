"""Command-line front end.

Exit codes: 0 success, 1 I/O failure, 2 invalid input (bad checkpoint,
unsupported architecture, bad map or data directory).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .export import export_model
from .extract import ExtractionJob, extract_alpha
from .formats import write_alpha


def _load_mapping(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ValueError(f"{path}: not valid JSON: {e}") from e
    if not isinstance(doc, dict) or not doc or \
            not all(isinstance(k, str) and isinstance(v, str)
                    for k, v in doc.items()):
        raise ValueError(f"{path}: layer map must be a non-empty JSON object "
                         f"of module name -> layer id strings")
    return doc


def cmd_extract_alpha(args) -> int:
    job = ExtractionJob(Path(args.ckpt), Path(args.data), args.n,
                        _load_mapping(args.map))
    result = extract_alpha(job)
    write_alpha(args.out, result.layers, result.meta)
    used = result.meta["sample_count"]
    skipped = result.meta["skipped"]
    print(f"wrote {args.out}: {len(result.layers)} conv layers, "
          f"{used} samples used, {skipped} skipped")
    return 0


def cmd_export_model(args) -> int:
    manifest = export_model(args.ckpt, args.out_dir)
    blob = manifest.with_suffix(".bin")
    print(f"wrote {manifest} and {blob.name}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gdws-extractor",
        description="Extract per-channel sensitivity weights from a torch "
                    "checkpoint and export its weights to the model "
                    "container format.")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("extract-alpha",
                       help="compute sensitivity weights from sample inputs")
    p.add_argument("--ckpt", required=True, help="checkpoint file")
    p.add_argument("--data", required=True,
                   help="directory of .gdwt feature maps")
    p.add_argument("--n", type=int, required=True,
                   help="number of samples to use")
    p.add_argument("--map", required=True,
                   help="JSON object: conv module name -> manifest layer id")
    p.add_argument("--out", required=True, help="output sensitivity file")
    p.set_defaults(fn=cmd_extract_alpha)

    p = sub.add_parser("export-model",
                       help="write the checkpoint as a model container")
    p.add_argument("--ckpt", required=True, help="checkpoint file")
    p.add_argument("--out-dir", required=True, help="output directory")
    p.set_defaults(fn=cmd_export_model)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
