"""CLI: extract frozen encoder embeddings into a THEM file.

Exit codes: 0 success, 1 input error, 2 model or device failure.
"""

from __future__ import annotations

import argparse
import sys

from .errors import DeviceUnavailable, InputError, ModelLoadFailure
from .extractor import DEFAULT_MODEL, DEFAULT_WINDOW, ExtractorConfig, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="themis-extract",
        description="Extract frozen encoder embeddings (THEM format)")
    parser.add_argument("--series", required=True, help="series CSV path")
    parser.add_argument("--channel", type=int, default=0,
                        help="column index (default 0)")
    parser.add_argument("--model", default=DEFAULT_MODEL,
                        help="encoder checkpoint identifier or path")
    parser.add_argument("--out", required=True,
                        help="output THEM file path")
    parser.add_argument("--window", type=int, default=DEFAULT_WINDOW,
                        help=f"window length (default {DEFAULT_WINDOW})")
    parser.add_argument("--device", default="cpu",
                        help="torch device hint (default cpu)")
    parser.add_argument("--batch-size", dest="batch_size", type=int,
                        default=8, help="windows per forward pass")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = ExtractorConfig(model=args.model, window=args.window,
                             device=args.device, channel=args.channel,
                             batch_size=args.batch_size)
    try:
        manifest = extract(args.series, args.out, config)
    except InputError as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 1
    except (ModelLoadFailure, DeviceUnavailable) as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 2
    out = manifest["output"]
    print(f"wrote {args.out}: n={out['n']} d={out['d']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
