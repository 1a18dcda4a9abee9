"""Command-line surface.

Mirrors the probe CLI conventions: every subcommand emits a JSON
document to stdout or --out, errors print to stderr and exit 2.
"""

import argparse
import json
import sys
from pathlib import Path

from textprobe.errors import ProbeError

from .encoders import get_encoder
from .extract import extract_images, extract_text, read_lines
from .sampling import sample_task


def _emit(payload, out_path):
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _cmd_extract_images(args):
    encoder = get_encoder(args.encoder, dim=args.dim)
    result = extract_images(
        args.dataset_dir,
        encoder,
        args.features_out,
        split=args.split,
        batch_size=args.batch_size,
    )
    _emit(
        {
            "features": str(result.features_path),
            "labels": str(result.labels_path),
            "classes_file": str(result.classes_path),
            "classes": result.class_names,
            "count": result.count,
            "dim": result.dim,
            "encoder": encoder.name,
            "skipped": result.skipped,
            "skipped_log": None if result.skipped_path is None else str(result.skipped_path),
        },
        args.out,
    )
    return 0


def _cmd_extract_text(args):
    encoder = get_encoder(args.encoder, dim=args.dim)
    class_names = read_lines(args.classes)
    templates = read_lines(args.templates)
    path = extract_text(class_names, templates, encoder, args.text_out)
    _emit(
        {
            "text": str(path),
            "classes": class_names,
            "templates": len(templates),
            "dim": encoder.dim,
            "encoder": encoder.name,
        },
        args.out,
    )
    return 0


def _cmd_sample_task(args):
    result = sample_task(
        args.features,
        args.labels,
        args.text,
        args.shots,
        args.seed,
        args.out_dir,
        test_features=args.test_features,
        test_labels=args.test_labels,
    )
    _emit(
        {
            "manifest": str(result.manifest_path),
            "shots": result.shots,
            "seed": result.seed,
            "support_rows": result.support_rows.tolist(),
            "val_rows": result.val_rows.tolist(),
        },
        args.out,
    )
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="embed-extractor",
        description="Extract image/text embeddings and sample few-shot tasks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract-images", help="encode a dataset into embedding files")
    p.add_argument("--dataset-dir", required=True)
    p.add_argument("--split", default=None)
    p.add_argument("--encoder", default="stub")
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--features-out", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_extract_images)

    p = sub.add_parser("extract-text", help="encode class prompts into a text bank")
    p.add_argument("--classes", required=True, help="file with one class name per line")
    p.add_argument("--templates", required=True, help="file with one {} template per line")
    p.add_argument("--encoder", default="stub")
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--text-out", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_extract_text)

    p = sub.add_parser("sample-task", help="sample a balanced few-shot task manifest")
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--text", required=True)
    p.add_argument("--shots", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--test-features", default=None)
    p.add_argument("--test-labels", default=None)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_sample_task)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ProbeError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
