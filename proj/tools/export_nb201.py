#!/usr/bin/env python3
"""Dump an NB201 benchmark archive to the JSONL table read by `prenas`.

Needs the `nas_201_api` package and its archive file (not bundled):

    python3 tools/export_nb201.py NAS-Bench-201-v1_1-096897.pth nb201.jsonl

Each output line is

    {"genotype":"3,0,2,1,1,4","dataset":"cifar10","val_acc":91.23,"test_acc":93.87}

with accuracies in percent. The genotype lists the op index of the six edges
in the order (0->1) (0->2) (1->2) (0->3) (1->3) (2->3), which is the order of
the API arch string `|a~0|+|b~0|c~1|+|d~0|e~1|f~2|`. Op indices are
none=0 skip_connect=1 nor_conv_1x1=2 nor_conv_3x3=3 avg_pool_3x3=4.

For cifar10 the validation accuracy comes from the `cifar10-valid` split and
the test accuracy from `cifar10` (train+valid), as in the usual search
protocol. Seeds are averaged by the API.
"""

import argparse
import json
import sys

OPS = {"none": 0, "skip_connect": 1, "nor_conv_1x1": 2, "nor_conv_3x3": 3, "avg_pool_3x3": 4}

# (val split, test split) per output dataset label
SPLITS = {
    "cifar10": ("cifar10-valid", "cifar10"),
    "cifar100": ("cifar100", "cifar100"),
    "ImageNet16-120": ("ImageNet16-120", "ImageNet16-120"),
}


def arch_to_genotype(arch: str) -> str:
    """'|nor_conv_3x3~0|+|none~0|nor_conv_1x1~1|+|...' -> '3,0,2,...'"""
    ops = []
    expected_src = [[0], [0, 1], [0, 1, 2]]
    nodes = arch.split("+")
    if len(nodes) != 3:
        raise ValueError(f"bad arch string {arch!r}")
    for node, srcs in zip(nodes, expected_src):
        edges = [e for e in node.split("|") if e]
        if [int(e.split("~")[1]) for e in edges] != srcs:
            raise ValueError(f"unexpected edge layout in {arch!r}")
        ops.extend(OPS[e.split("~")[0]] for e in edges)
    return ",".join(map(str, ops))


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("archive", help="NB201 .pth archive")
    ap.add_argument("out", help="output JSONL")
    ap.add_argument("--datasets", nargs="+", default=["cifar10"], choices=sorted(SPLITS))
    ap.add_argument("--hp", default="200", help="training schedule (12 or 200 epochs)")
    args = ap.parse_args()

    from nas_201_api import NASBench201API

    api = NASBench201API(args.archive, verbose=False)
    with open(args.out, "w", encoding="utf-8") as out:
        for idx in range(len(api)):
            genotype = arch_to_genotype(api.arch(idx))
            for label in args.datasets:
                val_split, test_split = SPLITS[label]
                val = api.get_more_info(idx, val_split, hp=args.hp, is_random=False)["valid-accuracy"]
                test = api.get_more_info(idx, test_split, hp=args.hp, is_random=False)["test-accuracy"]
                row = {"genotype": genotype, "dataset": label, "val_acc": round(val, 4), "test_acc": round(test, 4)}
                out.write(json.dumps(row, separators=(",", ":")) + "\n")
    print(f"wrote {len(api)} architectures x {len(args.datasets)} datasets to {args.out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
