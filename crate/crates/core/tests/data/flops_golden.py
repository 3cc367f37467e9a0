"""Writes flops_default.txt: FLOPs (multiply-accumulates) of every
architecture in the default 1024-model grid, one per line in id order.

Independent of the Rust code: built only from the documented rules.
  - ids enumerate (resolution, width, expansion, depth_1..depth_5) in
    row-major order, the last stage depth varying fastest
  - stage channels = round-half-up(base * width), at least 1; stage 0 reads
    its own width
  - each stage halves the resolution (floor, at least 1); every block runs
    at the halved size
  - per block: 1x1 expand + 3x3 depthwise + 1x1 project
"""

import itertools
import math
from pathlib import Path

RESOLUTIONS = [128, 160, 192, 224]
WIDTHS = [0.25, 0.50, 0.75, 1.00]
EXPANSIONS = [3, 6]
DEPTHS = [2, 3]
BASE = [16, 24, 40, 80, 160]
K = 3


def channels(base, width):
    return max(1, math.floor(base * width + 0.5))


def arch_flops(res, width, e, depths):
    total = 0
    cin = channels(BASE[0], width)
    for stage, depth in enumerate(depths):
        cout = channels(BASE[stage], width)
        res = max(1, res // 2)
        for block in range(depth):
            c = cin if block == 0 else cout
            hidden = c * e
            total += res * res * (c * hidden + hidden * K * K + hidden * cout)
        cin = cout
    return total


def main():
    rows = [
        arch_flops(r, w, e, ds)
        for r, w, e, *ds in itertools.product(RESOLUTIONS, WIDTHS, EXPANSIONS, *[DEPTHS] * 5)
    ]
    assert len(rows) == 1024
    out = Path(__file__).with_name("flops_default.txt")
    out.write_text("".join(f"{x}\n" for x in rows))


if __name__ == "__main__":
    main()
