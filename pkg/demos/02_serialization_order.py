# Visualize the one-shot serialization order on a tiny grid.
#
# 8x8 cells, 4x4 windows -> 2x2 windows visited row-major; inside each
# window the axis order decides the scan direction. The digits printed at
# each occupied cell are that cell's position in the serialized sequence.
#
# Run:  python3 demos/02_serialization_order.py

import numpy as np

from pillarmix import SerializationConfig, build_order
from pillarmix import serializer

W = H = 8


def render(coords, perm) -> str:
    rank = {tuple(coords[p]): i for i, p in enumerate(perm)}
    lines = []
    for iy in range(H - 1, -1, -1):  # y up, like a map
        row = [f"{rank[(ix, iy)]:3d}" if (ix, iy) in rank else "  ." for ix in range(W)]
        lines.append("".join(row))
    return "\n".join(lines)


def main() -> None:
    rng = np.random.default_rng(3)
    cells = rng.permutation(W * H)[:40]
    coords = np.stack([cells % W, cells // W], axis=1).astype(np.int32)

    for axis in ("x", "y", "none"):
        cfg = SerializationConfig(window=(4, 4), axis_order=axis)
        order = build_order(coords, cfg)
        print(f"axis_order={axis!r}")
        print(render(coords, order.perm))
        print()

    # the order is built once per scene, not once per layer
    print(f"build_order calls so far: {serializer.BUILD_ORDER_CALLS}")


if __name__ == "__main__":
    main()
