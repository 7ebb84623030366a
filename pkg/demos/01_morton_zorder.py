# The Z-order walk: interleaving coordinate bits turns 2-D positions into
# 1-D keys that keep nearby points nearby. Sorting by the key is what makes
# every quadtree cell a contiguous range.

import numpy as np

from bhtsne import morton_interleave

side = 8
print(f"Morton codes on an {side}x{side} grid (dim0 = x, dim1 = y):\n")
for yy in range(side - 1, -1, -1):
    row = " ".join(f"{morton_interleave(xx, yy):3d}" for xx in range(side))
    print(f"  y={yy}  {row}")

print("\nThe worked example: x=3 (011b) interleaved with y=7 (111b):")
code = morton_interleave(3, 7)
print(f"  code = {code} = {code:06b}b")

# codes sorted ascending trace the recursive Z through the grid
cells = [(morton_interleave(x, y), x, y)
         for x in range(side) for y in range(side)]
cells.sort()
path = " -> ".join(f"({x},{y})" for _, x, y in cells[:16])
print(f"\nFirst 16 grid cells in Z-order:\n  {path}")

# contiguity: all cells of one quadrant share a 2-bit prefix
codes = np.array([c for c, _, _ in cells])
quadrant = codes >> 4  # top 2 bits of the 6-bit codes
for q in range(4):
    block = np.flatnonzero(quadrant == q)
    print(f"quadrant {q:02b}: sorted positions {block.min()}..{block.max()} "
          f"({len(block)} cells, contiguous={len(block) == block.max() - block.min() + 1})")
