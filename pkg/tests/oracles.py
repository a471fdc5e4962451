"""Slow, obviously-correct reference implementations used only by the tests.

Everything here works on nested Python lists of 0/1 and never touches numpy
or scipy, so it shares no code path with the package.
"""

from collections import deque

N4 = [(-1, 0), (1, 0), (0, -1), (0, 1)]
N8 = N4 + [(-1, -1), (-1, 1), (1, -1), (1, 1)]


def to_lists(arr):
    return [[int(bool(v)) for v in row] for row in arr]


def brute_iou(a, b):
    inter = union = 0
    for ra, rb in zip(a, b):
        for x, y in zip(ra, rb):
            inter += x and y
            union += x or y
    return 1.0 if union == 0 else inter / union


def flood_components(grid, value, neighbours):
    """Components of cells equal to ``value``; returns list of pixel lists."""
    h, w = len(grid), len(grid[0])
    seen = [[False] * w for _ in range(h)]
    comps = []
    for i in range(h):
        for j in range(w):
            if grid[i][j] != value or seen[i][j]:
                continue
            seen[i][j] = True
            queue, comp = deque([(i, j)]), []
            while queue:
                y, x = queue.popleft()
                comp.append((y, x))
                for dy, dx in neighbours:
                    ny, nx = y + dy, x + dx
                    if 0 <= ny < h and 0 <= nx < w and not seen[ny][nx] and grid[ny][nx] == value:
                        seen[ny][nx] = True
                        queue.append((ny, nx))
            comps.append(comp)
    return comps


def external_count(grid):
    return len(flood_components(grid, 1, N8))


def hole_count(grid):
    """Background 4-components left after flooding from every border background pixel."""
    h, w = len(grid), len(grid[0])
    reached = [[False] * w for _ in range(h)]
    queue = deque()
    for i in range(h):
        for j in range(w):
            if (i in (0, h - 1) or j in (0, w - 1)) and grid[i][j] == 0:
                reached[i][j] = True
                queue.append((i, j))
    while queue:
        y, x = queue.popleft()
        for dy, dx in N4:
            ny, nx = y + dy, x + dx
            if 0 <= ny < h and 0 <= nx < w and not reached[ny][nx] and grid[ny][nx] == 0:
                reached[ny][nx] = True
                queue.append((ny, nx))
    residue = [[1 if grid[i][j] == 0 and not reached[i][j] else 0 for j in range(w)] for i in range(h)]
    return len(flood_components(residue, 1, N4))


def boundary_set(grid):
    h, w = len(grid), len(grid[0])
    out = set()
    for i in range(h):
        for j in range(w):
            if not grid[i][j]:
                continue
            for dy, dx in N4:
                ny, nx = i + dy, j + dx
                if not (0 <= ny < h and 0 <= nx < w) or not grid[ny][nx]:
                    out.add((i, j))
                    break
    return out


def matched(src, dst, tol):
    """Points of ``src`` with some point of ``dst`` at squared distance <= tol**2."""
    t2 = tol * tol
    return sum(1 for (y, x) in src if any((y - v) ** 2 + (x - u) ** 2 <= t2 for (v, u) in dst))


def brute_boundary(pred, gt, tol):
    """(matched_pred, n_pred, matched_gt, n_gt, F) by all-pairs distance checks."""
    bp, bg = boundary_set(pred), boundary_set(gt)
    mp, mg = matched(bp, bg, tol), matched(bg, bp, tol)
    if not bp and not bg:
        f = 1.0
    elif not bp or not bg:
        f = 0.0
    else:
        p, r = mp / len(bp), mg / len(bg)
        f = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return mp, len(bp), mg, len(bg), f
