"""
Monte Carlo of control-message load versus anchor deployment density.

Devices random-walk over a base-station grid; anchors each serve one
square block of stations. A handover that crosses an anchor boundary
costs more control messages than one that stays inside a block, so
denser anchor deployments (more, smaller blocks) inflate total control
messaging. Movement depends only on the seed, so sweeping the anchor
count over the same seed isolates the boundary-crossing effect.
"""
import math
import random
from dataclasses import dataclass

# per-handover message costs: a plain handover vs one that also
# relocates the serving anchor (session-continuity signaling)
DEFAULT_C_INTRA = 15
DEFAULT_C_INTER = 50


class TilingError(ValueError):
    pass


@dataclass
class GridNetwork:
    width: int
    height: int
    ue_count: int
    handover_rate_per_min: float = 5.0


@dataclass
class SweepPoint:
    k: int
    anchors_per_station: float
    total_handovers: int
    inter_anchor: int
    total_messages: int

    @property
    def inter_fraction(self):
        if self.total_handovers == 0:
            return 0.0
        return self.inter_anchor / self.total_handovers


def block_size(grid, k):
    """Side length of each anchor's square block; k must tile the grid."""
    side = math.isqrt(k)
    if side * side != k:
        raise TilingError(f"k={k} is not a perfect square")
    if grid.width % side or grid.height % side:
        raise TilingError(f"k={k} does not tile a {grid.width}x{grid.height} grid")
    return grid.width // side, grid.height // side


def anchor_of(x, y, bw, bh):
    return (x // bw, y // bh)


def _neighbors(x, y, w, h):
    out = []
    if x > 0:
        out.append((x - 1, y))
    if x < w - 1:
        out.append((x + 1, y))
    if y > 0:
        out.append((x, y - 1))
    if y < h - 1:
        out.append((x, y + 1))
    return out


def generate_moves(grid, duration_min, seed):
    """The mobility trace: per-UE Poisson handover counts, uniform
    random neighbor moves, reflecting boundaries. Independent of any
    anchor layout, so one trace serves every density."""
    rng = random.Random(seed)
    w, h = grid.width, grid.height
    mean = grid.handover_rate_per_min * duration_min
    moves = []
    for _ in range(grid.ue_count):
        x = rng.randrange(w)
        y = rng.randrange(h)
        n_ho = _poisson(rng, mean)
        for _ in range(n_ho):
            nxt = rng.choice(_neighbors(x, y, w, h))
            moves.append(((x, y), nxt))
            x, y = nxt
    return moves


def _poisson(rng, mean):
    # inversion by sequential search is too slow for large means; use the
    # normal approximation beyond a cutoff (mean >= 30)
    if mean >= 30:
        return max(0, round(rng.gauss(mean, math.sqrt(mean))))
    limit = math.exp(-mean)
    k = 0
    p = 1.0
    while True:
        p *= rng.random()
        if p <= limit:
            return k
        k += 1


def classify_moves(moves, grid, k):
    """Count boundary-crossing handovers for an anchor count k."""
    bw, bh = block_size(grid, k)
    inter = 0
    for (x0, y0), (x1, y1) in moves:
        if anchor_of(x0, y0, bw, bh) != anchor_of(x1, y1, bw, bh):
            inter += 1
    return inter


def simulate_density(grid, k, duration_min=10, seed=0,
                     c_intra=DEFAULT_C_INTRA, c_inter=DEFAULT_C_INTER,
                     moves=None):
    if moves is None:
        moves = generate_moves(grid, duration_min, seed)
    inter = classify_moves(moves, grid, k)
    total = len(moves)
    messages = (total - inter) * c_intra + inter * c_inter
    return SweepPoint(k=k, anchors_per_station=k / (grid.width * grid.height),
                      total_handovers=total, inter_anchor=inter,
                      total_messages=messages)


def inter_fraction_exhaustive(grid, k):
    """Oracle: fraction of boundary-crossing moves over all (station,
    neighbor) pairs, which is the random walk's stationary crossing rate."""
    bw, bh = block_size(grid, k)
    total = 0
    crossing = 0
    for x in range(grid.width):
        for y in range(grid.height):
            for nx, ny in _neighbors(x, y, grid.width, grid.height):
                total += 1
                if anchor_of(x, y, bw, bh) != anchor_of(nx, ny, bw, bh):
                    crossing += 1
    return crossing / total


def default_densities(grid):
    """Nested square tilings from one anchor up to one per station."""
    out = []
    side = 1
    while side <= min(grid.width, grid.height):
        if grid.width % side == 0 and grid.height % side == 0:
            out.append(side * side)
        side += 1
    return out


def sweep(grid, densities=None, duration_min=10, seed=0,
          c_intra=DEFAULT_C_INTRA, c_inter=DEFAULT_C_INTER):
    """Run every density on the same mobility trace; returns the points
    and the message ratio normalized to the single-anchor deployment."""
    if densities is None:
        densities = default_densities(grid)
    moves = generate_moves(grid, duration_min, seed)
    points = [simulate_density(grid, k, duration_min, seed, c_intra, c_inter,
                               moves=moves)
              for k in densities]
    base = points[0].total_messages if points else 1
    ratios = [p.total_messages / base for p in points]
    return points, ratios


def to_csv_rows(points, ratios):
    """(k, anchors_per_station, handovers, inter, messages, ratio_vs_k1)."""
    return [(p.k, p.anchors_per_station, p.total_handovers, p.inter_anchor,
             p.total_messages, round(r, 6))
            for p, r in zip(points, ratios)]
