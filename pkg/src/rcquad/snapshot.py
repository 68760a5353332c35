"""SVG snapshots of configurations: open edges solid, dual-open (closed
primal) edges dashed, an optional crossing witness highlighted."""

MAX_SNAPSHOT_EDGES = 100_000
SCALE = 18
MARGIN = 24


def render_svg(region, config, witness=None):
    if region.n_edges > MAX_SNAPSHOT_EDGES:
        raise ValueError(f"region too large to draw ({region.n_edges} edges)")
    xs = region.coords[:, 0]
    ys = region.coords[:, 1]
    x0, x1 = int(xs.min()), int(xs.max())
    y0, y1 = int(ys.min()), int(ys.max())

    def pt(x, y):
        return (MARGIN + (x - x0) * SCALE, MARGIN + (y1 - y) * SCALE)

    w = MARGIN * 2 + (x1 - x0) * SCALE
    h = MARGIN * 2 + (y1 - y0) * SCALE
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
    ]
    open_segs, dual_segs = [], []
    for e in range(region.n_edges):
        u, v = region.edges[e]
        ux, uy = int(region.coords[u, 0]), int(region.coords[u, 1])
        vx, vy = int(region.coords[v, 0]), int(region.coords[v, 1])
        if config[e]:
            (ax, ay), (bx, by) = pt(ux, uy), pt(vx, vy)
            open_segs.append(f"M{ax},{ay}L{bx},{by}")
        else:
            # dual edge: the perpendicular unit segment through the midpoint
            mx, my = (ux + vx) / 2.0, (uy + vy) / 2.0
            if uy == vy:  # horizontal primal -> vertical dual
                (ax, ay), (bx, by) = pt(mx, my - 0.5), pt(mx, my + 0.5)
            else:
                (ax, ay), (bx, by) = pt(mx - 0.5, my), pt(mx + 0.5, my)
            dual_segs.append(f"M{ax},{ay}L{bx},{by}")
    if dual_segs:
        parts.append('<path d="' + "".join(dual_segs)
                     + '" stroke="#cc4444" stroke-width="1.2" '
                       'stroke-dasharray="4,3" fill="none"/>')
    if open_segs:
        parts.append('<path d="' + "".join(open_segs)
                     + '" stroke="#222222" stroke-width="2" fill="none"/>')
    for i in range(region.n_vertices):
        x, y = pt(int(region.coords[i, 0]), int(region.coords[i, 1]))
        parts.append(f'<circle cx="{x}" cy="{y}" r="1.6" fill="#888888"/>')
    if witness is not None and witness.vertices:
        pts = " ".join("{},{}".format(*pt(int(region.coords[v, 0]),
                                          int(region.coords[v, 1])))
                       for v in witness.vertices)
        parts.append(f'<polyline points="{pts}" stroke="#2266dd" '
                     'stroke-width="3.5" fill="none" opacity="0.8"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
