"""Pure numpy implementations of the hot loops (fallback for ``_ckernels``)."""
import numpy as np

_CHUNK = 1 << 20


def raster_intervals(quads, y0, x0, h, nrows, ncols):
    quads = np.asarray(quads, dtype=np.float64)
    ys = quads[:, :, 1]
    r0 = np.maximum(np.ceil((ys.min(axis=1) - y0) / h - 0.5).astype(np.int64), 0)
    r1 = np.minimum(np.floor((ys.max(axis=1) - y0) / h - 0.5).astype(np.int64), nrows - 1)
    counts = np.maximum(r1 - r0 + 1, 0)
    tube = np.repeat(np.arange(len(quads)), counts)
    start = np.repeat(np.cumsum(counts) - counts, counts)
    rows = np.repeat(r0, counts) + (np.arange(counts.sum()) - start)
    yc = y0 + (rows + 0.5) * h
    lo = np.full(yc.shape, np.inf)
    hi = np.full(yc.shape, -np.inf)
    for e in range(4):
        p = quads[tube, e]
        q = quads[tube, (e + 1) % 4]
        py, qy = p[:, 1], q[:, 1]
        flat = py == qy
        on = flat & (yc == py)
        lo = np.where(on, np.minimum(lo, np.minimum(p[:, 0], q[:, 0])), lo)
        hi = np.where(on, np.maximum(hi, np.maximum(p[:, 0], q[:, 0])), hi)
        cross = (~flat) & ((yc - py) * (yc - qy) <= 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            x = p[:, 0] + (yc - py) * (q[:, 0] - p[:, 0]) / np.where(flat, 1.0, qy - py)
        lo = np.where(cross, np.minimum(lo, x), lo)
        hi = np.where(cross, np.maximum(hi, x), hi)
    hit = np.isfinite(lo)
    with np.errstate(invalid="ignore"):
        c0 = np.maximum(np.ceil((lo - x0) / h - 0.5), 0)
        c1 = np.minimum(np.floor((hi - x0) / h - 0.5), ncols - 1)
    keep = hit & (c1 >= c0)
    return rows[keep], c0[keep].astype(np.int64), c1[keep].astype(np.int64)


def merged_cell_count(rows, lo, hi):
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        return 0
    # Place every row on its own stretch of a single line, then merge intervals there.
    width = int(max(hi.max(), 0)) + 2
    a = rows * width + lo
    b = rows * width + hi
    reach = np.maximum.accumulate(b)
    new = np.ones(a.size, dtype=bool)
    new[1:] = a[1:] > reach[:-1] + 1
    starts = np.flatnonzero(new)
    ends = np.append(starts[1:], a.size) - 1
    return int(np.sum(reach[ends] - a[starts] + 1))


def _penetration(qa, qb):
    """SAT penetration depth for stacks of quads qa, qb of shape (M, 4, 2)."""
    best = np.full(qa.shape[0], np.inf)
    for owner in (qa, qb):
        for e in (0, 1):
            ed = owner[:, e + 1] - owner[:, e]
            nrm = np.stack([-ed[:, 1], ed[:, 0]], axis=1)
            ln = np.linalg.norm(nrm, axis=1)
            ok = ln > 0
            nrm = nrm / np.where(ok, ln, 1.0)[:, None]
            pa = np.einsum("mvk,mk->mv", qa, nrm)
            pb = np.einsum("mvk,mk->mv", qb, nrm)
            ov = np.minimum(pa.max(1), pb.max(1)) - np.maximum(pa.min(1), pb.min(1))
            best = np.where(ok, np.minimum(best, ov), best)
    return best


def sat_pairs(quads, tol):
    quads = np.asarray(quads, dtype=np.float64)
    n = len(quads)
    lo = quads.min(axis=1)
    hi = quads.max(axis=1)
    out = []
    rows_per_chunk = max(1, _CHUNK // max(n, 1))
    for i0 in range(0, n, rows_per_chunk):
        ii, jj = np.meshgrid(np.arange(i0, min(n, i0 + rows_per_chunk)), np.arange(n), indexing="ij")
        sel = jj > ii
        ii, jj = ii[sel], jj[sel]
        box = np.all(np.minimum(hi[ii], hi[jj]) - np.maximum(lo[ii], lo[jj]) > tol, axis=1)
        ii, jj = ii[box], jj[box]
        if ii.size:
            pen = _penetration(quads[ii], quads[jj])
            hit = pen > tol
            out.append(np.stack([ii[hit], jj[hit]], axis=1))
    if not out:
        return np.zeros((0, 2), dtype=np.int64)
    return np.concatenate(out).astype(np.int64).reshape(-1, 2)


def sat_one(quads, idx, tol):
    quads = np.asarray(quads, dtype=np.float64)
    pen = _penetration(np.broadcast_to(quads[idx], quads.shape), quads)
    mask = pen > tol
    mask[idx] = False
    return mask


def maximal_dyadic(values, radii):
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    pre = np.concatenate([[0.0], np.cumsum(values)])
    out = values.copy()
    idx = np.arange(n)
    for k in np.asarray(radii, dtype=np.int64):
        a = np.clip(idx - k, 0, n)
        b = np.clip(idx + k + 1, 0, n)
        out = np.maximum(out, (pre[b] - pre[a]) / (2 * k + 1))
    return out


def frame_sums(pts, origins, dirs, delta, table, s0, ds, t0, dt, cs0, cs1, ct0, ct1):
    pts = np.asarray(pts, dtype=np.float64)
    table = np.asarray(table, dtype=np.complex128)
    ns, nt = table.shape
    sums = np.zeros(len(pts))
    counts = np.zeros(len(pts), dtype=np.int64)
    step = max(1, _CHUNK // max(len(origins), 1))
    for p0 in range(0, len(pts), step):
        P = pts[p0:p0 + step]
        dx = P[:, None, 0] - origins[None, :, 0]
        dy = P[:, None, 1] - origins[None, :, 1]
        sg = dx * dirs[None, :, 0] + dy * dirs[None, :, 1]
        ta = (-dx * dirs[None, :, 1] + dy * dirs[None, :, 0]) / delta
        counts[p0:p0 + step] = np.sum((sg >= cs0) & (sg <= cs1) & (ta >= ct0) & (ta <= ct1), axis=1)
        fs = (sg - s0) / ds
        ft = (ta - t0) / dt
        inside = (fs >= 0) & (ft >= 0) & (fs <= ns - 1) & (ft <= nt - 1)
        fs, ft = fs[inside], ft[inside]
        i0 = np.minimum(fs.astype(np.int64), ns - 2)
        j0 = np.minimum(ft.astype(np.int64), nt - 2)
        ws, wt = fs - i0, ft - j0
        val = ((1 - ws) * (1 - wt) * table[i0, j0] + ws * (1 - wt) * table[i0 + 1, j0]
               + (1 - ws) * wt * table[i0, j0 + 1] + ws * wt * table[i0 + 1, j0 + 1])
        contrib = np.zeros(inside.shape)
        contrib[inside] = val.real ** 2 + val.imag ** 2
        sums[p0:p0 + step] = contrib.sum(axis=1)
    return sums, counts
