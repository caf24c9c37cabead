# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops; semantics mirror ``_pykernels`` exactly."""
import numpy as np
cimport numpy as cnp
from libc.math cimport ceil, floor, fabs, fmin, fmax

cnp.import_array()


cdef inline void _quad_span_at(const double[:, :, ::1] q, Py_ssize_t t, double y,
                               double* lo, double* hi, bint* hit) noexcept nogil:
    cdef Py_ssize_t e, f
    cdef double px, py, qx, qy, x
    lo[0] = 1e300
    hi[0] = -1e300
    hit[0] = False
    for e in range(4):
        f = (e + 1) % 4
        px = q[t, e, 0]; py = q[t, e, 1]
        qx = q[t, f, 0]; qy = q[t, f, 1]
        if py == qy:
            if y == py:
                lo[0] = fmin(lo[0], fmin(px, qx))
                hi[0] = fmax(hi[0], fmax(px, qx))
                hit[0] = True
            continue
        if (y - py) * (y - qy) <= 0.0:
            x = px + (y - py) * (qx - px) / (qy - py)
            lo[0] = fmin(lo[0], x)
            hi[0] = fmax(hi[0], x)
            hit[0] = True


def raster_intervals(const double[:, :, ::1] quads, double y0, double x0, double h,
                     Py_ssize_t nrows, Py_ssize_t ncols):
    """Per tube and per covered row, the closed range of cell columns whose
    centers lie inside the (convex) quad."""
    cdef Py_ssize_t n = quads.shape[0]
    cdef Py_ssize_t t, i, r0, r1, total = 0, k = 0
    cdef double ymin, ymax, yc, lo, hi
    cdef long c0, c1
    cdef bint hit
    cdef cnp.int64_t[::1] rlo = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] rhi = np.empty(n, dtype=np.int64)
    for t in range(n):
        ymin = fmin(fmin(quads[t, 0, 1], quads[t, 1, 1]), fmin(quads[t, 2, 1], quads[t, 3, 1]))
        ymax = fmax(fmax(quads[t, 0, 1], quads[t, 1, 1]), fmax(quads[t, 2, 1], quads[t, 3, 1]))
        r0 = <Py_ssize_t>ceil((ymin - y0) / h - 0.5)
        r1 = <Py_ssize_t>floor((ymax - y0) / h - 0.5)
        if r0 < 0:
            r0 = 0
        if r1 > nrows - 1:
            r1 = nrows - 1
        rlo[t] = r0
        rhi[t] = r1
        if r1 >= r0:
            total += r1 - r0 + 1
    rows = np.empty(total, dtype=np.int64)
    los = np.empty(total, dtype=np.int64)
    his = np.empty(total, dtype=np.int64)
    cdef cnp.int64_t[::1] rv = rows
    cdef cnp.int64_t[::1] lv = los
    cdef cnp.int64_t[::1] hv = his
    with nogil:
        for t in range(n):
            for i in range(rlo[t], rhi[t] + 1):
                yc = y0 + (i + 0.5) * h
                _quad_span_at(quads, t, yc, &lo, &hi, &hit)
                if not hit:
                    continue
                c0 = <long>ceil((lo - x0) / h - 0.5)
                c1 = <long>floor((hi - x0) / h - 0.5)
                if c0 < 0:
                    c0 = 0
                if c1 > ncols - 1:
                    c1 = ncols - 1
                if c1 < c0:
                    continue
                rv[k] = i
                lv[k] = c0
                hv[k] = c1
                k += 1
    return rows[:k], los[:k], his[:k]


def merged_cell_count(const cnp.int64_t[::1] rows, const cnp.int64_t[::1] lo,
                      const cnp.int64_t[::1] hi):
    """Number of distinct cells covered by intervals sorted by (row, lo)."""
    cdef Py_ssize_t m = rows.shape[0], i
    cdef cnp.int64_t count = 0, cur_row = -1, cur_lo = 0, cur_hi = -1
    with nogil:
        for i in range(m):
            if rows[i] != cur_row or lo[i] > cur_hi + 1:
                if cur_hi >= cur_lo:
                    count += cur_hi - cur_lo + 1
                cur_row = rows[i]
                cur_lo = lo[i]
                cur_hi = hi[i]
            elif hi[i] > cur_hi:
                cur_hi = hi[i]
        if cur_hi >= cur_lo:
            count += cur_hi - cur_lo + 1
    return int(count)


cdef inline double _penetration(const double[:, :, ::1] q, Py_ssize_t a, Py_ssize_t b) noexcept nogil:
    """Minimum projected overlap over the four edge normals (SAT)."""
    cdef double best = 1e300, nx, ny, ln, amin, amax, bmin, bmax, p, ov
    cdef Py_ssize_t s, e, v, owner
    for s in range(4):
        owner = a if s < 2 else b
        e = s % 2
        nx = -(q[owner, e + 1, 1] - q[owner, e, 1])
        ny = q[owner, e + 1, 0] - q[owner, e, 0]
        ln = (nx * nx + ny * ny) ** 0.5
        if ln == 0.0:
            continue
        nx /= ln
        ny /= ln
        amin = 1e300; amax = -1e300; bmin = 1e300; bmax = -1e300
        for v in range(4):
            p = q[a, v, 0] * nx + q[a, v, 1] * ny
            amin = fmin(amin, p); amax = fmax(amax, p)
            p = q[b, v, 0] * nx + q[b, v, 1] * ny
            bmin = fmin(bmin, p); bmax = fmax(bmax, p)
        ov = fmin(amax, bmax) - fmax(amin, bmin)
        if ov < best:
            best = ov
            if best <= 0.0:
                return best
    return best


def sat_pairs(const double[:, :, ::1] quads, double tol):
    """All index pairs i < j of rectangles whose interiors overlap by more than tol."""
    cdef Py_ssize_t n = quads.shape[0], i, j, v
    cdef double[:, ::1] box = np.empty((n, 4), dtype=np.float64)
    out = []
    for i in range(n):
        box[i, 0] = 1e300; box[i, 1] = -1e300; box[i, 2] = 1e300; box[i, 3] = -1e300
        for v in range(4):
            box[i, 0] = fmin(box[i, 0], quads[i, v, 0]); box[i, 1] = fmax(box[i, 1], quads[i, v, 0])
            box[i, 2] = fmin(box[i, 2], quads[i, v, 1]); box[i, 3] = fmax(box[i, 3], quads[i, v, 1])
    for i in range(n):
        for j in range(i + 1, n):
            if box[i, 1] - box[j, 0] <= tol or box[j, 1] - box[i, 0] <= tol:
                continue
            if box[i, 3] - box[j, 2] <= tol or box[j, 3] - box[i, 2] <= tol:
                continue
            if _penetration(quads, i, j) > tol:
                out.append((i, j))
    return np.array(out, dtype=np.int64).reshape(-1, 2)


def sat_one(const double[:, :, ::1] quads, Py_ssize_t idx, double tol):
    """Boolean mask: which rectangles overlap rectangle ``idx`` (itself excluded)."""
    cdef Py_ssize_t n = quads.shape[0], j
    mask = np.zeros(n, dtype=np.bool_)
    cdef cnp.npy_bool[::1] m = mask
    with nogil:
        for j in range(n):
            if j != idx and _penetration(quads, idx, j) > tol:
                m[j] = True
    return mask


def maximal_dyadic(const double[::1] values, const cnp.int64_t[::1] radii):
    """max over k in radii of the centred window mean of half-width k (zero extension)."""
    cdef Py_ssize_t n = values.shape[0], i, r, k, a, b
    cdef double[::1] pre = np.zeros(n + 1, dtype=np.float64)
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef double avg
    with nogil:
        for i in range(n):
            pre[i + 1] = pre[i] + values[i]
        for i in range(n):
            o[i] = values[i]
            for r in range(radii.shape[0]):
                k = radii[r]
                a = i - k
                b = i + k + 1
                if a < 0:
                    a = 0
                if b > n:
                    b = n
                avg = (pre[b] - pre[a]) / (2 * k + 1)
                if avg > o[i]:
                    o[i] = avg
    return out


def frame_sums(const double[:, ::1] pts, const double[:, ::1] origins, const double[:, ::1] dirs,
               double delta, const double complex[:, ::1] table, double s0, double ds,
               double t0, double dt, double cs0, double cs1, double ct0, double ct1):
    """For each point, the sum over tubes of |table(sigma, tau)|^2 (bilinear, zero outside)
    and the number of tubes whose frame box [cs0,cs1]x[ct0,ct1] contains it.

    Frame coordinates: sigma = <x - o, v>, tau = <x - o, v_perp> / delta."""
    cdef Py_ssize_t P = pts.shape[0], N = origins.shape[0], ns = table.shape[0], nt = table.shape[1]
    cdef Py_ssize_t p, t, i0, j0
    cdef double dx, dy, sg, ta, fs, ft, ws, wt
    cdef double complex val
    sums = np.zeros(P, dtype=np.float64)
    counts = np.zeros(P, dtype=np.int64)
    cdef double[::1] sv = sums
    cdef cnp.int64_t[::1] cv = counts
    with nogil:
        for p in range(P):
            for t in range(N):
                dx = pts[p, 0] - origins[t, 0]
                dy = pts[p, 1] - origins[t, 1]
                sg = dx * dirs[t, 0] + dy * dirs[t, 1]
                ta = (-dx * dirs[t, 1] + dy * dirs[t, 0]) / delta
                if cs0 <= sg <= cs1 and ct0 <= ta <= ct1:
                    cv[p] += 1
                fs = (sg - s0) / ds
                ft = (ta - t0) / dt
                if fs < 0.0 or ft < 0.0 or fs > ns - 1 or ft > nt - 1:
                    continue
                i0 = <Py_ssize_t>fs
                j0 = <Py_ssize_t>ft
                if i0 >= ns - 1:
                    i0 = ns - 2
                if j0 >= nt - 1:
                    j0 = nt - 2
                ws = fs - i0
                wt = ft - j0
                val = ((1 - ws) * (1 - wt) * table[i0, j0] + ws * (1 - wt) * table[i0 + 1, j0]
                       + (1 - ws) * wt * table[i0, j0 + 1] + ws * wt * table[i0 + 1, j0 + 1])
                sv[p] += val.real * val.real + val.imag * val.imag
    return sums, counts
