//! Lane-interleaved batched LU solver.
//!
//! Systems are packed in groups of [`LANES`]. Inside a group, element `(i, j)`
//! of every system sits next to the same element of its neighbours, so one
//! elimination step runs over all lanes with a single vector instruction.
//! Each lane keeps its own partial-pivoting sequence; row swaps are applied
//! physically per lane, which keeps the arithmetic lane-uniform.
//!
//! A group is stored as column panels of width [`PANEL`]; each panel is
//! row-major over `n x PANEL` lane vectors. The factorization is a blocked
//! left-looking LU: every panel is first updated with all factored panels to
//! its left (register-tiled), then factored column by column.

use crate::linalg::{singular_threshold, Real};

/// Number of systems sharing one vector register.
pub const LANES: usize = 8;

/// Column panel width of the blocked factorization.
pub const PANEL: usize = 16;

type Lanes<T> = [T; LANES];

#[inline(always)]
unsafe fn read_lanes<T: Copy>(p: *const T) -> Lanes<T> {
    p.cast::<Lanes<T>>().read_unaligned()
}

/// Offsets inside one group buffer.
#[derive(Clone, Copy)]
struct Geometry {
    n: usize,
    panels: usize,
}

impl Geometry {
    fn new(n: usize) -> Self {
        Self {
            n,
            panels: n.div_ceil(PANEL),
        }
    }

    #[inline(always)]
    fn panel_len(self) -> usize {
        self.n * PANEL * LANES
    }

    #[inline(always)]
    fn group_len(self) -> usize {
        self.panels * self.panel_len()
    }

    #[inline(always)]
    fn width(self, q: usize) -> usize {
        PANEL.min(self.n - q * PANEL)
    }

    #[inline(always)]
    fn at(self, i: usize, j: usize) -> usize {
        (j / PANEL) * self.panel_len() + (i * PANEL + j % PANEL) * LANES
    }
}

/// Dense storage for a batch of `n x n` systems with one right-hand side each.
pub struct LaneBatch<T> {
    geo: Geometry,
    systems: usize,
    lhs: Vec<T>,
    rhs: Vec<T>,
}

impl<T: Real> LaneBatch<T> {
    /// Packs `systems` systems of the form `base(s) + diag(shift(s, .))`.
    ///
    /// `base(s)` returns the row-major `n x n` matrix of system `s`; several
    /// systems may share one base. `rhs(s, i)` is entry `i` of the right-hand
    /// side. Unused trailing lanes hold identity systems.
    pub fn assemble<'a>(
        n: usize,
        systems: usize,
        base: impl Fn(usize) -> &'a [T],
        shift: impl Fn(usize, usize) -> T,
        rhs: impl Fn(usize, usize) -> T,
    ) -> Self
    where
        T: 'a,
    {
        let geo = Geometry::new(n);
        let groups = systems.div_ceil(LANES);
        let mut lhs = vec![T::zero(); groups * geo.group_len()];
        let mut rhs_buf = vec![T::zero(); groups * n * LANES];
        let identity: Vec<T> = (0..n * n)
            .map(|x| if x % (n + 1) == 0 { T::one() } else { T::zero() })
            .collect();

        for (g, group) in lhs.chunks_exact_mut(geo.group_len().max(1)).enumerate() {
            let bases: [&[T]; LANES] = std::array::from_fn(|w| {
                let s = g * LANES + w;
                if s < systems {
                    let m = base(s);
                    assert_eq!(m.len(), n * n, "base matrix of system {s} has wrong size");
                    m
                } else {
                    &identity[..]
                }
            });
            for q in 0..geo.panels {
                let width = geo.width(q);
                let panel = &mut group[q * geo.panel_len()..(q + 1) * geo.panel_len()];
                for i in 0..n {
                    let dst_row = &mut panel[i * PANEL * LANES..];
                    for jl in 0..width {
                        let src = i * n + q * PANEL + jl;
                        let dst = &mut dst_row[jl * LANES..(jl + 1) * LANES];
                        for w in 0..LANES {
                            dst[w] = bases[w][src];
                        }
                    }
                }
            }
            for w in 0..LANES {
                let s = g * LANES + w;
                if s >= systems {
                    continue;
                }
                for i in 0..n {
                    group[geo.at(i, i) + w] += shift(s, i);
                    rhs_buf[(g * n + i) * LANES + w] = rhs(s, i);
                }
            }
        }

        Self {
            geo,
            systems,
            lhs,
            rhs: rhs_buf,
        }
    }

    pub fn systems(&self) -> usize {
        self.systems
    }

    /// Bytes held by the packed left-hand sides, including padding.
    pub fn lhs_bytes(&self) -> usize {
        self.lhs.len() * T::BYTES
    }

    /// Factors and solves every system in place. On failure returns the
    /// index of the first singular system.
    pub fn solve(&mut self) -> Result<(), usize> {
        let geo = self.geo;
        if geo.n == 0 {
            return Ok(());
        }
        let lhs_groups = self.lhs.chunks_exact_mut(geo.group_len());
        let rhs_groups = self.rhs.chunks_exact_mut(geo.n * LANES);
        for (g, (a, b)) in lhs_groups.zip(rhs_groups).enumerate() {
            solve_group(a, b, geo).map_err(|lane| g * LANES + lane)?;
        }
        Ok(())
    }

    /// Entry `i` of the solution of system `s` (valid after [`Self::solve`]).
    #[inline]
    pub fn solution(&self, s: usize, i: usize) -> T {
        debug_assert!(s < self.systems);
        let (g, w) = (s / LANES, s % LANES);
        self.rhs[(g * self.geo.n + i) * LANES + w]
    }
}

/// `T[i0.., c0..] -= L[i0.., p_lo..p_hi] * U[p_lo..p_hi, c0..]` for an `R x C`
/// tile of the current panel `cur`. `L` is read from whichever panels hold
/// columns `p_lo..p_hi`; `U` and `T` live in `cur`.
#[inline(always)]
unsafe fn tile<T: Real, const R: usize, const C: usize>(
    a: *mut T,
    geo: Geometry,
    cur: usize,
    i0: usize,
    c0: usize,
    p_lo: usize,
    p_hi: usize,
) {
    const ROW: usize = PANEL * LANES;
    #[cfg(all(target_arch = "x86_64", target_feature = "avx512f"))]
    if R == 4 && C == 4 && std::any::TypeId::of::<T>() == std::any::TypeId::of::<f64>() {
        return zmm::tile_4x4(a.cast::<f64>(), geo, cur, i0, c0, p_lo, p_hi);
    }
    let cur_ptr = a.add(cur * geo.panel_len());
    let mut acc = [[[T::zero(); LANES]; C]; R];
    let mut p = p_lo;
    while p < p_hi {
        let q = p / PANEL;
        let seg_end = ((q + 1) * PANEL).min(p_hi);
        let l_ptr = a.add(q * geo.panel_len() + (i0 * PANEL + p % PANEL) * LANES);
        let u_ptr = cur_ptr.add((p * PANEL + c0) * LANES);
        for s in 0..seg_end - p {
            let u: [Lanes<T>; C] =
                std::array::from_fn(|c| read_lanes(u_ptr.add(s * ROW + c * LANES)));
            for r in 0..R {
                let l = read_lanes(l_ptr.add(r * ROW + s * LANES));
                for c in 0..C {
                    for w in 0..LANES {
                        acc[r][c][w] = l[w].mul_add(u[c][w], acc[r][c][w]);
                    }
                }
            }
        }
        p = seg_end;
    }
    for r in 0..R {
        for c in 0..C {
            let dst = cur_ptr.add(((i0 + r) * PANEL + c0 + c) * LANES);
            for w in 0..LANES {
                *dst.add(w) -= acc[r][c][w];
            }
        }
    }
}

#[cfg(all(target_arch = "x86_64", target_feature = "avx512f"))]
mod zmm {
    use super::{Geometry, LANES, PANEL};
    use std::arch::x86_64::*;

    /// `4 x 4` tile of [`super::tile`] for `f64`, one lane group per register.
    #[inline(always)]
    pub(super) unsafe fn tile_4x4(
        a: *mut f64,
        geo: Geometry,
        cur: usize,
        i0: usize,
        c0: usize,
        p_lo: usize,
        p_hi: usize,
    ) {
        const ROW: usize = PANEL * LANES;
        let cur_ptr = a.add(cur * geo.panel_len());
        let z = _mm512_setzero_pd();
        let mut acc = [[z; 4]; 4];
        let mut p = p_lo;
        while p < p_hi {
            let q = p / PANEL;
            let seg_end = ((q + 1) * PANEL).min(p_hi);
            let mut l_ptr = a.add(q * geo.panel_len() + (i0 * PANEL + p % PANEL) * LANES);
            let mut u_ptr = cur_ptr.add((p * PANEL + c0) * LANES);
            for _ in p..seg_end {
                let u0 = _mm512_loadu_pd(u_ptr);
                let u1 = _mm512_loadu_pd(u_ptr.add(LANES));
                let u2 = _mm512_loadu_pd(u_ptr.add(2 * LANES));
                let u3 = _mm512_loadu_pd(u_ptr.add(3 * LANES));
                for (r, row) in acc.iter_mut().enumerate() {
                    let l = _mm512_loadu_pd(l_ptr.add(r * ROW));
                    row[0] = _mm512_fmadd_pd(l, u0, row[0]);
                    row[1] = _mm512_fmadd_pd(l, u1, row[1]);
                    row[2] = _mm512_fmadd_pd(l, u2, row[2]);
                    row[3] = _mm512_fmadd_pd(l, u3, row[3]);
                }
                l_ptr = l_ptr.add(LANES);
                u_ptr = u_ptr.add(ROW);
            }
            p = seg_end;
        }
        for (r, row) in acc.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                let dst = cur_ptr.add(((i0 + r) * PANEL + c0 + c) * LANES);
                _mm512_storeu_pd(dst, _mm512_sub_pd(_mm512_loadu_pd(dst), *v));
            }
        }
    }
}

/// Applies [`tile`] over rows `rows`, current-panel columns `cols`, and
/// source columns `ps`.
unsafe fn update_block<T: Real>(
    a: *mut T,
    geo: Geometry,
    cur: usize,
    rows: (usize, usize),
    cols: (usize, usize),
    ps: (usize, usize),
) {
    const DEPTH: usize = 32;
    let mut p_lo = ps.0;
    while p_lo < ps.1 {
        let p_hi = (p_lo + DEPTH).min(ps.1);
        update_slab(a, geo, cur, rows, cols, (p_lo, p_hi));
        p_lo = p_hi;
    }
}

unsafe fn update_slab<T: Real>(
    a: *mut T,
    geo: Geometry,
    cur: usize,
    rows: (usize, usize),
    cols: (usize, usize),
    ps: (usize, usize),
) {
    let (p_lo, p_hi) = ps;
    let mut i = rows.0;
    while i + 4 <= rows.1 {
        let mut c = cols.0;
        while c + 4 <= cols.1 {
            tile::<T, 4, 4>(a, geo, cur, i, c, p_lo, p_hi);
            c += 4;
        }
        while c < cols.1 {
            tile::<T, 4, 1>(a, geo, cur, i, c, p_lo, p_hi);
            c += 1;
        }
        i += 4;
    }
    while i < rows.1 {
        let mut c = cols.0;
        while c + 4 <= cols.1 {
            tile::<T, 1, 4>(a, geo, cur, i, c, p_lo, p_hi);
            c += 4;
        }
        while c < cols.1 {
            tile::<T, 1, 1>(a, geo, cur, i, c, p_lo, p_hi);
            c += 1;
        }
        i += 1;
    }
}

/// Factors one group in place and solves for its right-hand sides.
/// Returns the first lane whose pivot vanishes.
fn solve_group<T: Real>(a: &mut [T], b: &mut [T], geo: Geometry) -> Result<(), usize> {
    let n = geo.n;
    assert_eq!(a.len(), geo.group_len());
    assert_eq!(b.len(), n * LANES);

    let mut tol = [T::zero(); LANES];
    for q in 0..geo.panels {
        let width = geo.width(q);
        for i in 0..n {
            let start = geo.at(i, q * PANEL);
            for chunk in a[start..start + width * LANES].chunks_exact(LANES) {
                for w in 0..LANES {
                    tol[w] = tol[w].max(chunk[w].abs());
                }
            }
        }
    }
    let tol = tol.map(|t| singular_threshold(n, t));

    let mut piv = vec![[0usize; LANES]; n];
    let ptr = a.as_mut_ptr();

    for jp in 0..geo.panels {
        let j0 = jp * PANEL;
        let pw = geo.width(jp);

        // SAFETY: all row indices are < n, all column indices are < n, and
        // `geo.at` maps that square onto `a`, whose length was asserted above.
        // No other reference to `a` is live while `ptr` is in use.
        unsafe {
            // U rows above the diagonal block: block forward substitution.
            for q0 in (0..j0).step_by(PANEL) {
                update_block(ptr, geo, jp, (q0, q0 + PANEL), (0, pw), (0, q0));
                for i in q0 + 1..q0 + PANEL {
                    update_block(ptr, geo, jp, (i, i + 1), (0, pw), (q0, i));
                }
            }
            update_block(ptr, geo, jp, (j0, n), (0, pw), (0, j0));

            for jl in 0..pw {
                let j = j0 + jl;
                for i in j0 + 1..=j {
                    update_block(ptr, geo, jp, (i, i + 1), (jl, jl + 1), (j0, i));
                }
                update_block(ptr, geo, jp, (j + 1, n), (jl, jl + 1), (j0, j));

                let mut best = read_lanes(ptr.add(geo.at(j, j))).map(|x| x.abs());
                let mut arg = [j; LANES];
                for i in j + 1..n {
                    let v = read_lanes(ptr.add(geo.at(i, j)));
                    for w in 0..LANES {
                        if v[w].abs() > best[w] {
                            best[w] = v[w].abs();
                            arg[w] = i;
                        }
                    }
                }
                for w in 0..LANES {
                    if !(best[w] > tol[w]) {
                        return Err(w);
                    }
                    let r = arg[w];
                    if r != j {
                        for c in 0..n {
                            std::ptr::swap(ptr.add(geo.at(j, c) + w), ptr.add(geo.at(r, c) + w));
                        }
                    }
                }
                piv[j] = arg;

                let d = read_lanes(ptr.add(geo.at(j, j)));
                let inv: Lanes<T> = d.map(|x| T::one() / x);
                for i in j + 1..n {
                    let p = ptr.add(geo.at(i, j));
                    for w in 0..LANES {
                        *p.add(w) *= inv[w];
                    }
                }
            }
        }
    }

    for (j, p) in piv.iter().enumerate() {
        for w in 0..LANES {
            if p[w] != j {
                b.swap(j * LANES + w, p[w] * LANES + w);
            }
        }
    }
    let lanes_at = |o: usize| -> Lanes<T> { std::array::from_fn(|w| a[o + w]) };
    for i in 1..n {
        let mut acc = [T::zero(); LANES];
        for p in 0..i {
            let l = lanes_at(geo.at(i, p));
            for w in 0..LANES {
                acc[w] = l[w].mul_add(b[p * LANES + w], acc[w]);
            }
        }
        for w in 0..LANES {
            b[i * LANES + w] -= acc[w];
        }
    }
    for i in (0..n).rev() {
        let mut acc = [T::zero(); LANES];
        for p in i + 1..n {
            let u = lanes_at(geo.at(i, p));
            for w in 0..LANES {
                acc[w] = u[w].mul_add(b[p * LANES + w], acc[w]);
            }
        }
        let d = lanes_at(geo.at(i, i));
        for w in 0..LANES {
            b[i * LANES + w] = (b[i * LANES + w] - acc[w]) / d[w];
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::lu_solve_in_place;

    fn pseudo(seed: u64, n: usize) -> Vec<f64> {
        let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (0..n)
            .map(|_| {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            })
            .collect()
    }

    #[test]
    fn matches_scalar_lu_with_pivoting() {
        for &(n, systems) in &[(1, 1), (3, 5), (4, 8), (17, 9), (37, 20), (48, 3)] {
            let mats: Vec<Vec<f64>> = (0..systems).map(|s| pseudo(s as u64, n * n)).collect();
            let shifts: Vec<Vec<f64>> = (0..systems).map(|s| pseudo(50 + s as u64, n)).collect();
            let rhss: Vec<Vec<f64>> = (0..systems).map(|s| pseudo(100 + s as u64, n)).collect();
            let mut batch = LaneBatch::assemble(
                n,
                systems,
                |s| &mats[s][..],
                |s, i| shifts[s][i],
                |s, i| rhss[s][i],
            );
            batch.solve().unwrap();
            for s in 0..systems {
                let mut a = mats[s].clone();
                for i in 0..n {
                    a[i * n + i] += shifts[s][i];
                }
                let mut x = rhss[s].clone();
                lu_solve_in_place(&mut a, n, &mut x).unwrap();
                for i in 0..n {
                    assert!(
                        (batch.solution(s, i) - x[i]).abs() < 1e-9 * (1.0 + x[i].abs()),
                        "n={n} s={s} i={i}"
                    );
                }
            }
        }
    }

    #[test]
    fn single_precision_agrees_with_double() {
        let n = 20;
        let m64 = pseudo(7, n * n);
        let m32: Vec<f32> = m64.iter().map(|&x| x as f32).collect();
        let mut b64 = LaneBatch::assemble(n, 3, |_| &m64[..], |_, _| 4.0, |s, i| (s + i) as f64);
        let mut b32 = LaneBatch::assemble(n, 3, |_| &m32[..], |_, _| 4.0f32, |s, i| (s + i) as f32);
        b64.solve().unwrap();
        b32.solve().unwrap();
        for s in 0..3 {
            for i in 0..n {
                assert!((b64.solution(s, i) - b32.solution(s, i) as f64).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn reports_first_singular_system() {
        let n = 4;
        let ones = vec![1.0; n * n];
        let eye: Vec<f64> = (0..n * n).map(|x| if x % (n + 1) == 0 { 2.0 } else { 0.1 }).collect();
        let mut batch = LaneBatch::assemble(
            n,
            11,
            |s| if s == 9 { &ones[..] } else { &eye[..] },
            |_, _| 0.0,
            |_, _| 1.0,
        );
        assert_eq!(batch.solve(), Err(9));
    }
}
