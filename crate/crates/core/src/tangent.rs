//! Spatial-gradient features from complex tangent fields.
//!
//! A tangent field stores, per vertex and channel, a 2-vector `(x, y)` in an
//! arbitrary local frame. A complex `D x D` transform `A = A_re + i A_im`
//! mixes channels and the feature is the per-channel inner product of the
//! field with its transform. The two variants differ only in the imaginary
//! part of the transformed field.

use crate::error::{mismatch, Error, Result};
use crate::linalg::Mat;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Rotation with isotropic scaling per channel pair.
    A,
    /// Fixed 45 degree blocks with anisotropic scaling.
    B,
}

/// Split real and imaginary planes, each `V x D`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentField {
    x: Mat,
    y: Mat,
}

impl TangentField {
    pub fn new(x: Mat, y: Mat) -> Result<Self> {
        if x.shape() != y.shape() {
            return Err(mismatch(
                "TangentField::new",
                format!("x {:?}, y {:?}", x.shape(), y.shape()),
            ));
        }
        if !x.all_finite() || !y.all_finite() {
            return Err(Error::InvalidParameter("tangent field has non-finite entries".into()));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &Mat {
        &self.x
    }

    pub fn y(&self) -> &Mat {
        &self.y
    }

    pub fn vertices(&self) -> usize {
        self.x.rows()
    }

    pub fn channels(&self) -> usize {
        self.x.cols()
    }

    /// Rotates every vector at vertex `v` by `angle(v)`.
    pub fn rotated(&self, angle: impl Fn(usize) -> f64) -> Self {
        let mut out = self.clone();
        for v in 0..self.vertices() {
            let (s, c) = angle(v).sin_cos();
            for ch in 0..self.channels() {
                let (x, y) = (self.x[(v, ch)], self.y[(v, ch)]);
                out.x[(v, ch)] = c * x - s * y;
                out.y[(v, ch)] = s * x + c * y;
            }
        }
        out
    }

    /// Gradients of the linear functions `f_c(p) = coeffs[c] . p` on a
    /// planar `n x n` grid with spacing `h`, split into two triangles per cell.
    ///
    /// Each triangle gradient is recovered from the three vertex values;
    /// vertices average their incident triangles and express the result in
    /// the local frame rotated by `frames[v]`.
    pub fn linear_gradients_on_grid(n: usize, h: f64, coeffs: &[[f64; 2]], frames: &[f64]) -> Result<Self> {
        if n < 2 || !(h > 0.0) {
            return Err(Error::InvalidParameter("grid needs n >= 2 and h > 0".into()));
        }
        let nv = n * n;
        if frames.len() != nv {
            return Err(mismatch(
                "linear_gradients_on_grid",
                format!("{} frames for {nv} vertices", frames.len()),
            ));
        }
        let pos = |v: usize| [(v % n) as f64 * h, (v / n) as f64 * h];
        let mut tris = Vec::with_capacity(2 * (n - 1) * (n - 1));
        for r in 0..n - 1 {
            for c in 0..n - 1 {
                let v = r * n + c;
                tris.push([v, v + 1, v + n + 1]);
                tris.push([v, v + n + 1, v + n]);
            }
        }

        let d = coeffs.len();
        let mut gx = Mat::zeros(nv, d);
        let mut gy = Mat::zeros(nv, d);
        let mut count = vec![0usize; nv];
        for t in &tris {
            let [p0, p1, p2] = t.map(pos);
            let e1 = [p1[0] - p0[0], p1[1] - p0[1]];
            let e2 = [p2[0] - p0[0], p2[1] - p0[1]];
            let det = e1[0] * e2[1] - e1[1] * e2[0];
            for (ch, a) in coeffs.iter().enumerate() {
                let f = |p: [f64; 2]| a[0] * p[0] + a[1] * p[1];
                let (d1, d2) = (f(p1) - f(p0), f(p2) - f(p0));
                // Solve [e1; e2] g = [d1; d2].
                let g = [(d1 * e2[1] - d2 * e1[1]) / det, (e1[0] * d2 - e2[0] * d1) / det];
                for &v in t {
                    gx[(v, ch)] += g[0];
                    gy[(v, ch)] += g[1];
                }
            }
            for &v in t {
                count[v] += 1;
            }
        }
        for v in 0..nv {
            let w = count[v] as f64;
            for ch in 0..d {
                gx[(v, ch)] /= w;
                gy[(v, ch)] /= w;
            }
        }
        Self::new(gx, gy).map(|z| z.rotated(|v| -frames[v]))
    }
}

/// Complex channel-mixing matrix, stored as two real `D x D` planes.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientTransform {
    a_re: Mat,
    a_im: Mat,
}

impl GradientTransform {
    pub fn new(a_re: Mat, a_im: Mat) -> Result<Self> {
        if !a_re.is_square() || a_re.shape() != a_im.shape() {
            return Err(mismatch(
                "GradientTransform::new",
                format!("a_re {:?}, a_im {:?}", a_re.shape(), a_im.shape()),
            ));
        }
        Ok(Self { a_re, a_im })
    }

    pub fn a_re(&self) -> &Mat {
        &self.a_re
    }

    pub fn a_im(&self) -> &Mat {
        &self.a_im
    }

    pub fn channels(&self) -> usize {
        self.a_re.rows()
    }
}

/// Per-vertex features `g = x .* (Az)_re + y .* (Az)_im`, `V x D`.
pub fn apply(variant: Variant, w: &GradientTransform, z: &TangentField) -> Result<Mat> {
    if w.channels() != z.channels() {
        return Err(mismatch(
            "apply",
            format!("transform has {} channels, field has {}", w.channels(), z.channels()),
        ));
    }
    // Row v of X A^T is A x_v.
    let re_x = z.x.matmul_t(&w.a_re)?;
    let im_y = z.y.matmul_t(&w.a_im)?;
    let az_re = re_x.sub(&im_y)?;
    let az_im = match variant {
        Variant::A => z.y.matmul_t(&w.a_re)?.add(&z.x.matmul_t(&w.a_im)?)?,
        Variant::B => re_x.add(&im_y)?,
    };
    z.x.hadamard(&az_re)?.add(&z.y.hadamard(&az_im)?)
}

pub fn apply_variant_a(w: &GradientTransform, z: &TangentField) -> Result<Mat> {
    apply(Variant::A, w, z)
}

pub fn apply_variant_b(w: &GradientTransform, z: &TangentField) -> Result<Mat> {
    apply(Variant::B, w, z)
}

/// The real `2 x 2` block acting on a channel pair for entry `a + i b`.
pub fn block_matrix(variant: Variant, a: f64, b: f64) -> [[f64; 2]; 2] {
    match variant {
        Variant::A => [[a, -b], [b, a]],
        Variant::B => [[a, -b], [a, b]],
    }
}

/// How tangent frames are rotated by [`frame_rotation_diagnostic`].
#[derive(Clone, Debug, PartialEq)]
pub enum FrameRotation {
    Global(f64),
    PerVertex(Vec<f64>),
}

/// Both variant outputs after rotating the tangent frames.
pub fn frame_rotation_diagnostic(
    w: &GradientTransform,
    z: &TangentField,
    rotation: &FrameRotation,
) -> Result<(Mat, Mat)> {
    let turned = match rotation {
        FrameRotation::Global(theta) => z.rotated(|_| *theta),
        FrameRotation::PerVertex(angles) => {
            if angles.len() != z.vertices() {
                return Err(mismatch(
                    "frame_rotation_diagnostic",
                    format!("{} angles for {} vertices", angles.len(), z.vertices()),
                ));
            }
            z.rotated(|v| angles[v])
        }
    };
    Ok((
        apply(Variant::A, w, &turned)?,
        apply(Variant::B, w, &turned)?,
    ))
}
