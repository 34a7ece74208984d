//! Synthetic instances and the benchmark, verification and report tables
//! behind the command-line tool.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::csvio::format_digits;
use crate::error::{Error, Result};
use crate::linalg::{Mat, Real};
use crate::mask::{MaskKind, DEFAULT_SIGMA};
use crate::metrics::SweepRow;
use crate::solver::{
    batched_extra_bytes, rowwise_working_bytes, solve_batched_stack, solve_full_oracle, solve_rowwise,
    Problem, SolveOptions, DEFAULT_LAMBDA,
};
use crate::spectral::{SpectralDescriptors, Spectrum};
use crate::tangent::{apply, block_matrix, frame_rotation_diagnostic, FrameRotation, GradientTransform, TangentField, Variant};

pub const DEFAULT_MEM_CAP_BYTES: u64 = 1 << 30;

/// Largest `k` at which `verify` also runs the dense oracle.
pub const VERIFY_ORACLE_MAX_K: usize = 32;

pub const BENCH_HEADER: &str = "k,solver,median_ms,max_abs_diff,peak_extra_bytes,speedup,status";
pub const MEMORY_HEADER: &str = "k,precision,embedded_bytes,loop_bytes,ratio";
pub const SWEEP_HEADER: &str = "r,predictor,metric,value,degenerate_flag";
pub const VERIFY_HEADER: &str = "k,seed,comparison,max_abs_diff,tolerance,passed";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    pub fn name(self) -> &'static str {
        match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        }
    }

    pub fn bytes(self) -> usize {
        match self {
            Precision::F32 => 4,
            Precision::F64 => 8,
        }
    }

    /// Max-abs agreement required between solvers.
    pub fn tolerance(self) -> f64 {
        match self {
            Precision::F32 => 1e-3,
            Precision::F64 => 1e-8,
        }
    }

    /// Significant digits for CSV output.
    pub fn digits(self) -> usize {
        match self {
            Precision::F32 => f32::ROUND_TRIP_DIGITS,
            Precision::F64 => f64::ROUND_TRIP_DIGITS,
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            _ => Err(Error::InvalidParameter(format!("unknown precision {s:?}"))),
        }
    }
}

/// Inclusive range `start, start + step, ..., <= stop`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KRange {
    pub start: usize,
    pub stop: usize,
    pub step: usize,
}

impl KRange {
    pub fn new(start: usize, stop: usize, step: usize) -> Result<Self> {
        if start == 0 || start > stop || step == 0 {
            return Err(Error::InvalidParameter(format!(
                "bad k range {start}..={stop} step {step}"
            )));
        }
        Ok(Self { start, stop, step })
    }

    pub fn values(&self) -> impl Iterator<Item = usize> {
        (self.start..=self.stop).step_by(self.step)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub k: KRange,
    /// Descriptor channels; `2 k` when `None`.
    pub d: Option<usize>,
    pub batch: usize,
    pub lambda: f64,
    pub mask: MaskKind,
    pub reps: usize,
    pub warmup: usize,
    pub seed: u64,
    pub precision: Precision,
    pub mem_cap_bytes: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            k: KRange {
                start: 20,
                stop: 300,
                step: 10,
            },
            d: None,
            batch: 1,
            lambda: DEFAULT_LAMBDA,
            mask: MaskKind::Commutativity,
            reps: 10,
            warmup: 3,
            seed: 0,
            precision: Precision::F64,
            mem_cap_bytes: DEFAULT_MEM_CAP_BYTES,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        KRange::new(self.k.start, self.k.stop, self.k.step)?;
        if self.batch == 0 || self.reps == 0 || self.d == Some(0) {
            return Err(Error::InvalidParameter(
                "batch, reps and d must be at least 1".into(),
            ));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidLambda(self.lambda));
        }
        if let MaskKind::Resolvent { sigma } = self.mask {
            if !(sigma > 0.0) {
                return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
            }
        }
        Ok(())
    }

    pub fn d_for(&self, k: usize) -> usize {
        self.d.unwrap_or(2 * k)
    }

    /// Seed of the `j`-th map at resolution `k`.
    pub fn instance_seed(&self, k: usize, j: usize) -> u64 {
        self.seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add((k as u64) << 20)
            .wrapping_add(j as u64)
    }

    fn problems(&self, k: usize) -> Result<Vec<(u64, Problem)>> {
        (0..self.batch)
            .map(|j| {
                let seed = self.instance_seed(k, j);
                let p = generate_instance(k, self.d_for(k), seed)
                    .problem(self.mask, self.lambda)
                    .map_err(|e| tag(k, seed, e))?;
                Ok((seed, p))
            })
            .collect()
    }
}

pub fn default_resolvent() -> MaskKind {
    MaskKind::Resolvent {
        sigma: DEFAULT_SIGMA,
    }
}

fn tag(k: usize, seed: u64, e: Error) -> Error {
    match e {
        e @ Error::Instance { .. } => e,
        e => Error::Instance {
            k,
            seed,
            source: Box::new(e),
        },
    }
}

/// Two synthetic spectra and descriptor matrices.
#[derive(Clone, Debug)]
pub struct Instance {
    pub spectra: (Spectrum, Spectrum),
    pub descriptors: (SpectralDescriptors, SpectralDescriptors),
}

impl Instance {
    pub fn problem(&self, mask: MaskKind, lambda: f64) -> Result<Problem> {
        let m = mask.build(self.spectra.0.eigenvalues(), self.spectra.1.eigenvalues())?;
        Problem::new(self.descriptors.0.clone(), self.descriptors.1.clone(), m, lambda)
    }
}

/// Eigenvalues are cumulative sums of increments drawn from `[0.05, 1)`,
/// starting at 0; descriptor entries are standard normal over `sqrt(d)`.
pub fn generate_instance(k: usize, d: usize, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spectrum = |rng: &mut ChaCha8Rng| {
        let mut acc = 0.0;
        let vals = (0..k)
            .map(|_| {
                let out = acc;
                acc += rng.random_range(0.05..1.0);
                out
            })
            .collect();
        Spectrum::new(vals, None).expect("ascending by construction")
    };
    let s1 = spectrum(&mut rng);
    let s2 = spectrum(&mut rng);
    let scale = 1.0 / (d as f64).sqrt();
    let desc = |rng: &mut ChaCha8Rng| {
        let m = Mat::from_fn(k, d, |_, _| rng.sample::<f64, _>(StandardNormal) * scale);
        SpectralDescriptors::new(m).expect("finite by construction")
    };
    let a = desc(&mut rng);
    let b = desc(&mut rng);
    Instance {
        spectra: (s1, s2),
        descriptors: (a, b),
    }
}

/// Median of `reps` samples after `warmup` discarded ones. Each call of
/// `sample` returns the duration it measured.
pub fn median_time(warmup: usize, reps: usize, mut sample: impl FnMut() -> Result<Duration>) -> Result<Duration> {
    for _ in 0..warmup {
        sample()?;
    }
    let mut times = (0..reps.max(1)).map(|_| sample()).collect::<Result<Vec<_>>>()?;
    times.sort();
    let n = times.len();
    Ok(if n % 2 == 1 {
        times[n / 2]
    } else {
        (times[n / 2 - 1] + times[n / 2]) / 2
    })
}

fn max_diff<T: Real>(a: &Mat<T>, b: &Mat<T>) -> Result<f64> {
    Ok(a.max_abs_diff(b)?.to_f64())
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyRow {
    pub k: usize,
    pub seed: u64,
    pub comparison: &'static str,
    pub max_abs_diff: f64,
    pub tolerance: f64,
}

impl VerifyRow {
    pub fn passed(&self) -> bool {
        self.max_abs_diff <= self.tolerance
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyReport {
    pub rows: Vec<VerifyRow>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(VerifyRow::passed)
    }

    pub fn write_csv<W: Write>(&self, mut out: W, precision: Precision) -> Result<()> {
        writeln!(out, "{VERIFY_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.k,
                r.seed,
                r.comparison,
                format_digits(r.max_abs_diff, precision.digits()),
                format_digits(r.tolerance, precision.digits()),
                u8::from(r.passed())
            )?;
        }
        Ok(())
    }
}

/// Cross-checks the solvers on every `k` of the range: row-wise against
/// batched always, and both against the dense oracle for small `k`.
pub fn verify(cfg: &BenchConfig, inject_fault: bool) -> Result<VerifyReport> {
    cfg.validate()?;
    match cfg.precision {
        Precision::F64 => verify_as::<f64>(cfg, inject_fault),
        Precision::F32 => verify_as::<f32>(cfg, inject_fault),
    }
}

fn verify_as<T: Real>(cfg: &BenchConfig, inject_fault: bool) -> Result<VerifyReport> {
    let tol = cfg.precision.tolerance();
    let opts = SolveOptions {
        mem_cap_bytes: Some(cfg.mem_cap_bytes),
        inject_fault,
        ..SolveOptions::default()
    };
    let mut report = VerifyReport::default();
    for k in cfg.k.values() {
        let problems = cfg.problems(k)?;
        let seed = problems[0].0;
        let cast: Vec<Problem<T>> = problems.iter().map(|(_, p)| p.cast()).collect();
        let stack = solve_batched_stack(&cast, &opts).map_err(|e| tag(k, seed, e))?;
        for ((seed, _), (p, batched)) in problems.iter().zip(cast.iter().zip(&stack.maps)) {
            let seed = *seed;
            let row = solve_rowwise(p, &opts).map_err(|e| tag(k, seed, e))?.map;
            let mut push = |comparison, max_abs_diff| {
                report.rows.push(VerifyRow {
                    k,
                    seed,
                    comparison,
                    max_abs_diff,
                    tolerance: tol,
                })
            };
            push("rowwise-batched", max_diff(row.values(), batched.values())?);
            if k <= VERIFY_ORACLE_MAX_K {
                let full = solve_full_oracle(p).map_err(|e| tag(k, seed, e))?;
                push("rowwise-oracle", max_diff(row.values(), full.values())?);
                push("batched-oracle", max_diff(batched.values(), full.values())?);
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub k: usize,
    pub solver: &'static str,
    /// `None` when the row was skipped.
    pub median_ms: Option<f64>,
    pub max_abs_diff: Option<f64>,
    pub peak_extra_bytes: u64,
    pub speedup: Option<f64>,
    pub status: &'static str,
}

/// Times both solvers at every `k`. Batched points above the memory cap are
/// reported with status `over_mem_cap` instead of being run.
pub fn bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    bench_with(cfg, |_| {})
}

/// As [`bench`], calling `progress` after each `k`.
pub fn bench_with(cfg: &BenchConfig, mut progress: impl FnMut(&[BenchRow])) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for k in cfg.k.values() {
        let pair = match cfg.precision {
            Precision::F64 => bench_point::<f64>(cfg, k)?,
            Precision::F32 => bench_point::<f32>(cfg, k)?,
        };
        rows.extend(pair);
        progress(&rows[rows.len() - 2..]);
    }
    Ok(rows)
}

fn bench_point<T: Real>(cfg: &BenchConfig, k: usize) -> Result<[BenchRow; 2]> {
    let problems = cfg.problems(k)?;
    let seed = problems[0].0;
    let cast: Vec<Problem<T>> = problems.iter().map(|(_, p)| p.cast()).collect();
    let opts = SolveOptions::default();
    let t = |e| tag(k, seed, e);

    let mut reference = Vec::new();
    let row_time = median_time(cfg.warmup, cfg.reps, || {
        let mut total = Duration::ZERO;
        reference.clear();
        for p in &cast {
            let r = solve_rowwise(p, &opts)?;
            total += r.wall_time;
            reference.push(r.map);
        }
        Ok(total)
    })
    .map_err(t)?;
    let row_ms = row_time.as_secs_f64() * 1e3;
    let rowwise = BenchRow {
        k,
        solver: "rowwise",
        median_ms: Some(row_ms),
        max_abs_diff: Some(0.0),
        peak_extra_bytes: rowwise_working_bytes::<T>(cfg.batch, k),
        speedup: Some(1.0),
        status: "ok",
    };

    let extra = batched_extra_bytes::<T>(cfg.batch, k);
    if extra > cfg.mem_cap_bytes {
        let skipped = BenchRow {
            k,
            solver: "batched",
            median_ms: None,
            max_abs_diff: None,
            peak_extra_bytes: extra,
            speedup: None,
            status: "over_mem_cap",
        };
        return Ok([rowwise, skipped]);
    }
    let opts = SolveOptions {
        mem_cap_bytes: Some(cfg.mem_cap_bytes),
        ..SolveOptions::default()
    };
    let mut diff = 0.0f64;
    let batched_time = median_time(cfg.warmup, cfg.reps, || {
        let r = solve_batched_stack(&cast, &opts)?;
        for (c, want) in r.maps.iter().zip(&reference) {
            diff = diff.max(max_diff(c.values(), want.values())?);
        }
        Ok(r.wall_time)
    })
    .map_err(t)?;
    let bat_ms = batched_time.as_secs_f64() * 1e3;
    let batched = BenchRow {
        k,
        solver: "batched",
        median_ms: Some(bat_ms),
        max_abs_diff: Some(diff),
        peak_extra_bytes: extra,
        speedup: Some(row_ms / bat_ms),
        status: "ok",
    };
    Ok([rowwise, batched])
}

/// Comment lines placed before the bench CSV.
pub fn bench_report_header(cfg: &BenchConfig) -> Vec<String> {
    let mask = match cfg.mask {
        MaskKind::Commutativity => "comm".to_string(),
        MaskKind::Resolvent { sigma } => format!("resolvent(sigma={sigma})"),
    };
    vec![
        format!(
            "# timing: monotonic clock, median of {} reps after {} warmup reps; instance and mask construction excluded",
            cfg.reps, cfg.warmup
        ),
        "# parallelism: single thread, CPU only, no device synchronization needed".to_string(),
        format!(
            "# config: k={}..={} step {}, d={}, batch={}, lambda={}, mask={}, precision={}, seed={}, mem_cap_bytes={}",
            cfg.k.start,
            cfg.k.stop,
            cfg.k.step,
            cfg.d.map_or("2k".to_string(), |d| d.to_string()),
            cfg.batch,
            cfg.lambda,
            mask,
            cfg.precision,
            cfg.seed,
            cfg.mem_cap_bytes
        ),
        "# reference (published, GPU hardware): k=200 rowwise 233.6 ms, batched 7.1 ms, speedup ~33x".to_string(),
    ]
}

pub fn write_bench_csv<W: Write>(mut out: W, cfg: &BenchConfig, rows: &[BenchRow]) -> Result<()> {
    for line in bench_report_header(cfg) {
        writeln!(out, "{line}")?;
    }
    writeln!(out, "{BENCH_HEADER}")?;
    for r in rows {
        write_bench_row(&mut out, cfg.precision, r)?;
    }
    Ok(())
}

pub fn write_bench_row<W: Write>(mut out: W, precision: Precision, r: &BenchRow) -> Result<()> {
    let digits = precision.digits();
    // Timings are measured in f64 regardless of the solve precision.
    let opt = |x: Option<f64>, d: usize| x.map_or(String::new(), |v| format_digits(v, d));
    writeln!(
        out,
        "{},{},{},{},{},{},{}",
        r.k,
        r.solver,
        opt(r.median_ms, f64::ROUND_TRIP_DIGITS),
        opt(r.max_abs_diff, digits),
        r.peak_extra_bytes,
        opt(r.speedup, f64::ROUND_TRIP_DIGITS),
        r.status
    )?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MemoryRow {
    pub k: usize,
    pub precision: Precision,
    pub embedded_bytes: u64,
    pub loop_bytes: u64,
    pub ratio: u64,
}

/// Analytic extra memory of the batched path against the loop's working set.
pub fn memory_table(k: KRange, batch: usize, precisions: &[Precision]) -> Vec<MemoryRow> {
    let mut rows = Vec::new();
    for k in k.values() {
        for &p in precisions {
            let (embedded, looped) = match p {
                Precision::F32 => (batched_extra_bytes::<f32>(batch, k), rowwise_working_bytes::<f32>(batch, k)),
                Precision::F64 => (batched_extra_bytes::<f64>(batch, k), rowwise_working_bytes::<f64>(batch, k)),
            };
            rows.push(MemoryRow {
                k,
                precision: p,
                embedded_bytes: embedded,
                loop_bytes: looped,
                ratio: embedded / looped,
            });
        }
    }
    rows
}

pub fn write_memory_csv<W: Write>(mut out: W, rows: &[MemoryRow]) -> Result<()> {
    writeln!(out, "{MEMORY_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.k, r.precision, r.embedded_bytes, r.loop_bytes, r.ratio
        )?;
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            format_digits(row.r, f64::ROUND_TRIP_DIGITS),
            row.predictor,
            row.metric,
            format_digits(row.value.value, f64::ROUND_TRIP_DIGITS),
            u8::from(row.value.degenerate)
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GradfeatReport {
    pub checks: Vec<Check>,
}

impl GradfeatReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Number of random draws used by [`gradfeat_check`].
pub const GRADFEAT_DRAWS: usize = 100;

fn random_mat(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn block_form(variant: Variant, w: &GradientTransform, z: &TangentField) -> Mat {
    let d = w.channels();
    Mat::from_fn(z.vertices(), d, |v, i| {
        let (xi, yi) = (z.x()[(v, i)], z.y()[(v, i)]);
        (0..d)
            .map(|j| {
                let b = block_matrix(variant, w.a_re()[(i, j)], w.a_im()[(i, j)]);
                let (xj, yj) = (z.x()[(v, j)], z.y()[(v, j)]);
                xi * (b[0][0] * xj + b[0][1] * yj) + yi * (b[1][0] * xj + b[1][1] * yj)
            })
            .sum()
    })
}

/// Algebraic checks of both gradient-feature variants on `channels x
/// vertices` random fields.
pub fn gradfeat_check(channels: usize, vertices: usize, seed: u64) -> Result<GradfeatReport> {
    if channels == 0 || vertices == 0 {
        return Err(Error::InvalidParameter("channels and vertices must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angles: Vec<f64> = (1..=8).map(|i| i as f64 * std::f64::consts::PI / 4.5).collect();
    let mut block_err = 0.0f64;
    let mut invariance_err = 0.0f64;
    let mut zero_turn_err = 0.0f64;
    let mut coincidence_err = 0.0f64;
    let mut sensitive = 0;
    for _ in 0..GRADFEAT_DRAWS {
        let mut a_im = random_mat(channels, channels, &mut rng);
        // Keep the imaginary part away from zero so the sensitivity test is meaningful.
        a_im.as_mut_slice().iter_mut().for_each(|x| *x += x.signum() * 0.1);
        let w = GradientTransform::new(random_mat(channels, channels, &mut rng), a_im)?;
        let z = TangentField::new(
            random_mat(vertices, channels, &mut rng),
            random_mat(vertices, channels, &mut rng),
        )?;
        let base_a = apply(Variant::A, &w, &z)?;
        let base_b = apply(Variant::B, &w, &z)?;
        block_err = block_err
            .max(base_a.max_abs_diff(&block_form(Variant::A, &w, &z))?)
            .max(base_b.max_abs_diff(&block_form(Variant::B, &w, &z))?);
        for &theta in &angles {
            let (a, _) = frame_rotation_diagnostic(&w, &z, &FrameRotation::Global(theta))?;
            invariance_err = invariance_err.max(a.max_abs_diff(&base_a)?);
        }
        let (a0, b0) = frame_rotation_diagnostic(&w, &z, &FrameRotation::Global(0.0))?;
        zero_turn_err = zero_turn_err
            .max(a0.max_abs_diff(&base_a)?)
            .max(b0.max_abs_diff(&base_b)?);
        let theta = rng.random_range(0.1..std::f64::consts::PI - 0.1);
        let (_, b) = frame_rotation_diagnostic(&w, &z, &FrameRotation::Global(theta))?;
        if b.max_abs_diff(&base_b)? > 1e-6 {
            sensitive += 1;
        }
        let w_real = GradientTransform::new(w.a_re().clone(), Mat::zeros(channels, channels))?;
        let z_real = TangentField::new(z.x().clone(), Mat::zeros(vertices, channels))?;
        coincidence_err = coincidence_err
            .max(apply(Variant::A, &w_real, &z_real)?.max_abs_diff(&apply(Variant::B, &w_real, &z_real)?)?);
    }
    let b11 = block_matrix(Variant::B, 1.0, 1.0);
    let (s, c) = std::f64::consts::FRAC_PI_4.sin_cos();
    let r45 = [[c, -s], [s, c]];
    let r45_err = (0..4)
        .map(|e| (b11[e / 2][e % 2] - std::f64::consts::SQRT_2 * r45[e / 2][e % 2]).abs())
        .fold(0.0, f64::max);

    let need = GRADFEAT_DRAWS - GRADFEAT_DRAWS / 100;
    let checks = vec![
        Check {
            name: "block_form_equivalence",
            passed: block_err <= 1e-12,
            detail: format!("max abs diff {block_err:e} over {GRADFEAT_DRAWS} draws, both variants"),
        },
        Check {
            name: "variant_a_frame_invariance",
            passed: invariance_err <= 1e-10,
            detail: format!("max abs diff {invariance_err:e} over {} angles", angles.len()),
        },
        Check {
            name: "zero_rotation_identity",
            passed: zero_turn_err == 0.0,
            detail: format!("max abs diff {zero_turn_err:e}"),
        },
        Check {
            name: "variant_b_frame_sensitivity",
            passed: sensitive >= need,
            detail: format!("{sensitive}/{GRADFEAT_DRAWS} draws changed by more than 1e-6"),
        },
        Check {
            name: "real_coincidence",
            passed: coincidence_err <= 1e-12,
            detail: format!("max abs diff {coincidence_err:e} with a_im = 0, y = 0"),
        },
        Check {
            name: "variant_b_block_is_scaled_r45",
            passed: r45_err <= 1e-12,
            detail: format!("max abs diff {r45_err:e}"),
        },
    ];
    Ok(GradfeatReport { checks })
}
