//! One-period transition operator between rebalancing dates.
//!
//! The value field is treated as the piecewise-bilinear interpolant of its
//! nodal values (in log coordinates). Its conditional expectation over one
//! period is then an exact discrete correlation with the weights
//!
//! ```text
//! w_j = E[ hat(X_s / ds - j_s) * hat(X_b / db - j_b) ]
//! ```
//!
//! where `X` is the joint log increment and `hat` the unit tent function.
//! The weights come from the characteristic function times the Fourier
//! transform of the tent, summed over oversampled frequencies and folded
//! onto the padded lattice before a single inverse FFT. The correlation
//! itself is evaluated by FFT on a lattice padded with edge values.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::lattice::{GridSpec, ValueField};
use crate::market::MarketParams;

const SUPPORT_TAIL: f64 = 1e-10;
const MASS_TOLERANCE: f64 = 1e-6;
const SPECTRAL_TAIL: f64 = 1e-8;
const MAX_OVERSAMPLE: usize = 64;
const MAX_FREQUENCIES: usize = 1 << 27;

#[derive(Clone)]
struct Plans {
    fwd_s: Arc<dyn Fft<f64>>,
    inv_s: Arc<dyn Fft<f64>>,
    fwd_b: Arc<dyn Fft<f64>>,
    inv_b: Arc<dyn Fft<f64>>,
}

/// Transition weights for one period, for the solvent lattice and for the
/// reflected (debt) lattice.
#[derive(Clone)]
pub struct GreensFunction {
    pub dt: f64,
    pub spec: GridSpec,
    /// Padded lattice size per axis.
    pub pad_s: usize,
    pub pad_b: usize,
    /// Weights over offsets `(j_s, j_b)`, stored with wrap-around:
    /// entry `[(j_s mod pad_s) * pad_b + (j_b mod pad_b)]`.
    pub kernel: Vec<f64>,
    /// Weights over `log b'` offsets for the debt process, wrapped the same way.
    pub insolvent_kernel: Vec<f64>,
    /// Negative mass removed by clipping, before renormalization.
    pub clipped_mass: f64,
    pub insolvent_clipped_mass: f64,
    spectrum: Vec<Complex64>,
    insolvent_spectrum: Vec<Complex64>,
    plans: Plans,
}

impl fmt::Debug for GreensFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GreensFunction")
            .field("dt", &self.dt)
            .field("spec", &self.spec)
            .field("pad_s", &self.pad_s)
            .field("pad_b", &self.pad_b)
            .field("clipped_mass", &self.clipped_mass)
            .field("insolvent_clipped_mass", &self.insolvent_clipped_mass)
            .finish_non_exhaustive()
    }
}

#[inline]
fn sinc2(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0
    } else {
        let s = x.sin() / x;
        s * s
    }
}

/// Smallest power-of-two oversampling factor for which the Gaussian part of
/// the characteristic function has decayed below `SPECTRAL_TAIL` at the
/// highest sampled frequency.
fn oversample(sigma: f64, dt: f64, delta: f64) -> usize {
    let mut alpha = 1;
    while alpha < MAX_OVERSAMPLE {
        let w = alpha as f64 * std::f64::consts::PI / delta;
        if (-0.5 * sigma * sigma * dt * w * w).exp() <= SPECTRAL_TAIL {
            break;
        }
        alpha *= 2;
    }
    alpha
}

/// Signed frequency index for position `k` of an oversampled band of
/// `alpha * p` frequencies centered on zero.
#[inline]
fn band_index(k: usize, len: usize) -> i64 {
    let k = k as i64;
    let len = len as i64;
    if k < len / 2 {
        k
    } else {
        k - len
    }
}

/// Unclipped one-dimensional tent weights over `p` wrapped offsets.
fn tent_weights_1d(
    phi: impl Fn(f64) -> Complex64,
    delta: f64,
    p: usize,
    alpha: usize,
    planner: &mut FftPlanner<f64>,
) -> Vec<f64> {
    let band = alpha * p;
    let mut folded = vec![Complex64::new(0.0, 0.0); p];
    for k in 0..band {
        let n = band_index(k, band);
        let w = 2.0 * std::f64::consts::PI * n as f64 / (p as f64 * delta);
        folded[n.rem_euclid(p as i64) as usize] += sinc2(0.5 * w * delta) * phi(w);
    }
    planner.plan_fft_forward(p).process(&mut folded);
    folded.iter().map(|c| c.re / p as f64).collect()
}

/// Smallest `k` such that the offsets `-k..=k` carry all but `SUPPORT_TAIL`
/// of the mass of wrapped weights `w`.
fn support_radius(w: &[f64]) -> usize {
    let p = w.len();
    let total: f64 = w.iter().map(|v| v.max(0.0)).sum();
    let mut acc = w[0].max(0.0);
    let mut k = 0;
    while acc < total * (1.0 - SUPPORT_TAIL) && k < p / 2 {
        k += 1;
        acc += w[k].max(0.0);
        if k < p - k {
            acc += w[p - k].max(0.0);
        }
    }
    k
}

fn padded_len(n: usize, radius: usize) -> usize {
    (n + 2 * radius).next_power_of_two().max(2 * n)
}

fn transpose(src: &[Complex64], rows: usize, cols: usize, dst: &mut [Complex64]) {
    const BLOCK: usize = 32;
    for r0 in (0..rows).step_by(BLOCK) {
        for c0 in (0..cols).step_by(BLOCK) {
            for r in r0..(r0 + BLOCK).min(rows) {
                for c in c0..(c0 + BLOCK).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

/// Index into the data axis for a padded position: the first half of the
/// padding repeats the last node, the second half (which wraps to negative
/// offsets) repeats the first node.
#[inline]
fn edge_source(pos: usize, n: usize, p: usize) -> usize {
    if pos < n {
        pos
    } else if pos - n < (p - n) / 2 {
        n - 1
    } else {
        0
    }
}

/// Build the one-period transition weights for `spec` under market `m`.
pub fn build_green(m: &MarketParams, spec: GridSpec, dt: f64) -> Result<GreensFunction> {
    if !(dt > 0.0) {
        return Err(Error::Argument(format!("dt must be positive, got {dt}")));
    }
    m.validate()?;
    spec.validate()?;
    let (n_s, n_b) = (spec.n_s, spec.n_b);
    let (ds, db) = (spec.d_log_s(), spec.d_log_b());
    let mut planner = FftPlanner::new();

    let alpha_s0 = oversample(m.stock.sigma, dt, ds);
    let alpha_b0 = oversample(m.bond.sigma, dt, db);

    let phi_s = |w: f64| (dt * m.char_exponent(w, 0.0, false)).exp();
    let phi_b = |w: f64| (dt * m.char_exponent(0.0, w, false)).exp();
    let phi_d = |w: f64| (dt * m.char_exponent(0.0, w, true)).exp();

    let probe_s = 8 * n_s;
    let probe_b = 8 * n_b;
    let k_s = support_radius(&tent_weights_1d(phi_s, ds, probe_s, alpha_s0, &mut planner));
    let k_b = support_radius(&tent_weights_1d(phi_b, db, probe_b, alpha_b0, &mut planner))
        .max(support_radius(&tent_weights_1d(phi_d, db, probe_b, alpha_b0, &mut planner)));
    let pad_s = padded_len(n_s, k_s);
    let pad_b = padded_len(n_b, k_b);

    let (mut alpha_s, mut alpha_b) = (alpha_s0, alpha_b0);
    while alpha_s * pad_s * alpha_b * pad_b > MAX_FREQUENCIES && (alpha_s > 1 || alpha_b > 1) {
        if alpha_s >= alpha_b {
            alpha_s /= 2;
        } else {
            alpha_b /= 2;
        }
    }

    // Joint weights: separable one-dimensional factors times the
    // diffusion cross term, folded onto the padded lattice.
    let band_s = alpha_s * pad_s;
    let band_b = alpha_b * pad_b;
    let two_pi = 2.0 * std::f64::consts::PI;
    let cross = -m.rho_sb * m.stock.sigma * m.bond.sigma * dt;
    let omega_s: Vec<f64> = (0..band_s)
        .map(|k| two_pi * band_index(k, band_s) as f64 / (pad_s as f64 * ds))
        .collect();
    let omega_b: Vec<f64> = (0..band_b)
        .map(|k| two_pi * band_index(k, band_b) as f64 / (pad_b as f64 * db))
        .collect();
    let fac_s: Vec<Complex64> = omega_s
        .iter()
        .map(|&w| sinc2(0.5 * w * ds) * phi_s(w))
        .collect();
    let fac_b: Vec<Complex64> = omega_b
        .iter()
        .map(|&w| sinc2(0.5 * w * db) * phi_b(w))
        .collect();
    let mut folded = vec![Complex64::new(0.0, 0.0); pad_s * pad_b];
    for ks in 0..band_s {
        let fs = fac_s[ks];
        if fs.norm_sqr() < 1e-40 {
            continue;
        }
        let row = (band_index(ks, band_s).rem_euclid(pad_s as i64) as usize) * pad_b;
        let ws = omega_s[ks];
        for kb in 0..band_b {
            let mut v = fs * fac_b[kb];
            if cross != 0.0 {
                v *= (cross * ws * omega_b[kb]).exp();
            }
            folded[row + kb % pad_b] += v;
        }
    }
    let plans = Plans {
        fwd_s: planner.plan_fft_forward(pad_s),
        inv_s: planner.plan_fft_inverse(pad_s),
        fwd_b: planner.plan_fft_forward(pad_b),
        inv_b: planner.plan_fft_inverse(pad_b),
    };
    let mut scratch = vec![Complex64::new(0.0, 0.0); pad_s * pad_b];
    fft2_forward(&plans, &mut folded, &mut scratch, pad_s, pad_b);
    // `folded` now holds the transform in transposed layout.
    let scale = 1.0 / (pad_s * pad_b) as f64;
    let mut kernel = vec![0.0; pad_s * pad_b];
    for jb in 0..pad_b {
        for js in 0..pad_s {
            kernel[js * pad_b + jb] = folded[jb * pad_s + js].re * scale;
        }
    }
    check_window(&kernel, pad_s, pad_b, n_s, n_b)?;
    let clipped_mass = clip_and_normalize(&mut kernel);

    let mut insolvent_kernel = tent_weights_1d(phi_d, db, pad_b, alpha_b0, &mut planner);
    check_window(&insolvent_kernel, 1, pad_b, 1, n_b)?;
    let insolvent_clipped_mass = clip_and_normalize(&mut insolvent_kernel);

    let mut spectrum: Vec<Complex64> = kernel.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2_forward(&plans, &mut spectrum, &mut scratch, pad_s, pad_b);
    for c in spectrum.iter_mut() {
        *c = c.conj();
    }
    let mut insolvent_spectrum: Vec<Complex64> = insolvent_kernel
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    plans.fwd_b.process(&mut insolvent_spectrum);
    for c in insolvent_spectrum.iter_mut() {
        *c = c.conj();
    }

    Ok(GreensFunction {
        dt,
        spec,
        pad_s,
        pad_b,
        kernel,
        insolvent_kernel,
        clipped_mass,
        insolvent_clipped_mass,
        spectrum,
        insolvent_spectrum,
        plans,
    })
}

/// Fails when the weights leave more than `MASS_TOLERANCE` outside the
/// offsets that the padding can absorb without wrap-around.
fn check_window(w: &[f64], pad_s: usize, pad_b: usize, n_s: usize, n_b: usize) -> Result<()> {
    let rs = (pad_s - n_s) / 2;
    let rb = (pad_b - n_b) / 2;
    let within = |j: usize, p: usize, r: usize| j <= r || p - j <= r;
    let mut inside = 0.0;
    for js in 0..pad_s {
        if pad_s > 1 && !within(js, pad_s, rs) {
            continue;
        }
        for jb in 0..pad_b {
            if within(jb, pad_b, rb) {
                inside += w[js * pad_b + jb];
            }
        }
    }
    if (inside - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::Resolution(format!(
            "transition weights lose {:.3e} of their mass to wrap-around or truncation",
            (inside - 1.0).abs()
        )));
    }
    Ok(())
}

fn clip_and_normalize(w: &mut [f64]) -> f64 {
    let mut clipped = 0.0;
    for v in w.iter_mut() {
        if *v < 0.0 {
            clipped -= *v;
            *v = 0.0;
        }
    }
    let total: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= total;
    }
    clipped
}

/// Row transforms, transpose, row transforms. Leaves the result in
/// transposed (`pad_b` rows of `pad_s`) layout in `data`.
fn fft2_forward(
    plans: &Plans,
    data: &mut [Complex64],
    scratch: &mut [Complex64],
    pad_s: usize,
    pad_b: usize,
) {
    plans.fwd_b.process(data);
    transpose(data, pad_s, pad_b, scratch);
    plans.fwd_s.process(scratch);
    data.copy_from_slice(scratch);
}

/// Inverse of [`fft2_forward`] without the `1 / (pad_s * pad_b)` factor.
fn fft2_inverse(
    plans: &Plans,
    data: &mut [Complex64],
    scratch: &mut [Complex64],
    pad_s: usize,
    pad_b: usize,
) {
    plans.inv_s.process(data);
    transpose(data, pad_b, pad_s, scratch);
    plans.inv_b.process(scratch);
    data.copy_from_slice(scratch);
}

impl GreensFunction {
    /// Weight at offset `(j_s, j_b)` in nodes.
    pub fn weight(&self, j_s: i64, j_b: i64) -> f64 {
        let r = j_s.rem_euclid(self.pad_s as i64) as usize;
        let c = j_b.rem_euclid(self.pad_b as i64) as usize;
        self.kernel[r * self.pad_b + c]
    }

    fn signed(j: usize, p: usize) -> i64 {
        if j < p / 2 {
            j as i64
        } else {
            j as i64 - p as i64
        }
    }

    /// Mean and variance of the log increments implied by the weights,
    /// as `((mean_s, var_s), (mean_b, var_b))`.
    pub fn kernel_moments(&self) -> ((f64, f64), (f64, f64)) {
        let (ds, db) = (self.spec.d_log_s(), self.spec.d_log_b());
        let (mut m1s, mut m2s, mut m1b, mut m2b) = (0.0, 0.0, 0.0, 0.0);
        for js in 0..self.pad_s {
            let xs = Self::signed(js, self.pad_s) as f64 * ds;
            for jb in 0..self.pad_b {
                let w = self.kernel[js * self.pad_b + jb];
                if w == 0.0 {
                    continue;
                }
                let xb = Self::signed(jb, self.pad_b) as f64 * db;
                m1s += w * xs;
                m2s += w * xs * xs;
                m1b += w * xb;
                m2b += w * xb * xb;
            }
        }
        ((m1s, m2s - m1s * m1s), (m1b, m2b - m1b * m1b))
    }

    /// Mean and variance of the debt log increment implied by the weights.
    pub fn insolvent_moments(&self) -> (f64, f64) {
        let db = self.spec.d_log_b();
        let (mut m1, mut m2) = (0.0, 0.0);
        for (jb, &w) in self.insolvent_kernel.iter().enumerate() {
            let x = Self::signed(jb, self.pad_b) as f64 * db;
            m1 += w * x;
            m2 += w * x * x;
        }
        (m1, m2 - m1 * m1)
    }

    /// Write weights above `threshold` as CSV rows
    /// `branch,offset_log_s,offset_log_b,weight`.
    pub fn write_kernel_csv(&self, path: &Path, threshold: f64) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(out, "branch,offset_log_s,offset_log_b,weight").map_err(io)?;
        let (ds, db) = (self.spec.d_log_s(), self.spec.d_log_b());
        for js in 0..self.pad_s {
            for jb in 0..self.pad_b {
                let w = self.kernel[js * self.pad_b + jb];
                if w > threshold {
                    writeln!(
                        out,
                        "solvent,{},{},{:e}",
                        Self::signed(js, self.pad_s) as f64 * ds,
                        Self::signed(jb, self.pad_b) as f64 * db,
                        w
                    )
                    .map_err(io)?;
                }
            }
        }
        for (jb, &w) in self.insolvent_kernel.iter().enumerate() {
            if w > threshold {
                writeln!(
                    out,
                    "insolvent,0,{},{:e}",
                    Self::signed(jb, self.pad_b) as f64 * db,
                    w
                )
                .map_err(io)?;
            }
        }
        out.flush().map_err(io)
    }

    fn check_shape(&self, field: &ValueField) -> Result<()> {
        let n = self.spec.n_s * self.spec.n_b;
        if field.solvent.len() != n || field.insolvent.len() != n {
            return Err(Error::Argument(format!(
                "field has {}+{} entries, grid needs {n}+{n}",
                field.solvent.len(),
                field.insolvent.len()
            )));
        }
        Ok(())
    }

    /// Solvent part: correlate up to two real fields at once, packed as the
    /// real and imaginary parts of one complex array.
    fn correlate_pair(&self, a: &[f64], b: Option<&[f64]>, out_a: &mut [f64], out_b: Option<&mut [f64]>) {
        let (n_s, n_b) = (self.spec.n_s, self.spec.n_b);
        let (ps, pb) = (self.pad_s, self.pad_b);
        let mut buf = vec![Complex64::new(0.0, 0.0); ps * pb];
        for r in 0..ps {
            let src_r = edge_source(r, n_s, ps) * n_b;
            let row = &mut buf[r * pb..(r + 1) * pb];
            for (c, z) in row.iter_mut().enumerate() {
                let k = src_r + edge_source(c, n_b, pb);
                *z = Complex64::new(a[k], b.map_or(0.0, |b| b[k]));
            }
        }
        let mut scratch = vec![Complex64::new(0.0, 0.0); ps * pb];
        fft2_forward(&self.plans, &mut buf, &mut scratch, ps, pb);
        for (z, k) in buf.iter_mut().zip(&self.spectrum) {
            *z *= k;
        }
        fft2_inverse(&self.plans, &mut buf, &mut scratch, ps, pb);
        let scale = 1.0 / (ps * pb) as f64;
        for r in 0..n_s {
            for c in 0..n_b {
                out_a[r * n_b + c] = buf[r * pb + c].re * scale;
            }
        }
        if let Some(out_b) = out_b {
            for r in 0..n_s {
                for c in 0..n_b {
                    out_b[r * n_b + c] = buf[r * pb + c].im * scale;
                }
            }
        }
    }

    /// Debt part: every `log s` row is advanced independently along
    /// `log b'`; rows are packed two at a time.
    fn correlate_rows(&self, src: &[f64], out: &mut [f64]) {
        let (n_s, n_b) = (self.spec.n_s, self.spec.n_b);
        let pb = self.pad_b;
        let scale = 1.0 / pb as f64;
        let mut buf = vec![Complex64::new(0.0, 0.0); pb];
        let mut r = 0;
        while r < n_s {
            let r2 = (r + 1 < n_s).then_some(r + 1);
            for (c, z) in buf.iter_mut().enumerate() {
                let k = edge_source(c, n_b, pb);
                *z = Complex64::new(src[r * n_b + k], r2.map_or(0.0, |r2| src[r2 * n_b + k]));
            }
            self.plans.fwd_b.process(&mut buf);
            for (z, k) in buf.iter_mut().zip(&self.insolvent_spectrum) {
                *z *= k;
            }
            self.plans.inv_b.process(&mut buf);
            for c in 0..n_b {
                out[r * n_b + c] = buf[c].re * scale;
            }
            if let Some(r2) = r2 {
                for c in 0..n_b {
                    out[r2 * n_b + c] = buf[c].im * scale;
                }
            }
            r += 2;
        }
    }
}

/// Conditional expectation of `field` one period earlier.
pub fn advance(field: &ValueField, g: &GreensFunction) -> Result<ValueField> {
    Ok(advance_many(&[field], g)?.pop().expect("one field in, one out"))
}

/// [`advance`] for several fields sharing one set of transition weights.
pub fn advance_many(fields: &[&ValueField], g: &GreensFunction) -> Result<Vec<ValueField>> {
    for f in fields {
        g.check_shape(f)?;
    }
    let n = g.spec.n_s * g.spec.n_b;
    let mut out: Vec<ValueField> = fields
        .iter()
        .map(|f| ValueField {
            solvent: vec![0.0; n],
            insolvent: vec![0.0; n],
            time_label: f.time_label - g.dt,
        })
        .collect();
    let mut i = 0;
    while i < fields.len() {
        if i + 1 < fields.len() {
            let (head, tail) = out.split_at_mut(i + 1);
            g.correlate_pair(
                &fields[i].solvent,
                Some(&fields[i + 1].solvent),
                &mut head[i].solvent,
                Some(&mut tail[0].solvent),
            );
            i += 2;
        } else {
            g.correlate_pair(&fields[i].solvent, None, &mut out[i].solvent, None);
            i += 1;
        }
    }
    for (f, o) in fields.iter().zip(out.iter_mut()) {
        g.correlate_rows(&f.insolvent, &mut o.insolvent);
    }
    Ok(out)
}
