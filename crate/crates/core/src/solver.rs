//! Error-controlled solution of the regularized Volterra equation
//! `c(tau) = 1 + ∫₀^tau k(tau - s) c(s) ds` plus the photon-sector
//! unitarity audit.
//!
//! The default discretization is product integration with a piecewise-linear
//! amplitude: kernel interval moments are exact (see [`crate::kernels`]), so
//! the grid only has to resolve the amplitude, never the kernel's cutoff
//! oscillation. A plain nodal trapezoid scheme is kept alongside; it commutes
//! exactly with phase transformations and anchors the invariance tests.

use crate::complex::{cis, Complex, C64};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kernels::{Kappa0, Kappa1, KernelKind, SolverKernel};
use crate::params::Params;
use crate::precision::PrecisionConfig;
use crate::real::Real;
use rayon::prelude::*;
use serde::Serialize;

/// Discretization of the convolution integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Product trapezoid: exact kernel moments against a piecewise-linear
    /// amplitude.
    #[default]
    ProductTrapezoid,
    /// Nodal trapezoid on the full integrand.
    NodalTrapezoid,
}

/// Solver switches beyond the precision request.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub scheme: Scheme,
    /// Estimate the global error by comparing against a step-halved solve.
    pub estimate_error: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            scheme: Scheme::ProductTrapezoid,
            estimate_error: true,
        }
    }
}

/// Solution samples of the rescaled amplitude on a grid.
#[derive(Debug, Clone)]
pub struct Trajectory<R: Real> {
    pub grid: Grid,
    pub amplitude: Vec<Complex<R>>,
    pub params: Params,
    pub kernel: KernelKind,
    /// Global absolute error estimate from step halving (0 when disabled).
    pub est_error: f64,
    pub precision: PrecisionConfig,
    pub warnings: Vec<String>,
}

impl<R: Real> Trajectory<R> {
    /// Wrap externally computed samples (synthetic inputs, tests).
    pub fn synthetic(
        grid: Grid,
        amplitude: Vec<Complex<R>>,
        params: Params,
        kernel: KernelKind,
    ) -> Trajectory<R> {
        assert_eq!(grid.len(), amplitude.len());
        Trajectory {
            grid,
            amplitude,
            params,
            kernel,
            est_error: 0.0,
            precision: PrecisionConfig::default(),
            warnings: Vec::new(),
        }
    }

    pub fn abs2(&self, k: usize) -> f64 {
        self.amplitude[k].to_c64().norm_sqr()
    }

    /// CSV export: `tau,re_c,im_c,abs2,est_error`, full working precision.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "tau,re_c,im_c,abs2,est_error")?;
        let est = format!("{}", self.est_error);
        for (t, c) in self.grid.nodes().iter().zip(&self.amplitude) {
            writeln!(
                w,
                "{},{},{},{},{}",
                t,
                c.re.format_full(),
                c.im.format_full(),
                (c.re * c.re + c.im * c.im).format_full(),
                est
            )?;
        }
        Ok(())
    }
}

/// Photon-sector bookkeeping from [`unitarity_audit`].
#[derive(Debug, Clone, Serialize)]
pub struct UnitarityReport {
    pub taus: Vec<f64>,
    pub excited_prob: Vec<f64>,
    pub emitted_prob: Vec<f64>,
    pub defect: Vec<f64>,
}

/// Solve the Volterra equation for the rescaled amplitude with the given
/// exact kernel (`Kappa0Reg` or `Kappa1Reg`).
pub fn solve<R: Real>(
    params: &Params,
    kernel: KernelKind,
    grid: &Grid,
    prec: &PrecisionConfig,
) -> Result<Trajectory<R>> {
    solve_with_options(params, kernel, grid, prec, SolveOptions::default())
}

pub fn solve_with_options<R: Real>(
    params: &Params,
    kernel: KernelKind,
    grid: &Grid,
    prec: &PrecisionConfig,
    opts: SolveOptions,
) -> Result<Trajectory<R>> {
    prec.validate()?;
    let lifted = params.lift::<R>();
    let kern: Box<dyn SolverKernel<R>> = match kernel {
        KernelKind::Kappa0Reg => Box::new(Kappa0 { p: lifted }),
        KernelKind::Kappa1Reg => Box::new(Kappa1 { p: lifted }),
        other => {
            return Err(Error::UnsupportedKind(format!(
                "solve requires an exact kernel (Kappa0Reg/Kappa1Reg), got {other:?}"
            )))
        }
    };
    let mut warnings = Vec::new();
    if let Some(h0) = grid.first_step() {
        let resolve = 0.1 / params.lift::<f64>().lambda_c;
        if h0 > resolve {
            warnings.push(format!(
                "first step {h0:.3e} exceeds 0.1/lambda_c = {resolve:.3e}; the cutoff transient \
                 is integrated analytically but the amplitude near 0 is coarsely sampled"
            ));
        }
    }
    let one = |_t: R| Complex::<R>::one();
    let amplitude = solve_general(kern.as_ref(), &one, grid, opts.scheme)?;
    let mut est_error = 0.0;
    if opts.estimate_error && grid.len() > 1 {
        let fine = grid.halved();
        let fine_amp = solve_general(kern.as_ref(), &one, &fine, opts.scheme)?;
        est_error = amplitude
            .iter()
            .enumerate()
            .map(|(k, c)| (c.to_c64() - fine_amp[2 * k].to_c64()).abs())
            .fold(0.0, f64::max);
        if est_error > prec.abs_tol {
            return Err(Error::PrecisionExhausted(format!(
                "estimated error {est_error:.3e} exceeds abs_tol {:.1e}; refine the grid",
                prec.abs_tol
            )));
        }
    }
    // refuse runs whose smallest amplitude drowns in accumulated roundoff
    let n = grid.len() as f64;
    let noise_floor = R::eps() * n.sqrt();
    let min_abs = amplitude
        .iter()
        .map(|c| c.to_c64().abs())
        .fold(f64::INFINITY, f64::min);
    if min_abs > 0.0 && min_abs < 1e3 * noise_floor {
        let needed = R::digits() as f64 + (1e3 * noise_floor / min_abs).log10().ceil();
        return Err(Error::PrecisionExhausted(format!(
            "amplitudes reach {min_abs:.2e}, below 1e3 x roundoff floor {noise_floor:.2e}; \
             need about {needed:.0} working digits"
        )));
    }
    Ok(Trajectory {
        grid: grid.clone(),
        amplitude,
        params: *params,
        kernel,
        est_error,
        precision: *prec,
        warnings,
    })
}

/// Engine shared by both kernels and schemes; also used directly by tests
/// with closure kernels and non-unit inhomogeneities.
pub(crate) fn solve_general<R: Real>(
    kern: &dyn SolverKernel<R>,
    inhomog: &(dyn Fn(R) -> Complex<R> + Sync),
    grid: &Grid,
    scheme: Scheme,
) -> Result<Vec<Complex<R>>> {
    let nodes = grid.nodes();
    let n = nodes.len();
    let mut c = Vec::with_capacity(n);
    c.push(inhomog(R::zero()));
    if n == 1 {
        return Ok(c);
    }
    match (grid.uniform_step(), scheme) {
        (Some(h), Scheme::ProductTrapezoid) => {
            let (interior, boundary, diag) = uniform_product_weights(kern, R::from_f64(h), n)?;
            run_uniform(&mut c, nodes, inhomog, &interior, &boundary, diag)?;
        }
        (Some(h), Scheme::NodalTrapezoid) => {
            let hr = R::from_f64(h);
            let half = R::from_f64(0.5);
            let vals: Vec<Complex<R>> = (0..n)
                .into_par_iter()
                .map(|m| kern.value(hr * R::from_f64(m as f64)).map(|v| v.scale(hr)))
                .collect::<Result<_>>()?;
            let boundary: Vec<Complex<R>> = vals.iter().map(|v| v.scale(half)).collect();
            let diag = vals[0].scale(half);
            run_uniform(&mut c, nodes, inhomog, &vals, &boundary, diag)?;
        }
        (None, scheme) => {
            run_graded(&mut c, nodes, kern, inhomog, scheme)?;
        }
    }
    Ok(c)
}

/// Per-lag weights for the uniform product scheme.
///
/// Interval `m` (between lags `(m-1)h` and `mh`) contributes `P(m)` to the
/// older node and `Q(m)` to the newer one; regrouping per node gives the
/// interior convolution weight `V(l) = P(l) + Q(l+1)`, the boundary weight
/// `P(k)` on node 0 and the diagonal `Q(1)`.
fn uniform_product_weights<R: Real>(
    kern: &dyn SolverKernel<R>,
    h: R,
    n: usize,
) -> Result<(Vec<Complex<R>>, Vec<Complex<R>>, Complex<R>)> {
    let m_max = n - 1;
    let fg: Vec<(Complex<R>, Complex<R>)> = (0..=m_max)
        .into_par_iter()
        .map(|m| {
            kern.moments(h * R::from_f64(m as f64))?.ok_or_else(|| {
                Error::UnsupportedKind(
                    "product scheme needs kernel moments; use the nodal scheme".into(),
                )
            })
        })
        .collect::<Result<_>>()?;
    let mut p = vec![Complex::<R>::zero(); m_max + 1];
    let mut q = vec![Complex::<R>::zero(); m_max + 1];
    for m in 1..=m_max {
        let (f1, g1) = fg[m];
        let (f0, g0) = fg[m - 1];
        let df = f1 - f0;
        let dg = g1 - g0;
        let ua = h * R::from_f64((m - 1) as f64);
        let ub = h * R::from_f64(m as f64);
        p[m] = (dg - df.scale(ua)).scale(R::one() / h);
        q[m] = (df.scale(ub) - dg).scale(R::one() / h);
    }
    let mut interior = vec![Complex::<R>::zero(); m_max + 1];
    for l in 1..m_max {
        interior[l] = p[l] + q[l + 1];
    }
    let diag = q[1];
    Ok((interior, p, diag))
}

fn run_uniform<R: Real>(
    c: &mut Vec<Complex<R>>,
    nodes: &[f64],
    inhomog: &(dyn Fn(R) -> Complex<R> + Sync),
    interior: &[Complex<R>],
    boundary: &[Complex<R>],
    diag: Complex<R>,
) -> Result<()> {
    let n = nodes.len();
    let denom = Complex::<R>::one() - diag;
    if denom.abs().to_f64() < 1e-12 {
        return Err(Error::NonConvergence(
            "diagonal solve is singular: 1 - w_kk k(0) vanished".into(),
        ));
    }
    let inv_denom = denom.recip();
    for k in 1..n {
        let mut s = inhomog(R::from_f64(nodes[k])) + boundary[k] * c[0];
        s = s + convolve(interior, c, k);
        c.push(s * inv_denom);
    }
    Ok(())
}

/// Fixed-order convolution sum `sum_{i=1}^{k-1} w[k-i] c[i]`, chunked for
/// deterministic parallelism.
fn convolve<R: Real>(w: &[Complex<R>], c: &[Complex<R>], k: usize) -> Complex<R> {
    const CHUNK: usize = 8192;
    let range = 1..k;
    if k < 2 {
        return Complex::zero();
    }
    if k - 1 < 4 * CHUNK {
        let mut s = Complex::zero();
        for i in range {
            s = s + w[k - i] * c[i];
        }
        return s;
    }
    let partials: Vec<Complex<R>> = (1..k)
        .collect::<Vec<_>>()
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut s = Complex::zero();
            for &i in chunk {
                s = s + w[k - i] * c[i];
            }
            s
        })
        .collect();
    partials.into_iter().fold(Complex::zero(), |a, b| a + b)
}

fn run_graded<R: Real>(
    c: &mut Vec<Complex<R>>,
    nodes: &[f64],
    kern: &dyn SolverKernel<R>,
    inhomog: &(dyn Fn(R) -> Complex<R> + Sync),
    scheme: Scheme,
) -> Result<()> {
    let n = nodes.len();
    match scheme {
        Scheme::ProductTrapezoid => {
            for k in 1..n {
                let tk = R::from_f64(nodes[k]);
                // kernel moments at all interval endpoints u = tk - t_j
                let fg: Vec<(Complex<R>, Complex<R>)> = (0..=k)
                    .into_par_iter()
                    .map(|j| {
                        kern.moments(tk - R::from_f64(nodes[j]))?.ok_or_else(|| {
                            Error::UnsupportedKind(
                                "product scheme needs kernel moments; use the nodal scheme".into(),
                            )
                        })
                    })
                    .collect::<Result<_>>()?;
                let mut s = inhomog(tk);
                let mut diag = Complex::<R>::zero();
                for j in 0..k {
                    let h = R::from_f64(nodes[j + 1] - nodes[j]);
                    let ua = tk - R::from_f64(nodes[j + 1]);
                    let ub = tk - R::from_f64(nodes[j]);
                    let df = fg[j].0 - fg[j + 1].0;
                    let dg = fg[j].1 - fg[j + 1].1;
                    let pj = (dg - df.scale(ua)).scale(R::one() / h);
                    let qj = (df.scale(ub) - dg).scale(R::one() / h);
                    s = s + pj * c[j];
                    if j + 1 == k {
                        diag = qj;
                    } else {
                        s = s + qj * c[j + 1];
                    }
                }
                let denom = Complex::<R>::one() - diag;
                if denom.abs().to_f64() < 1e-12 {
                    return Err(Error::NonConvergence(
                        "diagonal solve is singular: 1 - w_kk k(0) vanished".into(),
                    ));
                }
                c.push(s * denom.recip());
            }
        }
        Scheme::NodalTrapezoid => {
            let half = R::from_f64(0.5);
            let k0 = kern.value(R::zero())?;
            for k in 1..n {
                let tk = R::from_f64(nodes[k]);
                let vals: Vec<Complex<R>> = (0..k)
                    .into_par_iter()
                    .map(|j| kern.value(tk - R::from_f64(nodes[j])))
                    .collect::<Result<_>>()?;
                let mut s = inhomog(tk);
                for j in 0..k {
                    let h_left = if j == 0 {
                        R::zero()
                    } else {
                        R::from_f64(nodes[j] - nodes[j - 1])
                    };
                    let h_right = R::from_f64(nodes[j + 1] - nodes[j]);
                    let w = (h_left + h_right) * half;
                    s = s + vals[j].scale(if j == 0 { h_right * half } else { w });
                }
                let diag = k0.scale(R::from_f64(nodes[k] - nodes[k - 1]) * half);
                let denom = Complex::<R>::one() - diag;
                if denom.abs().to_f64() < 1e-12 {
                    return Err(Error::NonConvergence(
                        "diagonal solve is singular: 1 - w_kk k(0) vanished".into(),
                    ));
                }
                c.push(s * denom.recip());
            }
        }
    }
    Ok(())
}

/// Spectral amplitude `I(x, tau_max) = ∫₀^{tau_max} e^{i x s} c(s) ds` by
/// product integration over the stored trajectory, one value per offset.
pub fn spectral_amplitude<R: Real>(traj: &Trajectory<R>, offsets: &[f64]) -> Result<Vec<C64>> {
    let max_step = traj.grid.max_step();
    for &x in offsets {
        if x.abs() * max_step > std::f64::consts::PI {
            return Err(Error::Resolution(format!(
                "offset {x} advances the phase by more than pi per grid step {max_step}"
            )));
        }
    }
    let amp: Vec<C64> = traj.amplitude.iter().map(|c| c.to_c64()).collect();
    let nodes = traj.grid.nodes();
    Ok(offsets
        .par_iter()
        .map(|&x| prefix_spectral(nodes, &amp, x, &[nodes.len() - 1])[0])
        .collect())
}

/// Linear-interpolation moments of `e^{i x t}` over `[0, h]`: weight on the
/// left node and on the right node.
fn interval_phase_weights(x: f64, h: f64) -> (C64, C64) {
    let w = x * h;
    let (em, em2) = if w.abs() < 0.1 {
        // em = (e^{iw}-1)/(iw), em2 = (e^{iw}(iw-1)+1)/(iw)^2
        let mut em = C64::zero();
        let mut em2 = C64::zero();
        let mut pw = C64::one();
        let mut fact = 1.0;
        for j in 0..20u32 {
            em = em + pw.scale(1.0 / ((j as f64 + 1.0) * fact));
            em2 = em2 + pw.scale((j as f64 + 1.0) / ((j as f64 + 2.0) * (j as f64 + 1.0) * fact));
            pw = pw * C64::new(0.0, w);
            fact *= (j + 1) as f64;
        }
        (em, em2)
    } else {
        let iw = C64::new(0.0, w);
        let e = cis(w);
        let em = (e - C64::one()) / iw;
        let em2 = (e * (iw - C64::one()) + C64::one()) / (iw * iw);
        (em, em2)
    };
    let beta = em2.scale(h);
    let alpha = em.scale(h) - beta;
    (alpha, beta)
}

/// Prefix integrals of `e^{i x s} c(s)` captured at the given node indices.
fn prefix_spectral(nodes: &[f64], amp: &[C64], x: f64, capture: &[usize]) -> Vec<C64> {
    let mut out = Vec::with_capacity(capture.len());
    let mut acc = C64::zero();
    let mut cap_iter = capture.iter().peekable();
    if let Some(&&0) = cap_iter.peek() {
        out.push(acc);
        cap_iter.next();
    }
    let mut cached: Option<(f64, (C64, C64))> = None;
    for j in 0..nodes.len() - 1 {
        let h = nodes[j + 1] - nodes[j];
        let (alpha, beta) = match cached {
            Some((hc, w)) if hc == h => w,
            _ => {
                let w = interval_phase_weights(x, h);
                cached = Some((h, w));
                w
            }
        };
        let phase = cis(x * nodes[j]);
        acc = acc + phase * (amp[j] * alpha + amp[j + 1] * beta);
        if let Some(&&c) = cap_iter.peek() {
            if c == j + 1 {
                out.push(acc);
                cap_iter.next();
            }
        }
    }
    out
}

/// Probability bookkeeping: `|c|^2` plus the emitted-photon probability
/// `(1/2pi) ∫₀^{lambda_c} |I(x - b_A, tau)|^2 dx` under the flat-rate
/// prescription, reported at the checkpoint times.
///
/// Only `Kappa0Reg` trajectories preserve unitarity under this prescription.
pub fn unitarity_audit<R: Real>(
    traj: &Trajectory<R>,
    n_omega: usize,
    checkpoints: &[f64],
) -> Result<UnitarityReport> {
    if traj.kernel != KernelKind::Kappa0Reg {
        return Err(Error::UnsupportedKind(
            "unitarity audit requires a Kappa0Reg trajectory".into(),
        ));
    }
    if n_omega < 2 {
        return Err(Error::InvalidInput("n_omega must be at least 2".into()));
    }
    let lp = traj.params.lift::<f64>();
    let nodes = traj.grid.nodes();
    // snap checkpoints to grid nodes
    let mut idx = Vec::with_capacity(checkpoints.len());
    for &t in checkpoints {
        let k = nodes
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().partial_cmp(&(b.1 - t).abs()).unwrap())
            .map(|(k, _)| k)
            .unwrap();
        if (nodes[k] - t).abs() > traj.grid.max_step() {
            return Err(Error::InvalidInput(format!(
                "checkpoint {t} lies outside the solved grid"
            )));
        }
        idx.push(k);
    }
    let mut order: Vec<usize> = (0..idx.len()).collect();
    order.sort_by_key(|&i| idx[i]);
    let sorted_idx: Vec<usize> = order.iter().map(|&i| idx[i]).collect();

    // offsets x - b_tilde in the rescaled gauge; the modulus of I is
    // gauge-invariant so this equals the x - b_A integral over c_e
    let max_offset = (lp.lambda_c - lp.b_tilde).max(lp.b_tilde);
    if max_offset * traj.grid.max_step() > std::f64::consts::PI {
        return Err(Error::Resolution(format!(
            "grid step {} cannot resolve offsets up to {max_offset}",
            traj.grid.max_step()
        )));
    }
    let amp: Vec<C64> = traj.amplitude.iter().map(|c| c.to_c64()).collect();

    // Composite Simpson on a uniform offset grid. The spacing must resolve
    // both the resonance (width ~ 1/2) and the spectral ringing of period
    // 2 pi / tau at the latest checkpoint; n_omega is the minimum panel count.
    let tau_late = sorted_idx.last().map(|&k| nodes[k]).unwrap_or(0.0);
    let range = lp.lambda_c;
    let h_res = (0.5f64 / 8.0).min(std::f64::consts::PI / (6.0 * tau_late.max(1e-9)));
    let m_res = (range / h_res).ceil() as usize;
    let m = (2 * n_omega).max(m_res).min(4_000_000);
    let m = m + m % 2;
    let hx = range / m as f64;
    let contributions: Vec<Vec<f64>> = (0..=m)
        .into_par_iter()
        .map(|i| {
            let offset = i as f64 * hx - lp.b_tilde;
            let simpson = if i == 0 || i == m {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let vals = prefix_spectral(nodes, &amp, offset, &sorted_idx);
            vals.iter().map(|v| v.norm_sqr() * simpson).collect()
        })
        .collect();
    let mut emitted_sorted = vec![0.0; sorted_idx.len()];
    for contrib in &contributions {
        for (e, c) in emitted_sorted.iter_mut().zip(contrib) {
            *e += c;
        }
    }
    for e in emitted_sorted.iter_mut() {
        *e *= hx / 3.0 / std::f64::consts::TAU;
    }
    let mut taus = vec![0.0; idx.len()];
    let mut excited = vec![0.0; idx.len()];
    let mut emitted = vec![0.0; idx.len()];
    let mut defect = vec![0.0; idx.len()];
    for (pos, &orig) in order.iter().enumerate() {
        let k = idx[orig];
        taus[orig] = nodes[k];
        excited[orig] = amp[k].norm_sqr();
        emitted[orig] = emitted_sorted[pos];
        defect[orig] = (1.0 - excited[orig] - emitted[orig]).abs();
    }
    Ok(UnitarityReport {
        taus,
        excited_prob: excited,
        emitted_prob: emitted,
        defect,
    })
}
