//! Nonlinear least squares for the three signal families — Gaussian
//! profile, saturating exponential (loading), exponential decay — plus
//! segment-mean analysis for switching sequences.
//!
//! The optimizer is damped Gauss-Newton: solve
//! (JᵀWJ + λ·diag(JᵀWJ))·δ = JᵀW·r, multiply λ by 10 on a rejected step and
//! divide by 10 on an accepted one. Convergence is a relative parameter
//! step below `step_tolerance` or a relative residual improvement below
//! `residual_tolerance`. Widths are reported in the 1/e convention:
//! y = A/e at |x − c| = w, so the 1/e diameter is 2w.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Model families the fitter knows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// y = b + A·exp(−((x − c)/w)²) — params [b, A, c, w].
    Gaussian,
    /// y = b + A·(1 − e^(−t/τ)) — params [b, A, τ].
    Loading,
    /// y = b + A·e^(−t/τ) — params [b, A, τ].
    Decay,
}

impl FitModel {
    pub fn name(self) -> &'static str {
        match self {
            FitModel::Gaussian => "gaussian",
            FitModel::Loading => "loading",
            FitModel::Decay => "decay",
        }
    }

    pub fn param_count(self) -> usize {
        match self {
            FitModel::Gaussian => 4,
            FitModel::Loading | FitModel::Decay => 3,
        }
    }

    /// Model value at `x` for the full parameter vector.
    pub fn value<F: Real>(self, params: &[F], x: F) -> F {
        match self {
            FitModel::Gaussian => {
                let u = (x - params[2]) / params[3];
                params[0] + params[1] * (-u * u).exp()
            }
            FitModel::Loading => {
                params[0] + params[1] * (F::one() - (-x / params[2]).exp())
            }
            FitModel::Decay => params[0] + params[1] * (-x / params[2]).exp(),
        }
    }

    /// Analytic gradient of the model value w.r.t. every parameter.
    pub fn gradient<F: Real>(self, params: &[F], x: F) -> Vec<F> {
        let two = F::from_f64(2.0);
        match self {
            FitModel::Gaussian => {
                let w = params[3];
                let u = (x - params[2]) / w;
                let e = (-u * u).exp();
                vec![
                    F::one(),
                    e,
                    params[1] * e * two * u / w,
                    params[1] * e * two * u * u / w,
                ]
            }
            FitModel::Loading => {
                let tau = params[2];
                let e = (-x / tau).exp();
                vec![F::one(), F::one() - e, -params[1] * e * x / (tau * tau)]
            }
            FitModel::Decay => {
                let tau = params[2];
                let e = (-x / tau).exp();
                vec![F::one(), e, params[1] * e * x / (tau * tau)]
            }
        }
    }
}

/// Whether the additive offset is optimized or pinned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OffsetMode<F> {
    Free,
    Fixed(F),
}

/// Optimizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions<F> {
    pub offset: OffsetMode<F>,
    pub max_iterations: usize,
    /// Stop when max |δp|/max(|p|, ε) drops below this.
    pub step_tolerance: F,
    /// Stop when the relative residual improvement drops below this.
    pub residual_tolerance: F,
}

impl<F: Real> Default for FitOptions<F> {
    fn default() -> Self {
        FitOptions {
            offset: OffsetMode::Free,
            max_iterations: 200,
            step_tolerance: F::from_f64(1e-10),
            residual_tolerance: F::from_f64(1e-12),
        }
    }
}

/// One fitted parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParameter<F> {
    pub name: String,
    pub value: F,
    pub std_error: F,
}

/// Fit outcome: parameters with standard errors and diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult<F> {
    pub model_name: String,
    pub parameters: Vec<FitParameter<F>>,
    /// Weighted sum of squared residuals at the solution.
    pub residual_norm: F,
    pub converged: bool,
    pub iterations: usize,
    /// Covariance of the free parameters, ordered as in `parameters`.
    pub covariance: Vec<Vec<F>>,
}

impl<F: Real> FitResult<F> {
    pub fn parameter(&self, name: &str) -> Option<F> {
        self.parameters
            .iter()
            .find(|p| p.name == name)
            .map(|p| p.value)
    }
}

/// Poisson variance proxy: wᵢ = 1/max(yᵢ·gate, 1), for rates in counts/s.
pub fn poisson_weights<F: Real>(ys: &[F], gate_time_s: F) -> Vec<F> {
    ys.iter()
        .map(|&y| F::one() / (y * gate_time_s).max(F::one()))
        .collect()
}

/// Fit y = offset + A·exp(−((x − c)/w)²); reports the 1/e radius w and the
/// 1/e diameter 2w.
pub fn fit_gaussian<F: Real>(
    xs: &[F],
    ys: &[F],
    weights: Option<&[F]>,
    options: &FitOptions<F>,
) -> Result<FitResult<F>> {
    check_data(xs, ys, weights, 5)?;
    for (i, a) in xs.iter().enumerate() {
        for b in &xs[i + 1..] {
            if a == b {
                return Err(Error::InvalidInput("x values must be distinct".into()));
            }
        }
    }
    let (lo, hi) = min_max(ys);
    if hi == lo {
        return Err(Error::DegenerateData("all samples identical".into()));
    }

    let offset0 = match options.offset {
        OffsetMode::Free => lo,
        OffsetMode::Fixed(b) => b,
    };
    let amplitude0 = hi - offset0;
    let peak_idx = argmax(ys);
    let center0 = xs[peak_idx];
    // width from the span above half amplitude: y = A/2 at |x−c| = w·√(ln 2)
    let half = offset0 + amplitude0 / F::from_f64(2.0);
    let mut span_lo = F::infinity();
    let mut span_hi = F::neg_infinity();
    for (&x, &y) in xs.iter().zip(ys) {
        if y >= half {
            span_lo = span_lo.min(x);
            span_hi = span_hi.max(x);
        }
    }
    let mut width0 = if span_hi > span_lo {
        (span_hi - span_lo) / (F::from_f64(2.0) * F::from_f64(2.0_f64.ln()).sqrt())
    } else {
        F::zero()
    };
    if !(width0 > F::zero()) {
        let (xlo, xhi) = min_max(xs);
        width0 = (xhi - xlo) / F::from_f64(4.0);
    }

    let mut result = optimize(
        FitModel::Gaussian,
        xs,
        ys,
        weights,
        options,
        vec![offset0, amplitude0, center0, width0],
        &["offset", "amplitude", "center", "one_over_e_radius"],
    )?;
    // width enters the model squared; normalize the sign and derive 2w
    let w_idx = 3;
    let w = result.parameters[w_idx].value.abs();
    result.parameters[w_idx].value = w;
    let se = result.parameters[w_idx].std_error;
    result.parameters.push(FitParameter {
        name: "one_over_e_diameter".into(),
        value: F::from_f64(2.0) * w,
        std_error: F::from_f64(2.0) * se,
    });
    Ok(result)
}

/// Fit y = offset + A·(1 − e^(−t/τ)); τ is the 1/e loading time.
pub fn fit_loading<F: Real>(
    ts: &[F],
    ys: &[F],
    weights: Option<&[F]>,
    options: &FitOptions<F>,
) -> Result<FitResult<F>> {
    check_data(ts, ys, weights, 4)?;
    check_increasing(ts)?;
    let (lo, hi) = min_max(ys);
    if hi == lo {
        return Err(Error::DegenerateData("all samples identical".into()));
    }

    let offset0 = match options.offset {
        OffsetMode::Free => ys[0],
        OffsetMode::Fixed(b) => b,
    };
    let amplitude0 = ys[ys.len() - 1] - offset0;
    let rise_level = offset0 + F::from_f64(0.632) * amplitude0;
    let t0 = ts[0];
    let mut tau0 = F::zero();
    for (&t, &y) in ts.iter().zip(ys) {
        if (amplitude0 > F::zero() && y >= rise_level)
            || (amplitude0 < F::zero() && y <= rise_level)
        {
            tau0 = t - t0;
            break;
        }
    }
    if !(tau0 > F::zero()) {
        tau0 = (ts[ts.len() - 1] - t0) / F::from_f64(3.0);
    }

    optimize(
        FitModel::Loading,
        ts,
        ys,
        weights,
        options,
        vec![offset0, amplitude0, tau0],
        &["offset", "amplitude", "tau"],
    )
}

/// Fit y = offset + A·e^(−t/τ), initialized by log-linear regression on the
/// background-subtracted samples.
pub fn fit_decay<F: Real>(
    ts: &[F],
    ys: &[F],
    weights: Option<&[F]>,
    options: &FitOptions<F>,
) -> Result<FitResult<F>> {
    check_data(ts, ys, weights, 4)?;
    check_increasing(ts)?;
    let (lo, hi) = min_max(ys);
    if hi == lo {
        return Err(Error::DegenerateData("all samples identical".into()));
    }

    let offset0 = match options.offset {
        OffsetMode::Free => lo,
        OffsetMode::Fixed(b) => b,
    };
    // log-linear regression over the strictly positive residuals
    let mut sum_t = F::zero();
    let mut sum_l = F::zero();
    let mut n_pos = 0usize;
    for (&t, &y) in ts.iter().zip(ys) {
        let v = y - offset0;
        if v > F::zero() {
            sum_t += t;
            sum_l += v.ln();
            n_pos += 1;
        }
    }
    if n_pos == 0 {
        return Err(Error::InvalidData(
            "no samples above the background level".into(),
        ));
    }
    let nf = F::from_f64(n_pos as f64);
    let mean_t = sum_t / nf;
    let mean_l = sum_l / nf;
    let mut s_tt = F::zero();
    let mut s_tl = F::zero();
    for (&t, &y) in ts.iter().zip(ys) {
        let v = y - offset0;
        if v > F::zero() {
            let dt = t - mean_t;
            s_tt += dt * dt;
            s_tl += dt * (v.ln() - mean_l);
        }
    }
    let span = ts[ts.len() - 1] - ts[0];
    let slope = if s_tt > F::zero() { s_tl / s_tt } else { F::zero() };
    let tau0 = if slope < F::zero() {
        -F::one() / slope
    } else {
        span / F::from_f64(3.0)
    };
    let amplitude0 = (mean_l - slope * mean_t).exp();

    optimize(
        FitModel::Decay,
        ts,
        ys,
        weights,
        options,
        vec![offset0, amplitude0, tau0],
        &["offset", "amplitude", "tau"],
    )
}

/// Per-segment mean and standard error of a stepped series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentStat<F> {
    pub mean: F,
    /// Standard error of the mean (sample standard deviation / √n).
    pub std_error: F,
    pub count: usize,
}

/// Partition samples at `change_times` and return each segment's mean and
/// standard error. Segment k spans [change_times[k−1], change_times[k]).
pub fn step_levels<F: Real>(
    ts: &[F],
    ys: &[F],
    change_times: &[F],
) -> Result<Vec<SegmentStat<F>>> {
    if ts.len() != ys.len() || ts.is_empty() {
        return Err(Error::InvalidInput(
            "need equal-length, non-empty ts and ys".into(),
        ));
    }
    check_increasing(ts)?;
    let first = ts[0];
    let last = ts[ts.len() - 1];
    let mut prev: Option<F> = None;
    for &c in change_times {
        if !(c.is_finite() && c >= first && c <= last) {
            return Err(Error::InvalidInput(format!(
                "change time {c} outside the sampled range"
            )));
        }
        if let Some(p) = prev {
            if c <= p {
                return Err(Error::InvalidInput(
                    "change times must be strictly increasing".into(),
                ));
            }
        }
        prev = Some(c);
    }

    let n_segments = change_times.len() + 1;
    let mut buckets: Vec<Vec<F>> = vec![Vec::new(); n_segments];
    for (&t, &y) in ts.iter().zip(ys) {
        let seg = change_times.iter().take_while(|&&c| t >= c).count();
        buckets[seg].push(y);
    }

    let mut stats = Vec::with_capacity(n_segments);
    for (i, bucket) in buckets.iter().enumerate() {
        if bucket.is_empty() {
            return Err(Error::EmptySegment(format!("segment {i} has no samples")));
        }
        let n = F::from_f64(bucket.len() as f64);
        let mean = bucket.iter().cloned().sum::<F>() / n;
        let std_error = if bucket.len() > 1 {
            let var = bucket
                .iter()
                .map(|&y| (y - mean) * (y - mean))
                .sum::<F>()
                / (n - F::one());
            (var / n).sqrt()
        } else {
            F::zero()
        };
        stats.push(SegmentStat {
            mean,
            std_error,
            count: bucket.len(),
        });
    }
    Ok(stats)
}

fn check_data<F: Real>(
    xs: &[F],
    ys: &[F],
    weights: Option<&[F]>,
    min_points: usize,
) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidInput("xs and ys lengths differ".into()));
    }
    if xs.len() < min_points {
        return Err(Error::InvalidInput(format!(
            "need at least {min_points} points, got {}",
            xs.len()
        )));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("data must be finite".into()));
    }
    if let Some(w) = weights {
        if w.len() != ys.len() {
            return Err(Error::InvalidInput("weights length mismatch".into()));
        }
        if w.iter().any(|v| !v.is_finite() || *v < F::zero()) {
            return Err(Error::InvalidInput("weights must be finite and >= 0".into()));
        }
    }
    Ok(())
}

fn check_increasing<F: Real>(ts: &[F]) -> Result<()> {
    for i in 1..ts.len() {
        if ts[i] <= ts[i - 1] {
            return Err(Error::InvalidInput(
                "abscissae must be strictly increasing".into(),
            ));
        }
    }
    Ok(())
}

fn min_max<F: Real>(vals: &[F]) -> (F, F) {
    let mut lo = vals[0];
    let mut hi = vals[0];
    for &v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

fn argmax<F: Real>(vals: &[F]) -> usize {
    let mut best = 0;
    for (i, &v) in vals.iter().enumerate() {
        if v > vals[best] {
            best = i;
        }
    }
    best
}

/// Damped Gauss-Newton over the free parameters of `model`.
fn optimize<F: Real>(
    model: FitModel,
    xs: &[F],
    ys: &[F],
    weights: Option<&[F]>,
    options: &FitOptions<F>,
    mut params: Vec<F>,
    names: &[&str],
) -> Result<FitResult<F>> {
    let offset_fixed = matches!(options.offset, OffsetMode::Fixed(_));
    if let OffsetMode::Fixed(b) = options.offset {
        params[0] = b;
    }
    let free: Vec<usize> = (0..params.len()).skip(usize::from(offset_fixed)).collect();
    let n_free = free.len();
    let weight_at = |i: usize| weights.map_or(F::one(), |w| w[i]);

    let ssr = |p: &[F]| -> F {
        let mut acc = F::zero();
        for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
            let r = y - model.value(p, x);
            acc += weight_at(i) * r * r;
        }
        acc
    };

    let mut current = ssr(&params);
    if !current.is_finite() {
        return Err(Error::InvalidData("initial residual not finite".into()));
    }
    let mut lambda = F::from_f64(1e-3);
    let lambda_max = F::from_f64(1e12);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iterations && !converged {
        iterations += 1;
        // normal equations on the free parameters
        let mut h = vec![vec![F::zero(); n_free]; n_free];
        let mut g = vec![F::zero(); n_free];
        for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
            let w = weight_at(i);
            let grad = model.gradient(&params, x);
            let r = y - model.value(&params, x);
            for (a, &pa) in free.iter().enumerate() {
                g[a] += w * grad[pa] * r;
                for (b, &pb) in free.iter().enumerate() {
                    h[a][b] += w * grad[pa] * grad[pb];
                }
            }
        }

        let mut accepted = false;
        while !accepted && lambda <= lambda_max {
            let mut damped = h.clone();
            let max_diag = (0..n_free)
                .map(|a| h[a][a])
                .fold(F::zero(), F::max);
            for a in 0..n_free {
                damped[a][a] = h[a][a] * (F::one() + lambda)
                    + lambda * max_diag * F::from_f64(1e-12);
            }
            let delta = match solve(&damped, &g) {
                Some(d) => d,
                None => {
                    lambda *= F::from_f64(10.0);
                    continue;
                }
            };
            let mut trial = params.clone();
            for (a, &pa) in free.iter().enumerate() {
                trial[pa] = trial[pa] + delta[a];
            }
            let trial_ssr = ssr(&trial);
            if trial_ssr.is_finite() && trial_ssr <= current {
                let improvement = if current > F::zero() {
                    (current - trial_ssr) / current
                } else {
                    F::zero()
                };
                let mut rel_step = F::zero();
                for (a, &pa) in free.iter().enumerate() {
                    let scale = trial[pa].abs().max(F::from_f64(1e-30));
                    rel_step = rel_step.max(delta[a].abs() / scale);
                }
                params = trial;
                current = trial_ssr;
                lambda = (lambda / F::from_f64(10.0)).max(F::from_f64(1e-15));
                accepted = true;
                if rel_step < options.step_tolerance
                    || improvement < options.residual_tolerance
                {
                    converged = true;
                }
            } else {
                lambda *= F::from_f64(10.0);
            }
        }
        if !accepted {
            // damping exhausted: no downhill step exists at this precision
            converged = true;
        }
    }

    if !converged {
        return Err(Error::NoConvergence {
            iterations: options.max_iterations,
        });
    }

    // covariance of the free parameters: s²·(JᵀWJ)⁻¹
    let mut h = vec![vec![F::zero(); n_free]; n_free];
    for (i, &x) in xs.iter().enumerate() {
        let w = weight_at(i);
        let grad = model.gradient(&params, x);
        for (a, &pa) in free.iter().enumerate() {
            for (b, &pb) in free.iter().enumerate() {
                h[a][b] += w * grad[pa] * grad[pb];
            }
        }
    }
    let dof = xs.len().saturating_sub(n_free);
    let s2 = if dof > 0 {
        current / F::from_f64(dof as f64)
    } else {
        F::zero()
    };
    let cov_free = invert(&h).map(|inv| {
        let mut cov = inv;
        for row in cov.iter_mut() {
            for v in row.iter_mut() {
                *v = *v * s2;
            }
        }
        // enforce exact symmetry against elimination roundoff
        for a in 0..n_free {
            for b in (a + 1)..n_free {
                let m = (cov[a][b] + cov[b][a]) / F::from_f64(2.0);
                cov[a][b] = m;
                cov[b][a] = m;
            }
        }
        cov
    });

    let mut parameters = Vec::with_capacity(params.len());
    for (idx, name) in names.iter().enumerate() {
        let std_error = if offset_fixed && idx == 0 {
            F::zero()
        } else {
            let a = idx - usize::from(offset_fixed);
            cov_free
                .as_ref()
                .map_or(F::zero(), |c| c[a][a].max(F::zero()).sqrt())
        };
        parameters.push(FitParameter {
            name: (*name).into(),
            value: params[idx],
            std_error,
        });
    }

    Ok(FitResult {
        model_name: model.name().into(),
        parameters,
        residual_norm: current,
        converged,
        iterations,
        covariance: cov_free.unwrap_or_else(|| vec![vec![F::zero(); n_free]; n_free]),
    })
}

/// Gaussian elimination with partial pivoting; None if singular.
fn solve<F: Real>(matrix: &[Vec<F>], rhs: &[F]) -> Option<Vec<F>> {
    let n = rhs.len();
    let mut a: Vec<Vec<F>> = matrix.to_vec();
    let mut b = rhs.to_vec();
    for col in 0..n {
        let mut pivot = col;
        for row in (col + 1)..n {
            if a[row][col].abs() > a[pivot][col].abs() {
                pivot = row;
            }
        }
        if a[pivot][col].abs() <= F::zero() {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                let v = a[col][k];
                a[row][k] = a[row][k] - factor * v;
            }
            let v = b[col];
            b[row] = b[row] - factor * v;
        }
    }
    let mut x = vec![F::zero(); n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in (col + 1)..n {
            acc = acc - a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
        if !x[col].is_finite() {
            return None;
        }
    }
    Some(x)
}

fn invert<F: Real>(matrix: &[Vec<F>]) -> Option<Vec<Vec<F>>> {
    let n = matrix.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![F::zero(); n];
        e[j] = F::one();
        cols.push(solve(matrix, &e)?);
    }
    // cols[j] is the j-th column of the inverse
    let mut inv = vec![vec![F::zero(); n]; n];
    for (j, col) in cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            inv[i][j] = v;
        }
    }
    Some(inv)
}
