//! ARIMA fitting with automatic order selection.
//!
//! Differencing order comes from a variance-reduction rule; (p, q) comes from
//! an AIC grid search where each candidate is fit by conditional sum of
//! squares and then refined against the exact Gaussian likelihood, evaluated
//! with a steady-state-initialized Kalman filter on the Harvey state-space
//! form. The likelihood concentrates the innovation variance, so the
//! optimizer only sees the AR/MA coefficients.

use nalgebra::{Complex, DMatrix, DVector};
use rayon::prelude::*;

use super::BaselineError;

/// Margin by which characteristic roots must stay outside the unit circle.
const ROOT_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

/// A fitted ARIMA model on the differenced scale: the intercept is the mean
/// of the d-times-differenced series.
#[derive(Debug, Clone)]
pub struct ArimaModel {
    pub order: ArimaOrder,
    pub ar_coeffs: Vec<f64>,
    pub ma_coeffs: Vec<f64>,
    pub intercept: f64,
    pub sigma2: f64,
    pub loglik: f64,
    pub aic: f64,
    pub n_obs: usize,
}

/// Grid bounds and numeric knobs for automatic order selection.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ArimaGridConfig {
    pub max_p: usize,
    pub max_q: usize,
    pub max_d: usize,
    /// Difference again only while one more difference shrinks the sample
    /// standard deviation by more than this fraction. A mild cutoff (the
    /// classic "variance stops decreasing" rule) misclassifies strongly
    /// autocorrelated stationary series, whose first difference also shrinks
    /// the variance; 0.6 separates unit roots from AR coefficients well
    /// below 1 at the series lengths involved.
    pub diff_threshold: f64,
    pub sigma2_floor: f64,
}

impl Default for ArimaGridConfig {
    fn default() -> Self {
        Self {
            max_p: 3,
            max_q: 3,
            max_d: 2,
            diff_threshold: 0.6,
            sigma2_floor: 1e-8,
        }
    }
}

/// Forecast mean and error variance for one step ahead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastPoint {
    pub mean: f64,
    pub variance: f64,
}

fn difference(series: &[f64]) -> Vec<f64> {
    series.windows(2).map(|w| w[1] - w[0]).collect()
}

fn diff_n(series: &[f64], d: usize) -> Vec<f64> {
    let mut cur = series.to_vec();
    for _ in 0..d {
        cur = difference(&cur);
    }
    cur
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

fn select_d(series: &[f64], max_d: usize, threshold: f64) -> usize {
    let mut cur = series.to_vec();
    for d in 0..max_d {
        let sd_cur = sample_sd(&cur);
        if sd_cur < 1e-12 {
            return d;
        }
        let next = difference(&cur);
        if next.len() < 3 {
            return d;
        }
        if sample_sd(&next) >= (1.0 - threshold) * sd_cur {
            return d;
        }
        cur = next;
    }
    max_d
}

/// Largest reciprocal-root magnitude of `1 - c_1 x - ... - c_k x^k`, via the
/// companion matrix whose first row is the coefficients.
fn max_reciprocal_root(coeffs: &[f64]) -> f64 {
    let k = coeffs.len();
    if k == 0 {
        return 0.0;
    }
    if coeffs.iter().all(|c| *c == 0.0) {
        return 0.0;
    }
    if k == 1 {
        return coeffs[0].abs();
    }
    let companion = DMatrix::from_fn(k, k, |i, j| {
        if i == 0 {
            coeffs[j]
        } else if j == i - 1 {
            1.0
        } else {
            0.0
        }
    });
    companion
        .complex_eigenvalues()
        .iter()
        .map(|eig| eig.norm())
        .fold(0.0, f64::max)
}

fn is_feasible(phi: &[f64], theta: &[f64]) -> bool {
    if phi.iter().chain(theta).any(|c| !c.is_finite()) {
        return false;
    }
    let neg_theta: Vec<f64> = theta.iter().map(|t| -t).collect();
    max_reciprocal_root(phi) <= 1.0 - ROOT_MARGIN
        && max_reciprocal_root(&neg_theta) <= 1.0 - ROOT_MARGIN
}

fn shrink_to_feasible(mut params: Vec<f64>, p: usize) -> Vec<f64> {
    for _ in 0..200 {
        if is_feasible(&params[..p], &params[p..]) {
            return params;
        }
        for c in &mut params {
            *c *= 0.9;
        }
    }
    vec![0.0; params.len()]
}

/// Conditional sum of squares per observation, conditioning on the first p
/// values and zero pre-sample innovations.
fn css_mean_square(z: &[f64], phi: &[f64], theta: &[f64]) -> f64 {
    let (p, q) = (phi.len(), theta.len());
    let n = z.len();
    let mut eps = vec![0.0; n];
    let mut ss = 0.0;
    let mut count = 0usize;
    for t in p..n {
        let mut pred = 0.0;
        for (i, &ph) in phi.iter().enumerate() {
            pred += ph * z[t - 1 - i];
        }
        for (j, &th) in theta.iter().enumerate().take(q) {
            if t >= j + 1 {
                pred += th * eps[t - 1 - j];
            }
        }
        let e = z[t] - pred;
        eps[t] = e;
        ss += e * e;
        count += 1;
    }
    if count == 0 {
        f64::INFINITY
    } else {
        ss / count as f64
    }
}

fn css_residuals(z: &[f64], phi: &[f64], theta: &[f64]) -> Vec<f64> {
    let (p, q) = (phi.len(), theta.len());
    let mut eps = vec![0.0; z.len()];
    for t in p..z.len() {
        let mut pred = 0.0;
        for (i, &ph) in phi.iter().enumerate() {
            pred += ph * z[t - 1 - i];
        }
        for (j, &th) in theta.iter().enumerate().take(q) {
            if t >= j + 1 {
                pred += th * eps[t - 1 - j];
            }
        }
        eps[t] = z[t] - pred;
    }
    eps
}

fn ols(rows: &[Vec<f64>], targets: &[f64]) -> Option<Vec<f64>> {
    let n = rows.len();
    let k = rows.first()?.len();
    if n < k + 1 {
        return None;
    }
    let design = DMatrix::from_fn(n, k, |i, j| rows[i][j]);
    let response = DVector::from_column_slice(targets);
    let solution = design.qr().solve(&response)?;
    let coeffs: Vec<f64> = solution.iter().copied().collect();
    if coeffs.iter().all(|c| c.is_finite()) {
        Some(coeffs)
    } else {
        None
    }
}

fn ar_ols(z: &[f64], order: usize) -> Option<Vec<f64>> {
    let n = z.len();
    if n <= order + 1 {
        return None;
    }
    let rows: Vec<Vec<f64>> = (order..n)
        .map(|t| (0..order).map(|i| z[t - 1 - i]).collect())
        .collect();
    let targets: Vec<f64> = z[order..].to_vec();
    ols(&rows, &targets)
}

/// Hannan-Rissanen start values: a long AR fit supplies residual estimates,
/// then one regression on lagged values and lagged residuals gives phi and
/// theta.
fn hannan_rissanen(z: &[f64], p: usize, q: usize) -> Vec<f64> {
    if p + q == 0 {
        return Vec::new();
    }
    let fallback = vec![0.0; p + q];
    if q == 0 {
        let params = ar_ols(z, p).unwrap_or(fallback);
        return shrink_to_feasible(params, p);
    }
    let m = (p + q + 2).max(8).min((z.len() / 4).max(p + q + 1));
    let Some(long_ar) = ar_ols(z, m) else {
        return fallback;
    };
    let mut eps = vec![0.0; z.len()];
    for t in m..z.len() {
        let mut pred = 0.0;
        for (i, &a) in long_ar.iter().enumerate() {
            pred += a * z[t - 1 - i];
        }
        eps[t] = z[t] - pred;
    }
    let start = m + q;
    if z.len() <= start + p + q + 1 {
        return fallback;
    }
    let rows: Vec<Vec<f64>> = (start..z.len())
        .map(|t| {
            let mut row: Vec<f64> = (0..p).map(|i| z[t - 1 - i]).collect();
            row.extend((0..q).map(|j| eps[t - 1 - j]));
            row
        })
        .collect();
    let targets: Vec<f64> = z[start..].to_vec();
    let params = ols(&rows, &targets).unwrap_or(fallback);
    shrink_to_feasible(params, p)
}

struct FilterStats {
    sum_log_f: f64,
    sum_v2f: f64,
    n: usize,
}

/// Exact-likelihood innovations filter for a zero-mean ARMA process with
/// unit innovation variance, started from the stationary state covariance
/// (the discrete Lyapunov solution).
fn kalman_filter(z: &[f64], phi: &[f64], theta: &[f64]) -> Option<FilterStats> {
    let (p, q) = (phi.len(), theta.len());
    let r = p.max(q + 1);
    let mut phi_pad = vec![0.0; r];
    phi_pad[..p].copy_from_slice(phi);
    let mut rvec = vec![0.0; r];
    rvec[0] = 1.0;
    rvec[1..=q].copy_from_slice(theta);

    // stationary covariance: P = T P T' + R R'
    let transition = DMatrix::from_fn(r, r, |i, j| {
        let mut v = if j == 0 { phi_pad[i] } else { 0.0 };
        if j == i + 1 {
            v += 1.0;
        }
        v
    });
    let rr = DMatrix::from_fn(r, r, |i, j| rvec[i] * rvec[j]);
    let system = DMatrix::identity(r * r, r * r) - transition.kronecker(&transition);
    let rhs = DVector::from_iterator(r * r, rr.iter().copied());
    let solved = system.lu().solve(&rhs)?;
    // column-major vec back to row-major storage
    let mut p_mat = vec![0.0; r * r];
    for i in 0..r {
        for j in 0..r {
            p_mat[i * r + j] = solved[j * r + i];
        }
    }
    if p_mat.iter().any(|v| !v.is_finite()) {
        return None;
    }

    let mut a = vec![0.0; r];
    let mut a_next = vec![0.0; r];
    let mut gain = vec![0.0; r];
    let mut tp = vec![0.0; r * r];
    let mut sum_log_f = 0.0;
    let mut sum_v2f = 0.0;

    for &obs in z {
        let f = p_mat[0];
        if !(f > 1e-12) {
            return None;
        }
        let v = obs - a[0];
        sum_log_f += f.ln();
        sum_v2f += v * v / f;

        for i in 0..r {
            gain[i] = p_mat[i * r];
        }
        let scale = v / f;
        for i in 0..r {
            a[i] += gain[i] * scale;
        }
        for i in 0..r {
            for j in 0..r {
                p_mat[i * r + j] -= gain[i] * gain[j] / f;
            }
        }

        // a <- T a
        let a0 = a[0];
        for i in 0..r {
            a_next[i] = phi_pad[i] * a0 + if i + 1 < r { a[i + 1] } else { 0.0 };
        }
        std::mem::swap(&mut a, &mut a_next);

        // P <- T P T' + R R'
        for i in 0..r {
            for j in 0..r {
                tp[i * r + j] = phi_pad[i] * p_mat[j]
                    + if i + 1 < r { p_mat[(i + 1) * r + j] } else { 0.0 };
            }
        }
        for i in 0..r {
            for j in 0..r {
                let tpt = phi_pad[j] * tp[i * r]
                    + if j + 1 < r { tp[i * r + j + 1] } else { 0.0 };
                p_mat[i * r + j] = tpt + rvec[i] * rvec[j];
            }
        }
    }

    if !(sum_log_f.is_finite() && sum_v2f.is_finite()) {
        return None;
    }
    Some(FilterStats {
        sum_log_f,
        sum_v2f,
        n: z.len(),
    })
}

fn loglik_at(stats: &FilterStats, sigma2: f64) -> f64 {
    let n = stats.n as f64;
    -0.5 * (n * (2.0 * std::f64::consts::PI).ln()
        + n * sigma2.ln()
        + stats.sum_log_f
        + stats.sum_v2f / sigma2)
}

/// Negative log-likelihood with the innovation variance concentrated out
/// (floored so a perfect fit cannot drive it to -inf).
fn neg_loglik_concentrated(z: &[f64], phi: &[f64], theta: &[f64], floor: f64) -> f64 {
    match kalman_filter(z, phi, theta) {
        Some(stats) => {
            let sigma2 = (stats.sum_v2f / stats.n as f64).max(floor);
            -loglik_at(&stats, sigma2)
        }
        None => f64::INFINITY,
    }
}

/// Plain Nelder-Mead; deterministic, no derivatives. Returns the best vertex.
fn nelder_mead<F>(objective: F, x0: &[f64], step: f64, max_evals: usize, tol: f64) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let f = |x: &[f64]| {
        let v = objective(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let dim = x0.len();
    if dim == 0 {
        let fx = f(x0);
        return (x0.to_vec(), fx);
    }

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..dim {
        let mut x = x0.to_vec();
        x[i] += step;
        let fx = f(&x);
        simplex.push((x, fx));
    }
    let mut evals = dim + 1;

    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("no NaN objectives"));
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        if worst.is_finite() && (worst - best).abs() <= tol * (1.0 + best.abs()) {
            break;
        }

        let mut centroid = vec![0.0; dim];
        for (x, _) in &simplex[..dim] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / dim as f64;
            }
        }
        let worst_x = simplex[dim].0.clone();
        let at = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst_x)
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let reflected = at(1.0);
        let f_reflected = f(&reflected);
        evals += 1;
        if f_reflected < simplex[0].1 {
            let expanded = at(2.0);
            let f_expanded = f(&expanded);
            evals += 1;
            simplex[dim] = if f_expanded < f_reflected {
                (expanded, f_expanded)
            } else {
                (reflected, f_reflected)
            };
        } else if f_reflected < simplex[dim - 1].1 {
            simplex[dim] = (reflected, f_reflected);
        } else {
            let contracted = if f_reflected < simplex[dim].1 {
                at(0.5)
            } else {
                at(-0.5)
            };
            let f_contracted = f(&contracted);
            evals += 1;
            if f_contracted < simplex[dim].1.min(f_reflected) {
                simplex[dim] = (contracted, f_contracted);
            } else {
                // shrink toward the best vertex
                let best_x = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    for (xi, bi) in vertex.0.iter_mut().zip(&best_x) {
                        *xi = bi + 0.5 * (*xi - bi);
                    }
                    vertex.1 = f(&vertex.0);
                    evals += 1;
                }
            }
        }
    }

    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("no NaN objectives"));
    simplex.swap_remove(0)
}

struct OrderFit {
    p: usize,
    q: usize,
    phi: Vec<f64>,
    theta: Vec<f64>,
    sigma2: f64,
    loglik: f64,
    aic: f64,
}

fn fit_order(z: &[f64], p: usize, q: usize, config: &ArimaGridConfig) -> Option<OrderFit> {
    let dim = p + q;
    let floor = config.sigma2_floor;
    let split = |x: &[f64]| (x[..p].to_vec(), x[p..].to_vec());

    let css = |x: &[f64]| {
        if !is_feasible(&x[..p], &x[p..]) {
            return f64::INFINITY;
        }
        css_mean_square(z, &x[..p], &x[p..])
    };
    let exact = |x: &[f64]| {
        if !is_feasible(&x[..p], &x[p..]) {
            return f64::INFINITY;
        }
        neg_loglik_concentrated(z, &x[..p], &x[p..], floor)
    };

    let start = hannan_rissanen(z, p, q);
    let params = if dim == 0 {
        start
    } else {
        let (css_params, _) = nelder_mead(css, &start, 0.1, 120 * dim + 60, 1e-10);
        let (ml_params, ml_value) = nelder_mead(exact, &css_params, 0.05, 70 * dim + 40, 1e-9);
        if !ml_value.is_finite() {
            return None;
        }
        ml_params
    };

    let (phi, theta) = split(&params);
    let stats = kalman_filter(z, &phi, &theta)?;
    let sigma2 = (stats.sum_v2f / stats.n as f64).max(floor);
    let loglik = loglik_at(&stats, sigma2);
    let aic = 2.0 * (p + q + 2) as f64 - 2.0 * loglik;
    if !(aic.is_finite() && loglik.is_finite()) {
        return None;
    }
    Some(OrderFit {
        p,
        q,
        phi,
        theta,
        sigma2,
        loglik,
        aic,
    })
}

/// Fits ARIMA with d from the variance-reduction rule and (p, q) minimizing
/// AIC = 2k - 2 lnL over the grid, k = p + q + 2 (intercept and variance).
/// AIC ties break toward smaller p + q, then smaller q.
pub fn fit_auto_arima(series: &[f64], config: &ArimaGridConfig) -> Result<ArimaModel, BaselineError> {
    if series.iter().any(|v| !v.is_finite()) {
        return Err(BaselineError::NonFinite);
    }
    let d = select_d(series, config.max_d, config.diff_threshold);
    let w = diff_n(series, d);
    if w.len() < 20 {
        return Err(BaselineError::TooShort {
            len: w.len(),
            needed: 20,
        });
    }
    let intercept = mean(&w);
    let z: Vec<f64> = w.iter().map(|v| v - intercept).collect();

    let mut candidates: Vec<(usize, usize)> = (0..=config.max_p)
        .flat_map(|p| (0..=config.max_q).map(move |q| (p, q)))
        .collect();
    candidates.sort_by_key(|&(p, q)| (p + q, q));

    let fits: Vec<Option<OrderFit>> = candidates
        .par_iter()
        .map(|&(p, q)| fit_order(&z, p, q, config))
        .collect();

    let mut best: Option<OrderFit> = None;
    for fit in fits.into_iter().flatten() {
        // candidates arrive in tie-break order, so only a strict improvement
        // (beyond float noise) displaces the incumbent
        match &best {
            Some(current) if fit.aic >= current.aic - 1e-9 => {}
            _ => best = Some(fit),
        }
    }
    let best = best.ok_or(BaselineError::FitFailure)?;

    Ok(ArimaModel {
        order: ArimaOrder {
            p: best.p,
            d,
            q: best.q,
        },
        ar_coeffs: best.phi,
        ma_coeffs: best.theta,
        intercept,
        sigma2: best.sigma2,
        loglik: best.loglik,
        aic: best.aic,
        n_obs: w.len(),
    })
}

fn psi_weights(phi: &[f64], theta: &[f64], count: usize) -> Vec<f64> {
    let mut psi = vec![0.0; count];
    if count == 0 {
        return psi;
    }
    psi[0] = 1.0;
    for j in 1..count {
        let mut v = if j <= theta.len() { theta[j - 1] } else { 0.0 };
        for (i, &ph) in phi.iter().enumerate() {
            if j >= i + 1 {
                v += ph * psi[j - i - 1];
            }
        }
        psi[j] = v;
    }
    psi
}

/// Forecasts the original series `horizon` steps ahead. Means come from the
/// linear ARMA recursion on the differenced scale, integrated back; the
/// error variance at step h is `sigma2 * sum_{j<h} psi_j^2` with the psi
/// weights of the integrated process, so it is non-decreasing in h.
pub fn arima_forecast(model: &ArimaModel, series: &[f64], horizon: usize) -> Vec<ForecastPoint> {
    let d = model.order.d;
    let phi = &model.ar_coeffs;
    let theta = &model.ma_coeffs;
    let w = diff_n(series, d);
    let z: Vec<f64> = w.iter().map(|v| v - model.intercept).collect();
    let n = z.len();
    let eps = css_residuals(&z, phi, theta);

    // forecast the demeaned differenced series
    let mut z_ext = z;
    for h in 0..horizon {
        let t = n + h;
        let mut pred = 0.0;
        for (i, &ph) in phi.iter().enumerate() {
            if t >= i + 1 {
                pred += ph * z_ext[t - 1 - i];
            }
        }
        for (j, &th) in theta.iter().enumerate() {
            // future innovations have expectation zero
            if t >= j + 1 && t - 1 - j < n {
                pred += th * eps[t - 1 - j];
            }
        }
        z_ext.push(pred);
    }

    // integrate the means back to the original scale
    let mut tails: Vec<f64> = (0..d)
        .map(|k| *diff_n(series, k).last().expect("series outlives differencing"))
        .collect();
    let mut means = Vec::with_capacity(horizon);
    for h in 0..horizon {
        let w_hat = z_ext[n + h] + model.intercept;
        if d == 0 {
            means.push(w_hat);
        } else {
            let mut level = w_hat;
            for k in (0..d).rev() {
                tails[k] += level;
                level = tails[k];
            }
            means.push(tails[0]);
        }
    }

    // integrated psi weights: d-fold prefix sums
    let mut psi = psi_weights(phi, theta, horizon);
    for _ in 0..d {
        for j in 1..psi.len() {
            psi[j] += psi[j - 1];
        }
    }
    let mut acc = 0.0;
    means
        .into_iter()
        .zip(psi)
        .map(|(mean, psi_j)| {
            acc += psi_j * psi_j;
            ForecastPoint {
                mean,
                variance: model.sigma2 * acc,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(p: usize, d: usize, q: usize, ar: &[f64], ma: &[f64], mu: f64, s2: f64) -> ArimaModel {
        ArimaModel {
            order: ArimaOrder { p, d, q },
            ar_coeffs: ar.to_vec(),
            ma_coeffs: ma.to_vec(),
            intercept: mu,
            sigma2: s2,
            loglik: 0.0,
            aic: 0.0,
            n_obs: 0,
        }
    }

    #[test]
    fn intercept_model_forecasts_flat_mean_and_variance() {
        let m = model(0, 0, 0, &[], &[], 3.0, 2.0);
        let series = vec![2.0, 4.0, 3.5, 2.5];
        for point in arima_forecast(&m, &series, 4) {
            assert!((point.mean - 3.0).abs() < 1e-12);
            assert!((point.variance - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ar1_forecast_matches_closed_form() {
        let (phi, mu, s2) = (0.6, 1.0, 0.5);
        let m = model(1, 0, 0, &[phi], &[], mu, s2);
        let series = vec![1.2, 0.8, 1.5, 4.0]; // last deviation 3.0
        let points = arima_forecast(&m, &series, 5);
        for (h, point) in points.iter().enumerate() {
            let h = (h + 1) as i32;
            let mean = mu + phi.powi(h) * 3.0;
            let var = s2 * (1.0 - phi.powi(2 * h)) / (1.0 - phi * phi);
            assert!((point.mean - mean).abs() < 1e-12, "h={h}");
            assert!((point.variance - var).abs() < 1e-12, "h={h}");
        }
    }

    #[test]
    fn ma1_forecast_matches_closed_form() {
        let (theta, mu, s2) = (0.5, 2.0, 1.0);
        let m = model(0, 0, 1, &[], &[theta], mu, s2);
        let series = vec![2.1, 1.9, 2.4, 1.7, 2.2];
        let points = arima_forecast(&m, &series, 3);
        assert!((points[0].variance - s2).abs() < 1e-12);
        for point in &points[1..] {
            assert!((point.mean - mu).abs() < 1e-12);
            assert!((point.variance - s2 * (1.0 + theta * theta)).abs() < 1e-12);
        }
    }

    #[test]
    fn random_walk_variance_grows_linearly() {
        let m = model(0, 1, 0, &[], &[], 0.0, 1.0);
        let series = vec![0.0, 1.0, 0.5, 1.5];
        let points = arima_forecast(&m, &series, 4);
        for (h, point) in points.iter().enumerate() {
            assert!((point.variance - (h + 1) as f64).abs() < 1e-12);
            assert!((point.mean - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn forecast_variance_is_non_decreasing() {
        let m = model(2, 1, 1, &[0.4, -0.3], &[0.25], 0.1, 0.8);
        let series: Vec<f64> = (0..30).map(|i| (i as f64 * 0.7).sin() + 0.1 * i as f64).collect();
        let points = arima_forecast(&m, &series, 12);
        for w in points.windows(2) {
            assert!(w[1].variance >= w[0].variance);
        }
    }

    #[test]
    fn short_and_non_finite_series_are_rejected() {
        let config = ArimaGridConfig::default();
        assert!(matches!(
            fit_auto_arima(&[1.0; 10], &config),
            Err(BaselineError::TooShort { .. })
        ));
        let mut series = vec![1.0; 30];
        series[5] = f64::NAN;
        assert!(matches!(
            fit_auto_arima(&series, &config),
            Err(BaselineError::NonFinite)
        ));
    }

    #[test]
    fn constant_series_hits_the_variance_floor() {
        let config = ArimaGridConfig::default();
        let m = fit_auto_arima(&[4.2; 40], &config).unwrap();
        assert_eq!(m.order.d, 0);
        assert_eq!((m.order.p, m.order.q), (0, 0));
        assert!((m.sigma2 - config.sigma2_floor).abs() < 1e-20);
        assert!((m.intercept - 4.2).abs() < 1e-12);
    }

    #[test]
    fn recovers_an_ar1_coefficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut z = vec![0.0f64];
        for _ in 1..400 {
            let shock: f64 = rng.gen::<f64>() + rng.gen::<f64>() + rng.gen::<f64>()
                + rng.gen::<f64>() + rng.gen::<f64>() + rng.gen::<f64>()
                - 3.0; // approximately standard normal
            z.push(0.8 * z.last().unwrap() + shock);
        }
        let m = fit_auto_arima(&z, &ArimaGridConfig::default()).unwrap();
        assert_eq!(m.order.d, 0, "stationary AR(1) should not be differenced");
        assert!(m.order.p >= 1, "AR term missed: {:?}", m.order);
        if m.order.p == 1 && m.order.q == 0 {
            assert!((m.ar_coeffs[0] - 0.8).abs() < 0.12, "phi = {}", m.ar_coeffs[0]);
        }
    }

    #[test]
    fn aic_is_consistent_with_the_stored_loglik() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let series: Vec<f64> = (0..60).map(|_| rng.gen::<f64>() * 2.0).collect();
        let m = fit_auto_arima(&series, &ArimaGridConfig::default()).unwrap();
        let k = (m.order.p + m.order.q + 2) as f64;
        assert!((m.aic - (2.0 * k - 2.0 * m.loglik)).abs() < 1e-9);
    }
}
