//! Levenberg-Marquardt iteration with Marquardt's diagonal scaling.

use super::linalg::{gram, invert_spd, project, solve_spd};
use super::{FitConfig, FitError};
use crate::scalar::Scalar;

pub(crate) struct Outcome<T> {
    pub params: Vec<T>,
    pub rss: T,
    pub iterations: usize,
    pub converged: bool,
    pub clamped: bool,
    /// Diagonal of `(JᵀJ)⁻¹` at the final parameters; `None` when singular.
    pub covariance_diag: Option<Vec<T>>,
    pub diagnostic: Option<String>,
}

const LAMBDA_MAX: f64 = 1e20;

fn clamp<T: Scalar>(theta: &mut [T], bounds: Option<&[(T, T)]>) -> bool {
    let mut changed = false;
    if let Some(bounds) = bounds {
        for (v, &(lo, hi)) in theta.iter_mut().zip(bounds) {
            let c = v.max(lo).min(hi);
            if c != *v {
                *v = c;
                changed = true;
            }
        }
    }
    changed
}

fn sum_sq<T: Scalar>(target: &[T], fitted: &[T]) -> T {
    target
        .iter()
        .zip(fitted)
        .map(|(&p, &f)| (p - f) * (p - f))
        .fold(T::zero(), |acc, v| acc + v)
}

/// Largest cosine between a residual and a Jacobian column; zero at a
/// stationary point.
fn gradient_cosine<T: Scalar>(g: &[T], h: &[Vec<T>], rss: T) -> T {
    g.iter()
        .enumerate()
        .map(|(i, &gi)| {
            let denom = (h[i][i] * rss).sqrt();
            if denom > T::zero() {
                gi.abs() / denom
            } else {
                T::zero()
            }
        })
        .fold(T::zero(), T::max)
}

/// Minimizes `Σ (target_r − f_r(θ))²`. `model` returns the fitted values and
/// the Jacobian (one row per observation) at `θ`.
pub(crate) fn minimize<T, F>(
    target: &[T],
    start: Vec<T>,
    bounds: Option<&[(T, T)]>,
    config: &FitConfig<T>,
    model: F,
) -> Result<Outcome<T>, FitError>
where
    T: Scalar,
    F: Fn(&[T]) -> Result<(Vec<T>, Vec<Vec<T>>), FitError>,
{
    let k = start.len();
    let mut theta = start;
    let mut clamped = clamp(&mut theta, bounds);
    let (mut fitted, mut jac) = model(&theta)?;
    let mut rss = sum_sq(target, &fitted);
    if !rss.is_finite() {
        return Err(FitError::InvalidRss(rss.to_f64().unwrap_or(f64::NAN)));
    }
    let gtol = config.tolerance.sqrt();
    let lambda_max = T::lit(LAMBDA_MAX);
    let mut lambda = config.damping.initial;
    let mut iterations = 0;
    let mut converged = false;
    let mut diagnostic = None;

    'outer: while iterations < config.max_iterations {
        if rss == T::zero() {
            converged = true;
            break;
        }
        iterations += 1;
        let resid: Vec<T> = target.iter().zip(&fitted).map(|(&p, &f)| p - f).collect();
        let h = gram(&jac, k);
        let g = project(&jac, &resid, k);
        if gradient_cosine(&g, &h, rss) <= gtol {
            converged = true;
            break;
        }
        loop {
            if lambda > lambda_max {
                diagnostic = Some("damping limit reached without reducing RSS".to_string());
                break 'outer;
            }
            let mut damped = h.clone();
            for (i, row) in damped.iter_mut().enumerate() {
                row[i] = h[i][i] * (T::one() + lambda);
            }
            let Some(delta) = solve_spd(&damped, &g) else {
                diagnostic = Some("singular normal equations".to_string());
                break 'outer;
            };
            let mut trial: Vec<T> = theta.iter().zip(&delta).map(|(&t, &d)| t + d).collect();
            let hit_bound = clamp(&mut trial, bounds);
            if trial == theta {
                // the step vanished in floating point, or the bounds absorbed it
                converged = true;
                clamped |= hit_bound;
                break 'outer;
            }
            let accepted = match model(&trial) {
                Ok((f2, j2)) => {
                    let rss2 = sum_sq(target, &f2);
                    (rss2.is_finite() && rss2 < rss).then_some((f2, j2, rss2))
                }
                Err(_) => None,
            };
            match accepted {
                Some((f2, j2, rss2)) => {
                    let step: T = delta
                        .iter()
                        .map(|&d| d * d)
                        .fold(T::zero(), |a, v| a + v)
                        .sqrt();
                    let size: T = theta
                        .iter()
                        .map(|&t| t * t)
                        .fold(T::zero(), |a, v| a + v)
                        .sqrt();
                    let rel_drop = (rss - rss2) / rss;
                    theta = trial;
                    fitted = f2;
                    jac = j2;
                    rss = rss2;
                    clamped |= hit_bound;
                    lambda = (lambda * config.damping.decrease).max(T::epsilon());
                    // relative change only counts once the step is close to Gauss-Newton
                    if lambda < T::one()
                        && (rel_drop <= config.tolerance
                            || step <= config.tolerance * (size + config.tolerance))
                    {
                        converged = true;
                        break 'outer;
                    }
                    break;
                }
                None => lambda = lambda * config.damping.increase,
            }
        }
    }

    if !converged && diagnostic.is_none() && iterations >= config.max_iterations {
        diagnostic = Some(format!("no convergence after {iterations} iterations"));
    }
    if !converged && diagnostic.as_deref() == Some("damping limit reached without reducing RSS") {
        // at a minimum every step is rejected; accept if the gradient agrees
        let resid: Vec<T> = target.iter().zip(&fitted).map(|(&p, &f)| p - f).collect();
        let h = gram(&jac, k);
        if gradient_cosine(&project(&jac, &resid, k), &h, rss) <= gtol.sqrt() {
            converged = true;
            diagnostic = None;
        }
    }
    let covariance_diag = invert_spd(&gram(&jac, k)).map(|inv| (0..k).map(|i| inv[i][i]).collect());
    Ok(Outcome {
        params: theta,
        rss,
        iterations,
        converged,
        clamped,
        covariance_diag,
        diagnostic,
    })
}
