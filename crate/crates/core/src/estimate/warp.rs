//! Fitting the daily mean profile to a partial day.
//!
//! The fitted curve is `alpha * profile(beta * (t_day - tau))`: an amplitude
//! scale, a stretch of the time axis around midnight, and a shift. The
//! objective over the samples seen so far is
//!
//! ```text
//! sum (y_t - alpha * profile(beta * (t - tau)))^2
//!     + lambda_beta * (beta - 1)^2 + lambda_tau * (tau / 3600)^2
//! ```
//!
//! `(beta, tau)` are searched exhaustively on a coarse grid, then on the
//! half-step neighbourhood of the best coarse cell. A Nelder-Mead polish
//! then leaves the grid: beta and tau trade off along narrow diagonal
//! valleys (a small stretch error moves late features by many minutes),
//! which a fixed grid resolves only to within several tau steps. For each
//! candidate `alpha` is the non-negative least-squares scalar
//! `max(0, <y, f> / <f, f>)`.
//!
//! [`WarpFitter`] keeps per-cell running sums so that refitting after every
//! new sample costs one pass over the grid instead of one pass over the
//! grid per sample seen.

use serde::Serialize;

use super::profile::DailyProfile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WarpParams {
    pub alpha: f64,
    pub beta: f64,
    pub tau_s: f64,
}

impl WarpParams {
    pub const IDENTITY: WarpParams = WarpParams {
        alpha: 1.0,
        beta: 1.0,
        tau_s: 0.0,
    };

    /// The warped profile at `t_day_s` seconds after midnight.
    pub fn apply(&self, profile: &DailyProfile, t_day_s: f64) -> f64 {
        self.alpha * profile.at(self.beta * (t_day_s - self.tau_s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WarpFit {
    pub params: WarpParams,
    pub objective: f64,
    /// Set when the profile is all zero or no positive amplitude fits; the
    /// params are then the identity and carry no information.
    pub degenerate: bool,
}

/// Search box and coarse step sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WarpSearch {
    pub beta_min: f64,
    pub beta_max: f64,
    pub beta_step: f64,
    pub tau_max_s: f64,
    pub tau_step_s: f64,
    /// Continue the half-step refinement with a simplex search off the grid.
    pub polish: bool,
}

impl Default for WarpSearch {
    fn default() -> Self {
        Self {
            beta_min: 0.5,
            beta_max: 2.0,
            beta_step: 0.05,
            tau_max_s: 14_400.0,
            tau_step_s: 300.0,
            polish: true,
        }
    }
}

const NELDER_MEAD_ITERATIONS: usize = 200;
const NELDER_MEAD_TOLERANCE: f64 = 1e-4;

fn snap(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

impl WarpSearch {
    fn betas(&self) -> Vec<f64> {
        let n = ((self.beta_max - self.beta_min) / self.beta_step).round() as usize;
        (0..=n)
            .map(|i| snap(self.beta_min + i as f64 * self.beta_step))
            .collect()
    }

    fn taus(&self) -> Vec<f64> {
        let n = (self.tau_max_s / self.tau_step_s).round() as i64;
        (-n..=n).map(|i| snap(i as f64 * self.tau_step_s)).collect()
    }

    fn clamp_beta(&self, beta: f64) -> f64 {
        beta.clamp(self.beta_min, self.beta_max)
    }

    fn clamp_tau(&self, tau: f64) -> f64 {
        tau.clamp(-self.tau_max_s, self.tau_max_s)
    }
}

fn penalty(beta: f64, tau_s: f64, lambda_beta: f64, lambda_tau: f64) -> f64 {
    let hours = tau_s / 3600.0;
    lambda_beta * (beta - 1.0).powi(2) + lambda_tau * hours * hours
}

/// Distance from the identity, used to break exact objective ties.
fn identity_distance(beta: f64, tau_s: f64) -> f64 {
    (beta - 1.0).abs() + (tau_s / 3600.0).abs()
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    alpha: f64,
    beta: f64,
    tau_s: f64,
    objective: f64,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        self.objective < other.objective
            || (self.objective == other.objective
                && identity_distance(self.beta, self.tau_s)
                    < identity_distance(other.beta, other.tau_s))
    }
}

/// Incremental fitter over a growing prefix of one day.
#[derive(Debug, Clone)]
pub struct WarpFitter<'a> {
    profile: &'a DailyProfile,
    search: WarpSearch,
    betas: Vec<f64>,
    taus: Vec<f64>,
    sum_yf: Vec<f64>,
    sum_ff: Vec<f64>,
    sum_yy: f64,
    samples: Vec<(f64, f64)>,
}

impl<'a> WarpFitter<'a> {
    pub fn new(profile: &'a DailyProfile, search: WarpSearch) -> Self {
        let betas = search.betas();
        let taus = search.taus();
        let cells = betas.len() * taus.len();
        Self {
            profile,
            search,
            betas,
            taus,
            sum_yf: vec![0.0; cells],
            sum_ff: vec![0.0; cells],
            sum_yy: 0.0,
            samples: Vec::new(),
        }
    }

    /// Adds the observation `y` at `t_day_s` seconds after midnight.
    pub fn push(&mut self, t_day_s: f64, y: f64) {
        let ntau = self.taus.len();
        for (bi, &beta) in self.betas.iter().enumerate() {
            for (ti, &tau) in self.taus.iter().enumerate() {
                let f = self.profile.at(beta * (t_day_s - tau));
                let cell = bi * ntau + ti;
                self.sum_yf[cell] += y * f;
                self.sum_ff[cell] += f * f;
            }
        }
        self.sum_yy += y * y;
        self.samples.push((t_day_s, y));
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Closed-form amplitude and objective from the two running sums.
    fn candidate(
        &self,
        beta: f64,
        tau_s: f64,
        yf: f64,
        ff: f64,
        lambda_beta: f64,
        lambda_tau: f64,
    ) -> Candidate {
        let alpha = if ff > 0.0 { (yf / ff).max(0.0) } else { 0.0 };
        let residual = (self.sum_yy - 2.0 * alpha * yf + alpha * alpha * ff).max(0.0);
        Candidate {
            alpha,
            beta,
            tau_s,
            objective: residual + penalty(beta, tau_s, lambda_beta, lambda_tau),
        }
    }

    fn evaluate(&self, beta: f64, tau_s: f64, lambda_beta: f64, lambda_tau: f64) -> Candidate {
        let mut yf = 0.0;
        let mut ff = 0.0;
        for &(t, y) in &self.samples {
            let f = self.profile.at(beta * (t - tau_s));
            yf += y * f;
            ff += f * f;
        }
        self.candidate(beta, tau_s, yf, ff, lambda_beta, lambda_tau)
    }

    /// Half-step pass around a coarse cell, then the optional polish.
    fn refine(&self, coarse: Candidate, lambda_beta: f64, lambda_tau: f64) -> Candidate {
        let center = self.evaluate(coarse.beta, coarse.tau_s, lambda_beta, lambda_tau);
        let step_beta = self.search.beta_step / 2.0;
        let step_tau = self.search.tau_step_s / 2.0;
        let mut best = self.neighbourhood(center, step_beta, step_tau, lambda_beta, lambda_tau);
        if self.search.polish {
            let polished = self.nelder_mead(best, step_beta, step_tau, lambda_beta, lambda_tau);
            if polished.beats(&best) {
                best = polished;
            }
        }
        best
    }

    /// Nelder-Mead simplex search started at `start` with edges of the given
    /// lengths. Follows the narrow diagonal valleys that couple beta and tau.
    fn nelder_mead(
        &self,
        start: Candidate,
        step_beta: f64,
        step_tau: f64,
        lambda_beta: f64,
        lambda_tau: f64,
    ) -> Candidate {
        let eval = |p: [f64; 2]| {
            let (beta, tau_s) = (p[0], p[1] * step_tau / step_beta);
            if beta != self.search.clamp_beta(beta) || tau_s != self.search.clamp_tau(tau_s) {
                return Candidate {
                    alpha: 0.0,
                    beta,
                    tau_s,
                    objective: f64::INFINITY,
                };
            }
            self.evaluate(beta, tau_s, lambda_beta, lambda_tau)
        };
        // tau is rescaled so both coordinates move in beta-sized units
        let scale = step_beta / step_tau;
        let mut simplex: Vec<([f64; 2], Candidate)> = [
            [start.beta, start.tau_s * scale],
            [start.beta + step_beta, start.tau_s * scale],
            [start.beta, start.tau_s * scale + step_beta],
        ]
        .into_iter()
        .map(|p| (p, eval(p)))
        .collect();
        let order = |a: &([f64; 2], Candidate), b: &([f64; 2], Candidate)| {
            if a.1.beats(&b.1) {
                std::cmp::Ordering::Less
            } else if b.1.beats(&a.1) {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        };
        let lerp =
            |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];

        for _ in 0..NELDER_MEAD_ITERATIONS {
            simplex.sort_by(order);
            let size = simplex[1..]
                .iter()
                .map(|(p, _)| {
                    (p[0] - simplex[0].0[0])
                        .abs()
                        .max((p[1] - simplex[0].0[1]).abs())
                })
                .fold(0.0, f64::max);
            if size < NELDER_MEAD_TOLERANCE {
                break;
            }
            let centroid = lerp(simplex[0].0, simplex[1].0, 0.5);
            let worst = simplex[2];
            let reflected = lerp(centroid, worst.0, -1.0);
            let r = eval(reflected);
            if r.beats(&simplex[0].1) {
                let expanded = lerp(centroid, worst.0, -2.0);
                let e = eval(expanded);
                simplex[2] = if e.beats(&r) {
                    (expanded, e)
                } else {
                    (reflected, r)
                };
            } else if r.beats(&simplex[1].1) {
                simplex[2] = (reflected, r);
            } else {
                let contracted = if r.beats(&worst.1) {
                    lerp(centroid, reflected, 0.5)
                } else {
                    lerp(centroid, worst.0, 0.5)
                };
                let c = eval(contracted);
                if c.beats(&worst.1) && c.beats(&r) {
                    simplex[2] = (contracted, c);
                } else {
                    let best = simplex[0].0;
                    for v in simplex.iter_mut().skip(1) {
                        let p = lerp(best, v.0, 0.5);
                        *v = (p, eval(p));
                    }
                }
            }
        }
        simplex.sort_by(order);
        simplex[0].1
    }

    /// Best of `center` and its eight neighbours at the given steps.
    fn neighbourhood(
        &self,
        center: Candidate,
        step_beta: f64,
        step_tau: f64,
        lambda_beta: f64,
        lambda_tau: f64,
    ) -> Candidate {
        let mut best = center;
        for db in [-step_beta, 0.0, step_beta] {
            for dt in [-step_tau, 0.0, step_tau] {
                if db == 0.0 && dt == 0.0 {
                    continue;
                }
                let beta = self.search.clamp_beta(snap(center.beta + db));
                let tau_s = self.search.clamp_tau(snap(center.tau_s + dt));
                let c = self.evaluate(beta, tau_s, lambda_beta, lambda_tau);
                if c.beats(&best) {
                    best = c;
                }
            }
        }
        best
    }

    /// Best warp for the samples pushed so far.
    pub fn fit(&self, lambda_beta: f64, lambda_tau: f64) -> WarpFit {
        if self.profile.is_all_zero() || self.samples.is_empty() {
            return WarpFit {
                params: WarpParams::IDENTITY,
                objective: self.sum_yy,
                degenerate: true,
            };
        }

        let ntau = self.taus.len();
        let mut coarse: Option<Candidate> = None;
        for (bi, &beta) in self.betas.iter().enumerate() {
            for (ti, &tau_s) in self.taus.iter().enumerate() {
                let cell = bi * ntau + ti;
                let c = self.candidate(
                    beta,
                    tau_s,
                    self.sum_yf[cell],
                    self.sum_ff[cell],
                    lambda_beta,
                    lambda_tau,
                );
                if coarse.is_none_or(|b| c.beats(&b)) {
                    coarse = Some(c);
                }
            }
        }
        let best = self.refine(
            coarse.expect("search grid is non-empty"),
            lambda_beta,
            lambda_tau,
        );

        if best.alpha <= 0.0 {
            return WarpFit {
                params: WarpParams::IDENTITY,
                objective: best.objective,
                degenerate: true,
            };
        }
        WarpFit {
            params: WarpParams {
                alpha: best.alpha,
                beta: best.beta,
                tau_s: best.tau_s,
            },
            objective: best.objective,
            degenerate: false,
        }
    }

    /// Objective of arbitrary parameters (alpha given, not solved).
    pub fn objective_at(&self, params: WarpParams, lambda_beta: f64, lambda_tau: f64) -> f64 {
        let residual: f64 = self
            .samples
            .iter()
            .map(|&(t, y)| {
                let r = y - params.apply(self.profile, t);
                r * r
            })
            .sum();
        residual + penalty(params.beta, params.tau_s, lambda_beta, lambda_tau)
    }
}

/// Fits a day prefix given as `(seconds after midnight, scaled ratio)` pairs.
pub fn fit_warp(
    profile: &DailyProfile,
    today: &[(f64, f64)],
    lambda_beta: f64,
    lambda_tau: f64,
) -> WarpFit {
    let mut fitter = WarpFitter::new(profile, WarpSearch::default());
    for &(t, y) in today {
        fitter.push(t, y);
    }
    fitter.fit(lambda_beta, lambda_tau)
}
