//! Spatial contention functionals of the Poisson cluster network.
//!
//! `Ω₁` is the Laplace-functional exponent contributed by a cluster with one
//! active transmitter, `Ω₂` by a cluster whose two nodes transmit at once.
//! With Rayleigh fading and the per-link outage kernel
//! `f(v) = θrᵅ v⁻ᵅ / (1 + θrᵅ v⁻ᵅ)`, `Ω₁ = ∫ℝ² f(|x|) dx` has a closed form
//! while `Ω₂` is a nested integral evaluated numerically.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::{gamma, integrate_adaptive, AdaptiveOptions, GaussLegendre, QuadResult};

/// Propagation and decoding parameters shared by every link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Path-loss exponent, > 2.
    pub alpha: f64,
    /// Intra-cluster link distance in meters, ≥ 1.
    pub r: f64,
    /// SIR decoding threshold (linear). Zero is accepted as the degenerate
    /// no-outage limit.
    pub theta: f64,
    /// Transmit power common to all nodes. The SIR does not depend on it.
    pub power: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            alpha: 4.0,
            r: 1.0,
            theta: 2.0,
            power: 1.0,
        }
    }
}

impl ChannelParams {
    pub fn new(alpha: f64, r: f64, theta: f64) -> Result<Self> {
        let ch = Self {
            alpha,
            r,
            theta,
            power: 1.0,
        };
        ch.validate()?;
        Ok(ch)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 2.0) {
            return Err(Error::invalid(
                "alpha",
                self.alpha,
                "path-loss exponent must exceed 2 (Gamma(1-2/alpha) diverges)",
            ));
        }
        if !(self.r.is_finite() && self.r >= 1.0) {
            return Err(Error::invalid("r", self.r, "link distance must be >= 1"));
        }
        if !(self.theta.is_finite() && self.theta >= 0.0) {
            return Err(Error::invalid(
                "theta",
                self.theta,
                "SIR threshold must be >= 0",
            ));
        }
        if !(self.power.is_finite() && self.power > 0.0) {
            return Err(Error::invalid(
                "power",
                self.power,
                "transmit power must be > 0",
            ));
        }
        Ok(())
    }

    /// `θ rᵅ`: the normalized SIR requirement of the intended link.
    pub fn link_threshold(&self) -> f64 {
        self.theta * self.r.powf(self.alpha)
    }

    /// Outage kernel `f(v)` evaluated from the squared distance `v²`.
    #[inline]
    pub fn outage_kernel_sq(&self, dist_sq: f64) -> f64 {
        let s = self.link_threshold();
        if s == 0.0 {
            return 0.0;
        }
        s / (dist_sq.max(0.0).powf(0.5 * self.alpha) + s)
    }
}

/// How the half line `u ∈ [0, ∞)` is folded onto a unit interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mapping {
    /// `u = t / (1 − t)`, `t ∈ [0, 1)`.
    Rational,
    /// `u = w^(−m) − 1` with `m = 1/(α − 2)`: the rational map followed by
    /// `1 − t = wᵐ`, which turns the `u^(1−α)` tail into a bounded
    /// integrand at `w → 0` for every `α > 2`.
    TailMatched,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Relative tolerance of the adaptive outer integral.
    pub rel_tol: f64,
    /// Gauss–Legendre nodes for the inner angular integral on `[0, π]`.
    pub inner_nodes: usize,
    pub mapping: Mapping,
    pub max_intervals: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            inner_nodes: 64,
            mapping: Mapping::TailMatched,
            max_intervals: 4000,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rel_tol.is_nan() || self.rel_tol <= 0.0 {
            return Err(Error::invalid("rel_tol", self.rel_tol, "must be > 0"));
        }
        if self.inner_nodes < 16 {
            return Err(Error::invalid(
                "inner_nodes",
                self.inner_nodes as f64,
                "at least 16 nodes are required",
            ));
        }
        Ok(())
    }

    fn adaptive(&self) -> AdaptiveOptions {
        AdaptiveOptions {
            rel_tol: self.rel_tol,
            abs_tol: 1e-300,
            max_intervals: self.max_intervals,
        }
    }
}

/// Integrates `g(u)` over `u ∈ [0, ∞)` after compactification.
fn integrate_half_line<G: FnMut(f64) -> f64>(
    mut g: G,
    alpha: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadResult> {
    match cfg.mapping {
        Mapping::Rational => integrate_adaptive(
            |t| {
                let one_minus = 1.0 - t;
                let u = t / one_minus;
                g(u) / (one_minus * one_minus)
            },
            0.0,
            1.0,
            cfg.adaptive(),
        ),
        Mapping::TailMatched => {
            let m = 1.0 / (alpha - 2.0);
            integrate_adaptive(
                |w| {
                    let wm = w.powf(-m);
                    let u = wm - 1.0;
                    let v = g(u);
                    if v == 0.0 {
                        0.0
                    } else {
                        v * m * wm / w
                    }
                },
                0.0,
                1.0,
                cfg.adaptive(),
            )
        }
    }
}

/// Closed form `Ω₁ = π r² θ^(2/α) Γ(1 − 2/α) Γ(1 + 2/α)`.
pub fn omega1(ch: &ChannelParams) -> Result<f64> {
    ch.validate()?;
    let z = 2.0 / ch.alpha;
    Ok(PI * ch.r * ch.r * ch.theta.powf(z) * gamma(1.0 - z) * gamma(1.0 + z))
}

/// Diagnostics of a nested `Ω₂` quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Omega2Quadrature {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
    pub outer_evaluations: usize,
}

/// `Ω₂ = ∫₀^∞ 2u (π − (1 − f(u)) ∫₀^π (1 − f(d(u, φ))) dφ) du` with
/// `d(u, φ)² = u² + r² + 2ru cos φ`.
///
/// The bracket is expanded to `π f(u) + (1 − f(u)) ∫₀^π f(d) dφ`, a sum of
/// non-negative terms, so the far field loses no digits to cancellation.
pub fn omega2_quadrature(ch: &ChannelParams, cfg: &QuadratureConfig) -> Result<Omega2Quadrature> {
    ch.validate()?;
    cfg.validate()?;
    if ch.link_threshold() == 0.0 {
        return Ok(Omega2Quadrature {
            value: 0.0,
            error: 0.0,
            intervals: 0,
            outer_evaluations: 0,
        });
    }
    let rule = GaussLegendre::new(cfg.inner_nodes);
    let (phis, weights) = rule.mapped(0.0, PI);
    let cosines: Vec<f64> = phis.iter().map(|p| p.cos()).collect();
    let r = ch.r;

    let integrand = |u: f64| -> f64 {
        let u_sq = u * u;
        let f_u = ch.outage_kernel_sq(u_sq);
        let inner: f64 = cosines
            .iter()
            .zip(&weights)
            .map(|(&c, &w)| w * ch.outage_kernel_sq(u_sq + r * r + 2.0 * r * u * c))
            .sum();
        2.0 * u * (PI * f_u + (1.0 - f_u) * inner)
    };
    let res = integrate_half_line(integrand, ch.alpha, cfg)?;
    Ok(Omega2Quadrature {
        value: res.value,
        error: res.error,
        intervals: res.intervals,
        outer_evaluations: res.evaluations,
    })
}

pub fn omega2(ch: &ChannelParams, cfg: &QuadratureConfig) -> Result<f64> {
    omega2_quadrature(ch, cfg).map(|q| q.value)
}

/// Success-probability penalty `β = exp(−η θ rᵅ)` of a residual
/// self-interference floor `ηP`.
pub fn ic_scale_beta(eta: f64, ch: &ChannelParams) -> Result<f64> {
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::invalid(
            "eta",
            eta,
            "residual IC fraction must lie in [0, 1)",
        ));
    }
    ch.validate()?;
    Ok((-eta * ch.link_threshold()).exp())
}

/// `Ω₁`, `Ω₂` and `β` for one parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialConstants {
    pub omega1: f64,
    pub omega2: f64,
    pub beta: f64,
}

impl SpatialConstants {
    pub fn compute(ch: &ChannelParams, eta: f64, cfg: &QuadratureConfig) -> Result<Self> {
        Ok(Self {
            omega1: omega1(ch)?,
            omega2: omega2(ch, cfg)?,
            beta: ic_scale_beta(eta, ch)?,
        })
    }

    /// The same geometry under perfect self-interference cancellation.
    pub fn ideal(&self) -> Self {
        Self { beta: 1.0, ..*self }
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Self { beta, ..*self }
    }

    /// `Ω₂ − 2Ω₁`, non-positive: a full-duplex pair costs less than two
    /// independent transmitters.
    pub fn pair_correction(&self) -> f64 {
        self.omega2 - 2.0 * self.omega1
    }
}

/// Reference `Ω₂` for `(α, r, θ) = (4, 1, 2)`, produced by
/// [`oracle::omega2_mc_oracle`] with the recorded seed and sample count.
pub mod golden {
    pub const OMEGA2_A4_R1_T2: f64 = 11.342126174699358;
    pub const OMEGA2_A4_R1_T2_STD_ERROR: f64 = 7.603213658589825e-4;
    pub const OMEGA2_A4_R1_T2_SEED: u64 = 20_160_705;
    pub const OMEGA2_A4_R1_T2_SAMPLES: usize = 10_000_000;
}

/// Independent numerical routes to `Ω₁` and `Ω₂`, used to validate the
/// closed form and the nested quadrature.
pub mod oracle {
    use super::*;

    /// `Ω₁` as the planar integral `∫₀^∞ 2πu f(u) du`.
    pub fn omega1_integral_oracle(ch: &ChannelParams, cfg: &QuadratureConfig) -> Result<f64> {
        ch.validate()?;
        cfg.validate()?;
        if ch.link_threshold() == 0.0 {
            return Ok(0.0);
        }
        let res =
            integrate_half_line(|u| 2.0 * PI * u * ch.outage_kernel_sq(u * u), ch.alpha, cfg)?;
        Ok(res.value)
    }

    pub const MIN_MC_SAMPLES: usize = 100_000;

    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct McOmega2 {
        pub omega2: f64,
        /// Estimate of `∫₀^∞ 2u f(u) ∫₀^π f(d(u, φ)) dφ du`.
        pub cross_term: f64,
        pub std_error: f64,
        pub samples: usize,
        pub seed: u64,
    }

    /// Monte Carlo estimate of `Ω₂ = 2Ω₁ − X`, where `X` is the overlap of
    /// the two outage kernels of a transmitting pair.
    ///
    /// In `v = u²` the cross term is `∫₀^∞ ∫₀^π f(√v) f(d) dφ dv`. Radii are
    /// drawn from a proposal flat on `[0, v₀]` with a Pareto tail
    /// `(v₀/v)^(α/2)` beyond `v₀ = (θrᵅ)^(2/α)`; the importance weight is then
    /// bounded by one, so the estimator has finite variance for all `α > 2`.
    pub fn omega2_mc_oracle(ch: &ChannelParams, samples: usize, seed: u64) -> Result<McOmega2> {
        ch.validate()?;
        if samples < MIN_MC_SAMPLES {
            return Err(Error::invalid(
                "samples",
                samples as f64,
                "the Monte Carlo oracle needs at least 1e5 samples",
            ));
        }
        let omega1 = super::omega1(ch)?;
        let s = ch.link_threshold();
        if s == 0.0 {
            return Ok(McOmega2 {
                omega2: 0.0,
                cross_term: 0.0,
                std_error: 0.0,
                samples,
                seed,
            });
        }
        let half_alpha = 0.5 * ch.alpha;
        let v0 = s.powf(1.0 / half_alpha);
        let mass = v0 * half_alpha / (half_alpha - 1.0);
        let p_flat = v0 / mass;
        let tail_exp = -1.0 / (half_alpha - 1.0);
        let r = ch.r;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..samples {
            let pick: f64 = rng.random();
            let uni: f64 = rng.random();
            let (v, proposal) = if pick < p_flat {
                (uni * v0, 1.0)
            } else {
                let v = v0 * (1.0 - uni).powf(tail_exp);
                (v, (v0 / v).powf(half_alpha))
            };
            let phi = PI * rng.random::<f64>();
            let u = v.sqrt();
            let d_sq = v + r * r + 2.0 * r * u * phi.cos();
            let x = PI * mass * ch.outage_kernel_sq(v) / proposal * ch.outage_kernel_sq(d_sq);
            sum += x;
            sum_sq += x * x;
        }
        let n = samples as f64;
        let mean = sum / n;
        let var = ((sum_sq / n - mean * mean) * n / (n - 1.0)).max(0.0);
        let std_error = (var / n).sqrt();
        Ok(McOmega2 {
            omega2: 2.0 * omega1 - mean,
            cross_term: mean,
            std_error,
            samples,
            seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::oracle::*;
    use super::*;
    use approx::assert_relative_eq;

    fn ch(alpha: f64, r: f64, theta: f64) -> ChannelParams {
        ChannelParams::new(alpha, r, theta).unwrap()
    }

    #[test]
    fn omega1_reference_values() {
        let expected = PI * PI * 2f64.sqrt() / 2.0;
        assert_relative_eq!(
            omega1(&ch(4.0, 1.0, 2.0)).unwrap(),
            expected,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            omega1(&ch(4.0, 1.0, 2.0)).unwrap(),
            6.978864,
            max_relative = 1e-6
        );
        assert_relative_eq!(
            omega1(&ch(4.0, 2.0, 2.0)).unwrap(),
            4.0 * expected,
            max_relative = 1e-13
        );
        assert!(omega1(&ch(4.0, 1.0, 1e-12)).unwrap() < 1e-5);
        assert_eq!(omega1(&ch(4.0, 1.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn alpha_at_or_below_two_is_rejected() {
        let bad = ChannelParams {
            alpha: 2.0,
            ..Default::default()
        };
        assert!(matches!(
            omega1(&bad),
            Err(Error::InvalidParameter { name: "alpha", .. })
        ));
        assert!(ChannelParams::new(4.0, 0.5, 2.0).is_err());
    }

    #[test]
    fn omega1_oracle_matches_closed_form() {
        let cfg = QuadratureConfig::default();
        for &(a, r, t) in &[(4.0, 1.0, 2.0), (3.0, 1.0, 1.0), (2.5, 2.0, 10.0)] {
            let c = ch(a, r, t);
            let closed = omega1(&c).unwrap();
            let num = omega1_integral_oracle(&c, &cfg).unwrap();
            assert_relative_eq!(num, closed, max_relative = 5e-3);
        }
        assert_eq!(
            omega1_integral_oracle(&ch(4.0, 1.0, 0.0), &cfg).unwrap(),
            0.0
        );
    }

    #[test]
    fn omega2_zero_threshold() {
        let cfg = QuadratureConfig::default();
        assert_eq!(omega2(&ch(4.0, 1.0, 0.0), &cfg).unwrap(), 0.0);
        let mc = omega2_mc_oracle(&ch(4.0, 1.0, 0.0), MIN_MC_SAMPLES, 1).unwrap();
        assert_eq!((mc.omega2, mc.std_error), (0.0, 0.0));
    }

    #[test]
    fn mappings_agree() {
        let c = ch(4.0, 1.0, 2.0);
        let tail = omega2(&c, &QuadratureConfig::default()).unwrap();
        let rational = omega2(
            &c,
            &QuadratureConfig {
                mapping: Mapping::Rational,
                ..Default::default()
            },
        )
        .unwrap();
        assert_relative_eq!(tail, rational, max_relative = 1e-7);
    }

    #[test]
    fn omega2_scales_with_r_squared() {
        let cfg = QuadratureConfig::default();
        let one = omega2(&ch(4.0, 1.0, 2.0), &cfg).unwrap();
        let two = omega2(&ch(4.0, 2.0, 2.0), &cfg).unwrap();
        assert_relative_eq!(two, 4.0 * one, max_relative = 1e-6);
    }

    #[test]
    fn beta_values() {
        let c = ch(4.0, 1.0, 2.0);
        assert_eq!(ic_scale_beta(0.0, &c).unwrap(), 1.0);
        assert_relative_eq!(
            ic_scale_beta(0.05, &c).unwrap(),
            (-0.1f64).exp(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            ic_scale_beta(0.05, &c).unwrap(),
            0.904837,
            max_relative = 1e-6
        );
        assert_relative_eq!(
            ic_scale_beta(0.1, &ch(4.0, 2.0, 2.0)).unwrap(),
            0.040762,
            max_relative = 1e-5
        );
        assert!(ic_scale_beta(1.0, &c).is_err());
        assert!(ic_scale_beta(-0.01, &c).is_err());
    }

    #[test]
    fn beta_decreasing() {
        let base = ic_scale_beta(0.05, &ch(4.0, 1.0, 2.0)).unwrap();
        assert!(ic_scale_beta(0.06, &ch(4.0, 1.0, 2.0)).unwrap() < base);
        assert!(ic_scale_beta(0.05, &ch(4.0, 1.0, 3.0)).unwrap() < base);
        assert!(ic_scale_beta(0.05, &ch(4.0, 1.5, 2.0)).unwrap() < base);
    }

    #[test]
    fn mc_oracle_rejects_small_sample_counts() {
        assert!(omega2_mc_oracle(&ch(4.0, 1.0, 2.0), 1000, 0).is_err());
    }

    #[test]
    fn mc_oracle_is_reproducible() {
        let c = ch(3.0, 1.0, 1.0);
        let a = omega2_mc_oracle(&c, MIN_MC_SAMPLES, 9).unwrap();
        let b = omega2_mc_oracle(&c, MIN_MC_SAMPLES, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.cross_term >= 0.0);
    }
}
