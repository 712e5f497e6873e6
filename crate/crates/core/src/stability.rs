//! Stability region, stable-regime success probability, queue metrics and
//! stability-optimal operating points of full-duplex (FD) and half-duplex
//! time-sharing (HD) buffered Aloha networks.
//!
//! Both fixed-point equations are solved in the variable `x = a / p_s`, the
//! per-slot transmit probability of a node. In that variable the FD equation
//! reads `β x exp(−λ(2Ω₁x + (Ω₂ − 2Ω₁)x²)) = a`. The physical root is the
//! smallest positive `x` (largest `p_s`): along it `p_s` falls as the load
//! grows.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::numerics::bisect;
use crate::spatial::{ChannelParams, QuadratureConfig, SpatialConstants};

/// Relative back-off applied when a stable-regime quantity is evaluated at
/// the maximum stable arrival rate itself.
pub const BOUNDARY_BACKOFF: f64 = 1e-6;

const ROOT_X_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Duplex {
    Full,
    Half,
}

/// Treatment of residual self-interference in full-duplex links.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IcModel {
    /// Ideal cancellation; η is ignored.
    Perfect,
    /// Every receiver sees the floor `ηP`, whether or not it transmits.
    /// Analytically tractable lower bound on `Actual`.
    Bound,
    /// The floor `ηP` appears only while the receiver itself transmits.
    Actual,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Cluster intensity, clusters per m².
    pub lambda: f64,
    /// Per-node per-slot packet arrival probability.
    pub a: f64,
    /// Aloha access probability of a backlogged node.
    pub q: f64,
    pub channel: ChannelParams,
    /// Fraction of the transmit power left after self-interference
    /// cancellation.
    pub eta: f64,
    pub duplex: Duplex,
    pub ic_model: IcModel,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            lambda: 0.2,
            a: 0.13,
            q: 0.5,
            channel: ChannelParams::default(),
            eta: 0.0,
            duplex: Duplex::Full,
            ic_model: IcModel::Perfect,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        check_arrival(self.a)?;
        check_access(self.q)?;
        self.channel.validate()?;
        if !(0.0..1.0).contains(&self.eta) {
            return Err(Error::invalid(
                "eta",
                self.eta,
                "residual IC fraction must lie in [0, 1)",
            ));
        }
        Ok(())
    }

    /// η as seen by the model: zero under perfect cancellation.
    pub fn effective_eta(&self) -> f64 {
        match self.ic_model {
            IcModel::Perfect => 0.0,
            IcModel::Bound | IcModel::Actual => self.eta,
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "lambda",
            lambda,
            "cluster intensity must be finite and >= 0",
        ))
    }
}

fn check_access(q: f64) -> Result<()> {
    if q > 0.0 && q <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "q",
            q,
            "access probability must lie in (0, 1]",
        ))
    }
}

fn check_arrival(a: f64) -> Result<()> {
    if (0.0..1.0).contains(&a) {
        Ok(())
    } else {
        Err(Error::invalid(
            "a",
            a,
            "arrival probability must lie in [0, 1)",
        ))
    }
}

/// Per-cluster link-mode probabilities: no transmission, one transmission
/// (HD link), two simultaneous transmissions (FD link).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeProbs {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
}

impl ModeProbs {
    /// Share of active clusters running a bidirectional link.
    pub fn fd_link_fraction(&self) -> f64 {
        let active = self.p1 + self.p2;
        if active > 0.0 {
            self.p2 / active
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticalMetrics {
    pub ps: f64,
    pub pi0: f64,
    pub n_mean: f64,
    /// Mean delay in slots. For HD this is the upper bound of the
    /// two-slot G/Geo/1 construction, see `delay_is_bound`.
    pub delay: f64,
    pub delay_is_bound: bool,
    pub mode_probs: ModeProbs,
}

impl AnalyticalMetrics {
    pub fn nonempty(&self) -> f64 {
        1.0 - self.pi0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityPoint {
    pub q_star: f64,
    pub a_star: f64,
    /// Throughput density `2λa*`, packets per slot per m².
    pub tau_star: f64,
}

/// `λ q (2Ω₁ + q(Ω₂ − 2Ω₁))`: interference exponent of a saturated FD network.
fn fd_exponent(q: f64, lambda: f64, sc: &SpatialConstants) -> f64 {
    lambda * q * (2.0 * sc.omega1 + q * sc.pair_correction())
}

/// `β x exp(−λ(2Ω₁x + (Ω₂ − 2Ω₁)x²))`.
fn fd_curve(x: f64, lambda: f64, sc: &SpatialConstants) -> f64 {
    sc.beta * (x * (-fd_exponent(x, lambda, sc)).exp())
}

/// First local maximum of the FD curve: smallest positive root of
/// `1 − 2λΩ₁x − 2λ(Ω₂ − 2Ω₁)x² = 0`, if any.
fn fd_curve_peak(lambda: f64, sc: &SpatialConstants) -> Option<f64> {
    let lin = 2.0 * lambda * sc.omega1;
    let quad = 2.0 * lambda * sc.pair_correction();
    if quad == 0.0 {
        return (lin > 0.0).then(|| 1.0 / lin);
    }
    let disc = lin * lin + 4.0 * quad;
    if disc < 0.0 {
        return None;
    }
    let denom = lin + disc.sqrt();
    (denom > 0.0).then(|| 2.0 / denom)
}

/// Right-hand side of the FD stability condition `a < q β exp(−λq(2Ω₁ + q(Ω₂ − 2Ω₁)))`.
pub fn fd_stability_bound(q: f64, lambda: f64, sc: &SpatialConstants) -> Result<f64> {
    check_access(q)?;
    check_lambda(lambda)?;
    Ok(fd_curve(q, lambda, sc))
}

/// Right-hand side of the HD stability condition `a < ½ q exp(−λqΩ₁)`.
pub fn hd_stability_bound(q: f64, lambda: f64, omega1: f64) -> Result<f64> {
    check_access(q)?;
    check_lambda(lambda)?;
    Ok(0.5 * q * (-lambda * q * omega1).exp())
}

/// Success probability of a saturated FD network (every node backlogged).
pub fn saturated_success_prob(q: f64, lambda: f64, sc: &SpatialConstants) -> Result<f64> {
    check_access(q)?;
    check_lambda(lambda)?;
    Ok(sc.beta * (-fd_exponent(q, lambda, sc)).exp())
}

/// Smallest positive root of `curve(x) = target` for a curve that starts at
/// zero and increases up to `peak` (or forever when `peak` is `None`).
fn smallest_root<G: Fn(f64) -> f64>(curve: G, target: f64, peak: Option<f64>) -> Result<f64> {
    let hi = match peak {
        Some(xp) => {
            let top = curve(xp);
            if target > top * (1.0 + 1e-12) {
                return Err(Error::NoStableSolution {
                    a: target,
                    peak: top,
                });
            }
            if target >= top {
                return Ok(xp);
            }
            xp
        }
        None => {
            let mut hi = 1.0;
            while curve(hi) < target {
                hi *= 2.0;
                if !hi.is_finite() {
                    return Err(Error::NoConvergence {
                        what: "fixed-point bracket",
                        estimate: hi,
                        error: f64::INFINITY,
                    });
                }
            }
            hi
        }
    };
    let x = bisect(|x| curve(x) - target, 0.0, hi, ROOT_X_TOL);
    let residual = (curve(x) - target).abs();
    if residual > 1e-12 {
        return Err(Error::NoConvergence {
            what: "fixed-point bisection",
            estimate: x,
            error: residual,
        });
    }
    Ok(x)
}

/// Stable-regime FD success probability: the largest `p_s` solving
/// `p_s = β exp(−λ(2Ω₁ a/p_s + (Ω₂ − 2Ω₁) a²/p_s²))`.
///
/// Returns [`Error::NoStableSolution`] when `a` exceeds the first local
/// maximum of the curve, i.e. no stable operating point exists.
pub fn fd_success_fixed_point(a: f64, lambda: f64, sc: &SpatialConstants) -> Result<f64> {
    check_arrival(a)?;
    check_lambda(lambda)?;
    if a == 0.0 || lambda == 0.0 {
        return Ok(sc.beta);
    }
    let x = smallest_root(|x| fd_curve(x, lambda, sc), a, fd_curve_peak(lambda, sc))?;
    Ok(a / x)
}

/// Stable-regime HD success probability, the largest root of
/// `p = exp(−2λΩ₁ a/p)`.
pub fn hd_success_fixed_point(a: f64, lambda: f64, omega1: f64) -> Result<f64> {
    check_arrival(a)?;
    check_lambda(lambda)?;
    if a == 0.0 || lambda == 0.0 || omega1 == 0.0 {
        return Ok(1.0);
    }
    let k = 2.0 * lambda * omega1;
    let x = smallest_root(|x| x * (-k * x).exp(), a, Some(1.0 / k))?;
    Ok(a / x)
}

/// Per-cluster link-mode probabilities when each node is backlogged with
/// probability `1 − π₀` and transmits with probability `q` when backlogged.
pub fn link_mode_probs(q: f64, pi0: f64) -> Result<ModeProbs> {
    check_access(q)?;
    if !(0.0..=1.0).contains(&pi0) {
        return Err(Error::invalid(
            "pi0",
            pi0,
            "empty-queue probability must lie in [0, 1]",
        ));
    }
    let busy = 1.0 - pi0;
    let p1 = 2.0 * q * pi0 * busy + 2.0 * q * (1.0 - q) * busy * busy;
    let p2 = q * q * busy * busy;
    Ok(ModeProbs {
        p0: 1.0 - p1 - p2,
        p1,
        p2,
    })
}

/// Geo/Geo/1 metrics of an FD node with arrival rate `a` and per-slot
/// departure probability `q p_s`.
pub fn fd_queue_metrics(a: f64, q: f64, ps: f64) -> Result<AnalyticalMetrics> {
    check_arrival(a)?;
    check_access(q)?;
    let service = q * ps;
    if service <= a {
        return Err(Error::Unstable { load: a, service });
    }
    let pi0 = 1.0 - a / service;
    Ok(AnalyticalMetrics {
        ps,
        pi0,
        n_mean: a * (1.0 - a) / (service - a),
        delay: (1.0 - a) / (service - a),
        delay_is_bound: false,
        mode_probs: link_mode_probs(q, pi0)?,
    })
}

/// Metrics of an HD time-sharing node. The delay is the upper bound
/// `(3a − 2)/(2a − q p_s)`; `n_mean` follows from it through Little's law
/// and is a bound as well.
pub fn hd_queue_metrics(a: f64, q: f64, ps_hd: f64) -> Result<AnalyticalMetrics> {
    check_arrival(a)?;
    check_access(q)?;
    let service = q * ps_hd;
    if service <= 2.0 * a {
        return Err(Error::Unstable {
            load: 2.0 * a,
            service,
        });
    }
    let pi0 = 1.0 - 2.0 * a / service;
    let delay = (3.0 * a - 2.0) / (2.0 * a - service);
    // One node of the pair may transmit per slot.
    let p1 = q * (1.0 - pi0);
    Ok(AnalyticalMetrics {
        ps: ps_hd,
        pi0,
        n_mean: a * delay,
        delay,
        delay_is_bound: true,
        mode_probs: ModeProbs {
            p0: 1.0 - p1,
            p1,
            p2: 0.0,
        },
    })
}

/// Complete stable-regime metrics for `params`, after checking the
/// stability condition of its duplex mode.
///
/// For FD the interference constants are taken from `sc` with `β` forced
/// to one under perfect cancellation; `Bound` and `Actual` both use the
/// β-scaled lower-bound system.
pub fn analyze(params: &SystemParams, sc: &SpatialConstants) -> Result<AnalyticalMetrics> {
    params.validate()?;
    let SystemParams { lambda, a, q, .. } = *params;
    match params.duplex {
        Duplex::Full => {
            let sc = match params.ic_model {
                IcModel::Perfect => sc.ideal(),
                IcModel::Bound | IcModel::Actual => *sc,
            };
            let bound = fd_stability_bound(q, lambda, &sc)?;
            if a >= bound {
                return Err(Error::Unstable {
                    load: a,
                    service: bound,
                });
            }
            let ps = fd_success_fixed_point(a, lambda, &sc)?;
            fd_queue_metrics(a, q, ps)
        }
        Duplex::Half => {
            let bound = hd_stability_bound(q, lambda, sc.omega1)?;
            if a >= bound {
                return Err(Error::Unstable {
                    load: a,
                    service: bound,
                });
            }
            let ps = hd_success_fixed_point(a, lambda, sc.omega1)?;
            hd_queue_metrics(a, q, ps)
        }
    }
}

/// Access probability maximizing the FD stability bound, with the
/// resulting maximum stable arrival rate and throughput density.
///
/// The stationary point is the first positive root of the quadratic
/// `2λ(Ω₂ − 2Ω₁)q² + 2λΩ₁q − 1 = 0`; it is clamped to one and compared
/// against `q = 1` in case the curve turns up again before one.
pub fn fd_optimal_access(lambda: f64, sc: &SpatialConstants) -> Result<StabilityPoint> {
    check_lambda(lambda)?;
    let q_star = match fd_curve_peak(lambda, sc) {
        Some(xp) if xp < 1.0 && fd_curve(xp, lambda, sc) >= fd_curve(1.0, lambda, sc) => xp,
        _ => 1.0,
    };
    let a_star = fd_curve(q_star, lambda, sc);
    Ok(StabilityPoint {
        q_star,
        a_star,
        tau_star: 2.0 * lambda * a_star,
    })
}

/// HD counterpart: `q* = min(1, 1/(λΩ₁))`, `a* = ½ q* exp(−λq*Ω₁)`.
pub fn hd_optimal_access(lambda: f64, omega1: f64) -> Result<StabilityPoint> {
    check_lambda(lambda)?;
    let load = lambda * omega1;
    let q_star = if load <= 1.0 { 1.0 } else { 1.0 / load };
    let a_star = 0.5 * q_star * (-load * q_star).exp();
    Ok(StabilityPoint {
        q_star,
        a_star,
        tau_star: 2.0 * lambda * a_star,
    })
}

/// Maps channel parameters to spatial constants. Implementations must be
/// pure; memoization is fine.
pub trait SpatialResolver {
    fn resolve(&self, ch: &ChannelParams) -> Result<SpatialConstants>;
}

impl SpatialResolver for SpatialConstants {
    fn resolve(&self, _ch: &ChannelParams) -> Result<SpatialConstants> {
        Ok(*self)
    }
}

/// Computes constants on first use and remembers them per parameter set.
#[derive(Debug)]
pub struct CachedResolver {
    pub eta: f64,
    pub quadrature: QuadratureConfig,
    cache: Mutex<HashMap<[u64; 3], SpatialConstants>>,
}

impl CachedResolver {
    pub fn new(eta: f64, quadrature: QuadratureConfig) -> Self {
        Self {
            eta,
            quadrature,
            cache: Mutex::new(HashMap::new()),
        }
    }
}

impl SpatialResolver for CachedResolver {
    fn resolve(&self, ch: &ChannelParams) -> Result<SpatialConstants> {
        let key = [ch.alpha.to_bits(), ch.r.to_bits(), ch.theta.to_bits()];
        if let Some(sc) = self
            .cache
            .lock()
            .expect("resolver cache poisoned")
            .get(&key)
        {
            return Ok(*sc);
        }
        let sc = SpatialConstants::compute(ch, self.eta, &self.quadrature)?;
        self.cache
            .lock()
            .expect("resolver cache poisoned")
            .insert(key, sc);
        Ok(sc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryMode {
    Fd,
    Hd,
    /// FD with the β-scaled always-on self-interference lower bound.
    FdBoundIc,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryRow {
    pub lambda: f64,
    pub point: StabilityPoint,
    /// `p₂/(p₁ + p₂)` at the optimal operating point (zero for HD).
    pub fd_link_frac: f64,
}

/// Optimal operating points over an ascending grid of cluster intensities.
pub fn sweep_boundary(
    mode: BoundaryMode,
    lambdas: &[f64],
    ch: &ChannelParams,
    resolver: &dyn SpatialResolver,
) -> Result<Vec<BoundaryRow>> {
    if lambdas.is_empty() {
        return Err(Error::invalid("lambda_grid", 0.0, "grid must not be empty"));
    }
    if lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(
            "lambda_grid",
            f64::NAN,
            "grid must be strictly increasing",
        ));
    }
    let resolved = resolver.resolve(ch)?;
    let sc = match mode {
        BoundaryMode::Fd | BoundaryMode::Hd => resolved.ideal(),
        BoundaryMode::FdBoundIc => resolved,
    };
    lambdas
        .iter()
        .map(|&lambda| {
            let (point, fd_link_frac) = match mode {
                BoundaryMode::Hd => (hd_optimal_access(lambda, sc.omega1)?, 0.0),
                BoundaryMode::Fd | BoundaryMode::FdBoundIc => {
                    let point = fd_optimal_access(lambda, &sc)?;
                    (point, fd_link_fraction_at(&point, lambda, &sc)?)
                }
            };
            Ok(BoundaryRow {
                lambda,
                point,
                fd_link_frac,
            })
        })
        .collect()
}

/// `p₂/(p₁ + p₂)` just inside the stability boundary of an FD network.
pub fn fd_link_fraction_at(
    point: &StabilityPoint,
    lambda: f64,
    sc: &SpatialConstants,
) -> Result<f64> {
    let a = point.a_star * (1.0 - BOUNDARY_BACKOFF);
    if a <= 0.0 {
        return Ok(0.0);
    }
    let ps = fd_success_fixed_point(a, lambda, sc)?;
    let pi0 = (1.0 - a / (point.q_star * ps)).clamp(0.0, 1.0);
    Ok(link_mode_probs(point.q_star, pi0)?.fd_link_fraction())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::golden;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::{E, PI};

    fn golden_sc() -> SpatialConstants {
        SpatialConstants {
            omega1: PI * PI * 2f64.sqrt() / 2.0,
            omega2: golden::OMEGA2_A4_R1_T2,
            beta: 1.0,
        }
    }

    #[test]
    fn fd_bound_limits() {
        let sc = golden_sc();
        assert!(fd_stability_bound(1e-12, 0.2, &sc).unwrap() < 1e-11);
        assert_relative_eq!(fd_stability_bound(0.5, 0.0, &sc).unwrap(), 0.5);
        assert!(fd_stability_bound(0.0, 0.2, &sc).is_err());
    }

    #[test]
    fn fd_bound_direct_substitution() {
        let sc = golden_sc();
        // 0.5 * exp(-0.1 * 12.6501) = 0.141121
        let expected = 0.5 * (-0.1 * (2.0 * sc.omega1 + 0.5 * (sc.omega2 - 2.0 * sc.omega1))).exp();
        assert_relative_eq!(
            fd_stability_bound(0.5, 0.2, &sc).unwrap(),
            expected,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            fd_stability_bound(0.5, 0.2, &sc).unwrap(),
            0.141121,
            max_relative = 1e-5
        );
    }

    #[test]
    fn hd_bound_values() {
        assert!(hd_stability_bound(1e-12, 0.2, 6.97913).unwrap() < 1e-12);
        assert_relative_eq!(hd_stability_bound(1.0, 0.0, 6.97913).unwrap(), 0.5);
        let q = 1.0 / (0.2 * 6.97913);
        assert_relative_eq!(
            hd_stability_bound(q, 0.2, 6.97913).unwrap(),
            0.5 * q / E,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            hd_stability_bound(0.7164, 0.2, 6.97913).unwrap(),
            0.13178,
            max_relative = 1e-4
        );
    }

    #[test]
    fn hd_optimal_access_examples() {
        let p = hd_optimal_access(0.1, 6.97913).unwrap();
        assert_eq!(p.q_star, 1.0);
        assert_relative_eq!(p.a_star, 0.5 * (-0.697913f64).exp(), max_relative = 1e-14);

        let p = hd_optimal_access(0.2, 6.97913).unwrap();
        assert_relative_eq!(p.q_star, 0.71642, max_relative = 1e-5);
        assert_relative_eq!(p.a_star, 0.13178, max_relative = 1e-4);
        assert_relative_eq!(p.tau_star, 0.4 * p.a_star, max_relative = 1e-15);

        let p = hd_optimal_access(1e6, 6.97913).unwrap();
        assert_relative_eq!(p.tau_star, (-1.0f64).exp() / 6.97913, max_relative = 1e-12);
        assert_relative_eq!(p.tau_star, 0.052710, max_relative = 1e-4);
    }

    #[test]
    fn fd_optimal_access_clamps_for_sparse_networks() {
        let sc = golden_sc();
        let p = fd_optimal_access(1e-9, &sc).unwrap();
        assert_eq!(p.q_star, 1.0);
        assert_relative_eq!(p.a_star, 1.0, max_relative = 1e-7);

        let edge = 1.0 / (2.0 * (sc.omega2 - sc.omega1));
        assert_eq!(fd_optimal_access(edge * 0.999, &sc).unwrap().q_star, 1.0);
        assert!(fd_optimal_access(edge * 1.01, &sc).unwrap().q_star < 1.0);
    }

    #[test]
    fn fd_optimum_converges_to_hd_when_dense() {
        let sc = golden_sc();
        let fd = fd_optimal_access(5.0, &sc).unwrap();
        let hd = hd_optimal_access(5.0, sc.omega1).unwrap();
        assert!(fd.a_star / hd.a_star <= 1.1);
        assert!(fd.a_star >= hd.a_star);
    }

    #[test]
    fn trivial_fixed_points() {
        let sc = golden_sc();
        assert_eq!(fd_success_fixed_point(0.0, 0.2, &sc).unwrap(), 1.0);
        assert_eq!(fd_success_fixed_point(0.3, 0.0, &sc).unwrap(), 1.0);
        assert_eq!(hd_success_fixed_point(0.0, 0.2, 6.97913).unwrap(), 1.0);
    }

    #[test]
    fn fd_fixed_point_outside_stable_regime() {
        let sc = golden_sc();
        let r = fd_success_fixed_point(0.2, 0.2, &sc);
        assert!(matches!(r, Err(Error::NoStableSolution { .. })));
    }

    #[test]
    fn hd_fixed_point_double_root() {
        let (lambda, omega1) = (0.2, 6.97913);
        let a = 1.0 / (2.0 * E * lambda * omega1);
        let ps = hd_success_fixed_point(a, lambda, omega1).unwrap();
        assert_relative_eq!(ps, 1.0 / E, max_relative = 1e-10);
        let residual = ps - (-2.0 * lambda * omega1 * a / ps).exp();
        assert!(residual.abs() < 1e-10);
        assert!(matches!(
            hd_success_fixed_point(a * 1.001, lambda, omega1),
            Err(Error::NoStableSolution { .. })
        ));
    }

    #[test]
    fn link_mode_examples() {
        let m = link_mode_probs(0.7, 1.0).unwrap();
        assert_eq!((m.p0, m.p1, m.p2), (1.0, 0.0, 0.0));
        let m = link_mode_probs(1.0, 0.0).unwrap();
        assert_abs_diff_eq!(m.p0, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.p1, 0.0, epsilon = 1e-15);
        assert_eq!(m.p2, 1.0);
    }

    /// Enumerate the four transmit/silent outcomes of a cluster whose
    /// nodes are independently backlogged.
    #[test]
    fn link_modes_match_enumeration() {
        let (q, pi0) = (0.5, 0.5);
        let active = q * (1.0 - pi0);
        let mut probs = [0.0; 3];
        for first in [false, true] {
            for second in [false, true] {
                let p = |on: bool| if on { active } else { 1.0 - active };
                probs[first as usize + second as usize] += p(first) * p(second);
            }
        }
        let m = link_mode_probs(q, pi0).unwrap();
        assert_relative_eq!(m.p0, probs[0], max_relative = 1e-15);
        assert_relative_eq!(m.p1, probs[1], max_relative = 1e-15);
        assert_relative_eq!(m.p2, probs[2], max_relative = 1e-15);
        assert_relative_eq!(m.p0, 0.5625);
        assert_relative_eq!(m.p1, 0.375);
        assert_relative_eq!(m.p2, 0.0625);
    }

    #[test]
    fn fd_queue_metrics_limits() {
        let m = fd_queue_metrics(0.0, 1.0, 1.0).unwrap();
        assert_eq!((m.pi0, m.n_mean, m.delay), (1.0, 0.0, 1.0));
        let m = fd_queue_metrics(0.3 - 1e-9, 0.6, 0.5).unwrap();
        assert!(m.delay > 1e8);
        assert!(matches!(
            fd_queue_metrics(0.3, 0.6, 0.5),
            Err(Error::Unstable { .. })
        ));
    }

    #[test]
    fn hd_queue_metrics_limits() {
        let m = hd_queue_metrics(0.0, 0.8, 0.5).unwrap();
        assert_eq!(m.pi0, 1.0);
        assert_relative_eq!(m.delay, 2.0 / 0.4, max_relative = 1e-15);
        assert!(m.delay_is_bound);
        let m = hd_queue_metrics(0.2 - 1e-9, 0.8, 0.5).unwrap();
        assert!(m.delay > 1e8);
        assert!(matches!(
            hd_queue_metrics(0.2, 0.8, 0.5),
            Err(Error::Unstable { .. })
        ));
    }

    #[test]
    fn zero_interference_delay_is_one_slot() {
        let sc = golden_sc();
        for &a in &[0.0, 0.1, 0.5, 0.9, 0.999] {
            let ps = fd_success_fixed_point(a, 0.0, &sc).unwrap();
            let m = fd_queue_metrics(a, 1.0, ps).unwrap();
            assert_relative_eq!(m.delay, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn analyze_rejects_points_outside_the_stable_region() {
        let sc = golden_sc();
        let params = SystemParams {
            lambda: 0.2,
            a: 0.13,
            q: 0.9,
            ..Default::default()
        };
        assert!(matches!(analyze(&params, &sc), Err(Error::Unstable { .. })));
        let ok = analyze(&SystemParams { q: 0.45, ..params }, &sc).unwrap();
        assert!(ok.pi0 > 0.0 && ok.pi0 < 1.0);
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let sc = golden_sc();
        let ch = ChannelParams::default();
        assert!(sweep_boundary(BoundaryMode::Fd, &[], &ch, &sc).is_err());
        assert!(sweep_boundary(BoundaryMode::Fd, &[0.2, 0.1], &ch, &sc).is_err());
    }

    #[test]
    fn fd_link_fraction_matches_closed_form_at_boundary() {
        let sc = golden_sc();
        let rows = sweep_boundary(
            BoundaryMode::Fd,
            &[0.01, 0.2],
            &ChannelParams::default(),
            &sc,
        )
        .unwrap();
        for row in rows {
            let s = row.point.q_star;
            assert_relative_eq!(row.fd_link_frac, s / (2.0 - s), max_relative = 1e-2);
        }
    }
}
