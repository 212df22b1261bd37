//! Weight assignment and fusion of views.
//!
//! Two partial weightings are derived from the reliability profiles: one
//! favouring small mean error (`w ∝ 1/|mu|`) and one favouring small error
//! variance (`w ∝ 1/sigma2`, the minimum-variance combination). The final
//! weight of a source is the smaller of its two partial weights,
//! renormalised, so a source that is poor on either axis gets little say.
//!
//! Fusing with weights `w` gives an estimate whose error is
//! `G(Σ w_i mu_i, Σ w_i² sigma2_i)`; the confidence of the estimate is the
//! probability mass of that Gaussian inside `(-e_T, e_T)`.

use serde::{Deserialize, Serialize};

use crate::baselines::mean_estimate;
use crate::error::{Error, Result};
use crate::gauss::normal_interval;
use crate::reliability::ReliabilityProfile;
use crate::view::UnifiedView;

const SIMPLEX_TOL: f64 = 1e-9;

/// Non-negative weights summing to one, indexed like the sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightAssignment(Vec<f64>);

impl WeightAssignment {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty("weight assignment"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidParameter(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(Self(weights))
    }

    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Empty("weight assignment"));
        }
        Ok(Self(vec![1.0 / m as f64; m]))
    }

    /// All weight on source `i`.
    pub fn degenerate(m: usize, i: usize) -> Result<Self> {
        if i >= m {
            return Err(Error::InvalidParameter(format!("index {i} out of 0..{m}")));
        }
        let mut w = vec![0.0; m];
        w[i] = 1.0;
        Ok(Self(w))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Error half-width `e_T` of the confidence window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ErrorThreshold(f64);

impl ErrorThreshold {
    pub fn new(e_t: f64) -> Result<Self> {
        if e_t.is_finite() && e_t > 0.0 {
            Ok(Self(e_t))
        } else {
            Err(Error::InvalidParameter(format!(
                "error threshold must be positive, got {e_t}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for ErrorThreshold {
    fn default() -> Self {
        Self(1.0)
    }
}

impl TryFrom<f64> for ErrorThreshold {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ErrorThreshold> for f64 {
    fn from(t: ErrorThreshold) -> f64 {
        t.0
    }
}

/// A fused value together with its error model and confidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthEstimate {
    pub u_star: UnifiedView,
    pub mu_star: f64,
    pub sigma2_star: f64,
    pub confidence: f64,
    pub weights: WeightAssignment,
}

/// Normalised reciprocals of `|x_i|`. Sources with `x_i == 0` share all
/// the weight uniformly when present.
///
/// With no zeros this equals `Π_{k≠i}|x_k| / Σ_j Π_{k≠j}|x_k|`; the
/// reciprocal form avoids overflowing the products for large `m`.
fn reciprocal_weights(values: impl Iterator<Item = f64>) -> Result<WeightAssignment> {
    let abs: Vec<f64> = values.map(f64::abs).collect();
    if abs.is_empty() {
        return Err(Error::Empty("profiles"));
    }
    let zeros = abs.iter().filter(|&&x| x == 0.0).count();
    let mut w: Vec<f64> = if zeros > 0 {
        let share = 1.0 / zeros as f64;
        abs.iter().map(|&x| if x == 0.0 { share } else { 0.0 }).collect()
    } else {
        // Scale by the smallest value first so reciprocals of subnormal
        // inputs cannot overflow.
        let min = abs.iter().copied().fold(f64::INFINITY, f64::min);
        abs.iter().map(|&x| min / x).collect()
    };
    let total: f64 = w.iter().sum();
    for x in &mut w {
        *x /= total;
    }
    Ok(WeightAssignment(w))
}

/// Mean-error weights, `w_i ∝ 1/|mu_i|`.
pub fn weights_mu(profiles: &[ReliabilityProfile]) -> Result<WeightAssignment> {
    reciprocal_weights(profiles.iter().map(|p| p.mu))
}

/// Minimum-variance weights, `w_i ∝ 1/sigma2_i`.
pub fn weights_sigma(profiles: &[ReliabilityProfile]) -> Result<WeightAssignment> {
    reciprocal_weights(profiles.iter().map(|p| p.sigma2))
}

/// Element-wise minimum of two weightings, renormalised. Falls back to
/// uniform weights when every minimum is zero.
pub fn combine_weights(
    w_mu: &WeightAssignment,
    w_sigma: &WeightAssignment,
) -> Result<WeightAssignment> {
    if w_mu.len() != w_sigma.len() {
        return Err(Error::LengthMismatch {
            left: w_mu.len(),
            right: w_sigma.len(),
        });
    }
    let mut w: Vec<f64> = w_mu.0.iter().zip(&w_sigma.0).map(|(a, b)| a.min(*b)).collect();
    let total: f64 = w.iter().sum();
    if total == 0.0 {
        return WeightAssignment::uniform(w.len());
    }
    for x in &mut w {
        *x /= total;
    }
    Ok(WeightAssignment(w))
}

/// The combined weighting used for fusion.
pub fn ciuv_weights(profiles: &[ReliabilityProfile]) -> Result<WeightAssignment> {
    combine_weights(&weights_mu(profiles)?, &weights_sigma(profiles)?)
}

/// `Σ w_i u_i`, clamped into the hull of the views against rounding.
/// Equal weights give exactly [`mean_estimate`].
pub fn fuse(views: &[UnifiedView], w: &WeightAssignment) -> Result<UnifiedView> {
    if views.len() != w.len() {
        return Err(Error::LengthMismatch {
            left: views.len(),
            right: w.len(),
        });
    }
    if w.0.iter().all(|&x| x == w.0[0]) {
        return mean_estimate(views);
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut acc = 0.0;
    for (v, wi) in views.iter().zip(&w.0) {
        lo = lo.min(v.value());
        hi = hi.max(v.value());
        acc += wi * v.value();
    }
    UnifiedView::new(acc.clamp(lo, hi))
}

/// Mean and variance of the fused error, `(Σ w_i mu_i, Σ w_i² sigma2_i)`.
pub fn fused_error_params(
    profiles: &[ReliabilityProfile],
    w: &WeightAssignment,
) -> Result<(f64, f64)> {
    if profiles.len() != w.len() {
        return Err(Error::LengthMismatch {
            left: profiles.len(),
            right: w.len(),
        });
    }
    Ok(profiles
        .iter()
        .zip(&w.0)
        .fold((0.0, 0.0), |(mu, s2), (p, wi)| {
            (mu + wi * p.mu, s2 + wi * wi * p.sigma2)
        }))
}

/// `P(|e| < e_T)` for `e ~ G(mu_star, sigma2_star)`. A zero variance is a
/// point mass at `mu_star`.
pub fn confidence(mu_star: f64, sigma2_star: f64, e_t: f64) -> Result<f64> {
    let e_t = ErrorThreshold::new(e_t)?.value();
    if !mu_star.is_finite() {
        return Err(Error::NonFinite(mu_star));
    }
    if !sigma2_star.is_finite() || sigma2_star < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "error variance must be finite and non-negative, got {sigma2_star}"
        )));
    }
    if sigma2_star == 0.0 {
        return Ok(if mu_star.abs() < e_t { 1.0 } else { 0.0 });
    }
    Ok(normal_interval(mu_star, sigma2_star.sqrt(), -e_t, e_t))
}

/// `max_i |u_i|`: the largest distance between two convex combinations of
/// non-negative views.
pub fn worst_case_bound(views: &[UnifiedView]) -> Result<f64> {
    views
        .iter()
        .map(|v| v.value().abs())
        .reduce(f64::max)
        .ok_or(Error::Empty("worst-case bound"))
}

/// Weights, fused value and confidence for one set of target views.
pub fn estimate(
    views: &[UnifiedView],
    profiles: &[ReliabilityProfile],
    e_t: ErrorThreshold,
) -> Result<TruthEstimate> {
    let weights = ciuv_weights(profiles)?;
    estimate_with_weights(views, profiles, weights, e_t)
}

pub fn estimate_with_weights(
    views: &[UnifiedView],
    profiles: &[ReliabilityProfile],
    weights: WeightAssignment,
    e_t: ErrorThreshold,
) -> Result<TruthEstimate> {
    let u_star = fuse(views, &weights)?;
    let (mu_star, sigma2_star) = fused_error_params(profiles, &weights)?;
    let confidence = confidence(mu_star, sigma2_star, e_t.value())?;
    Ok(TruthEstimate {
        u_star,
        mu_star,
        sigma2_star,
        confidence,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::view::SourceId;
    use proptest::prelude::*;

    fn profiles(mu: &[f64], sigma2: &[f64]) -> Vec<ReliabilityProfile> {
        mu.iter()
            .zip(sigma2)
            .enumerate()
            .map(|(i, (&m, &s))| ReliabilityProfile::new(SourceId(format!("s{i}")), m, s, 10).unwrap())
            .collect()
    }

    fn views(xs: &[f64]) -> Vec<UnifiedView> {
        xs.iter().map(|&x| UnifiedView::new(x).unwrap()).collect()
    }

    fn w(xs: &[f64]) -> WeightAssignment {
        WeightAssignment::new(xs.to_vec()).unwrap()
    }

    fn assert_close(got: &WeightAssignment, want: &[f64]) {
        assert_eq!(got.len(), want.len());
        for (g, e) in got.as_slice().iter().zip(want) {
            assert!((g - e).abs() < 1e-12, "{got:?} vs {want:?}");
        }
    }

    /// The literal leave-one-out product form, with the zero rule.
    fn product_form(xs: &[f64]) -> Vec<f64> {
        let abs: Vec<f64> = xs.iter().map(|x| x.abs()).collect();
        let zeros = abs.iter().filter(|&&x| x == 0.0).count();
        if zeros > 0 {
            return abs
                .iter()
                .map(|&x| if x == 0.0 { 1.0 / zeros as f64 } else { 0.0 })
                .collect();
        }
        let loo: Vec<f64> = (0..abs.len())
            .map(|i| abs.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, x)| x).product())
            .collect();
        let total: f64 = loo.iter().sum();
        loo.iter().map(|x| x / total).collect()
    }

    #[test]
    fn mean_error_weights() {
        let ones = [1.0; 3];
        assert_close(
            &weights_mu(&profiles(&[1.0, 2.0, 4.0], &ones)).unwrap(),
            &[4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0],
        );
        assert_close(&weights_mu(&profiles(&[0.0, 3.0], &ones)).unwrap(), &[1.0, 0.0]);
        assert_close(
            &weights_mu(&profiles(&[-2.5, 2.5, 2.5], &ones)).unwrap(),
            &[1.0 / 3.0; 3],
        );
        assert_close(
            &weights_mu(&profiles(&[0.0, 3.0, 0.0], &ones)).unwrap(),
            &[0.5, 0.0, 0.5],
        );
    }

    #[test]
    fn variance_weights() {
        let zeros = [1.0; 3];
        assert_close(&weights_sigma(&profiles(&zeros[..2], &[1.0, 3.0])).unwrap(), &[0.75, 0.25]);
        assert_close(&weights_sigma(&profiles(&zeros[..2], &[1.0, 1.0])).unwrap(), &[0.5, 0.5]);
        assert_close(
            &weights_sigma(&profiles(&zeros, &[0.0, 2.0, 5.0])).unwrap(),
            &[1.0, 0.0, 0.0],
        );
        assert!(weights_sigma(&[]).is_err());
    }

    #[test]
    fn combined_weights() {
        assert_close(
            &combine_weights(&w(&[0.6, 0.4]), &w(&[0.3, 0.7])).unwrap(),
            &[3.0 / 7.0, 4.0 / 7.0],
        );
        assert_close(&combine_weights(&w(&[0.2, 0.8]), &w(&[0.2, 0.8])).unwrap(), &[0.2, 0.8]);
        assert_close(&combine_weights(&w(&[1.0, 0.0]), &w(&[0.0, 1.0])).unwrap(), &[0.5, 0.5]);
        assert!(matches!(
            combine_weights(&w(&[1.0]), &w(&[0.5, 0.5])),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn fuse_examples() {
        assert_eq!(fuse(&views(&[1.0, 2.0, 3.0]), &WeightAssignment::uniform(3).unwrap()).unwrap().value(), 2.0);
        assert_eq!(fuse(&views(&[10.0, 20.0]), &w(&[0.5, 0.5])).unwrap().value(), 15.0);
        assert_eq!(fuse(&views(&[10.0, 20.0]), &w(&[1.0, 0.0])).unwrap().value(), 10.0);
        assert!(fuse(&views(&[1.0]), &w(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn fused_error_examples() {
        let p = profiles(&[2.0, -2.0], &[1.0, 1.0]);
        assert_eq!(fused_error_params(&p, &w(&[0.5, 0.5])).unwrap(), (0.0, 0.5));
        let p = profiles(&[3.0, 9.0], &[4.0, 1.0]);
        assert_eq!(fused_error_params(&p, &w(&[1.0, 0.0])).unwrap(), (3.0, 4.0));
        let p = profiles(&[1.5; 4], &[2.0; 4]);
        let (mu, s2) = fused_error_params(&p, &WeightAssignment::uniform(4).unwrap()).unwrap();
        assert!((mu - 1.5).abs() < 1e-15 && (s2 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn confidence_examples() {
        assert!((confidence(0.0, 1.0, 1.96).unwrap() - 0.95).abs() < 1e-3);
        assert_eq!(confidence(5.0, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(confidence(0.0, 0.0, 1.0).unwrap(), 1.0);
        assert!(confidence(0.0, 1.0, 0.0).is_err());
        assert!(confidence(0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn bound_examples() {
        assert_eq!(worst_case_bound(&views(&[1.0, -2.0, 3.0])).unwrap(), 3.0);
        assert_eq!(worst_case_bound(&views(&[0.0])).unwrap(), 0.0);
        assert_eq!(worst_case_bound(&views(&[5.0, 5.0, 5.0])).unwrap(), 5.0);
        assert!(worst_case_bound(&[]).is_err());
    }

    #[test]
    fn mixed_sign_views_can_exceed_the_bound() {
        // ground truth all on -3, estimate all on 3
        let vs = views(&[-3.0, 3.0]);
        let gap = (fuse(&vs, &w(&[1.0, 0.0])).unwrap().value()
            - fuse(&vs, &w(&[0.0, 1.0])).unwrap().value())
        .abs();
        assert_eq!(gap, 6.0);
        assert!(gap > worst_case_bound(&vs).unwrap());
    }

    fn profile_vectors() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..8).prop_flat_map(|m| {
            (
                proptest::collection::vec(prop_oneof![1 => Just(0.0), 4 => -100.0f64..100.0], m),
                proptest::collection::vec(prop_oneof![1 => Just(0.0), 4 => 1e-6f64..100.0], m),
            )
        })
    }

    fn simplex(m: usize) -> impl Strategy<Value = WeightAssignment> {
        proptest::collection::vec(0.0f64..1.0, m).prop_map(|raw| {
            let total: f64 = raw.iter().sum();
            if total == 0.0 {
                WeightAssignment::uniform(raw.len()).unwrap()
            } else {
                WeightAssignment(raw.iter().map(|x| x / total).collect())
            }
        })
    }

    fn on_simplex(w: &WeightAssignment) -> bool {
        w.0.iter().all(|&x| x >= 0.0) && (w.0.iter().sum::<f64>() - 1.0).abs() <= 1e-9
    }

    proptest! {
        #[test]
        fn weights_stay_on_the_simplex((mu, s2) in profile_vectors()) {
            let p = profiles(&mu, &s2);
            prop_assert!(on_simplex(&weights_mu(&p).unwrap()));
            prop_assert!(on_simplex(&weights_sigma(&p).unwrap()));
            prop_assert!(on_simplex(&ciuv_weights(&p).unwrap()));
        }

        #[test]
        fn reciprocal_form_equals_product_form((mu, s2) in profile_vectors()) {
            let p = profiles(&mu, &s2);
            for (got, want) in weights_mu(&p).unwrap().0.iter().zip(product_form(&mu)) {
                prop_assert!((got - want).abs() < 1e-9);
            }
            for (got, want) in weights_sigma(&p).unwrap().0.iter().zip(product_form(&s2)) {
                prop_assert!((got - want).abs() < 1e-9);
            }
        }

        #[test]
        fn weights_are_scale_free((mu, s2) in profile_vectors(), c in 1e-3f64..1e3) {
            let base = profiles(&mu, &s2);
            let mu_c: Vec<f64> = mu.iter().map(|x| x * c).collect();
            let s2_c: Vec<f64> = s2.iter().map(|x| x * c * c).collect();
            let scaled = profiles(&mu_c, &s2_c);
            for f in [weights_mu, weights_sigma, ciuv_weights] {
                let (a, b) = (f(&base).unwrap(), f(&scaled).unwrap());
                for (x, y) in a.0.iter().zip(&b.0) {
                    prop_assert!((x - y).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn fuse_is_a_convex_combination(
            (vs, wa) in (1usize..10).prop_flat_map(|m| (proptest::collection::vec(-1e4f64..1e4, m), simplex(m)))
        ) {
            let vs = views(&vs);
            let u = fuse(&vs, &wa).unwrap().value();
            let lo = vs.iter().map(|v| v.value()).fold(f64::INFINITY, f64::min);
            let hi = vs.iter().map(|v| v.value()).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo <= u && u <= hi);
        }

        #[test]
        fn identical_profiles_reduce_to_the_mean(
            vs in proptest::collection::vec(-1e3f64..1e3, 1..12),
            mu in -5.0f64..5.0,
            s2 in 0.0f64..5.0,
        ) {
            let p = profiles(&vec![mu; vs.len()], &vec![s2; vs.len()]);
            let wa = ciuv_weights(&p).unwrap();
            prop_assert!(wa.0.iter().all(|&x| x == wa.0[0]));
            let vs = views(&vs);
            prop_assert_eq!(fuse(&vs, &wa).unwrap(), mean_estimate(&vs).unwrap());
        }

        #[test]
        fn bound_holds_for_non_negative_views(
            (vs, wg, wa) in (1usize..10).prop_flat_map(|m| (
                proptest::collection::vec(0.0f64..1e4, m), simplex(m), simplex(m)))
        ) {
            let vs = views(&vs);
            let gap = (fuse(&vs, &wg).unwrap().value() - fuse(&vs, &wa).unwrap().value()).abs();
            prop_assert!(gap <= worst_case_bound(&vs).unwrap());
        }

        #[test]
        fn confidence_is_monotone(
            mu in -3.0f64..3.0, s2 in 1e-4f64..10.0, e1 in 1e-3f64..5.0, de in 0.0f64..5.0, ds in 0.0f64..5.0,
        ) {
            let a = confidence(mu, s2, e1).unwrap();
            let b = confidence(mu, s2, e1 + de).unwrap();
            prop_assert!(b >= a - 1e-15);
            prop_assert!((0.0..=1.0).contains(&a));
            let wide = confidence(0.0, s2 + ds, e1).unwrap();
            let narrow = confidence(0.0, s2, e1).unwrap();
            prop_assert!(wide <= narrow + 1e-15);
        }
    }

    #[test]
    fn variance_weights_beat_every_grid_point() {
        for s2 in [[1.0, 3.0, 0.5], [2.0, 2.0, 9.0], [0.1, 7.0, 7.0]] {
            let p = profiles(&[1.0; 3], &s2);
            let best = fused_error_params(&p, &weights_sigma(&p).unwrap()).unwrap().1;
            for i in 0..=100 {
                for j in 0..=(100 - i) {
                    let g = [i as f64 / 100.0, j as f64 / 100.0, (100 - i - j) as f64 / 100.0];
                    let v: f64 = g.iter().zip(&s2).map(|(w, s)| w * w * s).sum();
                    assert!(best <= v + 1e-9);
                }
            }
        }
    }
}
