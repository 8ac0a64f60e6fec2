use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::VerifyConfig;
use crate::calculus::{
    bump_family, cauchy_tail, divergence_probe, moser_iterate, radial_reduce, radial_reduce_3d, rational,
    fit_order, sobolev_ratio, verify_dalpha_identity_with, verify_dilation_covariance, verify_eikonal, verify_gauge_laplacian,
    verify_potential_scaling, DivergenceCase, TestField, VerificationRecord,
};
use crate::error::{LabError, Result};
use crate::group::{GroupPoint, RadialProfile};

/// Point with gauge uniform in `[gauge_min, gauge_max]` and uniformly random
/// direction in the unit cube, dilated into place.
pub fn random_point(rng: &mut impl Rng, n: usize, gauge_min: f64, gauge_max: f64) -> GroupPoint {
    loop {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let l = rng.random_range(-1.0..1.0);
        let p = GroupPoint::new(x, y, l).expect("finite");
        let d = p.gauge();
        if d < 1e-3 {
            continue;
        }
        let g = rng.random_range(gauge_min..=gauge_max);
        return p.dilate(g / d).expect("positive factor");
    }
}

pub fn random_points(n: usize, count: usize, gauge_min: f64, gauge_max: f64, seed: u64) -> Vec<GroupPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_point(&mut rng, n, gauge_min, gauge_max)).collect()
}

/// Order of the ladder errors pooled over `coarse` (relative to each
/// record's normaliser), as a pass/fail record.
pub fn pooled_order_record(name: &str, coarse: &[VerificationRecord], expected: f64, tol: f64) -> VerificationRecord {
    let steps = coarse[0].step_sizes.clone();
    let pooled: Vec<f64> = (0..steps.len())
        .map(|i| {
            coarse
                .iter()
                .map(|r| r.step_errors[i] / r.closed_form_value.abs().max(r.scale))
                .sum()
        })
        .collect();
    let order = fit_order(&steps, &pooled);
    let mut out = VerificationRecord::new(&format!("{name}_order"), expected, order.unwrap_or(f64::NAN), 1.0, tol)
        .param("points", coarse.len() as f64)
        .with_ladder(steps, pooled);
    out.rel_error = out.abs_error;
    out.passed = out.abs_error <= tol;
    out
}

/// Gauge identities at random points, plus the pooled convergence order of
/// each on the coarser ladder.
pub fn gauge_identity_records(cfg: &VerifyConfig, seed: u64) -> Result<Vec<VerificationRecord>> {
    let pts = random_points(cfg.n, cfg.points, cfg.gauge_min, cfg.gauge_max, seed);
    if pts.is_empty() {
        return Ok(Vec::new());
    }
    let nn = cfg.n as f64;
    let mut out = Vec::new();
    let mut add = |name: &str, rec: &dyn Fn(&GroupPoint, f64) -> Result<VerificationRecord>| -> Result<()> {
        let mut coarse = Vec::with_capacity(pts.len());
        for w in &pts {
            let mut r = rec(w, cfg.h)?;
            r.tolerance = cfg.identity_tol;
            r.passed = r.rel_error <= cfg.identity_tol;
            out.push(r);
            coarse.push(rec(w, cfg.order_h)?);
        }
        out.push(pooled_order_record(name, &coarse, 2.0, cfg.order_tol));
        Ok(())
    };
    add("eikonal", &verify_eikonal)?;
    add("gauge_sublaplacian", &verify_gauge_laplacian)?;
    for &a in &cfg.alphas {
        let coef = a * (2.0 * nn - a) + cfg.dalpha_constant_offset;
        add("dalpha_identity", &|w, h| verify_dalpha_identity_with(w, a, h, coef))?;
    }
    Ok(out)
}

pub fn covariance_records(cfg: &VerifyConfig, seed: u64) -> Result<Vec<VerificationRecord>> {
    let pts = random_points(cfg.n, cfg.covariance_points, cfg.gauge_min, cfg.gauge_max, seed ^ 0x5eed);
    let mut out = Vec::new();
    for w in &pts {
        for &lambda in &cfg.lambdas {
            for f in TestField::ALL {
                out.push(verify_dilation_covariance(f, lambda, w, cfg.h)?);
            }
            out.push(verify_potential_scaling(lambda, w)?);
        }
    }
    Ok(out)
}

/// A smooth profile on `[0, 1]` with its derivative.
pub struct TestProfile {
    pub name: &'static str,
    pub k: fn(f64) -> f64,
    pub dk: fn(f64) -> f64,
}

pub fn radial_test_profiles() -> [TestProfile; 5] {
    use std::f64::consts::FRAC_PI_2;
    [
        TestProfile {
            name: "one_minus_s2_sq",
            k: |s| (1.0 - s * s).powi(2),
            dk: |s| -4.0 * s * (1.0 - s * s),
        },
        TestProfile {
            name: "one_minus_s_sq",
            k: |s| (1.0 - s).powi(2),
            dk: |s| -2.0 * (1.0 - s),
        },
        TestProfile {
            name: "cosine",
            k: |s| (FRAC_PI_2 * s).cos(),
            dk: |s| -FRAC_PI_2 * (FRAC_PI_2 * s).sin(),
        },
        TestProfile {
            name: "gaussian",
            k: |s| (-s * s).exp(),
            dk: |s| -2.0 * s * (-s * s).exp(),
        },
        TestProfile {
            name: "cubic",
            k: |s| 1.0 - s * s * s,
            dk: |s| -3.0 * s * s,
        },
    ]
}

pub const RADIAL_SAMPLES: usize = 401;

/// One-dimensional reduction of a sampled profile against Cartesian
/// quadrature over the gauge ball with the exact derivative.
pub fn radial_records(cfg: &VerifyConfig) -> Result<Vec<VerificationRecord>> {
    if cfg.radial_alphas.is_empty() {
        return Ok(Vec::new());
    }
    if cfg.n != 1 {
        return Err(LabError::InvalidArgument("the Cartesian radial check runs on the first group only".into()));
    }
    let mut out = Vec::new();
    for (pi, p) in radial_test_profiles().into_iter().enumerate() {
        for &a in &cfg.radial_alphas {
            let k = RadialProfile::from_fn(p.k, 0.0, 1.0, RADIAL_SAMPLES, a)?;
            let one = radial_reduce(&k, a, 1.0, 1)?;
            let three = radial_reduce_3d(p.dk, a, 0.0, 1.0)?;
            out.push(
                VerificationRecord::new(&format!("radial_reduction_{}", p.name), one, three, 0.0, cfg.radial_tol)
                    .param("profile", pi as f64)
                    .param("alpha", a),
            );
        }
    }
    Ok(out)
}

/// Empirical weighted Sobolev ratios: finite, positive and stable under
/// doubling the profile resolution.
pub fn sobolev_records(cfg: &VerifyConfig, seed: u64) -> Result<Vec<VerificationRecord>> {
    let coarse = bump_family(cfg.sobolev_profiles, 1.0, seed, 201)?;
    let fine = bump_family(cfg.sobolev_profiles, 1.0, seed, 401)?;
    let mut out = Vec::new();
    for (i, (kc, kf)) in coarse.iter().zip(&fine).enumerate() {
        let rc = sobolev_ratio(kc, cfg.sobolev_alpha, 1.0, cfg.n)?;
        let rf = sobolev_ratio(kf, cfg.sobolev_alpha, 1.0, cfg.n)?;
        let mut r = VerificationRecord::new("sobolev_ratio_stability", rf, rc, 0.0, 1e-3)
            .param("profile", i as f64)
            .param("alpha", cfg.sobolev_alpha);
        r.passed &= rf.is_finite() && rf > 0.0;
        out.push(r);
    }
    Ok(out)
}

pub fn moser_records(cfg: &VerifyConfig) -> Result<Vec<VerificationRecord>> {
    let mut out = Vec::new();
    for &[num, den] in &cfg.moser_betas {
        let beta = rational(num, den);
        let bf = num as f64 / den as f64;
        for n in 2..=cfg.moser_n {
            let s = moser_iterate(beta.clone(), n, 1.0, 1.0, 1.0)?;
            let ok = s.matches_closed_form();
            let mut r = VerificationRecord::new("moser_closed_form", 1.0, if ok { 1.0 } else { 0.0 }, 1.0, 0.0)
                .param("beta", bf)
                .param("n", n as f64);
            r.passed = ok;
            out.push(r);
        }
        let s = moser_iterate(beta, cfg.moser_limit_n, 1.0, 1.0, 1.0)?;
        let (a_lim, d_lim) = s.normalised();
        let target_a = (1.0 + bf) / bf;
        out.push(
            VerificationRecord::new("moser_limit_a", target_a, a_lim, 1.0, cfg.moser_limit_tol)
                .param("beta", bf)
                .param("n", cfg.moser_limit_n as f64),
        );
        out.push(
            VerificationRecord::new("moser_limit_d", target_a * target_a, d_lim, 1.0, cfg.moser_limit_tol)
                .param("beta", bf)
                .param("n", cfg.moser_limit_n as f64),
        );
    }
    Ok(out)
}

/// Supercritical probe: strictly increasing with non-decaying increments.
/// Subcritical probe: Cauchy tail within `cauchy_tol`.
pub fn divergence_records(cfg: &VerifyConfig) -> Result<Vec<VerificationRecord>> {
    if cfg.divergence_eps.is_empty() {
        return Ok(Vec::new());
    }
    if cfg.n != 1 {
        return Err(LabError::InvalidArgument("the Cartesian divergence probe runs on the first group only".into()));
    }
    let mut out = Vec::new();
    let sup = divergence_probe(DivergenceCase::Supercritical, &cfg.divergence_eps)?;
    let inc: Vec<f64> = sup.windows(2).map(|w| w[1] - w[0]).collect();
    let increasing = inc.iter().all(|&d| d > 0.0);
    let non_decaying = inc.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-3));
    let min_inc = inc.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut r = VerificationRecord::new("divergence_supercritical", 1.0, if increasing && non_decaying { 1.0 } else { 0.0 }, 1.0, 0.0)
        .param("min_increment", min_inc);
    r.passed = increasing && non_decaying;
    out.push(r);
    let sub = divergence_probe(DivergenceCase::Subcritical { alpha: cfg.divergence_alpha }, &cfg.divergence_eps)?;
    let tail = cauchy_tail(&sub);
    out.push(
        VerificationRecord::new("divergence_subcritical_tail", 0.0, tail, 1.0, cfg.cauchy_tol)
            .param("alpha", cfg.divergence_alpha)
            .param("value", *sub.last().expect("nonempty")),
    );
    Ok(out)
}

/// The whole identity suite.
pub fn run_verify(cfg: &VerifyConfig, seed: u64) -> Result<Vec<VerificationRecord>> {
    let mut out = gauge_identity_records(cfg, seed)?;
    out.extend(covariance_records(cfg, seed)?);
    out.extend(radial_records(cfg)?);
    out.extend(sobolev_records(cfg, seed)?);
    out.extend(moser_records(cfg)?);
    out.extend(divergence_records(cfg)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_points_respect_gauge_range() {
        for p in random_points(1, 100, 0.25, 2.0, 3) {
            let d = p.gauge();
            assert!((0.25 - 1e-12..=2.0 + 1e-12).contains(&d));
        }
        assert_eq!(random_points(2, 5, 0.5, 1.0, 9), random_points(2, 5, 0.5, 1.0, 9));
    }

    #[test]
    fn profile_derivatives_match() {
        for p in radial_test_profiles() {
            for s in [0.1, 0.4, 0.8] {
                let h = 1e-6;
                let fd = ((p.k)(s + h) - (p.k)(s - h)) / (2.0 * h);
                assert!((fd - (p.dk)(s)).abs() < 1e-8, "{}", p.name);
            }
        }
    }

    #[test]
    fn empty_plan_gives_no_records() {
        assert!(run_verify(&VerifyConfig::empty(), 1).unwrap().is_empty());
    }

    #[test]
    fn small_plan_passes_and_sabotage_fails() {
        let cfg = VerifyConfig {
            points: 10,
            alphas: vec![0.5],
            ..VerifyConfig::empty()
        };
        let recs = gauge_identity_records(&cfg, 5).unwrap();
        assert_eq!(recs.len(), 33);
        assert!(recs.iter().all(|r| r.passed));
        let bad = VerifyConfig {
            dalpha_constant_offset: 0.1,
            ..cfg
        };
        let recs = gauge_identity_records(&bad, 5).unwrap();
        assert!(recs.iter().any(|r| r.identity_name == "dalpha_identity" && !r.passed));
    }

    #[test]
    fn moser_records_pass() {
        let cfg = VerifyConfig {
            moser_betas: vec![[1, 2]],
            ..VerifyConfig::empty()
        };
        let recs = moser_records(&cfg).unwrap();
        assert_eq!(recs.len(), 13);
        assert!(recs.iter().all(|r| r.passed), "{recs:?}");
    }
}
