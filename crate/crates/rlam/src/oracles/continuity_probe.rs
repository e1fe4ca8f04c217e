//! A numeric continuity probe.
//!
//! Walks shrinking radii around a point, along the axes and a few random
//! directions, staying inside the claimed domain. If the value gap to the
//! center refuses to close even at tiny radii, the point is flagged as a
//! suspected discontinuity. The probe validates accepted refinement
//! judgments (it should stay silent) and pins rejected ones to a concrete
//! jump.

use crate::continuity::{sample_region, truth_domain_member_f64, Formula};
use crate::semantics::{denote_first_order, PrimRegistry};
use crate::syntax::{rat_to_f64, Term, TypingContext};
use crate::typing::TypeError;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct ProbeConfig {
    /// Largest probe radius; halved down from here.
    pub base_radius: f64,
    pub max_halvings: u32,
    /// Random directions tried in addition to the axis directions.
    pub random_directions: usize,
    /// Gap regarded as a jump when it persists at the smallest radii.
    pub tol: f64,
    /// Radius below which the gap must have closed.
    pub near_radius: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> ProbeConfig {
        ProbeConfig {
            base_radius: 0.5,
            max_halvings: 40,
            random_directions: 8,
            tol: 1e-6,
            near_radius: 1e-7,
            seed: 0xC0FF_EE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointVerdict {
    Continuous,
    /// The value at `probe` stays `gap` away from the center value even
    /// at the smallest usable radius.
    Suspect { probe: Vec<f64>, here: f64, near: f64 },
    /// The function could not be evaluated at the point.
    Unusable,
}

/// Probes continuity of `f` restricted to `in_domain` at `point`.
pub fn probe_continuity_at(
    f: &dyn Fn(&[f64]) -> Option<f64>,
    in_domain: &dyn Fn(&[f64]) -> bool,
    point: &[f64],
    cfg: &ProbeConfig,
) -> PointVerdict {
    if !in_domain(point) {
        return PointVerdict::Unusable;
    }
    let here = match f(point) {
        Some(v) if v.is_finite() => v,
        _ => return PointVerdict::Unusable,
    };
    let n = point.len();
    let mut directions: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        let mut d = vec![0.0; n];
        d[i] = 1.0;
        directions.push(d.clone());
        d[i] = -1.0;
        directions.push(d);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    while directions.len() < 2 * n + cfg.random_directions {
        let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 {
            directions.push(d.into_iter().map(|x| x / norm).collect());
        }
    }

    for dir in &directions {
        let mut last: Option<(f64, Vec<f64>, f64)> = None;
        for k in 0..=cfg.max_halvings {
            let r = cfg.base_radius / f64::powi(2.0, k as i32);
            let probe: Vec<f64> =
                point.iter().zip(dir).map(|(x, d)| x + r * d).collect();
            if !in_domain(&probe) {
                continue;
            }
            if let Some(v) = f(&probe) {
                if v.is_finite() {
                    last = Some((r, probe, v));
                }
            }
        }
        if let Some((r, probe, v)) = last {
            if r <= cfg.near_radius && (v - here).abs() > cfg.tol {
                return PointVerdict::Suspect { probe, here, near: v };
            }
        }
    }
    PointVerdict::Continuous
}

#[derive(Debug, Clone)]
pub enum ContinuityVerdict {
    /// No image violation and no suspected jump at any sampled point.
    Continuous { points: usize },
    SuspectDiscontinuity { point: Vec<f64>, probe: Vec<f64>, here: f64, near: f64 },
    /// The value at `point` escapes the declared image.
    ImageViolation { point: Vec<f64>, value: f64 },
    Inconclusive(String),
}

impl ContinuityVerdict {
    pub fn is_clean(&self) -> bool {
        matches!(self, ContinuityVerdict::Continuous { .. })
    }
}

/// Numerically validates a ground refinement judgment
/// `ctx |-{domain, image} t : R` by sampling the domain, checking image
/// membership, and probing continuity at every sample.
///
/// `vars` pairs each context variable (in order) with its logical
/// variable in `domain`; `image` is the image formula with its logical
/// variable.
#[allow(clippy::too_many_arguments)]
pub fn judgment_probe(
    ctx: &TypingContext,
    vars: &[String],
    t: &Term,
    domain: &Formula,
    image: Option<(&str, &Formula)>,
    reg: &PrimRegistry,
    cfg: &ProbeConfig,
    samples: usize,
) -> Result<ContinuityVerdict, TypeError> {
    assert_eq!(ctx.len(), vars.len(), "one logical variable per context variable");
    let f_raw = denote_first_order(ctx, t, reg)?;
    let f = move |p: &[f64]| f_raw(p).ok().filter(|v| v.is_finite());

    let assignment = |p: &[f64]| -> BTreeMap<String, f64> {
        vars.iter().cloned().zip(p.iter().copied()).collect()
    };
    let in_domain =
        |p: &[f64]| truth_domain_member_f64(domain, &assignment(p), reg).unwrap_or(false);

    let points = sample_region(domain, vars, samples, cfg.seed, reg);
    if points.is_empty() {
        return Ok(ContinuityVerdict::Inconclusive(
            "could not sample the domain".into(),
        ));
    }
    let mut checked = 0usize;
    for sigma in &points {
        let p: Vec<f64> = vars.iter().map(|v| rat_to_f64(&sigma[v])).collect();
        let value = match f(&p) {
            Some(v) => v,
            None => continue,
        };
        if let Some((bvar, img)) = image {
            let mut m = BTreeMap::new();
            m.insert(bvar.to_string(), value);
            if !truth_domain_member_f64(img, &m, reg).unwrap_or(false) {
                return Ok(ContinuityVerdict::ImageViolation { point: p, value });
            }
        }
        match probe_continuity_at(&f, &in_domain, &p, cfg) {
            PointVerdict::Continuous => checked += 1,
            PointVerdict::Suspect { probe, here, near } => {
                return Ok(ContinuityVerdict::SuspectDiscontinuity {
                    point: p,
                    probe,
                    here,
                    near,
                })
            }
            PointVerdict::Unusable => {}
        }
    }
    if checked == 0 {
        Ok(ContinuityVerdict::Inconclusive(
            "no sampled point was usable for probing".into(),
        ))
    } else {
        Ok(ContinuityVerdict::Continuous { points: checked })
    }
}
