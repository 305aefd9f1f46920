//! Fixed points of the deterministic force and the mean-field phase diagram.
//!
//! Nontrivial roots of f(q) = 0 sit where the matrix γ + δ̃J + εM becomes
//! singular, δ̃ = δ + γ|q|²/2, which happens at δ̃ = ±√(ε²-γ²). This gives the
//! radius candidates |q|² = 2(±√(ε²-γ²) - δ)/γ with the direction along the
//! corresponding null vector; a Newton polish guards the algebra.
//!
//! Regions: vacuum (only the origin), bistable (origin and bright pair both
//! stable, separated by saddles) for ε > γ and ε² < γ² + δ² with δ < 0, and
//! cat (origin unstable, bright pair stable) for ε² > γ² + δ².

use crate::model::{kerr_force, kerr_jacobian, KerrParams, Vec2};
use serde::Serialize;

/// Residual bound: |f(q)| <= RESIDUAL_TOL * γ * max(1, |q|) at a fixed point.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Parameter points closer than this (in units of γ) to a regime boundary are
/// flagged degenerate rather than classified.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Saddle,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FpLabel {
    Vacuum,
    BrightPlus,
    BrightMinus,
    SaddlePlus,
    SaddleMinus,
}

impl FpLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            FpLabel::Vacuum => "vacuum",
            FpLabel::BrightPlus => "bright_plus",
            FpLabel::BrightMinus => "bright_minus",
            FpLabel::SaddlePlus => "saddle_plus",
            FpLabel::SaddleMinus => "saddle_minus",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FixedPoint {
    pub q: Vec2,
    pub kind: Stability,
    /// Jacobian spectrum as (re, im) pairs.
    pub eigenvalues: [(f64, f64); 2],
    pub label: FpLabel,
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedPointSet {
    pub points: Vec<FixedPoint>,
    /// Set when the parameters sit within `DEGENERACY_TOL`·γ of ε = γ or
    /// ε² = γ² + δ², where branches merge and solvers downstream misbehave.
    pub degenerate: bool,
}

impl FixedPointSet {
    pub fn get(&self, label: FpLabel) -> Option<&FixedPoint> {
        self.points.iter().find(|p| p.label == label)
    }

    pub fn vacuum(&self) -> &FixedPoint {
        self.get(FpLabel::Vacuum).expect("origin is always present")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeTag {
    Vacuum,
    Cat,
    Bistable,
}

impl RegimeTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeTag::Vacuum => "vacuum",
            RegimeTag::Cat => "cat",
            RegimeTag::Bistable => "bistable",
        }
    }
}

/// Phase-diagram region of a parameter point plus distances to the two
/// boundary curves ε = γ (lower) and ε² = γ² + δ² (upper).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Regime {
    pub tag: RegimeTag,
    pub dist_to_threshold: f64,
    pub dist_to_cat_line: f64,
    pub degenerate: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum MeanfieldError {
    #[error("q is not a fixed point: |f(q)| = {residual:.3e} exceeds tolerance {tol:.3e}")]
    NotAFixedPoint { residual: f64, tol: f64 },
}

fn classify_eigenvalues(eigs: [(f64, f64); 2]) -> Stability {
    let (r1, r2) = (eigs[0].0, eigs[1].0);
    if r1 < 0.0 && r2 < 0.0 {
        Stability::Stable
    } else if r1 * r2 < 0.0 {
        Stability::Saddle
    } else {
        Stability::Unstable
    }
}

/// Jacobian spectrum and stability class at a fixed point.
///
/// Errors when `q` fails the fixed-point residual check.
pub fn stability(
    params: &KerrParams,
    q: Vec2,
) -> Result<([(f64, f64); 2], Stability), MeanfieldError> {
    let residual = kerr_force(params, q).norm();
    let tol = RESIDUAL_TOL * params.gamma * 1.0_f64.max(q.norm());
    if residual > tol {
        return Err(MeanfieldError::NotAFixedPoint { residual, tol });
    }
    let eigs = kerr_jacobian(params, q).eigenvalues();
    Ok((eigs, classify_eigenvalues(eigs)))
}

fn newton_polish(params: &KerrParams, mut q: Vec2) -> Vec2 {
    for _ in 0..60 {
        let f = kerr_force(params, q);
        if f.norm() < 1e-15 * params.gamma * 1.0_f64.max(q.norm()) {
            break;
        }
        match kerr_jacobian(params, q).solve(f) {
            Some(step) => q = q - step,
            None => break,
        }
    }
    q
}

/// Plus/minus labelling of a symmetric pair: the representative with y > 0
/// (then x >= 0 on ties) is "plus".
fn is_plus(q: Vec2) -> bool {
    if q.y.abs() > 1e-14 * 1.0_f64.max(q.norm()) {
        q.y > 0.0
    } else {
        q.x >= 0.0
    }
}

/// All real solutions of f(q) = 0 with stability classification.
pub fn find_fixed_points(params: &KerrParams) -> FixedPointSet {
    let g = params.gamma;
    let (d, e) = (params.delta, params.epsilon);
    let mut points = Vec::with_capacity(5);

    let origin_eigs = kerr_jacobian(params, Vec2::ZERO).eigenvalues();
    points.push(FixedPoint {
        q: Vec2::ZERO,
        kind: classify_eigenvalues(origin_eigs),
        eigenvalues: origin_eigs,
        label: FpLabel::Vacuum,
    });

    let degenerate = (e - g).abs() < DEGENERACY_TOL * g
        || (e * e - (g * g + d * d)).abs() < DEGENERACY_TOL * g * g;

    if e > g {
        let s = (e * e - g * g).sqrt();
        for (branch, bright) in [(s, true), (-s, false)] {
            let r_sq = 2.0 * (branch - d) / g;
            if r_sq <= 0.0 {
                continue;
            }
            // null vector of γ + δ̃J + εM at δ̃ = branch
            let dir = Vec2::new(e - branch, -g).normalized();
            let q0 = newton_polish(params, dir * r_sq.sqrt());
            for q in [q0, -q0] {
                let eigs = kerr_jacobian(params, q).eigenvalues();
                let plus = is_plus(q);
                let label = match (bright, plus) {
                    (true, true) => FpLabel::BrightPlus,
                    (true, false) => FpLabel::BrightMinus,
                    (false, true) => FpLabel::SaddlePlus,
                    (false, false) => FpLabel::SaddleMinus,
                };
                points.push(FixedPoint { q, kind: classify_eigenvalues(eigs), eigenvalues: eigs, label });
            }
        }
    }

    // deterministic order: vacuum, bright±, saddle±
    points.sort_by_key(|p| match p.label {
        FpLabel::Vacuum => 0,
        FpLabel::BrightPlus => 1,
        FpLabel::BrightMinus => 2,
        FpLabel::SaddlePlus => 3,
        FpLabel::SaddleMinus => 4,
    });
    FixedPointSet { points, degenerate }
}

/// Region of the mean-field phase diagram at these parameters.
pub fn classify_regime(params: &KerrParams) -> Regime {
    let set = find_fixed_points(params);
    let origin_stable = set.vacuum().kind == Stability::Stable;
    let has_stable_bright = set
        .points
        .iter()
        .any(|p| matches!(p.label, FpLabel::BrightPlus | FpLabel::BrightMinus) && p.kind == Stability::Stable);
    let tag = match (origin_stable, has_stable_bright) {
        (true, true) => RegimeTag::Bistable,
        (true, false) => RegimeTag::Vacuum,
        (false, _) => RegimeTag::Cat,
    };
    Regime {
        tag,
        dist_to_threshold: params.epsilon - params.gamma,
        dist_to_cat_line: params.gamma.hypot(params.delta) - params.epsilon,
        degenerate: set.degenerate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::kerr_force;
    use approx::assert_relative_eq;

    fn params(delta: f64, epsilon: f64) -> KerrParams {
        KerrParams::new(1.0, delta, epsilon, 0.1).unwrap()
    }

    #[test]
    fn bistable_point_has_five_fixed_points() {
        let set = find_fixed_points(&params(-10.0, 3.2));
        assert_eq!(set.points.len(), 5);
        assert!(!set.degenerate);
        for p in &set.points {
            let res = kerr_force(&params(-10.0, 3.2), p.q).norm();
            assert!(res <= RESIDUAL_TOL * 1.0_f64.max(p.q.norm()), "residual {res}");
        }
        assert_eq!(set.vacuum().kind, Stability::Stable);
        for lbl in [FpLabel::BrightPlus, FpLabel::BrightMinus] {
            assert_eq!(set.get(lbl).unwrap().kind, Stability::Stable);
        }
        for lbl in [FpLabel::SaddlePlus, FpLabel::SaddleMinus] {
            assert_eq!(set.get(lbl).unwrap().kind, Stability::Saddle);
        }
    }

    #[test]
    fn bright_radius_matches_closed_form() {
        // |q|² = 2(√(ε²-γ²) + 10) ≈ 26.0795 at δ = -10, ε = 3.2
        let set = find_fixed_points(&params(-10.0, 3.2));
        let b = set.get(FpLabel::BrightPlus).unwrap();
        let expect = 2.0 * ((3.2_f64 * 3.2 - 1.0).sqrt() + 10.0);
        assert_relative_eq!(b.q.norm_sq(), expect, max_relative = 1e-12);
        assert_relative_eq!(b.q.norm_sq(), 26.0795, max_relative = 1e-4);
    }

    #[test]
    fn sub_threshold_drive_leaves_only_origin() {
        let set = find_fixed_points(&params(0.0, 0.5));
        assert_eq!(set.points.len(), 1);
        assert_eq!(set.vacuum().kind, Stability::Stable);
    }

    #[test]
    fn fixed_point_set_is_symmetric_under_negation() {
        let set = find_fixed_points(&params(-6.0, 2.0));
        for p in &set.points {
            let neg = -p.q;
            assert!(
                set.points.iter().any(|o| (o.q - neg).norm() < 1e-10),
                "missing -q for {:?}",
                p.label
            );
        }
    }

    #[test]
    fn regimes_match_figure_examples() {
        assert_eq!(classify_regime(&params(-10.0, 3.2)).tag, RegimeTag::Bistable);
        assert_eq!(classify_regime(&params(0.0, 2.0)).tag, RegimeTag::Cat);
        assert_eq!(classify_regime(&params(5.0, 1.1)).tag, RegimeTag::Vacuum);
        assert_eq!(classify_regime(&params(0.0, 0.5)).tag, RegimeTag::Vacuum);
    }

    #[test]
    fn cat_regime_has_three_fixed_points() {
        let set = find_fixed_points(&params(0.0, 2.0));
        assert_eq!(set.points.len(), 3);
        // origin loses stability: eigenvalues -γ ± √(ε²-δ²) = {1, -3}, a
        // hyperbolic point (opposite-sign real parts)
        let v = set.vacuum();
        assert_eq!(v.kind, Stability::Saddle);
        let mut re: Vec<f64> = v.eigenvalues.iter().map(|e| e.0).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_relative_eq!(re[0], -3.0, max_relative = 1e-12);
        assert_relative_eq!(re[1], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn crossing_threshold_line_changes_regime() {
        let eps = 1e-3;
        assert_eq!(classify_regime(&params(-4.0, 1.0 - eps)).tag, RegimeTag::Vacuum);
        assert_eq!(classify_regime(&params(-4.0, 1.0 + eps)).tag, RegimeTag::Bistable);
        let cat_line = (1.0_f64 + 16.0).sqrt();
        assert_eq!(classify_regime(&params(-4.0, cat_line - eps)).tag, RegimeTag::Bistable);
        assert_eq!(classify_regime(&params(-4.0, cat_line + eps)).tag, RegimeTag::Cat);
    }

    #[test]
    fn degenerate_points_are_flagged() {
        let p = KerrParams::new(1.0, -4.0, 1.0 + 1e-12, 0.0).unwrap();
        assert!(find_fixed_points(&p).degenerate);
        assert!(classify_regime(&p).degenerate);
        assert!(!find_fixed_points(&params(-4.0, 2.0)).degenerate);
    }

    #[test]
    fn stability_of_origin_matches_closed_form() {
        // ε² < δ²: complex pair -γ ± i√(δ²-ε²)
        let p = params(-10.0, 3.2);
        let (eigs, kind) = stability(&p, Vec2::ZERO).unwrap();
        assert_eq!(kind, Stability::Stable);
        let w = (100.0_f64 - 10.24).sqrt();
        assert_relative_eq!(eigs[0].0, -1.0, max_relative = 1e-12);
        assert_relative_eq!(eigs[0].1.abs(), w, max_relative = 1e-12);

        let p2 = params(0.0, 2.0);
        let (_, kind2) = stability(&p2, Vec2::ZERO).unwrap();
        assert_ne!(kind2, Stability::Stable);
    }

    #[test]
    fn stability_rejects_non_fixed_points() {
        let p = params(-10.0, 3.2);
        let err = stability(&p, Vec2::new(1.0, 1.0)).unwrap_err();
        assert!(matches!(err, MeanfieldError::NotAFixedPoint { .. }));
    }

    #[test]
    fn saddles_have_opposite_sign_eigenvalues() {
        let set = find_fixed_points(&params(-6.0, 2.4));
        let s = set.get(FpLabel::SaddlePlus).unwrap();
        assert!(s.eigenvalues[0].0 * s.eigenvalues[1].0 < 0.0);
        assert_eq!(s.eigenvalues[0].1, 0.0);
    }

    #[test]
    fn plus_labels_have_canonical_orientation() {
        let set = find_fixed_points(&params(-10.0, 3.2));
        for lbl in [FpLabel::BrightPlus, FpLabel::SaddlePlus] {
            let q = set.get(lbl).unwrap().q;
            assert!(q.y > 0.0 || (q.y.abs() < 1e-12 && q.x >= 0.0));
        }
    }
}
