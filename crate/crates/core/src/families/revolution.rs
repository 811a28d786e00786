//! Revolution: match a profile spun about an axis to the silhouette of the solid.
//!
//! The profile is a radius function `r(y)` sampled at strictly increasing heights. Spun
//! about the vertical axis, its front silhouette is the region `|x| <= r(y)`.

use serde::{Deserialize, Serialize};

use super::draw;
use super::{
    margin_fail, overlap_fail, symmetry_fail, Answer, Candidate, CandidateSet, FamilyError, NearMissKind,
    ValidationReport,
};
use crate::geometry::Vec2;
use crate::manifest::{Margins, ParamSample};
use crate::renderer::palette::PALETTE_SLOTS;
use crate::renderer::{Fragment, Paint};
use crate::rng::Stream;

const HEIGHT: f64 = 3.0;
const R_MIN: f64 = 0.25;
const R_MAX: f64 = 1.1;
/// Horizontal slices used by the silhouette predicate and distances.
const SLICES: usize = 64;
const SLICE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevolutionScene {
    /// `(r, y)` from bottom to top.
    pub profile: Vec<(f64, f64)>,
    pub concavity: usize,
    pub color: u8,
}

/// Interior vertices that are strict local minima of the radius.
pub fn concavity_count(profile: &[(f64, f64)]) -> usize {
    profile.windows(3).filter(|w| w[1].0 < w[0].0 && w[1].0 < w[2].0).count()
}

pub fn generate(sample: &ParamSample, s: &mut Stream) -> Result<RevolutionScene, FamilyError> {
    let n = sample.int("VERTEX_COUNT")? as usize;
    let concavity = sample.int("CONCAVITY")? as usize;
    let step = HEIGHT / (n - 1) as f64;
    let mut ys = s.split("heights");
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let j = if i == 0 || i == n - 1 { 0.0 } else { ys.lattice(-0.2, 0.2) * step };
            i as f64 * step + j
        })
        .collect();

    // k pairwise non-adjacent minima among the interior vertices 1..n-1
    let mut rs = s.split("radii");
    let slots = (n - 2 + 1).saturating_sub(concavity);
    if slots < concavity {
        return Err(FamilyError::Distractors(format!("{concavity} concavities do not fit {n} vertices")));
    }
    let mut picks = rs.sample_indices(slots, concavity);
    picks.sort_unstable();
    let minima: Vec<usize> = picks.iter().enumerate().map(|(i, &v)| 1 + v + i).collect();
    let mut r = vec![0.0; n];
    for &m in &minima {
        r[m] = rs.lattice(R_MIN, 0.5);
    }
    // runs between minima are unimodal, so they add no minima of their own
    let mut bounds = vec![0usize];
    for &m in &minima {
        bounds.push(m);
        bounds.push(m + 1);
    }
    bounds.push(n);
    for pair in bounds.chunks(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if lo >= hi {
            continue;
        }
        let mut vals: Vec<f64> = (lo..hi).map(|_| rs.lattice(0.55, 1.0)).collect();
        vals.sort_by(f64::total_cmp);
        let top = vals.pop().expect("non-empty run");
        let peak = rs.index(hi - lo);
        rs.shuffle(&mut vals);
        let mut right = vals.split_off(peak);
        vals.sort_by(f64::total_cmp);
        right.sort_by(|a, b| b.total_cmp(a));
        let ordered: Vec<f64> = vals.into_iter().chain([top]).chain(right).collect();
        r[lo..hi].copy_from_slice(&ordered);
    }
    Ok(RevolutionScene {
        profile: r.into_iter().zip(y).collect(),
        concavity,
        color: s.split("color").index(PALETTE_SLOTS) as u8,
    })
}

/// Closed outline of `x_left(y) <= x <= x_right(y)`.
fn outline(right: &[(f64, f64)], left: &[(f64, f64)]) -> Vec<Vec2> {
    right
        .iter()
        .map(|&(r, y)| Vec2::new(r, y))
        .chain(left.iter().rev().map(|&(r, y)| Vec2::new(-r, y)))
        .collect()
}

/// Sorted x coordinates where the horizontal line at `y` crosses the polygon boundary.
fn crossings(poly: &[Vec2], y: f64) -> Vec<f64> {
    let mut xs: Vec<f64> = poly
        .iter()
        .zip(poly.iter().cycle().skip(1))
        .filter(|(a, b)| (a.y <= y && y < b.y) || (b.y <= y && y < a.y))
        .map(|(a, b)| a.x + (y - a.y) / (b.y - a.y) * (b.x - a.x))
        .collect();
    xs.sort_by(f64::total_cmp);
    xs
}

fn y_range(poly: &[Vec2]) -> (f64, f64) {
    poly.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.y), hi.max(p.y)))
}

/// Largest slice-wise boundary difference; infinite if slice structure differs.
fn silhouette_distance(a: &[Vec2], b: &[Vec2]) -> f64 {
    let (a0, a1) = y_range(a);
    let (b0, b1) = y_range(b);
    if (a0 - b0).abs() > SLICE_TOLERANCE || (a1 - b1).abs() > SLICE_TOLERANCE {
        return f64::INFINITY;
    }
    (0..SLICES)
        .map(|k| {
            let y = a0 + (k as f64 + 0.5) / SLICES as f64 * (a1 - a0);
            let (xa, xb) = (crossings(a, y), crossings(b, y));
            if xa.len() != xb.len() {
                return f64::INFINITY;
            }
            xa.iter().zip(&xb).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

impl RevolutionScene {
    fn radius_at(&self, y: f64) -> Option<f64> {
        self.profile.windows(2).find_map(|w| {
            let ((r0, y0), (r1, y1)) = (w[0], w[1]);
            (y0 <= y && y <= y1).then(|| r0 + (y - y0) / (y1 - y0) * (r1 - r0))
        })
    }

    fn flipped(&self) -> Vec<(f64, f64)> {
        let top = self.profile.last().map_or(0.0, |p| p.1) + self.profile[0].1;
        self.profile.iter().rev().map(|&(r, y)| (r, top - y)).collect()
    }

    fn perturbed(&self, j: usize, delta: f64) -> Vec<(f64, f64)> {
        let mut p = self.profile.clone();
        p[j].0 = (p[j].0 + delta).clamp(0.15, R_MAX + 0.3);
        p
    }

    fn window(&self) -> (Vec2, Vec2) {
        let w = R_MAX * 1.3 + 0.25;
        let pad = (2.0 * w - HEIGHT) / 2.0;
        (Vec2::new(-w, -pad), Vec2::new(w, HEIGHT + pad))
    }

    fn axis(&self) -> crate::renderer::Primitive {
        draw::line(vec![Vec2::new(0.0, -0.25), Vec2::new(0.0, HEIGHT + 0.25)], Paint::Ink, true, 0.6)
    }

    fn silhouette_fragment(&self, points: &[Vec2]) -> Fragment {
        let (lo, hi) = self.window();
        let mut f = Fragment::new(lo, hi);
        f.push(draw::polygon(points.to_vec(), Paint::Palette(self.color)));
        f.push(self.axis());
        f
    }

    pub fn candidates(&self, n: usize, margins: &Margins, s: &mut Stream) -> Result<Vec<Candidate>, FamilyError> {
        let correct = outline(&self.profile, &self.profile);
        let m = self.profile.len();
        let mut pool: Vec<(Vec<Vec2>, NearMissKind)> = Vec::new();
        let flip = self.flipped();
        pool.push((outline(&flip, &flip), NearMissKind::Mirror));
        let mut ps = s.split("perturb");
        let j = 1 + ps.index(m - 2);
        let other = self.perturbed(j, if self.profile[j].0 > 0.6 { -0.3 } else { 0.3 });
        pool.push((outline(&self.profile, &other), NearMissKind::InconsistentProjection));
        for k in [1.3, 0.72] {
            let scaled: Vec<(f64, f64)> = self.profile.iter().map(|&(r, y)| (r * k, y)).collect();
            pool.push((outline(&scaled, &scaled), NearMissKind::OffByOneTransform));
        }
        for j in 0..m {
            for d in [-0.3, 0.3] {
                let p = self.perturbed(j, d);
                pool.push((outline(&p, &p), NearMissKind::OffByOneTransform));
            }
        }
        let tol = self.distance_margin(margins);
        let fixed = vec![(correct.clone(), NearMissKind::Mirror)];
        // flip and asymmetric first, then the rest
        let (head, tail) = pool.split_at(2);
        let first: Vec<_> = head
            .iter()
            .filter(|c| silhouette_distance(&c.0, &correct) >= tol)
            .cloned()
            .collect();
        let mut chosen_fixed = fixed.clone();
        chosen_fixed.extend(first.iter().cloned());
        let rest_needed = (n - 1)
            .checked_sub(first.len())
            .ok_or_else(|| FamilyError::Distractors("too few slots".into()))?;
        let rest = super::pick_spread(tail, rest_needed, &chosen_fixed, s, |a, b| silhouette_distance(&a.0, &b.0) >= tol)
            .ok_or_else(|| FamilyError::Distractors("silhouettes too close".into()))?;
        let mut out = vec![Candidate {
            fragment: self.silhouette_fragment(&correct),
            answer: Answer::Outline { points: correct },
            kind: None,
        }];
        out.extend(first.into_iter().chain(rest).map(|(pts, kind)| Candidate {
            fragment: self.silhouette_fragment(&pts),
            answer: Answer::Outline { points: pts },
            kind: Some(kind),
        }));
        Ok(out)
    }

    fn distance_margin(&self, margins: &Margins) -> f64 {
        margins.gap_fraction * 2.0 * R_MAX
    }

    pub fn stimulus(&self) -> Fragment {
        let (lo, hi) = self.window();
        let mut f = Fragment::new(lo, hi);
        let y0 = self.profile[0].1;
        let y1 = self.profile.last().map_or(y0, |p| p.1);
        let mut pts = vec![Vec2::new(0.0, y0)];
        pts.extend(self.profile.iter().map(|&(r, y)| Vec2::new(r, y)));
        pts.push(Vec2::new(0.0, y1));
        f.push(draw::polygon(pts, Paint::Palette(self.color)));
        f.push(self.axis());
        f
    }

    pub fn outputs(&self) -> Vec<(&'static str, String)> {
        vec![("AXIS", "vertical".into())]
    }

    /// Every horizontal slice of the candidate is exactly `[-r(y), r(y)]`.
    pub fn holds(&self, answer: &Answer) -> bool {
        let Answer::Outline { points } = answer else {
            return false;
        };
        let y0 = self.profile[0].1;
        let y1 = self.profile.last().map_or(y0, |p| p.1);
        let (c0, c1) = y_range(points);
        if (c0 - y0).abs() > SLICE_TOLERANCE || (c1 - y1).abs() > SLICE_TOLERANCE {
            return false;
        }
        (0..SLICES).all(|k| {
            let y = y0 + (k as f64 + 0.5) / SLICES as f64 * (y1 - y0);
            let Some(r) = self.radius_at(y) else { return false };
            let xs = crossings(points, y);
            xs.len() == 2 && (xs[0] + r).abs() <= SLICE_TOLERANCE && (xs[1] - r).abs() <= SLICE_TOLERANCE
        })
    }

    pub fn checks(&self, set: &CandidateSet, margins: &Margins) -> ValidationReport {
        let mut r = ValidationReport::default();
        if self.profile.iter().any(|p| p.0 < 0.1) {
            overlap_fail(&mut r, "profile touches the axis");
        }
        let min_step = margins.gap_fraction * HEIGHT;
        if self.profile.windows(2).any(|w| w[1].1 - w[0].1 < min_step) {
            overlap_fail(&mut r, "profile vertices too close in height");
        }
        let found = concavity_count(&self.profile);
        if found != self.concavity {
            margin_fail(&mut r, format!("profile has {found} concavities, knob asks for {}", self.concavity));
        }
        let tol = self.distance_margin(margins);
        let flip = self.flipped();
        if silhouette_distance(&outline(&flip, &flip), &outline(&self.profile, &self.profile)) < tol {
            symmetry_fail(&mut r, "profile is nearly mirror symmetric in height");
        }
        let outlines: Vec<&Vec<Vec2>> = set
            .candidates
            .iter()
            .filter_map(|c| match &c.answer {
                Answer::Outline { points } => Some(points),
                _ => None,
            })
            .collect();
        for i in 0..outlines.len() {
            for j in i + 1..outlines.len() {
                if silhouette_distance(outlines[i], outlines[j]) < tol {
                    margin_fail(&mut r, format!("silhouettes {i} and {j} are too similar"));
                }
            }
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concavities_counted_at_strict_interior_minima() {
        let p = |rs: &[f64]| rs.iter().enumerate().map(|(i, &r)| (r, i as f64)).collect::<Vec<_>>();
        assert_eq!(concavity_count(&p(&[1.0, 0.5, 1.0, 0.5, 1.0])), 2);
        assert_eq!(concavity_count(&p(&[0.2, 0.5, 1.0])), 0);
        assert_eq!(concavity_count(&p(&[1.0, 0.5, 0.5, 1.0])), 0);
    }

    #[test]
    fn crossings_of_a_square() {
        let sq = vec![Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 2.0), Vec2::new(-1.0, 2.0)];
        assert_eq!(crossings(&sq, 1.0), vec![-1.0, 1.0]);
        assert!(crossings(&sq, 3.0).is_empty());
    }
}
