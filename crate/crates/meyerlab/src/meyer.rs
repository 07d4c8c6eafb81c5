//! Meyer property diagnostics on finite patches: packing/covering radii and
//! the finite-cover condition `Λ - Λ ⊆ Λ + F`.

use crate::geom::Point;
use crate::modelset::PointSet;
use crate::scalar::Scalar;
use std::cmp::Ordering;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeyerError {
    #[error("need at least 2 points")]
    TooFewPoints,
    #[error("operation requires a 1-d point set")]
    UnsupportedDimension,
}

/// Outcome of the greedy cover construction.
#[derive(Debug, Clone)]
pub enum Cover {
    /// Distinct residues, sorted; every tested difference lands in `Λ + F`.
    Found(Vec<Point>),
    /// More than `budget` residues were needed.
    AbsentWithinBudget,
}

#[derive(Debug, Clone)]
pub struct MeyerReport {
    pub r_packing: Scalar,
    pub r_covering: Scalar,
    pub cover: Cover,
    pub budget: usize,
    /// Number of differences that entered the cover construction.
    pub differences_tested: usize,
}

impl MeyerReport {
    pub fn cover_size(&self) -> Option<usize> {
        match &self.cover {
            Cover::Found(f) => Some(f.len()),
            Cover::AbsentWithinBudget => None,
        }
    }
}

/// Uniform discreteness radius (half the minimal gap) and covering radius
/// over the edge-guarded region interior.
///
/// The covering radius is the fixed point of `r -> max distance from the
/// region shrunk by r to the patch`; the guard keeps truncated edge gaps from
/// inflating the estimate.
pub fn packing_covering(ps: &PointSet) -> Result<(Scalar, Scalar), MeyerError> {
    if ps.len() < 2 {
        return Err(MeyerError::TooFewPoints);
    }
    if ps.d() != 1 {
        return packing_covering_grid(ps);
    }
    let gaps = ps.gaps();
    let mut min_gap = gaps[0].clone();
    for g in &gaps[1..] {
        min_gap = min_gap.min(g.clone());
    }
    let half = Scalar::from_rational(1, 2, ps.mode());
    let r_packing = min_gap.mul(&half);

    let xs = ps.xs();
    let lo = ps.region().lo[0].clone();
    let hi = ps.region().hi[0].clone();
    // Fixed-point iteration of the edge-guarded max distance.
    let zero = Scalar::zero(ps.mode());
    let mut r = covering_given_guard(&xs, &gaps, &lo, &hi, &zero, &half, ps.mode());
    for _ in 0..8 {
        let next = covering_given_guard(&xs, &gaps, &lo, &hi, &r, &half, ps.mode());
        if next.cmp_total(&r) == Ordering::Equal {
            break;
        }
        r = next;
    }
    Ok((r_packing, r))
}

/// Max distance from `[lo+guard, hi-guard]` to the sorted points.
fn covering_given_guard(
    xs: &[Scalar],
    gaps: &[Scalar],
    lo: &Scalar,
    hi: &Scalar,
    guard: &Scalar,
    half: &Scalar,
    mode: crate::scalar::Mode,
) -> Scalar {
    let mut worst = Scalar::zero(mode);
    let lo_g = lo.add(guard);
    let hi_g = hi.sub(guard);
    if hi_g.cmp_total(&lo_g) == Ordering::Less {
        return worst;
    }
    // Interior gap midpoints, clamped into the guarded region.
    for (i, g) in gaps.iter().enumerate() {
        let a = &xs[i];
        let b = &xs[i + 1];
        let mid = a.add(&g.mul(half));
        let probe = mid.max(lo_g.clone()).min(hi_g.clone());
        let dist = probe.sub(a).min(b.sub(&probe)).abs();
        worst = worst.max(dist);
    }
    // Region edges against the nearest point.
    let first = &xs[0];
    let last = &xs[xs.len() - 1];
    if first.cmp_total(&lo_g) == Ordering::Greater {
        worst = worst.max(first.sub(&lo_g));
    }
    if last.cmp_total(&hi_g) == Ordering::Less {
        worst = worst.max(hi_g.sub(last));
    }
    worst
}

/// Float grid estimate for d >= 2.
fn packing_covering_grid(ps: &PointSet) -> Result<(Scalar, Scalar), MeyerError> {
    let pts: Vec<Vec<f64>> = ps.points().iter().map(|p| crate::geom::point_to_f64(p)).collect();
    let mut min_d = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = pts[i]
                .iter()
                .zip(&pts[j])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            min_d = min_d.min(d);
        }
    }
    let pairs = ps.region().to_f64_pairs();
    let steps = 33usize;
    let mut grid = vec![vec![0.0f64; pairs.len()]];
    for (axis, (lo, hi)) in pairs.iter().enumerate() {
        let mut next = Vec::new();
        for g in &grid {
            for s in 0..steps {
                let mut gg = g.clone();
                gg[axis] = lo + (hi - lo) * (s as f64) / ((steps - 1) as f64);
                next.push(gg);
            }
        }
        grid = next;
    }
    let mut worst = 0.0f64;
    for g in &grid {
        let mut best = f64::INFINITY;
        for p in &pts {
            let d = g.iter().zip(p).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
            best = best.min(d);
        }
        worst = worst.max(best);
    }
    Ok((
        Scalar::from_f64(min_d / 2.0, ps.mode()),
        Scalar::from_f64(worst, ps.mode()),
    ))
}

/// Greedy construction of a finite `F` with `Λ - Λ ⊆ Λ + F` on the validity
/// region: for every admissible difference `t`, the residue against the
/// nearest patch point is recorded. Greedy, not minimal; the theory only
/// needs existence.
pub fn meyer_cover(ps: &PointSet, budget: usize) -> Result<MeyerReport, MeyerError> {
    assert!(budget >= 1);
    if ps.len() < 2 {
        return Err(MeyerError::TooFewPoints);
    }
    if ps.d() != 1 {
        return Err(MeyerError::UnsupportedDimension);
    }
    let (r_packing, r_covering) = packing_covering(ps)?;
    let xs = ps.xs();
    let lo = &ps.region().lo[0];
    let hi = &ps.region().hi[0];
    let two = Scalar::from_int(2, ps.mode());
    let margin = r_covering.mul(&two);
    // A difference t is admissible when its representative window
    // [t - 2r, t + 2r] lies inside the sampled region.
    let t_lo = lo.add(&margin);
    let t_hi = hi.sub(&margin);

    let tol = ps.mode().tolerance();
    let merge_tol = if tol > 0.0 { 10.0 * tol } else { 0.0 };
    let mut residues: Vec<Scalar> = Vec::new();
    let mut tested = 0usize;
    let over_budget = 'outer: {
        for i in 0..xs.len() {
            for j in 0..=i {
                let t = xs[i].sub(&xs[j]);
                if t.cmp_total(&t_lo) == Ordering::Less || t.cmp_total(&t_hi) == Ordering::Greater
                {
                    continue;
                }
                tested += 1;
                let f = t.sub(&nearest(&xs, &t));
                let known = if merge_tol == 0.0 {
                    residues
                        .binary_search_by(|r| r.cmp_total(&f))
                        .is_ok()
                } else {
                    residues.iter().any(|r| r.eq_tol(&f, merge_tol))
                };
                if !known {
                    match residues.binary_search_by(|r| r.cmp_total(&f)) {
                        Ok(_) => {}
                        Err(pos) => residues.insert(pos, f),
                    }
                    if residues.len() > budget {
                        break 'outer true;
                    }
                }
            }
        }
        false
    };

    let cover = if over_budget {
        Cover::AbsentWithinBudget
    } else {
        Cover::Found(residues.into_iter().map(|r| vec![r]).collect())
    };
    Ok(MeyerReport {
        r_packing,
        r_covering,
        cover,
        budget,
        differences_tested: tested,
    })
}

/// Nearest element of the sorted list to `x`.
fn nearest(xs: &[Scalar], x: &Scalar) -> Scalar {
    let idx = xs.partition_point(|p| p.cmp_total(x) == Ordering::Less);
    let mut best: Option<Scalar> = None;
    for cand in [idx.checked_sub(1), Some(idx)].into_iter().flatten() {
        if let Some(c) = xs.get(cand) {
            let better = match &best {
                None => true,
                Some(b) => c.sub(x).abs().cmp_total(&b.sub(x).abs()) == Ordering::Less,
            };
            if better {
                best = Some(c.clone());
            }
        }
    }
    best.expect("nonempty point list")
}

/// Check the cover soundness invariant directly: every admissible difference
/// lies in `Λ + F`.
pub fn cover_is_sound(ps: &PointSet, report: &MeyerReport) -> bool {
    let Cover::Found(f) = &report.cover else {
        return false;
    };
    let xs = ps.xs();
    let tol = ps.mode().tolerance();
    let merge_tol = if tol > 0.0 { 10.0 * tol } else { 0.0 };
    let two = Scalar::from_int(2, ps.mode());
    let margin = report.r_covering.mul(&two);
    let t_lo = ps.region().lo[0].add(&margin);
    let t_hi = ps.region().hi[0].sub(&margin);
    for i in 0..xs.len() {
        for j in 0..=i {
            let t = xs[i].sub(&xs[j]);
            if t.cmp_total(&t_lo) == Ordering::Less || t.cmp_total(&t_hi) == Ordering::Greater {
                continue;
            }
            let p = nearest(&xs, &t);
            let res = t.sub(&p);
            let holds = f.iter().any(|cand| res.eq_tol(&cand[0], merge_tol));
            if !holds {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::AxisBox;
    use crate::modelset::{generate, PointSet, Provenance};
    use crate::scalar::{parse_scalar, Mode};
    use crate::scheme::{fibonacci_scheme, integer_lattice_scheme, ProbeConfig};
    use crate::window::{FlaggedBox, Window};

    const EXACT5: Mode = Mode::Exact { d: 5 };

    fn s(v: &str) -> Scalar {
        parse_scalar(v, EXACT5).unwrap()
    }

    fn z_patch(lo: i64, hi: i64) -> PointSet {
        let sch = integer_lattice_scheme(1, EXACT5).unwrap();
        let win = Window::new(vec![FlaggedBox::closed(vec![], vec![])]).unwrap();
        let reg = AxisBox::new(vec![Scalar::from_int(lo, EXACT5)], vec![Scalar::from_int(hi, EXACT5)]);
        generate(&sch, &win, &reg).unwrap()
    }

    fn fib_patch(lo: &str, hi: &str) -> PointSet {
        let sch = fibonacci_scheme(&ProbeConfig::default()).unwrap();
        let win = Window::interval(s("-1"), s("-1/2+1/2√5")).unwrap();
        let reg = AxisBox::new(vec![s(lo)], vec![s(hi)]);
        generate(&sch, &win, &reg).unwrap()
    }

    #[test]
    fn z_packing_covering() {
        let (p, c) = packing_covering(&z_patch(-10, 10)).unwrap();
        assert_eq!(p, s("1/2"));
        assert_eq!(c, s("1/2"));
    }

    #[test]
    fn two_point_set() {
        let reg = AxisBox::new(vec![s("0")], vec![s("5")]);
        let ps = PointSet::new(
            vec![vec![s("0")], vec![s("5")]],
            reg,
            EXACT5,
            Provenance::Synthetic { label: "pair".into() },
        )
        .unwrap();
        let (p, c) = packing_covering(&ps).unwrap();
        assert_eq!(p, s("5/2"));
        assert_eq!(c, s("5/2"));
    }

    #[test]
    fn fibonacci_packing_covering() {
        let (p, c) = packing_covering(&fib_patch("0", "100")).unwrap();
        assert_eq!(p, s("1/2"));
        // τ/2
        assert_eq!(c, s("1/4+1/4√5"));
    }

    #[test]
    fn z_cover_is_zero() {
        let rep = meyer_cover(&z_patch(-10, 10), 8).unwrap();
        match &rep.cover {
            Cover::Found(f) => {
                assert_eq!(f.len(), 1);
                assert!(f[0][0].is_zero());
            }
            _ => panic!("expected cover"),
        }
        assert!(cover_is_sound(&z_patch(-10, 10), &rep));
    }

    #[test]
    fn fibonacci_cover_saturates() {
        let a = meyer_cover(&fib_patch("0", "200"), 64).unwrap();
        let b = meyer_cover(&fib_patch("0", "400"), 64).unwrap();
        let fa = a.cover_size().expect("finite cover at 200");
        let fb = b.cover_size().expect("finite cover at 400");
        assert_eq!(fa, fb, "cover saturates as the region grows");
        assert!(fa >= 2);
        assert!(cover_is_sound(&fib_patch("0", "200"), &a));
    }

    #[test]
    fn non_meyer_control_exceeds_budget() {
        // Z ∪ {n + 1/n}: all the 1/n residues are distinct.
        let n_max = 100i64;
        let mut pts: Vec<Vec<Scalar>> = (0..=n_max + 2).map(|k| vec![s(&k.to_string())]).collect();
        for n in 2..=n_max {
            pts.push(vec![Scalar::from_rational(n * n + 1, n, EXACT5)]);
        }
        let reg = AxisBox::new(vec![s("0")], vec![s(&(n_max + 2).to_string())]);
        let ps = PointSet::new(pts, reg, EXACT5, Provenance::Synthetic { label: "control".into() })
            .unwrap();
        let rep = meyer_cover(&ps, 64).unwrap();
        assert!(matches!(rep.cover, Cover::AbsentWithinBudget));
    }

    #[test]
    fn too_few_points() {
        let reg = AxisBox::new(vec![s("0")], vec![s("1")]);
        let ps = PointSet::new(
            vec![vec![s("0")]],
            reg,
            EXACT5,
            Provenance::Synthetic { label: "single".into() },
        )
        .unwrap();
        assert!(matches!(packing_covering(&ps), Err(MeyerError::TooFewPoints)));
    }
}
