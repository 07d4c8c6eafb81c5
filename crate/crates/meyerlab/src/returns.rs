//! K-return sets `Λ_K = { t : (Λ - t) ∩ K = Λ ∩ K }`, their relative
//! denseness, and the return-time inclusion `Λ_{K'} - Λ_{K'} ⊆ Λ_K`.
//!
//! Candidate translations are restricted to `(Λ - Λ) ∪ {0}`: whenever `K`
//! meets `Λ` at a point `p`, any return `t` must carry `p` back into `Λ`, so
//! `t ∈ Λ - p`. The restriction is exact, not heuristic. All reported times
//! satisfy the defining patch equality exactly (within tolerance in float
//! mode), and a time is reported only when every patch it references lies
//! inside the sampled region.

use crate::geom::{lex_cmp, point_eq_tol, point_sub, AxisBox, Point};
use crate::interval::{self, Iv};
use crate::modelset::PointSet;
use crate::scalar::Scalar;
use std::cmp::Ordering;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReturnsError {
    #[error("sampled region does not contain the base patch window")]
    InsufficientRegion,
    #[error("operation requires a 1-d point set")]
    UnsupportedDimension,
    #[error("validity region is empty after shrinking")]
    EmptyValidity,
}

#[derive(Debug, Clone)]
pub enum ReturnKind {
    LambdaK { half_width: f64 },
    PEps { eps: f64 },
}

/// A computed return set restricted to its validity region.
#[derive(Debug, Clone)]
pub struct ReturnSet {
    pub kind: ReturnKind,
    /// Sorted return times (component representatives for interval-valued
    /// sets).
    pub times: Vec<Point>,
    /// Open-interval components for interval-valued sets (`P_ε`, vacuous or
    /// empty-patch `Λ_K`); `None` for the generic discrete `Λ_K`.
    pub components: Option<Vec<Iv>>,
    pub validity: AxisBox,
    /// Empty `K`: the defining condition is vacuous and the set is all of the
    /// validity region.
    pub vacuous: bool,
    /// `K ∩ Λ = ∅`: times are representatives of the interval components (1-d)
    /// or grid samples (d ≥ 2) rather than elements of `(Λ-Λ) ∪ {0}`.
    pub grid_fallback: bool,
}

impl ReturnSet {
    /// Membership of a translation among the reported times (discrete kind)
    /// or components (interval kind).
    pub fn contains_time(&self, t: &[Scalar], tol: f64) -> bool {
        if self.vacuous {
            return self.validity.contains(t);
        }
        if let Some(comps) = &self.components {
            return interval::contains_point(comps, &t[0]);
        }
        if tol == 0.0 {
            self.times.binary_search_by(|q| lex_cmp(q, t)).is_ok()
        } else {
            self.times.iter().any(|q| point_eq_tol(q, t, tol))
        }
    }
}

/// Compute `Λ_K` for a centered box `K` of the given half-width.
///
/// `extra_shrink` tightens the validity region beyond the mandatory `K`
/// margin. A negative `k_half` denotes an empty `K` (vacuous condition,
/// flagged).
pub fn lambda_k(ps: &PointSet, k_half: f64, extra_shrink: f64) -> Result<ReturnSet, ReturnsError> {
    let mode = ps.mode();
    let d = ps.d();
    if k_half < 0.0 {
        // Empty K: every translation trivially satisfies the condition.
        let validity = ps.region().clone();
        return Ok(ReturnSet {
            kind: ReturnKind::LambdaK { half_width: k_half },
            times: vec![vec![Scalar::zero(mode); d]],
            components: (d == 1).then(|| vec![(validity.lo[0].clone(), validity.hi[0].clone())]),
            validity,
            vacuous: true,
            grid_fallback: false,
        });
    }
    let k = Scalar::from_f64(k_half, mode);
    let kbox = AxisBox::centered(k_half, d, mode);
    // The base patch Λ ∩ K must be fully sampled.
    for i in 0..d {
        if ps.region().lo[i].cmp_total(&kbox.lo[i]) == Ordering::Greater
            || kbox.hi[i].cmp_total(&ps.region().hi[i]) == Ordering::Greater
        {
            return Err(ReturnsError::InsufficientRegion);
        }
    }
    let shrink = k.add(&Scalar::from_f64(extra_shrink, mode));
    let validity = ps.region().shrink(&shrink);
    if validity.is_empty() {
        return Err(ReturnsError::EmptyValidity);
    }

    let base: Vec<Point> = points_in_box(ps, &kbox);
    if base.is_empty() {
        return lambda_k_empty_base(ps, k_half, &kbox, validity);
    }
    let p0 = base[0].clone();
    let tol = mode.tolerance();
    let mut times: Vec<Point> = Vec::new();
    for q in ps.points() {
        let t = point_sub(q, &p0);
        if !validity.contains(&t) {
            continue;
        }
        if translated_patch_equal(ps, &kbox, &base, &t, tol) {
            times.push(t);
        }
    }
    times.sort_by(|a, b| lex_cmp(a, b));
    Ok(ReturnSet {
        kind: ReturnKind::LambdaK { half_width: k_half },
        times,
        components: None,
        validity,
        vacuous: false,
        grid_fallback: false,
    })
}

/// `K` nonempty but disjoint from `Λ`: the condition degenerates to
/// `Λ ∩ (K + t) = ∅`. Exact interval complement in 1-d, grid scan otherwise.
fn lambda_k_empty_base(
    ps: &PointSet,
    k_half: f64,
    kbox: &AxisBox,
    validity: AxisBox,
) -> Result<ReturnSet, ReturnsError> {
    let mode = ps.mode();
    let d = ps.d();
    if d == 1 {
        let k = Scalar::from_f64(k_half, mode);
        let vlo = validity.lo[0].clone();
        let vhi = validity.hi[0].clone();
        let mut comps: Vec<Iv> = Vec::new();
        let mut cur = vlo;
        for x in ps.xs() {
            let a = x.sub(&k);
            let b = x.add(&k);
            if a.cmp_total(&cur) == Ordering::Greater {
                comps.push((cur.clone(), a.clone().min(vhi.clone())));
            }
            if b.cmp_total(&cur) == Ordering::Greater {
                cur = b;
            }
            if cur.cmp_total(&vhi) != Ordering::Less {
                break;
            }
        }
        if cur.cmp_total(&vhi) == Ordering::Less {
            comps.push((cur, vhi));
        }
        let comps = interval::merge_open(comps);
        let half = Scalar::from_rational(1, 2, mode);
        let times: Vec<Point> = comps.iter().map(|(a, b)| vec![a.add(b).mul(&half)]).collect();
        return Ok(ReturnSet {
            kind: ReturnKind::LambdaK { half_width: k_half },
            times,
            components: Some(comps),
            validity,
            vacuous: false,
            grid_fallback: true,
        });
    }
    // Coarse grid scan for d >= 2.
    let pitch = (k_half / 2.0).max(1e-3);
    let pairs = validity.to_f64_pairs();
    let mut grid: Vec<Vec<f64>> = vec![vec![0.0; d]];
    for (axis, (lo, hi)) in pairs.iter().enumerate() {
        let steps = (((hi - lo) / pitch).ceil() as usize).max(1) + 1;
        let mut next = Vec::new();
        for g in &grid {
            for s in 0..steps {
                let mut gg = g.clone();
                gg[axis] = lo + pitch * s as f64;
                if gg[axis] <= *hi {
                    next.push(gg);
                }
            }
        }
        grid = next;
    }
    let mut times = Vec::new();
    for g in grid {
        let t: Point = g.iter().map(|&v| Scalar::from_f64(v, mode)).collect();
        let shifted = kbox.translate(&t);
        if points_in_box(ps, &shifted).is_empty() {
            times.push(t);
        }
    }
    times.sort_by(|a, b| lex_cmp(a, b));
    Ok(ReturnSet {
        kind: ReturnKind::LambdaK { half_width: k_half },
        times,
        components: None,
        validity,
        vacuous: false,
        grid_fallback: true,
    })
}

/// Points of the patch inside a closed box, sorted.
fn points_in_box(ps: &PointSet, b: &AxisBox) -> Vec<Point> {
    ps.slice_in(&b.lo[0], &b.hi[0])
        .iter()
        .filter(|p| b.contains(p))
        .cloned()
        .collect()
}

/// Does `(Λ - t) ∩ K = Λ ∩ K` hold exactly? Early-exits on the first
/// mismatch.
pub(crate) fn translated_patch_equal(
    ps: &PointSet,
    kbox: &AxisBox,
    base: &[Point],
    t: &[Scalar],
    tol: f64,
) -> bool {
    let shifted = kbox.translate(t);
    let lo = &shifted.lo[0];
    let hi = &shifted.hi[0];
    let slice = ps.slice_in(lo, hi);
    let d = ps.d();
    if d == 1 {
        if slice.len() != base.len() {
            return false;
        }
        for (q, b) in slice.iter().zip(base) {
            let expect = b[0].add(&t[0]);
            if !q[0].eq_tol(&expect, tol) {
                return false;
            }
        }
        true
    } else {
        let in_box: Vec<&Point> = slice.iter().filter(|p| shifted.contains(p)).collect();
        if in_box.len() != base.len() {
            return false;
        }
        for (q, b) in in_box.iter().zip(base) {
            let expect = crate::geom::point_add(b, t);
            if !point_eq_tol(q, &expect, tol) {
                return false;
            }
        }
        true
    }
}

/// Covering radius of a return set inside its validity region.
#[derive(Debug, Clone, PartialEq)]
pub enum Denseness {
    Radius(Scalar),
    /// Some gap exceeds half the validity width: the data cannot certify
    /// relative denseness.
    Unbounded,
}

impl Denseness {
    pub fn radius_f64(&self) -> Option<f64> {
        match self {
            Denseness::Radius(r) => Some(r.to_f64()),
            Denseness::Unbounded => None,
        }
    }
}

/// Max distance from a validity point to the return set (1-d exact; grid
/// estimate for d ≥ 2).
pub fn relative_denseness(rs: &ReturnSet) -> Denseness {
    if rs.vacuous {
        return Denseness::Radius(Scalar::from_int(
            0,
            crate::scalar::Mode::Float { tolerance: 0.0 },
        ));
    }
    let d = rs.validity.dim();
    if d != 1 {
        return relative_denseness_grid(rs);
    }
    let vlo = &rs.validity.lo[0];
    let vhi = &rs.validity.hi[0];
    let width = vhi.sub(vlo);
    let mode = scalar_mode(vlo);
    let half = Scalar::from_rational(1, 2, mode);
    let half_width = width.mul(&half);

    // Covered pieces: components when present, degenerate [t,t] otherwise.
    let pieces: Vec<Iv> = if let Some(c) = &rs.components {
        c.clone()
    } else {
        rs.times.iter().map(|t| (t[0].clone(), t[0].clone())).collect()
    };
    if pieces.is_empty() {
        return Denseness::Unbounded;
    }
    let mut worst = Scalar::zero(mode);
    // Edge gaps.
    let first_gap = pieces[0].0.sub(vlo);
    let last_gap = vhi.sub(&pieces[pieces.len() - 1].1);
    worst = worst.max(first_gap.max(Scalar::zero(mode)));
    worst = worst.max(last_gap.max(Scalar::zero(mode)));
    // Interior gaps contribute half their length; a gap reaching half the
    // validity width means the data cannot certify denseness.
    for w in pieces.windows(2) {
        let gap = w[1].0.sub(&w[0].1);
        if gap.cmp_total(&half_width) != Ordering::Less {
            return Denseness::Unbounded;
        }
        worst = worst.max(gap.mul(&half));
    }
    if worst.cmp_total(&half_width) != Ordering::Less {
        return Denseness::Unbounded;
    }
    Denseness::Radius(worst)
}

fn relative_denseness_grid(rs: &ReturnSet) -> Denseness {
    let pairs = rs.validity.to_f64_pairs();
    let d = pairs.len();
    if rs.times.is_empty() {
        return Denseness::Unbounded;
    }
    let pts: Vec<Vec<f64>> = rs.times.iter().map(|t| crate::geom::point_to_f64(t)).collect();
    let steps = 17usize;
    let mut grid = vec![vec![0.0f64; d]];
    for (axis, (lo, hi)) in pairs.iter().enumerate() {
        let mut next = Vec::new();
        for g in &grid {
            for s in 0..steps {
                let mut gg = g.clone();
                gg[axis] = lo + (hi - lo) * s as f64 / (steps - 1) as f64;
                next.push(gg);
            }
        }
        grid = next;
    }
    let mut worst = 0.0f64;
    for g in &grid {
        let mut best = f64::INFINITY;
        for p in &pts {
            let dist = g.iter().zip(p).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
            best = best.min(dist);
        }
        worst = worst.max(best);
    }
    let min_halfwidth = pairs.iter().map(|(lo, hi)| (hi - lo) / 2.0).fold(f64::INFINITY, f64::min);
    if worst > min_halfwidth {
        Denseness::Unbounded
    } else {
        Denseness::Radius(Scalar::Float(worst))
    }
}

fn scalar_mode(s: &Scalar) -> crate::scalar::Mode {
    match s {
        Scalar::Exact(q) => crate::scalar::Mode::Exact { d: q.d },
        Scalar::Float(_) => crate::scalar::Mode::Float { tolerance: 0.0 },
    }
}

/// Statistics for one `K'` candidate of the Schlottmann check.
#[derive(Debug, Clone)]
pub struct KprimeStats {
    pub k_half: f64,
    pub times: usize,
    pub pairs_tested: usize,
    pub violations: usize,
    pub denseness: Denseness,
    /// Up to [`MAX_WITNESSES`] violating pairs `(t1, t2)`.
    pub witnesses: Vec<(Point, Point)>,
}

pub const MAX_WITNESSES: usize = 16;

#[derive(Debug, Clone)]
pub struct SchlottmannVerdict {
    pub pass: bool,
    pub k_half: f64,
    /// First ladder entry with zero violations (and certified denseness).
    pub kprime: Option<f64>,
    pub base_denseness: Denseness,
    pub per_candidate: Vec<KprimeStats>,
    pub validity: AxisBox,
}

/// Check `Λ_{K'} - Λ_{K'} ⊆ Λ_K` over a ladder of `K'` candidates (ordered by
/// size). Passing requires zero violations and a finite covering-radius
/// certificate for the candidate; a pass is exact on the sampled data, a fail
/// is only "fail up to the candidate budget".
pub fn check_schlottmann(
    ps: &PointSet,
    k_half: f64,
    kprime_ladder: &[f64],
) -> Result<SchlottmannVerdict, ReturnsError> {
    let lam_k = lambda_k(ps, k_half, 0.0)?;
    let base_denseness = relative_denseness(&lam_k);
    let tol = ps.mode().tolerance();
    let mut per_candidate = Vec::new();
    let mut pass_at: Option<f64> = None;

    for &kp in kprime_ladder {
        let rs = lambda_k(ps, kp, 0.0)?;
        let denseness = relative_denseness(&rs);
        let mut violations = 0usize;
        let mut pairs_tested = 0usize;
        let mut witnesses = Vec::new();
        for t1 in &rs.times {
            for t2 in &rs.times {
                let diff = point_sub(t1, t2);
                if !lam_k.validity.contains(&diff) {
                    continue;
                }
                pairs_tested += 1;
                if !lam_k.contains_time(&diff, tol) {
                    violations += 1;
                    if witnesses.len() < MAX_WITNESSES {
                        witnesses.push((t1.clone(), t2.clone()));
                    }
                }
            }
        }
        let dense_ok = matches!(denseness, Denseness::Radius(_));
        per_candidate.push(KprimeStats {
            k_half: kp,
            times: rs.times.len(),
            pairs_tested,
            violations,
            denseness,
            witnesses,
        });
        if pass_at.is_none() && violations == 0 && dense_ok && pairs_tested > 0 {
            pass_at = Some(kp);
            break;
        }
    }

    Ok(SchlottmannVerdict {
        pass: pass_at.is_some(),
        k_half,
        kprime: pass_at,
        base_denseness,
        per_candidate,
        validity: lam_k.validity.clone(),
    })
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
        let reg = AxisBox::new(
            vec![Scalar::from_int(lo, EXACT5)],
            vec![Scalar::from_int(hi, EXACT5)],
        );
        generate(&sch, &win, &reg).unwrap()
    }

    fn fib_patch(window: (&str, &str), lo: &str, hi: &str) -> PointSet {
        let sch = fibonacci_scheme(&ProbeConfig::default()).unwrap();
        let win = Window::interval(s(window.0), s(window.1)).unwrap();
        let reg = AxisBox::new(vec![s(lo)], vec![s(hi)]);
        generate(&sch, &win, &reg).unwrap()
    }

    #[test]
    fn z_returns_are_integers() {
        let ps = z_patch(-20, 20);
        let rs = lambda_k(&ps, 1.5, 0.0).unwrap();
        let xs: Vec<i64> = rs.times.iter().map(|t| t[0].floor_int()).collect();
        let expect: Vec<i64> = (-18..=18).collect();
        assert_eq!(xs, expect);
        assert!(rs.contains_time(&[Scalar::from_int(0, EXACT5)], 0.0));
    }

    #[test]
    fn fibonacci_returns_relatively_dense() {
        let ps = fib_patch(("-6/7", "-5/14+1/2√5"), "-200", "200");
        let rs = lambda_k(&ps, 2.0, 0.0).unwrap();
        assert!(rs.times.len() > 10);
        match relative_denseness(&rs) {
            Denseness::Radius(r) => assert!(r.to_f64() < 60.0, "radius {}", r.to_f64()),
            Denseness::Unbounded => panic!("expected finite covering radius"),
        }
        // Every reported time satisfies the defining condition and lies in
        // (Λ - Λ) ∪ {0}.
        for t in &rs.times {
            let in_diff_set = ps
                .points()
                .iter()
                .any(|p| ps.contains_point(&crate::geom::point_add(p, t)));
            assert!(in_diff_set || t[0].is_zero());
        }
    }

    #[test]
    fn larger_k_refines() {
        let ps = fib_patch(("-6/7", "-5/14+1/2√5"), "-200", "200");
        let small = lambda_k(&ps, 2.0, 0.0).unwrap();
        let large = lambda_k(&ps, 20.0, 0.0).unwrap();
        for t in &large.times {
            if small.validity.contains(t) {
                assert!(small.contains_time(t, 0.0), "t={} missing", t[0].to_f64());
            }
        }
        assert!(large.times.len() < small.times.len());
    }

    #[test]
    fn candidate_restriction_matches_grid_oracle() {
        // Small instance: exhaustive fine grid finds no return time outside
        // the computed set.
        let ps = z_patch(-8, 8);
        let rs = lambda_k(&ps, 1.5, 0.0).unwrap();
        let kbox = AxisBox::centered(1.5, 1, EXACT5);
        let base = points_in_box(&ps, &kbox);
        let mut t = -6.0f64;
        while t <= 6.0 {
            let ts = vec![Scalar::from_f64(t, EXACT5)];
            let holds = translated_patch_equal(&ps, &kbox, &base, &ts, 0.0);
            let reported = rs.contains_time(&ts, 0.0);
            assert_eq!(holds, reported, "t={t}");
            t += 0.25;
        }
    }

    #[test]
    fn empty_k_is_vacuous_with_flag() {
        let ps = z_patch(-5, 5);
        let rs = lambda_k(&ps, -1.0, 0.0).unwrap();
        assert!(rs.vacuous);
        assert!(rs.contains_time(&[s("7/2")], 0.0));
    }

    #[test]
    fn k_not_meeting_lambda_gives_intervals() {
        // Λ ∩ K = ∅ for K = [-0.2, 0.2]: the condition degenerates to
        // "K + t misses Λ", an exact interval complement.
        let reg = AxisBox::new(vec![s("-2")], vec![s("10")]);
        let ps = PointSet::new(
            vec![vec![s("1")], vec![s("5")], vec![s("9")]],
            reg,
            EXACT5,
            Provenance::Synthetic { label: "sparse".into() },
        )
        .unwrap();
        let rs = lambda_k(&ps, 0.2, 0.0).unwrap();
        assert!(rs.grid_fallback);
        let comps = rs.components.as_ref().unwrap();
        assert!(!comps.is_empty());
        // K + 5 contains the point 5; K + 3 misses all points.
        assert!(!rs.contains_time(&[s("5")], 0.0));
        assert!(rs.contains_time(&[s("3")], 0.0));
    }

    #[test]
    fn schlottmann_z_trivial_pass() {
        let ps = z_patch(-20, 20);
        let v = check_schlottmann(&ps, 1.5, &[1.5]).unwrap();
        assert!(v.pass);
        assert_eq!(v.kprime, Some(1.5));
        assert_eq!(v.per_candidate[0].violations, 0);
    }

    #[test]
    fn schlottmann_differential_small() {
        // Non-singular window passes at some ladder entry.
        let ns = fib_patch(("-6/7", "-5/14+1/2√5"), "-150", "150");
        let v = check_schlottmann(&ns, 2.0, &[2.0, 5.0, 10.0]).unwrap();
        assert!(v.pass, "stats: {:?}", v.per_candidate.iter().map(|c| (c.k_half, c.violations)).collect::<Vec<_>>());
        // One-sided singular window [0, τ+1/7] (star(0) = 0 on the boundary):
        // returns exist on one side only and their differences violate the
        // inclusion, so every ladder entry fails with explicit witnesses.
        let sg = fib_patch(("0", "9/14+1/2√5"), "-150", "150");
        let v = check_schlottmann(&sg, 2.0, &[2.0, 5.0, 10.0]).unwrap();
        assert!(!v.pass);
        for c in &v.per_candidate {
            assert!(c.violations > 0, "K'={} had no violations", c.k_half);
            assert!(!c.witnesses.is_empty());
            // Witnesses really violate: t1 - t2 is not a K-return.
            let lam_k = lambda_k(&sg, 2.0, 0.0).unwrap();
            for (t1, t2) in &c.witnesses {
                let diff = point_sub(t1, t2);
                assert!(!lam_k.contains_time(&diff, 0.0));
            }
        }
    }

    #[test]
    fn doubly_singular_window_collapses_returns() {
        // W = [0, τ] closed is singular at BOTH endpoints (stars 0 and τ are
        // realized by lattice points near the origin), so exact patch
        // equality pins t* = 0 and Λ_K collapses to {0}: the check fails by
        // non-denseness, with no violating pairs available.
        let sg = fib_patch(("0", "1/2+1/2√5"), "-100", "100");
        let rs = lambda_k(&sg, 2.0, 0.0).unwrap();
        assert_eq!(rs.times.len(), 1);
        assert!(rs.times[0][0].is_zero());
        assert_eq!(relative_denseness(&rs), Denseness::Unbounded);
        let v = check_schlottmann(&sg, 2.0, &[2.0, 5.0]).unwrap();
        assert!(!v.pass);
    }

    #[test]
    fn defect_makes_denseness_unbounded() {
        // Z with an extra defect point: patches containing the defect never
        // recur.
        let mut pts: Vec<Point> = (-30..=30).map(|k| vec![Scalar::from_int(k, EXACT5)]).collect();
        pts.push(vec![s("1/2")]);
        let reg = AxisBox::new(vec![s("-30")], vec![s("30")]);
        let ps = PointSet::new(pts, reg, EXACT5, Provenance::Synthetic { label: "defect".into() })
            .unwrap();
        let rs = lambda_k(&ps, 2.0, 0.0).unwrap();
        assert_eq!(rs.times.len(), 1); // only t = 0
        assert_eq!(relative_denseness(&rs), Denseness::Unbounded);
    }
}
