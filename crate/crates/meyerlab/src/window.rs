//! Compact windows `W ⊂ H` as finite unions of axis-aligned boxes with
//! per-face open/closed flags.
//!
//! Two membership notions coexist: `contains` honors the face flags and is
//! what model-set generation filters against, while `membership` is the
//! interior/boundary/exterior trichotomy of the *closed* union, which is what
//! non-singularity cares about.

use crate::geom::{AxisBox, Point};
use crate::scalar::{Mode, Scalar};
use crate::scheme::{Scheme, SchemeError};
use std::cmp::Ordering;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WindowError {
    #[error("window box has empty interior on axis {axis}")]
    EmptyInterior { axis: usize },
    #[error("window has no boxes")]
    NoBoxes,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("normalization produced an uncoverable lower-dimensional sliver")]
    UnnormalizableOverlap,
}

/// One box of a window, with open/closed face flags.
#[derive(Debug, Clone, PartialEq)]
pub struct FlaggedBox {
    pub lo: Point,
    pub hi: Point,
    pub lo_closed: Vec<bool>,
    pub hi_closed: Vec<bool>,
}

impl FlaggedBox {
    pub fn closed(lo: Point, hi: Point) -> Self {
        let m = lo.len();
        FlaggedBox {
            lo,
            hi,
            lo_closed: vec![true; m],
            hi_closed: vec![true; m],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Empty as a point set.
    fn is_empty(&self) -> bool {
        for i in 0..self.dim() {
            match self.lo[i].cmp_total(&self.hi[i]) {
                Ordering::Greater => return true,
                Ordering::Equal => {
                    if !(self.lo_closed[i] && self.hi_closed[i]) {
                        return true;
                    }
                }
                Ordering::Less => {}
            }
        }
        false
    }

    fn has_interior(&self) -> bool {
        (0..self.dim()).all(|i| self.lo[i].cmp_total(&self.hi[i]) == Ordering::Less)
    }

    /// Exact flag-honoring membership.
    fn contains_exact(&self, p: &[Scalar]) -> bool {
        for i in 0..self.dim() {
            match self.lo[i].cmp_total(&p[i]) {
                Ordering::Greater => return false,
                Ordering::Equal if !self.lo_closed[i] => return false,
                _ => {}
            }
            match p[i].cmp_total(&self.hi[i]) {
                Ordering::Greater => return false,
                Ordering::Equal if !self.hi_closed[i] => return false,
                _ => {}
            }
        }
        true
    }

    /// Tolerance membership for float mode: closed faces absorb a tol collar,
    /// open faces shed one.
    fn contains_tol(&self, p: &[Scalar], tol: f64) -> bool {
        for i in 0..self.dim() {
            let x = p[i].to_f64();
            let lo = self.lo[i].to_f64();
            let hi = self.hi[i].to_f64();
            let lo_ok = if self.lo_closed[i] { x >= lo - tol } else { x > lo + tol };
            let hi_ok = if self.hi_closed[i] { x <= hi + tol } else { x < hi - tol };
            if !lo_ok || !hi_ok {
                return false;
            }
        }
        true
    }

    /// Intersection as flagged sets; may come out empty.
    fn intersect(&self, other: &FlaggedBox) -> FlaggedBox {
        let m = self.dim();
        let mut lo = Vec::with_capacity(m);
        let mut hi = Vec::with_capacity(m);
        let mut lc = Vec::with_capacity(m);
        let mut hc = Vec::with_capacity(m);
        for i in 0..m {
            match self.lo[i].cmp_total(&other.lo[i]) {
                Ordering::Greater => {
                    lo.push(self.lo[i].clone());
                    lc.push(self.lo_closed[i]);
                }
                Ordering::Less => {
                    lo.push(other.lo[i].clone());
                    lc.push(other.lo_closed[i]);
                }
                Ordering::Equal => {
                    lo.push(self.lo[i].clone());
                    lc.push(self.lo_closed[i] && other.lo_closed[i]);
                }
            }
            match self.hi[i].cmp_total(&other.hi[i]) {
                Ordering::Less => {
                    hi.push(self.hi[i].clone());
                    hc.push(self.hi_closed[i]);
                }
                Ordering::Greater => {
                    hi.push(other.hi[i].clone());
                    hc.push(other.hi_closed[i]);
                }
                Ordering::Equal => {
                    hi.push(self.hi[i].clone());
                    hc.push(self.hi_closed[i] && other.hi_closed[i]);
                }
            }
        }
        FlaggedBox { lo, hi, lo_closed: lc, hi_closed: hc }
    }

    /// Set difference `self \ cutter` as at most `2m` flagged boxes.
    fn subtract(&self, cutter: &FlaggedBox) -> Vec<FlaggedBox> {
        if self.intersect(cutter).is_empty() {
            return vec![self.clone()];
        }
        let mut pieces = Vec::new();
        let mut rem = self.clone();
        for i in 0..self.dim() {
            // Part of rem strictly below the cutter on axis i.
            let mut below = rem.clone();
            below.hi[i] = cutter.lo[i].clone();
            below.hi_closed[i] = !cutter.lo_closed[i];
            if below.hi[i].cmp_total(&rem.hi[i]) == Ordering::Greater {
                below.hi[i] = rem.hi[i].clone();
                below.hi_closed[i] = rem.hi_closed[i];
            }
            if !below.is_empty() {
                pieces.push(below);
            }
            let mut above = rem.clone();
            above.lo[i] = cutter.hi[i].clone();
            above.lo_closed[i] = !cutter.hi_closed[i];
            if above.lo[i].cmp_total(&rem.lo[i]) == Ordering::Less {
                above.lo[i] = rem.lo[i].clone();
                above.lo_closed[i] = rem.lo_closed[i];
            }
            if !above.is_empty() {
                pieces.push(above);
            }
            // Clamp rem to the cutter's span on this axis and continue.
            let span = FlaggedBox {
                lo: {
                    let mut v = rem.lo.clone();
                    v[i] = cutter.lo[i].clone();
                    v
                },
                hi: {
                    let mut v = rem.hi.clone();
                    v[i] = cutter.hi[i].clone();
                    v
                },
                lo_closed: {
                    let mut v = rem.lo_closed.clone();
                    v[i] = cutter.lo_closed[i];
                    v
                },
                hi_closed: {
                    let mut v = rem.hi_closed.clone();
                    v[i] = cutter.hi_closed[i];
                    v
                },
            };
            rem = rem.intersect(&span);
            if rem.is_empty() {
                break;
            }
        }
        pieces
    }
}

/// Interior/boundary/exterior with respect to the closed union.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Interior,
    Boundary,
    Exterior,
}

/// A window: normalized finite union of flagged boxes.
#[derive(Debug, Clone)]
pub struct Window {
    dim: usize,
    boxes: Vec<FlaggedBox>,
}

impl Window {
    /// Normalize and validate. Overlapping boxes are fragmented so interiors
    /// are pairwise disjoint; every surviving box must have nonempty
    /// interior.
    pub fn new(input: Vec<FlaggedBox>) -> Result<Window, WindowError> {
        if input.is_empty() {
            return Err(WindowError::NoBoxes);
        }
        let dim = input[0].dim();
        for b in &input {
            if b.dim() != dim {
                return Err(WindowError::DimensionMismatch {
                    expected: dim,
                    got: b.dim(),
                });
            }
            if b.lo_closed.len() != dim || b.hi_closed.len() != dim {
                return Err(WindowError::DimensionMismatch {
                    expected: dim,
                    got: b.lo_closed.len(),
                });
            }
            for axis in 0..dim {
                if b.lo[axis].cmp_total(&b.hi[axis]) != Ordering::Less {
                    return Err(WindowError::EmptyInterior { axis });
                }
            }
        }
        if dim == 0 {
            // Zero-dimensional internal space: the unique window is the whole
            // one-point space.
            return Ok(Window {
                dim,
                boxes: vec![input.into_iter().next().unwrap()],
            });
        }

        // Largest-first keeps fragmentation slivers on the small boxes.
        let mut ordered = input;
        ordered.sort_by(|a, b| {
            let va: f64 = (0..dim).map(|i| a.hi[i].to_f64() - a.lo[i].to_f64()).product();
            let vb: f64 = (0..dim).map(|i| b.hi[i].to_f64() - b.lo[i].to_f64()).product();
            vb.partial_cmp(&va).unwrap_or(Ordering::Equal)
        });

        let mut out: Vec<FlaggedBox> = Vec::new();
        let mut slivers: Vec<FlaggedBox> = Vec::new();
        for b in ordered {
            let mut frags = vec![b];
            for cutter in &out {
                frags = frags.into_iter().flat_map(|f| f.subtract(cutter)).collect();
            }
            for f in frags {
                if f.is_empty() {
                    continue;
                }
                if f.has_interior() {
                    out.push(f);
                } else {
                    slivers.push(f);
                }
            }
        }
        // A sliver is fine if the rest of the union already covers it, or if
        // it coincides with an open face of a neighbor (then the face flag
        // flips to closed).
        'sliver: for sl in slivers {
            let mut rest = vec![sl.clone()];
            for b in &out {
                rest = rest.into_iter().flat_map(|f| f.subtract(b)).collect();
                if rest.is_empty() {
                    continue 'sliver;
                }
            }
            for b in out.iter_mut() {
                for axis in 0..dim {
                    let flat = sl.lo[axis].cmp_total(&sl.hi[axis]) == Ordering::Equal;
                    if !flat {
                        continue;
                    }
                    let other_axes_match = (0..dim).all(|j| {
                        j == axis
                            || (sl.lo[j] == b.lo[j]
                                && sl.hi[j] == b.hi[j]
                                && sl.lo_closed[j] == b.lo_closed[j]
                                && sl.hi_closed[j] == b.hi_closed[j])
                    });
                    if !other_axes_match {
                        continue;
                    }
                    if !b.hi_closed[axis] && sl.lo[axis] == b.hi[axis] {
                        b.hi_closed[axis] = true;
                        continue 'sliver;
                    }
                    if !b.lo_closed[axis] && sl.lo[axis] == b.lo[axis] {
                        b.lo_closed[axis] = true;
                        continue 'sliver;
                    }
                }
            }
            return Err(WindowError::UnnormalizableOverlap);
        }

        Ok(Window { dim, boxes: out })
    }

    /// Closed window spanning `[lo, hi]` on one axis.
    pub fn interval(lo: Scalar, hi: Scalar) -> Result<Window, WindowError> {
        Window::new(vec![FlaggedBox::closed(vec![lo], vec![hi])])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn boxes(&self) -> &[FlaggedBox] {
        &self.boxes
    }

    /// Closed bounding box of the union.
    pub fn bounding_box(&self) -> AxisBox {
        let mut bb = AxisBox::new(self.boxes[0].lo.clone(), self.boxes[0].hi.clone());
        for b in &self.boxes[1..] {
            bb = bb.hull(&AxisBox::new(b.lo.clone(), b.hi.clone()));
        }
        bb
    }

    /// Flag-honoring membership (used for generating model sets).
    pub fn contains(&self, p: &[Scalar], mode: Mode) -> Result<bool, WindowError> {
        if p.len() != self.dim {
            return Err(WindowError::DimensionMismatch {
                expected: self.dim,
                got: p.len(),
            });
        }
        let tol = mode.tolerance();
        Ok(self.boxes.iter().any(|b| {
            if tol == 0.0 {
                b.contains_exact(p)
            } else {
                b.contains_tol(p, tol)
            }
        }))
    }

    /// Trichotomy with respect to the closed union. In float mode a point
    /// within tolerance of a face counts as boundary.
    pub fn membership(&self, p: &[Scalar], mode: Mode) -> Result<Membership, WindowError> {
        if p.len() != self.dim {
            return Err(WindowError::DimensionMismatch {
                expected: self.dim,
                got: p.len(),
            });
        }
        let tol = mode.tolerance();
        if !self.in_closure(p, tol) {
            return Ok(Membership::Exterior);
        }
        if self.in_interior(p, tol) {
            Ok(Membership::Interior)
        } else {
            Ok(Membership::Boundary)
        }
    }

    fn in_closure(&self, p: &[Scalar], tol: f64) -> bool {
        self.boxes.iter().any(|b| {
            (0..self.dim).all(|i| {
                if tol == 0.0 {
                    b.lo[i].cmp_total(&p[i]) != Ordering::Greater
                        && p[i].cmp_total(&b.hi[i]) != Ordering::Greater
                } else {
                    let x = p[i].to_f64();
                    b.lo[i].to_f64() - tol <= x && x <= b.hi[i].to_f64() + tol
                }
            })
        })
    }

    /// A point is interior to the closed union iff every orthant direction
    /// around it is eventually covered by a single box.
    fn in_interior(&self, p: &[Scalar], tol: f64) -> bool {
        if self.dim == 0 {
            return true;
        }
        for sigma in 0..(1usize << self.dim) {
            let covered = self.boxes.iter().any(|b| {
                (0..self.dim).all(|i| {
                    let plus = sigma >> i & 1 == 1;
                    if tol == 0.0 {
                        if plus {
                            b.lo[i].cmp_total(&p[i]) != Ordering::Greater
                                && p[i].cmp_total(&b.hi[i]) == Ordering::Less
                        } else {
                            b.lo[i].cmp_total(&p[i]) == Ordering::Less
                                && p[i].cmp_total(&b.hi[i]) != Ordering::Greater
                        }
                    } else {
                        let x = p[i].to_f64();
                        let lo = b.lo[i].to_f64();
                        let hi = b.hi[i].to_f64();
                        if plus {
                            lo - tol <= x && x < hi - tol
                        } else {
                            lo + tol < x && x <= hi + tol
                        }
                    }
                })
            });
            if !covered {
                return false;
            }
        }
        true
    }

    /// Translate the whole window by `-offset` (used by equivariance checks).
    pub fn translate(&self, offset: &[Scalar]) -> Window {
        Window {
            dim: self.dim,
            boxes: self
                .boxes
                .iter()
                .map(|b| FlaggedBox {
                    lo: crate::geom::point_add(&b.lo, offset),
                    hi: crate::geom::point_add(&b.hi, offset),
                    lo_closed: b.lo_closed.clone(),
                    hi_closed: b.hi_closed.clone(),
                })
                .collect(),
        }
    }
}

/// Result of the boundary-avoidance probe. A pass certifies non-singularity
/// only for physical points within `probe_radius` of the origin.
#[derive(Debug, Clone)]
pub struct NonsingularReport {
    pub pass: bool,
    pub probe_radius: f64,
    pub points_checked: usize,
    /// Offending lattice point as (coeffs, internal, physical) when failing.
    pub witness: Option<(Vec<i64>, Vec<f64>, Vec<f64>)>,
}

/// Check that no lattice point with physical projection in the probe box has
/// its internal projection on the boundary of the window.
pub fn is_nonsingular(
    scheme: &Scheme,
    window: &Window,
    probe_radius: f64,
) -> Result<NonsingularReport, SchemeError> {
    let mode = scheme.mode();
    if scheme.m() == 0 {
        // No internal space: the boundary of the one-point window is empty.
        return Ok(NonsingularReport {
            pass: true,
            probe_radius,
            points_checked: 0,
            witness: None,
        });
    }
    let internal = window.bounding_box();
    let physical = AxisBox::centered(probe_radius, scheme.d(), mode);
    let mut pts = scheme.lattice_points_in_box(&internal, &physical)?;
    let checked = pts.len();
    // Scan nearest-to-origin first so the reported witness is the smallest one.
    pts.sort_by(|a, b| {
        crate::geom::max_norm(&a.physical).cmp_total(&crate::geom::max_norm(&b.physical))
    });
    for p in &pts {
        let mem = window
            .membership(&p.internal, mode)
            .map_err(|_| SchemeError::DimensionMismatch {
                expected: scheme.m(),
                got: window.dim(),
            })?;
        if mem == Membership::Boundary {
            return Ok(NonsingularReport {
                pass: false,
                probe_radius,
                points_checked: checked,
                witness: Some((
                    p.coeffs.clone(),
                    crate::geom::point_to_f64(&p.internal),
                    crate::geom::point_to_f64(&p.physical),
                )),
            });
        }
    }
    Ok(NonsingularReport {
        pass: true,
        probe_radius,
        points_checked: checked,
        witness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::parse_scalar;
    use crate::scheme::{fibonacci_scheme, ProbeConfig};

    const EXACT5: Mode = Mode::Exact { d: 5 };

    fn s(v: &str) -> Scalar {
        parse_scalar(v, EXACT5).unwrap()
    }

    fn w(lo: &str, hi: &str) -> Window {
        Window::interval(s(lo), s(hi)).unwrap()
    }

    #[test]
    fn membership_trichotomy_examples() {
        let win = w("0", "1");
        assert_eq!(win.membership(&[s("0")], EXACT5).unwrap(), Membership::Boundary);
        assert_eq!(win.membership(&[s("1/2")], EXACT5).unwrap(), Membership::Interior);
        assert_eq!(win.membership(&[s("2")], EXACT5).unwrap(), Membership::Exterior);
        // τ' ≈ -0.618 is interior to [-1, τ-1].
        let fib = w("-1", "-1/2+1/2√5");
        assert_eq!(
            fib.membership(&[s("1/2-1/2√5")], EXACT5).unwrap(),
            Membership::Interior
        );
    }

    #[test]
    fn trichotomy_is_a_partition() {
        let win = Window::new(vec![
            FlaggedBox::closed(vec![s("0")], vec![s("1")]),
            FlaggedBox {
                lo: vec![s("1")],
                hi: vec![s("2")],
                lo_closed: vec![false],
                hi_closed: vec![true],
            },
        ])
        .unwrap();
        // The junction point 1 is interior to the union [0, 2].
        assert_eq!(win.membership(&[s("1")], EXACT5).unwrap(), Membership::Interior);
        for v in ["-1", "0", "1/3", "1", "3/2", "2", "5/2"] {
            let m = win.membership(&[s(v)], EXACT5).unwrap();
            let labels = [Membership::Interior, Membership::Boundary, Membership::Exterior];
            assert_eq!(labels.iter().filter(|&&l| l == m).count(), 1);
        }
    }

    #[test]
    fn flags_affect_contains_not_closure() {
        let half_open = Window::new(vec![FlaggedBox {
            lo: vec![s("0")],
            hi: vec![s("1/2+1/2√5")],
            lo_closed: vec![true],
            hi_closed: vec![false],
        }])
        .unwrap();
        let tau = s("1/2+1/2√5");
        assert!(!half_open.contains(&[tau.clone()], EXACT5).unwrap());
        assert_eq!(
            half_open.membership(&[tau], EXACT5).unwrap(),
            Membership::Boundary
        );
    }

    #[test]
    fn overlap_normalizes_to_disjoint_interiors() {
        let win = Window::new(vec![
            FlaggedBox::closed(vec![s("0")], vec![s("2")]),
            FlaggedBox::closed(vec![s("1")], vec![s("3")]),
        ])
        .unwrap();
        assert!(win.contains(&[s("5/2")], EXACT5).unwrap());
        assert!(win.contains(&[s("1")], EXACT5).unwrap());
        // Interiors disjoint: total length of boxes equals 3.
        let total: f64 = win
            .boxes()
            .iter()
            .map(|b| b.hi[0].to_f64() - b.lo[0].to_f64())
            .sum();
        assert!((total - 3.0).abs() < 1e-12);
    }

    #[test]
    fn coincident_faces_merge_flags() {
        let win = Window::new(vec![
            FlaggedBox {
                lo: vec![s("0")],
                hi: vec![s("2")],
                lo_closed: vec![true],
                hi_closed: vec![false],
            },
            FlaggedBox::closed(vec![s("0")], vec![s("2")]),
        ])
        .unwrap();
        assert!(win.contains(&[s("2")], EXACT5).unwrap());
    }

    #[test]
    fn degenerate_input_rejected() {
        let err = Window::new(vec![FlaggedBox::closed(vec![s("1")], vec![s("1")])]).unwrap_err();
        assert!(matches!(err, WindowError::EmptyInterior { .. }));
    }

    #[test]
    fn singular_window_fails_at_origin() {
        let sch = fibonacci_scheme(&ProbeConfig::default()).unwrap();
        let win = w("0", "1/2+1/2√5"); // [0, τ], star(0)=0 sits on the boundary
        let rep = is_nonsingular(&sch, &win, 5.0).unwrap();
        assert!(!rep.pass);
        let (coeffs, _, phys) = rep.witness.unwrap();
        assert_eq!(coeffs, vec![0, 0]);
        assert_eq!(phys, vec![0.0]);
    }

    #[test]
    fn shifted_window_passes() {
        let sch = fibonacci_scheme(&ProbeConfig::default()).unwrap();
        // 1/7-shifted endpoints are never internal coordinates of lattice points.
        let win = w("-6/7", "-5/14+1/2√5");
        let rep = is_nonsingular(&sch, &win, 100.0).unwrap();
        assert!(rep.pass, "witness: {:?}", rep.witness);
        assert!(rep.points_checked > 100);
    }

    #[test]
    fn fail_is_monotone_in_radius() {
        let sch = fibonacci_scheme(&ProbeConfig::default()).unwrap();
        let win = w("0", "1/2+1/2√5");
        let r1 = is_nonsingular(&sch, &win, 2.0).unwrap();
        let r2 = is_nonsingular(&sch, &win, 50.0).unwrap();
        assert!(!r1.pass && !r2.pass);
    }

    #[test]
    fn zero_dim_window_vacuously_nonsingular() {
        let sch = crate::scheme::integer_lattice_scheme(1, EXACT5).unwrap();
        let win = Window::new(vec![FlaggedBox::closed(vec![], vec![])]).unwrap();
        let rep = is_nonsingular(&sch, &win, 10.0).unwrap();
        assert!(rep.pass);
    }
}
