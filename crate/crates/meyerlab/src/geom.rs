//! Small geometry helpers shared across modules: points of G or H as scalar
//! vectors, and closed axis-aligned boxes used for sampling regions and
//! enumeration windows.

use crate::scalar::{Mode, Scalar};
use std::cmp::Ordering;

/// A point of physical or internal space: one `Scalar` per coordinate.
pub type Point = Vec<Scalar>;

pub fn point_add(a: &[Scalar], b: &[Scalar]) -> Point {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.add(y)).collect()
}

pub fn point_sub(a: &[Scalar], b: &[Scalar]) -> Point {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.sub(y)).collect()
}

pub fn point_neg(a: &[Scalar]) -> Point {
    a.iter().map(|x| x.neg()).collect()
}

/// Lexicographic order; the canonical order for all stored point lists.
pub fn lex_cmp(a: &[Scalar], b: &[Scalar]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.cmp_total(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

pub fn point_eq_tol(a: &[Scalar], b: &[Scalar], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.eq_tol(y, tol))
}

/// Max-norm of a point, as a scalar.
pub fn max_norm(a: &[Scalar]) -> Scalar {
    let mut best: Option<Scalar> = None;
    for c in a {
        let v = c.abs();
        best = Some(match best {
            None => v,
            Some(b) => b.max(v),
        });
    }
    best.expect("max_norm of empty point")
}

pub fn point_to_f64(a: &[Scalar]) -> Vec<f64> {
    a.iter().map(Scalar::to_f64).collect()
}

/// Closed axis-aligned box; `lo[i] > hi[i]` on any axis means empty.
/// A zero-dimensional box (no axes) is the one-point space and is nonempty.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    pub lo: Point,
    pub hi: Point,
}

impl AxisBox {
    pub fn new(lo: Point, hi: Point) -> Self {
        assert_eq!(lo.len(), hi.len(), "box corner dimensions differ");
        AxisBox { lo, hi }
    }

    /// Centered box of the given half-width on every axis.
    pub fn centered(half_width: f64, dim: usize, mode: Mode) -> Self {
        let h = Scalar::from_f64(half_width, mode);
        AxisBox {
            lo: (0..dim).map(|_| h.neg()).collect(),
            hi: (0..dim).map(|_| h.clone()).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo
            .iter()
            .zip(&self.hi)
            .any(|(l, h)| l.cmp_total(h) == Ordering::Greater)
    }

    pub fn contains(&self, p: &[Scalar]) -> bool {
        debug_assert_eq!(p.len(), self.dim());
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(p)
            .all(|((l, h), x)| l.cmp_total(x) != Ordering::Greater && x.cmp_total(h) != Ordering::Greater)
    }

    /// Shrink by `amount` on every axis (both sides). May become empty.
    pub fn shrink(&self, amount: &Scalar) -> AxisBox {
        AxisBox {
            lo: self.lo.iter().map(|l| l.add(amount)).collect(),
            hi: self.hi.iter().map(|h| h.sub(amount)).collect(),
        }
    }

    pub fn translate(&self, t: &[Scalar]) -> AxisBox {
        AxisBox {
            lo: point_add(&self.lo, t),
            hi: point_add(&self.hi, t),
        }
    }

    pub fn intersect(&self, other: &AxisBox) -> AxisBox {
        debug_assert_eq!(self.dim(), other.dim());
        AxisBox {
            lo: self
                .lo
                .iter()
                .zip(&other.lo)
                .map(|(a, b)| a.clone().max(b.clone()))
                .collect(),
            hi: self
                .hi
                .iter()
                .zip(&other.hi)
                .map(|(a, b)| a.clone().min(b.clone()))
                .collect(),
        }
    }

    /// Smallest box containing both.
    pub fn hull(&self, other: &AxisBox) -> AxisBox {
        debug_assert_eq!(self.dim(), other.dim());
        AxisBox {
            lo: self
                .lo
                .iter()
                .zip(&other.lo)
                .map(|(a, b)| a.clone().min(b.clone()))
                .collect(),
            hi: self
                .hi
                .iter()
                .zip(&other.hi)
                .map(|(a, b)| a.clone().max(b.clone()))
                .collect(),
        }
    }

    pub fn widths(&self) -> Vec<Scalar> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h.sub(l)).collect()
    }

    pub fn to_f64_pairs(&self) -> Vec<(f64, f64)> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (l.to_f64(), h.to_f64()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXACT5: Mode = Mode::Exact { d: 5 };

    fn s(n: i64) -> Scalar {
        Scalar::from_int(n, EXACT5)
    }

    #[test]
    fn box_membership_and_empty() {
        let b = AxisBox::new(vec![s(-2)], vec![s(2)]);
        assert!(b.contains(&[s(2)]));
        assert!(!b.contains(&[s(3)]));
        assert!(!b.is_empty());
        assert!(b.shrink(&s(3)).is_empty());
        // Zero-dimensional box is the one-point space.
        let unit = AxisBox::new(vec![], vec![]);
        assert!(!unit.is_empty());
        assert!(unit.contains(&[]));
    }

    #[test]
    fn lex_order() {
        assert_eq!(lex_cmp(&[s(1), s(5)], &[s(1), s(7)]), Ordering::Less);
        assert_eq!(lex_cmp(&[s(2)], &[s(2)]), Ordering::Equal);
    }
}
