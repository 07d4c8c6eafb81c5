//! Open-interval arithmetic on scalars, used for return-set components.
//!
//! Components of `P_ε` (and interval-valued return sets) are open intervals.
//! Overlapping intervals merge; intervals that merely touch stay separate,
//! because the common endpoint genuinely does not belong to the union.

use crate::scalar::Scalar;
use std::cmp::Ordering;

pub type Iv = (Scalar, Scalar);

/// Sort and merge strictly overlapping open intervals; drops empties.
pub fn merge_open(mut ivs: Vec<Iv>) -> Vec<Iv> {
    ivs.retain(|(a, b)| a.cmp_total(b) == Ordering::Less);
    ivs.sort_by(|x, y| x.0.cmp_total(&y.0).then_with(|| x.1.cmp_total(&y.1)));
    let mut out: Vec<Iv> = Vec::with_capacity(ivs.len());
    for (a, b) in ivs {
        match out.last_mut() {
            Some((_, hi)) if a.cmp_total(hi) == Ordering::Less => {
                if b.cmp_total(hi) == Ordering::Greater {
                    *hi = b;
                }
            }
            _ => out.push((a, b)),
        }
    }
    out
}

/// Merge that also keeps one representative per surviving interval. The
/// representative of a merged interval is the one attached to its first part.
pub fn merge_open_with_reps(mut ivs: Vec<(Iv, Scalar)>) -> Vec<(Iv, Scalar)> {
    ivs.retain(|((a, b), _)| a.cmp_total(b) == Ordering::Less);
    ivs.sort_by(|x, y| (x.0).0.cmp_total(&(y.0).0).then_with(|| (x.0).1.cmp_total(&(y.0).1)));
    let mut out: Vec<(Iv, Scalar)> = Vec::with_capacity(ivs.len());
    for ((a, b), rep) in ivs {
        match out.last_mut() {
            Some(((_, hi), _)) if a.cmp_total(hi) == Ordering::Less => {
                if b.cmp_total(hi) == Ordering::Greater {
                    *hi = b;
                }
            }
            _ => out.push(((a, b), rep)),
        }
    }
    out
}

/// Is `x` strictly inside some interval? (Binary search on sorted, disjoint
/// input.)
pub fn contains_point(ivs: &[Iv], x: &Scalar) -> bool {
    let idx = ivs.partition_point(|(a, _)| a.cmp_total(x) != Ordering::Greater);
    if idx == 0 {
        return false;
    }
    let (a, b) = &ivs[idx - 1];
    a.cmp_total(x) == Ordering::Less && x.cmp_total(b) == Ordering::Less
}

/// A point of `(x, y)` missed by the union, if any. Aware of pinholes:
/// two intervals touching at `p` leave `p` uncovered.
pub fn uncovered_point(ivs: &[Iv], x: &Scalar, y: &Scalar) -> Option<Scalar> {
    if x.cmp_total(y) != Ordering::Less {
        return None; // empty query interval
    }
    let half = Scalar::from_rational(1, 2, scalar_mode(x));
    let mut cur = x.clone();
    let mut cur_is_pinhole = false; // true when cur itself is an uncovered point
    for (a, b) in ivs {
        if b.cmp_total(&cur) != Ordering::Greater {
            continue; // entirely before the cursor
        }
        if a.cmp_total(y) != Ordering::Less {
            break; // entirely after the query interval
        }
        match a.cmp_total(&cur) {
            Ordering::Greater => {
                // Gap (cur, a) is uncovered; also covers the pinhole case.
                let hi = a.clone().min(y.clone());
                if cur.cmp_total(&hi) == Ordering::Less {
                    return Some(cur.add(&hi).mul(&half));
                }
            }
            Ordering::Equal => {
                if cur_is_pinhole {
                    return Some(cur.clone());
                }
            }
            Ordering::Less => {}
        }
        if b.cmp_total(&cur) == Ordering::Greater {
            cur = b.clone();
            cur_is_pinhole = true;
        }
        if cur.cmp_total(y) != Ordering::Less {
            return None;
        }
    }
    if cur.cmp_total(y) == Ordering::Less {
        Some(cur.add(y).mul(&half))
    } else {
        None
    }
}

/// `(x, y) ⊆ union`? Equivalent to having no uncovered point.
pub fn covers_interval(ivs: &[Iv], x: &Scalar, y: &Scalar) -> bool {
    uncovered_point(ivs, x, y).is_none()
}

fn scalar_mode(s: &Scalar) -> crate::scalar::Mode {
    match s {
        Scalar::Exact(q) => crate::scalar::Mode::Exact { d: q.d },
        Scalar::Float(_) => crate::scalar::Mode::Float { tolerance: 0.0 },
    }
}
