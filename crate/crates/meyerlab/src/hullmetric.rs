//! A concrete compatible metric on patch space, the ε-return sets `P_ε`, the
//! additivity check `P_δ - P_δ ⊆ P_ε`, and the sandwich between `P_ε` and
//! `Λ_K + U`.
//!
//! The metric realization is the canonical choice of this crate:
//!
//! ```text
//! d(A, B) = inf { ε ∈ (0, ε₀] : ∃ |t|,|t'| ≤ ε with
//!                 (A - t) ∩ ball(ε) = (B - t') ∩ ball(ε) },   ball(ε) = [-1/ε, 1/ε]
//! ```
//!
//! capped at `ε₀`. It is symmetric and vanishes on equal patches; the exact
//! triangle inequality is NOT guaranteed (only a factor-2 quasi-metric
//! bound), and nothing here relies on it: every check below uses only patch
//! equality up to small shifts.
//!
//! All feasibility decisions reduce to one primitive: the set of window
//! centers `c` for which `Λ - g` and `Λ` agree exactly on `[c - L, c + L]`
//! is a single open interval obtained from the nearest mismatch on each side
//! of the candidate range. Mismatch positions are scanned outward from the
//! center, so non-returns are rejected after a couple of comparisons. In 1-d
//! and exact mode the resulting `P_ε` components are closed-form exact, not
//! grid approximations.

use crate::geom::{AxisBox, Point};
use crate::interval::{self, Iv};
use crate::modelset::{PointSet, Provenance};
use crate::returns::{lambda_k, relative_denseness, Denseness, ReturnKind, ReturnSet};
use crate::scalar::{Mode, Scalar};
use std::cmp::Ordering;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("patches too small for the metric cap (need the ball of radius 1/cap plus slack)")]
    InsufficientRegion,
    #[error("metric operations require 1-d point sets")]
    UnsupportedDimension,
    #[error("bad metric parameters: {0}")]
    BadParams(String),
    #[error("validity region is empty after shrinking")]
    EmptyValidity,
    #[error(transparent)]
    Returns(#[from] crate::returns::ReturnsError),
}

/// Parameters of the metric realization.
#[derive(Debug, Clone)]
pub struct MetricParams {
    /// Maximal reported distance ε₀ (must be in (0, 1]).
    pub cap: f64,
    /// Bisection pitch for distance values.
    pub search_grid: f64,
    /// Treat point sets as complete motifs: agreement beyond the listed
    /// points is genuine, and no region clamping applies.
    pub assume_complete: bool,
    /// Component pairs for difference checks are drawn from `[-r, r]`.
    pub pair_radius: f64,
}

impl Default for MetricParams {
    fn default() -> Self {
        MetricParams {
            cap: 1.0,
            search_grid: 1e-4,
            assume_complete: false,
            pair_radius: 250.0,
        }
    }
}

impl MetricParams {
    pub fn validate(&self) -> Result<(), MetricError> {
        if !(self.cap > 0.0 && self.cap <= 1.0) {
            return Err(MetricError::BadParams(format!(
                "cap must be in (0, 1], got {}",
                self.cap
            )));
        }
        if !(self.search_grid > 0.0 && self.search_grid < self.cap / 10.0) {
            return Err(MetricError::BadParams(format!(
                "search_grid must be positive and < cap/10, got {}",
                self.search_grid
            )));
        }
        Ok(())
    }
}

/// One-dimensional patch view: sorted positions plus the interval on which
/// the patch is known (`None` = complete motif).
struct Patch1 {
    xs: Vec<Scalar>,
    known: Option<(Scalar, Scalar)>,
}

impl Patch1 {
    fn of(ps: &PointSet, complete: bool) -> Patch1 {
        Patch1 {
            xs: ps.xs(),
            known: (!complete)
                .then(|| (ps.region().lo[0].clone(), ps.region().hi[0].clone())),
        }
    }
}

/// Window centers `c` in the open range `(cl, ch)` such that `(A - s)` and
/// `B` agree exactly on `[c - L, c + L]`, with both windows inside the known
/// parts of the patches. Returns the surviving open interval.
///
/// Requires `ch - cl ≤ 2L` (guaranteed by `cap ≤ 1`): the excluded zones of
/// individual mismatches then cannot split the range, so a single interval is
/// exact.
fn agreement_center_interval(
    a: &Patch1,
    s: &Scalar,
    b: &Patch1,
    l: &Scalar,
    cl: &Scalar,
    ch: &Scalar,
    tol: f64,
) -> Option<(Scalar, Scalar)> {
    let mut cl = cl.clone();
    let mut ch = ch.clone();
    if let Some((blo, bhi)) = &b.known {
        cl = cl.max(blo.add(l));
        ch = ch.min(bhi.sub(l));
    }
    if let Some((alo, ahi)) = &a.known {
        cl = cl.max(alo.sub(s).add(l));
        ch = ch.min(ahi.sub(s).sub(l));
    }
    if cl.cmp_total(&ch) != Ordering::Less {
        return None;
    }

    if tol == 0.0 {
        agreement_scan_exact(a, s, b, l, cl, ch)
    } else {
        agreement_scan_tol(a, s, b, l, cl, ch, tol)
    }
}

/// Exact-mode scan: walk outward from the center of the candidate range; the
/// first mismatch on each side decides everything.
fn agreement_scan_exact(
    a: &Patch1,
    s: &Scalar,
    b: &Patch1,
    l: &Scalar,
    mut cl: Scalar,
    mut ch: Scalar,
) -> Option<(Scalar, Scalar)> {
    let half = Scalar::from_rational(1, 2, scalar_mode(&cl));
    let c0 = cl.add(&ch).mul(&half);
    let c0s = c0.add(s);
    // Right scan: positions >= c0, ascending.
    {
        let mut ia = a.xs.partition_point(|x| x.cmp_total(&c0s) == Ordering::Less);
        let mut ib = b.xs.partition_point(|x| x.cmp_total(&c0) == Ordering::Less);
        let stop = ch.add(l);
        let kill_hi = cl.add(l);
        loop {
            let va = a.xs.get(ia).map(|x| x.sub(s));
            let vb = b.xs.get(ib);
            let x = match (va, vb) {
                (None, None) => break,
                (Some(va), None) => {
                    ia += 1;
                    va
                }
                (None, Some(vb)) => {
                    ib += 1;
                    vb.clone()
                }
                (Some(va), Some(vb)) => match va.cmp_total(vb) {
                    Ordering::Equal => {
                        if va.cmp_total(&stop) == Ordering::Greater {
                            break;
                        }
                        ia += 1;
                        ib += 1;
                        continue;
                    }
                    Ordering::Less => {
                        ia += 1;
                        va
                    }
                    Ordering::Greater => {
                        ib += 1;
                        vb.clone()
                    }
                },
            };
            // x is a mismatch position.
            if x.cmp_total(&stop) == Ordering::Greater {
                break;
            }
            if x.cmp_total(&kill_hi) != Ordering::Greater {
                return None; // middle zone: every center sees it
            }
            ch = ch.min(x.sub(l));
            break;
        }
    }
    // Left scan: positions < c0, descending.
    {
        let mut ia = a.xs.partition_point(|x| x.cmp_total(&c0s) == Ordering::Less);
        let mut ib = b.xs.partition_point(|x| x.cmp_total(&c0) == Ordering::Less);
        let stop = cl.sub(l);
        let kill_lo = ch.sub(l);
        loop {
            let va = (ia > 0).then(|| a.xs[ia - 1].sub(s));
            let vb = (ib > 0).then(|| b.xs[ib - 1].clone());
            let x = match (va, vb) {
                (None, None) => break,
                (Some(va), None) => {
                    ia -= 1;
                    va
                }
                (None, Some(vb)) => {
                    ib -= 1;
                    vb
                }
                (Some(va), Some(vb)) => match va.cmp_total(&vb) {
                    Ordering::Equal => {
                        if va.cmp_total(&stop) == Ordering::Less {
                            break;
                        }
                        ia -= 1;
                        ib -= 1;
                        continue;
                    }
                    Ordering::Greater => {
                        ia -= 1;
                        va
                    }
                    Ordering::Less => {
                        ib -= 1;
                        vb
                    }
                },
            };
            if x.cmp_total(&stop) == Ordering::Less {
                break;
            }
            if x.cmp_total(&kill_lo) != Ordering::Less {
                return None;
            }
            cl = cl.max(x.add(l));
            break;
        }
    }
    (cl.cmp_total(&ch) == Ordering::Less).then_some((cl, ch))
}

/// Tolerance-mode scan: one full ascending merge over the relevant window.
fn agreement_scan_tol(
    a: &Patch1,
    s: &Scalar,
    b: &Patch1,
    l: &Scalar,
    mut cl: Scalar,
    mut ch: Scalar,
    tol: f64,
) -> Option<(Scalar, Scalar)> {
    let start = cl.sub(l);
    let stop = ch.add(l);
    let mut ia = a.xs.partition_point(|x| x.sub(s).cmp_total(&start) == Ordering::Less);
    let mut ib = b.xs.partition_point(|x| x.cmp_total(&start) == Ordering::Less);
    let kill_lo = ch.sub(l);
    let kill_hi = cl.add(l);
    loop {
        let va = a.xs.get(ia).map(|x| x.sub(s));
        let vb = b.xs.get(ib);
        let x = match (&va, &vb) {
            (None, None) => break,
            (Some(va), Some(vb)) if va.eq_tol(vb, tol) => {
                ia += 1;
                ib += 1;
                if va.cmp_total(&stop) == Ordering::Greater {
                    break;
                }
                continue;
            }
            (Some(va), Some(vb)) => {
                if va.cmp_total(vb) == Ordering::Less {
                    ia += 1;
                    va.clone()
                } else {
                    ib += 1;
                    (*vb).clone()
                }
            }
            (Some(va), None) => {
                ia += 1;
                va.clone()
            }
            (None, Some(vb)) => {
                ib += 1;
                (*vb).clone()
            }
        };
        if x.cmp_total(&stop) == Ordering::Greater {
            break;
        }
        if x.cmp_total(&start) == Ordering::Less {
            continue;
        }
        let in_kill = x.cmp_total(&kill_lo) != Ordering::Less
            && x.cmp_total(&kill_hi) != Ordering::Greater;
        if in_kill {
            return None;
        }
        if x.cmp_total(&kill_lo) == Ordering::Less {
            cl = cl.max(x.add(l));
        } else {
            ch = ch.min(x.sub(l));
        }
        if cl.cmp_total(&ch) != Ordering::Less {
            return None;
        }
    }
    (cl.cmp_total(&ch) == Ordering::Less).then_some((cl, ch))
}

fn scalar_mode(s: &Scalar) -> Mode {
    match s {
        Scalar::Exact(q) => Mode::Exact { d: q.d },
        Scalar::Float(_) => Mode::Float { tolerance: 0.0 },
    }
}

/// Feasibility of the metric condition at level `e`: some relative shift
/// `s ∈ (A - B) ∪ {0}` with `|s| ≤ 2e` admits a window center.
fn feasible_at(a: &Patch1, b: &Patch1, e: &Scalar, mode: Mode, tol: f64) -> bool {
    let l = e.inverse().expect("e > 0");
    // Window positions live within [-(e+L), e+L].
    let reach = e.add(&l);
    let two_e = e.add(e);
    let mut cands: Vec<Scalar> = vec![Scalar::zero(mode)];
    let blo = reach.neg();
    let ib0 = b.xs.partition_point(|x| x.cmp_total(&blo) == Ordering::Less);
    for y in b.xs[ib0..].iter() {
        if y.cmp_total(&reach) == Ordering::Greater {
            break;
        }
        let xlo = y.sub(&two_e);
        let xhi = y.add(&two_e);
        let ia0 = a.xs.partition_point(|x| x.cmp_total(&xlo) == Ordering::Less);
        for x in a.xs[ia0..].iter() {
            if x.cmp_total(&xhi) == Ordering::Greater {
                break;
            }
            cands.push(x.sub(y));
        }
    }
    cands.sort_by(|p, q| p.cmp_total(q));
    cands.dedup_by(|p, q| p.cmp_total(q) == Ordering::Equal);
    for s in &cands {
        // |u'| ≤ e and |u' + s| ≤ e.
        let cl = e.neg().max(e.neg().sub(s));
        let ch = e.clone().min(e.sub(s));
        if cl.cmp_total(&ch) != Ordering::Less {
            continue;
        }
        if agreement_center_interval(a, s, b, &l, &cl, &ch, tol).is_some() {
            return true;
        }
    }
    false
}

/// The pattern distance `d(A, B)`, resolved by bisection to `search_grid`.
///
/// Returns `cap` when no agreement exists at the cap level. When the patches
/// are region-limited samples, values below `1/region-radius` cannot be
/// certified and the reported value saturates at the resolution floor.
pub fn pattern_distance(
    a: &PointSet,
    b: &PointSet,
    params: &MetricParams,
) -> Result<f64, MetricError> {
    params.validate()?;
    if a.d() != 1 || b.d() != 1 {
        return Err(MetricError::UnsupportedDimension);
    }
    let mode = a.mode();
    let tol = mode.tolerance();

    let pa = Patch1::of(a, params.assume_complete);
    let pb = Patch1::of(b, params.assume_complete);

    // Identical data: distance zero outright.
    let same_lists = pa.xs.len() == pb.xs.len()
        && pa
            .xs
            .iter()
            .zip(&pb.xs)
            .all(|(x, y)| x.eq_tol(y, tol));
    if same_lists && (params.assume_complete || a.region() == b.region()) {
        return Ok(0.0);
    }

    if !params.assume_complete {
        // Both patches must cover ball(1/cap) plus slack cap.
        let need = 1.0 / params.cap + params.cap;
        for ps in [a, b] {
            let lo = ps.region().lo[0].to_f64();
            let hi = ps.region().hi[0].to_f64();
            if lo > -need || hi < need {
                return Err(MetricError::InsufficientRegion);
            }
        }
    }

    let cap = Scalar::from_f64(params.cap, mode);
    if !feasible_at(&pa, &pb, &cap, mode, tol) {
        return Ok(params.cap);
    }
    let mut lo = 0.0f64;
    let mut hi = params.cap;
    while hi - lo > params.search_grid {
        let mid = 0.5 * (lo + hi);
        let e = Scalar::from_f64(mid, mode);
        if feasible_at(&pa, &pb, &e, mode, tol) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Compute `P_ε = { t : d(t.Λ, Λ) < ε }` as exact open components.
///
/// Every component arises from a lattice-difference seed `g` (plus, for
/// sparse synthetic inputs, from point-free windows); the seed of each
/// surviving component is reported as its time representative. For
/// model-set inputs the seeds are enumerated from the scheme; otherwise the
/// difference set of the patch is used.
pub fn p_epsilon(ps: &PointSet, eps: f64, params: &MetricParams) -> Result<ReturnSet, MetricError> {
    params.validate()?;
    if ps.d() != 1 {
        return Err(MetricError::UnsupportedDimension);
    }
    if !(eps > 0.0) {
        return Err(MetricError::BadParams(format!("eps must be positive, got {eps}")));
    }
    let mode = ps.mode();
    let tol = mode.tolerance();
    let rlo = ps.region().lo[0].clone();
    let rhi = ps.region().hi[0].clone();

    if eps > params.cap {
        // Distances are capped below eps: every translation qualifies.
        let validity = ps.region().clone();
        return Ok(ReturnSet {
            kind: ReturnKind::PEps { eps },
            times: vec![vec![Scalar::zero(mode)]],
            components: Some(vec![(validity.lo[0].clone(), validity.hi[0].clone())]),
            validity,
            vacuous: true,
            grid_fallback: false,
        });
    }

    let eps_s = Scalar::from_f64(eps, mode);
    let l = eps_s.inverse().expect("eps > 0");
    let reach = l.add(&eps_s);
    if rlo.cmp_total(&reach.neg()) == Ordering::Greater || rhi.cmp_total(&reach) == Ordering::Less {
        return Err(MetricError::InsufficientRegion);
    }
    let two_eps = eps_s.add(&eps_s);
    let shrink = l.add(&two_eps);
    let vlo = rlo.add(&shrink);
    let vhi = rhi.sub(&shrink);
    if vlo.cmp_total(&vhi) != Ordering::Less {
        return Err(MetricError::EmptyValidity);
    }

    let seed_lo = vlo.sub(&two_eps);
    let seed_hi = vhi.add(&two_eps);
    let seeds = component_seeds(ps, &seed_lo, &seed_hi, &reach)?;

    let patch = Patch1::of(ps, false);
    let mut pieces: Vec<(Iv, Scalar)> = Vec::new();
    for g in seeds {
        let cl = eps_s.neg();
        let ch = eps_s.clone();
        if let Some((u1, u2)) = agreement_center_interval(&patch, &g, &patch, &l, &cl, &ch, tol) {
            let lo = g.add(&u1).sub(&eps_s).max(vlo.clone());
            let hi = g.add(&u2).add(&eps_s).min(vhi.clone());
            if lo.cmp_total(&hi) == Ordering::Less {
                pieces.push(((lo, hi), g));
            }
        }
    }
    // Point-free windows: if some center u ∈ (-ε, ε) has a point-free window,
    // every point-free window elsewhere yields a component too.
    let voids = void_center_intervals(&patch, &l, &rlo, &rhi);
    let origin_void = voids
        .iter()
        .any(|(a, b)| a.cmp_total(&eps_s) == Ordering::Less && b.cmp_total(&eps_s.neg()) == Ordering::Greater);
    if origin_void {
        for (a, b) in &voids {
            let lo = a.sub(&eps_s).max(vlo.clone());
            let hi = b.add(&eps_s).min(vhi.clone());
            if lo.cmp_total(&hi) == Ordering::Less {
                let half = Scalar::from_rational(1, 2, mode);
                let rep = a.add(b).mul(&half);
                pieces.push(((lo, hi), rep));
            }
        }
    }

    let merged = interval::merge_open_with_reps(pieces);
    let mut components = Vec::with_capacity(merged.len());
    let mut times = Vec::with_capacity(merged.len());
    for (iv, rep) in merged {
        components.push(iv);
        times.push(vec![rep]);
    }
    Ok(ReturnSet {
        kind: ReturnKind::PEps { eps },
        times,
        components: Some(components),
        validity: AxisBox::new(vec![vlo], vec![vhi]),
        vacuous: false,
        grid_fallback: false,
    })
}

/// Candidate seeds `g` for `P_ε` components, sorted and deduplicated.
fn component_seeds(
    ps: &PointSet,
    seed_lo: &Scalar,
    seed_hi: &Scalar,
    reach: &Scalar,
) -> Result<Vec<Scalar>, MetricError> {
    let mode = ps.mode();
    let mut seeds: Vec<Scalar> = vec![Scalar::zero(mode)];
    if let Provenance::ModelSet { scheme, window } = ps.provenance() {
        if scheme.m() > 0 {
            // Lattice differences have internal coordinates in W - W.
            let bb = window.bounding_box();
            let diff_lo: Point = bb.lo.iter().zip(&bb.hi).map(|(lo, hi)| lo.sub(hi)).collect();
            let diff_hi: Point = bb.hi.iter().zip(&bb.lo).map(|(hi, lo)| hi.sub(lo)).collect();
            let internal = AxisBox::new(diff_lo, diff_hi);
            let physical = AxisBox::new(vec![seed_lo.clone()], vec![seed_hi.clone()]);
            let pts = scheme
                .lattice_points_in_box(&internal, &physical)
                .map_err(|_| MetricError::InsufficientRegion)?;
            seeds.extend(pts.into_iter().map(|p| p.physical[0].clone()));
        } else {
            // Z^d-style scheme: lattice differences are the lattice itself.
            let internal = AxisBox::new(vec![], vec![]);
            let physical = AxisBox::new(vec![seed_lo.clone()], vec![seed_hi.clone()]);
            let pts = scheme
                .lattice_points_in_box(&internal, &physical)
                .map_err(|_| MetricError::InsufficientRegion)?;
            seeds.extend(pts.into_iter().map(|p| p.physical[0].clone()));
        }
    } else {
        // Difference-set seeds: g = q - p over window-reachable p.
        let lo = reach.neg();
        let xs = ps.xs();
        let i0 = xs.partition_point(|x| x.cmp_total(&lo) == Ordering::Less);
        for p in xs[i0..].iter() {
            if p.cmp_total(reach) == Ordering::Greater {
                break;
            }
            for q in &xs {
                let g = q.sub(p);
                if g.cmp_total(seed_lo) != Ordering::Less && g.cmp_total(seed_hi) != Ordering::Greater
                {
                    seeds.push(g);
                }
            }
        }
    }
    seeds.retain(|g| g.cmp_total(seed_lo) != Ordering::Less && g.cmp_total(seed_hi) != Ordering::Greater);
    seeds.sort_by(|a, b| a.cmp_total(b));
    seeds.dedup_by(|a, b| a.cmp_total(b) == Ordering::Equal);
    Ok(seeds)
}

/// Maximal intervals of window centers whose window `[c-L, c+L]` contains no
/// patch point and stays inside the sampled region.
fn void_center_intervals(
    patch: &Patch1,
    l: &Scalar,
    rlo: &Scalar,
    rhi: &Scalar,
) -> Vec<Iv> {
    let clo = rlo.add(l);
    let chi = rhi.sub(l);
    if clo.cmp_total(&chi) != Ordering::Less {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut cur = clo.clone();
    for x in &patch.xs {
        let a = x.sub(l);
        let b = x.add(l);
        if a.cmp_total(&cur) == Ordering::Greater {
            out.push((cur.clone(), a.min(chi.clone())));
        }
        if b.cmp_total(&cur) == Ordering::Greater {
            cur = b;
        }
        if cur.cmp_total(&chi) != Ordering::Less {
            break;
        }
    }
    if cur.cmp_total(&chi) == Ordering::Less {
        out.push((cur, chi));
    }
    out
}

#[derive(Debug, Clone)]
pub struct AdditivityWitness {
    /// `t1, t2 ∈ P_δ` with `t1 - t2 ∉ P_ε`.
    pub t1: Scalar,
    pub t2: Scalar,
    pub diff: Scalar,
}

#[derive(Debug, Clone)]
pub struct DeltaStats {
    pub delta: f64,
    pub components: usize,
    pub pairs_tested: usize,
    pub violations: usize,
    pub denseness: Denseness,
    pub witnesses: Vec<AdditivityWitness>,
}

#[derive(Debug, Clone)]
pub struct AdditivityVerdict {
    pub pass: bool,
    pub eps: f64,
    /// First ladder δ that passed.
    pub delta: Option<f64>,
    pub per_delta: Vec<DeltaStats>,
    pub validity: AxisBox,
    pub p_eps: ReturnSet,
}

pub const MAX_WITNESSES: usize = 16;

/// Check `P_δ - P_δ ⊆ P_ε` along a descending δ ladder. Differences are
/// formed on the component representation (exact interval arithmetic) and
/// every reported witness is confirmed against the exact `P_ε` components.
pub fn check_additivity(
    ps: &PointSet,
    eps: f64,
    delta_ladder: &[f64],
    params: &MetricParams,
) -> Result<AdditivityVerdict, MetricError> {
    let p_eps = p_epsilon(ps, eps, params)?;
    let e_comps = p_eps.components.as_ref().expect("PEps has components");
    let mode = ps.mode();
    let half = Scalar::from_rational(1, 2, mode);
    let pair_lo = Scalar::from_f64(-params.pair_radius, mode);
    let pair_hi = Scalar::from_f64(params.pair_radius, mode);

    let mut per_delta = Vec::new();
    let mut pass_at = None;
    for &delta in delta_ladder {
        if delta >= eps {
            return Err(MetricError::BadParams(
                "delta ladder entries must be below eps".into(),
            ));
        }
        let p_delta = p_epsilon(ps, delta, params)?;
        let denseness = relative_denseness(&p_delta);
        let comps = p_delta.components.as_ref().expect("PEps has components");
        let sel: Vec<&Iv> = comps
            .iter()
            .filter(|(a, b)| {
                a.cmp_total(&pair_hi) != Ordering::Greater
                    && b.cmp_total(&pair_lo) != Ordering::Less
            })
            .collect();
        let mut violations = 0usize;
        let mut pairs_tested = 0usize;
        let mut witnesses: Vec<AdditivityWitness> = Vec::new();
        let vlo = &p_eps.validity.lo[0];
        let vhi = &p_eps.validity.hi[0];
        for ci in &sel {
            for cj in &sel {
                let lo = ci.0.sub(&cj.1).max(vlo.clone());
                let hi = ci.1.sub(&cj.0).min(vhi.clone());
                if lo.cmp_total(&hi) != Ordering::Less {
                    continue;
                }
                pairs_tested += 1;
                if let Some(u) = interval::uncovered_point(e_comps, &lo, &hi) {
                    violations += 1;
                    if witnesses.len() < MAX_WITNESSES {
                        // Solve t1 ∈ ci with t1 - u ∈ cj.
                        let xlo = ci.0.clone().max(u.add(&cj.0));
                        let xhi = ci.1.clone().min(u.add(&cj.1));
                        let t1 = xlo.add(&xhi).mul(&half);
                        let t2 = t1.sub(&u);
                        witnesses.push(AdditivityWitness { t1, t2, diff: u });
                    }
                }
            }
        }
        let dense_ok = matches!(denseness, Denseness::Radius(_));
        per_delta.push(DeltaStats {
            delta,
            components: comps.len(),
            pairs_tested,
            violations,
            denseness,
            witnesses,
        });
        if pass_at.is_none() && violations == 0 && dense_ok && pairs_tested > 0 {
            pass_at = Some(delta);
            break;
        }
    }
    Ok(AdditivityVerdict {
        pass: pass_at.is_some(),
        eps,
        delta: pass_at,
        per_delta,
        validity: p_eps.validity.clone(),
        p_eps,
    })
}

#[derive(Debug, Clone)]
pub struct SandwichSide {
    pub pass: bool,
    /// Parameters that made the inclusion hold.
    pub k_half: f64,
    pub u_half: f64,
    pub eps: f64,
    pub attempts: usize,
    /// A point witnessing the failure of the last attempted inclusion.
    pub witness: Option<Scalar>,
}

#[derive(Debug, Clone)]
pub struct SandwichVerdict {
    /// `P_ε ⊆ Λ_K + U` (suitable K, U for the given ε).
    pub p_in_lambda: SandwichSide,
    /// `Λ_K + U ⊆ P_ε` (suitable ε for the given K, U).
    pub lambda_in_p: SandwichSide,
    pub pass: bool,
}

/// Verify the sandwich `P_ε ⊆ Λ_K + U` and `Λ_K + U ⊆ P_ε` on shared
/// validity. Starts from the given parameters; when an inclusion fails the
/// free parameter is swept (K shrinks / U grows for the first inclusion, ε
/// grows for the second) and the succeeding choice is reported.
pub fn sandwich_check(
    ps: &PointSet,
    eps: f64,
    k_half: f64,
    u_half: f64,
    params: &MetricParams,
) -> Result<SandwichVerdict, MetricError> {
    let mode = ps.mode();
    let p_eps = p_epsilon(ps, eps, params)?;

    // Side 1: P_ε ⊆ Λ_K + U, sweeping (K down, U up).
    let mut side1 = SandwichSide {
        pass: false,
        k_half,
        u_half,
        eps,
        attempts: 0,
        witness: None,
    };
    'sweep1: for ku in 0..4 {
        for uu in 0..3 {
            let k = k_half / f64::powi(2.0, ku);
            let u = u_half * f64::powi(2.0, uu);
            side1.attempts += 1;
            let lam = lambda_k(ps, k, 0.0)?;
            let lam_u = lambda_plus_u(&lam, u, mode);
            let vlo = p_eps.validity.lo[0].clone().max(lam.validity.lo[0].clone());
            let vhi = p_eps.validity.hi[0].clone().min(lam.validity.hi[0].clone());
            let mut witness = None;
            for (a, b) in p_eps.components.as_ref().unwrap() {
                let lo = a.clone().max(vlo.clone());
                let hi = b.clone().min(vhi.clone());
                if lo.cmp_total(&hi) != Ordering::Less {
                    continue;
                }
                if let Some(w) = interval::uncovered_point(&lam_u, &lo, &hi) {
                    witness = Some(w);
                    break;
                }
            }
            match witness {
                None => {
                    side1.pass = true;
                    side1.k_half = k;
                    side1.u_half = u;
                    break 'sweep1;
                }
                Some(w) => side1.witness = Some(w),
            }
        }
    }

    // Side 2: Λ_K + U ⊆ P_ε, sweeping ε up to the cap.
    let mut side2 = SandwichSide {
        pass: false,
        k_half,
        u_half,
        eps,
        attempts: 0,
        witness: None,
    };
    let mut e = eps;
    while e <= params.cap + 1e-12 {
        side2.attempts += 1;
        let pe = p_epsilon(ps, e, params)?;
        let lam = lambda_k(ps, k_half, 0.0)?;
        let vlo = pe.validity.lo[0].clone().max(lam.validity.lo[0].clone());
        let vhi = pe.validity.hi[0].clone().min(lam.validity.hi[0].clone());
        let pe_comps = pe.components.as_ref().unwrap();
        let mut witness = None;
        if u_half == 0.0 {
            // Degenerate U = {0}: check Λ_K ⊆ closure(P_ε) pointwise.
            for t in &lam.times {
                let x = &t[0];
                if x.cmp_total(&vlo) == Ordering::Less || x.cmp_total(&vhi) == Ordering::Greater {
                    continue;
                }
                let in_closure = pe_comps.iter().any(|(a, b)| {
                    a.cmp_total(x) != Ordering::Greater && x.cmp_total(b) != Ordering::Greater
                });
                if !in_closure {
                    witness = Some(x.clone());
                    break;
                }
            }
        } else {
            let lam_u = lambda_plus_u(&lam, u_half, mode);
            for (a, b) in &lam_u {
                let lo = a.clone().max(vlo.clone());
                let hi = b.clone().min(vhi.clone());
                if lo.cmp_total(&hi) != Ordering::Less {
                    continue;
                }
                if let Some(w) = interval::uncovered_point(pe_comps, &lo, &hi) {
                    witness = Some(w);
                    break;
                }
            }
        }
        match witness {
            None => {
                side2.pass = true;
                side2.eps = e;
                break;
            }
            Some(w) => side2.witness = Some(w),
        }
        e *= 2.0;
    }

    Ok(SandwichVerdict {
        pass: side1.pass && side2.pass,
        p_in_lambda: side1,
        lambda_in_p: side2,
    })
}

/// `Λ_K ⊕ (-u, u)` as merged open intervals.
fn lambda_plus_u(lam: &ReturnSet, u_half: f64, mode: Mode) -> Vec<Iv> {
    let u = Scalar::from_f64(u_half, mode);
    let ivs = lam
        .times
        .iter()
        .map(|t| (t[0].sub(&u), t[0].add(&u)))
        .collect();
    interval::merge_open(ivs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::AxisBox;
    use crate::modelset::{generate, PointSet, Provenance};
    use crate::scalar::parse_scalar;
    use crate::scheme::{fibonacci_scheme, integer_lattice_scheme, ProbeConfig};
    use crate::window::{FlaggedBox, Window};

    const EXACT5: Mode = Mode::Exact { d: 5 };

    fn s(v: &str) -> Scalar {
        parse_scalar(v, EXACT5).unwrap()
    }

    fn z_patch(r: i64) -> PointSet {
        let sch = integer_lattice_scheme(1, EXACT5).unwrap();
        let win = Window::new(vec![FlaggedBox::closed(vec![], vec![])]).unwrap();
        let reg = AxisBox::new(
            vec![Scalar::from_int(-r, EXACT5)],
            vec![Scalar::from_int(r, EXACT5)],
        );
        generate(&sch, &win, &reg).unwrap()
    }

    fn z_shifted(r: i64, shift: f64) -> PointSet {
        let base = z_patch(r + 2);
        let sh = vec![Scalar::from_f64(-shift, EXACT5)];
        let moved = base.translate(&sh);
        let reg = AxisBox::new(
            vec![Scalar::from_int(-r, EXACT5)],
            vec![Scalar::from_int(r, EXACT5)],
        );
        let pts: Vec<Point> = moved
            .points()
            .iter()
            .filter(|p| reg.contains(p))
            .cloned()
            .collect();
        PointSet::new(pts, reg, EXACT5, Provenance::Synthetic { label: "z+s".into() }).unwrap()
    }

    fn fib_patch(window: (&str, &str), r: &str) -> PointSet {
        let sch = fibonacci_scheme(&ProbeConfig::default()).unwrap();
        let win = Window::interval(s(window.0), s(window.1)).unwrap();
        let reg = AxisBox::new(vec![s(r).neg()], vec![s(r)]);
        generate(&sch, &win, &reg).unwrap()
    }

    #[test]
    fn distance_to_self_is_zero() {
        let ps = fib_patch(("-6/7", "-5/14+1/2√5"), "50");
        let d = pattern_distance(&ps, &ps, &MetricParams::default()).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn shifted_lattice_distance_is_half_shift() {
        let params = MetricParams::default();
        for shift in [0.1f64, 0.2, 0.3] {
            let a = z_patch(30);
            let b = z_shifted(30, shift);
            let d = pattern_distance(&a, &b, &params).unwrap();
            assert!(
                (d - shift / 2.0).abs() <= params.search_grid,
                "shift {shift}: d = {d}"
            );
            // Symmetry.
            let d2 = pattern_distance(&b, &a, &params).unwrap();
            assert!((d - d2).abs() <= params.search_grid);
        }
    }

    /// Brute-force grid oracle for the metric feasibility at one level.
    fn grid_feasible(a: &PointSet, b: &PointSet, e: f64, pitch: f64) -> bool {
        let l = 1.0 / e;
        let axs: Vec<f64> = a.xs().iter().map(Scalar::to_f64).collect();
        let bxs: Vec<f64> = b.xs().iter().map(Scalar::to_f64).collect();
        let patch = |xs: &[f64], shift: f64| -> Vec<i64> {
            xs.iter()
                .map(|x| x - shift)
                .filter(|x| x.abs() <= l)
                .map(|x| (x * 1e9).round() as i64)
                .collect()
        };
        let steps = (2.0 * e / pitch).ceil() as i64;
        for i in -steps..=steps {
            let u = i as f64 * pitch;
            if u.abs() > e {
                continue;
            }
            for j in -steps..=steps {
                let up = j as f64 * pitch;
                if up.abs() > e {
                    continue;
                }
                if patch(&axs, u) == patch(&bxs, up) {
                    return true;
                }
            }
        }
        false
    }

    #[test]
    fn bisection_agrees_with_grid_oracle() {
        let a = z_patch(30);
        let b = z_shifted(30, 0.3);
        // d = 0.15: feasible above, infeasible below.
        assert!(grid_feasible(&a, &b, 0.16, 0.005));
        assert!(!grid_feasible(&a, &b, 0.12, 0.005));
    }

    #[test]
    fn defect_at_origin_forces_cap() {
        // B = (Z \ {0}) ∪ {0.4}: every window around the origin sees the
        // defect, so no agreement exists at any level below the cap.
        let reg = AxisBox::new(vec![s("-30")], vec![s("30")]);
        let mut pts: Vec<Point> = (-30..=30)
            .filter(|&k| k != 0)
            .map(|k| vec![Scalar::from_int(k, EXACT5)])
            .collect();
        pts.push(vec![s("2/5")]);
        let b = PointSet::new(pts, reg, EXACT5, Provenance::Synthetic { label: "defect".into() })
            .unwrap();
        let a = z_patch(30);
        let params = MetricParams::default();
        let d = pattern_distance(&a, &b, &params).unwrap();
        assert_eq!(d, params.cap);
    }

    #[test]
    fn p_epsilon_of_z_is_closed_form() {
        let ps = z_patch(40);
        let params = MetricParams::default();
        let eps = 0.1;
        let rs = p_epsilon(&ps, eps, &params).unwrap();
        let comps = rs.components.as_ref().unwrap();
        // Components (n - 2ε, n + 2ε) for every integer n in validity.
        let vlo = rs.validity.lo[0].to_f64();
        let vhi = rs.validity.hi[0].to_f64();
        let expect: Vec<(f64, f64)> = (-40..=40)
            .map(|n| (n as f64 - 0.2, n as f64 + 0.2))
            .filter(|(a, b)| *a >= vlo - 1e-12 && *b <= vhi + 1e-12)
            .collect();
        assert_eq!(comps.len(), expect.len());
        for ((a, b), (ea, eb)) in comps.iter().zip(&expect) {
            assert!((a.to_f64() - ea).abs() < 1e-9, "{} vs {ea}", a.to_f64());
            assert!((b.to_f64() - eb).abs() < 1e-9, "{} vs {eb}", b.to_f64());
        }
        // 0 is a return time.
        assert!(rs.contains_time(&[s("1/10").mul(&s("0"))], 0.0));
    }

    #[test]
    fn p_epsilon_monotone_in_eps() {
        let ps = fib_patch(("-6/7", "-5/14+1/2√5"), "120");
        let params = MetricParams::default();
        let small = p_epsilon(&ps, 0.05, &params).unwrap();
        let large = p_epsilon(&ps, 0.1, &params).unwrap();
        let lc = large.components.as_ref().unwrap();
        for (a, b) in small.components.as_ref().unwrap() {
            // Each small component is inside a large component (on the
            // common, smaller validity of the larger L).
            let lo = a.clone().max(large.validity.lo[0].clone());
            let hi = b.clone().min(large.validity.hi[0].clone());
            if lo.cmp_total(&hi) != Ordering::Less {
                continue;
            }
            assert!(
                interval::covers_interval(lc, &lo, &hi),
                "component ({}, {}) escapes",
                a.to_f64(),
                b.to_f64()
            );
        }
    }

    #[test]
    fn additivity_z_passes_at_half_eps() {
        let ps = z_patch(60);
        let params = MetricParams::default();
        let v = check_additivity(&ps, 0.1, &[0.05, 0.025], &params).unwrap();
        assert!(v.pass);
        assert_eq!(v.delta, Some(0.05));
    }

    #[test]
    fn additivity_differential_fibonacci() {
        let params = MetricParams::default();
        // Non-singular passes at some δ.
        let ns = fib_patch(("-6/7", "-5/14+1/2√5"), "220");
        let v = check_additivity(&ns, 0.1, &[0.05, 0.025], &params).unwrap();
        assert!(
            v.pass,
            "stats: {:?}",
            v.per_delta
                .iter()
                .map(|d| (d.delta, d.components, d.violations))
                .collect::<Vec<_>>()
        );
        // One-sided singular fails with confirmed witnesses.
        let sg = fib_patch(("0", "9/14+1/2√5"), "220");
        let v = check_additivity(&sg, 0.1, &[0.05, 0.025], &params).unwrap();
        assert!(!v.pass);
        for dstat in &v.per_delta {
            assert!(dstat.violations > 0, "δ={} clean", dstat.delta);
            assert!(!dstat.witnesses.is_empty());
        }
        // Witness confirmation: diff really escapes P_ε.
        let e_comps = v.p_eps.components.as_ref().unwrap();
        for w in &v.per_delta[0].witnesses {
            assert!(!interval::contains_point(e_comps, &w.diff));
        }
    }

    #[test]
    fn sandwich_z_exact() {
        let ps = z_patch(40);
        let params = MetricParams::default();
        let v = sandwich_check(&ps, 0.1, 1.5, 0.2, &params).unwrap();
        assert!(v.pass, "side1: {:?}, side2: {:?}", v.p_in_lambda, v.lambda_in_p);
        // Both hold with the given parameters, no sweeping needed.
        assert_eq!(v.p_in_lambda.attempts, 1);
        assert_eq!(v.lambda_in_p.attempts, 1);
        assert_eq!(v.p_in_lambda.k_half, 1.5);
        assert_eq!(v.lambda_in_p.eps, 0.1);
    }

    #[test]
    fn sandwich_degenerate_u() {
        let ps = z_patch(40);
        let params = MetricParams::default();
        let v = sandwich_check(&ps, 0.1, 1.5, 0.0, &params).unwrap();
        assert!(v.lambda_in_p.pass);
    }

    #[test]
    fn insufficient_region_detected() {
        let ps = z_patch(1);
        let err = pattern_distance(&ps, &ps.clone().translate(&[s("1")]), &MetricParams::default());
        assert!(matches!(err, Err(MetricError::InsufficientRegion)));
    }

    #[test]
    fn void_components_for_sparse_set() {
        // A single point at 60 with a huge empty region: windows near the
        // origin are point-free, so P_ε contains a band around every
        // point-free center.
        let reg = AxisBox::new(vec![s("-200")], vec![s("200")]);
        let ps = PointSet::new(
            vec![vec![s("60")]],
            reg,
            EXACT5,
            Provenance::Synthetic { label: "lonely".into() },
        )
        .unwrap();
        let rs = p_epsilon(&ps, 0.5, &MetricParams::default()).unwrap();
        let comps = rs.components.as_ref().unwrap();
        assert!(!comps.is_empty());
        // Far translations (point leaves every window) are ε-close.
        assert!(rs.contains_time(&[s("-100")], 0.0));
        // Translating by ~60 moves the point into the origin window: not close.
        assert!(!rs.contains_time(&[s("60")], 0.0));
    }
}
