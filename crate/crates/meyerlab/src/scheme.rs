//! Cut-and-project schemes: a lattice in `H × G` with `H = R^m` internal and
//! `G = R^d` physical, the two projections, lattice enumeration and the star
//! map.
//!
//! Ambient coordinates are ordered internal-first: a lattice point is
//! `coeffs · basis = (internal, physical)`. Construction runs two finite
//! probes, a density probe on the internal projection and an injectivity
//! probe on the physical projection; both are certificates for the probe
//! boxes only, never proofs for the whole lattice.

use crate::geom::{lex_cmp, AxisBox, Point};
use crate::scalar::{Mode, Scalar};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use std::cmp::Ordering;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("basis is singular (zero determinant)")]
    SingularBasis,
    #[error("physical projection not injective on probe box: coefficients {0:?} and {1:?} share a physical point")]
    InjectivityFailure(Vec<i64>, Vec<i64>),
    #[error("internal projection not {eta}-dense in probe box (worst gap ≈ {worst_gap:.4})")]
    DensityFailure { eta: f64, worst_gap: f64 },
    #[error("enumeration bound exceeded (cap {0} nodes)")]
    BoxTooLarge(u64),
    #[error("point is not the physical projection of a lattice point")]
    NotALatticeProjection,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("basis must be square of size d+m={expected}, got {got} rows")]
    NonSquareBasis { expected: usize, got: usize },
    #[error("invalid mode: {0}")]
    InvalidMode(String),
}

/// Finite probe parameters used while validating a scheme.
#[derive(Debug, Clone)]
pub struct ProbeConfig {
    /// Half-width of the physical probe box, both probes.
    pub physical_radius: f64,
    /// Half-width of the internal box for the injectivity probe.
    pub internal_radius: f64,
    /// Half-width of the box in which the internal projection must be dense.
    pub density_radius: f64,
    /// Required density: every point of the density box within `eta` of a
    /// projected lattice point.
    pub density_eta: f64,
    /// Node budget for a single enumeration call.
    pub enumeration_cap: u64,
    /// Internal search radius for the star-map enumeration fallback.
    pub star_search_radius: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            physical_radius: 20.0,
            internal_radius: 2.0,
            density_radius: 1.0,
            density_eta: 0.05,
            enumeration_cap: 50_000_000,
            star_search_radius: 50.0,
        }
    }
}

/// Outcome of the construction probes, kept with the scheme.
#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub probed_points: usize,
    pub density_worst_gap: f64,
    pub config: ProbeConfig,
}

/// A lattice point together with its integer coordinates and both
/// projections.
#[derive(Debug, Clone)]
pub struct LatticePoint {
    pub coeffs: Vec<i64>,
    pub internal: Point,
    pub physical: Point,
}

/// A validated cut-and-project scheme.
#[derive(Debug, Clone)]
pub struct Scheme {
    d: usize,
    m: usize,
    mode: Mode,
    /// Rows generate the lattice; row layout is internal coords then physical.
    basis: Vec<Vec<Scalar>>,
    basis_inv: Vec<Vec<Scalar>>,
    probe: ProbeReport,
}

impl Scheme {
    /// Validate and build a scheme. Probe failures are reported in the order
    /// singular basis, density, injectivity.
    pub fn build(
        d: usize,
        m: usize,
        mode: Mode,
        basis: Vec<Vec<Scalar>>,
        probe_cfg: &ProbeConfig,
    ) -> Result<Scheme, SchemeError> {
        if d == 0 {
            return Err(SchemeError::InvalidMode("physical dimension d must be positive".into()));
        }
        let n = d + m;
        if basis.len() != n || basis.iter().any(|r| r.len() != n) {
            return Err(SchemeError::NonSquareBasis {
                expected: n,
                got: basis.len(),
            });
        }
        if let Mode::Exact { d: disc } = mode {
            if ![2, 3, 5].contains(&disc) {
                return Err(SchemeError::InvalidMode(format!(
                    "exact mode supports D in {{2,3,5}}, got {disc}"
                )));
            }
        }
        for row in &basis {
            for e in row {
                let ok = match (mode, e) {
                    (Mode::Exact { d: disc }, Scalar::Exact(q)) => q.d == disc,
                    (Mode::Float { .. }, Scalar::Float(v)) => v.is_finite(),
                    _ => false,
                };
                if !ok {
                    return Err(SchemeError::InvalidMode(
                        "basis entry does not match the scheme mode".into(),
                    ));
                }
            }
        }

        let basis_inv = invert(&basis, mode).ok_or(SchemeError::SingularBasis)?;

        let mut scheme = Scheme {
            d,
            m,
            mode,
            basis,
            basis_inv,
            probe: ProbeReport {
                probed_points: 0,
                density_worst_gap: 0.0,
                config: probe_cfg.clone(),
            },
        };
        scheme.run_probes(probe_cfg)?;
        Ok(scheme)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn basis(&self) -> &[Vec<Scalar>] {
        &self.basis
    }

    pub fn probe_report(&self) -> &ProbeReport {
        &self.probe
    }

    fn run_probes(&mut self, cfg: &ProbeConfig) -> Result<(), SchemeError> {
        let phys = AxisBox::centered(cfg.physical_radius, self.d, self.mode);

        // Density first: the identity lattice fails density before its
        // physical projection gets a chance to collide.
        if self.m > 0 {
            let dens_box = AxisBox::centered(cfg.density_radius, self.m, self.mode);
            let pts = self.lattice_points_in_box(&dens_box, &phys)?;
            let worst = density_worst_gap(&dens_box, &pts, self.m);
            self.probe.density_worst_gap = worst;
            if worst > 2.0 * cfg.density_eta {
                return Err(SchemeError::DensityFailure {
                    eta: cfg.density_eta,
                    worst_gap: worst,
                });
            }
        }

        let internal = AxisBox::centered(cfg.internal_radius.max(cfg.density_radius), self.m, self.mode);
        let pts = self.lattice_points_in_box(&internal, &phys)?;
        self.probe.probed_points = pts.len();
        let tol = self.mode.tolerance();
        for w in pts.windows(2) {
            let same_phys = if tol == 0.0 {
                lex_cmp(&w[0].physical, &w[1].physical) == Ordering::Equal
            } else {
                crate::geom::point_eq_tol(&w[0].physical, &w[1].physical, tol)
            };
            if same_phys {
                return Err(SchemeError::InjectivityFailure(
                    w[0].coeffs.clone(),
                    w[1].coeffs.clone(),
                ));
            }
        }
        Ok(())
    }

    /// All lattice points with internal projection in `internal_box` and
    /// physical projection in `physical_box`, sorted lexicographically by
    /// physical coordinate. Exhaustive in exact mode; in float mode the boxes
    /// are inflated by the tolerance before solving.
    pub fn lattice_points_in_box(
        &self,
        internal_box: &AxisBox,
        physical_box: &AxisBox,
    ) -> Result<Vec<LatticePoint>, SchemeError> {
        if internal_box.dim() != self.m {
            return Err(SchemeError::DimensionMismatch {
                expected: self.m,
                got: internal_box.dim(),
            });
        }
        if physical_box.dim() != self.d {
            return Err(SchemeError::DimensionMismatch {
                expected: self.d,
                got: physical_box.dim(),
            });
        }
        let n = self.d + self.m;
        let mut lo: Point = internal_box.lo.clone();
        lo.extend(physical_box.lo.iter().cloned());
        let mut hi: Point = internal_box.hi.clone();
        hi.extend(physical_box.hi.iter().cloned());
        let mut target = AxisBox::new(lo, hi);
        if let Mode::Float { tolerance } = self.mode {
            let t = Scalar::Float(tolerance);
            target = AxisBox {
                lo: target.lo.iter().map(|v| v.sub(&t)).collect(),
                hi: target.hi.iter().map(|v| v.add(&t)).collect(),
            };
        }
        if target.is_empty() {
            return Ok(Vec::new());
        }

        // Integer bounding ranges for the coefficients: the preimage of the
        // target box under the basis is a parallelotope whose coordinate
        // extremes are attained at box corners.
        let mut klo = vec![i64::MAX; n];
        let mut khi = vec![i64::MIN; n];
        for corner in 0..(1usize << n) {
            let pt: Point = (0..n)
                .map(|i| {
                    if corner >> i & 1 == 1 {
                        target.hi[i].clone()
                    } else {
                        target.lo[i].clone()
                    }
                })
                .collect();
            let coeffs = mat_vec(&self.basis_inv, &pt);
            for (i, c) in coeffs.iter().enumerate() {
                let f = c.floor_int();
                klo[i] = klo[i].min(f);
                khi[i] = khi[i].max(f + 1);
            }
        }

        // Per-level contribution intervals and suffix sums, for pruning.
        let zero = Scalar::zero(self.mode);
        let mut contrib_lo = vec![vec![zero.clone(); n]; n];
        let mut contrib_hi = vec![vec![zero.clone(); n]; n];
        for i in 0..n {
            let a = Scalar::from_int(klo[i], self.mode);
            let b = Scalar::from_int(khi[i], self.mode);
            for c in 0..n {
                let x = a.mul(&self.basis[i][c]);
                let y = b.mul(&self.basis[i][c]);
                let (l, h) = if x.cmp_total(&y) == Ordering::Greater {
                    (y, x)
                } else {
                    (x, y)
                };
                contrib_lo[i][c] = l;
                contrib_hi[i][c] = h;
            }
        }
        // suffix[i] bounds the total contribution of levels i..n.
        let mut suffix_lo = vec![vec![zero.clone(); n]; n + 1];
        let mut suffix_hi = vec![vec![zero.clone(); n]; n + 1];
        for i in (0..n).rev() {
            for c in 0..n {
                suffix_lo[i][c] = suffix_lo[i + 1][c].add(&contrib_lo[i][c]);
                suffix_hi[i][c] = suffix_hi[i + 1][c].add(&contrib_hi[i][c]);
            }
        }

        let mut out = Vec::new();
        let mut budget = self.probe.config.enumeration_cap;
        let mut coeffs = vec![0i64; n];
        let partial = vec![zero; n];
        self.enumerate_level(
            0,
            &partial,
            &mut coeffs,
            &target,
            &klo,
            &khi,
            &suffix_lo,
            &suffix_hi,
            &mut out,
            &mut budget,
        )?;

        out.sort_by(|a, b| {
            lex_cmp(&a.physical, &b.physical)
                .then_with(|| lex_cmp(&a.internal, &b.internal))
                .then_with(|| a.coeffs.cmp(&b.coeffs))
        });
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn enumerate_level(
        &self,
        level: usize,
        partial: &[Scalar],
        coeffs: &mut [i64],
        target: &AxisBox,
        klo: &[i64],
        khi: &[i64],
        suffix_lo: &[Vec<Scalar>],
        suffix_hi: &[Vec<Scalar>],
        out: &mut Vec<LatticePoint>,
        budget: &mut u64,
    ) -> Result<(), SchemeError> {
        let n = self.d + self.m;
        if level == n {
            let p: Point = partial.to_vec();
            if target.contains(&p) {
                out.push(LatticePoint {
                    coeffs: coeffs.to_vec(),
                    internal: p[..self.m].to_vec(),
                    physical: p[self.m..].to_vec(),
                });
            }
            return Ok(());
        }

        // Tighten the admissible k range at this level using the suffix
        // bounds for the remaining levels.
        let mut k_min = klo[level];
        let mut k_max = khi[level];
        for c in 0..n {
            let e = &self.basis[level][c];
            if e.is_zero() {
                continue;
            }
            // k*e must land in [lo - partial - suffix_hi, hi - partial - suffix_lo]
            let room_lo = target.lo[c].sub(&partial[c]).sub(&suffix_hi[level + 1][c]);
            let room_hi = target.hi[c].sub(&partial[c]).sub(&suffix_lo[level + 1][c]);
            let inv = e.inverse().expect("nonzero entry");
            let (mut a, mut b) = (room_lo.mul(&inv), room_hi.mul(&inv));
            if e.sign() == Ordering::Less {
                std::mem::swap(&mut a, &mut b);
            }
            // ceil(a) and floor(b), exactly.
            let fa = a.floor_int();
            let ca = if Scalar::from_int(fa, self.mode).cmp_total(&a) == Ordering::Less {
                fa + 1
            } else {
                fa
            };
            let fb = b.floor_int();
            k_min = k_min.max(ca);
            k_max = k_max.min(fb);
        }

        for k in k_min..=k_max {
            if *budget == 0 {
                return Err(SchemeError::BoxTooLarge(self.probe.config.enumeration_cap));
            }
            *budget -= 1;
            let ks = Scalar::from_int(k, self.mode);
            let next: Point = (0..n)
                .map(|c| partial[c].add(&ks.mul(&self.basis[level][c])))
                .collect();
            coeffs[level] = k;
            self.enumerate_level(
                level + 1,
                &next,
                coeffs,
                target,
                klo,
                khi,
                suffix_lo,
                suffix_hi,
                out,
                budget,
            )?;
        }
        Ok(())
    }

    /// Recover the internal coordinate `t*` of the unique lattice point with
    /// physical projection `t`.
    pub fn star_map(&self, t: &[Scalar]) -> Result<Point, SchemeError> {
        if t.len() != self.d {
            return Err(SchemeError::DimensionMismatch {
                expected: self.d,
                got: t.len(),
            });
        }
        if self.mode.is_exact() {
            if let Some(coeffs) = self.solve_exact_coeffs(t)? {
                let pt = self.point_from_coeffs(&coeffs);
                // Confirm the physical block reproduces t exactly.
                if (0..self.d).all(|c| pt.physical[c].cmp_total(&t[c]) == Ordering::Equal) {
                    return Ok(pt.internal);
                }
                return Err(SchemeError::NotALatticeProjection);
            }
        }
        self.star_by_enumeration(t)
    }

    /// Integer coefficients of the lattice point over `t`, solved through the
    /// rational/surd decomposition of the physical equations. `Ok(None)`
    /// means the linear system does not pin the coefficients down (then the
    /// enumeration fallback applies).
    fn solve_exact_coeffs(&self, t: &[Scalar]) -> Result<Option<Vec<i64>>, SchemeError> {
        let n = self.d + self.m;
        // Rows: rational part then surd part of each physical coordinate.
        let mut rows: Vec<(Vec<BigRational>, BigRational)> = Vec::with_capacity(2 * self.d);
        for c in 0..self.d {
            let Scalar::Exact(tc) = &t[c] else { unreachable!() };
            let mut ra = Vec::with_capacity(n);
            let mut rb = Vec::with_capacity(n);
            for j in 0..n {
                let Scalar::Exact(e) = &self.basis[j][self.m + c] else {
                    unreachable!()
                };
                ra.push(e.a.clone());
                rb.push(e.b.clone());
            }
            rows.push((ra, tc.a.clone()));
            rows.push((rb, tc.b.clone()));
        }

        // Gaussian elimination over Q.
        let mut pivots: Vec<usize> = Vec::new();
        let mut row = 0usize;
        for col in 0..n {
            let Some(pr) = (row..rows.len()).find(|&r| !rows[r].0[col].is_zero()) else {
                continue;
            };
            rows.swap(row, pr);
            let inv = rows[row].0[col].recip();
            for v in rows[row].0.iter_mut() {
                *v = &*v * &inv;
            }
            rows[row].1 = &rows[row].1 * &inv;
            for r in 0..rows.len() {
                if r != row && !rows[r].0[col].is_zero() {
                    let f = rows[r].0[col].clone();
                    for cc in 0..n {
                        let sub = &rows[row].0[cc] * &f;
                        rows[r].0[cc] = &rows[r].0[cc] - sub;
                    }
                    let sub = &rows[row].1 * &f;
                    rows[r].1 = &rows[r].1 - sub;
                }
            }
            pivots.push(col);
            row += 1;
            if row == rows.len() {
                break;
            }
        }
        // Inconsistent system: a zero row with nonzero rhs.
        for r in row..rows.len() {
            if rows[r].0.iter().all(Zero::is_zero) && !rows[r].1.is_zero() {
                return Err(SchemeError::NotALatticeProjection);
            }
        }
        if pivots.len() < n {
            return Ok(None);
        }
        let mut sol = vec![BigRational::zero(); n];
        for (r, &col) in pivots.iter().enumerate() {
            sol[col] = rows[r].1.clone();
        }
        let mut coeffs = Vec::with_capacity(n);
        for v in sol {
            if !v.denom().is_one() {
                return Err(SchemeError::NotALatticeProjection);
            }
            let k = v.to_integer().to_i64().ok_or(SchemeError::NotALatticeProjection)?;
            coeffs.push(k);
        }
        Ok(Some(coeffs))
    }

    fn star_by_enumeration(&self, t: &[Scalar]) -> Result<Point, SchemeError> {
        let r = self.probe.config.star_search_radius;
        let tol = self.mode.tolerance().max(f64::EPSILON);
        let internal = AxisBox::centered(r, self.m, self.mode);
        let eps = Scalar::from_f64(8.0 * tol, self.mode);
        let phys = AxisBox::new(
            t.iter().map(|v| v.sub(&eps)).collect(),
            t.iter().map(|v| v.add(&eps)).collect(),
        );
        let pts = self.lattice_points_in_box(&internal, &phys)?;
        pts.into_iter()
            .next()
            .map(|p| p.internal)
            .ok_or(SchemeError::NotALatticeProjection)
    }

    pub fn point_from_coeffs(&self, coeffs: &[i64]) -> LatticePoint {
        let n = self.d + self.m;
        debug_assert_eq!(coeffs.len(), n);
        let mut acc = vec![Scalar::zero(self.mode); n];
        for (i, &k) in coeffs.iter().enumerate() {
            let ks = Scalar::from_int(k, self.mode);
            for c in 0..n {
                acc[c] = acc[c].add(&ks.mul(&self.basis[i][c]));
            }
        }
        LatticePoint {
            coeffs: coeffs.to_vec(),
            internal: acc[..self.m].to_vec(),
            physical: acc[self.m..].to_vec(),
        }
    }

    /// Ambient coordinates `(internal, physical)` expressed in the lattice
    /// basis, i.e. `v · basis⁻¹`.
    pub fn ambient_to_lattice_coords(&self, v: &[Scalar]) -> Point {
        mat_vec(&self.basis_inv, v)
    }

    /// Lattice coordinates back to ambient `(internal, physical)`.
    pub fn lattice_coords_to_ambient(&self, k: &[Scalar]) -> Point {
        let n = self.d + self.m;
        let mut acc = vec![Scalar::zero(self.mode); n];
        for (i, ki) in k.iter().enumerate() {
            for c in 0..n {
                acc[c] = acc[c].add(&ki.mul(&self.basis[i][c]));
            }
        }
        acc
    }
}

/// `v · m` for a row vector and row-major matrix.
fn mat_vec(m: &[Vec<Scalar>], v: &[Scalar]) -> Point {
    let n = v.len();
    debug_assert_eq!(m.len(), n);
    (0..n)
        .map(|c| {
            let mut acc: Option<Scalar> = None;
            for (i, vi) in v.iter().enumerate() {
                let term = vi.mul(&m[i][c]);
                acc = Some(match acc {
                    None => term,
                    Some(a) => a.add(&term),
                });
            }
            acc.expect("empty matrix")
        })
        .collect()
}

/// Matrix inverse by Gauss-Jordan; `None` when singular (pivot zero exactly,
/// or below tolerance in float mode).
fn invert(m: &[Vec<Scalar>], mode: Mode) -> Option<Vec<Vec<Scalar>>> {
    let n = m.len();
    let mut a: Vec<Vec<Scalar>> = m.to_vec();
    let mut inv: Vec<Vec<Scalar>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| Scalar::from_int((i == j) as i64, mode))
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot_row = (col..n).find(|&r| {
            if mode.is_exact() {
                !a[r][col].is_zero()
            } else {
                a[r][col].to_f64().abs() > mode.tolerance()
            }
        })?;
        a.swap(col, pivot_row);
        inv.swap(col, pivot_row);
        let p = a[col][col].inverse()?;
        for j in 0..n {
            a[col][j] = a[col][j].mul(&p);
            inv[col][j] = inv[col][j].mul(&p);
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in 0..n {
                    let s = a[col][j].mul(&f);
                    a[r][j] = a[r][j].sub(&s);
                    let s = inv[col][j].mul(&f);
                    inv[r][j] = inv[r][j].sub(&s);
                }
            }
        }
    }
    Some(inv)
}

/// Worst covering gap of the internal projections over the density box.
/// Zero-dimensional internal space is trivially dense.
fn density_worst_gap(dens_box: &AxisBox, pts: &[LatticePoint], m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let coords: Vec<Vec<f64>> = pts
        .iter()
        .filter(|p| dens_box.contains(&p.internal))
        .map(|p| crate::geom::point_to_f64(&p.internal))
        .collect();
    if coords.is_empty() {
        return f64::INFINITY;
    }
    if m == 1 {
        let mut xs: Vec<f64> = coords.iter().map(|c| c[0]).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let lo = dens_box.lo[0].to_f64();
        let hi = dens_box.hi[0].to_f64();
        let mut worst: f64 = 2.0 * (xs[0] - lo).max(0.0);
        worst = worst.max(2.0 * (hi - xs[xs.len() - 1]).max(0.0));
        for w in xs.windows(2) {
            worst = worst.max(w[1] - w[0]);
        }
        worst
    } else {
        // Grid probe with pitch equal to half the box width / 20.
        let pairs = dens_box.to_f64_pairs();
        let steps = 21usize;
        let mut grid = vec![vec![0.0f64; m]];
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
            for c in &coords {
                let dist = g
                    .iter()
                    .zip(c)
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0f64, f64::max);
                best = best.min(dist);
            }
            worst = worst.max(2.0 * best);
        }
        worst
    }
}

/// Convenience constructor for the canonical Fibonacci scheme: `d = m = 1`,
/// `D = 5`, basis rows `(1, 1)` and `(τ', τ)`.
pub fn fibonacci_scheme(probe: &ProbeConfig) -> Result<Scheme, SchemeError> {
    let mode = Mode::Exact { d: 5 };
    let one = Scalar::from_int(1, mode);
    let tau = Scalar::from_parts((1, 2), (1, 2), mode);
    let tau_conj = Scalar::from_parts((1, 2), (-1, 2), mode);
    Scheme::build(
        1,
        1,
        mode,
        vec![vec![one.clone(), one], vec![tau_conj, tau]],
        probe,
    )
}

/// Degenerate scheme with no internal space: the lattice `Z^d` in `G = R^d`.
pub fn integer_lattice_scheme(d: usize, mode: Mode) -> Result<Scheme, SchemeError> {
    let basis: Vec<Vec<Scalar>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| Scalar::from_int((i == j) as i64, mode))
                .collect()
        })
        .collect();
    Scheme::build(d, 0, mode, basis, &ProbeConfig::default())
}
