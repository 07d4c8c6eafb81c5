//! Finite patches of model sets and reference sets, plus the independent
//! substitution oracle used by the test suites.
//!
//! A `PointSet` is always a finite, strictly sorted patch together with the
//! sampling region it was computed on; nothing infinite ever materializes and
//! all downstream validity bookkeeping starts from the region.

use crate::geom::{lex_cmp, point_eq_tol, point_sub, AxisBox, Point};
use crate::scalar::{parse_scalar, Mode, Scalar};
use crate::scheme::{Scheme, SchemeError};
use crate::window::{Window, WindowError};
use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelSetError {
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("duplicate point at line {line}")]
    DuplicatePoint { line: usize },
    #[error("point lies outside the declared region")]
    PointOutsideRegion,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Where a point set came from.
#[derive(Debug, Clone)]
pub enum Provenance {
    ModelSet { scheme: Scheme, window: Window },
    Lattice,
    File { path: String, resorted: bool },
    Synthetic { label: String },
}

impl Provenance {
    pub fn tag(&self) -> &'static str {
        match self {
            Provenance::ModelSet { .. } => "model-set",
            Provenance::Lattice => "lattice",
            Provenance::File { .. } => "file",
            Provenance::Synthetic { .. } => "synthetic",
        }
    }

    pub fn scheme(&self) -> Option<&Scheme> {
        match self {
            Provenance::ModelSet { scheme, .. } => Some(scheme),
            _ => None,
        }
    }
}

/// A finite, sorted patch of a point set of `G = R^d`.
#[derive(Debug, Clone)]
pub struct PointSet {
    d: usize,
    mode: Mode,
    points: Vec<Point>,
    region: AxisBox,
    provenance: Provenance,
}

impl PointSet {
    /// Sort, deduplicate-check and validate a raw point list.
    pub fn new(
        mut points: Vec<Point>,
        region: AxisBox,
        mode: Mode,
        provenance: Provenance,
    ) -> Result<PointSet, ModelSetError> {
        let d = region.dim();
        for p in &points {
            if p.len() != d {
                return Err(ModelSetError::DimensionMismatch {
                    expected: d,
                    got: p.len(),
                });
            }
            if !region.contains(p) {
                return Err(ModelSetError::PointOutsideRegion);
            }
        }
        points.sort_by(|a, b| lex_cmp(a, b));
        let tol = mode.tolerance();
        for (i, w) in points.windows(2).enumerate() {
            let dup = if tol == 0.0 {
                lex_cmp(&w[0], &w[1]) == Ordering::Equal
            } else {
                point_eq_tol(&w[0], &w[1], tol)
            };
            if dup {
                return Err(ModelSetError::DuplicatePoint { line: i + 1 });
            }
        }
        Ok(PointSet {
            d,
            mode,
            points,
            region,
            provenance,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn region(&self) -> &AxisBox {
        &self.region
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn scheme(&self) -> Option<&Scheme> {
        self.provenance.scheme()
    }

    /// First coordinates; the whole story when `d == 1`.
    pub fn xs(&self) -> Vec<Scalar> {
        self.points.iter().map(|p| p[0].clone()).collect()
    }

    /// Index of the first point with first coordinate `>= x` (d = 1 order).
    pub fn lower_bound(&self, x: &Scalar) -> usize {
        self.points
            .partition_point(|p| p[0].cmp_total(x) == Ordering::Less)
    }

    /// Slice of points with first coordinate in `[lo, hi]`.
    pub fn slice_in(&self, lo: &Scalar, hi: &Scalar) -> &[Point] {
        let a = self.lower_bound(lo);
        let b = self
            .points
            .partition_point(|p| p[0].cmp_total(hi) != Ordering::Greater);
        &self.points[a..b]
    }

    /// Exact membership (or within tolerance in float mode), by binary search
    /// on the first coordinate.
    pub fn contains_point(&self, p: &[Scalar]) -> bool {
        let tol = self.mode.tolerance();
        if tol == 0.0 {
            self.points
                .binary_search_by(|q| lex_cmp(q, p))
                .is_ok()
        } else {
            let eps = Scalar::Float(tol);
            let lo = p[0].sub(&eps);
            let hi = p[0].add(&eps);
            self.slice_in(&lo, &hi)
                .iter()
                .any(|q| point_eq_tol(q, p, tol))
        }
    }

    /// The patch translated by `-t` (i.e. `self - t`), region translated too.
    pub fn translate(&self, t: &[Scalar]) -> PointSet {
        let points = self.points.iter().map(|p| point_sub(p, t)).collect();
        let neg: Point = t.iter().map(Scalar::neg).collect();
        PointSet {
            d: self.d,
            mode: self.mode,
            points,
            region: self.region.translate(&neg),
            provenance: Provenance::Synthetic {
                label: "translate".into(),
            },
        }
    }

    /// Points with first coordinate in `[-r, r]`, packaged as a stand-alone
    /// motif whose region is the ball itself.
    pub fn restrict_to_ball(&self, r: f64) -> PointSet {
        let rs = Scalar::from_f64(r, self.mode);
        let lo = rs.neg();
        let pts: Vec<Point> = self.slice_in(&lo, &rs).to_vec();
        PointSet {
            d: self.d,
            mode: self.mode,
            points: pts,
            region: AxisBox::centered(r, self.d, self.mode),
            provenance: Provenance::Synthetic {
                label: "ball-restriction".into(),
            },
        }
    }

    /// Successive gaps of a one-dimensional patch.
    pub fn gaps(&self) -> Vec<Scalar> {
        assert_eq!(self.d, 1, "gaps need a 1-d point set");
        self.points
            .windows(2)
            .map(|w| w[1][0].sub(&w[0][0]))
            .collect()
    }
}

/// Generate the patch of `𝔓(W)` inside `region`: lattice points whose
/// internal projection lies in the window (face flags honored).
pub fn generate(
    scheme: &Scheme,
    window: &Window,
    region: &AxisBox,
) -> Result<PointSet, ModelSetError> {
    if window.dim() != scheme.m() {
        return Err(ModelSetError::DimensionMismatch {
            expected: scheme.m(),
            got: window.dim(),
        });
    }
    if region.dim() != scheme.d() {
        return Err(ModelSetError::DimensionMismatch {
            expected: scheme.d(),
            got: region.dim(),
        });
    }
    if region.is_empty() {
        return PointSet::new(
            Vec::new(),
            region.clone(),
            scheme.mode(),
            Provenance::ModelSet {
                scheme: scheme.clone(),
                window: window.clone(),
            },
        );
    }
    let bbox = window.bounding_box();
    let candidates = scheme.lattice_points_in_box(&bbox, region)?;
    let mut points = Vec::new();
    for c in candidates {
        if window.contains(&c.internal, scheme.mode())? && region.contains(&c.physical) {
            points.push(c.physical);
        }
    }
    PointSet::new(
        points,
        region.clone(),
        scheme.mode(),
        Provenance::ModelSet {
            scheme: scheme.clone(),
            window: window.clone(),
        },
    )
}

/// Prefix of the fixed point of the substitution `L -> LS`, `S -> L`.
///
/// Independent oracle for Fibonacci gap sequences: nothing here touches the
/// cut-and-project machinery.
pub fn fibonacci_word(n_letters: usize) -> String {
    assert!(n_letters >= 1);
    let mut word = String::from("L");
    while word.len() < n_letters {
        let mut next = String::with_capacity(word.len() * 2);
        for c in word.chars() {
            match c {
                'L' => next.push_str("LS"),
                'S' => next.push('L'),
                _ => unreachable!(),
            }
        }
        word = next;
    }
    word.truncate(n_letters);
    word
}

/// Gap word of a 1-d patch: the larger gap value maps to `L`, the smaller to
/// `S`. Errors if the patch does not have exactly two distinct gap values.
pub fn gap_word(ps: &PointSet) -> Result<(String, Scalar, Scalar), String> {
    let gaps = ps.gaps();
    if gaps.is_empty() {
        return Err("patch has fewer than 2 points".into());
    }
    let tol = ps.mode().tolerance();
    let mut distinct: Vec<Scalar> = Vec::new();
    for g in &gaps {
        if !distinct.iter().any(|d| d.eq_tol(g, tol)) {
            distinct.push(g.clone());
        }
    }
    if distinct.len() != 2 {
        return Err(format!(
            "expected exactly 2 gap values, found {}",
            distinct.len()
        ));
    }
    distinct.sort_by(|a, b| a.cmp_total(b));
    let (short, long) = (distinct[0].clone(), distinct[1].clone());
    let word: String = gaps
        .iter()
        .map(|g| if g.eq_tol(&long, tol) { 'L' } else { 'S' })
        .collect();
    Ok((word, long, short))
}

/// True when `word`, after trimming at most one letter from each end, occurs
/// somewhere in the substitution fixed point.
pub fn matches_fibonacci_word(word: &str) -> bool {
    if word.is_empty() {
        return true;
    }
    let oracle = fibonacci_word(word.len() * 8 + 64);
    for trim_front in 0..=1usize {
        for trim_back in 0..=1usize {
            if trim_front + trim_back >= word.len() {
                continue;
            }
            let inner = &word[trim_front..word.len() - trim_back];
            if oracle.contains(inner) {
                return true;
            }
        }
    }
    false
}

fn mode_header(mode: Mode) -> String {
    match mode {
        Mode::Exact { d } => format!("exact(D={d})"),
        Mode::Float { tolerance } => format!("float(tol={tolerance})"),
    }
}

fn parse_mode_header(s: &str) -> Result<Mode, String> {
    let s = s.trim();
    if let Some(rest) = s.strip_prefix("exact(D=").and_then(|r| r.strip_suffix(')')) {
        let d: u32 = rest.parse().map_err(|_| format!("bad discriminant {rest:?}"))?;
        Ok(Mode::Exact { d })
    } else if let Some(rest) = s.strip_prefix("float(tol=").and_then(|r| r.strip_suffix(')')) {
        let tolerance: f64 = rest.parse().map_err(|_| format!("bad tolerance {rest:?}"))?;
        Ok(Mode::Float { tolerance })
    } else {
        Err(format!("bad mode header {s:?}"))
    }
}

/// Serialize to the `meyerlab pointset v1` text format.
pub fn save_pointset(ps: &PointSet, path: &Path) -> Result<(), ModelSetError> {
    std::fs::write(path, pointset_to_string(ps))?;
    Ok(())
}

pub fn pointset_to_string(ps: &PointSet) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# meyerlab pointset v1; d={}; mode={}",
        ps.d,
        mode_header(ps.mode)
    );
    let lo = ps
        .region
        .lo
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("\t");
    let hi = ps
        .region
        .hi
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("\t");
    let _ = writeln!(out, "# region-lo:\t{lo}");
    let _ = writeln!(out, "# region-hi:\t{hi}");
    let _ = writeln!(out, "# source: {}", ps.provenance.tag());
    for p in &ps.points {
        let line = p
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("\t");
        let _ = writeln!(out, "{line}");
    }
    out
}

/// Load a point-set file. Unsorted input is re-sorted and flagged in the
/// provenance; duplicates are an error.
pub fn load_pointset(path: &Path) -> Result<PointSet, ModelSetError> {
    let text = std::fs::read_to_string(path)?;
    pointset_from_string(&text, &path.display().to_string())
}

pub fn pointset_from_string(text: &str, origin: &str) -> Result<PointSet, ModelSetError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(ModelSetError::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let header = header.trim();
    let rest = header
        .strip_prefix("# meyerlab pointset v1;")
        .ok_or(ModelSetError::Parse {
            line: 1,
            msg: "missing `# meyerlab pointset v1` header".into(),
        })?;
    let mut d: Option<usize> = None;
    let mut mode: Option<Mode> = None;
    for part in rest.split(';') {
        let part = part.trim();
        if let Some(v) = part.strip_prefix("d=") {
            d = Some(v.trim().parse().map_err(|_| ModelSetError::Parse {
                line: 1,
                msg: format!("bad dimension {v:?}"),
            })?);
        } else if let Some(v) = part.strip_prefix("mode=") {
            mode = Some(parse_mode_header(v).map_err(|msg| ModelSetError::Parse { line: 1, msg })?);
        }
    }
    let d = d.ok_or(ModelSetError::Parse {
        line: 1,
        msg: "header lacks d=".into(),
    })?;
    let mode = mode.ok_or(ModelSetError::Parse {
        line: 1,
        msg: "header lacks mode=".into(),
    })?;

    let mut region_lo: Option<Point> = None;
    let mut region_hi: Option<Point> = None;
    let mut raw_points: Vec<(usize, Point)> = Vec::new();
    let parse_point = |lineno: usize, line: &str| -> Result<Point, ModelSetError> {
        let coords: Result<Point, ModelSetError> = line
            .split('\t')
            .map(|c| {
                parse_scalar(c, mode).map_err(|msg| ModelSetError::Parse { line: lineno, msg })
            })
            .collect();
        let coords = coords?;
        if coords.len() != d {
            return Err(ModelSetError::Parse {
                line: lineno,
                msg: format!("expected {d} coordinates, got {}", coords.len()),
            });
        }
        Ok(coords)
    };
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(v) = line.strip_prefix("# region-lo:") {
            region_lo = Some(parse_point(lineno, v.trim_start())?);
        } else if let Some(v) = line.strip_prefix("# region-hi:") {
            region_hi = Some(parse_point(lineno, v.trim_start())?);
        } else if line.starts_with('#') {
            continue;
        } else {
            raw_points.push((lineno, parse_point(lineno, line)?));
        }
    }

    // Region defaults to the hull of the points when absent.
    let (lo, hi) = match (region_lo, region_hi) {
        (Some(l), Some(h)) => (l, h),
        _ => {
            if raw_points.is_empty() {
                return Err(ModelSetError::Parse {
                    line: 1,
                    msg: "no region header and no points".into(),
                });
            }
            let mut lo = raw_points[0].1.clone();
            let mut hi = raw_points[0].1.clone();
            for (_, p) in &raw_points {
                for i in 0..d {
                    lo[i] = lo[i].clone().min(p[i].clone());
                    hi[i] = hi[i].clone().max(p[i].clone());
                }
            }
            (lo, hi)
        }
    };
    let region = AxisBox::new(lo, hi);

    let sorted = raw_points
        .windows(2)
        .all(|w| lex_cmp(&w[0].1, &w[1].1) != Ordering::Greater);
    // Exact duplicate scan with line numbers before handing off.
    {
        let mut seen = raw_points.clone();
        seen.sort_by(|a, b| lex_cmp(&a.1, &b.1));
        let tol = mode.tolerance();
        for w in seen.windows(2) {
            let dup = if tol == 0.0 {
                lex_cmp(&w[0].1, &w[1].1) == Ordering::Equal
            } else {
                point_eq_tol(&w[0].1, &w[1].1, tol)
            };
            if dup {
                return Err(ModelSetError::DuplicatePoint {
                    line: w[1].0.max(w[0].0),
                });
            }
        }
    }
    PointSet::new(
        raw_points.into_iter().map(|(_, p)| p).collect(),
        region,
        mode,
        Provenance::File {
            path: origin.to_string(),
            resorted: !sorted,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::{fibonacci_scheme, integer_lattice_scheme, ProbeConfig};
    use crate::window::FlaggedBox;

    const EXACT5: Mode = Mode::Exact { d: 5 };

    fn s(v: &str) -> Scalar {
        parse_scalar(v, EXACT5).unwrap()
    }

    fn fib_window() -> Window {
        Window::interval(s("-1"), s("-1/2+1/2√5")).unwrap()
    }

    fn region(lo: &str, hi: &str) -> AxisBox {
        AxisBox::new(vec![s(lo)], vec![s(hi)])
    }

    #[test]
    fn integer_lattice_patch() {
        let sch = integer_lattice_scheme(1, EXACT5).unwrap();
        let win = Window::new(vec![FlaggedBox::closed(vec![], vec![])]).unwrap();
        let ps = generate(&sch, &win, &region("-3", "3")).unwrap();
        let xs: Vec<i64> = ps.xs().iter().map(Scalar::floor_int).collect();
        assert_eq!(xs, vec![-3, -2, -1, 0, 1, 2, 3]);
    }

    #[test]
    fn fibonacci_gaps_are_one_and_tau() {
        let sch = fibonacci_scheme(&ProbeConfig::default()).unwrap();
        let ps = generate(&sch, &fib_window(), &region("0", "40")).unwrap();
        assert!(ps.len() > 20);
        let one = s("1");
        let tau = s("1/2+1/2√5");
        for g in ps.gaps() {
            assert!(g == one || g == tau, "unexpected gap {g}");
        }
        // Cross-check against the brute-force double loop.
        let mut brute: Vec<Scalar> = Vec::new();
        let lo = s("-1");
        let hi = s("-1/2+1/2√5");
        for m in -60i64..=60 {
            for n in -60i64..=60 {
                let p = sch.point_from_coeffs(&[m, n]);
                let int = &p.internal[0];
                let phys = &p.physical[0];
                let in_window = lo.cmp_total(int) != Ordering::Greater
                    && int.cmp_total(&hi) != Ordering::Greater;
                let in_region = s("0").cmp_total(phys) != Ordering::Greater
                    && phys.cmp_total(&s("40")) != Ordering::Greater;
                if in_window && in_region {
                    brute.push(phys.clone());
                }
            }
        }
        brute.sort_by(|a, b| a.cmp_total(b));
        assert_eq!(ps.xs(), brute);
    }

    #[test]
    fn gap_word_matches_substitution_oracle() {
        let sch = fibonacci_scheme(&ProbeConfig::default()).unwrap();
        let ps = generate(&sch, &fib_window(), &region("0", "60")).unwrap();
        let (word, long, short) = gap_word(&ps).unwrap();
        assert_eq!(long, s("1/2+1/2√5"));
        assert_eq!(short, s("1"));
        assert!(matches_fibonacci_word(&word), "word {word} not a factor");
    }

    #[test]
    fn fibonacci_word_examples() {
        assert_eq!(fibonacci_word(1), "L");
        assert_eq!(fibonacci_word(5), "LSLLS");
        let w = fibonacci_word(13);
        let l = w.chars().filter(|&c| c == 'L').count() as f64;
        let s_count = w.chars().filter(|&c| c == 'S').count() as f64;
        let tau = (1.0 + 5.0f64.sqrt()) / 2.0;
        assert!((l / s_count - tau).abs() < 0.15, "ratio {}", l / s_count);
    }

    #[test]
    fn face_flags_change_exactly_the_witness_points() {
        let sch = fibonacci_scheme(&ProbeConfig::default()).unwrap();
        let reg = region("-10", "10");
        let closed = Window::interval(s("0"), s("1/2+1/2√5")).unwrap();
        let half_open = Window::new(vec![FlaggedBox {
            lo: vec![s("0")],
            hi: vec![s("1/2+1/2√5")],
            lo_closed: vec![true],
            hi_closed: vec![false],
        }])
        .unwrap();
        let a = generate(&sch, &closed, &reg).unwrap();
        let b = generate(&sch, &half_open, &reg).unwrap();
        let diff: Vec<Scalar> = a
            .xs()
            .into_iter()
            .filter(|x| !b.contains_point(std::slice::from_ref(x)))
            .collect();
        // Exactly the lattice point whose star is τ: physical 1 - τ = (1-√5)/2.
        assert_eq!(diff.len(), 1);
        assert_eq!(diff[0], s("1/2-1/2√5"));
    }

    #[test]
    fn window_monotone_generation() {
        let sch = fibonacci_scheme(&ProbeConfig::default()).unwrap();
        let reg = region("-20", "20");
        let small = Window::interval(s("-1/2"), s("1/4")).unwrap();
        let big = Window::interval(s("-1"), s("-1/2+1/2√5")).unwrap();
        let a = generate(&sch, &small, &reg).unwrap();
        let b = generate(&sch, &big, &reg).unwrap();
        for p in a.points() {
            assert!(b.contains_point(p));
        }
        assert!(b.len() > a.len());
    }

    #[test]
    fn lattice_equivariance() {
        let sch = fibonacci_scheme(&ProbeConfig::default()).unwrap();
        // g = τ is the physical projection of (0,1); star(τ) = τ'.
        let g = s("1/2+1/2√5");
        let g_star = s("1/2-1/2√5");
        let win = fib_window();
        let reg = region("0", "30");
        let shifted_reg = AxisBox::new(vec![s("0").add(&g)], vec![s("30").add(&g)]);
        let a = generate(&sch, &win.translate(&[g_star.neg()]), &reg).unwrap();
        let b = generate(&sch, &win, &shifted_reg).unwrap();
        let b_shifted = b.translate(&[g]);
        assert_eq!(a.xs(), b_shifted.xs());
    }

    #[test]
    fn save_load_round_trip() {
        let sch = fibonacci_scheme(&ProbeConfig::default()).unwrap();
        let ps = generate(&sch, &fib_window(), &region("0", "25")).unwrap();
        let text = pointset_to_string(&ps);
        let back = pointset_from_string(&text, "test").unwrap();
        assert_eq!(ps.xs(), back.xs());
        assert_eq!(ps.region(), back.region());
        assert!(matches!(
            back.provenance(),
            Provenance::File { resorted: false, .. }
        ));
    }

    #[test]
    fn duplicate_point_is_parse_error() {
        let text = "# meyerlab pointset v1; d=1; mode=exact(D=5)\n1\n1\n";
        let err = pointset_from_string(text, "test").unwrap_err();
        assert!(matches!(err, ModelSetError::DuplicatePoint { .. }));
    }

    #[test]
    fn unsorted_input_is_resorted_and_flagged() {
        let text = "# meyerlab pointset v1; d=1; mode=exact(D=5)\n2\n1\n";
        let ps = pointset_from_string(text, "test").unwrap();
        assert!(matches!(
            ps.provenance(),
            Provenance::File { resorted: true, .. }
        ));
        let xs: Vec<i64> = ps.xs().iter().map(Scalar::floor_int).collect();
        assert_eq!(xs, vec![1, 2]);
    }

    #[test]
    fn float_mode_round_trip() {
        let mode = Mode::Float { tolerance: 1e-9 };
        let pts = vec![vec![Scalar::Float(0.25)], vec![Scalar::Float(1.7)]];
        let reg = AxisBox::new(vec![Scalar::Float(0.0)], vec![Scalar::Float(2.0)]);
        let ps = PointSet::new(pts, reg, mode, Provenance::Synthetic { label: "t".into() })
            .unwrap();
        let back = pointset_from_string(&pointset_to_string(&ps), "test").unwrap();
        assert_eq!(ps.xs(), back.xs());
    }
}
