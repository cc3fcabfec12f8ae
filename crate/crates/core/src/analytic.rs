//! Exact spectrum of the limit Laplacian.
//!
//! The functions that live on level `n` but are orthogonal to every coarser
//! level are antisymmetric across the two copies of `F_{n-1}` and vanish at
//! the level-`n` wormhole columns. Cutting `F_{n-1}` at those columns leaves
//! three kinds of pieces, all with edges of length `d_n`:
//!
//! * intervals with a Neumann end on the boundary and a Dirichlet end (ND),
//! * intervals with Dirichlet conditions at both ends (DD),
//! * crosses: four arms joined at an interior vertex, Dirichlet at the tips.
//!
//! A cross splits into its symmetric part (one DD interval of length `2d`)
//! and its antisymmetric part (two DD intervals of length `d`). Every
//! eigenvalue is a rational multiple of `pi^2`; entries are keyed by that
//! rational so multiplicities from different pieces and levels add exactly.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fmt::sig17;
use crate::graph::{build_subdivided, DEFAULT_MAX_VERTICES};
use crate::jseq::JSequence;

pub type Rational = Ratio<i128>;

const PI2: f64 = PI * PI;

/// Boundary conditions of an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalKind {
    NN,
    ND,
    DD,
}

/// Where an eigenvalue comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PieceKind {
    /// The unit interval with Neumann ends (level 0).
    NN,
    ND,
    DD,
    /// Symmetric cross mode: Dirichlet interval of length `2d`.
    CrossSymmetric,
    /// Antisymmetric cross mode: two Dirichlet intervals of length `d`.
    CrossAntisymmetric,
}

impl PieceKind {
    pub fn label(self) -> &'static str {
        match self {
            PieceKind::NN => "NN",
            PieceKind::ND => "ND",
            PieceKind::DD => "DD",
            PieceKind::CrossSymmetric => "XS",
            PieceKind::CrossAntisymmetric => "XA",
        }
    }
}

impl fmt::Display for PieceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Source {
    pub level: usize,
    pub piece: PieceKind,
    /// Mode index within the piece's family.
    pub k: u64,
    /// Multiplicity contributed (number of pieces times modes per piece).
    pub count: u64,
}

/// One distinct eigenvalue `lambda = value * pi^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEntry {
    pub value: Rational,
    pub lambda: f64,
    pub multiplicity: u64,
    pub sources: Vec<Source>,
}

impl SpectrumEntry {
    fn new(value: Rational, source: Source) -> Self {
        Self { value, lambda: to_lambda(value), multiplicity: source.count, sources: vec![source] }
    }
}

pub fn to_lambda(value: Rational) -> f64 {
    value.to_f64().expect("finite rational") * PI2
}

/// Merges entries with equal rational value; multiplicities add.
#[derive(Debug, Clone, Default)]
struct Accumulator {
    entries: BTreeMap<Rational, SpectrumEntry>,
}

impl Accumulator {
    fn add(&mut self, value: Rational, source: Source) {
        self.entries
            .entry(value)
            .and_modify(|e| {
                e.multiplicity += source.count;
                e.sources.push(source);
            })
            .or_insert_with(|| SpectrumEntry::new(value, source));
    }

    fn extend(&mut self, entries: impl IntoIterator<Item = SpectrumEntry>) {
        for e in entries {
            for s in e.sources {
                self.add(e.value, s);
            }
        }
    }

    fn into_sorted(self) -> Vec<SpectrumEntry> {
        self.entries.into_values().collect()
    }
}

/// Modes of one interval family, tagged with the given level, piece kind and
/// per-mode count.
fn interval_modes(
    kind: IntervalKind,
    d: Rational,
    lambda_max: f64,
    level: usize,
    piece: PieceKind,
    count: u64,
) -> Vec<SpectrumEntry> {
    let inv_d2 = (d * d).recip();
    let value = |k: u64| -> Rational {
        let k = k as i128;
        match kind {
            IntervalKind::NN | IntervalKind::DD => inv_d2 * k * k,
            IntervalKind::ND => inv_d2 * Ratio::new((2 * k + 1) * (2 * k + 1), 4),
        }
    };
    let first = if kind == IntervalKind::DD { 1 } else { 0 };
    let mut out = Vec::new();
    for k in first.. {
        let v = value(k);
        if to_lambda(v) > lambda_max {
            break;
        }
        out.push(SpectrumEntry::new(v, Source { level, piece, k, count }));
    }
    out
}

/// Second-derivative spectrum of an interval of length `d` up to
/// `lambda_max`, each mode with multiplicity one.
pub fn interval_spectrum(kind: IntervalKind, d: Rational, lambda_max: f64) -> Vec<SpectrumEntry> {
    assert!(d > Rational::zero(), "interval length must be positive");
    let piece = match kind {
        IntervalKind::NN => PieceKind::NN,
        IntervalKind::ND => PieceKind::ND,
        IntervalKind::DD => PieceKind::DD,
    };
    interval_modes(kind, d, lambda_max, 0, piece, 1)
}

fn cross_modes(d: Rational, lambda_max: f64, level: usize, crosses: u64) -> Vec<SpectrumEntry> {
    let mut acc = Accumulator::default();
    acc.extend(interval_modes(IntervalKind::DD, d * 2, lambda_max, level, PieceKind::CrossSymmetric, crosses));
    acc.extend(interval_modes(IntervalKind::DD, d, lambda_max, level, PieceKind::CrossAntisymmetric, 2 * crosses));
    acc.into_sorted()
}

/// Spectrum of a cross with arms of length `d` and Dirichlet tips.
pub fn cross_spectrum(d: Rational, lambda_max: f64) -> Vec<SpectrumEntry> {
    assert!(d > Rational::zero(), "arm length must be positive");
    cross_modes(d, lambda_max, 0, 1)
}

/// Numbers of ND intervals, DD intervals and crosses at one level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PieceCounts {
    pub level: usize,
    pub nd: u128,
    pub dd: u128,
    pub crosses: u128,
}

impl PieceCounts {
    /// Total length of the pieces equals the length `2^{n-1}` of `F_{n-1}`,
    /// checked exactly.
    pub fn length_conserved(&self, j_seq: &JSequence) -> Result<bool> {
        let d = j_seq.d(self.level)?;
        let pieces = self.nd + self.dd + 4 * self.crosses;
        let total = d * i128::try_from(pieces).map_err(|_| Error::InvalidArgument("piece count overflow".into()))?;
        Ok(total == Rational::from_integer(1i128 << (self.level - 1)))
    }
}

/// Closed-form piece counts for level `n >= 1`.
pub fn piece_counts(j_seq: &JSequence, n: usize) -> Result<PieceCounts> {
    if n == 0 {
        return Err(Error::InvalidArgument("piece counts start at level 1".into()));
    }
    let coarse = j_seq.columns(n - 1)?;
    let jn = j_seq.j(n)? as u128;
    let nd = 1u128 << n;
    let crosses = if n >= 2 { (1u128 << (n - 2)) * (coarse - 1) } else { 0 };
    let dd = (1u128 << (n - 1)) * coarse * (jn - 2);
    Ok(PieceCounts { level: n, nd, dd, crosses })
}

/// Counts pieces by cutting `F_{n-1}` (subdivided to mesh `d_n`) at the
/// level-`n` columns and classifying the connected components.
pub fn decompose_bruteforce(j_seq: &JSequence, n: usize) -> Result<PieceCounts> {
    if n == 0 {
        return Err(Error::InvalidArgument("decomposition starts at level 1".into()));
    }
    let g = build_subdivided(j_seq, n - 1, n, DEFAULT_MAX_VERTICES)?;
    let nv = g.vertex_count();
    let is_cut: Vec<bool> = g.vertices().iter().map(|v| v.level == n).collect();

    // union-find over free vertices joined by edges
    let mut parent: Vec<usize> = (0..nv).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for e in g.edges() {
        if !is_cut[e.u] && !is_cut[e.v] {
            let (a, b) = (find(&mut parent, e.u), find(&mut parent, e.v));
            parent[a] = b;
        }
    }

    #[derive(Default)]
    struct Component {
        free: Vec<usize>,
        edges: usize,
        cut_ends: usize,
    }
    let mut components: BTreeMap<usize, Component> = BTreeMap::new();
    let mut dd = 0u128;
    for e in g.edges() {
        match (is_cut[e.u], is_cut[e.v]) {
            (true, true) => dd += 1,
            (cu, cv) => {
                let anchor = if cu { e.v } else { e.u };
                let root = find(&mut parent, anchor);
                let c = components.entry(root).or_default();
                c.edges += 1;
                c.cut_ends += usize::from(cu) + usize::from(cv);
            }
        }
    }
    for u in 0..nv {
        if !is_cut[u] {
            let root = find(&mut parent, u);
            components.entry(root).or_default().free.push(u);
        }
    }

    let mut nd = 0u128;
    let mut crosses = 0u128;
    for (id, c) in components {
        match (c.free.as_slice(), c.edges, c.cut_ends) {
            ([v], 1, 1) if g.vertices()[*v].level == 0 => nd += 1,
            ([v], 4, 4) if g.degree(*v) == 4 && g.vertices()[*v].level >= 1 => crosses += 1,
            _ => {
                return Err(Error::UnclassifiablePiece {
                    component: id,
                    detail: format!("{} free vertices, {} edges, {} cut ends", c.free.len(), c.edges, c.cut_ends),
                })
            }
        }
    }
    Ok(PieceCounts { level: n, nd, dd, crosses })
}

/// Piece counts as tabulated in the published decomposition lists
/// (constant `j = 2` up to level 4 and `j = 3` up to level 2).
pub fn tabulated_piece_counts(j: u64, n: usize) -> Option<PieceCounts> {
    let (nd, dd, crosses) = match (j, n) {
        (2, 1) => (2, 0, 0),
        (2, 2) => (4, 0, 1),
        (2, 3) => (8, 0, 6),
        (2, 4) => (16, 0, 28),
        (3, 1) => (2, 1, 0),
        (3, 2) => (4, 3, 2),
        _ => return None,
    };
    Some(PieceCounts { level: n, nd, dd, crosses })
}

/// Lowest eigenvalue contributed by level `n`: `pi^2 / (4 d_n^2)`.
pub fn level_floor(j_seq: &JSequence, n: usize) -> Result<f64> {
    let d = j_seq.d(n)?;
    Ok(to_lambda((d * d * 4).recip()))
}

/// Smallest `max_level` whose next level starts strictly above `lambda_max`.
pub fn required_depth(j_seq: &JSequence, lambda_max: f64) -> Result<usize> {
    let mut level = 0;
    while level_floor(j_seq, level + 1)? <= lambda_max {
        level += 1;
    }
    Ok(level)
}

/// The exact spectrum up to `lambda_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTable {
    pub j: Vec<u64>,
    /// Whether `j` is a single repeating value.
    pub constant: bool,
    pub lambda_max: f64,
    pub max_level: usize,
    pub entries: Vec<SpectrumEntry>,
    pub pieces: Vec<PieceCounts>,
    /// Disagreements with tabulated decompositions, for reports.
    pub notes: Vec<String>,
}

pub fn theorem_spectrum(j_seq: &JSequence, max_level: usize, lambda_max: f64) -> Result<SpectrumTable> {
    if lambda_max.is_nan() || lambda_max < 0.0 {
        return Err(Error::InvalidArgument(format!("lambda_max must be non-negative, got {lambda_max}")));
    }
    let next_lowest = level_floor(j_seq, max_level + 1)?;
    if next_lowest <= lambda_max {
        return Err(Error::InsufficientDepth { max_level, lambda_max, next_lowest });
    }

    let mut acc = Accumulator::default();
    acc.extend(interval_modes(IntervalKind::NN, Rational::from_integer(1), lambda_max, 0, PieceKind::NN, 1));
    let mut pieces = Vec::with_capacity(max_level);
    let mut notes = Vec::new();
    for n in 1..=max_level {
        let counts = piece_counts(j_seq, n)?;
        let d = j_seq.d(n)?;
        let count = |c: u128| u64::try_from(c).map_err(|_| Error::InvalidArgument("piece count overflow".into()));
        if counts.nd > 0 {
            acc.extend(interval_modes(IntervalKind::ND, d, lambda_max, n, PieceKind::ND, count(counts.nd)?));
        }
        if counts.dd > 0 {
            acc.extend(interval_modes(IntervalKind::DD, d, lambda_max, n, PieceKind::DD, count(counts.dd)?));
        }
        if counts.crosses > 0 {
            acc.extend(cross_modes(d, lambda_max, n, count(counts.crosses)?));
        }
        if let Some(j) = constant_prefix(j_seq, n) {
            if let Some(tab) = tabulated_piece_counts(j, n) {
                if tab != counts {
                    notes.push(format!(
                        "level {n}: tabulated decomposition lists (ND, DD, X) = ({}, {}, {}); derived counts are ({}, {}, {})",
                        tab.nd, tab.dd, tab.crosses, counts.nd, counts.dd, counts.crosses
                    ));
                }
            }
        }
        pieces.push(counts);
    }
    Ok(SpectrumTable {
        j: j_seq.values().to_vec(),
        constant: j_seq.is_constant(),
        lambda_max,
        max_level,
        entries: acc.into_sorted(),
        pieces,
        notes,
    })
}

/// `Some(j)` if `j_1 = ... = j_n = j`.
fn constant_prefix(j_seq: &JSequence, n: usize) -> Option<u64> {
    let first = j_seq.j(1).ok()?;
    (1..=n).all(|i| j_seq.j(i).ok() == Some(first)).then_some(first)
}

impl SpectrumTable {
    pub fn constant_j(&self) -> Option<u64> {
        self.constant.then(|| self.j[0])
    }

    pub fn find(&self, value: Rational) -> Option<&SpectrumEntry> {
        self.entries.binary_search_by(|e| e.value.cmp(&value)).ok().map(|i| &self.entries[i])
    }

    /// Eigenvalue counting function `N(lambda)` with multiplicity.
    pub fn count_below(&self, lambda: f64) -> u64 {
        self.entries.iter().take_while(|e| e.lambda <= lambda).map(|e| e.multiplicity).sum()
    }

    /// Eigenvalues with multiplicity, ascending.
    pub fn expanded(&self) -> Vec<f64> {
        self.entries
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.lambda, e.multiplicity as usize))
            .collect()
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct SourceJson {
            level: usize,
            piece: &'static str,
            k: u64,
            count: u64,
        }
        #[derive(Serialize)]
        struct EntryJson {
            num: i128,
            den: i128,
            lambda: f64,
            multiplicity: u64,
            sources: Vec<SourceJson>,
        }
        #[derive(Serialize)]
        struct TableJson<'a> {
            j: &'a [u64],
            lambda_max: f64,
            entries: Vec<EntryJson>,
        }
        let doc = TableJson {
            j: &self.j,
            lambda_max: self.lambda_max,
            entries: self
                .entries
                .iter()
                .map(|e| EntryJson {
                    num: *e.value.numer(),
                    den: *e.value.denom(),
                    lambda: e.lambda,
                    multiplicity: e.multiplicity,
                    sources: e
                        .sources
                        .iter()
                        .map(|s| SourceJson { level: s.level, piece: s.piece.label(), k: s.k, count: s.count })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("spectrum serializes")
    }

    /// `lambda,multiplicity,num,den` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,multiplicity,num,den\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{},{}\n", sig17(e.lambda), e.multiplicity, e.value.numer(), e.value.denom()));
        }
        out
    }
}
