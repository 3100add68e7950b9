//! Minors of a square matrix over a finite local algebra, the sign
//! conventions of their expansions, and the level-by-level construction of
//! certificates that `m ∈ J_u M` given `Δ·m ∈ J_x M` where `x = W·u` and
//! `Δ = det W`.
//!
//! Indices `i` are 1-based. A subset `I ⊆ {1..n}` is a bitmask with bit
//! `i - 1` set for each member.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::algebra::{AlgebraError, Element, FiniteLocalAlgebra};
use crate::field::FieldConfig;
use crate::linalg::{LinearSolver, Mat, Subspace};
use crate::modules::{FiniteModule, ModuleError};

/// Largest matrix size accepted by [`MinorTable`].
pub const MAX_N: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LemmaError {
    #[error("index {i} is not in the subset {set:#b}")]
    NotInSubset { i: usize, set: u32 },
    #[error("indices must differ, got {0} twice")]
    EqualIndices(usize),
    #[error("row and column subsets have different sizes ({rows} vs {cols})")]
    MinorShape { rows: u32, cols: u32 },
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("matrix size {n} exceeds the cap of {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("expected {expected} entries, got {found}")]
    Shape { expected: usize, found: usize },
    #[error("x = W·u fails in row {0}")]
    NotAFactorisation(usize),
    #[error("module is over a different ring")]
    RingMismatch,
    #[error("precondition fails: det(W)·m is not in J_x M")]
    PreconditionFailed,
    #[error("hypothesis on relations fails at level {level}, subset {subset:#b}: coefficient {coefficient} of a relation among the x_k is not in J_x M")]
    RelationCoefficientOutsideIdeal {
        level: usize,
        subset: u32,
        coefficient: usize,
        /// `m_1..m_n` with `Σ x_k m_k = 0` and `m_coefficient ∉ J_x M`
        relation: Vec<Vec<u64>>,
    },
    #[error("certificate parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Module(#[from] ModuleError),
}

fn bit(i: usize) -> u32 {
    1 << (i - 1)
}

fn contains(set: u32, i: usize) -> bool {
    set & bit(i) != 0
}

/// `E_l = {1..l}`
pub fn initial_segment(l: usize) -> u32 {
    if l >= 32 {
        u32::MAX
    } else {
        (1u32 << l) - 1
    }
}

/// Subsets of `{1..n}` of size `l`, increasing as integers.
pub fn subsets_of_size(n: usize, l: usize) -> impl Iterator<Item = u32> {
    (0..1u32 << n).filter(move |s| s.count_ones() as usize == l)
}

/// `+1` if `i < j`, `-1` if `i > j`.
pub fn epsilon_bar(i: usize, j: usize) -> Result<i8, LemmaError> {
    match i.cmp(&j) {
        std::cmp::Ordering::Less => Ok(1),
        std::cmp::Ordering::Greater => Ok(-1),
        std::cmp::Ordering::Equal => Err(LemmaError::EqualIndices(i)),
    }
}

/// `(-1)^p` where `p` is the 1-based position of `i` in `{1..n} ∖ (I - i)`.
pub fn epsilon(i: usize, set: u32) -> Result<i8, LemmaError> {
    if i == 0 || i > 32 || !contains(set, i) {
        return Err(LemmaError::NotInSubset { i, set });
    }
    let below = (set & (bit(i) - 1)).count_ones() as usize;
    let p = i - below;
    Ok(if p.is_multiple_of(2) { 1 } else { -1 })
}

/// The product formula `(-1)^i ∏_{j ∈ I - i} ε̄(i, j)`.
pub fn epsilon_by_product(i: usize, set: u32) -> Result<i8, LemmaError> {
    if i == 0 || i > 32 || !contains(set, i) {
        return Err(LemmaError::NotInSubset { i, set });
    }
    let mut s: i8 = if i.is_multiple_of(2) { 1 } else { -1 };
    for j in 1..=32 {
        if j != i && contains(set, j) {
            s *= epsilon_bar(i, j)?;
        }
    }
    Ok(s)
}

fn sign_in(f: FieldConfig, s: i8) -> u64 {
    if s > 0 {
        1
    } else {
        f.neg(1)
    }
}

/// Memoized minors `Δ^I_J` of an `n × n` matrix over a finite local
/// algebra: rows in `I` and columns in `J` deleted.
#[derive(Debug, Clone)]
pub struct MinorTable {
    ring: Arc<FiniteLocalAlgebra>,
    n: usize,
    w: Vec<Vec<Element>>,
    memo: HashMap<(u32, u32), Element>,
}

impl MinorTable {
    pub fn new(ring: Arc<FiniteLocalAlgebra>, w: Vec<Vec<Element>>) -> Result<Self, LemmaError> {
        let n = w.len();
        if n > MAX_N {
            return Err(LemmaError::TooLarge { n, cap: MAX_N });
        }
        for row in &w {
            if row.len() != n {
                return Err(LemmaError::Shape { expected: n, found: row.len() });
            }
            for e in row {
                ring.check(e)?;
            }
        }
        Ok(MinorTable {
            ring,
            n,
            w,
            memo: HashMap::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `c_ij`, 1-based.
    pub fn entry(&self, i: usize, j: usize) -> &Element {
        &self.w[i - 1][j - 1]
    }

    pub fn minor(&mut self, rows: u32, cols: u32) -> Result<Element, LemmaError> {
        let full = initial_segment(self.n);
        if rows & !full != 0 || cols & !full != 0 {
            return Err(LemmaError::IndexOutOfRange(format!("subsets {rows:#b}, {cols:#b} for n = {}", self.n)));
        }
        if rows.count_ones() != cols.count_ones() {
            return Err(LemmaError::MinorShape {
                rows: rows.count_ones(),
                cols: cols.count_ones(),
            });
        }
        Ok(self.minor_unchecked(rows, cols))
    }

    /// Cofactor expansion along the first remaining row.
    fn minor_unchecked(&mut self, rows: u32, cols: u32) -> Element {
        let full = initial_segment(self.n);
        if rows == full {
            return self.ring.one();
        }
        if let Some(v) = self.memo.get(&(rows, cols)) {
            return v.clone();
        }
        let f = self.ring.field();
        let r = (!rows).trailing_zeros() as usize + 1;
        let mut acc = self.ring.zero();
        let mut pos = 0;
        for c in 1..=self.n {
            if contains(cols, c) {
                continue;
            }
            let entry = self.w[r - 1][c - 1].clone();
            if !entry.is_zero() {
                let sub = self.minor_unchecked(rows | bit(r), cols | bit(c));
                let term = self.ring.mul(&entry, &sub);
                acc = self.ring.add(&acc, &self.ring.scale(&term, f.sign(pos)));
            }
            pos += 1;
        }
        self.memo.insert((rows, cols), acc.clone());
        acc
    }

    pub fn det(&mut self) -> Element {
        self.minor_unchecked(0, 0)
    }

    /// Checks the column expansion of `Δ^{E_l}_{I-i}` when `i ∈ I`, or the
    /// vanishing of the same sum when `i ∉ I`, for `I` of size `l + 1`.
    pub fn check_expansion_identities(&mut self, l: usize, set: u32, i: usize) -> Result<bool, LemmaError> {
        let n = self.n;
        if l >= n || i == 0 || i > n || set & !initial_segment(n) != 0 || set.count_ones() as usize != l + 1 {
            return Err(LemmaError::IndexOutOfRange(format!("l = {l}, I = {set:#b}, i = {i}, n = {n}")));
        }
        let f = self.ring.field();
        let el = initial_segment(l);
        let mut sum = self.ring.zero();
        for k in l + 1..=n {
            let c = self.entry(k, i).clone();
            let d = self.minor_unchecked(el | bit(k), set);
            let t = self.ring.scale(&self.ring.mul(&c, &d), f.sign(k as i64));
            sum = self.ring.add(&sum, &t);
        }
        if contains(set, i) {
            let lhs = self.minor_unchecked(el, set & !bit(i));
            let s = f.mul(f.sign(l as i64), sign_in(f, epsilon(i, set)?));
            Ok(lhs == self.ring.scale(&sum, s))
        } else {
            Ok(sum.is_zero())
        }
    }
}

/// Data for a membership certificate: `x = W·u` over `B` and a module `M`.
#[derive(Debug, Clone)]
pub struct LemmaInstance {
    ring: Arc<FiniteLocalAlgebra>,
    module: FiniteModule,
    x: Vec<Element>,
    u: Vec<Element>,
    w: Vec<Vec<Element>>,
    jx: Subspace,
    ju: Subspace,
}

impl LemmaInstance {
    pub fn new(module: FiniteModule, x: Vec<Element>, u: Vec<Element>, w: Vec<Vec<Element>>) -> Result<Self, LemmaError> {
        let ring = Arc::clone(module.ring());
        let n = x.len();
        if n > MAX_N {
            return Err(LemmaError::TooLarge { n, cap: MAX_N });
        }
        if u.len() != n {
            return Err(LemmaError::Shape { expected: n, found: u.len() });
        }
        if w.len() != n {
            return Err(LemmaError::Shape { expected: n, found: w.len() });
        }
        for e in x.iter().chain(&u).chain(w.iter().flatten()) {
            ring.check(e)?;
        }
        for (k, row) in w.iter().enumerate() {
            if row.len() != n {
                return Err(LemmaError::Shape { expected: n, found: row.len() });
            }
            let mut acc = ring.zero();
            for (c, ui) in row.iter().zip(&u) {
                acc = ring.add(&acc, &ring.mul(c, ui));
            }
            if acc != x[k] {
                return Err(LemmaError::NotAFactorisation(k + 1));
            }
        }
        let jx = module.submodule_product(&x);
        let ju = module.submodule_product(&u);
        assert!(jx.is_subspace_of(&ju), "J_x M is not inside J_u M although x = W u");
        Ok(LemmaInstance {
            ring,
            module,
            x,
            u,
            w,
            jx,
            ju,
        })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn module(&self) -> &FiniteModule {
        &self.module
    }

    pub fn jx(&self) -> &Subspace {
        &self.jx
    }

    pub fn ju(&self) -> &Subspace {
        &self.ju
    }

    pub fn delta(&self) -> Element {
        MinorTable::new(Arc::clone(&self.ring), self.w.clone()).unwrap().det()
    }

    fn split(&self, sol: Vec<u64>) -> Vec<Vec<u64>> {
        let s = self.module.dim();
        if s == 0 {
            return vec![Vec::new(); self.n()];
        }
        sol.chunks(s).map(<[u64]>::to_vec).collect()
    }

    /// Runs the induction over levels `0..=n` and folds the last level into
    /// coefficients over `u`.
    pub fn membership_certificate(&self, m: &[u64]) -> Result<MembershipCertificate, LemmaError> {
        let n = self.n();
        let s = self.module.dim();
        if m.len() != s {
            return Err(LemmaError::Shape { expected: s, found: m.len() });
        }
        let f = self.ring.field();
        let mut minors = MinorTable::new(Arc::clone(&self.ring), self.w.clone())?;
        let solver: LinearSolver = self.module.stacked(&self.x).solver();
        let m = m.to_vec();

        let delta_m = self.module.act(&minors.det(), &m);
        let Some(sol) = solver.solve(&delta_m) else {
            return Err(LemmaError::PreconditionFailed);
        };
        let mut levels = vec![vec![TraceEntry {
            subset: 0,
            g: delta_m,
            decomposition: self.split(sol),
        }]];
        for l in 0..n {
            let prev: HashMap<u32, &TraceEntry> = levels[l].iter().map(|e| (e.subset, e)).collect();
            let mut next = Vec::new();
            for set in subsets_of_size(n, l + 1) {
                let g = self.g_value(&mut minors, &prev, l + 1, set, &m);
                match solver.solve(&g) {
                    Some(sol) => next.push(TraceEntry {
                        subset: set,
                        g,
                        decomposition: self.split(sol),
                    }),
                    None => {
                        let relation = self.failed_relation(&mut minors, &prev, l, set, &m);
                        return Err(LemmaError::RelationCoefficientOutsideIdeal {
                            level: l + 1,
                            subset: set,
                            coefficient: l + 1,
                            relation,
                        });
                    }
                }
            }
            levels.push(next);
        }
        let top = &levels[n][0];
        let mut b = Vec::with_capacity(n);
        for i in 1..=n {
            let mut bi = vec![0; s];
            for k in 1..=n {
                let v = self.module.act(minors.entry(k, i), &top.decomposition[k - 1]);
                add_into(f, &mut bi, &v, 1);
            }
            if n > 0 {
                let prev = levels[n - 1].iter().find(|e| e.subset == initial_segment(n) & !bit(i)).unwrap();
                add_into(f, &mut bi, &prev.decomposition[n - 1], f.neg(sign_in(f, epsilon(i, initial_segment(n))?)));
            }
            b.push(bi);
        }
        let cert = MembershipCertificate {
            ring: Arc::clone(&self.ring),
            module: self.module.clone(),
            x: self.x.clone(),
            u: self.u.clone(),
            w: self.w.clone(),
            m,
            b,
            levels,
        };
        assert!(cert.verify(), "freshly built certificate does not verify");
        Ok(cert)
    }

    /// `g_I = Δ^{E_l}_I m + Σ_{i ∈ I} ε(i, I) u_i a^l_{I-i}` where
    /// `a^l_J` is the `x_l` component of the decomposition of `g_J`.
    fn g_value(&self, minors: &mut MinorTable, prev: &HashMap<u32, &TraceEntry>, l: usize, set: u32, m: &[u64]) -> Vec<u64> {
        let f = self.ring.field();
        let d = minors.minor_unchecked(initial_segment(l), set);
        let mut g = self.module.act(&d, m);
        for i in 1..=self.n() {
            if contains(set, i) {
                let a = &prev[&(set & !bit(i))].decomposition[l - 1];
                let v = self.module.act(&self.u[i - 1], a);
                add_into(f, &mut g, &v, sign_in(f, epsilon(i, set).unwrap()));
            }
        }
        g
    }

    /// The relation `Σ_k x_k m_k = 0` whose `x_{l+1}` coefficient is `g_I`.
    fn failed_relation(&self, minors: &mut MinorTable, prev: &HashMap<u32, &TraceEntry>, l: usize, set: u32, m: &[u64]) -> Vec<Vec<u64>> {
        let n = self.n();
        let f = self.ring.field();
        let mut out = Vec::with_capacity(n);
        for k in 1..=n {
            let mut mk = vec![0; self.module.dim()];
            for i in 1..=n {
                if contains(set, i) {
                    let a = &prev[&(set & !bit(i))].decomposition[k - 1];
                    let v = self.module.act(&self.u[i - 1], a);
                    add_into(f, &mut mk, &v, sign_in(f, epsilon(i, set).unwrap()));
                }
            }
            if k > l {
                let d = minors.minor_unchecked(initial_segment(l) | bit(k), set);
                let v = self.module.act(&d, m);
                add_into(f, &mut mk, &v, f.neg(f.sign((l + k) as i64)));
            }
            out.push(mk);
        }
        let mut total = vec![0; self.module.dim()];
        for (xk, mk) in self.x.iter().zip(&out) {
            add_into(f, &mut total, &self.module.act(xk, mk), 1);
        }
        assert!(total.iter().all(|&c| c == 0), "extracted relation does not vanish");
        out
    }
}

fn add_into(f: FieldConfig, acc: &mut [u64], v: &[u64], c: u64) {
    for (a, &x) in acc.iter_mut().zip(v) {
        if x != 0 {
            *a = f.mul_add(*a, c, x);
        }
    }
}

/// One subset at one level of the induction: `g_I` and a decomposition
/// `g_I = Σ_k x_k a_I^k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub subset: u32,
    pub g: Vec<u64>,
    pub decomposition: Vec<Vec<u64>>,
}

/// Self-contained evidence that `m = Σ_i u_i b_i`, together with the
/// intermediate memberships that produced the `b_i`.
#[derive(Debug, Clone)]
pub struct MembershipCertificate {
    ring: Arc<FiniteLocalAlgebra>,
    module: FiniteModule,
    pub x: Vec<Element>,
    pub u: Vec<Element>,
    pub w: Vec<Vec<Element>>,
    pub m: Vec<u64>,
    pub b: Vec<Vec<u64>>,
    /// `levels[l]` lists the subsets of size `l` in increasing order.
    pub levels: Vec<Vec<TraceEntry>>,
}

impl PartialEq for MembershipCertificate {
    fn eq(&self, other: &Self) -> bool {
        self.ring == other.ring
            && self.module == other.module
            && self.x == other.x
            && self.u == other.u
            && self.w == other.w
            && self.m == other.m
            && self.b == other.b
            && self.levels == other.levels
    }
}

impl MembershipCertificate {
    pub fn ring(&self) -> &Arc<FiniteLocalAlgebra> {
        &self.ring
    }

    pub fn module(&self) -> &FiniteModule {
        &self.module
    }

    /// Recomputes everything from the stored data. Never panics on
    /// malformed content.
    pub fn verify(&self) -> bool {
        self.check().is_some()
    }

    fn check(&self) -> Option<()> {
        let ring = &self.ring;
        let f = ring.field();
        let s = self.module.dim();
        let n = self.x.len();
        let ok_vec = |v: &Vec<u64>| v.len() == s && v.iter().all(|&c| c < f.p());
        let ok_el = |e: &Element| ring.check(e).is_ok();
        if self.module.ring() != ring
            || self.u.len() != n
            || self.w.len() != n
            || self.b.len() != n
            || !ok_vec(&self.m)
            || !self.b.iter().all(ok_vec)
            || !self.x.iter().chain(&self.u).all(ok_el)
        {
            return None;
        }
        // x = W u
        for (k, row) in self.w.iter().enumerate() {
            if row.len() != n || !row.iter().all(ok_el) {
                return None;
            }
            let mut acc = ring.zero();
            for (c, ui) in row.iter().zip(&self.u) {
                acc = ring.add(&acc, &ring.mul(c, ui));
            }
            if acc != self.x[k] {
                return None;
            }
        }
        // m = Σ u_i b_i
        let mut acc = vec![0; s];
        for (ui, bi) in self.u.iter().zip(&self.b) {
            add_into(f, &mut acc, &self.module.act(ui, bi), 1);
        }
        if acc != self.m {
            return None;
        }
        // every level
        if self.levels.len() != n + 1 {
            return None;
        }
        let mut minors = MinorTable::new(Arc::clone(ring), self.w.clone()).ok()?;
        for (l, level) in self.levels.iter().enumerate() {
            let subsets: Vec<u32> = subsets_of_size(n, l).collect();
            if level.iter().map(|e| e.subset).ne(subsets.iter().copied()) {
                return None;
            }
            for e in level {
                if e.decomposition.len() != n || !e.decomposition.iter().all(ok_vec) || !ok_vec(&e.g) {
                    return None;
                }
                let d = minors.minor_unchecked(initial_segment(l), e.subset);
                let mut g = self.module.act(&d, &self.m);
                for i in 1..=n {
                    if contains(e.subset, i) {
                        let prev = self.levels[l - 1].iter().find(|p| p.subset == e.subset & !bit(i))?;
                        let v = self.module.act(&self.u[i - 1], &prev.decomposition[l - 1]);
                        add_into(f, &mut g, &v, sign_in(f, epsilon(i, e.subset).ok()?));
                    }
                }
                if g != e.g {
                    return None;
                }
                let mut sum = vec![0; s];
                for (xk, ak) in self.x.iter().zip(&e.decomposition) {
                    add_into(f, &mut sum, &self.module.act(xk, ak), 1);
                }
                if sum != e.g {
                    return None;
                }
            }
        }
        Some(())
    }

    /// Line-oriented text form; see [`MembershipCertificate::from_text`].
    pub fn to_text(&self) -> String {
        let ring = &self.ring;
        let d = ring.dim();
        let s = self.module.dim();
        let join = |v: &[u64]| v.iter().map(u64::to_string).collect::<Vec<_>>().join(" ");
        let mut out = String::new();
        writeln!(out, "artinflat-certificate 1").unwrap();
        writeln!(out, "field {}", ring.field().p()).unwrap();
        writeln!(out, "ring {d}").unwrap();
        for i in 1..d {
            for j in i..d {
                let v = ring.product_of_basis(i, j);
                if v.iter().any(|&c| c != 0) {
                    writeln!(out, "prod {i} {j} = {}", join(v)).unwrap();
                }
            }
        }
        writeln!(out, "module {s}").unwrap();
        for i in 1..d {
            let a = self.module.basis_action(i);
            let flat: Vec<u64> = (0..s).flat_map(|r| a.row(r).to_vec()).collect();
            if flat.iter().any(|&c| c != 0) {
                writeln!(out, "act {i} = {}", join(&flat)).unwrap();
            }
        }
        writeln!(out, "n {}", self.x.len()).unwrap();
        for (k, e) in self.x.iter().enumerate() {
            writeln!(out, "x {} = {}", k + 1, join(e.coords())).unwrap();
        }
        for (k, e) in self.u.iter().enumerate() {
            writeln!(out, "u {} = {}", k + 1, join(e.coords())).unwrap();
        }
        for (r, row) in self.w.iter().enumerate() {
            for (c, e) in row.iter().enumerate() {
                writeln!(out, "w {} {} = {}", r + 1, c + 1, join(e.coords())).unwrap();
            }
        }
        writeln!(out, "m = {}", join(&self.m)).unwrap();
        for (i, bi) in self.b.iter().enumerate() {
            writeln!(out, "b {} = {}", i + 1, join(bi)).unwrap();
        }
        for (l, level) in self.levels.iter().enumerate() {
            for e in level {
                writeln!(out, "g {l} {} = {}", e.subset, join(&e.g)).unwrap();
                for (k, a) in e.decomposition.iter().enumerate() {
                    writeln!(out, "a {l} {} {} = {}", e.subset, k + 1, join(a)).unwrap();
                }
            }
        }
        writeln!(out, "end").unwrap();
        out
    }

    /// Parses [`MembershipCertificate::to_text`] output. The ring and module
    /// are re-validated; the rest is left to [`MembershipCertificate::verify`].
    pub fn from_text(text: &str) -> Result<Self, LemmaError> {
        CertParser::default().parse(text)
    }
}

#[derive(Default)]
struct CertParser {
    p: Option<u64>,
    ring_dim: Option<usize>,
    products: HashMap<(usize, usize), Vec<u64>>,
    module_dim: Option<usize>,
    actions: HashMap<usize, Vec<u64>>,
    n: Option<usize>,
    x: HashMap<usize, Vec<u64>>,
    u: HashMap<usize, Vec<u64>>,
    w: HashMap<(usize, usize), Vec<u64>>,
    m: Option<Vec<u64>>,
    b: HashMap<usize, Vec<u64>>,
    g: Vec<(usize, u32, Vec<u64>)>,
    a: HashMap<(usize, u32, usize), Vec<u64>>,
}

impl CertParser {
    fn parse(mut self, text: &str) -> Result<MembershipCertificate, LemmaError> {
        let mut ended = false;
        let mut saw_header = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let err = |message: String| LemmaError::Parse { line, message };
            let raw = raw.trim();
            if raw.is_empty() || raw.starts_with('#') {
                continue;
            }
            if ended {
                return Err(err("content after `end`".into()));
            }
            if !saw_header {
                if raw != "artinflat-certificate 1" {
                    return Err(err("expected header `artinflat-certificate 1`".into()));
                }
                saw_header = true;
                continue;
            }
            let (head, values) = match raw.split_once('=') {
                Some((h, v)) => (h.trim(), Some(v.trim())),
                None => (raw, None),
            };
            let mut words = head.split_whitespace();
            let key = words.next().unwrap_or_default();
            let nums: Vec<u64> = words
                .map(|w| w.parse::<u64>().map_err(|_| err(format!("bad integer `{w}`"))))
                .collect::<Result<_, _>>()?;
            let vals = || -> Result<Vec<u64>, LemmaError> {
                let v = values.ok_or_else(|| err("missing `=`".into()))?;
                v.split_whitespace()
                    .map(|w| w.parse::<u64>().map_err(|_| err(format!("bad integer `{w}`"))))
                    .collect()
            };
            let want = |k: usize| -> Result<(), LemmaError> {
                if nums.len() == k {
                    Ok(())
                } else {
                    Err(err(format!("`{key}` takes {k} indices")))
                }
            };
            let us = |x: u64| x as usize;
            match key {
                "field" => {
                    want(1)?;
                    self.p = Some(nums[0]);
                }
                "ring" => {
                    want(1)?;
                    self.ring_dim = Some(us(nums[0]));
                }
                "prod" => {
                    want(2)?;
                    self.products.insert((us(nums[0]), us(nums[1])), vals()?);
                }
                "module" => {
                    want(1)?;
                    self.module_dim = Some(us(nums[0]));
                }
                "act" => {
                    want(1)?;
                    self.actions.insert(us(nums[0]), vals()?);
                }
                "n" => {
                    want(1)?;
                    self.n = Some(us(nums[0]));
                }
                "x" => {
                    want(1)?;
                    self.x.insert(us(nums[0]), vals()?);
                }
                "u" => {
                    want(1)?;
                    self.u.insert(us(nums[0]), vals()?);
                }
                "w" => {
                    want(2)?;
                    self.w.insert((us(nums[0]), us(nums[1])), vals()?);
                }
                "m" => {
                    want(0)?;
                    self.m = Some(vals()?);
                }
                "b" => {
                    want(1)?;
                    self.b.insert(us(nums[0]), vals()?);
                }
                "g" => {
                    want(2)?;
                    self.g.push((us(nums[0]), nums[1] as u32, vals()?));
                }
                "a" => {
                    want(3)?;
                    self.a.insert((us(nums[0]), nums[1] as u32, us(nums[2])), vals()?);
                }
                "end" => {
                    want(0)?;
                    ended = true;
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        let fail = |message: &str| LemmaError::Parse { line: 0, message: message.into() };
        if !ended {
            return Err(fail("missing `end`"));
        }
        let p = self.p.ok_or_else(|| fail("missing `field`"))?;
        let field = FieldConfig::new(p).map_err(|e| fail(&e.to_string()))?;
        let d = self.ring_dim.ok_or_else(|| fail("missing `ring`"))?;
        if d == 0 || d > 4096 {
            return Err(fail("ring dimension out of range"));
        }
        let mut products = vec![vec![0; d]; d * d];
        for j in 0..d {
            products[j][j] = 1;
            products[j * d][j] = 1;
        }
        for ((i, j), v) in &self.products {
            if *i == 0 || *j == 0 || *i >= d || *j >= d || v.len() != d {
                return Err(fail("bad `prod` entry"));
            }
            products[i * d + j] = v.clone();
            products[j * d + i] = v.clone();
        }
        let ring = Arc::new(FiniteLocalAlgebra::new(field, d, products, None)?);
        let s = self.module_dim.ok_or_else(|| fail("missing `module`"))?;
        if s > 1 << 16 {
            return Err(fail("module dimension out of range"));
        }
        let mut actions = vec![Mat::identity(field, s)];
        for i in 1..d {
            let mut a = Mat::zeros(field, s, s);
            if let Some(v) = self.actions.get(&i) {
                if v.len() != s * s {
                    return Err(fail("bad `act` entry"));
                }
                for r in 0..s {
                    for c in 0..s {
                        a.set(r, c, field.reduce(v[r * s + c]));
                    }
                }
            }
            actions.push(a);
        }
        if self.actions.keys().any(|&i| i == 0 || i >= d) {
            return Err(fail("bad `act` index"));
        }
        let module = FiniteModule::new(Arc::clone(&ring), s, actions)?;
        let n = self.n.ok_or_else(|| fail("missing `n`"))?;
        if n > MAX_N {
            return Err(LemmaError::TooLarge { n, cap: MAX_N });
        }
        let elem = |v: Option<&Vec<u64>>, what: &str| -> Result<Element, LemmaError> {
            let v = v.ok_or_else(|| fail(&format!("missing `{what}`")))?;
            Ok(ring.element(v.clone())?)
        };
        let vector = |v: Option<&Vec<u64>>, what: &str| -> Result<Vec<u64>, LemmaError> {
            let v = v.ok_or_else(|| fail(&format!("missing `{what}`")))?;
            if v.len() != s {
                return Err(fail(&format!("`{what}` has the wrong length")));
            }
            Ok(v.clone())
        };
        let x = (1..=n).map(|k| elem(self.x.get(&k), "x")).collect::<Result<Vec<_>, _>>()?;
        let u = (1..=n).map(|k| elem(self.u.get(&k), "u")).collect::<Result<Vec<_>, _>>()?;
        let w = (1..=n)
            .map(|r| (1..=n).map(|c| elem(self.w.get(&(r, c)), "w")).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        let m = vector(self.m.as_ref(), "m")?;
        let b = (1..=n).map(|i| vector(self.b.get(&i), "b")).collect::<Result<Vec<_>, _>>()?;
        let mut levels: Vec<Vec<TraceEntry>> = vec![Vec::new(); n + 1];
        for (l, subset, g) in self.g {
            if l > n {
                return Err(fail("level out of range"));
            }
            let decomposition = (1..=n)
                .map(|k| vector(self.a.get(&(l, subset, k)), "a"))
                .collect::<Result<Vec<_>, _>>()?;
            levels[l].push(TraceEntry {
                subset,
                g: vector(Some(&g), "g")?,
                decomposition,
            });
        }
        Ok(MembershipCertificate {
            ring,
            module,
            x,
            u,
            w,
            m,
            b,
            levels,
        })
    }
}
