//! Finite modules over finite local algebras, given by the action matrix of
//! every basis element.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::{AlgebraError, AlgebraMorphism, Element, FiniteLocalAlgebra};
use crate::linalg::{Mat, Subspace};
use crate::presentation::CompiledAlgebra;

/// Default cap on the number of multipliers tried by exhaustive
/// weak-torsion-freeness checks.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModuleError {
    #[error("expected {expected} action matrices, got {found}")]
    ActionCount { expected: usize, found: usize },
    #[error("action {index} is {rows}x{cols}, expected {dim}x{dim}")]
    ActionShape { index: usize, rows: usize, cols: usize, dim: usize },
    #[error("unit element does not act as the identity")]
    NotUnital,
    #[error("actions of e{0} and e{1} violate the multiplication table")]
    ActionAxiom(usize, usize),
    #[error("no action given for variable `{0}`")]
    MissingAction(String),
    #[error("ring mismatch: the module and the morphism do not share a ring")]
    ParentMismatch,
    #[error("subspace is not closed under the ring action")]
    NotInvariant,
    #[error("input is not a relation: sum of x_i m_i is nonzero")]
    NotARelation,
    #[error("expected {expected} entries, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("exhaustive enumeration needs {count} multipliers, over the cap of {cap}; use sampled mode")]
    EnumerationTooLarge { count: u128, cap: u64 },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// A module of finite `F_p`-dimension over a finite local algebra.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteModule {
    ring: Arc<FiniteLocalAlgebra>,
    dim: usize,
    actions: Vec<Mat>,
}

impl FiniteModule {
    /// Validates shapes and the module axioms on every pair of basis
    /// elements.
    pub fn new(ring: Arc<FiniteLocalAlgebra>, dim: usize, actions: Vec<Mat>) -> Result<Self, ModuleError> {
        let d = ring.dim();
        if actions.len() != d {
            return Err(ModuleError::ActionCount { expected: d, found: actions.len() });
        }
        for (index, a) in actions.iter().enumerate() {
            if a.rows() != dim || a.cols() != dim {
                return Err(ModuleError::ActionShape {
                    index,
                    rows: a.rows(),
                    cols: a.cols(),
                    dim,
                });
            }
        }
        let field = ring.field();
        let m = FiniteModule { ring, dim, actions };
        if m.actions[0] != Mat::identity(field, dim) {
            return Err(ModuleError::NotUnital);
        }
        for i in 1..d {
            for j in i..d {
                let lhs = m.actions[i].mul(&m.actions[j]);
                let rhs = m.combination(m.ring.product_of_basis(i, j));
                if lhs != rhs {
                    return Err(ModuleError::ActionAxiom(i, j));
                }
                if i != j && lhs != m.actions[j].mul(&m.actions[i]) {
                    return Err(ModuleError::ActionAxiom(j, i));
                }
            }
        }
        Ok(m)
    }

    fn trusted(ring: Arc<FiniteLocalAlgebra>, dim: usize, actions: Vec<Mat>) -> Self {
        FiniteModule { ring, dim, actions }
    }

    /// Module over a compiled presentation from the action of each
    /// variable. Basis monomials act by the corresponding products.
    pub fn from_variable_actions(algebra: &CompiledAlgebra, dim: usize, vars: &[Mat]) -> Result<Self, ModuleError> {
        let ring = Arc::clone(algebra.algebra());
        let names = algebra.variables();
        if vars.len() != names.len() {
            return Err(ModuleError::ActionCount {
                expected: names.len(),
                found: vars.len(),
            });
        }
        for (index, a) in vars.iter().enumerate() {
            if a.rows() != dim || a.cols() != dim {
                return Err(ModuleError::ActionShape {
                    index,
                    rows: a.rows(),
                    cols: a.cols(),
                    dim,
                });
            }
        }
        let field = ring.field();
        let actions = algebra
            .basis_monomials()
            .iter()
            .map(|m| {
                let mut acc = Mat::identity(field, dim);
                for (i, &e) in m.0.iter().enumerate() {
                    for _ in 0..e {
                        acc = acc.mul(&vars[i]);
                    }
                }
                acc
            })
            .collect();
        Self::new(ring, dim, actions)
    }

    /// `R^k` with basis `e_j ⊗ f_l` at index `l*dim R + j`.
    pub fn free(ring: Arc<FiniteLocalAlgebra>, k: usize) -> Self {
        let d = ring.dim();
        let field = ring.field();
        let actions = (0..d)
            .map(|i| {
                let l = ring.basis_mul_matrix(i);
                let mut a = Mat::zeros(field, k * d, k * d);
                for b in 0..k {
                    for r in 0..d {
                        for c in 0..d {
                            let v = l.get(r, c);
                            if v != 0 {
                                a.set(b * d + r, b * d + c, v);
                            }
                        }
                    }
                }
                a
            })
            .collect();
        Self::trusted(ring, k * d, actions)
    }

    pub fn zero(ring: Arc<FiniteLocalAlgebra>) -> Self {
        Self::free(ring, 0)
    }

    /// `R/m`, one-dimensional with `m` acting by zero.
    pub fn residue_field(ring: Arc<FiniteLocalAlgebra>) -> Self {
        let field = ring.field();
        let actions = (0..ring.dim())
            .map(|i| {
                let mut a = Mat::zeros(field, 1, 1);
                if i == 0 {
                    a.set(0, 0, 1);
                }
                a
            })
            .collect();
        Self::trusted(ring, 1, actions)
    }

    /// Cokernel of `R^a -> R^b` given by a `b × a` matrix over the ring,
    /// with the projection from `R^b`.
    pub fn cokernel(ring: Arc<FiniteLocalAlgebra>, matrix: &[Vec<Element>]) -> Result<(Self, Mat), ModuleError> {
        let b = matrix.len();
        let a = matrix.first().map_or(0, Vec::len);
        for row in matrix {
            if row.len() != a {
                return Err(ModuleError::LengthMismatch { expected: a, found: row.len() });
            }
            for x in row {
                ring.check(x)?;
            }
        }
        let d = ring.dim();
        let free = Self::free(Arc::clone(&ring), b);
        let mut image = Subspace::zero(ring.field(), b * d);
        for c in 0..a {
            let mut col = vec![0; b * d];
            for (r, row) in matrix.iter().enumerate() {
                col[r * d..(r + 1) * d].copy_from_slice(row[c].coords());
            }
            for i in 0..d {
                image.insert(&free.actions[i].mul_vec(&col));
            }
        }
        free.quotient_module(&image)
    }

    /// Cyclic module `R/I`.
    pub fn cyclic(ring: Arc<FiniteLocalAlgebra>, gens: &[Element]) -> Result<Self, ModuleError> {
        let row: Vec<Vec<Element>> = vec![gens.to_vec()];
        let (m, _) = Self::cokernel(ring, &row)?;
        Ok(m)
    }

    pub fn ring(&self) -> &Arc<FiniteLocalAlgebra> {
        &self.ring
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.dim == 0
    }

    pub fn basis_action(&self, i: usize) -> &Mat {
        &self.actions[i]
    }

    pub fn actions(&self) -> &[Mat] {
        &self.actions
    }

    fn combination(&self, coords: &[u64]) -> Mat {
        let mut out = Mat::zeros(self.ring.field(), self.dim, self.dim);
        for (i, &c) in coords.iter().enumerate() {
            if c != 0 {
                out.add_scaled(&self.actions[i], c);
            }
        }
        out
    }

    /// Action matrix of an arbitrary ring element.
    pub fn action_of(&self, a: &Element) -> Mat {
        self.combination(a.coords())
    }

    pub fn act(&self, a: &Element, v: &[u64]) -> Vec<u64> {
        let f = self.ring.field();
        let mut out = vec![0; self.dim];
        for (i, &c) in a.coords().iter().enumerate() {
            if c != 0 {
                let w = self.actions[i].mul_vec(v);
                for (o, x) in out.iter_mut().zip(w) {
                    *o = f.mul_add(*o, c, x);
                }
            }
        }
        out
    }

    pub fn direct_sum(&self, other: &FiniteModule) -> Result<Self, ModuleError> {
        if self.ring != other.ring {
            return Err(ModuleError::ParentMismatch);
        }
        let field = self.ring.field();
        let n = self.dim + other.dim;
        let actions = self
            .actions
            .iter()
            .zip(&other.actions)
            .map(|(a, b)| {
                let mut m = Mat::zeros(field, n, n);
                for r in 0..self.dim {
                    for c in 0..self.dim {
                        m.set(r, c, a.get(r, c));
                    }
                }
                for r in 0..other.dim {
                    for c in 0..other.dim {
                        m.set(self.dim + r, self.dim + c, b.get(r, c));
                    }
                }
                m
            })
            .collect();
        Ok(Self::trusted(Arc::clone(&self.ring), n, actions))
    }

    /// The same vector space viewed over the source of `phi`.
    pub fn restrict_scalars(&self, phi: &AlgebraMorphism) -> Result<Self, ModuleError> {
        if **phi.target() != *self.ring {
            return Err(ModuleError::ParentMismatch);
        }
        let actions = (0..phi.source().dim())
            .map(|j| self.action_of(&phi.image_of_basis(j)))
            .collect();
        Ok(Self::trusted(Arc::clone(phi.source()), self.dim, actions))
    }

    /// `I·M` for the ideal generated by `gens`.
    pub fn submodule_product(&self, gens: &[Element]) -> Subspace {
        let mut s = Subspace::zero(self.ring.field(), self.dim);
        for g in gens {
            let a = self.action_of(g);
            for c in 0..self.dim {
                s.insert(&a.column(c));
            }
        }
        s
    }

    /// `m·M`.
    pub fn max_ideal_times(&self) -> Subspace {
        let mut s = Subspace::zero(self.ring.field(), self.dim);
        for &i in self.ring.min_generator_indices() {
            for c in 0..self.dim {
                s.insert(&self.actions[i].column(c));
            }
        }
        s
    }

    pub fn is_invariant(&self, s: &Subspace) -> bool {
        self.actions.iter().skip(1).all(|a| s.basis().iter().all(|v| s.contains(&a.mul_vec(v))))
    }

    /// `M/S` on the complement spanned by the non-pivot coordinates of `S`,
    /// with the projection matrix.
    pub fn quotient_module(&self, s: &Subspace) -> Result<(Self, Mat), ModuleError> {
        if s.ambient() != self.dim {
            return Err(ModuleError::LengthMismatch { expected: self.dim, found: s.ambient() });
        }
        if !self.is_invariant(s) {
            return Err(ModuleError::NotInvariant);
        }
        let field = self.ring.field();
        let keep = s.non_pivots();
        let q = keep.len();
        let project = |v: &[u64]| -> Vec<u64> {
            let r = s.reduce(v);
            keep.iter().map(|&k| r[k]).collect()
        };
        let mut proj = Mat::zeros(field, q, self.dim);
        for c in 0..self.dim {
            let mut e = vec![0; self.dim];
            e[c] = 1;
            for (r, x) in project(&e).into_iter().enumerate() {
                proj.set(r, c, x);
            }
        }
        let actions = self
            .actions
            .iter()
            .map(|a| {
                let mut m = Mat::zeros(field, q, q);
                for (c, &k) in keep.iter().enumerate() {
                    for (r, x) in project(&a.column(k)).into_iter().enumerate() {
                        m.set(r, c, x);
                    }
                }
                m
            })
            .collect();
        Ok((Self::trusted(Arc::clone(&self.ring), q, actions), proj))
    }

    /// Freeness test. For finite modules over an Artin local ring this is
    /// flatness.
    pub fn is_flat(&self) -> FlatnessVerdict {
        let d = self.ring.dim();
        let mm = self.max_ideal_times();
        let g = self.dim - mm.dim();
        let is_flat = self.dim == g * d;
        let basis = is_flat.then(|| {
            let mut span = mm.clone();
            let mut lifts = Vec::with_capacity(g);
            for c in 0..self.dim {
                let mut e = vec![0; self.dim];
                e[c] = 1;
                if span.insert(&e) {
                    lifts.push(e);
                }
            }
            let cols: Vec<Vec<u64>> = lifts
                .iter()
                .flat_map(|v| self.actions.iter().map(move |a| a.mul_vec(v)))
                .collect();
            let rank = Mat::from_columns(self.ring.field(), self.dim, &cols).map(|m| m.rank());
            assert_eq!(rank, Ok(self.dim), "lifted generators do not give a free basis");
            lifts
        });
        FlatnessVerdict {
            is_flat,
            rank: is_flat.then_some(g),
            generator_count: g,
            dim: self.dim,
            free_basis: basis,
        }
    }

    /// Looks for `λ` in `m` and `v` outside `m·M` with `λ·v = 0`.
    pub fn is_weakly_torsion_free(&self, mode: WtfMode) -> Result<WtfVerdict, ModuleError> {
        let mm = self.max_ideal_times();
        let witness_for = |lambda: &Element| -> Option<Vec<u64>> {
            if lambda.is_zero() {
                return None;
            }
            let k = self.action_of(lambda).kernel();
            k.basis().iter().find(|v| !mm.contains(v)).cloned()
        };
        let d = self.ring.dim();
        let p = self.ring.field().p();
        let (witness, tried) = match mode {
            WtfMode::Exhaustive { cap } => {
                let total = (p as u128).checked_pow((d - 1) as u32).unwrap_or(u128::MAX);
                let count = (total - 1) / (p as u128 - 1);
                if count > cap as u128 {
                    return Err(ModuleError::EnumerationTooLarge { count, cap });
                }
                let found = (1..total as u64)
                    .into_par_iter()
                    .filter_map(|n| {
                        let lambda = self.indexed_multiplier(n)?;
                        witness_for(&lambda).map(|v| (lambda, v))
                    })
                    .find_first(|_| true);
                (found, count as u64)
            }
            WtfMode::Sampled { trials, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut found = None;
                for _ in 0..trials {
                    let mut coords = vec![0; d];
                    for c in coords.iter_mut().skip(1) {
                        *c = rng.gen_range(0..p);
                    }
                    let lambda = self.ring.element(coords)?;
                    if let Some(v) = witness_for(&lambda) {
                        found = Some((lambda, v));
                        break;
                    }
                }
                (found, trials)
            }
        };
        if let Some((lambda, v)) = &witness {
            assert!(!lambda.is_zero() && self.act(lambda, v).iter().all(|&x| x == 0) && !mm.contains(v));
        }
        Ok(WtfVerdict {
            holds: witness.is_none(),
            witness,
            mode,
            multipliers_tried: tried,
        })
    }

    /// `n` read in base `p` gives the coordinates on `e_1..e_{d-1}`, least
    /// significant first, so low basis elements are tried early. Only
    /// multipliers whose last nonzero coordinate is 1 are kept, one per line
    /// through the origin.
    fn indexed_multiplier(&self, mut n: u64) -> Option<Element> {
        let d = self.ring.dim();
        let p = self.ring.field().p();
        let mut coords = vec![0; d];
        for c in coords.iter_mut().skip(1) {
            *c = n % p;
            n /= p;
        }
        let lead = coords.iter().skip(1).rev().find(|&&c| c != 0)?;
        if *lead != 1 {
            return None;
        }
        Some(Element::from_coords(coords))
    }

    /// Writes each `m_i` of a relation `Σ x_i m_i = 0` as `Σ_k x_k d_ik`.
    /// `None` means some `m_i` lies outside `J_x M`.
    pub fn resolve_relation(&self, x: &[Element], ms: &[Vec<u64>]) -> Result<Option<Vec<Vec<Vec<u64>>>>, ModuleError> {
        let n = x.len();
        if ms.len() != n {
            return Err(ModuleError::LengthMismatch { expected: n, found: ms.len() });
        }
        let f = self.ring.field();
        let mut total = vec![0; self.dim];
        for (xi, mi) in x.iter().zip(ms) {
            self.ring.check(xi)?;
            if mi.len() != self.dim {
                return Err(ModuleError::LengthMismatch { expected: self.dim, found: mi.len() });
            }
            for (t, v) in total.iter_mut().zip(self.act(xi, mi)) {
                *t = f.add(*t, v);
            }
        }
        if total.iter().any(|&c| c != 0) {
            return Err(ModuleError::NotARelation);
        }
        let solver = self.stacked(x).solver();
        let mut out = Vec::with_capacity(n);
        for mi in ms {
            let Some(sol) = solver.solve(mi) else {
                return Ok(None);
            };
            let parts: Vec<Vec<u64>> = sol.chunks(self.dim.max(1)).map(<[u64]>::to_vec).collect();
            let parts = if self.dim == 0 { vec![Vec::new(); n] } else { parts };
            out.push(parts);
        }
        for (mi, parts) in ms.iter().zip(&out) {
            let mut acc = vec![0; self.dim];
            for (xk, dk) in x.iter().zip(parts) {
                for (a, v) in acc.iter_mut().zip(self.act(xk, dk)) {
                    *a = f.add(*a, v);
                }
            }
            assert_eq!(&acc, mi, "relation representation does not re-verify");
        }
        Ok(Some(out))
    }

    /// `[ρ(x_1) | … | ρ(x_n)]`
    pub fn stacked(&self, x: &[Element]) -> Mat {
        let blocks: Vec<Mat> = x.iter().map(|xi| self.action_of(xi)).collect();
        let refs: Vec<&Mat> = blocks.iter().collect();
        Mat::hstack(self.ring.field(), self.dim, &refs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatnessVerdict {
    pub is_flat: bool,
    pub rank: Option<usize>,
    /// `dim M/mM`
    pub generator_count: usize,
    pub dim: usize,
    /// lifted generators forming a free basis, when flat
    pub free_basis: Option<Vec<Vec<u64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WtfMode {
    Exhaustive { cap: u64 },
    Sampled { trials: u64, seed: u64 },
}

impl WtfMode {
    pub fn exhaustive() -> Self {
        WtfMode::Exhaustive { cap: DEFAULT_ENUMERATION_CAP }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WtfVerdict {
    /// In sampled mode `true` only means no witness was found.
    pub holds: bool,
    pub witness: Option<(Element, Vec<u64>)>,
    pub mode: WtfMode,
    pub multipliers_tried: u64,
}
