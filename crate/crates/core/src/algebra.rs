//! Finite-dimensional commutative local algebras over `F_p` given by
//! structure constants.
//!
//! Basis conventions: `e_0 = 1` and the maximal ideal is spanned by
//! `e_1, ..., e_{d-1}`. Every constructor in the crate (presentations,
//! truncations, quotients) produces algebras in this normal form, so an
//! element is a unit exactly when its `e_0` coordinate is nonzero.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::field::FieldConfig;
use crate::linalg::{LinalgError, Mat, Subspace};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("algebra must have dimension at least 1")]
    ZeroDimension,
    #[error("expected {expected} structure-constant vectors of length {dim}, got {found}")]
    BadStructureConstants { expected: usize, dim: usize, found: usize },
    #[error("e_0 is not a unit: e_0 * e_{0} != e_{0}")]
    NotUnital(usize),
    #[error("not commutative: e_{0} * e_{1} != e_{1} * e_{0}")]
    NotCommutative(usize, usize),
    #[error("not associative: (e_{0} e_{1}) e_{2} != e_{0} (e_{1} e_{2})")]
    NotAssociative(usize, usize, usize),
    #[error("span(e_1..e_{{d-1}}) is not an ideal: e_{0} * e_{1} has a nonzero unit coordinate, so it is a non-unit outside the maximal ideal")]
    MaxIdealNotClosed(usize, usize),
    #[error("not local: e_{witness} lies in span(e_1..e_{{d-1}}) but is not nilpotent")]
    NotNilpotent { witness: usize },
    #[error("element belongs to an algebra of dimension {found}, expected {expected}")]
    ParentMismatch { expected: usize, found: usize },
    #[error("element is not a unit")]
    NotAUnit,
    #[error("cannot take the quotient by the whole algebra")]
    QuotientByWholeRing,
    #[error("ideal is not contained in the maximal ideal")]
    IdealNotInMaxIdeal,
    #[error("subspace is not an ideal: e_{basis} times a generator leaves it")]
    NotAnIdeal { basis: usize },
    #[error("morphism does not send 1 to 1")]
    MorphismNotUnital,
    #[error("morphism is not multiplicative on e_{0} * e_{1}")]
    MorphismNotMultiplicative(usize, usize),
    #[error("morphism is not local: image of e_{0} is not in the maximal ideal")]
    MorphismNotLocal(usize),
    #[error("matrix is {rows}x{cols}; expected {expected_rows}x{expected_cols}")]
    MorphismShape { rows: usize, cols: usize, expected_rows: usize, expected_cols: usize },
    #[error("determinant size {0} exceeds the supported maximum of 16")]
    DeterminantTooLarge(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// An element of a [`FiniteLocalAlgebra`], stored as basis coordinates.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Element {
    coords: Vec<u64>,
}

impl Element {
    pub(crate) fn from_coords(coords: Vec<u64>) -> Self {
        Element { coords }
    }

    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<u64> {
        self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

/// A finite-dimensional commutative local `F_p`-algebra with residue field
/// `F_p`.
#[derive(Clone)]
pub struct FiniteLocalAlgebra {
    field: FieldConfig,
    dim: usize,
    products: Vec<Vec<u64>>,
    mul_mats: Vec<Mat>,
    max_ideal: Subspace,
    max_ideal_sq: Subspace,
    min_gens: Vec<usize>,
    nilpotency: usize,
    labels: Vec<String>,
}

impl PartialEq for FiniteLocalAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field && self.dim == other.dim && self.products == other.products
    }
}

impl Eq for FiniteLocalAlgebra {}

impl fmt::Debug for FiniteLocalAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteLocalAlgebra")
            .field("field", &self.field)
            .field("dim", &self.dim)
            .field("labels", &self.labels)
            .finish()
    }
}

impl FiniteLocalAlgebra {
    /// Builds and fully validates an algebra from structure constants:
    /// `products[i * dim + j]` is the coordinate vector of `e_i e_j`.
    ///
    /// Validation covers unit, commutativity, associativity on all basis
    /// triples, closure of `span(e_1..)` under multiplication, and nilpotency.
    pub fn new(field: FieldConfig, dim: usize, products: Vec<Vec<u64>>, labels: Option<Vec<String>>) -> Result<Self, AlgebraError> {
        Self::build(field, dim, products, labels, true)
    }

    /// Constructor for callers that produce structure constants which are
    /// correct by construction (normal forms, quotients, truncations). Still
    /// checks closure and nilpotency since the derived data depend on them.
    pub(crate) fn from_trusted(field: FieldConfig, dim: usize, products: Vec<Vec<u64>>, labels: Vec<String>) -> Result<Self, AlgebraError> {
        Self::build(field, dim, products, Some(labels), false)
    }

    fn build(field: FieldConfig, dim: usize, products: Vec<Vec<u64>>, labels: Option<Vec<String>>, validate: bool) -> Result<Self, AlgebraError> {
        if dim == 0 {
            return Err(AlgebraError::ZeroDimension);
        }
        if products.len() != dim * dim || products.iter().any(|v| v.len() != dim) {
            return Err(AlgebraError::BadStructureConstants {
                expected: dim * dim,
                dim,
                found: products.len(),
            });
        }
        let products: Vec<Vec<u64>> = products
            .into_iter()
            .map(|v| v.into_iter().map(|x| field.reduce(x)).collect())
            .collect();
        for i in 1..dim {
            for j in 1..dim {
                if products[i * dim + j][0] != 0 {
                    return Err(AlgebraError::MaxIdealNotClosed(i, j));
                }
            }
        }
        let mul_mats = (0..dim)
            .map(|i| {
                let mut m = Mat::zeros(field, dim, dim);
                for j in 0..dim {
                    for (k, &c) in products[i * dim + j].iter().enumerate() {
                        if c != 0 {
                            m.set(k, j, c);
                        }
                    }
                }
                m
            })
            .collect();
        let labels = labels.unwrap_or_else(|| {
            (0..dim)
                .map(|i| if i == 0 { "1".to_string() } else { format!("e{i}") })
                .collect()
        });
        let mut max_ideal = Subspace::zero(field, dim);
        for i in 1..dim {
            let mut v = vec![0; dim];
            v[i] = 1;
            max_ideal.insert(&v);
        }
        let mut alg = FiniteLocalAlgebra {
            field,
            dim,
            products,
            mul_mats,
            max_ideal,
            max_ideal_sq: Subspace::zero(field, dim),
            min_gens: Vec::new(),
            nilpotency: 1,
            labels,
        };
        if validate {
            alg.validate()?;
        }
        let mut sq = Subspace::zero(field, dim);
        for i in 1..dim {
            for j in i..dim {
                if sq.dim() + 1 >= dim {
                    break;
                }
                sq.insert(&alg.products[i * dim + j]);
            }
        }
        let mut gens_span = sq.clone();
        let mut min_gens = Vec::new();
        for i in 1..dim {
            let mut v = vec![0; dim];
            v[i] = 1;
            if gens_span.insert(&v) {
                min_gens.push(i);
            }
        }
        alg.max_ideal_sq = sq;
        alg.min_gens = min_gens;
        alg.nilpotency = alg.compute_nilpotency()?;
        Ok(alg)
    }

    fn compute_nilpotency(&self) -> Result<usize, AlgebraError> {
        // In a commutative ring the nilpotents form an ideal, so it is enough
        // that each basis element of m is nilpotent; then m^d = 0.
        for i in 1..self.dim {
            if !self.pow(&self.basis_element(i), self.dim as u64).is_zero() {
                return Err(AlgebraError::NotNilpotent { witness: i });
            }
        }
        // With m nilpotent, the minimal generators generate m as an ideal.
        let mut power = self.max_ideal.clone();
        let mut t = 1;
        while !power.is_zero() {
            let next = Subspace::span(
                self.field,
                self.dim,
                self.min_gens
                    .iter()
                    .flat_map(|&g| power.basis().iter().map(move |v| self.mul_mats[g].mul_vec(v))),
            );
            assert!(next.dim() < power.dim(), "powers of a nilpotent ideal must shrink");
            power = next;
            t += 1;
        }
        Ok(t)
    }

    /// Full axiom check on basis elements.
    pub fn validate(&self) -> Result<(), AlgebraError> {
        let d = self.dim;
        for j in 0..d {
            let mut ej = vec![0; d];
            ej[j] = 1;
            if self.products[j] != ej || self.products[j * d] != ej {
                return Err(AlgebraError::NotUnital(j));
            }
        }
        for i in 0..d {
            for j in i + 1..d {
                if self.products[i * d + j] != self.products[j * d + i] {
                    return Err(AlgebraError::NotCommutative(i, j));
                }
            }
        }
        for i in 1..d {
            for j in 1..d {
                let ij = Element { coords: self.products[i * d + j].clone() };
                for l in 1..d {
                    let left = self.mul(&ij, &self.basis_element(l));
                    let jl = Element { coords: self.products[j * d + l].clone() };
                    let right = self.mul(&self.basis_element(i), &jl);
                    if left != right {
                        return Err(AlgebraError::NotAssociative(i, j, l));
                    }
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn field(&self) -> FieldConfig {
        self.field
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Coordinates of `e_i e_j`.
    pub fn product_of_basis(&self, i: usize, j: usize) -> &[u64] {
        &self.products[i * self.dim + j]
    }

    /// Matrix of multiplication by `e_i`.
    pub fn basis_mul_matrix(&self, i: usize) -> &Mat {
        &self.mul_mats[i]
    }

    pub fn max_ideal(&self) -> &Subspace {
        &self.max_ideal
    }

    pub fn max_ideal_squared(&self) -> &Subspace {
        &self.max_ideal_sq
    }

    /// Smallest `t >= 1` with `m^t = 0`.
    pub fn nilpotency_index(&self) -> usize {
        self.nilpotency
    }

    /// Basis indices of the deterministic minimal generators of `m`: the
    /// first `e_i` (in index order) that are independent modulo `m^2`.
    pub fn min_generator_indices(&self) -> &[usize] {
        &self.min_gens
    }

    pub fn min_generators(&self) -> Vec<Element> {
        self.min_gens.iter().map(|&i| self.basis_element(i)).collect()
    }

    pub fn element(&self, coords: Vec<u64>) -> Result<Element, AlgebraError> {
        if coords.len() != self.dim {
            return Err(AlgebraError::ParentMismatch {
                expected: self.dim,
                found: coords.len(),
            });
        }
        Ok(Element {
            coords: coords.into_iter().map(|x| self.field.reduce(x)).collect(),
        })
    }

    pub fn zero(&self) -> Element {
        Element { coords: vec![0; self.dim] }
    }

    pub fn one(&self) -> Element {
        self.scalar(1)
    }

    pub fn scalar(&self, c: u64) -> Element {
        let mut coords = vec![0; self.dim];
        coords[0] = self.field.reduce(c);
        Element { coords }
    }

    pub fn basis_element(&self, i: usize) -> Element {
        let mut coords = vec![0; self.dim];
        coords[i] = 1;
        Element { coords }
    }

    pub fn check(&self, a: &Element) -> Result<(), AlgebraError> {
        if a.coords.len() != self.dim {
            return Err(AlgebraError::ParentMismatch {
                expected: self.dim,
                found: a.coords.len(),
            });
        }
        Ok(())
    }

    pub fn add(&self, a: &Element, b: &Element) -> Element {
        let f = self.field;
        Element {
            coords: a.coords.iter().zip(&b.coords).map(|(&x, &y)| f.add(x, y)).collect(),
        }
    }

    pub fn sub(&self, a: &Element, b: &Element) -> Element {
        let f = self.field;
        Element {
            coords: a.coords.iter().zip(&b.coords).map(|(&x, &y)| f.sub(x, y)).collect(),
        }
    }

    pub fn neg(&self, a: &Element) -> Element {
        let f = self.field;
        Element {
            coords: a.coords.iter().map(|&x| f.neg(x)).collect(),
        }
    }

    pub fn scale(&self, a: &Element, c: u64) -> Element {
        let f = self.field;
        Element {
            coords: a.coords.iter().map(|&x| f.mul(x, c)).collect(),
        }
    }

    /// Bilinear extension of the structure constants. Panics on a dimension
    /// mismatch; see [`FiniteLocalAlgebra::try_mul`].
    pub fn mul(&self, a: &Element, b: &Element) -> Element {
        assert!(a.coords.len() == self.dim && b.coords.len() == self.dim, "element parent mismatch");
        let f = self.field;
        let d = self.dim;
        let mut out = vec![0u64; d];
        for (i, &ai) in a.coords.iter().enumerate() {
            if ai == 0 {
                continue;
            }
            for (j, &bj) in b.coords.iter().enumerate() {
                if bj == 0 {
                    continue;
                }
                let c = f.mul(ai, bj);
                for (o, &s) in out.iter_mut().zip(&self.products[i * d + j]) {
                    if s != 0 {
                        *o = f.mul_add(*o, c, s);
                    }
                }
            }
        }
        Element { coords: out }
    }

    pub fn try_mul(&self, a: &Element, b: &Element) -> Result<Element, AlgebraError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.mul(a, b))
    }

    pub fn pow(&self, a: &Element, e: u64) -> Element {
        let mut acc = self.one();
        let mut base = a.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            e >>= 1;
            if e > 0 {
                base = self.mul(&base, &base);
            }
        }
        acc
    }

    /// Matrix of multiplication by `a`.
    pub fn mul_matrix(&self, a: &Element) -> Mat {
        let mut m = Mat::zeros(self.field, self.dim, self.dim);
        for (i, &c) in a.coords.iter().enumerate() {
            m.add_scaled(&self.mul_mats[i], c);
        }
        m
    }

    pub fn in_max_ideal(&self, a: &Element) -> bool {
        a.coords[0] == 0
    }

    pub fn is_unit(&self, a: &Element) -> bool {
        !self.in_max_ideal(a)
    }

    /// Inverse of a unit. Writes `a = c (1 + n)` with `n` nilpotent and sums
    /// the finite geometric series in `-n`.
    pub fn invert(&self, a: &Element) -> Result<Element, AlgebraError> {
        self.check(a)?;
        if !self.is_unit(a) {
            return Err(AlgebraError::NotAUnit);
        }
        let f = self.field;
        let cinv = f.inv(a.coords[0]);
        let mut n = self.scale(a, cinv);
        n.coords[0] = 0;
        let minus_n = self.neg(&n);
        let mut term = self.one();
        let mut sum = self.one();
        for _ in 1..self.nilpotency {
            term = self.mul(&term, &minus_n);
            if term.is_zero() {
                break;
            }
            sum = self.add(&sum, &term);
        }
        Ok(self.scale(&sum, cinv))
    }

    /// Smallest ideal containing `gens`: `span{e_i g}`.
    pub fn ideal_generated(&self, gens: &[Element]) -> Result<IdealSpan, AlgebraError> {
        for g in gens {
            self.check(g)?;
        }
        let space = Subspace::span(
            self.field,
            self.dim,
            gens.iter()
                .filter(|g| !g.is_zero())
                .flat_map(|g| (0..self.dim).map(move |i| self.mul_mats[i].mul_vec(&g.coords))),
        );
        Ok(IdealSpan { space })
    }

    /// Wraps a subspace as an ideal after checking closure under `e_i`.
    pub fn ideal_from_subspace(&self, space: Subspace) -> Result<IdealSpan, AlgebraError> {
        if space.ambient() != self.dim {
            return Err(AlgebraError::ParentMismatch {
                expected: self.dim,
                found: space.ambient(),
            });
        }
        for i in 1..self.dim {
            for v in space.basis() {
                if !space.contains(&self.mul_mats[i].mul_vec(v)) {
                    return Err(AlgebraError::NotAnIdeal { basis: i });
                }
            }
        }
        Ok(IdealSpan { space })
    }

    pub fn max_ideal_span(&self) -> IdealSpan {
        IdealSpan { space: self.max_ideal.clone() }
    }

    /// `I * J = span{a b}`.
    pub fn ideal_product(&self, i: &IdealSpan, j: &IdealSpan) -> IdealSpan {
        let space = Subspace::span(
            self.field,
            self.dim,
            i.space.basis().iter().flat_map(|a| {
                let ma = self.mul_matrix(&Element { coords: a.clone() });
                j.space.basis().iter().map(move |b| ma.mul_vec(b)).collect::<Vec<_>>()
            }),
        );
        IdealSpan { space }
    }

    /// `A / I` together with the projection. The quotient basis is the set of
    /// non-pivot coordinates of `I`'s echelon basis, so `e_0` survives as the
    /// unit.
    pub fn quotient(self: &Arc<Self>, ideal: &IdealSpan) -> Result<(Arc<FiniteLocalAlgebra>, AlgebraMorphism), AlgebraError> {
        if ideal.space.ambient() != self.dim {
            return Err(AlgebraError::ParentMismatch {
                expected: self.dim,
                found: ideal.space.ambient(),
            });
        }
        if ideal.space.is_full() {
            return Err(AlgebraError::QuotientByWholeRing);
        }
        if !ideal.space.is_subspace_of(&self.max_ideal) {
            return Err(AlgebraError::IdealNotInMaxIdeal);
        }
        let keep = ideal.space.non_pivots();
        let qd = keep.len();
        let project = |v: &[u64]| -> Vec<u64> {
            let r = ideal.space.reduce(v);
            keep.iter().map(|&k| r[k]).collect()
        };
        let mut products = Vec::with_capacity(qd * qd);
        for &a in &keep {
            for &b in &keep {
                products.push(project(&self.products[a * self.dim + b]));
            }
        }
        let labels = keep.iter().map(|&k| self.labels[k].clone()).collect();
        let q = Arc::new(FiniteLocalAlgebra::from_trusted(self.field, qd, products, labels)?);
        let mut matrix = Mat::zeros(self.field, qd, self.dim);
        for j in 0..self.dim {
            let mut e = vec![0; self.dim];
            e[j] = 1;
            for (r, x) in project(&e).into_iter().enumerate() {
                matrix.set(r, j, x);
            }
        }
        let proj = AlgebraMorphism {
            source: Arc::clone(self),
            target: Arc::clone(&q),
            matrix,
        };
        Ok((q, proj))
    }

    /// Division-free determinant of a square matrix of elements by cofactor
    /// expansion, memoised over column subsets (`n <= 16`).
    pub fn det(&self, entries: &[Vec<Element>]) -> Result<Element, AlgebraError> {
        let n = entries.len();
        if n > 16 {
            return Err(AlgebraError::DeterminantTooLarge(n));
        }
        for row in entries {
            if row.len() != n {
                return Err(AlgebraError::MorphismShape {
                    rows: n,
                    cols: row.len(),
                    expected_rows: n,
                    expected_cols: n,
                });
            }
            for e in row {
                self.check(e)?;
            }
        }
        let full = (1u32 << n) - 1;
        let mut table: HashMap<u32, Element> = HashMap::new();
        table.insert(0, self.one());
        // Subsets by increasing size; a subset of size k uses the last k rows.
        let mut by_size: Vec<Vec<u32>> = vec![Vec::new(); n + 1];
        for s in 0..=full {
            by_size[s.count_ones() as usize].push(s);
        }
        for (k, sets) in by_size.iter().enumerate().skip(1) {
            let row = n - k;
            for &s in sets {
                let mut acc = self.zero();
                let mut q = 0;
                for j in 0..n {
                    if s & (1 << j) == 0 {
                        continue;
                    }
                    let a = &entries[row][j];
                    if !a.is_zero() {
                        let sub = &table[&(s & !(1 << j))];
                        let term = self.mul(a, sub);
                        acc = if q % 2 == 0 { self.add(&acc, &term) } else { self.sub(&acc, &term) };
                    }
                    q += 1;
                }
                table.insert(s, acc);
            }
        }
        Ok(table.remove(&full).expect("full subset computed"))
    }

    /// Human-readable rendering using the basis labels, e.g. `x^2 + 2*x*y`.
    pub fn format_element(&self, a: &Element) -> String {
        let mut parts = Vec::new();
        for (i, &c) in a.coords.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let label = &self.labels[i];
            parts.push(match (c, label.as_str()) {
                (_, "1") => c.to_string(),
                (1, _) => label.clone(),
                _ => format!("{c}*{label}"),
            });
        }
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join(" + ")
        }
    }
}

/// An ideal of a [`FiniteLocalAlgebra`], as a multiplication-closed subspace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdealSpan {
    space: Subspace,
}

impl IdealSpan {
    pub fn space(&self) -> &Subspace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn contains(&self, a: &Element) -> bool {
        self.space.contains(&a.coords)
    }

    pub fn is_zero(&self) -> bool {
        self.space.is_zero()
    }

    /// Echelon basis as elements.
    pub fn basis(&self) -> Vec<Element> {
        self.space.basis().iter().map(|v| Element { coords: v.clone() }).collect()
    }
}

/// A local homomorphism `A -> B` given by its matrix on coordinates
/// (`dim B x dim A`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgebraMorphism {
    source: Arc<FiniteLocalAlgebra>,
    target: Arc<FiniteLocalAlgebra>,
    matrix: Mat,
}

impl AlgebraMorphism {
    /// Validates unitality, multiplicativity on all basis pairs, and locality.
    pub fn new(source: Arc<FiniteLocalAlgebra>, target: Arc<FiniteLocalAlgebra>, matrix: Mat) -> Result<Self, AlgebraError> {
        if matrix.rows() != target.dim || matrix.cols() != source.dim {
            return Err(AlgebraError::MorphismShape {
                rows: matrix.rows(),
                cols: matrix.cols(),
                expected_rows: target.dim,
                expected_cols: source.dim,
            });
        }
        let phi = AlgebraMorphism { source, target, matrix };
        phi.validate()?;
        Ok(phi)
    }

    pub fn identity(a: Arc<FiniteLocalAlgebra>) -> Self {
        let matrix = Mat::identity(a.field, a.dim);
        AlgebraMorphism {
            source: Arc::clone(&a),
            target: a,
            matrix,
        }
    }

    /// The morphism sending `e_j` to `images[j]`, validated.
    pub fn from_basis_images(source: Arc<FiniteLocalAlgebra>, target: Arc<FiniteLocalAlgebra>, images: &[Element]) -> Result<Self, AlgebraError> {
        let cols: Vec<Vec<u64>> = images.iter().map(|e| e.coords.clone()).collect();
        for e in images {
            target.check(e)?;
        }
        let matrix = Mat::from_columns(target.field, target.dim, &cols)?;
        Self::new(source, target, matrix)
    }

    fn validate(&self) -> Result<(), AlgebraError> {
        let (a, b) = (&self.source, &self.target);
        if self.apply(&a.one()) != b.one() {
            return Err(AlgebraError::MorphismNotUnital);
        }
        for i in 1..a.dim {
            if !b.in_max_ideal(&self.image_of_basis(i)) {
                return Err(AlgebraError::MorphismNotLocal(i));
            }
        }
        for i in 1..a.dim {
            let pi = self.image_of_basis(i);
            for j in i..a.dim {
                let lhs = self.apply(&Element { coords: a.products[i * a.dim + j].clone() });
                let rhs = b.mul(&pi, &self.image_of_basis(j));
                if lhs != rhs {
                    return Err(AlgebraError::MorphismNotMultiplicative(i, j));
                }
            }
        }
        Ok(())
    }

    pub fn source(&self) -> &Arc<FiniteLocalAlgebra> {
        &self.source
    }

    pub fn target(&self) -> &Arc<FiniteLocalAlgebra> {
        &self.target
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    pub fn image_of_basis(&self, i: usize) -> Element {
        Element { coords: self.matrix.column(i) }
    }

    pub fn apply(&self, a: &Element) -> Element {
        Element {
            coords: self.matrix.mul_vec(&a.coords),
        }
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AlgebraMorphism) -> Result<AlgebraMorphism, AlgebraError> {
        if *inner.target != *self.source {
            return Err(AlgebraError::ParentMismatch {
                expected: self.source.dim,
                found: inner.target.dim,
            });
        }
        Ok(AlgebraMorphism {
            source: Arc::clone(&inner.source),
            target: Arc::clone(&self.target),
            matrix: self.matrix.mul(&inner.matrix),
        })
    }

    /// Images of the minimal generators of `m_A`.
    pub fn images_of_min_generators(&self) -> Vec<Element> {
        self.source.min_gens.iter().map(|&i| self.image_of_basis(i)).collect()
    }

    /// `m_A B`, the ideal generated by the image of the maximal ideal.
    pub fn extended_max_ideal(&self) -> IdealSpan {
        self.target
            .ideal_generated(&self.images_of_min_generators())
            .expect("images lie in the target")
    }

    /// The fibre ring `B / m_A B` with its projection from `B`.
    pub fn base_change_fiber(&self) -> Result<(Arc<FiniteLocalAlgebra>, AlgebraMorphism), AlgebraError> {
        self.target.quotient(&self.extended_max_ideal())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u64) -> FieldConfig {
        FieldConfig::new(p).unwrap()
    }

    /// k[x]/(x^n) with basis 1, x, ..., x^{n-1}.
    pub(crate) fn truncated_line(field: FieldConfig, n: usize) -> FiniteLocalAlgebra {
        let mut products = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let mut v = vec![0; n];
                if i + j < n {
                    v[i + j] = 1;
                }
                products.push(v);
            }
        }
        FiniteLocalAlgebra::new(field, n, products, None).unwrap()
    }

    /// F_p[x,y]/(x^2, y^2) with basis 1, x, y, xy.
    fn dual_square(field: FieldConfig) -> FiniteLocalAlgebra {
        let idx = |a: usize, b: usize| a + 2 * b;
        let mut products = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                let (ia, ib) = (i % 2, i / 2);
                let (ja, jb) = (j % 2, j / 2);
                let mut v = vec![0; 4];
                if ia + ja < 2 && ib + jb < 2 {
                    v[idx(ia + ja, ib + jb)] = 1;
                }
                products.push(v);
            }
        }
        FiniteLocalAlgebra::new(field, 4, products, None).unwrap()
    }

    #[test]
    fn multiply_examples() {
        let a = truncated_line(f(2), 2);
        let x = a.basis_element(1);
        assert_eq!(a.mul(&a.one(), &x), x);
        assert!(a.mul(&x, &x).is_zero());
        let b = dual_square(f(2));
        let s = b.add(&b.basis_element(1), &b.basis_element(2));
        assert!(b.mul(&s, &s).is_zero());
    }

    #[test]
    fn units_and_inverses() {
        let a = truncated_line(f(2), 2);
        assert!(a.is_unit(&a.one()));
        assert_eq!(a.invert(&a.one()).unwrap(), a.one());
        let x = a.basis_element(1);
        assert!(!a.is_unit(&x));
        assert_eq!(a.invert(&x), Err(AlgebraError::NotAUnit));
        let u = a.add(&a.one(), &x);
        assert_eq!(a.invert(&u).unwrap(), u);

        let c = truncated_line(f(5), 5);
        let v = c.element(vec![3, 1, 4, 0, 2]).unwrap();
        let vi = c.invert(&v).unwrap();
        assert_eq!(c.mul(&v, &vi), c.one());
    }

    #[test]
    fn ideal_generated_examples() {
        let b = dual_square(f(2));
        assert!(b.ideal_generated(&[b.zero()]).unwrap().is_zero());
        assert!(b.ideal_generated(&[b.one()]).unwrap().space().is_full());
        let ix = b.ideal_generated(&[b.basis_element(1)]).unwrap();
        assert_eq!(ix.dim(), 2);
        assert!(ix.contains(&b.basis_element(1)));
        assert!(ix.contains(&b.basis_element(3)));
    }

    #[test]
    fn quotients() {
        let a = Arc::new(truncated_line(f(3), 4));
        let (q, proj) = a.quotient(&a.ideal_generated(&[]).unwrap()).unwrap();
        assert_eq!(*q, *a);
        assert_eq!(proj.matrix(), &Mat::identity(f(3), 4));

        let x2 = a.basis_element(2);
        let (q, proj) = a.quotient(&a.ideal_generated(&[x2]).unwrap()).unwrap();
        assert_eq!(q.dim(), 2);
        let y = q.basis_element(1);
        assert!(q.mul(&y, &y).is_zero());
        assert_eq!(proj.apply(&a.basis_element(1)), y);

        assert_eq!(
            a.quotient(&a.ideal_generated(&[a.one()]).unwrap()).unwrap_err(),
            AlgebraError::QuotientByWholeRing
        );

        let b = Arc::new(dual_square(f(2)));
        let (q, _) = b.quotient(&b.ideal_generated(&[b.basis_element(1)]).unwrap()).unwrap();
        assert_eq!(*q, truncated_line(f(2), 2));
    }

    #[test]
    fn rejects_bad_structure_constants() {
        let field = f(2);
        // e1 * e1 = e1: span(e1) is closed but not nilpotent (k x k).
        let products = vec![vec![1, 0], vec![0, 1], vec![0, 1], vec![0, 1]];
        assert!(matches!(
            FiniteLocalAlgebra::new(field, 2, products, None),
            Err(AlgebraError::NotNilpotent { witness: 1 })
        ));
        // e1 * e1 = 1: not local.
        let products = vec![vec![1, 0], vec![0, 1], vec![0, 1], vec![1, 0]];
        assert_eq!(
            FiniteLocalAlgebra::new(field, 2, products, None),
            Err(AlgebraError::MaxIdealNotClosed(1, 1))
        );
        // Non-commutative: e1 e2 = e3 but e2 e1 = 0.
        let mut products = truncated_line(field, 4).products.clone();
        for v in products.iter_mut() {
            v.iter_mut().for_each(|x| *x = 0);
        }
        for j in 0..4 {
            products[j][j] = 1;
            products[j * 4][j] = 1;
        }
        products[4 + 2][3] = 1;
        assert_eq!(
            FiniteLocalAlgebra::new(field, 4, products.clone(), None),
            Err(AlgebraError::NotCommutative(1, 2))
        );
        // Commutative but not associative: e1 e1 = e2, e1 e2 = 0, e2 e2 = ... e1 e3 = e3? Use
        // e1*e1 = e2, e2*e1 = e3 (and symmetric), e1*e2... fix via (e1 e1) e1 = e2 e1 = e3,
        // e1 (e1 e1) = e1 e2 = e3 -- associative. Break with e2 e2 = e3 while e1 e3 = 0.
        products[4 + 2][3] = 0;
        products[4 + 1][2] = 1;
        products[2 * 4 + 2][3] = 1;
        assert_eq!(
            FiniteLocalAlgebra::new(field, 4, products, None),
            Err(AlgebraError::NotAssociative(1, 1, 2))
        );
    }

    #[test]
    fn nilpotency_and_generators() {
        let a = truncated_line(f(2), 4);
        assert_eq!(a.nilpotency_index(), 4);
        assert_eq!(a.min_generator_indices(), &[1]);
        let k = truncated_line(f(2), 1);
        assert_eq!(k.nilpotency_index(), 1);
        assert!(k.min_generator_indices().is_empty());
        let b = dual_square(f(3));
        assert_eq!(b.min_generator_indices(), &[1, 2]);
        assert_eq!(b.nilpotency_index(), 3);
    }

    #[test]
    fn determinants() {
        let b = dual_square(f(2));
        let (x, y) = (b.basis_element(1), b.basis_element(2));
        let w = vec![vec![x.clone(), b.zero()], vec![b.zero(), y.clone()]];
        assert_eq!(b.det(&w).unwrap(), b.basis_element(3));
        assert_eq!(b.det(&[]).unwrap(), b.one());
        let f5 = f(5);
        let c = truncated_line(f5, 3);
        let s = |v: u64| c.scalar(v);
        let m = vec![vec![s(2), s(1), s(0)], vec![s(1), s(3), s(4)], vec![s(0), s(2), s(1)]];
        // 2*(3-8) - 1*(1-0) = -11 = 4 mod 5
        assert_eq!(c.det(&m).unwrap(), s(4));
    }

    #[test]
    fn morphism_validation() {
        let field = f(2);
        let a = Arc::new(truncated_line(field, 2));
        let b = Arc::new(truncated_line(field, 4));
        let x = b.basis_element(1);
        let x2 = b.mul(&x, &x);
        let phi = AlgebraMorphism::from_basis_images(a.clone(), b.clone(), &[b.one(), x2.clone()]).unwrap();
        let (fib, _) = phi.base_change_fiber().unwrap();
        assert_eq!(*fib, truncated_line(field, 2));
        assert_eq!(
            AlgebraMorphism::from_basis_images(a.clone(), b.clone(), &[b.one(), x.clone()]).unwrap_err(),
            AlgebraError::MorphismNotMultiplicative(1, 1)
        );
        assert_eq!(
            AlgebraMorphism::from_basis_images(a.clone(), b.clone(), &[b.one(), b.one()]).unwrap_err(),
            AlgebraError::MorphismNotLocal(1)
        );
        let id = AlgebraMorphism::identity(a.clone());
        let (res, _) = id.base_change_fiber().unwrap();
        assert_eq!(res.dim(), 1);
        assert_eq!(phi.compose(&id).unwrap().matrix(), phi.matrix());
    }
}
