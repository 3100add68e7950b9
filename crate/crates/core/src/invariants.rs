//! Embedding dimension, socle, Gorenstein and complete-intersection tests,
//! and Wiebe matrices.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::algebra::{AlgebraError, Element, FiniteLocalAlgebra};
use crate::linalg::{Mat, Subspace};
use crate::presentation::{truncated_poly_algebra, Monomial, PresentationError};

/// Largest polynomial truncation built for the complete-intersection test.
pub const TRUNCATION_CAP: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvariantError {
    #[error("expected {expected} minimal generators of the maximal ideal, got {found}")]
    GeneratorCount { expected: usize, found: usize },
    #[error("given elements do not generate the maximal ideal minimally")]
    NotMinimalGenerators,
    #[error("ambient polynomial truncation too large: {0}")]
    Truncation(#[from] PresentationError),
    #[error("Wiebe matrix verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// `dim m − dim m²`.
pub fn edim(a: &FiniteLocalAlgebra) -> usize {
    a.max_ideal().dim() - a.max_ideal_squared().dim()
}

/// `Ann(m)`. For the base field this is the whole ring.
pub fn socle(a: &FiniteLocalAlgebra) -> Subspace {
    let gens = a.min_generator_indices();
    if gens.is_empty() {
        return Subspace::full(a.field(), a.dim());
    }
    let blocks: Vec<&Mat> = gens.iter().map(|&i| a.basis_mul_matrix(i)).collect();
    Mat::vstack(a.field(), a.dim(), &blocks).kernel()
}

pub fn is_gorenstein(a: &FiniteLocalAlgebra) -> bool {
    socle(a).dim() == 1
}

/// Result of the minimal-presentation count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CiReport {
    pub is_ci: bool,
    /// Minimal number of relations of `m_B` over a regular ring of
    /// dimension `edim`.
    pub mu: usize,
    pub edim: usize,
}

/// Minimal presentation `F_p[y]/I -> B` with `y_i -> u_i`, computed in a
/// truncation deep enough that `I/mI` is exact.
struct MinimalPresentation {
    ambient: crate::presentation::CompiledAlgebra,
    /// index of `m * y_i` for each basis monomial, or `None` when it falls
    /// outside the truncation
    shifts: Vec<Vec<Option<usize>>>,
    /// dim B × dim R' matrix of the surjection
    map: Mat,
    relations: Vec<Vec<u64>>,
}

fn check_generators(a: &FiniteLocalAlgebra, u: &[Element]) -> Result<(), InvariantError> {
    let r = edim(a);
    if u.len() != r {
        return Err(InvariantError::GeneratorCount { expected: r, found: u.len() });
    }
    let mut span = a.max_ideal_squared().clone();
    for x in u {
        a.check(x)?;
        if !a.in_max_ideal(x) || !span.insert(x.coords()) {
            return Err(InvariantError::NotMinimalGenerators);
        }
    }
    Ok(())
}

fn minimal_presentation(a: &FiniteLocalAlgebra, u: &[Element]) -> Result<MinimalPresentation, InvariantError> {
    let field = a.field();
    let r = u.len();
    let t = a.nilpotency_index() as u32;
    let ambient = truncated_poly_algebra(field, r, t + 1, TRUNCATION_CAP)?;
    let monos = ambient.basis_monomials();
    let index: HashMap<&Monomial, usize> = monos.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let shifts: Vec<Vec<Option<usize>>> = (0..r)
        .map(|i| {
            monos
                .iter()
                .map(|m| index.get(&m.mul(&Monomial::var(r, i))).copied())
                .collect()
        })
        .collect();
    // images of monomials, built up in ascending order
    let mut images: Vec<Element> = Vec::with_capacity(monos.len());
    for m in monos {
        let img = match m.0.iter().position(|&e| e > 0) {
            None => a.one(),
            Some(i) => {
                let mut lower = m.clone();
                lower.0[i] -= 1;
                a.mul(&images[index[&lower]], &u[i])
            }
        };
        images.push(img);
    }
    let columns: Vec<Vec<u64>> = images.into_iter().map(Element::into_coords).collect();
    let map = Mat::from_columns(field, a.dim(), &columns).expect("image columns have dim B entries");
    let kernel = map.kernel();
    let mut m_kernel = Subspace::zero(field, monos.len());
    for v in kernel.basis() {
        for shift in &shifts {
            m_kernel.insert(&shift_vec(shift, v));
        }
    }
    let mut span = m_kernel;
    let mut relations = Vec::new();
    for v in kernel.basis() {
        if span.insert(v) {
            relations.push(v.clone());
        }
    }
    Ok(MinimalPresentation {
        ambient,
        shifts,
        map,
        relations,
    })
}

fn shift_vec(shift: &[Option<usize>], v: &[u64]) -> Vec<u64> {
    let mut out = vec![0; v.len()];
    for (k, &c) in v.iter().enumerate() {
        if c != 0 {
            if let Some(j) = shift[k] {
                out[j] = c;
            }
        }
    }
    out
}

/// Zero-dimensional complete-intersection test by counting minimal
/// relations among the chosen minimal generators.
pub fn is_complete_intersection(a: &FiniteLocalAlgebra) -> Result<CiReport, InvariantError> {
    let u = a.min_generators();
    let pres = minimal_presentation(a, &u)?;
    let r = u.len();
    let mu = pres.relations.len();
    let is_ci = mu == r;
    debug_assert!(!is_ci || is_gorenstein(a), "complete intersection that is not Gorenstein");
    Ok(CiReport { is_ci, mu, edim: r })
}

/// `W` with `W·u = 0` and `det W` spanning the socle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WiebeMatrix {
    pub u: Vec<Element>,
    /// row `j` expresses the `j`-th minimal relation as `Σ_i w_ji y_i`
    pub entries: Vec<Vec<Element>>,
    pub det: Element,
}

impl WiebeMatrix {
    /// Re-checks `W·u = 0`, `det W != 0`, `det W` recomputed, and that it
    /// spans the socle.
    pub fn verify(&self, a: &FiniteLocalAlgebra) -> Result<(), InvariantError> {
        let n = self.u.len();
        if self.entries.len() != n || self.entries.iter().any(|row| row.len() != n) {
            return Err(InvariantError::Verification("matrix is not square of size |u|".into()));
        }
        for (j, row) in self.entries.iter().enumerate() {
            let mut acc = a.zero();
            for (w, x) in row.iter().zip(&self.u) {
                acc = a.add(&acc, &a.mul(w, x));
            }
            if !acc.is_zero() {
                return Err(InvariantError::Verification(format!("row {j} does not annihilate u")));
            }
        }
        let det = a.det(&self.entries)?;
        if det != self.det {
            return Err(InvariantError::Verification("stored determinant differs".into()));
        }
        if det.is_zero() {
            return Err(InvariantError::Verification("determinant is zero".into()));
        }
        let soc = socle(a);
        if soc.dim() != 1 || !soc.contains(det.coords()) {
            return Err(InvariantError::Verification("determinant does not span the socle".into()));
        }
        Ok(())
    }
}

/// Wiebe matrix for the generators `u` when the algebra is a complete
/// intersection, `None` otherwise.
pub fn wiebe_matrix(a: &FiniteLocalAlgebra, u: &[Element]) -> Result<Option<WiebeMatrix>, InvariantError> {
    check_generators(a, u)?;
    let pres = minimal_presentation(a, u)?;
    let n = u.len();
    if pres.relations.len() != n {
        return Ok(None);
    }
    let field = a.field();
    let monos = pres.ambient.basis_monomials();
    let d = monos.len();
    let index: HashMap<&Monomial, usize> = monos.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let to_b = |v: &[u64]| a.element(pres.map.mul_vec(v)).expect("image lies in B");
    let mut entries = Vec::with_capacity(n);
    for f in &pres.relations {
        // split each monomial off at its first variable
        let mut w = vec![vec![0u64; d]; n];
        for (k, &c) in f.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let m = &monos[k];
            let i = m.0.iter().position(|&e| e > 0).expect("relations lie in the maximal ideal");
            let mut lower = m.clone();
            lower.0[i] -= 1;
            let j = index[&lower];
            w[i][j] = field.add(w[i][j], c);
        }
        debug_assert!({
            let mut acc = vec![0u64; d];
            for (i, wi) in w.iter().enumerate() {
                for (x, y) in acc.iter_mut().zip(shift_vec(&pres.shifts[i], wi)) {
                    *x = field.add(*x, y);
                }
            }
            acc == *f
        });
        entries.push(w.iter().map(|wi| to_b(wi)).collect::<Vec<_>>());
    }
    let det = a.det(&entries)?;
    let out = WiebeMatrix {
        u: u.to_vec(),
        entries,
        det,
    };
    out.verify(a)?;
    Ok(Some(out))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantReport {
    pub dim: usize,
    pub edim: usize,
    pub socle_dim: usize,
    pub nilpotency_index: usize,
    pub is_gorenstein: bool,
    pub is_ci: bool,
    pub mu: usize,
}

pub fn invariant_report(a: &FiniteLocalAlgebra) -> Result<InvariantReport, InvariantError> {
    let ci = is_complete_intersection(a)?;
    let socle_dim = socle(a).dim();
    Ok(InvariantReport {
        dim: a.dim(),
        edim: ci.edim,
        socle_dim,
        nilpotency_index: a.nilpotency_index(),
        is_gorenstein: socle_dim == 1,
        is_ci: ci.is_ci,
        mu: ci.mu,
    })
}

impl fmt::Display for InvariantReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dim: {}", self.dim)?;
        writeln!(f, "edim: {}", self.edim)?;
        writeln!(f, "socle_dim: {}", self.socle_dim)?;
        writeln!(f, "nilpotency_index: {}", self.nilpotency_index)?;
        writeln!(f, "gorenstein: {}", self.is_gorenstein)?;
        writeln!(f, "ci: {}", self.is_ci)?;
        writeln!(f, "mu: {}", self.mu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presentation::Presentation;
    use std::sync::Arc;

    fn compile(p: u64, vars: &[&str], rels: &str) -> Arc<FiniteLocalAlgebra> {
        Arc::clone(Presentation::parse(p, vars, rels).unwrap().compile().unwrap().algebra())
    }

    #[test]
    fn edim_examples() {
        assert_eq!(edim(&compile(2, &[], "")), 0);
        assert_eq!(edim(&compile(2, &["x"], "x^4")), 1);
        assert_eq!(edim(&compile(2, &["x", "y"], "x^2, x*y, y^2")), 2);
    }

    #[test]
    fn socle_examples() {
        let k = compile(2, &[], "");
        assert!(socle(&k).is_full());
        assert!(is_gorenstein(&k));
        let a = compile(2, &["x"], "x^4");
        let s = socle(&a);
        assert_eq!(s.basis(), &[vec![0, 0, 0, 1]]);
        let b = compile(2, &["x", "y"], "x^2, x*y, y^2");
        assert_eq!(socle(&b).dim(), 2);
        assert!(!is_gorenstein(&b));
        let c = compile(2, &["x", "y"], "x^2, y^2");
        assert_eq!(socle(&c).basis(), &[vec![0, 0, 0, 1]]);
        assert!(is_gorenstein(&c));
    }

    #[test]
    fn ci_examples() {
        let c = compile(2, &["x", "y"], "x^2, y^2");
        assert_eq!(is_complete_intersection(&c).unwrap(), CiReport { is_ci: true, mu: 2, edim: 2 });
        let b = compile(2, &["x", "y"], "x^2, x*y, y^2");
        assert_eq!(is_complete_intersection(&b).unwrap(), CiReport { is_ci: false, mu: 3, edim: 2 });
        let k = compile(2, &[], "");
        assert_eq!(is_complete_intersection(&k).unwrap(), CiReport { is_ci: true, mu: 0, edim: 0 });
        // Gorenstein but not CI: k[x,y,z]/(x^2-y^2, y^2-z^2, xy, yz, zx)
        let g = compile(3, &["x", "y", "z"], "x^2-y^2, y^2-z^2, x*y, y*z, z*x");
        assert!(is_gorenstein(&g));
        let r = is_complete_intersection(&g).unwrap();
        assert!(!r.is_ci);
        assert_eq!(r.mu, 5);
    }

    #[test]
    fn wiebe_examples() {
        let c = compile(2, &["x", "y"], "x^2, y^2");
        let u = c.min_generators();
        let w = wiebe_matrix(&c, &u).unwrap().unwrap();
        // basis 1, y, x, xy
        assert_eq!(w.det.coords(), &[0, 0, 0, 1]);
        w.verify(&c).unwrap();

        for t in 2..6 {
            let a = compile(5, &["x"], &format!("x^{t}"));
            let u = a.min_generators();
            let w = wiebe_matrix(&a, &u).unwrap().unwrap();
            assert_eq!(w.entries.len(), 1);
            let mut top = vec![0; t];
            top[t - 1] = 1;
            assert_eq!(w.entries[0][0].coords(), &top[..]);
            assert_eq!(w.det.coords(), &top[..]);
        }

        let k = compile(5, &["x"], "x");
        let w = wiebe_matrix(&k, &[]).unwrap().unwrap();
        assert!(w.entries.is_empty());
        assert_eq!(w.det.coords(), &[1]);

        let b = compile(2, &["x", "y"], "x^2, x*y, y^2");
        assert_eq!(wiebe_matrix(&b, &b.min_generators()).unwrap(), None);
    }

    #[test]
    fn wiebe_rejects_bad_generators() {
        let c = compile(2, &["x", "y"], "x^2, y^2");
        let x = c.basis_element(2);
        assert!(matches!(
            wiebe_matrix(&c, std::slice::from_ref(&x)),
            Err(InvariantError::GeneratorCount { expected: 2, found: 1 })
        ));
        assert_eq!(wiebe_matrix(&c, &[x.clone(), x]), Err(InvariantError::NotMinimalGenerators));
    }

    #[test]
    fn wiebe_with_other_generators() {
        // u = (x + y, y) still generates m minimally
        let c = compile(3, &["x", "y"], "x^2, y^3");
        let x = c.basis_element(c.labels().iter().position(|l| l == "x").unwrap());
        let y = c.basis_element(c.labels().iter().position(|l| l == "y").unwrap());
        let u = vec![c.add(&x, &y), y];
        let w = wiebe_matrix(&c, &u).unwrap().unwrap();
        w.verify(&c).unwrap();
    }
}
