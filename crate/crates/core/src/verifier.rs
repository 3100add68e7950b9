//! Seeded instance generators and end-to-end checks of the flatness
//! criterion: a nonzero `A`-flat `B`-module over a local morphism with
//! `edim B ≤ edim A` forces `A → B` flat with complete-intersection fiber
//! and the module `B`-flat.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::{AlgebraError, AlgebraMorphism, Element, FiniteLocalAlgebra};
use crate::invariants::{edim, is_complete_intersection, is_gorenstein, socle, InvariantError};
use crate::lemma::{LemmaError, LemmaInstance};
use crate::linalg::{Mat, Subspace};
use crate::modules::{FiniteModule, ModuleError, WtfMode};
use crate::presentation::{CompiledAlgebra, Poly, Presentation, PresentationError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifierError {
    #[error(transparent)]
    Presentation(#[from] PresentationError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Module(#[from] ModuleError),
    #[error(transparent)]
    Invariant(#[from] InvariantError),
    #[error(transparent)]
    Lemma(#[from] LemmaError),
    #[error("generation budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("ring is not Gorenstein")]
    NotGorenstein,
    #[error("module is not over the target of the morphism")]
    RingMismatch,
    #[error("unknown generator kind `{0}`")]
    UnknownKind(String),
    #[error("user_file instances come from instance files, not from a seed")]
    UserFileKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeneratorKind {
    MonomialCi,
    MonomialGeneral,
    GroupAlgebra,
    Binomial,
    UserFile,
}

impl GeneratorKind {
    pub const SEEDED: [GeneratorKind; 4] = [
        GeneratorKind::MonomialCi,
        GeneratorKind::MonomialGeneral,
        GeneratorKind::GroupAlgebra,
        GeneratorKind::Binomial,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::MonomialCi => "monomial_ci",
            GeneratorKind::MonomialGeneral => "monomial_general",
            GeneratorKind::GroupAlgebra => "group_algebra",
            GeneratorKind::Binomial => "binomial",
            GeneratorKind::UserFile => "user_file",
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorKind {
    type Err = VerifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            GeneratorKind::MonomialCi,
            GeneratorKind::MonomialGeneral,
            GeneratorKind::GroupAlgebra,
            GeneratorKind::Binomial,
            GeneratorKind::UserFile,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| VerifierError::UnknownKind(s.to_string()))
    }
}

/// Size limits for generated instances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Caps {
    pub primes: Vec<u64>,
    pub max_vars: usize,
    pub max_dim_a: usize,
    pub max_dim_b: usize,
    pub max_dim_m: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            primes: vec![2, 3, 5],
            max_vars: 3,
            max_dim_a: 8,
            max_dim_b: 32,
            max_dim_m: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceSpec {
    pub seed: u64,
    pub kind: GeneratorKind,
    pub caps: Caps,
}

/// Generator for instance `index` of a run seeded by `seed`: one ChaCha
/// stream per instance.
pub fn instance_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn names(prefix: &str, r: usize) -> Vec<String> {
    (1..=r).map(|i| format!("{prefix}{i}")).collect()
}

fn present(p: u64, vars: &[String], relations: &[String]) -> Result<CompiledAlgebra, VerifierError> {
    let v: Vec<&str> = vars.iter().map(String::as_str).collect();
    Ok(Presentation::parse(p, &v, &relations.join(", "))?.compile()?)
}

/// `F_p[x_1..x_r]/(x_1^{a_1}, …, x_r^{a_r})`
pub fn monomial_ci(p: u64, exponents: &[u32]) -> Result<CompiledAlgebra, VerifierError> {
    let vars = names("x", exponents.len());
    let rels: Vec<String> = vars.iter().zip(exponents).map(|(v, a)| format!("{v}^{a}")).collect();
    present(p, &vars, &rels)
}

/// `F_p[S_1..S_r]/((1+S_i)^{α_i} − 1)`, the group algebra of
/// `∏ Z/α_i` when each `α_i` is a power of `p`.
pub fn group_algebra(p: u64, alphas: &[u32]) -> Result<CompiledAlgebra, VerifierError> {
    let vars = names("S", alphas.len());
    let rels: Vec<String> = vars.iter().zip(alphas).map(|(v, a)| format!("(1+{v})^{a} - 1")).collect();
    present(p, &vars, &rels)
}

fn random_exponents(rng: &mut ChaCha8Rng, r: usize, lo: u32, hi: u32, max_dim: usize) -> Vec<u32> {
    loop {
        let e: Vec<u32> = (0..r).map(|_| rng.gen_range(lo..=hi)).collect();
        if e.iter().map(|&a| a as usize).product::<usize>() <= max_dim {
            return e;
        }
    }
}

fn random_monomial(rng: &mut ChaCha8Rng, vars: &[String], exps: &[u32], min_degree: u32) -> String {
    loop {
        let e: Vec<u32> = exps.iter().map(|&a| rng.gen_range(0..a)).collect();
        if e.iter().sum::<u32>() >= min_degree {
            let parts: Vec<String> = vars
                .iter()
                .zip(&e)
                .filter(|(_, &k)| k > 0)
                .map(|(v, k)| format!("{v}^{k}"))
                .collect();
            return parts.join("*");
        }
    }
}

/// Relations of a random algebra of the given kind on the given variables.
/// Every relation lies in the square of the maximal ideal, so the
/// embedding dimension equals the number of variables.
fn random_relations(rng: &mut ChaCha8Rng, kind: GeneratorKind, p: u64, vars: &[String], max_dim: usize) -> Result<Vec<String>, VerifierError> {
    let r = vars.len();
    Ok(match kind {
        GeneratorKind::MonomialCi => {
            let e = random_exponents(rng, r, 2, 4, max_dim);
            vars.iter().zip(&e).map(|(v, a)| format!("{v}^{a}")).collect()
        }
        GeneratorKind::MonomialGeneral => {
            let e = random_exponents(rng, r, 2, 4, max_dim * 2);
            let mut rels: Vec<String> = vars.iter().zip(&e).map(|(v, a)| format!("{v}^{a}")).collect();
            if r > 1 {
                for _ in 0..rng.gen_range(1..=2) {
                    rels.push(random_monomial(rng, vars, &e, 2));
                }
            }
            rels
        }
        GeneratorKind::GroupAlgebra => {
            let powers: Vec<u32> = std::iter::successors(Some(p as u32), |&q| Some(q * p as u32))
                .take_while(|&q| q as usize <= max_dim)
                .collect();
            if powers.is_empty() {
                return Err(VerifierError::BudgetExhausted(format!("no group of order p = {p} fits in dim {max_dim}")));
            }
            let mut alphas = Vec::new();
            let mut dim = 1usize;
            for _ in 0..r {
                let fits: Vec<u32> = powers.iter().copied().filter(|&q| dim * q as usize <= max_dim).collect();
                let a = *fits.choose(rng).unwrap_or(&powers[0]);
                dim *= a as usize;
                alphas.push(a);
            }
            vars.iter().zip(&alphas).map(|(v, a)| format!("(1+{v})^{a} - 1")).collect()
        }
        GeneratorKind::Binomial => {
            let e = random_exponents(rng, r, 2, 4, max_dim * 2);
            let mut rels: Vec<String> = vars.iter().zip(&e).map(|(v, a)| format!("{v}^{a}")).collect();
            if r > 1 {
                let m1 = random_monomial(rng, vars, &e, 2);
                let m2 = random_monomial(rng, vars, &e, 2);
                let c = rng.gen_range(1..p);
                rels.push(format!("{m1} - {c}*{m2}"));
            }
            rels
        }
        GeneratorKind::UserFile => return Err(VerifierError::UserFileKind),
    })
}

/// A random algebra of the given kind in `r` variables named
/// `prefix1..prefixr`, retried until it fits the dimension cap.
/// Uses fewer variables when the smallest algebra of the kind in `r`
/// variables (`2^r`, or `p^r` for group algebras) exceeds the cap.
pub fn random_algebra(rng: &mut ChaCha8Rng, kind: GeneratorKind, p: u64, r: usize, prefix: &str, max_dim: usize) -> Result<CompiledAlgebra, VerifierError> {
    let base = if kind == GeneratorKind::GroupAlgebra { p as usize } else { 2 };
    let mut r = r;
    while r > 1 && base.pow(r as u32) > max_dim {
        r -= 1;
    }
    let vars = names(prefix, r);
    for _ in 0..64 {
        let rels = random_relations(rng, kind, p, &vars, max_dim)?;
        let v: Vec<&str> = vars.iter().map(String::as_str).collect();
        let pres = Presentation::parse(p, &v, &rels.join(", "))?;
        match pres.compile_with_cap(max_dim) {
            Ok(c) => return Ok(c),
            Err(PresentationError::DimensionCapExceeded { .. }) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Err(VerifierError::BudgetExhausted(format!("no {kind} algebra within dim {max_dim}")))
}

/// `f(images)` for images in a polynomial ring on `nvars` variables.
pub fn substitute(f: &Poly, images: &[Poly], nvars: usize) -> Poly {
    let field = f.field();
    let mut out = Poly::zero(field, nvars);
    for (m, c) in f.terms() {
        let mut t = Poly::constant(field, nvars, c);
        for (i, &e) in m.0.iter().enumerate() {
            if e > 0 {
                t = t.mul(&images[i].pow(e as u64, usize::MAX).expect("no degree bound"));
            }
        }
        out = out.add(&t);
    }
    out
}

fn random_in_max_ideal(rng: &mut ChaCha8Rng, b: &FiniteLocalAlgebra) -> Element {
    let p = b.field().p();
    let d = b.dim();
    let mut coords = vec![0; d];
    if d > 1 {
        if rng.gen_bool(0.5) {
            // sparse: one or two basis elements
            for _ in 0..rng.gen_range(1..=2) {
                coords[rng.gen_range(1..d)] = rng.gen_range(1..p);
            }
        } else {
            for c in coords.iter_mut().skip(1) {
                *c = rng.gen_range(0..p);
            }
        }
    }
    b.element(coords).unwrap()
}

fn random_unit(rng: &mut ChaCha8Rng, b: &FiniteLocalAlgebra) -> Element {
    let p = b.field().p();
    let n = random_in_max_ideal(rng, b);
    b.add(&b.scalar(rng.gen_range(1..p)), &n)
}

/// A source algebra and a target that is free over it, with the morphism.
#[derive(Debug, Clone)]
pub struct MorphismInstance {
    pub a: CompiledAlgebra,
    pub b: CompiledAlgebra,
    pub phi: AlgebraMorphism,
    pub description: String,
}

/// `B = F_p[x]/(G(x^c))` over `A = F_p[s]/(G(s))` with `s_i ↦ x_i^{c_i}`,
/// times a random unit when `A` has monomial relations.
pub fn flat_family(rng: &mut ChaCha8Rng, a: &CompiledAlgebra, max_dim_b: usize) -> Result<MorphismInstance, VerifierError> {
    let pres = a.presentation();
    let field = pres.field;
    let r = pres.nvars();
    let da = a.algebra().dim();
    let cs = loop {
        let c: Vec<u32> = (0..r).map(|_| rng.gen_range(1..=3)).collect();
        if da * c.iter().map(|&x| x as usize).product::<usize>() <= max_dim_b {
            break c;
        }
        if da > max_dim_b {
            return Err(VerifierError::BudgetExhausted("source algebra larger than target cap".into()));
        }
        if c.iter().all(|&x| x == 1) {
            break c;
        }
    };
    let xvars = names("x", r);
    let powers: Vec<Poly> = (0..r)
        .map(|i| {
            let mut m = crate::presentation::Monomial::one(r);
            m.0[i] = cs[i];
            Poly::monomial(field, m, 1)
        })
        .collect();
    let rels: Vec<Poly> = pres.relations.iter().map(|f| substitute(f, &powers, r)).collect();
    let b = Presentation::new(field, xvars.clone(), rels)?.compile_with_cap(max_dim_b)?;
    let ba = Arc::clone(b.algebra());
    let plain: Vec<Element> = powers.iter().map(|q| b.normal_form(q)).collect();
    let monomial = pres.relations.iter().all(|f| f.terms().count() == 1);
    let mut images = plain.clone();
    let mut twisted = false;
    if monomial && rng.gen_bool(0.5) {
        images = plain.iter().map(|x| ba.mul(x, &random_unit(rng, &ba))).collect();
        twisted = true;
    }
    let phi = match a.substitution_morphism(Arc::clone(&ba), &images) {
        Ok(phi) => phi,
        Err(_) => {
            twisted = false;
            a.substitution_morphism(Arc::clone(&ba), &plain)?
        }
    };
    let description = format!(
        "flat family {} -> {}, exponents {:?}{}",
        pres,
        b.presentation(),
        cs,
        if twisted { ", unit twist" } else { "" }
    );
    Ok(MorphismInstance { a: a.clone(), b, phi, description })
}

/// A morphism `A → B` sending each variable of `A` to a random element of
/// `m_B`, by rejection sampling against the relations of `A`.
pub fn random_morphism(rng: &mut ChaCha8Rng, a: &CompiledAlgebra, b: &CompiledAlgebra, budget: usize) -> Result<AlgebraMorphism, VerifierError> {
    let ba = b.algebra();
    let r = a.presentation().nvars();
    for _ in 0..budget {
        let images: Vec<Element> = (0..r).map(|_| random_in_max_ideal(rng, ba)).collect();
        if let Ok(phi) = a.substitution_morphism(Arc::clone(ba), &images) {
            return Ok(phi);
        }
    }
    Err(VerifierError::BudgetExhausted(format!("no morphism found in {budget} attempts")))
}

/// Random module over `b` of dimension at most `max_dim`, with a short
/// description of its shape. `flat_bias` is the probability of a free
/// module.
pub fn random_module(rng: &mut ChaCha8Rng, b: &Arc<FiniteLocalAlgebra>, max_dim: usize, flat_bias: f64) -> Result<(FiniteModule, String), VerifierError> {
    let d = b.dim();
    let max_rank = (max_dim / d).max(1);
    if rng.gen_bool(flat_bias) {
        let k = rng.gen_range(1..=max_rank.min(2));
        return Ok((FiniteModule::free(Arc::clone(b), k), format!("free {k}")));
    }
    let shape = rng.gen_range(0..6);
    Ok(match shape {
        0 => (FiniteModule::residue_field(Arc::clone(b)), "residue field".into()),
        1 => {
            let g = random_in_max_ideal(rng, b);
            (FiniteModule::cyclic(Arc::clone(b), &[g])?, "cyclic quotient".into())
        }
        2 => {
            let rows = max_rank.min(2);
            let cols = rng.gen_range(1..=2);
            let mat: Vec<Vec<Element>> = (0..rows).map(|_| (0..cols).map(|_| random_in_max_ideal(rng, b)).collect()).collect();
            let (m, _) = FiniteModule::cokernel(Arc::clone(b), &mat)?;
            (m, format!("cokernel {rows}x{cols}"))
        }
        3 if d < max_dim => {
            let free = FiniteModule::free(Arc::clone(b), 1);
            (free.direct_sum(&FiniteModule::residue_field(Arc::clone(b)))?, "free 1 + residue field".into())
        }
        4 => {
            let k = max_rank.min(2);
            let free = FiniteModule::free(Arc::clone(b), k);
            let p = b.field().p();
            let v: Vec<u64> = (0..free.dim()).map(|_| rng.gen_range(0..p)).collect();
            // the submodule generated by v
            let sub = Subspace::span(b.field(), free.dim(), (0..d).map(|i| free.basis_action(i).mul_vec(&v)));
            let (q, _) = free.quotient_module(&sub)?;
            (q, format!("free {k} mod cyclic submodule"))
        }
        _ => {
            let g = random_in_max_ideal(rng, b);
            let h = random_in_max_ideal(rng, b);
            let m = FiniteModule::cyclic(Arc::clone(b), &[g])?.direct_sum(&FiniteModule::cyclic(Arc::clone(b), &[h])?)?;
            if m.dim() > max_dim {
                (FiniteModule::residue_field(Arc::clone(b)), "residue field".into())
            } else {
                (m, "sum of two cyclic quotients".into())
            }
        }
    })
}

/// Hypotheses of the criterion for a morphism and a module over its target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hypotheses {
    pub morphism_local: bool,
    pub edim_le: bool,
    pub module_nonzero: bool,
    pub module_a_flat: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conclusions {
    pub morphism_flat: bool,
    pub morphism_rank: Option<usize>,
    pub edim_equal: bool,
    pub fiber_dim: usize,
    pub fiber_edim: usize,
    pub fiber_ci: bool,
    pub fiber_mu: usize,
    pub module_b_flat: bool,
    pub module_b_rank: Option<usize>,
    /// `None` when the matrix `W` with `x = W u` cannot be square
    pub delta: Option<Element>,
    pub delta_outside_extended_ideal: bool,
    pub delta_spans_fiber_socle: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    HypothesisNotMet(Vec<&'static str>),
    Violation(Vec<&'static str>),
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => f.write_str("pass"),
            Verdict::HypothesisNotMet(v) => write!(f, "hypothesis_not_met({})", v.join(",")),
            Verdict::Violation(v) => write!(f, "THEOREM_VIOLATION({})", v.join(",")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriterionReport {
    pub dim_a: usize,
    pub dim_b: usize,
    pub dim_m: usize,
    pub edim_a: usize,
    pub edim_b: usize,
    pub hypotheses: Hypotheses,
    pub module_a_rank: Option<usize>,
    pub conclusions: Conclusions,
    pub delta_text: String,
    pub verdict: Verdict,
}

/// `W` with `x = W·u` over `b`, by solving each row against
/// `[u_1 | … | u_n]`.
pub fn factor_through(b: &FiniteLocalAlgebra, x: &[Element], u: &[Element]) -> Option<Vec<Vec<Element>>> {
    let mats: Vec<Mat> = u.iter().map(|ui| b.mul_matrix(ui)).collect();
    let refs: Vec<&Mat> = mats.iter().collect();
    let solver = Mat::hstack(b.field(), b.dim(), &refs).solver();
    let d = b.dim();
    x.iter()
        .map(|xk| {
            let sol = solver.solve(xk.coords())?;
            Some(sol.chunks(d).map(|c| b.element(c.to_vec()).unwrap()).collect())
        })
        .collect()
}

/// Evaluates every hypothesis and every conclusion.
pub fn check_flatness_criterion(phi: &AlgebraMorphism, module: &FiniteModule) -> Result<CriterionReport, VerifierError> {
    let a = phi.source();
    let b = phi.target();
    if **module.ring() != **b {
        return Err(VerifierError::RingMismatch);
    }
    let (edim_a, edim_b) = (edim(a), edim(b));
    let morphism_local = (1..a.dim()).all(|i| b.in_max_ideal(&phi.image_of_basis(i)));
    let over_a = module.restrict_scalars(phi)?;
    let a_flat = over_a.is_flat();
    let hypotheses = Hypotheses {
        morphism_local,
        edim_le: edim_b <= edim_a,
        module_nonzero: !module.is_zero(),
        module_a_flat: a_flat.is_flat,
    };

    let b_over_a = FiniteModule::free(Arc::clone(b), 1).restrict_scalars(phi)?.is_flat();
    let (fiber, proj) = phi.base_change_fiber()?;
    let ci = is_complete_intersection(&fiber)?;
    let b_flat = module.is_flat();

    let x = phi.images_of_min_generators();
    let mut u = b.min_generators();
    let n = x.len();
    let mut delta = None;
    let mut outside = false;
    let mut spans = false;
    if u.len() <= n {
        u.resize(n, b.zero());
        if let Some(w) = factor_through(b, &x, &u) {
            let det = b.det(&w)?;
            outside = !phi.extended_max_ideal().contains(&det);
            let image = proj.apply(&det);
            let soc = socle(&fiber);
            spans = !image.is_zero() && soc.dim() == 1 && soc.contains(image.coords());
            delta = Some(det);
        }
    }
    let delta_text = delta.as_ref().map_or("-".to_string(), |d| b.format_element(d));
    let conclusions = Conclusions {
        morphism_flat: b_over_a.is_flat,
        morphism_rank: b_over_a.rank,
        edim_equal: edim_a == edim_b,
        fiber_dim: fiber.dim(),
        fiber_edim: ci.edim,
        fiber_ci: ci.is_ci,
        fiber_mu: ci.mu,
        module_b_flat: b_flat.is_flat,
        module_b_rank: b_flat.rank,
        delta,
        delta_outside_extended_ideal: outside,
        delta_spans_fiber_socle: spans,
    };

    let mut unmet = Vec::new();
    if !hypotheses.morphism_local {
        unmet.push("morphism_local");
    }
    if !hypotheses.edim_le {
        unmet.push("edim_le");
    }
    if !hypotheses.module_nonzero {
        unmet.push("module_nonzero");
    }
    if !hypotheses.module_a_flat {
        unmet.push("module_a_flat");
    }
    let verdict = if !unmet.is_empty() {
        Verdict::HypothesisNotMet(unmet)
    } else {
        let mut failed = Vec::new();
        if !conclusions.morphism_flat {
            failed.push("morphism_flat");
        }
        if !conclusions.edim_equal {
            failed.push("edim_equal");
        }
        if !conclusions.fiber_ci {
            failed.push("fiber_ci");
        }
        if !conclusions.module_b_flat {
            failed.push("module_b_flat");
        }
        if !conclusions.delta_outside_extended_ideal {
            failed.push("delta_outside_extended_ideal");
        }
        if !conclusions.delta_spans_fiber_socle {
            failed.push("delta_spans_fiber_socle");
        }
        if failed.is_empty() {
            Verdict::Pass
        } else {
            Verdict::Violation(failed)
        }
    };
    Ok(CriterionReport {
        dim_a: a.dim(),
        dim_b: b.dim(),
        dim_m: module.dim(),
        edim_a,
        edim_b,
        hypotheses,
        module_a_rank: a_flat.rank,
        conclusions,
        delta_text,
        verdict,
    })
}

fn opt(v: Option<usize>) -> String {
    v.map_or("-".to_string(), |r| r.to_string())
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = &self.hypotheses;
        let c = &self.conclusions;
        writeln!(f, "dim_a: {}", self.dim_a)?;
        writeln!(f, "dim_b: {}", self.dim_b)?;
        writeln!(f, "dim_m: {}", self.dim_m)?;
        writeln!(f, "edim_a: {}", self.edim_a)?;
        writeln!(f, "edim_b: {}", self.edim_b)?;
        writeln!(f, "hyp_morphism_local: {}", h.morphism_local)?;
        writeln!(f, "hyp_edim_le: {}", h.edim_le)?;
        writeln!(f, "hyp_module_nonzero: {}", h.module_nonzero)?;
        writeln!(f, "hyp_module_a_flat: {}", h.module_a_flat)?;
        writeln!(f, "module_a_rank: {}", opt(self.module_a_rank))?;
        writeln!(f, "morphism_flat: {}", c.morphism_flat)?;
        writeln!(f, "morphism_rank: {}", opt(c.morphism_rank))?;
        writeln!(f, "edim_equal: {}", c.edim_equal)?;
        writeln!(f, "fiber_dim: {}", c.fiber_dim)?;
        writeln!(f, "fiber_edim: {}", c.fiber_edim)?;
        writeln!(f, "fiber_ci: {}", c.fiber_ci)?;
        writeln!(f, "fiber_mu: {}", c.fiber_mu)?;
        writeln!(f, "module_b_flat: {}", c.module_b_flat)?;
        writeln!(f, "module_b_rank: {}", opt(c.module_b_rank))?;
        writeln!(f, "delta: {}", self.delta_text)?;
        writeln!(f, "delta_outside_extended_ideal: {}", c.delta_outside_extended_ideal)?;
        writeln!(f, "delta_spans_fiber_socle: {}", c.delta_spans_fiber_socle)?;
        writeln!(f, "verdict: {}", self.verdict)
    }
}

/// One seeded criterion instance: a flat family with a random module.
#[derive(Debug, Clone)]
pub struct CriterionInstance {
    pub morphism: MorphismInstance,
    pub module: FiniteModule,
    pub module_description: String,
}

pub fn generate(spec: &InstanceSpec, index: u64) -> Result<CriterionInstance, VerifierError> {
    let mut rng = instance_rng(spec.seed, index);
    let caps = &spec.caps;
    if spec.kind == GeneratorKind::UserFile {
        return Err(VerifierError::UserFileKind);
    }
    let p = *caps.primes.choose(&mut rng).expect("at least one prime");
    let r = rng.gen_range(1..=caps.max_vars.max(1));
    let a = random_algebra(&mut rng, spec.kind, p, r, "s", caps.max_dim_a)?;
    let morphism = flat_family(&mut rng, &a, caps.max_dim_b)?;
    let (module, module_description) = random_module(&mut rng, morphism.b.algebra(), caps.max_dim_m, 0.6)?;
    Ok(CriterionInstance {
        morphism,
        module,
        module_description,
    })
}

/// Aggregate of a seeded sweep, one line per instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepReport {
    pub kind: GeneratorKind,
    pub seed: u64,
    pub lines: Vec<String>,
    pub pass: usize,
    pub hypothesis_not_met: usize,
    pub violations: usize,
    pub errors: usize,
}

pub fn sweep(kind: GeneratorKind, seed: u64, count: u64, caps: &Caps) -> SweepReport {
    let spec = InstanceSpec {
        seed,
        kind,
        caps: caps.clone(),
    };
    let results: Vec<(String, u8)> = (0..count)
        .into_par_iter()
        .map(|i| match generate(&spec, i).and_then(|inst| Ok((check_flatness_criterion(&inst.morphism.phi, &inst.module)?, inst))) {
            Ok((rep, inst)) => {
                let class = match rep.verdict {
                    Verdict::Pass => 0,
                    Verdict::HypothesisNotMet(_) => 1,
                    Verdict::Violation(_) => 2,
                };
                let line = format!(
                    "instance {i}: p={} dim_a={} dim_b={} edim={} module=({}) dim_m={} fiber_mu={} verdict={}",
                    inst.morphism.a.algebra().field().p(),
                    rep.dim_a,
                    rep.dim_b,
                    rep.edim_a,
                    inst.module_description,
                    rep.dim_m,
                    rep.conclusions.fiber_mu,
                    rep.verdict
                );
                (line, class)
            }
            Err(e) => (format!("instance {i}: error: {e}"), 3),
        })
        .collect();
    let count_of = |c: u8| results.iter().filter(|(_, k)| *k == c).count();
    SweepReport {
        kind,
        seed,
        pass: count_of(0),
        hypothesis_not_met: count_of(1),
        violations: count_of(2),
        errors: count_of(3),
        lines: results.into_iter().map(|(l, _)| l).collect(),
    }
}

impl fmt::Display for SweepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "sweep: flatness_criterion")?;
        writeln!(f, "kind: {}", self.kind)?;
        writeln!(f, "seed: {}", self.seed)?;
        writeln!(f, "count: {}", self.lines.len())?;
        for l in &self.lines {
            writeln!(f, "{l}")?;
        }
        writeln!(f, "pass: {}", self.pass)?;
        writeln!(f, "hypothesis_not_met: {}", self.hypothesis_not_met)?;
        writeln!(f, "violations: {}", self.violations)?;
        writeln!(f, "errors: {}", self.errors)
    }
}

/// Counts from sampling `B`-modules and checking that the nonzero `A`-flat
/// ones are `B`-flat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EqualEdimReport {
    pub tested: usize,
    pub a_flat_nonzero: usize,
    pub b_flat_among_a_flat: usize,
    pub violations: usize,
}

pub fn check_equal_edim_flatness(rng: &mut ChaCha8Rng, phi: &AlgebraMorphism, budget: usize, max_dim_m: usize) -> Result<EqualEdimReport, VerifierError> {
    let b = phi.target();
    let mut rep = EqualEdimReport::default();
    for _ in 0..budget {
        let (m, _) = random_module(rng, b, max_dim_m, 0.15)?;
        rep.tested += 1;
        if m.is_zero() || !m.restrict_scalars(phi)?.is_flat().is_flat {
            continue;
        }
        rep.a_flat_nonzero += 1;
        if m.is_flat().is_flat {
            rep.b_flat_among_a_flat += 1;
        } else {
            rep.violations += 1;
        }
    }
    Ok(rep)
}

impl fmt::Display for EqualEdimReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "tested: {}", self.tested)?;
        writeln!(f, "a_flat_nonzero: {}", self.a_flat_nonzero)?;
        writeln!(f, "b_flat_among_a_flat: {}", self.b_flat_among_a_flat)?;
        writeln!(f, "violations: {}", self.violations)
    }
}

/// A morphism between generated algebras of equal embedding dimension:
/// either a flat family or a random substitution into an unrelated target.
pub fn equal_edim_morphism(rng: &mut ChaCha8Rng, caps: &Caps) -> Result<MorphismInstance, VerifierError> {
    let p = *caps.primes.choose(rng).expect("at least one prime");
    let kind = *GeneratorKind::SEEDED.choose(rng).unwrap();
    let r = rng.gen_range(1..=caps.max_vars.max(1));
    let a = random_algebra(rng, kind, p, r, "s", caps.max_dim_a)?;
    let r = a.presentation().nvars();
    if rng.gen_bool(0.5) {
        return flat_family(rng, &a, caps.max_dim_b);
    }
    for _ in 0..16 {
        let kind_b = *GeneratorKind::SEEDED.choose(rng).unwrap();
        let b = random_algebra(rng, kind_b, p, r, "x", caps.max_dim_b)?;
        if edim(b.algebra()) != edim(a.algebra()) {
            continue;
        }
        if let Ok(phi) = random_morphism(rng, &a, &b, 64) {
            let description = format!("random {} -> {}", a.presentation(), b.presentation());
            return Ok(MorphismInstance { a, b, phi, description });
        }
    }
    flat_family(rng, &a, caps.max_dim_b)
}

/// Result of comparing flatness with weak torsion-freeness on sampled
/// modules over one ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WtfEquivReport {
    pub gorenstein: bool,
    pub modules: usize,
    pub flat: usize,
    pub weakly_torsion_free: usize,
    /// Gorenstein: flat and wtf disagree. Otherwise: flat but not wtf.
    pub violations: usize,
}

/// On Gorenstein rings checks flat ⇔ weakly torsion-free; on other rings
/// only flat ⇒ weakly torsion-free. `require_gorenstein` turns a
/// non-Gorenstein ring into an error.
pub fn check_wtf_equiv_flat(rng: &mut ChaCha8Rng, r: &Arc<FiniteLocalAlgebra>, budget: usize, max_dim_m: usize, require_gorenstein: bool) -> Result<WtfEquivReport, VerifierError> {
    let gorenstein = is_gorenstein(r);
    if require_gorenstein && !gorenstein {
        return Err(VerifierError::NotGorenstein);
    }
    let mut rep = WtfEquivReport {
        gorenstein,
        ..Default::default()
    };
    for _ in 0..budget {
        let (m, _) = random_module(rng, r, max_dim_m, 0.3)?;
        let flat = m.is_flat().is_flat;
        let wtf = m.is_weakly_torsion_free(WtfMode::exhaustive())?.holds;
        rep.modules += 1;
        rep.flat += flat as usize;
        rep.weakly_torsion_free += wtf as usize;
        let bad = if gorenstein { flat != wtf } else { flat && !wtf };
        rep.violations += bad as usize;
    }
    Ok(rep)
}

impl fmt::Display for WtfEquivReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "gorenstein: {}", self.gorenstein)?;
        writeln!(f, "modules: {}", self.modules)?;
        writeln!(f, "flat: {}", self.flat)?;
        writeln!(f, "weakly_torsion_free: {}", self.weakly_torsion_free)?;
        writeln!(f, "violations: {}", self.violations)
    }
}

/// A seeded Gorenstein algebra: a monomial complete intersection, a group
/// algebra, or the non-complete-intersection family
/// `F_p[x,y,z]/(x^2 - a y^2, y^2 - b z^2, xy, yz, zx)`.
pub fn random_gorenstein(rng: &mut ChaCha8Rng, p: u64, max_dim: usize) -> Result<CompiledAlgebra, VerifierError> {
    match rng.gen_range(0..3) {
        0 => {
            let r = rng.gen_range(1..=3);
            random_algebra(rng, GeneratorKind::MonomialCi, p, r, "x", max_dim)
        }
        1 if (p as usize) <= max_dim => {
            let r = rng.gen_range(1..=2);
            random_algebra(rng, GeneratorKind::GroupAlgebra, p, r, "S", max_dim)
        }
        _ if p > 2 => {
            let a = rng.gen_range(1..p);
            let b = rng.gen_range(1..p);
            let rels = format!("x^2 - {a}*y^2, y^2 - {b}*z^2, x*y, y*z, z*x");
            Ok(Presentation::parse(p, &["x", "y", "z"], &rels)?.compile()?)
        }
        _ => {
            Ok(Presentation::parse(p, &["x", "y", "z"], "x^2 - y^2, x^2 - z^2, x*y, y*z, z*x")?.compile()?)
        }
    }
}

/// A non-Gorenstein algebra: monomial relations with at least two socle
/// monomials.
pub fn random_non_gorenstein(rng: &mut ChaCha8Rng, p: u64, max_dim: usize) -> Result<CompiledAlgebra, VerifierError> {
    for _ in 0..64 {
        let r = rng.gen_range(2..=3);
        let c = random_algebra(rng, GeneratorKind::MonomialGeneral, p, r, "x", max_dim)?;
        if !is_gorenstein(c.algebra()) {
            return Ok(c);
        }
    }
    Err(VerifierError::BudgetExhausted("no non-Gorenstein algebra found".into()))
}

/// A lemma instance from a flat family: `x` the images of minimal
/// generators of `m_A`, `u` a random basis change of minimal generators of
/// `m_B`, `M` free, and `m ∈ J_u M` so that `Δ m ∈ J_x M`.
pub fn random_lemma_instance(rng: &mut ChaCha8Rng, caps: &Caps) -> Result<(LemmaInstance, Vec<u64>), VerifierError> {
    let p = *caps.primes.choose(rng).expect("at least one prime");
    let kind = *GeneratorKind::SEEDED.choose(rng).unwrap();
    let r = rng.gen_range(1..=caps.max_vars.max(1));
    let a = random_algebra(rng, kind, p, r, "s", caps.max_dim_a)?;
    let fam = flat_family(rng, &a, caps.max_dim_b)?;
    let b = Arc::clone(fam.b.algebra());
    let x = fam.phi.images_of_min_generators();
    let gens = b.min_generators();
    let n = gens.len();
    // invertible scalar change of generators: unit lower triangular
    let mut u = Vec::with_capacity(n);
    for i in 0..n {
        let mut e = b.scale(&gens[i], rng.gen_range(1..p));
        for g in gens.iter().take(i) {
            e = b.add(&e, &b.scale(g, rng.gen_range(0..p)));
        }
        u.push(e);
    }
    let w = factor_through(&b, &x, &u).ok_or_else(|| VerifierError::BudgetExhausted("x is not in the ideal of u".into()))?;
    let k = rng.gen_range(1..=(caps.max_dim_m / b.dim()).clamp(1, 2));
    let module = FiniteModule::free(Arc::clone(&b), k);
    let mut m = vec![0; module.dim()];
    let f = b.field();
    for ui in &u {
        let v: Vec<u64> = (0..module.dim()).map(|_| rng.gen_range(0..p)).collect();
        for (mi, c) in m.iter_mut().zip(module.act(ui, &v)) {
            *mi = f.add(*mi, c);
        }
    }
    let inst = LemmaInstance::new(module, x, u, w)?;
    Ok((inst, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn compile(p: u64, vars: &[&str], rels: &str) -> CompiledAlgebra {
        Presentation::parse(p, vars, rels).unwrap().compile().unwrap()
    }

    #[test]
    fn kind_names_roundtrip() {
        for k in GeneratorKind::SEEDED {
            assert_eq!(k.name().parse::<GeneratorKind>().unwrap(), k);
        }
        assert!("nope".parse::<GeneratorKind>().is_err());
    }

    #[test]
    fn criterion_pass_example() {
        let a = compile(2, &["s"], "s^2");
        let b = compile(2, &["x"], "x^4");
        let phi = a.substitution_morphism(Arc::clone(b.algebra()), &[b.parse_element("x^2").unwrap()]).unwrap();
        let m = FiniteModule::free(Arc::clone(b.algebra()), 1);
        let rep = check_flatness_criterion(&phi, &m).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        assert_eq!(rep.conclusions.morphism_rank, Some(2));
        assert_eq!((rep.edim_a, rep.edim_b), (1, 1));
        assert_eq!((rep.conclusions.fiber_ci, rep.conclusions.fiber_mu), (true, 1));
        assert_eq!(rep.conclusions.module_b_rank, Some(1));
        assert!(rep.conclusions.delta_spans_fiber_socle);
    }

    #[test]
    fn criterion_hypothesis_failures() {
        let b = compile(2, &["x"], "x^4");
        let id = AlgebraMorphism::identity(Arc::clone(b.algebra()));
        let k = FiniteModule::residue_field(Arc::clone(b.algebra()));
        let rep = check_flatness_criterion(&id, &k).unwrap();
        assert_eq!(rep.verdict, Verdict::HypothesisNotMet(vec!["module_a_flat"]));

        let a = compile(2, &["s"], "s^2");
        let b = compile(2, &["x", "y"], "x^2, x*y, y^2");
        let x = b.parse_element("x").unwrap();
        let y = b.parse_element("y").unwrap();
        let phi = a.substitution_morphism(Arc::clone(b.algebra()), &[x]).unwrap();
        let m = FiniteModule::cyclic(Arc::clone(b.algebra()), &[y]).unwrap();
        let rep = check_flatness_criterion(&phi, &m).unwrap();
        assert_eq!(rep.verdict, Verdict::HypothesisNotMet(vec!["edim_le"]));
        assert!(rep.hypotheses.module_a_flat);
        assert_eq!(rep.module_a_rank, Some(1));
        assert!(!rep.conclusions.module_b_flat);
    }

    #[test]
    fn group_algebra_examples() {
        let g = group_algebra(2, &[2]).unwrap();
        assert_eq!(**g.algebra(), **compile(2, &["S"], "S^2").algebra());
        assert_eq!(edim(g.algebra()), 1);
        let g = group_algebra(2, &[4]).unwrap();
        assert_eq!(**g.algebra(), **compile(2, &["S"], "S^4").algebra());
        let c = monomial_ci(3, &[2, 2]).unwrap();
        assert_eq!(c.algebra().dim(), 4);
        assert!(is_complete_intersection(c.algebra()).unwrap().is_ci);
    }

    #[test]
    fn equal_edim_examples() {
        let mut rng = instance_rng(1, 0);
        let b = compile(2, &["x"], "x^4");
        let id = AlgebraMorphism::identity(Arc::clone(b.algebra()));
        let rep = check_equal_edim_flatness(&mut rng, &id, 50, 32).unwrap();
        assert_eq!(rep.violations, 0);

        let a = compile(2, &["s"], "s^2");
        let phi = a.substitution_morphism(Arc::clone(b.algebra()), &[b.parse_element("x^2").unwrap()]).unwrap();
        let rep = check_equal_edim_flatness(&mut rng, &phi, 200, 32).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(rep.a_flat_nonzero >= 1);

        let c = compile(2, &["x"], "x^3");
        let phi = a.substitution_morphism(Arc::clone(c.algebra()), &[c.parse_element("x^2").unwrap()]).unwrap();
        let rep = check_equal_edim_flatness(&mut rng, &phi, 200, 32).unwrap();
        assert_eq!(rep.a_flat_nonzero, 0);
    }

    #[test]
    fn wtf_equiv_examples() {
        let mut rng = instance_rng(2, 0);
        let g = compile(2, &["x", "y"], "x^2, y^2");
        let rep = check_wtf_equiv_flat(&mut rng, g.algebra(), 20, 16, true).unwrap();
        assert_eq!(rep.violations, 0);
        let ng = compile(2, &["x", "y"], "x^2, x*y, y^2");
        assert_eq!(
            check_wtf_equiv_flat(&mut rng, ng.algebra(), 5, 16, true),
            Err(VerifierError::NotGorenstein)
        );
        let rep = check_wtf_equiv_flat(&mut rng, ng.algebra(), 20, 16, false).unwrap();
        assert_eq!(rep.violations, 0);
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = InstanceSpec {
            seed: 9,
            kind: GeneratorKind::Binomial,
            caps: Caps::default(),
        };
        for i in 0..5 {
            let x = generate(&spec, i).unwrap();
            let y = generate(&spec, i).unwrap();
            assert_eq!(x.morphism.phi, y.morphism.phi);
            assert_eq!(x.module, y.module);
        }
        let a = sweep(GeneratorKind::MonomialCi, 7, 20, &Caps::default()).to_string();
        let b = sweep(GeneratorKind::MonomialCi, 7, 20, &Caps::default()).to_string();
        assert_eq!(a, b);
    }
}
