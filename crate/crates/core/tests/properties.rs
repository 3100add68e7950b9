use std::sync::Arc;

use artinflat::invariants::{edim, is_complete_intersection, socle, wiebe_matrix};
use artinflat::lemma::{epsilon, epsilon_by_product};
use artinflat::verifier::{check_flatness_criterion, generate, instance_rng, random_algebra, random_module, Caps, GeneratorKind, InstanceSpec, Verdict};
use artinflat::{CompiledAlgebra, FieldConfig, FiniteModule, Mat, Poly, Presentation, Subspace, WtfMode};
use proptest::prelude::*;

const PRIMES: [u64; 5] = [2, 3, 5, 7, 97];

fn field() -> impl Strategy<Value = FieldConfig> {
    prop::sample::select(PRIMES.to_vec()).prop_map(|p| FieldConfig::new(p).unwrap())
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Mat> {
    (field(), prop::collection::vec(any::<u64>(), rows * cols)).prop_map(move |(f, v)| {
        let rows_v: Vec<Vec<u64>> = v.chunks(cols.max(1)).take(rows).map(|c| c.iter().map(|&x| f.reduce(x)).collect()).collect();
        if cols == 0 {
            Mat::zeros(f, rows, 0)
        } else {
            Mat::from_rows(f, cols, &rows_v).unwrap()
        }
    })
}

fn seeded_algebra(seed: u64) -> CompiledAlgebra {
    let mut rng = instance_rng(seed, 0);
    let kind = GeneratorKind::SEEDED[(seed % 4) as usize];
    let p = [2, 3, 5][(seed / 4 % 3) as usize];
    let r = 1 + (seed / 12 % 3) as usize;
    random_algebra(&mut rng, kind, p, r, "x", 16).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_inverse_and_mul_add(f in field(), a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let (a, b, c) = (f.reduce(a), f.reduce(b), f.reduce(c));
        if a != 0 {
            prop_assert_eq!(f.mul(a, f.inv(a)), 1);
        }
        prop_assert_eq!(f.mul_add(a, b, c), f.add(a, f.mul(b, c)));
        prop_assert_eq!(f.add(a, f.neg(a)), 0);
    }

    #[test]
    fn rank_nullity_and_kernel(m in (1usize..7, 1usize..7).prop_flat_map(|(r, c)| matrix(r, c))) {
        let k = m.kernel();
        prop_assert_eq!(m.rank() + k.dim(), m.cols());
        for v in k.basis() {
            prop_assert!(m.mul_vec(v).iter().all(|&x| x == 0));
        }
        prop_assert_eq!(m.rank(), m.transpose().rank());
    }

    #[test]
    fn solve_finds_preimages(m in (1usize..7, 1usize..7).prop_flat_map(|(r, c)| matrix(r, c)), seed in any::<u64>()) {
        let f = m.field();
        let x: Vec<u64> = (0..m.cols()).map(|i| f.reduce(seed.rotate_left(i as u32 * 7))).collect();
        let b = m.mul_vec(&x);
        let y = m.solve(&b).expect("b is in the image");
        prop_assert_eq!(m.mul_vec(&y), b);
    }

    #[test]
    fn subspace_dimension_formula(a in matrix(4, 6), b in matrix(3, 6)) {
        let f = a.field();
        let b = Mat::from_rows(f, 6, &(0..3).map(|r| b.row(r).iter().map(|&x| f.reduce(x)).collect()).collect::<Vec<_>>()).unwrap();
        let u = Subspace::span(f, 6, (0..4).map(|r| a.row(r).to_vec()));
        let w = Subspace::span(f, 6, (0..3).map(|r| b.row(r).to_vec()));
        let s = u.sum(&w).unwrap();
        let i = u.intersect(&w).unwrap();
        prop_assert_eq!(s.dim() + i.dim(), u.dim() + w.dim());
        prop_assert!(i.is_subspace_of(&u) && i.is_subspace_of(&w));
    }

    #[test]
    fn signs_agree_with_product_formula(set in 1u32..(1 << 16), i in 1usize..=16) {
        if set & (1 << (i - 1)) != 0 {
            prop_assert_eq!(epsilon(i, set).unwrap(), epsilon_by_product(i, set).unwrap());
        } else {
            prop_assert!(epsilon(i, set).is_err());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn algebra_ring_axioms(seed in 0u64..400, s in any::<u64>()) {
        let c = seeded_algebra(seed);
        let a = c.algebra();
        a.validate().unwrap();
        let p = a.field().p();
        let el = |k: u32| a.element((0..a.dim()).map(|i| s.rotate_left(k * 13 + i as u32 * 5) % p).collect()).unwrap();
        let (x, y, z) = (el(1), el(2), el(3));
        prop_assert_eq!(a.mul(&a.mul(&x, &y), &z), a.mul(&x, &a.mul(&y, &z)));
        prop_assert_eq!(a.mul(&x, &y), a.mul(&y, &x));
        prop_assert_eq!(a.mul(&x, &a.add(&y, &z)), a.add(&a.mul(&x, &y), &a.mul(&x, &z)));
        let nil = a.nilpotency_index() as u64;
        let mx = a.sub(&x, &a.scalar(x.coords()[0]));
        prop_assert!(a.pow(&mx, nil).is_zero());
        // 2x2 determinants are multiplicative
        let m1 = vec![vec![x.clone(), y.clone()], vec![z.clone(), el(4)]];
        let m2 = vec![vec![el(5), el(6)], vec![el(7), el(8)]];
        let prod: Vec<Vec<_>> = (0..2)
            .map(|i| (0..2).map(|j| a.add(&a.mul(&m1[i][0], &m2[0][j]), &a.mul(&m1[i][1], &m2[1][j]))).collect())
            .collect();
        prop_assert_eq!(a.det(&prod).unwrap(), a.mul(&a.det(&m1).unwrap(), &a.det(&m2).unwrap()));
    }

    #[test]
    fn normal_form_is_multiplicative(seed in 0u64..400, s in any::<u64>()) {
        let c = seeded_algebra(seed);
        let f = c.algebra().field();
        let n = c.variables().len();
        let poly = |k: u32| {
            let mut q = Poly::zero(f, n);
            for t in 0..4u32 {
                let mut m = artinflat::Monomial::one(n);
                for (i, e) in m.0.iter_mut().enumerate() {
                    *e = (s.rotate_left(k * 11 + t * 3 + i as u32) % 4) as u32;
                }
                q.add_term(m, f.reduce(s.rotate_left(k + t * 17)));
            }
            q
        };
        let (g, h) = (poly(1), poly(2));
        let a = c.algebra();
        prop_assert_eq!(c.normal_form(&g.mul(&h)), a.mul(&c.normal_form(&g), &c.normal_form(&h)));
        prop_assert_eq!(c.normal_form(&g.add(&h)), a.add(&c.normal_form(&g), &c.normal_form(&h)));
    }

    #[test]
    fn flatness_and_wtf_on_generated_modules(seed in 0u64..400, idx in 0u64..8) {
        let c = seeded_algebra(seed);
        let a = c.algebra();
        let mut rng = instance_rng(seed, idx + 1);
        let (m, _) = random_module(&mut rng, a, 24, 0.3).unwrap();
        let v = m.is_flat();
        if v.is_flat {
            prop_assert_eq!(v.rank.unwrap() * a.dim(), m.dim());
            if a.dim() <= 9 || a.field().p() == 2 && a.dim() <= 12 {
                prop_assert!(m.is_weakly_torsion_free(WtfMode::exhaustive()).unwrap().holds);
            }
        }
        let k = FiniteModule::residue_field(Arc::clone(a));
        let sum = m.direct_sum(&k).unwrap();
        prop_assert_eq!(sum.is_flat().is_flat, a.dim() == 1 && v.is_flat);
        prop_assert_eq!(FiniteModule::free(Arc::clone(a), 2).is_flat().rank, Some(2));
    }

    #[test]
    fn wiebe_exists_iff_ci(seed in 0u64..400) {
        let c = seeded_algebra(seed);
        let a = c.algebra();
        let ci = is_complete_intersection(a).unwrap();
        prop_assert!(ci.mu >= ci.edim);
        prop_assert_eq!(ci.edim, edim(a));
        let w = wiebe_matrix(a, &a.min_generators()).unwrap();
        prop_assert_eq!(w.is_some(), ci.is_ci);
        if let Some(w) = w {
            w.verify(a).unwrap();
            // the determinant spans the socle
            let s = socle(a);
            prop_assert_eq!(s.dim(), 1);
            prop_assert!(!w.det.is_zero() && s.contains(w.det.coords()));
        }
    }

    #[test]
    fn generated_instances_never_violate(seed in any::<u64>(), kind in 0usize..4, index in 0u64..1000) {
        let spec = InstanceSpec { seed, kind: GeneratorKind::SEEDED[kind], caps: Caps::default() };
        let inst = generate(&spec, index).unwrap();
        prop_assert_eq!(&generate(&spec, index).unwrap().module, &inst.module);
        let rep = check_flatness_criterion(&inst.morphism.phi, &inst.module).unwrap();
        prop_assert!(!matches!(rep.verdict, Verdict::Violation(_)), "{}", rep);
        prop_assert!(rep.conclusions.morphism_flat);
    }
}

#[test]
fn presentation_roundtrips_through_display() {
    for seed in 0..40 {
        let c = seeded_algebra(seed);
        let text = c.presentation().to_string();
        let pres = c.presentation();
        let vars: Vec<&str> = pres.variables.iter().map(String::as_str).collect();
        let rels = text.split_once("/(").and_then(|(_, r)| r.strip_suffix(')')).unwrap();
        let again = Presentation::parse(pres.field.p(), &vars, rels).unwrap().compile().unwrap();
        assert_eq!(**again.algebra(), **c.algebra(), "{text}");
    }
}
