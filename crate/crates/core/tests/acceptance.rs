//! Acceptance gate: eight criteria, one PASS/FAIL line each. Exit status is
//! nonzero if any criterion fails.

use std::sync::Arc;
use std::time::Instant;

use artinflat::invariants::{edim, is_complete_intersection, is_gorenstein, wiebe_matrix};
use artinflat::lemma::{epsilon, epsilon_bar, epsilon_by_product, initial_segment, subsets_of_size, MembershipCertificate, MinorTable};
use artinflat::verifier::{
    check_equal_edim_flatness, check_flatness_criterion, check_wtf_equiv_flat, equal_edim_morphism, generate, group_algebra, instance_rng, random_algebra, random_gorenstein,
    random_lemma_instance, random_module, random_morphism, random_non_gorenstein, sweep, Caps, GeneratorKind, InstanceSpec, Verdict,
};
use artinflat::{AlgebraMorphism, CompiledAlgebra, Element, FiniteLocalAlgebra, FiniteModule, Mat, Presentation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn compile(p: u64, vars: &[&str], rels: &str) -> CompiledAlgebra {
    Presentation::parse(p, vars, rels).unwrap().compile().unwrap()
}

fn contains(set: u32, i: usize) -> bool {
    set & (1 << (i - 1)) != 0
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn parity(p: &[usize]) -> bool {
    let mut inv = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            inv += (p[i] > p[j]) as usize;
        }
    }
    inv % 2 == 1
}

/// Leibniz determinant of the submatrix with the given rows and columns
/// (1-based) deleted.
fn leibniz_minor(a: &FiniteLocalAlgebra, w: &[Vec<Element>], rows_out: u32, cols_out: u32) -> Element {
    let n = w.len();
    let rows: Vec<usize> = (1..=n).filter(|&i| !contains(rows_out, i)).collect();
    let cols: Vec<usize> = (1..=n).filter(|&i| !contains(cols_out, i)).collect();
    let mut total = a.zero();
    for perm in permutations(rows.len()) {
        let mut t = a.one();
        for (r, &c) in rows.iter().zip(&perm) {
            t = a.mul(&t, &w[r - 1][cols[c] - 1]);
        }
        total = if parity(&perm) { a.sub(&total, &t) } else { a.add(&total, &t) };
    }
    total
}

fn random_matrix(rng: &mut ChaCha8Rng, a: &FiniteLocalAlgebra, n: usize) -> Vec<Vec<Element>> {
    let p = a.field().p();
    (0..n)
        .map(|_| (0..n).map(|_| a.element((0..a.dim()).map(|_| rng.gen_range(0..p)).collect()).unwrap()).collect())
        .collect()
}

fn criterion_1() -> Outcome {
    let mut sign_cases = 0;
    for n in 1..=6 {
        for set in 0..1u32 << n {
            for i in (1..=n).filter(|&i| contains(set, i)) {
                let rest: Vec<usize> = (1..=n).filter(|&j| j == i || !contains(set, j)).collect();
                let pos = rest.iter().position(|&j| j == i).unwrap() + 1;
                let expected: i8 = if pos % 2 == 0 { 1 } else { -1 };
                ensure(epsilon(i, set).unwrap() == expected, || format!("epsilon({i}, {set:#b})"))?;
                ensure(epsilon_by_product(i, set).unwrap() == expected, || format!("product sign ({i}, {set:#b})"))?;
                for j in (1..=n).filter(|&j| j != i && contains(set, j)) {
                    let lhs = epsilon(i, set).unwrap() * epsilon(i, set & !(1 << (j - 1))).unwrap();
                    ensure(lhs == epsilon_bar(i, j).unwrap(), || format!("sign ratio ({i}, {j}, {set:#b})"))?;
                }
                sign_cases += 1;
            }
        }
    }

    let algebras = [
        compile(2, &["x", "y"], "x^2, y^2"),
        compile(3, &["x"], "x^3"),
        compile(5, &["x", "y"], "x^2, x*y, y^3"),
        compile(2, &["x", "y", "z"], "x^2, y^2, z^2, x*y*z"),
        compile(3, &["x", "y"], "x^2 - y^2, x*y"),
        compile(7, &["t"], "t^4"),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(0x51_6e);
    let mut matrices = 0;
    let mut identities = 0;
    for c in &algebras {
        let a = c.algebra();
        for k in 0..12 {
            let n = 1 + k % 4;
            let w = random_matrix(&mut rng, a, n);
            let mut table = MinorTable::new(Arc::clone(a), w.clone()).unwrap();
            let f = a.field();
            for l in 0..n {
                let el = initial_segment(l);
                for set in subsets_of_size(n, l + 1) {
                    for i in 1..=n {
                        // Σ_{k>l} (-1)^k w_{k,i} Δ^{E_l ∪ k}_I
                        let mut sum = a.zero();
                        for k in l + 1..=n {
                            let d = leibniz_minor(a, &w, el | 1 << (k - 1), set);
                            sum = a.add(&sum, &a.scale(&a.mul(&w[k - 1][i - 1], &d), f.sign(k as i64)));
                        }
                        let expect = if contains(set, i) {
                            let s = f.mul(f.sign(l as i64), f.from_i64(epsilon(i, set).unwrap() as i64));
                            a.scale(&leibniz_minor(a, &w, el, set & !(1 << (i - 1))), s) == sum
                        } else {
                            sum.is_zero()
                        };
                        ensure(expect, || format!("oracle expansion n={n} l={l} I={set:#b} i={i}"))?;
                        let got = table.check_expansion_identities(l, set, i).unwrap();
                        ensure(got, || format!("engine expansion n={n} l={l} I={set:#b} i={i}"))?;
                        identities += 1;
                    }
                }
            }
            for rows in 0..1u32 << n {
                for cols in subsets_of_size(n, rows.count_ones() as usize) {
                    ensure(table.minor(rows, cols).unwrap() == leibniz_minor(a, &w, rows, cols), || format!("minor {rows:#b} {cols:#b}"))?;
                }
            }
            matrices += 1;
        }
    }
    Ok(format!(
        "{sign_cases} sign cases, {identities} expansion identities on {matrices} matrices over {} algebras",
        algebras.len()
    ))
}

fn lemma_caps() -> Caps {
    Caps {
        primes: vec![2, 3, 5],
        max_vars: 4,
        max_dim_a: 16,
        max_dim_b: 32,
        max_dim_m: 64,
    }
}

fn criterion_2() -> Outcome {
    let caps = lemma_caps();
    let results: Vec<Result<(usize, bool), String>> = (0..520u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = instance_rng(0x1e_55a, i);
            let (inst, mut m) = random_lemma_instance(&mut rng, &caps).map_err(|e| format!("instance {i}: {e}"))?;
            let module = inst.module();
            let ring = module.ring();
            let n = inst.n();
            ensure(n <= 4 && ring.dim() <= 32 && module.dim() <= 64, || format!("instance {i} over size"))?;
            // sometimes try an arbitrary element and keep it when the precondition holds
            let mut arbitrary = false;
            if rng.gen_bool(0.3) {
                let p = ring.field().p();
                let cand: Vec<u64> = (0..module.dim()).map(|_| rng.gen_range(0..p)).collect();
                if inst.jx().contains(&module.act(&inst.delta(), &cand)) {
                    m = cand;
                    arbitrary = true;
                }
            }
            ensure(inst.jx().contains(&module.act(&inst.delta(), &m)), || format!("instance {i}: precondition"))?;
            let cert = inst.membership_certificate(&m).map_err(|e| format!("instance {i}: {e}"))?;
            ensure(cert.verify(), || format!("instance {i}: verify"))?;
            // direct solve: m = Σ u_i m_i
            let blocks: Vec<Mat> = cert.u.iter().map(|u| module.action_of(u)).collect();
            let refs: Vec<&Mat> = blocks.iter().collect();
            let stacked = Mat::hstack(ring.field(), module.dim(), &refs);
            ensure(stacked.solve(&m).is_some(), || format!("instance {i}: direct solve"))?;
            Ok((n, arbitrary))
        })
        .collect();
    let mut count = 0;
    let mut arbitrary = 0;
    let mut by_n = [0usize; 5];
    for r in results {
        let (n, a) = r?;
        count += 1;
        arbitrary += a as usize;
        by_n[n] += 1;
    }
    ensure(count >= 500, || format!("only {count} instances"))?;
    Ok(format!("{count} certificates verified (n=1..4: {:?}), {arbitrary} from arbitrary elements", &by_n[1..]))
}

fn criterion_3() -> Outcome {
    let caps = Caps::default();
    let per_kind = 700u64;
    let mut pass = 0;
    let mut by_prime = std::collections::BTreeMap::new();
    for (k, kind) in GeneratorKind::SEEDED.into_iter().enumerate() {
        let spec = InstanceSpec {
            seed: 0x7e0 + k as u64,
            kind,
            caps: caps.clone(),
        };
        let results: Vec<Result<Option<u64>, String>> = (0..per_kind)
            .into_par_iter()
            .map(|i| {
                let inst = generate(&spec, i).map_err(|e| format!("{kind} {i}: {e}"))?;
                let rep = check_flatness_criterion(&inst.morphism.phi, &inst.module).map_err(|e| format!("{kind} {i}: {e}"))?;
                match &rep.verdict {
                    Verdict::Violation(v) => Err(format!("{kind} {i}: violation {v:?}\n{rep}")),
                    Verdict::HypothesisNotMet(_) => Ok(None),
                    Verdict::Pass => {
                        let c = &rep.conclusions;
                        let ok = c.morphism_flat
                            && c.morphism_rank.map(|r| r * rep.dim_a) == Some(rep.dim_b)
                            && rep.edim_a == rep.edim_b
                            && c.fiber_ci
                            && c.fiber_mu == c.fiber_edim
                            && c.fiber_dim * rep.dim_a == rep.dim_b
                            && c.module_b_flat
                            && c.module_b_rank.map(|r| r * rep.dim_b) == Some(rep.dim_m)
                            && c.delta_outside_extended_ideal
                            && c.delta_spans_fiber_socle;
                        ensure(ok, || format!("{kind} {i}: pass with inconsistent conclusions\n{rep}"))?;
                        Ok(Some(inst.morphism.a.algebra().field().p()))
                    }
                }
            })
            .collect();
        for r in results {
            if let Some(p) = r? {
                pass += 1;
                *by_prime.entry(p).or_insert(0usize) += 1;
            }
        }
    }
    ensure(pass >= 1000, || format!("only {pass} instances met all hypotheses"))?;
    ensure(by_prime.len() == 3, || format!("primes covered: {by_prime:?}"))?;
    Ok(format!("{pass} instances with all hypotheses, 0 violations, by prime {by_prime:?}"))
}

fn desmit_caps() -> Caps {
    Caps {
        primes: vec![2, 3, 5],
        max_vars: 3,
        max_dim_a: 8,
        max_dim_b: 16,
        max_dim_m: 32,
    }
}

fn criterion_4() -> Outcome {
    let caps = desmit_caps();
    let results: Vec<Result<(usize, usize), String>> = (0..60u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = instance_rng(3557, i);
            let inst = equal_edim_morphism(&mut rng, &caps).map_err(|e| format!("morphism {i}: {e}"))?;
            ensure(edim(inst.a.algebra()) == edim(inst.b.algebra()), || format!("morphism {i}: edim differs"))?;
            let rep = check_equal_edim_flatness(&mut rng, &inst.phi, 200, caps.max_dim_m).map_err(|e| format!("morphism {i}: {e}"))?;
            ensure(rep.violations == 0, || format!("morphism {i} ({}): {rep}", inst.description))?;
            Ok((rep.tested, rep.a_flat_nonzero))
        })
        .collect();
    let mut morphisms = 0;
    let mut productive = 0;
    let mut samples = 0;
    let mut found = 0;
    for r in results {
        let (t, a) = r?;
        ensure(t >= 200, || "short sample".into())?;
        morphisms += 1;
        samples += t;
        found += a;
        productive += (a > 0) as usize;
    }
    ensure(productive * 5 >= morphisms, || format!("only {productive}/{morphisms} morphisms gave an A-flat module"))?;
    Ok(format!(
        "{morphisms} morphisms, {samples} samples, {found} nonzero A-flat all B-flat, {productive} morphisms productive"
    ))
}

fn criterion_5() -> Outcome {
    let bounds = [(2u64, 8usize), (3, 5), (5, 5)];
    let results: Vec<Result<usize, String>> = (0..105u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = instance_rng(0x3_7, i);
            let (p, max_dim) = bounds[i as usize % bounds.len()];
            let r = random_gorenstein(&mut rng, p, max_dim).map_err(|e| format!("algebra {i}: {e}"))?;
            ensure(is_gorenstein(r.algebra()), || format!("algebra {i} not Gorenstein"))?;
            let rep = check_wtf_equiv_flat(&mut rng, r.algebra(), 20, 16, true).map_err(|e| format!("algebra {i}: {e}"))?;
            ensure(rep.violations == 0, || format!("algebra {i} {}: {rep}", r.presentation()))?;
            Ok(rep.modules)
        })
        .collect();
    let mut gor = 0;
    let mut modules = 0;
    for r in results {
        let m = r?;
        ensure(m >= 20, || "short module sample".into())?;
        gor += 1;
        modules += m;
    }
    let forward: Vec<Result<usize, String>> = (0..55u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = instance_rng(56, i);
            let p = [2, 3][i as usize % 2];
            let r = random_non_gorenstein(&mut rng, p, if p == 2 { 8 } else { 5 }).map_err(|e| format!("algebra {i}: {e}"))?;
            let rep = check_wtf_equiv_flat(&mut rng, r.algebra(), 20, 16, false).map_err(|e| format!("algebra {i}: {e}"))?;
            ensure(rep.violations == 0, || format!("non-Gorenstein {i} {}: {rep}", r.presentation()))?;
            Ok(rep.modules)
        })
        .collect();
    let mut non = 0;
    for r in forward {
        r?;
        non += 1;
    }
    Ok(format!("{gor} Gorenstein algebras ({modules} modules) agree; forward direction on {non} non-Gorenstein algebras"))
}

fn criterion_6() -> Outcome {
    // (a)
    let a = compile(2, &["s"], "s^2");
    let b = compile(2, &["x", "y"], "x^2, x*y, y^2");
    let phi = a.substitution_morphism(Arc::clone(b.algebra()), &[b.parse_element("x").unwrap()]).unwrap();
    let m = FiniteModule::cyclic(Arc::clone(b.algebra()), &[b.parse_element("y").unwrap()]).unwrap();
    let rep = check_flatness_criterion(&phi, &m).map_err(|e| e.to_string())?;
    ensure(rep.verdict == Verdict::HypothesisNotMet(vec!["edim_le"]), || format!("(a) verdict {}", rep.verdict))?;
    ensure(rep.hypotheses.module_a_flat && !rep.conclusions.module_b_flat, || "(a) flatness".into())?;

    // (b)
    let caps = desmit_caps();
    let mut morphisms: Vec<AlgebraMorphism> = Vec::new();
    let c = compile(2, &["x"], "x^3");
    morphisms.push(a.substitution_morphism(Arc::clone(c.algebra()), &[c.parse_element("x^2").unwrap()]).unwrap());
    let mut rng = instance_rng(0x6b, 0);
    let mut attempts = 0;
    while morphisms.len() < 30 && attempts < 2000 {
        attempts += 1;
        let p = [2u64, 3, 5][rng.gen_range(0..3)];
        let r = rng.gen_range(1..=2);
        let ka = GeneratorKind::SEEDED[rng.gen_range(0..4)];
        let kb = GeneratorKind::SEEDED[rng.gen_range(0..4)];
        let (Ok(src), Ok(tgt)) = (
            random_algebra(&mut rng, ka, p, r, "s", caps.max_dim_a),
            random_algebra(&mut rng, kb, p, r, "x", caps.max_dim_b),
        ) else {
            continue;
        };
        if tgt.algebra().dim() % src.algebra().dim() == 0 || edim(tgt.algebra()) > edim(src.algebra()) {
            continue;
        }
        if let Ok(phi) = random_morphism(&mut rng, &src, &tgt, 64) {
            morphisms.push(phi);
        }
    }
    ensure(morphisms.len() >= 30, || format!("(b) only {} morphisms", morphisms.len()))?;
    let mut samples = 0;
    for (i, phi) in morphisms.iter().enumerate() {
        let mut rng = instance_rng(0x6c, i as u64);
        let rep = check_equal_edim_flatness(&mut rng, phi, 200, caps.max_dim_m).map_err(|e| e.to_string())?;
        ensure(rep.a_flat_nonzero == 0, || format!("(b) morphism {i}: {rep}"))?;
        samples += rep.tested;
        // the target itself is never A-flat
        let b_over_a = FiniteModule::free(Arc::clone(phi.target()), 1).restrict_scalars(phi).unwrap();
        ensure(!b_over_a.is_flat().is_flat, || format!("(b) morphism {i} flat"))?;
    }

    // (c)
    let mut algebras = vec![
        compile(2, &["x", "y"], "x^2, x*y, y^2"),
        compile(3, &["x", "y", "z"], "x^2 - y^2, y^2 - z^2, x*y, y*z, z*x"),
        compile(2, &["x", "y"], "x^2, y^2"),
        compile(5, &["x"], "x^4"),
        compile(2, &[], ""),
    ];
    let mut rng = instance_rng(0x6d, 0);
    for i in 0..60 {
        let kind = GeneratorKind::SEEDED[i % 4];
        let p = [2u64, 3, 5][i % 3];
        let r = rng.gen_range(1..=3);
        if let Ok(c) = random_algebra(&mut rng, kind, p, r, "x", 16) {
            algebras.push(c);
        }
    }
    let (mut ci, mut non_ci) = (0, 0);
    for c in &algebras {
        let a = c.algebra();
        let is_ci = is_complete_intersection(a).map_err(|e| e.to_string())?.is_ci;
        let w = wiebe_matrix(a, &a.min_generators()).map_err(|e| e.to_string())?;
        ensure(w.is_none() == !is_ci, || format!("(c) wiebe/ci mismatch on {}", c.presentation()))?;
        if let Some(w) = w {
            w.verify(a).map_err(|e| format!("(c) {}: {e}", c.presentation()))?;
            ci += 1;
        } else {
            non_ci += 1;
        }
    }
    ensure(non_ci > 0 && ci > 0, || "(c) needs both classes".into())?;
    Ok(format!(
        "(a) edim_le flagged; (b) {} morphisms, {samples} samples, no A-flat module; (c) {ci} CI with Wiebe matrix, {non_ci} non-CI without",
        morphisms.len()
    ))
}

fn criterion_7() -> Outcome {
    let mut checked = 0;
    for (p, alphas) in [(2u64, vec![2u32, 4, 8]), (3, vec![3, 9])] {
        for r in 1..=3usize {
            let mut tuple = vec![0usize; r];
            loop {
                let a: Vec<u32> = tuple.iter().map(|&k| alphas[k]).collect();
                if a.iter().map(|&x| x as usize).product::<usize>() <= 256 {
                    let g = group_algebra(p, &a).map_err(|e| format!("{a:?}: {e}"))?;
                    ensure(edim(g.algebra()) == r, || format!("edim of F_{p}[G], G exponents {a:?}"))?;
                    ensure(g.algebra().dim() == a.iter().map(|&x| x as usize).product::<usize>(), || format!("order {a:?}"))?;
                    checked += 1;
                }
                // next tuple
                let mut k = 0;
                while k < r && tuple[k] + 1 == alphas.len() {
                    tuple[k] = 0;
                    k += 1;
                }
                if k == r {
                    break;
                }
                tuple[k] += 1;
            }
        }
    }
    // seeded group algebras from the generator
    let mut rng = instance_rng(0x7, 0);
    for _ in 0..40 {
        let p = [2u64, 3][rng.gen_range(0..2)];
        let r = rng.gen_range(1..=3);
        let g = random_algebra(&mut rng, GeneratorKind::GroupAlgebra, p, r, "S", 64).map_err(|e| e.to_string())?;
        ensure(edim(g.algebra()) == g.presentation().nvars(), || format!("generated {}", g.presentation()))?;
        checked += 1;
    }
    Ok(format!("edim(k[G]) = r on {checked} group algebras"))
}

fn criterion_8() -> Outcome {
    let caps = Caps::default();
    for kind in GeneratorKind::SEEDED {
        let first = sweep(kind, 7, 60, &caps);
        let x = first.to_string();
        let y = sweep(kind, 7, 60, &caps).to_string();
        ensure(x == y, || format!("sweep {kind} differs between runs"))?;
        ensure(first.errors == 0 && first.violations == 0, || format!("sweep {kind}: {} errors", first.errors))?;
    }
    let lcaps = lemma_caps();
    for i in 0..40u64 {
        let mut r1 = instance_rng(0x8, i);
        let mut r2 = instance_rng(0x8, i);
        let (i1, m1) = random_lemma_instance(&mut r1, &lcaps).map_err(|e| e.to_string())?;
        let (i2, m2) = random_lemma_instance(&mut r2, &lcaps).map_err(|e| e.to_string())?;
        ensure(m1 == m2 && i1.module() == i2.module(), || format!("lemma instance {i} differs"))?;
        let cert = i1.membership_certificate(&m1).map_err(|e| e.to_string())?;
        let text = cert.to_text();
        ensure(text == i2.membership_certificate(&m2).unwrap().to_text(), || format!("certificate {i} differs"))?;
        let back = MembershipCertificate::from_text(&text).map_err(|e| e.to_string())?;
        ensure(back == cert && back.verify() && back.to_text() == text, || format!("certificate {i} round trip"))?;
    }
    let mut r1 = instance_rng(0x9, 0);
    let mut r2 = instance_rng(0x9, 0);
    let b = compile(3, &["x", "y"], "x^3, y^2");
    for _ in 0..20 {
        let (m1, d1) = random_module(&mut r1, b.algebra(), 24, 0.3).unwrap();
        let (m2, d2) = random_module(&mut r2, b.algebra(), 24, 0.3).unwrap();
        ensure(m1 == m2 && d1 == d2, || "module generator differs".into())?;
    }
    Ok("4 sweeps byte-identical, 40 certificates round-trip, module generator reproducible".into())
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("sign and minor identities", criterion_1),
        ("lemma soundness", criterion_2),
        ("flatness criterion sweep", criterion_3),
        ("equal-edim sweep", criterion_4),
        ("flat iff weakly torsion-free", criterion_5),
        ("negative controls", criterion_6),
        ("group algebra edim", criterion_7),
        ("determinism", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panic: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} ({secs:.1}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} ({secs:.1}s): {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
