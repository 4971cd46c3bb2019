use approx::assert_abs_diff_eq;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::channel::{
    build_blackwell, build_example2, build_orthogonal_bsc, random_degraded, random_rbc, random_reverse_degraded, random_semideterministic,
    random_simplex, BlackwellParams, GaussianOrthogonalParams, ParallelRbcChannel,
};
use crate::exec::Exec;
use crate::info::binary_entropy;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn bounds(poly: &NumericPolytope) -> Vec<f64> {
    poly.rows().iter().map(|r| r.1).collect()
}

#[test]
fn every_system_builds_and_names_round_trip() {
    for id in TheoremId::ALL {
        let s = system(id);
        assert!(!s.inequalities().is_empty(), "{id}");
        assert_eq!(id.name().parse::<TheoremId>().unwrap(), id);
    }
    assert!("nope".parse::<TheoremId>().is_err());
    assert_eq!("R1_PRIME".parse::<TheoremId>().unwrap(), TheoremId::R1Prime);
}

#[test]
fn info_expr_parsing() {
    assert_eq!(
        InfoExpr::parse("I(T,U1;Y1|X1)").unwrap(),
        InfoExpr::Mi(vec!["T".into(), "U1".into()], vec!["Y1".into()], vec!["X1".into()])
    );
    assert_eq!(InfoExpr::parse("H(Y2)").unwrap(), InfoExpr::Entropy(vec!["Y2".into()], vec![]));
    assert!(InfoExpr::parse("I(T)").is_err());
    assert!(InfoExpr::parse("K(T;Y)").is_err());
}

#[test]
fn trivial_aux_gives_only_relay_rate() {
    let ch = random_rbc(&mut rng(3), [2, 2, 2, 2]);
    let aux = AuxJoint::uniform([2, 1, 1, 1, 2]).unwrap();
    let joint = compose(TheoremId::R3, &Channel::Rbc(ch.clone()), &Aux::Joint(aux.clone())).unwrap();
    let at = eval_atoms(TheoremId::R3, &joint).unwrap();
    for k in ["A1", "A3", "A5", "A6"] {
        assert_abs_diff_eq!(at[k], 0.0, epsilon = 1e-12);
    }
    let poly = eval_region(TheoremId::R3, &Channel::Rbc(ch), &Aux::Joint(aux)).unwrap();
    for v in poly.vertices().unwrap() {
        let t = to_triple(&poly, &v).unwrap();
        assert!(t.r0 < 1e-9 && t.r1 < 1e-9);
        assert!(t.r2 <= at["A4"] + 1e-9);
    }
}

#[test]
fn orthogonal_noiseless_atoms() {
    let ch = Channel::Orthogonal(build_orthogonal_bsc(0.0, 0.0).unwrap());
    let aux = Aux::Orthogonal(OrthogonalAux::uniform([2, 2, 2]).unwrap());
    let poly = eval_region(TheoremId::Orthogonal, &ch, &aux).unwrap();
    let b = bounds(&poly);
    assert_abs_diff_eq!(b[0], 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(b[1], 2.0, epsilon = 1e-12);
    assert_abs_diff_eq!(b[2], 2.0, epsilon = 1e-12);
}

#[test]
fn det_private_on_blackwell() {
    let ch = Channel::Rbc(build_blackwell(0).unwrap());
    let aux = Aux::Joint(AuxJoint::uniform([1, 1, 1, 1, 3]).unwrap());
    let poly = eval_region(TheoremId::DetPrivate, &ch, &aux).unwrap();
    let b = bounds(&poly);
    let h = binary_entropy(1.0 / 3.0).unwrap();
    assert_abs_diff_eq!(b[0], h, epsilon = 1e-12);
    assert_abs_diff_eq!(b[1], h, epsilon = 1e-12);
    assert_abs_diff_eq!(b[2], 3f64.log2(), epsilon = 1e-12);
}

#[test]
fn structure_preconditions() {
    let noisy = Channel::Rbc(random_rbc(&mut rng(1), [2, 2, 2, 2]));
    let aux = Aux::Joint(AuxJoint::uniform([2, 2, 1, 2, 2]).unwrap());
    assert!(matches!(eval_region(TheoremId::Semidet, &noisy, &aux), Err(RbcError::Precondition(_))));
    let aux = Aux::Joint(AuxJoint::uniform([2, 1, 1, 1, 2]).unwrap());
    assert!(matches!(eval_region(TheoremId::DetPrivate, &noisy, &aux), Err(RbcError::Precondition(_))));
    let sd = Channel::Rbc(random_semideterministic(&mut rng(1), [2, 2, 2, 2]));
    let aux = Aux::Joint(AuxJoint::uniform([2, 2, 1, 2, 2]).unwrap());
    assert!(eval_region(TheoremId::Semidet, &sd, &aux).is_ok());
}

#[test]
fn wrong_family_is_rejected() {
    let ch = Channel::Rbc(random_rbc(&mut rng(2), [2, 2, 2, 2]));
    let aux = Aux::Orthogonal(OrthogonalAux::uniform([2, 2, 2]).unwrap());
    assert!(eval_region(TheoremId::R3, &ch, &aux).is_err());
}

#[test]
fn blackwell_closed_form() {
    let p = BlackwellParams::new(0.0, 1.0 / 3.0, 1.0 / 3.0).unwrap();
    let b = bounds(&blackwell_region(&p).unwrap());
    let h = binary_entropy(1.0 / 3.0).unwrap();
    assert_abs_diff_eq!(b[0], h, epsilon = 1e-12);
    assert_abs_diff_eq!(b[1], h, epsilon = 1e-12);
    assert_abs_diff_eq!(b[2], 3f64.log2(), epsilon = 1e-12);
    let p = BlackwellParams::new(1.0, 0.5, 0.5).unwrap();
    let b = bounds(&blackwell_region(&p).unwrap());
    assert_abs_diff_eq!(b[1], 2.0, epsilon = 1e-12);
    assert_abs_diff_eq!(b[2], 1.0, epsilon = 1e-12);
}

#[test]
fn blackwell_frontier_contains_sum_log3() {
    let c = blackwell_frontier(0.0, 30, Exec::Sequential).unwrap();
    let best = c.support(&[0.0, 1.0, 1.0]);
    assert_abs_diff_eq!(best, 3f64.log2(), epsilon = 1e-2);
    assert_eq!(c, blackwell_frontier(0.0, 30, Exec::Parallel).unwrap());
}

#[test]
fn gaussian_closed_form() {
    let g = GaussianOrthogonalParams::new(1.0, 1.0, 0.25, 1.0).unwrap();
    let b = bounds(&gaussian_orthogonal_region(&g, 1.0, 0.0).unwrap());
    assert_abs_diff_eq!(b[0], 1.160964047443681, epsilon = 1e-12);
    assert_abs_diff_eq!(b[1], 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(b[2], b[0], epsilon = 1e-12);
    let g = GaussianOrthogonalParams::new(3.0, 1.0, 1.0, 1.0).unwrap();
    let b = bounds(&gaussian_orthogonal_region(&g, 0.0, 0.0).unwrap());
    assert_abs_diff_eq!(b[0], 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(b[1], 1.160964047443681, epsilon = 1e-9);
    assert!(gaussian_orthogonal_region(&g, 1.5, 0.0).is_err());
}

#[test]
fn example2_capacities() {
    let ch = build_example2();
    let c = parallel_relay_capacity(&ch, 4, Exec::Sequential).unwrap();
    assert_abs_diff_eq!(c.value, 1.0, epsilon = 1e-9);
    let s = subchannel_capacities(&ch, 4, Exec::Sequential).unwrap();
    assert_abs_diff_eq!(s.ca, 0.0, epsilon = 1e-9);
    assert_abs_diff_eq!(s.cb, 0.0, epsilon = 1e-9);
}

#[test]
fn subchannel_caps_need_degradedness() {
    let mut r = rng(11);
    let bad = loop {
        let a = random_rbc(&mut r, [2, 2, 2, 2]);
        let ch = ParallelRbcChannel::new_unchecked(a.clone(), a);
        if ch.require_degraded().is_err() {
            break ch;
        }
    };
    assert!(matches!(subchannel_capacities(&bad, 4, Exec::Sequential), Err(RbcError::Precondition(_))));
    assert!(parallel_relay_capacity(&build_example2(), 1, Exec::Sequential).is_err());
}

#[test]
fn noiseless_pair_and_superadditivity() {
    let clean = RbcChannel::from_fn([2, 2, 2, 4], |x, x1, y1, y2| f64::from(y1 == x && y2 == x * 2 + x1)).unwrap();
    let ch = ParallelRbcChannel::new(clean.clone(), clean).unwrap();
    let c = parallel_relay_capacity(&ch, 4, Exec::Sequential).unwrap();
    assert_abs_diff_eq!(c.value, 2.0, epsilon = 1e-9);

    let mut r = rng(5);
    for _ in 0..20 {
        let ch = ParallelRbcChannel::new(random_degraded(&mut r, [2, 2, 2, 2]), random_reverse_degraded(&mut r, [2, 2, 2, 2]))
            .unwrap();
        let s = subchannel_capacities(&ch, 6, Exec::Sequential).unwrap();
        let c = parallel_relay_capacity(&ch, 6, Exec::Sequential).unwrap();
        assert!(s.sum() <= c.value + 1e-9, "{} > {}", s.sum(), c.value);
    }
}

#[test]
fn lemma1_examples() {
    let p = RateTriple::new(1.0, 0.5, 0.25).unwrap();
    let q = lemma1_transfer(&p, 0.25, 0.5).unwrap();
    assert_eq!(q, RateTriple::new(0.25, 0.75, 0.75).unwrap());
    assert!(lemma1_transfer(&p, 0.75, 0.5).is_err());
    assert!(lemma1_transfer(&p, -0.1, 0.0).is_err());
}

#[test]
fn case_classification() {
    assert_eq!(classify_exposed(1.0, 2.0, 2.0, 0.5), 1);
    assert_eq!(classify_exposed(1.0, 2.0, 2.0, 1.5), 2);
    assert_eq!(classify_exposed(1.0, 2.0, 3.0, 2.5), 3);
    assert_eq!(classify_exposed(1.0, 3.0, 2.0, 2.5), 4);
    assert_eq!(classify_exposed(1.0, 2.0, 2.0, 3.0), 5);
}

fn classify_exposed(b0: f64, b01: f64, b02: f64, bs: f64) -> u8 {
    corner::classify_case(b0, b01, b02, bs)
}

#[test]
fn degenerate_corner_points() {
    let ch = random_rbc(&mut rng(8), [2, 2, 2, 2]);
    let aux = AuxJoint::uniform([2, 1, 1, 1, 2]).unwrap();
    let cp = corner_points_r3(&ch, &aux).unwrap();
    assert!(cp.a_triple().r0.abs() < 1e-12 && cp.a_triple().r1.abs() < 1e-12);
    assert!(!cp.swapped);
}

#[test]
fn case5_corners_lie_in_region() {
    // Each destination sees one bit of X, mixed with a little noise.
    let ch = RbcChannel::from_fn([4, 2, 2, 2], |x, x1, y1, y2| {
        let b1 = if y1 == x % 2 { 0.9 } else { 0.1 };
        let b2 = if y2 == (x / 2) ^ x1 { 0.8 } else { 0.2 };
        b1 * b2
    })
    .unwrap();
    let mut found = 0;
    for s in 0..200 {
        let Aux::Joint(aux) = sample_aux(TheoremId::R3, &Channel::Rbc(ch.clone()), &AuxCards::default(), 1, s).unwrap()
        else {
            unreachable!()
        };
        let cp = corner_points_r3(&ch, &aux).unwrap();
        if cp.case != 5 {
            continue;
        }
        found += 1;
        let poly = eval_region(TheoremId::R3, &Channel::Rbc(ch.clone()), &Aux::Joint(aux)).unwrap();
        for p in [cp.a, cp.b] {
            assert!(poly.contains(&p, 1e-9), "{p:?} outside");
        }
    }
    assert!(found > 0);
}

#[test]
fn relay_pdf_matches_closed_expression() {
    let mut r = rng(21);
    for _ in 0..10 {
        let ch = random_rbc(&mut r, [2, 2, 2, 2]);
        let law = random_simplex(&mut r, 8);
        let rate = eval_relay_pdf_rate(&ch, 2, &law).unwrap();
        let aux = AuxJoint::relay_pdf(2, 2, 2, &law).unwrap();
        let joint = aux.compose(&ch).unwrap();
        let direct = joint.cond_mutual_info(&["X1", "X"], &["Y2"], &[]).unwrap();
        assert!(rate <= direct + 1e-12);
        assert!(rate >= 0.0);
    }
}

#[test]
fn bc_inner_equals_r2_without_relay() {
    let mut r = rng(13);
    for i in 0..10 {
        let bc = random_rbc(&mut r, [2, 1, 2, 2]);
        let ch = Channel::Rbc(bc);
        let aux = sample_aux(TheoremId::BcInner, &ch, &AuxCards::default(), 99, 30 + i).unwrap();
        let a = eval_region(TheoremId::BcInner, &ch, &aux).unwrap();
        let b = eval_region(TheoremId::R2, &ch, &aux).unwrap();
        assert!(polytope::same_vertex_set(&a.vertices().unwrap(), &b.vertices().unwrap(), 1e-9));
    }
}

#[test]
fn marton_contains_r3_without_relay() {
    let mut r = rng(17);
    for i in 0..10 {
        let ch = Channel::Rbc(random_rbc(&mut r, [2, 1, 2, 2]));
        let aux = sample_aux(TheoremId::BcMarton, &ch, &AuxCards::default(), 4, 30 + i).unwrap();
        let m = eval_region(TheoremId::BcMarton, &ch, &aux).unwrap();
        let r3 = eval_region(TheoremId::R3, &ch, &aux).unwrap();
        for v in r3.vertices().unwrap() {
            assert!(m.contains(&v, 1e-9));
        }
    }
}

#[test]
fn search_is_deterministic_across_exec() {
    let ch = Channel::Rbc(random_rbc(&mut rng(4), [2, 2, 2, 2]));
    let mut cfg = SearchConfig::new(60, 9);
    cfg.weights = vec![[1.0, 1.0, 1.0]];
    cfg.exec = Exec::Sequential;
    let a = search_frontier(TheoremId::R3, &ch, &cfg).unwrap();
    cfg.exec = Exec::Parallel;
    let b = search_frontier(TheoremId::R3, &ch, &cfg).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.meta("kind"), Some("inner-approx"));
}

#[test]
fn budget_one_is_the_uniform_aux() {
    let ch = Channel::Rbc(random_rbc(&mut rng(6), [2, 2, 2, 2]));
    let mut cfg = SearchConfig::new(1, 0);
    cfg.exec = Exec::Sequential;
    let cloud = search_frontier(TheoremId::Outer, &ch, &cfg).unwrap();
    let aux = sample_aux(TheoremId::Outer, &ch, &cfg.cards, 0, 0).unwrap();
    let poly = eval_region(TheoremId::Outer, &ch, &aux).unwrap();
    let mut direct = pareto_filter_cloud(vertex_cloud(&poly, 0).unwrap());
    direct.sort_canonical();
    assert_eq!(cloud.triples().collect::<Vec<_>>(), direct.triples().collect::<Vec<_>>());
    assert!(search_frontier(TheoremId::Outer, &ch, &SearchConfig::new(0, 0)).is_err());
}

fn pareto_filter_cloud(points: Vec<CloudPoint>) -> RegionCloud {
    crate::cloud::pareto_filter(&RegionCloud::new(points))
}

#[test]
fn search_rejects_large_cards() {
    let ch = Channel::Rbc(random_rbc(&mut rng(6), [2, 2, 2, 2]));
    let mut cfg = SearchConfig::new(5, 0);
    cfg.cards.t = MAX_AUX_CARD + 1;
    assert!(search_frontier(TheoremId::R3, &ch, &cfg).is_err());
}

#[test]
fn relay_pdf_rate_is_the_r3_slice() {
    let mut r = rng(23);
    for _ in 0..20 {
        let ch = random_rbc(&mut r, [2, 2, 2, 2]);
        let law = random_simplex(&mut r, 8);
        let rate = eval_relay_pdf_rate(&ch, 2, &law).unwrap();
        let aux = Aux::Joint(AuxJoint::relay_pdf(2, 2, 2, &law).unwrap());
        let poly = eval_region(TheoremId::R3, &Channel::Rbc(ch), &aux).unwrap();
        let best = poly
            .vertices()
            .unwrap()
            .iter()
            .filter(|v| v[0].abs() < 1e-12 && v[1].abs() < 1e-12)
            .map(|v| v[2])
            .fold(f64::NEG_INFINITY, f64::max);
        assert_abs_diff_eq!(best, rate, epsilon = 1e-10);
    }
}

#[test]
fn det_private_points_respect_cut_set() {
    let ch = Channel::Rbc(build_blackwell(1).unwrap());
    let mut cfg = SearchConfig::new(80, 3);
    cfg.refine = 0.0;
    let cloud = search_frontier(TheoremId::DetPrivate, &ch, &cfg).unwrap();
    for p in &cloud.points {
        let aux = sample_aux(TheoremId::DetPrivate, &ch, &cfg.cards, cfg.seed, p.source as usize).unwrap();
        let d = compose(TheoremId::DetPrivate, &ch, &aux).unwrap();
        let c1 = d.cond_mutual_info(&["X"], &["Y1"], &["X1"]).unwrap();
        let c2 = d.cond_mutual_info(&["X", "X1"], &["Y2"], &[]).unwrap();
        let c12 = d.cond_mutual_info(&["X"], &["Y1", "Y2"], &["X1"]).unwrap();
        let RateTriple { r1, r2, .. } = p.rate;
        assert!(c1 - r1 >= -1e-9 && c2 - r2 >= -1e-9 && c12 - r1 - r2 >= -1e-9, "{p:?}");
    }
}
