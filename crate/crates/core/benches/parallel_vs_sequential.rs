use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rbc_regions::channel::{build_orthogonal_bsc, random_rbc, Channel};
use rbc_regions::cloud::RateTriple;
use rbc_regions::exec::Exec;
use rbc_regions::polytope::{equivalent_under, fme_eliminate, parse_relations, transfer_substituted_system, transferred_system};
use rbc_regions::region::{search_frontier, OrthogonalAux, SearchConfig, TheoremId};
use rbc_regions::sim::{simulate_orthogonal, SimParams, TypicalityRule};

const STRATEGIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn frontier(c: &mut Criterion) {
    let ch = Channel::Rbc(random_rbc(&mut ChaCha8Rng::seed_from_u64(1), [2, 2, 2, 2]));
    let mut g = c.benchmark_group("search_frontier_r3_budget400");
    g.sample_size(10);
    for (name, exec) in STRATEGIES {
        let mut cfg = SearchConfig::new(400, 7);
        cfg.exec = exec;
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| search_frontier(TheoremId::R3, &ch, &cfg).unwrap()));
    }
    g.finish();
}

fn equivalence(c: &mut Criterion) {
    let projected = fme_eliminate(&transfer_substituted_system(), &["D1", "D2"]).unwrap();
    let target = transferred_system();
    let rel = parse_relations(target.atoms(), "nonneg\nA1 <= A2\nA3 <= A4\nA5 <= A1 + A3\n").unwrap();
    let mut g = c.benchmark_group("equivalent_under_200_trials");
    g.sample_size(10);
    for (name, exec) in STRATEGIES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| equivalent_under(&projected, &target, &rel, 200, 3, exec).unwrap())
        });
    }
    g.finish();
}

fn simulation(c: &mut Criterion) {
    let ch = build_orthogonal_bsc(0.05, 0.05).unwrap();
    let law = OrthogonalAux::uniform([2, 2, 2]).unwrap();
    let mut g = c.benchmark_group("simulate_orthogonal_n10_200_trials");
    g.sample_size(10);
    for (name, exec) in STRATEGIES {
        let mut p = SimParams::new(10, 4, RateTriple::new(0.1, 0.3, 0.4).unwrap(), 200, 5);
        p.rule = TypicalityRule::Absolute;
        p.epsilon = 0.2;
        p.exec = exec;
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| simulate_orthogonal(&ch, &law, &p).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, frontier, equivalence, simulation);
criterion_main!(benches);
