use indigo_core::journal::{parse_jsonl, replay, to_jsonl};
use indigo_core::participants::ProposalPolicy;
use indigo_core::simulation::{run_simulation, SimulationConfig};
use indigo_core::Phase;

fn target() -> [Vec<String>; 3] {
    [
        ["budget", "vendor", "invoice", "audit"],
        ["deadline", "milestone", "sprint", "release"],
        ["testing", "review", "metrics", "feedback"],
    ]
    .map(|kws| kws.iter().map(|s| s.to_string()).collect())
}

#[test]
fn greedy_noise_free_reaches_full_coverage() {
    let cfg = SimulationConfig::new(target(), 0, ProposalPolicy::Greedy);
    let (out, session) = run_simulation(&cfg, 0, None).unwrap();
    assert!(out.converged, "{:?}", out);
    assert_eq!(out.final_aggregate, 10.0);
    assert!(out.iterations <= 25);
    assert!(out.history.windows(2).all(|w| w[1] >= w[0]));
    let rebuilt = replay(session.events()).unwrap();
    assert_eq!(&rebuilt, session.state());
    let back = parse_jsonl(&to_jsonl(session.events())).unwrap();
    assert_eq!(replay(&back).unwrap(), rebuilt);
    assert_eq!(rebuilt.phase, Phase::Converged);
}

#[test]
fn runs_are_reproducible() {
    let cfg = SimulationConfig::new(target(), 1, ProposalPolicy::Random);
    let (a, sa) = run_simulation(&cfg, 4, None).unwrap();
    let (b, sb) = run_simulation(&cfg, 4, None).unwrap();
    assert_eq!(a, b);
    assert_eq!(to_jsonl(sa.events()), to_jsonl(sb.events()));
}

#[test]
fn greedy_never_trails_random() {
    let mut greedy = SimulationConfig::new(target(), 0, ProposalPolicy::Greedy);
    greedy.weights = [2.0, 1.0, 1.0];
    let random = SimulationConfig { proposal_policy: ProposalPolicy::Random, ..greedy.clone() };
    let (mut g_iters, mut r_iters, mut strictly_ahead) = (0, 0, false);
    for seed in 0..20 {
        let (g, _) = run_simulation(&greedy, seed, None).unwrap();
        let (r, _) = run_simulation(&random, seed, None).unwrap();
        assert!(g.converged && r.converged);
        g_iters += g.iterations;
        r_iters += r.iterations;
        for (a, b) in g.history.iter().zip(&r.history) {
            assert!(a >= b, "seed {}: greedy {:?} random {:?}", seed, g.history, r.history);
            strictly_ahead |= a > b;
        }
    }
    assert!(g_iters <= r_iters);
    assert!(strictly_ahead);
}
