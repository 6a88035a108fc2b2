use conformable_core::fde::flipped_companion_system;
use conformable_core::verify::{run, Suite};
use conformable_core::SolveOptions;

#[test]
fn healthy_build_passes_every_property() {
    let results = run(Suite::All, 42, &SolveOptions::default());
    assert!(results.len() > 20);
    for r in &results {
        assert!(
            r.pass,
            "{} failed: {:e} > {:e} ({:?})",
            r.name, r.max_residual, r.tolerance, r.error
        );
    }
}

#[test]
fn other_seeds_pass_too() {
    for seed in [1, 7, 2024] {
        for r in run(Suite::All, seed, &SolveOptions::default()) {
            assert!(
                r.pass,
                "seed {seed}: {} failed: {:e} ({:?})",
                r.name, r.max_residual, r.error
            );
        }
    }
}

#[test]
fn flipped_companion_is_caught() {
    let opts = SolveOptions {
        companion: flipped_companion_system,
        ..Default::default()
    };
    let failed: Vec<_> = run(Suite::Structure, 42, &opts)
        .into_iter()
        .filter(|r| !r.pass)
        .map(|r| r.name)
        .collect();
    assert!(failed.contains(&"oscillator-oracle"), "{failed:?}");
    assert!(failed.contains(&"abel-identity"), "{failed:?}");
}

#[test]
fn runs_are_deterministic() {
    let a = run(Suite::Calculus, 9, &SolveOptions::default());
    let b = run(Suite::Calculus, 9, &SolveOptions::default());
    assert_eq!(a, b);
}
