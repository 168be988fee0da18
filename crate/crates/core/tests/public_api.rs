use polylab::energy::{total_energy, HeightConfig};
use polylab::multiscale::decompose;
use polylab::{minimize, MinimizeOptions, PotentialField, Span, ZeroField};

#[test]
fn ground_state_energy_matches_recomputation() {
    let field = PotentialField::new(42, 32).unwrap();
    let opts = MinimizeOptions::default().with_grid(0.25);
    let gs = minimize(&field, Span::whole(32), 0.0, 0.0, &opts).unwrap();
    let e = total_energy(&field, &gs.config).unwrap();
    assert!((e.total - gs.objective).abs() <= 1e-9 * e.total.abs().max(1.0));
    assert!(gs.objective <= total_energy(&field, &HeightConfig::zeros(32)).unwrap().total);
}

#[test]
fn flat_field_gives_affine_ground_state() {
    let field = ZeroField::new(16, 1.0 / 64.0);
    let opts = MinimizeOptions::default().with_grid(0.25);
    let gs = minimize(&field, Span::whole(16), 0.0, 4.0, &opts).unwrap();
    assert_eq!(gs.config, HeightConfig::affine(0, 16, 0.0, 4.0));
}

#[test]
fn same_seed_same_ground_state() {
    let opts = MinimizeOptions::default().with_grid(0.125);
    let a = minimize(&PotentialField::new(9, 64).unwrap(), Span::whole(64), 0.0, 0.0, &opts).unwrap();
    let b = minimize(&PotentialField::new(9, 64).unwrap(), Span::whole(64), 0.0, 0.0, &opts).unwrap();
    assert_eq!(a.config, b.config);
    assert_eq!(a.objective, b.objective);
    let dec = decompose(&a.config).unwrap();
    assert_eq!(dec.components.len(), 6);
}
