use weylbox::magop::{assemble, OperatorKind, OperatorSpec};
use weylbox::speccount::count_below;
use weylbox::weylcoeff::{weyl_coefficient, Region, WeylParams};
use weylbox::{GridBox32, ScalarField32, VectorField32};

#[test]
fn weyl_coefficient_in_f32() {
    let g = GridBox32::new([0.0; 3], [1.0; 3], [4; 3]).unwrap();
    let r = weyl_coefficient(
        &ScalarField32::constant(&g, 1.0),
        &ScalarField32::constant(&g, -1.0),
        &WeylParams::new(0.0),
        Region::Whole,
    )
    .unwrap();
    let want = 1.0 / (2.0 * std::f32::consts::PI * std::f32::consts::PI);
    assert!((r.value - want).abs() < 1e-6);
}

#[test]
fn pauli_count_in_f32_matches_f64() {
    let g32 = GridBox32::new([0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [14, 14, 1]).unwrap();
    let spec = OperatorSpec::new(OperatorKind::Pauli, g32.clone())
        .with_hbar(0.2)
        .with_mu(5.0)
        .with_field(VectorField32::constant(&g32, [0.0, 0.0, 2.0]))
        .with_potential(ScalarField32::constant(&g32, -1.5));
    let h = assemble(&spec).unwrap().into_matrix();
    let c32 = count_below(&h, -0.1f32).unwrap().count;

    let g64 = weylbox::GridBox64::new([0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [14, 14, 1]).unwrap();
    let spec = OperatorSpec::new(OperatorKind::Pauli, g64.clone())
        .with_hbar(0.2)
        .with_mu(5.0)
        .with_field(weylbox::VectorField64::constant(&g64, [0.0, 0.0, 2.0]))
        .with_potential(weylbox::ScalarField64::constant(&g64, -1.5));
    let h = assemble(&spec).unwrap().into_matrix();
    assert_eq!(c32, count_below(&h, -0.1).unwrap().count);
}
