//! Small-strain, undamaged, field-free elasticity against a dense
//! plane-strain Hooke solver written from scratch.

mod common;

use common::compare_with_hooke as compare;
use magfrac::mesh::{generate_notched_plate, rectangle, CellTag};

#[test]
fn structured_coarse_rectangle() {
    let mesh = rectangle([0.0, 0.0], [2.0, 1.0], 3, 2, CellTag::Solid);
    let e = compare(&mesh);
    assert!(e < 1e-10, "relative difference {e}");
}

#[test]
fn structured_fine_square() {
    let mesh = rectangle([0.0, 0.0], [1.0, 1.0], 12, 12, CellTag::Solid);
    let e = compare(&mesh);
    assert!(e < 1e-10, "relative difference {e}");
}

#[test]
fn unstructured_plate() {
    let mesh = generate_notched_plate(4.0, &[], &[], 0.6).unwrap();
    assert!(mesh.cell_tags().iter().all(|&t| t == CellTag::Solid));
    let e = compare(&mesh);
    assert!(e < 1e-10, "relative difference {e}");
}
