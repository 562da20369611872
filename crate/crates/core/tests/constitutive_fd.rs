mod common;

#[test]
fn stress_and_magnetisation_are_energy_derivatives() {
    let (s, m) = common::constitutive_fd_mismatch(100, 11);
    assert!(s < 1e-5, "stress mismatch {s}");
    assert!(m < 1e-5, "magnetisation mismatch {m}");
}
