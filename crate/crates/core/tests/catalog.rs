use slag_core::catalog::{blocks, verify_case, CaseName, Tolerances, ALL_CASES};

#[test]
fn every_case_verifies() {
    let tol = Tolerances::default();
    for case in ALL_CASES {
        let block = blocks::default_block(case.block_kind()).unwrap().certify().unwrap();
        let rep = verify_case(case, &block, 5, &tol).unwrap();
        eprintln!(
            "{} {:?} {:?} {:?}",
            case,
            rep.residuals,
            rep.failures,
            rep.errors.first()
        );
        assert!(rep.passed, "{case}");
    }
}

#[test]
fn decoy_block_is_flagged() {
    let block = blocks::decoy_surface().unwrap();
    let rep = verify_case(CaseName::C2, &block, 3, &Tolerances::default()).unwrap();
    assert!(!rep.passed);
    assert!(rep.residuals.kahler_max > 0.5);
}
