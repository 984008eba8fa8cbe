mod common;

use chprice::cg::{run_cg, CgConfig, InitMode};
use chprice::milp::MilpOptions;
use chprice::model::validate_instance;
use chprice::ucbuild::solve_full_uc;
use common::{dw_objective, enumerate_schedules, enumerated_uc_objective, grid_instance};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn master_matches_enumeration(seed in any::<u64>(), mode in 0usize..3) {
        let inst = grid_instance(seed);
        prop_assert!(validate_instance(&inst).is_empty());
        let columns: Vec<_> = inst.units.iter().map(|u| enumerate_schedules(u, inst.horizon)).collect();
        prop_assume!(columns.iter().all(|c| !c.is_empty()));
        let f_star = enumerated_uc_objective(&inst, &columns);
        let uc = solve_full_uc(&inst, &MilpOptions::default());
        prop_assert_eq!(uc.is_ok(), f_star.is_finite());
        prop_assume!(f_star.is_finite());
        let uc = uc.unwrap();
        prop_assert!((uc.objective - f_star).abs() <= 1e-6, "f* {} vs enumeration {}", uc.objective, f_star);
        let init_mode = [InitMode::Trivial, InitMode::Flat, InitMode::Warm][mode];
        let ch = run_cg(&inst, &CgConfig { init_mode, ..CgConfig::default() }, Some(&uc)).unwrap();
        prop_assert!(ch.converged);
        let dw = dw_objective(&inst, &columns);
        prop_assert!((ch.rmp_objective - dw).abs() <= 1e-6, "g* {} vs master over all schedules {}", ch.rmp_objective, dw);
        prop_assert!(ch.rmp_objective <= f_star + 1e-6, "g* {} above f* {}", ch.rmp_objective, f_star);
    }
}
