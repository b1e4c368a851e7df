use ilqr_pulse::ilqr::Objective;
use ilqr_pulse::ocp::{final_cost, stage_cost, CostMatrices, GateProblem};
use ilqr_pulse::{ControlMode, SystemKind, TransmonSystem};
use nalgebra::DVector;
use proptest::prelude::*;

const FD_STEP: f64 = 1e-5;
const GRADIENT_TOLERANCE: f64 = 1e-8;

// round-off of a central difference of a value of size `l`
fn roundoff(l: f64) -> f64 {
    8.0 * f64::EPSILON * l.abs() / FD_STEP
}

fn problem(kind: SystemKind, mode: ControlMode, weights: [f64; 4]) -> GateProblem {
    let sys = TransmonSystem::standard(kind);
    let costs = CostMatrices::uniform(sys.dim(), sys.channels(), weights[0], weights[1], weights[2], weights[3]);
    GateProblem::new(sys, mode, kind.default_goal(), costs, 11).unwrap()
}

fn point(len: usize, seed: &[f64]) -> DVector<f64> {
    DVector::from_fn(len, |i, _| seed[i % seed.len()] * (1.0 + 0.1 * i as f64).sin())
}

fn strategy() -> impl Strategy<Value = (SystemKind, ControlMode, [f64; 4], Vec<f64>)> {
    (
        prop::sample::select(SystemKind::ALL.to_vec()),
        prop::sample::select(vec![ControlMode::Direct, ControlMode::Smoothed]),
        prop::array::uniform4(0.01..100.0_f64),
        prop::collection::vec(-1.0..1.0_f64, 7),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn stage_gradients_match_central_differences((kind, mode, w, seed) in strategy()) {
        let p = problem(kind, mode, w);
        let n = p.dynamics().state_len();
        let m = p.system.channels();
        let z = point(n, &seed);
        let v = point(m, &seed[3..]);
        let d = stage_cost(&z, &v, &p.costs, mode).unwrap();
        let obj = p.objective();
        prop_assert!((obj.stage_value(&z, &v) - d.l).abs() <= 1e-12 * d.l.abs().max(1.0));
        for i in 0..n {
            let (mut zp, mut zm) = (z.clone(), z.clone());
            zp[i] += FD_STEP;
            zm[i] -= FD_STEP;
            let fd = (obj.stage_value(&zp, &v) - obj.stage_value(&zm, &v)) / (2.0 * FD_STEP);
            prop_assert!((fd - d.l_x[i]).abs() <= GRADIENT_TOLERANCE * d.l_x[i].abs().max(1.0) + roundoff(d.l));
            let hess = (stage_cost(&zp, &v, &p.costs, mode).unwrap().l_x - stage_cost(&zm, &v, &p.costs, mode).unwrap().l_x) / (2.0 * FD_STEP);
            for r in 0..n {
                prop_assert!((hess[r] - d.l_xx[(r, i)]).abs() <= GRADIENT_TOLERANCE * d.l_xx[(r, i)].abs().max(1.0));
            }
        }
        for j in 0..m {
            let (mut vp, mut vm) = (v.clone(), v.clone());
            vp[j] += FD_STEP;
            vm[j] -= FD_STEP;
            let fd = (obj.stage_value(&z, &vp) - obj.stage_value(&z, &vm)) / (2.0 * FD_STEP);
            prop_assert!((fd - d.l_u[j]).abs() <= GRADIENT_TOLERANCE * d.l_u[j].abs().max(1.0) + roundoff(d.l));
            let hess = (stage_cost(&z, &vp, &p.costs, mode).unwrap().l_u - stage_cost(&z, &vm, &p.costs, mode).unwrap().l_u) / (2.0 * FD_STEP);
            for r in 0..m {
                prop_assert!((hess[r] - d.l_uu[(r, j)]).abs() <= GRADIENT_TOLERANCE * d.l_uu[(r, j)].abs().max(1.0));
            }
        }
        prop_assert!(d.l_ux.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn final_gradients_match_central_differences((kind, mode, w, seed) in strategy()) {
        let p = problem(kind, mode, w);
        let n = p.dynamics().state_len();
        let z = point(n, &seed);
        let d = final_cost(&z, &p.goal, &p.costs, mode).unwrap();
        let obj = p.objective();
        prop_assert!((obj.terminal_value(&z) - d.l).abs() <= 1e-12 * d.l.abs().max(1.0));
        for i in 0..n {
            let (mut zp, mut zm) = (z.clone(), z.clone());
            zp[i] += FD_STEP;
            zm[i] -= FD_STEP;
            let fd = (obj.terminal_value(&zp) - obj.terminal_value(&zm)) / (2.0 * FD_STEP);
            prop_assert!((fd - d.l_x[i]).abs() <= GRADIENT_TOLERANCE * d.l_x[i].abs().max(1.0) + roundoff(d.l));
            let hess = (final_cost(&zp, &p.goal, &p.costs, mode).unwrap().l_x - final_cost(&zm, &p.goal, &p.costs, mode).unwrap().l_x) / (2.0 * FD_STEP);
            for r in 0..n {
                prop_assert!((hess[r] - d.l_xx[(r, i)]).abs() <= GRADIENT_TOLERANCE * d.l_xx[(r, i)].abs().max(1.0));
            }
        }
    }
}

#[test]
fn final_cost_vanishes_at_goal() {
    for kind in SystemKind::ALL {
        let p = problem(kind, ControlMode::Smoothed, [100.0, 1.0, 0.1, 1.0]);
        let mut z = p.goal.vectorized.as_real().clone().resize_vertically(p.dynamics().state_len(), 0.0);
        let d = final_cost(&z, &p.goal, &p.costs, ControlMode::Smoothed).unwrap();
        assert_eq!(d.l, 0.0);
        assert!(d.l_x.iter().all(|x| *x == 0.0));
        let last = z.len() - 1;
        z[last] = 0.5;
        let d = final_cost(&z, &p.goal, &p.costs, ControlMode::Smoothed).unwrap();
        assert!((d.l - 0.25).abs() < 1e-15);
    }
}
