use dropo_core::dataset::extract_transitions;
use dropo_core::likelihood::LikelihoodConfig;
use dropo_core::optimize::{fit_dropo, fit_droid_baseline, tune_epsilon, FitConfig, ObjectiveKind};
use dropo_core::params::{DynamicsDistribution, DynamicsSample};
use dropo_core::sim::{
    generate_dataset, inject_misspecification, DataGenConfig, ExcitationKind, GroundTruth,
    MassChain3, MassSpringDamper, Simulator,
};
use dropo_core::point_replay_mse;

fn gen_exc_lambda(sim: &dyn Simulator, gt: GroundTruth, t: usize, noise: f64, resample: usize, seed: u64,
    excitation: ExcitationKind, lambda: usize) -> dropo_core::TransitionDataset {
    let cfg = DataGenConfig {
        ground_truth: gt,
        resample_every: resample,
        excitation,
        noise_std: if noise > 0.0 { vec![noise; sim.state_dim()] } else { vec![] },
        transitions: t,
        episodes: 1,
        seed,
    };
    let data = generate_dataset(sim, &cfg).unwrap();
    extract_transitions(&data.trajectories[0], lambda).unwrap()
}

fn gen_exc(sim: &dyn Simulator, gt: GroundTruth, t: usize, noise: f64, resample: usize, seed: u64,
    excitation: ExcitationKind) -> dropo_core::TransitionDataset {
    gen_exc_lambda(sim, gt, t, noise, resample, seed, excitation, 1)
}

fn gen(sim: &dyn Simulator, gt: GroundTruth, t: usize, noise: f64, resample: usize, seed: u64)
    -> dropo_core::TransitionDataset {
    gen_exc(sim, gt, t, noise, resample, seed, ExcitationKind::Chirp)
}

fn fit_cfg(budget: usize, eps: f64, dim: usize, seed: u64) -> FitConfig {
    let mut fc = FitConfig::new(
        ObjectiveKind::DropoLogLikelihood,
        budget,
        LikelihoodConfig::new(100, vec![eps; dim], 1, seed),
    );
    fc.stagnation_window = 0;
    fc.stagnation_tol = 0.0;
    fc
}

fn main() {
    let which: String = std::env::args().nth(1).unwrap_or_default();
    match which.as_str() {
        "chain" => {
            let chain = MassChain3::new(0.01);
            let truth = vec![1.5, 1.0, 2.0, 6.0];
            let ds = gen(&chain, GroundTruth::Fixed(DynamicsSample::new(truth.clone())), 500, 0.0, 0, 404);
            let t0 = std::time::Instant::now();
            let fit = fit_dropo(&ds, &chain, &fit_cfg(8000, 1e-8, 6, 31)).unwrap();
            println!("chain T=500: mean={:?}\n  std={:?} elapsed={:?}", fit.phi_star.mean(), fit.phi_star.std(), t0.elapsed());
        }
        "noisy" => {
            let msd = MassSpringDamper::new(0.01);
            let truth = vec![1.0, 4.0, 0.4];
            let noise_var: f64 = 1e-5;
            let ds = gen(&msd, GroundTruth::Fixed(DynamicsSample::new(truth.clone())), 600, noise_var.sqrt(), 0, 404);
            let floor: f64 = point_replay_mse(&DynamicsSample::new(truth.clone()), &ds, &msd).unwrap().iter().sum();
            let tau = 1.1 * floor;
            println!("noisy floor={floor:e} tau={tau:e}");
            let t0 = std::time::Instant::now();
            let out = tune_epsilon(&ds, &msd, &fit_cfg(5000, 0.0, 2, 31), &[1e-8, 1e-6, 1e-5, 1e-4, 1e-2], tau).unwrap();
            for r in &out.rows { println!("  eps {:e}: tv {:e} mse {:e}", r.epsilon, r.total_variance, r.mse); }
            if let Some(i) = out.selected {
                println!("selected {:e}", out.rows[i].epsilon);
                println!("  mean {:?}", out.fits[i].phi_star.mean());
            }
            println!("msd elapsed {:?}", t0.elapsed());

            let chain = MassChain3::new(0.01);
            let ctruth = vec![1.5, 1.0, 2.0, 6.0];
            let cds = gen(&chain, GroundTruth::Fixed(DynamicsSample::new(ctruth.clone())), 400, noise_var.sqrt(), 0, 404);
            let cfloor: f64 = point_replay_mse(&DynamicsSample::new(ctruth.clone()), &cds, &chain).unwrap().iter().sum();
            let ctau = 1.1 * cfloor;
            println!("chain noisy floor={cfloor:e} tau={ctau:e}");
            let t1 = std::time::Instant::now();
            let out = tune_epsilon(&cds, &chain, &fit_cfg(6000, 0.0, 6, 31), &[1e-8, 1e-5, 1e-4], ctau).unwrap();
            for r in &out.rows { println!("  eps {:e}: tv {:e} mse {:e}", r.epsilon, r.total_variance, r.mse); }
            match out.selected {
                Some(i) => {
                    println!("selected {:e}", out.rows[i].epsilon);
                    let f = &out.fits[i];
                    println!("  mean {:?} std {:?}", f.phi_star.mean(), f.phi_star.std());
                }
                None => println!("UNREACHABLE"),
            }
            println!("chain elapsed {:?}", t1.elapsed());
        }
        "recovery" => {
            let puck = dropo_core::sim::SlidingPuck2D::new(0.01);
            let space = puck.param_space().clone();
            let mu = vec![0.16, 0.3, 0.45];
            let sigma = vec![0.015, 0.05, 0.06];
            let phi_gt = DynamicsDistribution::new(space, mu.clone(), sigma.clone()).unwrap();
            let ds = gen_exc_lambda(&puck, GroundTruth::Distribution(phi_gt), 1500, 0.0, 25, 404, ExcitationKind::Pulses, 5);
            let t0 = std::time::Instant::now();
            let mut rc = fit_cfg(6000, 1e-8, 4, 31);
            rc.likelihood.lambda = 5;
            let fit = fit_dropo(&ds, &puck, &rc).unwrap();
            println!("recovery: mean={:?}\n  std={:?} (gt {sigma:?}) elapsed={:?}", fit.phi_star.mean(), fit.phi_star.std(), t0.elapsed());
            let mut dc = fit_cfg(4000, 1e-8, 4, 31);
            dc.likelihood.lambda = 5;
            dc.objective = ObjectiveKind::DroidL2;
            let droid = fit_droid_baseline(&ds, &puck, &dc).unwrap();
            println!("droid: mean={:?}\n  std={:?} elapsed total={:?}", droid.phi_star.mean(), droid.phi_star.std(), t0.elapsed());
        }
        "widening" => {
            let dt = 0.01;
            let target = MassChain3::new(dt);
            let truth = vec![1.5, 1.0, 2.0, 6.0];
            let ds = gen(&target, GroundTruth::Fixed(DynamicsSample::new(truth.clone())), 400, 0.0, 0, 404);
            let t0 = std::time::Instant::now();
            for eps in [1e-6f64, 1e-4] {
                let well = inject_misspecification(&target, 0, truth[0]).unwrap();
                let fit_w = fit_dropo(&ds, &well, &fit_cfg(6000, eps, 6, 31)).unwrap();
                let miss = inject_misspecification(&target, 0, truth[0] + 1.0).unwrap();
                let fit_m = fit_dropo(&ds, &miss, &fit_cfg(6000, eps, 6, 31)).unwrap();
                let mut dcfg = fit_cfg(4000, eps, 6, 31);
                dcfg.objective = ObjectiveKind::DroidL2;
                let droid = fit_droid_baseline(&ds, &miss, &dcfg).unwrap();
                println!("eps={eps:e}");
                println!("  well std={:?}", fit_w.phi_star.std());
                println!("  miss std={:?} mean={:?}", fit_m.phi_star.std(), fit_m.phi_star.mean());
                println!("  droid std={:?}", droid.phi_star.std());
            }
            println!("elapsed {:?}", t0.elapsed());
        }
        _ => eprintln!("usage: calibrate chain|noisy|recovery|widening"),
    }
}
