use ndm_core::lgn::{compute_lgn_drive, LgnDrive};
use ndm_core::network::spec::ProjectionParams;
use ndm_core::network::{build_network, run_trial, NetworkSpec, TrialParams};
use ndm_core::stimulus::{generate_stimulus, Direction, RdkParams};

fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut r = vec![0f64; v.len()];
        let mut i = 0;
        while i < v.len() {
            let mut j = i;
            while j + 1 < v.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    let n = xs.len() as f64;
    if n < 3.0 {
        return f64::NAN;
    }
    let rx = ranks(xs);
    let ry = ranks(ys);
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..xs.len() {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

fn make_drive(seed: u64, coh: f64, right: bool, gain: f64) -> LgnDrive {
    let dir = if right { Direction::Right } else { Direction::Left };
    let mut rp = RdkParams::new(coh, dir, seed);
    rp.n_frames = 120;
    let stim = generate_stimulus(&rp).unwrap();
    compute_lgn_drive(&stim, gain).unwrap()
}

#[test]
#[ignore]
fn probe() {
    let gain = 800.0;
    let patch = 13usize;
    let gs = [0.0455f64, 0.047, 0.0485, 0.050, 0.0515];
    let cohs = [0.0f64, 0.4, 0.8];
    let n_nets = 2u64;
    let n_per_dir = 3u64;

    let tp = TrialParams {
        early_stop: true,
        ..Default::default()
    };

    for &g in &gs {
        for net_i in 0..n_nets {
            let spec = NetworkSpec {
                seed: 7000 + net_i,
                projections: ProjectionParams {
                    v1_mt_patch: patch,
                    g_lip_ie_gaba: g,
                    ..Default::default()
                },
                ..Default::default()
            };
            let net = build_network(&spec).unwrap();
            for &coh in &cohs {
                let mut dec = 0u32;
                let mut correct = 0u32;
                let mut n_tr = 0u32;
                let mut dts: Vec<f64> = vec![];
                let mut sep15 = 0u32;
                let mut rhos: Vec<f64> = vec![];
                for dirn in 0..2u64 {
                    let right = dirn == 0;
                    for t in 0..n_per_dir {
                        let stim_seed = 31000 + (coh * 10.0) as u64 * 97 + dirn * 50 + t;
                        let drive = make_drive(stim_seed, coh, right, gain);
                        let trial_seed =
                            880_000 + net_i * 1000 + dirn * 100 + t * 10 + (g * 10000.0) as u64;
                        let res = run_trial(&net, &drive, None, &tp, trial_seed).unwrap();
                        n_tr += 1;
                        if res.decided {
                            dec += 1;
                            dts.push(res.decision_time_ms);
                        }
                        let want = if right { Direction::Right } else { Direction::Left };
                        if res.choice == want {
                            correct += 1;
                        }
                        let row = res
                            .readout
                            .iter()
                            .min_by(|a, b| {
                                (a.0 - res.decision_time_ms)
                                    .abs()
                                    .partial_cmp(&(b.0 - res.decision_time_ms).abs())
                                    .unwrap()
                            })
                            .unwrap();
                        if (row.1 - row.2).abs() >= 15.0 {
                            sep15 += 1;
                        }
                        let upto: Vec<&(f64, f64, f64)> = res
                            .readout
                            .iter()
                            .filter(|r| r.0 <= res.decision_time_ms + 1.0)
                            .collect();
                        let ts: Vec<f64> = upto.iter().map(|r| r.0).collect();
                        let wr: Vec<f64> = upto
                            .iter()
                            .map(|r| if res.choice == Direction::Right { r.1 } else { r.2 })
                            .collect();
                        rhos.push(spearman(&ts, &wr));
                    }
                }
                let mean_dt = if dts.is_empty() {
                    f64::NAN
                } else {
                    dts.iter().sum::<f64>() / dts.len() as f64
                };
                let mut rs: Vec<f64> = rhos.iter().cloned().filter(|v| v.is_finite()).collect();
                rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let med_rho = if rs.is_empty() { f64::NAN } else { rs[rs.len() / 2] };
                println!(
                    "g={:.4} net={} coh={:.1}  dec={}/{} acc={:.2} dt={:>6.0} sep15={}/{} rho={:.2}",
                    g,
                    net_i,
                    coh,
                    dec,
                    n_tr,
                    correct as f64 / n_tr as f64,
                    mean_dt,
                    sep15,
                    n_tr,
                    med_rho
                );
            }
        }
    }
}
