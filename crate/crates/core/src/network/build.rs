//! Network realization: sampling every synapse from the spec.
//!
//! Weight convention: each connection draws a factor f ~ N(1, sd_ratio)
//! from the projection's build stream; the realized weight is f times the
//! connection's mean conductance (times the Hebb multiplier for LIP
//! recurrence). Connections with f <= 0 are removed, which keeps every
//! realized weight strictly positive (sign discipline) and makes sweeps
//! over mean conductances reuse identical draw sequences, so a multiplier
//! sweep rescales the same network instead of resampling a new one.
//!
//! Only LGN rows wired to V1 are simulated: V1 sits on every other LGN
//! row, so odd rows never project anywhere and are omitted from the
//! neuron layout (their drive is still computed; they are dynamically
//! inert). Population counts in the spec refer to the full anatomy.

use rand::rngs::SmallRng;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::rng::derive_rng;

use super::spec::{NetworkSpec, PopId};

/// Simulated-neuron slice of one population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopLayout {
    pub id: PopId,
    /// First global neuron index.
    pub start: usize,
    /// Simulated neuron count (LGN classes: connected rows only).
    pub count: usize,
}

impl PopLayout {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.count
    }
}

/// Feed-forward projection in source-major compressed form. Edge order
/// (for perturbation enumeration) is source-major CSR order.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// Per local source: offset into `targets`/`weights`; length n_src + 1.
    pub offsets: Vec<u32>,
    /// Global target neuron indices.
    pub targets: Vec<u32>,
    /// Conductance per edge, nS.
    pub weights: Vec<f32>,
}

impl Projection {
    fn from_buckets(buckets: Vec<Vec<(u32, f32)>>) -> Self {
        let n_edges: usize = buckets.iter().map(Vec::len).sum();
        let mut offsets = Vec::with_capacity(buckets.len() + 1);
        let mut targets = Vec::with_capacity(n_edges);
        let mut weights = Vec::with_capacity(n_edges);
        offsets.push(0u32);
        for bucket in buckets {
            for (t, w) in bucket {
                targets.push(t);
                weights.push(w);
            }
            offsets.push(targets.len() as u32);
        }
        Projection {
            offsets,
            targets,
            weights,
        }
    }

    pub fn n_edges(&self) -> usize {
        self.targets.len()
    }

    pub fn edges_of(&self, source: usize) -> impl Iterator<Item = (u32, f32)> + '_ {
        let lo = self.offsets[source] as usize;
        let hi = self.offsets[source + 1] as usize;
        self.targets[lo..hi]
            .iter()
            .copied()
            .zip(self.weights[lo..hi].iter().copied())
    }
}

/// A realized network: immutable weight tables plus the neuron layout.
#[derive(Debug, Clone)]
pub struct Network {
    pub spec: NetworkSpec,
    /// Slices in PopId::ALL order.
    pub pops: Vec<PopLayout>,
    pub n_neurons: usize,
    /// Per simulated LGN neuron (local index, shared by ON and OFF): the
    /// cell index into the drive lattice.
    pub lgn_drive_index: Vec<u32>,
    /// LGN -> V1 AMPA. Local sources: simulated ON then simulated OFF.
    pub lgn_v1: Projection,
    /// V1 -> MT AMPA. Local sources: G1 then G2.
    pub v1_mt: Projection,
    /// MT -> LIP AMPA. Local sources: MT_L then MT_R.
    pub mt_lip: Projection,
    /// Dense LIP recurrent weights, row = local E source (A then B),
    /// column = local target (E 0..n_e, then I n_e..n_e+n_i). Zero means
    /// no connection.
    pub w_lip_ampa: Vec<f32>,
    pub w_lip_nmda: Vec<f32>,
    /// Dense I -> E GABA weights, row = local I source, column = local E
    /// target.
    pub w_gaba: Vec<f32>,
    /// Muted neurons (set by DropNeurons): spikes never delivered, no
    /// readout contribution.
    pub muted: Vec<bool>,
    /// Per-neuron input current noise sigma, pA (set by CurrentNoise).
    pub current_noise_sigma: Vec<f32>,
}

impl Network {
    pub fn pop(&self, id: PopId) -> &PopLayout {
        &self.pops[PopId::ALL.iter().position(|&p| p == id).unwrap()]
    }

    pub fn n_lip_e(&self) -> usize {
        self.pop(PopId::LipA).count + self.pop(PopId::LipB).count
    }

    pub fn n_lip_i(&self) -> usize {
        self.pop(PopId::LipI).count
    }

    /// Mean absolute weight of a feed-forward projection's live edges.
    pub fn mean_abs_weight(&self, proj: &Projection) -> f64 {
        if proj.weights.is_empty() {
            return 0.0;
        }
        proj.weights.iter().map(|w| w.abs() as f64).sum::<f64>() / proj.weights.len() as f64
    }
}

/// Draws the shared connection factor; `None` means the connection is
/// removed (non-positive draw).
fn factor(rng: &mut SmallRng, normal: &Normal<f64>) -> Option<f64> {
    let f = normal.sample(rng);
    (f > 0.0).then_some(f)
}

/// Realizes the network described by `spec`.
pub fn build_network(spec: &NetworkSpec) -> Result<Network> {
    spec.validate()?;
    let lgn_side = spec.lgn_side();
    let v1_side = spec.v1_side();
    let mt_side = spec.mt_side();
    let patch = spec.projections.v1_mt_patch;
    let p = &spec.projections;
    let normal = Normal::new(1.0, p.weight_sd_ratio).expect("validated sd");

    // Simulated LGN neurons: rows 2i for i in 0..v1_side, all columns.
    let n_lgn_sim = v1_side * lgn_side;
    let counts = [
        n_lgn_sim,
        n_lgn_sim,
        spec.sizes.v1_g1,
        spec.sizes.v1_g2,
        spec.sizes.mt_l,
        spec.sizes.mt_r,
        spec.sizes.lip_a,
        spec.sizes.lip_b,
        spec.sizes.lip_i,
    ];
    let mut pops = Vec::with_capacity(9);
    let mut start = 0usize;
    for (id, &count) in PopId::ALL.iter().zip(&counts) {
        pops.push(PopLayout {
            id: *id,
            start,
            count,
        });
        start += count;
    }
    let n_neurons = start;
    let pop_of = |id: PopId| -> PopLayout { pops[PopId::ALL.iter().position(|&p| p == id).unwrap()] };

    let lgn_drive_index: Vec<u32> = (0..n_lgn_sim)
        .map(|k| {
            let i = k / lgn_side;
            let j = k % lgn_side;
            (2 * i * lgn_side + j) as u32
        })
        .collect();

    // LGN -> V1: each V1 cell pairs one ON and one OFF afferent on
    // horizontally adjacent lattice sites. G1 has ON left of OFF, G2 the
    // mirror image; the two groups share sites with swapped polarity.
    let lgn_v1 = {
        let mut rng = derive_rng(spec.seed, "build", &[0]);
        let mut buckets: Vec<Vec<(u32, f32)>> = vec![Vec::new(); 2 * n_lgn_sim];
        let g1 = pop_of(PopId::V1G1);
        let g2 = pop_of(PopId::V1G2);
        for (group_idx, group) in [g1, g2].into_iter().enumerate() {
            for v in 0..group.count {
                let i = v / v1_side;
                let j = v % v1_side;
                let left_site = i * lgn_side + 2 * j;
                let right_site = left_site + 1;
                // Group 1: ON on the left site; group 2: ON on the right.
                let (on_local, off_local) = if group_idx == 0 {
                    (left_site, right_site)
                } else {
                    (right_site, left_site)
                };
                let target = (group.start + v) as u32;
                if let Some(f) = factor(&mut rng, &normal) {
                    buckets[on_local].push((target, (f * p.g_lgn_v1) as f32));
                }
                if let Some(f) = factor(&mut rng, &normal) {
                    buckets[n_lgn_sim + off_local].push((target, (f * p.g_lgn_v1) as f32));
                }
            }
        }
        Projection::from_buckets(buckets)
    };

    // V1 -> MT: each MT cell pools a patch x patch block of its group's
    // V1 lattice; patch origins spread evenly so patches tile with
    // overlap.
    let v1_mt = {
        let mut rng = derive_rng(spec.seed, "build", &[1]);
        let n_v1 = spec.sizes.v1_g1;
        let mut buckets: Vec<Vec<(u32, f32)>> = vec![Vec::new(); 2 * n_v1];
        let origin = |m: usize| -> usize {
            if mt_side == 1 {
                (v1_side - patch) / 2
            } else {
                ((m as f64) * ((v1_side - patch) as f64) / ((mt_side - 1) as f64)).round() as usize
            }
        };
        for (group_idx, mt_id) in [PopId::MtL, PopId::MtR].into_iter().enumerate() {
            let mt = pop_of(mt_id);
            for m in 0..mt.count {
                let (mr, mc) = (m / mt_side, m % mt_side);
                let (r0, c0) = (origin(mr), origin(mc));
                let target = (mt.start + m) as u32;
                for pr in 0..patch {
                    for pc in 0..patch {
                        let v1_local = (r0 + pr) * v1_side + (c0 + pc);
                        if let Some(f) = factor(&mut rng, &normal) {
                            buckets[group_idx * n_v1 + v1_local]
                                .push((target, (f * p.g_v1_mt) as f32));
                        }
                    }
                }
            }
        }
        Projection::from_buckets(buckets)
    };

    // MT -> LIP: per-pair Bernoulli(fraction), L -> A and R -> B. The
    // weight draw happens for every pair so that fraction sweeps keep the
    // weights of shared pairs identical.
    let mt_lip = {
        let mut rng = derive_rng(spec.seed, "build", &[2]);
        let n_mt = spec.sizes.mt_l;
        let mut buckets: Vec<Vec<(u32, f32)>> = vec![Vec::new(); 2 * n_mt];
        for (group_idx, (mt_id, lip_id)) in [(PopId::MtL, PopId::LipA), (PopId::MtR, PopId::LipB)]
            .into_iter()
            .enumerate()
        {
            let mt = pop_of(mt_id);
            let lip = pop_of(lip_id);
            for post in 0..lip.count {
                let target = (lip.start + post) as u32;
                for pre in 0..mt.count {
                    let u: f64 = rng.random();
                    let f = factor(&mut rng, &normal);
                    if u < p.mt_lip_fraction {
                        if let Some(f) = f {
                            buckets[group_idx * n_mt + pre]
                                .push((target, (f * p.g_mt_lip) as f32));
                        }
                    }
                }
            }
        }
        Projection::from_buckets(buckets)
    };

    // LIP recurrence: dense all-to-all (no autapses). One factor per
    // connection scales its AMPA and NMDA components together; the Hebb
    // multiplier strengthens within-pool and weakens cross-pool weights.
    let n_e = spec.sizes.lip_a + spec.sizes.lip_b;
    let n_i = spec.sizes.lip_i;
    let n_a = spec.sizes.lip_a;
    let row = n_e + n_i;
    let mut w_lip_ampa = vec![0f32; n_e * row];
    let mut w_lip_nmda = vec![0f32; n_e * row];
    {
        let mut rng = derive_rng(spec.seed, "build", &[3]);
        for src in 0..n_e {
            for dst in 0..n_e {
                if dst == src {
                    continue;
                }
                let hebb = if (src < n_a) == (dst < n_a) {
                    p.hebb_strong
                } else {
                    p.hebb_weak
                };
                if let Some(f) = factor(&mut rng, &normal) {
                    w_lip_ampa[src * row + dst] = (f * hebb * p.g_lip_ee_ampa) as f32;
                    w_lip_nmda[src * row + dst] = (f * hebb * p.g_lip_ee_nmda) as f32;
                }
            }
            for dst in 0..n_i {
                if let Some(f) = factor(&mut rng, &normal) {
                    w_lip_ampa[src * row + n_e + dst] = (f * p.g_lip_ei_ampa) as f32;
                    w_lip_nmda[src * row + n_e + dst] = (f * p.g_lip_ei_nmda) as f32;
                }
            }
        }
    }

    let mut w_gaba = vec![0f32; n_i * n_e];
    {
        let mut rng = derive_rng(spec.seed, "build", &[4]);
        for src in 0..n_i {
            for dst in 0..n_e {
                if let Some(f) = factor(&mut rng, &normal) {
                    w_gaba[src * n_e + dst] = (f * p.g_lip_ie_gaba) as f32;
                }
            }
        }
    }

    Ok(Network {
        spec: spec.clone(),
        pops,
        n_neurons,
        lgn_drive_index,
        lgn_v1,
        v1_mt,
        mt_lip,
        w_lip_ampa,
        w_lip_nmda,
        w_gaba,
        muted: vec![false; n_neurons],
        current_noise_sigma: vec![0f32; n_neurons],
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::network::spec::PopulationSizes;

    /// Shrunk spec for fast structural tests; lattice ratios preserved.
    pub(crate) fn small_spec() -> NetworkSpec {
        NetworkSpec {
            sizes: PopulationSizes {
                lgn_on: 400,
                lgn_off: 400,
                v1_g1: 100,
                v1_g2: 100,
                mt_l: 16,
                mt_r: 16,
                lip_a: 30,
                lip_b: 30,
                lip_i: 50,
            },
            projections: crate::network::spec::ProjectionParams {
                v1_mt_patch: 3,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn build_is_deterministic() {
        let spec = small_spec();
        let a = build_network(&spec).unwrap();
        let b = build_network(&spec).unwrap();
        assert_eq!(a.lgn_v1, b.lgn_v1);
        assert_eq!(a.v1_mt, b.v1_mt);
        assert_eq!(a.mt_lip, b.mt_lip);
        assert_eq!(a.w_lip_ampa, b.w_lip_ampa);
        assert_eq!(a.w_gaba, b.w_gaba);
    }

    #[test]
    fn different_seed_changes_weights() {
        let mut spec = small_spec();
        let a = build_network(&spec).unwrap();
        spec.seed = 1;
        let b = build_network(&spec).unwrap();
        assert_ne!(a.w_lip_ampa, b.w_lip_ampa);
    }

    #[test]
    fn layout_covers_all_populations_contiguously() {
        let net = build_network(&small_spec()).unwrap();
        let mut expected_start = 0;
        for pop in &net.pops {
            assert_eq!(pop.start, expected_start);
            expected_start += pop.count;
        }
        assert_eq!(net.n_neurons, expected_start);
        // LGN simulated subset: half the rows.
        assert_eq!(net.pop(PopId::LgnOn).count, 200);
        assert_eq!(net.pop(PopId::V1G1).count, 100);
    }

    #[test]
    fn every_v1_cell_has_at_most_one_on_and_off_afferent() {
        let net = build_network(&small_spec()).unwrap();
        let g1 = net.pop(PopId::V1G1);
        let g2 = net.pop(PopId::V1G2);
        let n_sim = net.pop(PopId::LgnOn).count;
        let mut on_in = vec![0usize; net.n_neurons];
        let mut off_in = vec![0usize; net.n_neurons];
        for src in 0..2 * n_sim {
            for (t, w) in net.lgn_v1.edges_of(src) {
                assert!(w > 0.0);
                let counts = if src < n_sim {
                    &mut on_in
                } else {
                    &mut off_in
                };
                counts[t as usize] += 1;
            }
        }
        for v in g1.range().chain(g2.range()) {
            assert!(on_in[v] <= 1, "neuron {v} has {} ON afferents", on_in[v]);
            assert!(off_in[v] <= 1);
        }
        // Truncation removes ~2.3% of factors; most cells keep both.
        let both: usize = g1
            .range()
            .chain(g2.range())
            .filter(|&v| on_in[v] == 1 && off_in[v] == 1)
            .count();
        assert!(both as f64 > 0.9 * (g1.count + g2.count) as f64);
    }

    #[test]
    fn v1_groups_mirror_on_off_geometry() {
        // For paired G1/G2 cells at the same lattice position, G1's ON
        // site equals G2's OFF site and vice versa.
        let spec = small_spec();
        let net = build_network(&spec).unwrap();
        let n_sim = net.pop(PopId::LgnOn).count;
        let g1 = net.pop(PopId::V1G1);
        let g2 = net.pop(PopId::V1G2);
        // Invert the projection: target -> (on_site, off_site).
        let mut on_site = vec![usize::MAX; net.n_neurons];
        let mut off_site = vec![usize::MAX; net.n_neurons];
        for src in 0..2 * n_sim {
            for (t, _) in net.lgn_v1.edges_of(src) {
                if src < n_sim {
                    on_site[t as usize] = src;
                } else {
                    off_site[t as usize] = src - n_sim;
                }
            }
        }
        let mut checked = 0;
        for v in 0..g1.count {
            let (a, b) = (g1.start + v, g2.start + v);
            if on_site[a] != usize::MAX && off_site[b] != usize::MAX {
                assert_eq!(on_site[a], off_site[b]);
                checked += 1;
            }
            if off_site[a] != usize::MAX && on_site[b] != usize::MAX {
                assert_eq!(off_site[a], on_site[b]);
            }
            // ON sits immediately left of OFF for G1.
            if on_site[a] != usize::MAX && off_site[a] != usize::MAX {
                assert_eq!(off_site[a], on_site[a] + 1);
            }
        }
        assert!(checked > 80);
    }

    #[test]
    fn direction_wiring_is_segregated() {
        // G1 feeds only MT_L, MT_L feeds only LIP_A; mirrored for the
        // rightward channel.
        let net = build_network(&small_spec()).unwrap();
        let n_v1 = net.spec.sizes.v1_g1;
        let mt_l = net.pop(PopId::MtL);
        let mt_r = net.pop(PopId::MtR);
        for src in 0..2 * n_v1 {
            for (t, _) in net.v1_mt.edges_of(src) {
                let t = t as usize;
                if src < n_v1 {
                    assert!(mt_l.range().contains(&t));
                } else {
                    assert!(mt_r.range().contains(&t));
                }
            }
        }
        let lip_a = net.pop(PopId::LipA);
        let lip_b = net.pop(PopId::LipB);
        let n_mt = net.spec.sizes.mt_l;
        for src in 0..2 * n_mt {
            for (t, _) in net.mt_lip.edges_of(src) {
                let t = t as usize;
                if src < n_mt {
                    assert!(lip_a.range().contains(&t));
                } else {
                    assert!(lip_b.range().contains(&t));
                }
            }
        }
    }

    #[test]
    fn mt_receives_full_patches() {
        let spec = small_spec();
        let net = build_network(&spec).unwrap();
        let patch = spec.projections.v1_mt_patch;
        let mt_l = net.pop(PopId::MtL);
        let mut in_degree = vec![0usize; net.n_neurons];
        for src in 0..2 * spec.sizes.v1_g1 {
            for (t, _) in net.v1_mt.edges_of(src) {
                in_degree[t as usize] += 1;
            }
        }
        for m in mt_l.range() {
            // patch^2 afferents minus ~2.3% truncation.
            assert!(in_degree[m] <= patch * patch);
            assert!(in_degree[m] >= patch * patch - 3);
        }
    }

    #[test]
    fn mt_lip_connection_fraction_is_binomial() {
        let net = build_network(&NetworkSpec::default()).unwrap();
        let n_mt = net.spec.sizes.mt_l;
        // In-degree of each LIP_A cell ~ Binomial(400, 0.5 * 0.977).
        let lip_a = net.pop(PopId::LipA);
        let mut in_degree = vec![0usize; net.n_neurons];
        for src in 0..2 * n_mt {
            for (t, _) in net.mt_lip.edges_of(src) {
                in_degree[t as usize] += 1;
            }
        }
        let p_edge = 0.5 * 0.97725; // Bernoulli(0.5) times factor > 0
        let mean = n_mt as f64 * p_edge;
        let sd = (n_mt as f64 * p_edge * (1.0 - p_edge)).sqrt();
        let degrees: Vec<f64> = lip_a.range().map(|i| in_degree[i] as f64).collect();
        let observed = degrees.iter().sum::<f64>() / degrees.len() as f64;
        // Population mean of 300 binomials: SE = sd / sqrt(300).
        assert!(
            (observed - mean).abs() < 4.0 * sd / (degrees.len() as f64).sqrt(),
            "mean in-degree {observed}, expected {mean}"
        );
        for &d in &degrees {
            assert!((d - mean).abs() < 5.0 * sd, "in-degree {d} vs mean {mean}");
        }
    }

    #[test]
    fn degenerate_sampling_gives_exact_weights() {
        let mut spec = small_spec();
        spec.projections.weight_sd_ratio = 0.0;
        spec.projections.mt_lip_fraction = 1.0;
        let net = build_network(&spec).unwrap();
        for &w in &net.v1_mt.weights {
            assert_eq!(w, spec.projections.g_v1_mt as f32);
        }
        for &w in &net.mt_lip.weights {
            assert_eq!(w, spec.projections.g_mt_lip as f32);
        }
        // Every pair is connected at fraction 1.
        assert_eq!(
            net.mt_lip.n_edges(),
            2 * spec.sizes.mt_l * spec.sizes.lip_a
        );
        // LIP recurrent weights take exactly the Hebb-scaled means.
        let n_a = spec.sizes.lip_a;
        let n_e = 2 * n_a;
        let row = n_e + spec.sizes.lip_i;
        let strong = (spec.projections.hebb_strong * spec.projections.g_lip_ee_ampa) as f32;
        let weak = (spec.projections.hebb_weak * spec.projections.g_lip_ee_ampa) as f32;
        assert_eq!(net.w_lip_ampa[0 * row + 1], strong);
        assert_eq!(net.w_lip_ampa[0 * row + n_a], weak);
        assert_eq!(net.w_lip_ampa[0 * row + 0], 0.0); // autapse
    }

    #[test]
    fn lip_weight_distribution_matches_truncated_normal() {
        // Moment check against the truncated N(1, 0.5) factor law:
        // phi = pdf at the cut z = -2, Z = P(f > 0) = Phi(2),
        // E[f] = 1 + 0.5 * phi/Z, Var[f] = 0.25 (1 - 2 phi/Z - (phi/Z)^2).
        let net = build_network(&NetworkSpec::default()).unwrap();
        let n_a = net.spec.sizes.lip_a;
        let n_e = 2 * n_a;
        let row = n_e + net.spec.sizes.lip_i;
        let g = net.spec.projections.g_lip_ee_ampa;
        let mut strong: Vec<f64> = Vec::new();
        for src in 0..n_a {
            for dst in 0..n_a {
                let w = net.w_lip_ampa[src * row + dst];
                if w > 0.0 {
                    strong.push(w as f64 / (g * net.spec.projections.hebb_strong));
                }
            }
        }
        let n = strong.len() as f64;
        let mean = strong.iter().sum::<f64>() / n;
        let var = strong.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>() / n;
        // Truncating N(1, 0.5) at 0 cuts z = -2 standard units below the
        // mean: E = mu + sigma * lambda, Var = sigma^2 (1 - z*lambda - lambda^2)
        // with lambda = phi(2)/Phi(2) evaluated for the lower cut.
        let z = 2.0f64;
        let phi = (-z * z / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let cap_z = 0.977_249_868_051_820_8; // Phi(2)
        let lambda = phi / cap_z;
        let expected_mean = 1.0 + 0.5 * lambda;
        let expected_var = 0.25 * (1.0 - z * lambda - lambda * lambda);
        assert!(
            (mean - expected_mean).abs() < 0.01,
            "mean factor {mean} vs {expected_mean}"
        );
        assert!(
            (var - expected_var).abs() < 0.01,
            "factor variance {var} vs {expected_var}"
        );
        // Truncation removes about 2.3% of connections.
        let removed = 1.0 - n / ((n_a * (n_a - 1)) as f64);
        assert!((removed - 0.0228).abs() < 0.01, "removed fraction {removed}");
    }

    #[test]
    fn no_nonpositive_weights_anywhere() {
        let net = build_network(&small_spec()).unwrap();
        assert!(net.lgn_v1.weights.iter().all(|&w| w > 0.0));
        assert!(net.v1_mt.weights.iter().all(|&w| w > 0.0));
        assert!(net.mt_lip.weights.iter().all(|&w| w > 0.0));
        assert!(net.w_lip_ampa.iter().all(|&w| w >= 0.0));
        assert!(net.w_lip_nmda.iter().all(|&w| w >= 0.0));
        assert!(net.w_gaba.iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn conductance_multiplier_rescales_same_draws() {
        // Scaling the V1->MT mean keeps edge structure identical and
        // multiplies each weight.
        let spec = small_spec();
        let a = build_network(&spec).unwrap();
        let mut spec2 = spec.clone();
        spec2.projections.g_v1_mt *= 2.0;
        let b = build_network(&spec2).unwrap();
        assert_eq!(a.v1_mt.targets, b.v1_mt.targets);
        assert_eq!(a.v1_mt.offsets, b.v1_mt.offsets);
        for (x, y) in a.v1_mt.weights.iter().zip(&b.v1_mt.weights) {
            assert!((y / x - 2.0).abs() < 1e-5);
        }
        // Other projections untouched.
        assert_eq!(a.mt_lip, b.mt_lip);
        assert_eq!(a.w_lip_ampa, b.w_lip_ampa);
    }

    #[test]
    fn fraction_sweep_shares_surviving_edge_weights() {
        let mut spec = small_spec();
        spec.projections.mt_lip_fraction = 0.3;
        let sparse = build_network(&spec).unwrap();
        spec.projections.mt_lip_fraction = 0.8;
        let dense = build_network(&spec).unwrap();
        assert!(dense.mt_lip.n_edges() > sparse.mt_lip.n_edges());
        // Every sparse edge appears in the dense network with the same
        // weight.
        let n_src = 2 * spec.sizes.mt_l;
        for src in 0..n_src {
            let dense_edges: std::collections::HashMap<u32, f32> =
                dense.mt_lip.edges_of(src).collect();
            for (t, w) in sparse.mt_lip.edges_of(src) {
                assert_eq!(dense_edges.get(&t), Some(&w));
            }
        }
    }
}
