// scratch: sweep CEM convergence quality
use gmedia_core::action::{ParamBounds, ScoopDumpParams};
use gmedia_core::grid::{GridSpec, HeightMap, TrayHalf};
use gmedia_core::policy::{cem_plan_fn, CemConfig};

fn main() {
    let spec = GridSpec::new(16, 16, 10.0, 8, 150.0).unwrap();
    let h = HeightMap::half_fill(spec, TrayHalf::Left, 30.0).unwrap();
    let target = [3.0, 4.0, 6.0, 11.0, -10.0, 20.0, 45.0, 11.0, 9.0];
    let bounds = ParamBounds::from_spec(&spec);
    for (n, k) in [(500usize, 12usize), (400, 8), (600, 12)] {
        let mut worst = 0.0f64;
        let mut fails = 0;
        for seed in 0..30u64 {
            let cfg = CemConfig { n_samples: n, n_elites: k, iterations: 4, seed };
            let mut r = gmedia_core::rng::rng(seed.wrapping_mul(7919).wrapping_add(13));
            let f = |_: &HeightMap, p: &ScoopDumpParams| {
                let v = p.to_array();
                let mut s = 0.0;
                for d in 0..9 {
                    let (lo, hi) = bounds.range(d);
                    let nn = (v[d] - target[d]) / (hi - lo);
                    s += nn * nn;
                }
                Ok(s)
            };
            let (best, _) = cem_plan_fn(&h, &cfg, f, &mut r).unwrap();
            let v = best.to_array();
            let mut maxe = 0.0f64;
            for d in 0..9 {
                let (lo, hi) = bounds.range(d);
                maxe = maxe.max(((v[d] - target[d]) / (hi - lo)).abs());
            }
            worst = worst.max(maxe);
            if maxe > 0.05 { fails += 1; }
        }
        println!("N={n} K={k}: worst max-dim err {worst:.4}, fails {fails}/30");
    }
}
