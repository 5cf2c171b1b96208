use dare_core::matrix::HermitianMatrix;
use dare_core::problems::example2;
use dare_core::riccati::DareProblem;
use nalgebra::Complex;

fn variant(signs: [f64; 3]) -> DareProblem {
    let printed = example2();
    let mut g = printed.g().matrix().clone();
    let ranges: [(usize, usize); 3] = [(0, 2), (2, 3), (5, 2)];
    for (bi, (start, len)) in ranges.iter().enumerate() {
        for i in *start..(*start + *len) {
            for j in *start..(*start + *len) {
                g[(i, j)] *= Complex::new(signs[bi], 0.0);
            }
        }
    }
    DareProblem::new(
        printed.a().clone(),
        HermitianMatrix::try_from_exact(g).unwrap(),
        printed.h().clone(),
    )
    .unwrap()
}

fn main() {
    for (name, p) in [
        ("printed (+,+,+)", variant([1.0, 1.0, 1.0])),
        ("mixed (+,+,-)", variant([1.0, 1.0, -1.0])),
    ] {
        // iterate far, then look for near-periodicity
        let mut x = p.h().clone();
        let mut orbit: Vec<HermitianMatrix> = Vec::new();
        let mut ok = true;
        for _ in 0..3000 {
            match p.apply(&x) {
                Ok(next) => {
                    orbit.push(x.clone());
                    x = next;
                }
                Err(e) => {
                    println!("{name}: iteration error {e}");
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        let base = 2500usize;
        let xb = &orbit[base];
        let mut best = (0usize, f64::INFINITY);
        for period in 1..=200usize {
            let d = (orbit[base + period].matrix() - xb.matrix()).norm() / xb.norm_fro().max(1.0);
            if d < best.1 {
                best = (period, d);
            }
        }
        println!(
            "{name}: best near-period p={} rel_dist={:.3e}; dist at p=1..6: {:?}",
            best.0,
            best.1,
            (1..=6)
                .map(|q| format!(
                    "{:.2e}",
                    (orbit[base + q].matrix() - xb.matrix()).norm() / xb.norm_fro().max(1.0)
                ))
                .collect::<Vec<_>>()
        );
    }
}
