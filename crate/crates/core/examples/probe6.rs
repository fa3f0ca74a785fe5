// TEMPORARY probe: pointwise single-direction existence for configuration 6
// region DeletedEdge(5,0) with x-dependent cones (conservative sector bounds).
use std::f64::consts::PI;

fn max_cos(lo: f64, hi: f64, rho: f64) -> f64 {
    let tau = 2.0 * PI;
    if hi - lo >= tau {
        return 1.0;
    }
    let mut d = (rho - lo) % tau;
    if d < 0.0 {
        d += tau;
    }
    if d <= hi - lo {
        1.0
    } else {
        let gap = (d - (hi - lo)).min(tau - d);
        gap.cos()
    }
}

fn main() {
    // corner forms [x1, x2, x3, 1, 1-x2, 1-x2, 1]
    // groups [[0],[1,6],[2,4],[3],[5]]
    let groups: Vec<Vec<usize>> = vec![vec![0], vec![1, 6], vec![2, 4], vec![3], vec![5]];
    let n = 60usize;
    let mut worst = f64::NEG_INFINITY;
    let mut worst_x = [0.0; 3];
    let mut count = 0usize;
    for i1 in 1..n {
        for i2 in 1..n {
            for i3 in 1..n {
                let x1 = i1 as f64 / n as f64;
                let x2 = i2 as f64 / n as f64;
                let x3 = i3 as f64 / n as f64;
                let w0 = 2.0 - x1 - 2.0 * x2 - x3;
                let w1 = -3.0 + 2.0 * x1 + x2 + 2.0 * x3;
                if w0 <= 0.0 || w1 <= 0.0 {
                    continue;
                }
                count += 1;
                let l = [1.0 - x1, 1.0 - x2, 1.0 - x3, 0.0, x2, x2, 0.0];
                let s: f64 = 2.0 - l.iter().sum::<f64>();
                let mut p = [0.0f64; 7];
                for k in 1..7 {
                    p[k] = p[k - 1] + l[k - 1];
                }
                let cones: Vec<(f64, f64)> =
                    (0..7).map(|k| (p[k] * PI, (p[k] + s) * PI)).collect();
                // best over rho of worst group bound
                let mut best = f64::INFINITY;
                for r in 0..720 {
                    let rho = r as f64 * tau_step();
                    let m = groups
                        .iter()
                        .map(|g| {
                            g.iter()
                                .map(|&i| max_cos(cones[i].0, cones[i].1, rho))
                                .sum::<f64>()
                        })
                        .fold(f64::NEG_INFINITY, f64::max);
                    if m < best {
                        best = m;
                    }
                }
                if best > worst {
                    worst = best;
                    worst_x = [x1, x2, x3];
                }
            }
        }
    }
    println!("admissible samples: {count}");
    println!("worst pointwise best-margin: {worst:.6} at x = {worst_x:?}");
}

fn tau_step() -> f64 {
    2.0 * PI / 720.0
}
