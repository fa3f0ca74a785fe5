// TEMPORARY probe: per-region point refutability along x(e) = (1-e, 3e, 1/2).
use geodesic_crossings::comparison::*;
use num::ToPrimitive;
use geodesic_crossings::gauss_code::enumerate_words;
use geodesic_crossings::gb_system::build_gb_system;
use geodesic_crossings::planar_map::{all_realizations, face_vector};

fn form_f64(f: &geodesic_crossings::gb_system::AngleForm, x: &[f64], vars: &[u32]) -> f64 {
    let mut v = f.const_coeff.to_f64().unwrap();
    for (var, c) in &f.var_coeffs {
        let idx = vars.iter().position(|w| w == var).unwrap();
        v += c.to_f64().unwrap() * x[idx];
    }
    v
}

// Closed-form max of cos(pi*(theta-rho)) over theta in [lo,hi], plus an
// attaining theta.
fn arc_max(lo: f64, hi: f64, rho: f64) -> (f64, f64) {
    let pi = std::f64::consts::PI;
    // peak at theta = rho (mod 2) inside [lo, hi]?
    let k = ((lo - rho) / 2.0).ceil();
    let peak = rho + 2.0 * k;
    if peak <= hi + 1e-15 {
        return (1.0, peak.clamp(lo, hi));
    }
    let vlo = (pi * (lo - rho)).cos();
    let vhi = (pi * (hi - rho)).cos();
    if vlo >= vhi { (vlo, lo) } else { (vhi, hi) }
}

// max over chain polytope of sum_{i in g} cos(pi*(theta_i - rho)),
// theta_i = p[i] + c_{i-1} (c_{-1}=0), 0<=c_1<=...<=c_{k-1}<=slack.
fn group_max(p: &[f64], slack: f64, g: &[usize], rho: f64) -> f64 {
    let pi = std::f64::consts::PI;
    match g.len() {
        1 => {
            let i = g[0];
            let (lo, hi) = if i == 0 { (0.0, 0.0) } else { (p[i], p[i] + slack) };
            arc_max(lo, hi, rho).0
        }
        2 => {
            let (i, j) = (g[0].min(g[1]), g[0].max(g[1]));
            let (ilo, ihi) = if i == 0 { (0.0, 0.0) } else { (0.0, slack) };
            let (v1, s1) = arc_max(p[i] + ilo, p[i] + ihi, rho);
            let (v2, t2) = arc_max(p[j], p[j] + slack, rho);
            // offsets of the attaining points
            let s_off = s1 - p[i];
            let t_off = t2 - p[j];
            if s_off <= t_off + 1e-12 {
                return v1 + v2;
            }
            // monotone constraint binds: s = t on [max(ilo,0), slack]
            // f(u)+g(u) = 2 cos(pi*(p_j-p_i)/2) * cos(pi*(mid + u - rho))
            let amp = 2.0 * (pi * (p[j] - p[i]) / 2.0).cos();
            let mid = (p[i] + p[j]) / 2.0;
            let (lo, hi) = (ilo.max(0.0), slack);
            // maximize amp * cos(pi*(mid+u-rho)) over u in [lo, hi]
            if amp >= 0.0 {
                amp * arc_max(mid + lo, mid + hi, rho).0
            } else {
                // minimize the cosine instead: max of -cos = cos vs rho+1
                amp * -arc_max(mid + lo, mid + hi, rho + 1.0).0
            }
        }
        _ => unreachable!(),
    }
}

fn region_margin(
    sys: &geodesic_crossings::gb_system::GBSystem,
    walk: &geodesic_crossings::planar_map::BoundaryWalk,
    x: &[f64],
) -> Option<(f64, f64)> {
    let l: Vec<f64> = walk
        .corner_forms
        .iter()
        .map(|f| (1.0 - form_f64(f, x, &sys.variables)).max(0.0))
        .collect();
    let slack = 2.0 - l.iter().sum::<f64>();
    if slack < 0.0 {
        return Some((f64::NEG_INFINITY, 0.0));
    }
    let k = l.len();
    let mut p = vec![0.0f64; k];
    for i in 1..k {
        p[i] = p[i - 1] + l[i - 1];
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut seen: Vec<(u32, usize)> = Vec::new();
    for (pos, side) in walk.sides.iter().enumerate() {
        if let Some(&(_, gi)) = seen.iter().find(|(eid, _)| *eid == side.0) {
            groups[gi].push(pos);
        } else {
            seen.push((side.0, groups.len()));
            groups.push(vec![pos]);
        }
    }
    if !groups.iter().any(|g| g.len() == 2) {
        return None;
    }
    let m = 1440usize;
    let mut best = f64::INFINITY;
    let mut brho = 0.0;
    for t in 0..m {
        let rho = 2.0 * t as f64 / m as f64;
        let w = groups
            .iter()
            .map(|g| group_max(&p, slack, g, rho))
            .fold(f64::NEG_INFINITY, f64::max);
        if w < best {
            best = w;
            brho = rho;
        }
    }
    Some((best, brho))
}

fn main() {
    let mut diag = None;
    for code in enumerate_words(3, 8).unwrap() {
        for d in all_realizations(&code, 8).unwrap() {
            if face_vector(&d) == vec![1, 1, 1, 4, 5] {
                diag = Some(d);
            }
        }
    }
    let d = diag.unwrap();
    let sys = build_gb_system(&d);
    let walks = candidate_walks(&d);
    if std::env::args().nth(1).as_deref() == Some("fan") {
        let t = 1e-3;
        for d1 in [0.0f64, -1.0, -2.0] {
            for d2 in [0.0f64, 0.5, 1.0, 2.0, 3.0, 6.0] {
                for d3 in [-1.0f64, -0.5, 0.0, 0.5, 1.0] {
                    if 2.0 * d1 + d2 + 2.0 * d3 <= 1e-9 || d2 < 1e-12 && false {
                        continue;
                    }
                    let x = [1.0 + t * d1, 0.0 + t * d2, 0.5 + t * d3];
                    if x[1] < 0.0 {
                        continue;
                    }
                    let mut line = format!("d=({d1},{d2},{d3}):");
                    let mut bestm = f64::INFINITY;
                    for (ri, (_, walk)) in walks.iter().enumerate() {
                        if walk.sides.is_empty() {
                            continue;
                        }
                        if let Some((m, _)) = region_margin(&sys, walk, &x) {
                            line += &format!(" r{ri}:{:+.4}", m / t);
                            bestm = bestm.min(m);
                        }
                    }
                    let flag = if bestm < 0.0 { "" } else { "  *** UNCOVERED" };
                    println!("{line}{flag}");
                }
            }
        }
        return;
    }
    for &e in &[0.05f64, 0.01, 0.001] {
        let x = [1.0 - e, 3.0 * e, 0.5];
        println!("=== e={e}, x={x:?}");
        let omegas: Vec<f64> =
            sys.face_curvatures.iter().map(|f| form_f64(f, &x, &sys.variables)).collect();
        println!("  omegas: {omegas:?}");
        for (ri, (rref, walk)) in walks.iter().enumerate() {
            if walk.sides.is_empty() {
                continue;
            }
            let l: Vec<f64> = walk
                .corner_forms
                .iter()
                .map(|f| (1.0 - form_f64(f, &x, &sys.variables)).max(0.0))
                .collect();
            let slack = 2.0 - l.iter().sum::<f64>();
            if slack < 0.0 {
                println!("  region {ri} {rref:?}: slack {slack:.4} < 0 -> refuted trivially");
                continue;
            }
            let k = l.len();
            // corner_forms[j] sits between sides[j] and sides[j+1], so the
            // turning entering side i is l[i-1].
            let mut p = vec![0.0f64; k];
            for i in 1..k {
                p[i] = p[i - 1] + l[i - 1];
            }
            // groups by edge label
            let mut groups: Vec<Vec<usize>> = Vec::new();
            let mut seen: Vec<(u32, usize)> = Vec::new();
            for (pos, side) in walk.sides.iter().enumerate() {
                if let Some(&(_, gi)) = seen.iter().find(|(eid, _)| *eid == side.0) {
                    groups[gi].push(pos);
                } else {
                    seen.push((side.0, groups.len()));
                    groups.push(vec![pos]);
                }
            }
            let has_pair = groups.iter().any(|g| g.len() == 2);
            if !has_pair {
                continue; // faces: never refutable
            }
            // scan rho
            let m = 2880usize;
            let mut best = f64::INFINITY;
            let mut best_rho = 0.0;
            for t in 0..m {
                let rho = 2.0 * t as f64 / m as f64;
                let w = groups
                    .iter()
                    .map(|g| group_max(&p, slack, g, rho))
                    .fold(f64::NEG_INFINITY, f64::max);
                if w < best {
                    best = w;
                    best_rho = rho;
                }
            }
            println!(
                "  region {ri} {rref:?}: k={k} slack={slack:.4} best margin {best:+.5} at rho={best_rho:.3}  groups={groups:?}"
            );
        }
    }
}
// ray-fan analysis entry: cargo run --example probe3 fan
