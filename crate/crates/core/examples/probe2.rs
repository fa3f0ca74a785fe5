use geodesic_crossings::comparison::{candidate_walks, side_groups};
use geodesic_crossings::gauss_code::enumerate_words;
use geodesic_crossings::gb_system::build_gb_system;
use geodesic_crossings::planar_map::{all_realizations, face_vector};
use num::ToPrimitive;

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
    let x = [1.0f64, 0.0, 0.5];
    for (i, (region, walk)) in candidate_walks(&d).iter().enumerate() {
        if walk.sides.is_empty() { continue; }
        let forms: Vec<String> = walk.corner_forms.iter().map(|f| {
            let mut s = format!("{}", f.const_coeff);
            for (v, c) in &f.var_coeffs { s += &format!("{:+}x{v}", c); }
            s
        }).collect();
        let vals: Vec<f64> = walk.corner_forms.iter().map(|f| {
            let mut v = f.const_coeff.to_f64().unwrap();
            for (var, c) in &f.var_coeffs {
                let idx = sys.variables.binary_search(var).unwrap();
                v += c.to_f64().unwrap() * x[idx];
            }
            v
        }).collect();
        let l: Vec<f64> = vals.iter().map(|&t| (1.0 - t).max(0.0)).collect();
        let s = 2.0 - l.iter().sum::<f64>();
        let p: Vec<f64> = std::iter::once(0.0).chain(l.iter().scan(0.0, |a, &v| { *a += v; Some(*a) })).take(l.len()).collect();
        println!("region {i} {:?} sides {:?} groups {:?}", region, walk.sides, side_groups(&walk.sides));
        println!("  forms {:?}", forms);
        println!("  theta@x* {:?} l {:?} S {s:.3}", vals.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>(), l.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>());
        println!("  sectors {:?}", p.iter().map(|pi| format!("[{:.3},{:.3}]", pi, pi + s)).collect::<Vec<_>>());
    }
}
