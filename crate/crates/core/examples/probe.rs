use num::Signed;
use geodesic_crossings::comparison::*;
use geodesic_crossings::gauss_code::enumerate_words;
use geodesic_crossings::gb_system::{build_gb_system, gb_feasibility};
use geodesic_crossings::planar_map::{all_realizations, face_vector};

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
    assert!(gb_feasibility(&sys).unwrap().t_star.is_positive());
    let cfg = SearchConfig::default();
    let t0 = std::time::Instant::now();
    match find_cover_certificate(&d, &sys, &cfg) {
        Some((rep, cover)) => {
            println!("cover found, rep region {rep}, in {:?}", t0.elapsed());
            let t1 = std::time::Instant::now();
            let ok = verify_cover_certificate(&d, &sys, &cover, 256);
            println!("verify: {ok} in {:?}", t1.elapsed());
        }
        None => println!("no cover ({:?})", t0.elapsed()),
    }
}
