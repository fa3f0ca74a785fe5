// TEMPORARY probe: cover search restricted to the degenerate corner box.
use geodesic_crossings::comparison::*;
use geodesic_crossings::gauss_code::enumerate_words;
use geodesic_crossings::gb_system::build_gb_system;
use geodesic_crossings::planar_map::{all_realizations, face_vector};
use geodesic_crossings::ratlp::Rat;

fn rat(p: i64, q: i64) -> Rat {
    Rat::new(p.into(), q.into())
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
    let cfg = SearchConfig::default();
    let h: i64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(64);
    let xbox = vec![
        (rat(h - 1, h), rat(1, 1)),
        (rat(0, 1), rat(1, h)),
        (rat(h / 2 - 1, h), rat(h / 2 + 1, h)),
    ];
    let t0 = std::time::Instant::now();
    match debug_cover_box(&d, &sys, &cfg, &xbox) {
        Some(_) => println!("corner box covered in {:?}", t0.elapsed()),
        None => println!("corner box NOT covered ({:?})", t0.elapsed()),
    }
}
