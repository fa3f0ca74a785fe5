// TEMPORARY probe: per-candidate-region spec data and single-direction
// search results for configuration 6, under conservative and joint bounds.
use geodesic_crossings::comparison::*;
use geodesic_crossings::gauss_code::enumerate_words;
use geodesic_crossings::gb_system::build_gb_system;
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
    let cfg_cons = SearchConfig::default();
    let cfg_joint = SearchConfig { joint_bound: true, ..SearchConfig::default() };
    for (i, (rref, walk)) in candidate_walks(&d).iter().enumerate() {
        let spec = match build_polygon_spec(walk, &sys) {
            Ok(s) => s,
            Err(e) => {
                println!("region {i} {rref:?}: spec error {e}");
                continue;
            }
        };
        println!(
            "region {i} {rref:?}: k={} uppers {:?} lowers {:?} slack {} groups {:?}",
            spec.sides.len(),
            spec.uppers.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
            spec.lowers.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
            spec.slack,
            spec.groups
        );
        for (name, cfg) in [("cons", &cfg_cons)] {
            let t = std::time::Instant::now();
            let r = find_halfplane_certificate(&spec, cfg);
            let dt = t.elapsed();
            match r {
                CertSearch::Found(c) => println!(
                    "  {name}: FOUND rho={:.6} delta={:.2e} margins {:?} joint={} ({dt:?})",
                    c.rho, c.delta, c.group_margins, c.joint
                ),
                CertSearch::NotFound => println!("  {name}: not found ({dt:?})"),
                CertSearch::ImmediateForbidden => {
                    println!("  {name}: IMMEDIATE ({dt:?})")
                }
            }
        }
    }
}
