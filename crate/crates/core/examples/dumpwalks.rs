// TEMPORARY probe: dump all candidate region walks for configuration 6.
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
    println!("variables: {:?}", sys.variables);
    for (fi, fc) in sys.face_curvatures.iter().enumerate() {
        println!("omega_{}: {:?}", fi, fc);
    }
    for (i, (rref, walk)) in candidate_walks(&d).iter().enumerate() {
        println!("-- region {} = {:?}", i, rref);
        println!("   sides (edge id, dir): {:?}", walk.sides);
        for (k, f) in walk.corner_forms.iter().enumerate() {
            println!("   corner {}: {:?}", k, f);
        }
    }
}
