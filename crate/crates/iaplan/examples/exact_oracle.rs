//! Query the exact influence oracle for tiny Grab A Chair instances.
//!
//! Prints the joint distribution over the next-step contest bits
//! (contest_left, contest_right) conditioned on a few local histories.

use iaplan::gac::GacConfig;
use iaplan::influence::exact_influence_gac;
use iaplan::ActionId;

fn main() {
    let cfg = GacConfig::new(3);
    let histories: Vec<(&str, Vec<(ActionId, bool)>)> = vec![
        ("empty", vec![]),
        ("L miss", vec![(ActionId(0), false)]),
        ("L miss, L miss", vec![(ActionId(0), false), (ActionId(0), false)]),
        ("L hit, R hit", vec![(ActionId(0), true), (ActionId(1), true)]),
        (
            "R miss, L hit, R miss",
            vec![(ActionId(1), false), (ActionId(0), true), (ActionId(1), false)],
        ),
    ];

    println!("{:28} {:>8} {:>8} {:>8} {:>8}", "history", "(0,0)", "(1,0)", "(0,1)", "(1,1)");
    for (label, h) in &histories {
        match exact_influence_gac(&cfg, h) {
            Ok(joint) => println!(
                "{label:28} {:8.4} {:8.4} {:8.4} {:8.4}",
                joint[0], joint[1], joint[2], joint[3]
            ),
            Err(e) => println!("{label:28} {e}"),
        }
    }
}
