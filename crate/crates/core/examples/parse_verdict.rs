//! Read verdicts out of free-form generations.
//!
//! cargo run --example parse_verdict

use zefav::prompts::parse_verdict;

fn main() {
    let generations = [
        "Eiffel was born in Dijon. ###The answer is: True",
        "First guess: the answer is true. On reflection the answer is FALSE.",
        "Stoker was born in Dublin, so the claim is false.",
        "It could be true or false.",
        "",
    ];
    for g in generations {
        let v = parse_verdict(g);
        println!("{:<5} {:<9} marker={:<5} {g:?}", v.label, format!("{:?}", v.parse_status), v.marker_found);
    }
}
