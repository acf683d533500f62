//! Brute-force search for the starvation-ring fixture. Prints the first
//! placement that satisfies the behavioral contract, in fixture format,
//! ready to be frozen into `fixtures/starvation_ring.txt`.

fn main() {
    match mapf_core::scenario::search_starvation_ring() {
        Some(outcome) => println!("{outcome}"),
        None => {
            eprintln!("no candidate satisfied the contract");
            std::process::exit(1);
        }
    }
}
