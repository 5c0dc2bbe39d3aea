use blockperm::perm::{CyclePattern, Perm};
use blockperm::text::parse_cycles;

fn main() {
    // repro 1: synth_long on {13,1,...} at n=8
    let pat = CyclePattern::from_pairs(&[(13, 1), (1, 256 - 13)]);
    match blockperm::even::synth_long_cycle_even(&pat, 1, 2, 8) {
        Ok((pi, tau)) => {
            println!("ok: parities {:?} {:?}", pi.concurrent_parity(1), tau.concurrent_parity(2));
        }
        Err(e) => println!("ERR: {e}"),
    }
    // repro 2: single seven-cycle at n=8
    let sigma = parse_cycles(8, "(00000000,00000001,00000010,00000011,00000100,00000101,00000110)").unwrap();
    match blockperm::even::eliminate_short_cycles_even(&sigma, 1) {
        Ok((pi, r)) => {
            let out = sigma.compose(&pi);
            println!("ok rounds={r} pattern={}", out.cycle_pattern());
        }
        Err(e) => println!("ERR: {e}"),
    }
}
