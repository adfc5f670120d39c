//! A causal game whose bound is beaten by a process with no definite order.

use causalkit::causal::detect::ic_behavior;
use causalkit::causal::order::PartialOrder;
use causalkit::games::{best_game_value, causal_bound, game_value, gyni_game, ocb_behavior, ocb_game, ocb_process};
use causalkit::process::{random_causal_process, validate_process, Lab};

fn main() -> causalkit::Result<()> {
    let game = ocb_game();
    println!("game `{}`: {}", game.name, game.source);
    let bound = causal_bound(&game)?;
    println!("causal bound: {bound}");
    println!("process valid: {}", validate_process(&ocb_process(), 32, 1e-9).valid());
    let value = game_value(&ocb_behavior(), &game)?;
    println!("value with the standard strategy: {value:.6}  ((2 + sqrt 2) / 4 = {:.6})", (2.0 + 2f64.sqrt()) / 4.0);
    println!("gyni bound {} (sanity)", causal_bound(&gyni_game())?);

    let labs = vec![Lab::qubit("A"), Lab::qubit("B")];
    let mut best: f64 = 0.0;
    for seed in 0..5 {
        let names = if seed % 2 == 0 { ["A", "B"] } else { ["B", "A"] };
        let p = random_causal_process(seed, &PartialOrder::chain(names.map(String::from).to_vec()), &labs)?;
        best = best.max(best_game_value(&ic_behavior(&p)?, &game)?);
    }
    println!("best value over 5 random ordered processes: {best:.6} (<= {bound})");
    Ok(())
}
