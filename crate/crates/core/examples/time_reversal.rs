//! Observational vs interventionist descriptions of an invertible wiring and
//! its time reverse.

use causalkit::causal::detect::{biorder_of, detect_causal_order};
use causalkit::osis::{behavior_of_is, causal_reversibility_check, identity_is, os_uniform, random_bijective_chain, reverse_is};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> causalkit::Result<()> {
    let id = identity_is(2);
    let os = os_uniform(&id)?;
    println!("error-free channel: p(x, y) = {:?}", os.table);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let d = random_bijective_chain(4, 1, &mut rng)?;
    let r = reverse_is(&d)?;
    let names = |d: &causalkit::osis::ISDescription| d.operations().iter().map(|o| o.name.clone()).collect::<Vec<_>>().join(" ");
    println!("forward operations {}  reversed {}", names(&d), names(&r));
    println!("joint distributions differ by {:.1e}", os_uniform(&d)?.max_abs_diff(&os_uniform(&r)?)?);
    println!("reversibility check: {}", causal_reversibility_check(&d, 1e-9)?);

    let labs: Vec<String> = ["A", "B", "C", "D"].map(String::from).to_vec();
    let fwd = detect_causal_order(&behavior_of_is(&d)?, &labs, 1e-9)?;
    let back = detect_causal_order(&behavior_of_is(&r)?.reordered(&labs)?, &labs, 1e-9)?;
    println!("forward order {}  reversed order {}", fwd.compatible_orders[0], back.compatible_orders[0]);
    println!("bi-orders equal: {}", biorder_of(&fwd)? == biorder_of(&back)?);
    Ok(())
}
